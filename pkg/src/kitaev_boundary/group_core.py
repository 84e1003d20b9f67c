"""Finite groups, subgroups, transversals and matched-pair data.

Group elements are integer indices with 0 the identity.  Structural tables are
exact integers; characters and matrix irreps are double-precision complex.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

ORDER_CAP = 10_000
ASSOC_CHECK_CAP = 256
TOL = 1e-9


class GroupError(ValueError):
    """Invalid group, subgroup or transversal input."""


# ---------------------------------------------------------------------------
# groups


class FiniteGroup:
    """A finite group given by its Cayley table, identity at index 0."""

    def __init__(self, cayley: Sequence[Sequence[int]] | np.ndarray, labels: Sequence[str] | None = None,
                 name: str = "", check: bool = True):
        table = np.asarray(cayley, dtype=np.int32)
        n = table.shape[0]
        if table.ndim != 2 or table.shape != (n, n) or n == 0:
            raise GroupError("Cayley table must be a non-empty square array")
        if n > ORDER_CAP:
            raise GroupError(f"group order {n} exceeds cap {ORDER_CAP}")
        if table.min() < 0 or table.max() >= n:
            raise GroupError("Cayley table entries out of range")
        self.order = n
        self.cayley = table
        self.cayley.setflags(write=False)
        self.name = name
        self.labels = tuple(labels) if labels is not None else tuple(f"g{i}" for i in range(n))
        if len(self.labels) != n:
            raise GroupError("labels length does not match order")
        if check:
            self._check()
        inv = np.argmin(table, axis=1)  # index 0 is the minimum entry iff row contains e
        self.inverse = inv.astype(np.int32)
        self.inverse.setflags(write=False)
        # plain-list copies for fast scalar access in python loops
        self.table: list[list[int]] = table.tolist()
        self.inv: list[int] = self.inverse.tolist()
        self._index = {lab: i for i, lab in enumerate(self.labels)}

    def _check(self) -> None:
        t = self.cayley
        n = self.order
        ar = np.arange(n)
        if not (np.array_equal(t[0], ar) and np.array_equal(t[:, 0], ar)):
            raise GroupError("index 0 is not a two-sided identity")
        for row in (t, t.T):
            s = np.sort(row, axis=1)
            if not np.all(s == ar):
                raise GroupError("Cayley table is not a Latin square")
        if n <= ASSOC_CHECK_CAP:
            left = t[t, :]  # [a,b,c] -> (ab)c
            right = t[:, t]  # [a,b,c] -> a(bc)
            if not np.array_equal(left, right):
                raise GroupError("Cayley table is not associative")

    # -- element helpers
    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def prod(self, *elems: int) -> int:
        out = 0
        for g in elems:
            out = self.table[out][g]
        return out

    def conj(self, h: int, g: int) -> int:
        """h g h^{-1}."""
        return self.table[self.table[h][g]][self.inv[h]]

    def index(self, label: str | int) -> int:
        if isinstance(label, (int, np.integer)):
            return int(label)
        try:
            return self._index[label]
        except KeyError:
            raise GroupError(f"unknown element label {label!r}") from None

    def label(self, g: int) -> str:
        return self.labels[g]

    def element_order(self, g: int) -> int:
        k, x = 1, g
        while x != 0:
            x = self.table[x][g]
            k += 1
        return k

    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.cayley, self.cayley.T))

    def center(self) -> list[int]:
        t = self.cayley
        return [g for g in range(self.order) if np.array_equal(t[g], t[:, g])]

    def __repr__(self) -> str:
        return f"FiniteGroup({self.name or 'anonymous'}, order={self.order})"


def group_from_elements(elements: Sequence[Hashable], mul: Callable[[Hashable, Hashable], Hashable],
                        labels: Sequence[str] | None = None, name: str = "") -> FiniteGroup:
    """Cayley table from an explicit element list; elements[0] must be the identity."""
    pos = {e: i for i, e in enumerate(elements)}
    if len(pos) != len(elements):
        raise GroupError("duplicate elements")
    n = len(elements)
    if n > ORDER_CAP:
        raise GroupError(f"group order {n} exceeds cap {ORDER_CAP}")
    table = np.empty((n, n), dtype=np.int32)
    for i, a in enumerate(elements):
        for j, b in enumerate(elements):
            try:
                table[i, j] = pos[mul(a, b)]
            except KeyError:
                raise GroupError("element set is not closed under multiplication") from None
    return FiniteGroup(table, labels, name=name)


# -- permutations (images of 0..n-1); product (pq)(i) = p(q(i))


def _perm_mul(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(p[i] for i in q)


def cycle_notation(p: Sequence[int]) -> str:
    """1-based cycle notation of a 0-based image tuple; identity is 'e'."""
    seen = [False] * len(p)
    parts = []
    for i in range(len(p)):
        if seen[i] or p[i] == i:
            seen[i] = True
            continue
        cyc, j = [], i
        while not seen[j]:
            seen[j] = True
            cyc.append(j + 1)
            j = p[j]
        parts.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(parts) or "e"


def parse_permutation(spec: str | Sequence[int] | Sequence[Sequence[int]], degree: int | None = None) -> tuple[int, ...]:
    """Accept cycle notation '(1 2)(3 4)', a 1-based image list, or a list of 1-based cycles."""
    cycles: list[list[int]]
    if isinstance(spec, str):
        s = spec.strip()
        if s in ("", "e", "()"):
            cycles = []
        else:
            if not (s.startswith("(") and s.endswith(")")):
                raise GroupError(f"bad cycle notation {spec!r}")
            cycles = []
            for chunk in s[1:-1].split(")("):
                toks = chunk.replace(",", " ").split()
                if len(toks) == 1 and len(toks[0]) > 1 and toks[0].isdigit():
                    toks = list(toks[0])  # compact form like (123)
                cycles.append([int(t) for t in toks])
    elif len(spec) > 0 and all(isinstance(c, (list, tuple)) for c in spec):
        cycles = [list(map(int, c)) for c in spec]  # type: ignore[arg-type]
    else:
        images = [int(v) for v in spec]  # type: ignore[union-attr]
        n = len(images)
        if sorted(images) != list(range(1, n + 1)):
            raise GroupError(f"not a permutation: {spec!r}")
        p = tuple(v - 1 for v in images)
        if degree is not None and degree > n:
            p = p + tuple(range(n, degree))
        return p
    pts = [x for c in cycles for x in c]
    if any(x < 1 for x in pts) or len(set(pts)) != len(pts):
        raise GroupError(f"not a permutation: {spec!r}")
    n = max([degree or 0] + pts)
    img = list(range(n))
    for c in cycles:
        for a, b in zip(c, c[1:] + c[:1]):
            img[a - 1] = b - 1
    return tuple(img)


def group_from_permutations(generators: Iterable[str | Sequence[int]], name: str = "") -> FiniteGroup:
    """Closure of permutation generators, identity first, then breadth-first order."""
    raw = [parse_permutation(g) for g in generators]
    degree = max([len(p) for p in raw] + [1])
    gens = [p + tuple(range(len(p), degree)) for p in raw]
    ident = tuple(range(degree))
    elems = [ident]
    seen = {ident}
    queue = deque([ident])
    while queue:
        a = queue.popleft()
        for g in gens:
            b = _perm_mul(a, g)
            if b not in seen:
                seen.add(b)
                elems.append(b)
                queue.append(b)
                if len(elems) > ORDER_CAP:
                    raise GroupError(f"generated group exceeds order cap {ORDER_CAP}")
    return group_from_elements(elems, _perm_mul, [cycle_notation(p) for p in elems], name=name)


def symmetric_group(n: int) -> FiniteGroup:
    """S_n with elements in lexicographic order of image tuples (identity first)."""
    elems = list(itertools.permutations(range(n)))
    return group_from_elements(elems, _perm_mul, [cycle_notation(p) for p in elems], name=f"S{n}")


def permutation_of(G: FiniteGroup, g: int) -> tuple[int, ...]:
    """Recover the 0-based image tuple from a cycle-notation label."""
    return parse_permutation(G.labels[g])


def cyclic_group(n: int) -> FiniteGroup:
    t = [[(i + j) % n for j in range(n)] for i in range(n)]
    return FiniteGroup(t, ["e"] + [f"g^{i}" for i in range(1, n)], name=f"Z{n}")


def direct_product(A: FiniteGroup, B: FiniteGroup) -> FiniteGroup:
    elems = [(a, b) for a in range(A.order) for b in range(B.order)]
    labels = []
    for a, b in elems:
        if a == 0 and b == 0:
            labels.append("e")
        else:
            labels.append(f"({A.labels[a]},{B.labels[b]})")
    return group_from_elements(elems, lambda x, y: (A.table[x[0]][y[0]], B.table[x[1]][y[1]]), labels,
                               name=f"{A.name}x{B.name}")


def s3() -> FiniteGroup:
    """S3 ordered e,u,v,w,uv,vu with u=(12), v=(23), w=(13)."""
    perms = {lab: parse_permutation(c, 3) for lab, c in
             [("e", "e"), ("u", "(1 2)"), ("v", "(2 3)"), ("w", "(1 3)")]}
    perms["uv"] = _perm_mul(perms["u"], perms["v"])
    perms["vu"] = _perm_mul(perms["v"], perms["u"])
    order = ["e", "u", "v", "w", "uv", "vu"]
    G = group_from_elements([perms[k] for k in order], _perm_mul, order, name="S3")
    return G


def load_group(path: str | Path) -> FiniteGroup:
    data = json.loads(Path(path).read_text())
    labels = data.get("labels")
    name = data.get("name", Path(path).stem)
    if "cayley" in data:
        return FiniteGroup(data["cayley"], labels, name=name)
    if "permutation_generators" in data:
        G = group_from_permutations(data["permutation_generators"], name=name)
        if labels is not None:
            G = FiniteGroup(G.cayley, labels, name=name, check=False)
        return G
    raise GroupError("group file needs 'cayley' or 'permutation_generators'")


# ---------------------------------------------------------------------------
# subgroups


@dataclass(frozen=True)
class SubgroupData:
    parent: FiniteGroup
    members: tuple[int, ...]
    left_cosets: tuple[tuple[int, ...], ...]

    @property
    def order(self) -> int:
        return len(self.members)

    def __contains__(self, g: int) -> bool:
        return g in self._set

    @property
    def _set(self) -> frozenset[int]:
        return frozenset(self.members)

    def position(self) -> dict[int, int]:
        return {g: i for i, g in enumerate(self.members)}


def make_subgroup(G: FiniteGroup, members: Iterable[int | str]) -> SubgroupData:
    mem = sorted({G.index(m) for m in members})
    if not mem or mem[0] != 0:
        raise GroupError("subgroup must contain the identity")
    s = set(mem)
    for a in mem:
        if G.inv[a] not in s:
            raise GroupError("subset not closed under inverse")
        for b in mem:
            if G.table[a][b] not in s:
                raise GroupError("subset not closed under product")
    if G.order % len(mem):
        raise GroupError("subgroup order does not divide group order")
    cosets, done = [], set()
    for g in range(G.order):
        if g in done:
            continue
        c = tuple(sorted(G.table[g][k] for k in mem))
        done.update(c)
        cosets.append(c)
    return SubgroupData(G, tuple(mem), tuple(cosets))


def generated_subgroup(G: FiniteGroup, gens: Iterable[int | str]) -> SubgroupData:
    gens = [G.index(g) for g in gens]
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for g in gens:
                b = G.table[a][g]
                if b not in seen:
                    seen.add(b)
                    nxt.append(b)
        frontier = nxt
    return make_subgroup(G, seen)


def subgroup_as_group(K: SubgroupData) -> tuple[FiniteGroup, list[int]]:
    """K as a standalone group plus the embedding list (position -> parent index)."""
    G = K.parent
    mem = list(K.members)
    pos = {g: i for i, g in enumerate(mem)}
    table = [[pos[G.table[a][b]] for b in mem] for a in mem]
    return FiniteGroup(table, [G.labels[g] for g in mem], name=f"sub({G.name})", check=False), mem


def all_subgroups(G: FiniteGroup) -> list[SubgroupData]:
    """Every subgroup, found by closing over generating pairs (adequate for small groups)."""
    found: dict[tuple[int, ...], SubgroupData] = {}
    cyclic = {generated_subgroup(G, [g]).members for g in range(G.order)}
    frontier = set(cyclic)
    allsets = set(cyclic)
    while frontier:
        nxt = set()
        for a in frontier:
            for c in cyclic:
                if set(c) <= set(a):
                    continue
                m = generated_subgroup(G, list(a) + list(c)).members
                if m not in allsets:
                    allsets.add(m)
                    nxt.add(m)
        frontier = nxt
    for m in sorted(allsets, key=lambda m: (len(m), m)):
        found[m] = make_subgroup(G, m)
    return list(found.values())


def all_transversals(K: SubgroupData) -> list[list[int]]:
    """All choices of one representative per left coset with e chosen for K itself."""
    choices = [[0] if 0 in c else list(c) for c in K.left_cosets]
    return [list(t) for t in itertools.product(*choices)]


# ---------------------------------------------------------------------------
# transversals and matched-pair data


@dataclass(frozen=True)
class TransversalData:
    """Factorization data for G = RK.

    R is indexed by position in ``reps`` (position 0 is e) and K by position in
    ``subgroup.members`` (position 0 is e).  Tables:

    act[x][r] = x▷r, backact[x][r] = x◁r, cocycle[r][s] = τ(r,s), dot[r][s] = r·s,
    rightInv[r] = r^R, kmul[x][y] = xy in K, kinv[x] = x^{-1}.
    """

    group: FiniteGroup
    subgroup: SubgroupData
    reps: tuple[int, ...]
    act: tuple[tuple[int, ...], ...]
    backact: tuple[tuple[int, ...], ...]
    cocycle: tuple[tuple[int, ...], ...]
    dot: tuple[tuple[int, ...], ...]
    rightInv: tuple[int, ...]
    regular: bool
    kmul: tuple[tuple[int, ...], ...]
    kinv: tuple[int, ...]
    factor: tuple[tuple[int, int], ...]  # g -> (r position, x position) with g = r x
    name: str = ""

    @property
    def nR(self) -> int:
        return len(self.reps)

    @property
    def nK(self) -> int:
        return len(self.subgroup.members)

    def r_elem(self, r: int) -> int:
        return self.reps[r]

    def k_elem(self, x: int) -> int:
        return self.subgroup.members[x]

    def r_pos(self, g: int | str) -> int:
        g = self.group.index(g)
        return self.reps.index(g)

    def k_pos(self, g: int | str) -> int:
        g = self.group.index(g)
        return self.subgroup.members.index(g)

    def r_label(self, r: int) -> str:
        return self.group.labels[self.reps[r]]

    def k_label(self, x: int) -> str:
        return self.group.labels[self.subgroup.members[x]]


def build_transversal(G: FiniteGroup, K: SubgroupData, reps: Iterable[int | str], name: str = "") -> TransversalData:
    reps = tuple(G.index(r) for r in reps)
    if not reps or 0 not in reps:
        raise GroupError("transversal must contain the identity")
    reps = (0,) + tuple(r for r in reps if r != 0)
    kmem = K.members
    kpos = {g: i for i, g in enumerate(kmem)}
    if len(reps) * len(kmem) != G.order:
        raise GroupError("transversal has the wrong size")
    factor: list[tuple[int, int] | None] = [None] * G.order
    for ri, r in enumerate(reps):
        for xi, x in enumerate(kmem):
            g = G.table[r][x]
            if factor[g] is not None:
                raise GroupError("two representatives lie in the same left coset")
            factor[g] = (ri, xi)
    fac = tuple(factor)  # type: ignore[arg-type]
    nR, nK = len(reps), len(kmem)
    act = [[0] * nR for _ in range(nK)]
    back = [[0] * nR for _ in range(nK)]
    for xi, x in enumerate(kmem):
        for ri, r in enumerate(reps):
            act[xi][ri], back[xi][ri] = fac[G.table[x][r]]
    dot = [[0] * nR for _ in range(nR)]
    coc = [[0] * nR for _ in range(nR)]
    for ri, r in enumerate(reps):
        for si, s in enumerate(reps):
            dot[ri][si], coc[ri][si] = fac[G.table[r][s]]
    rinv = []
    for ri in range(nR):
        sols = [si for si in range(nR) if dot[ri][si] == 0]
        if len(sols) != 1:
            raise GroupError("right inverse is not unique")
        rinv.append(sols[0])
    kmul = tuple(tuple(kpos[G.table[a][b]] for b in kmem) for a in kmem)
    kinv = tuple(kpos[G.inv[a]] for a in kmem)
    td = TransversalData(G, K, reps, tuple(map(tuple, act)), tuple(map(tuple, back)), tuple(map(tuple, coc)),
                         tuple(map(tuple, dot)), tuple(rinv), len(set(rinv)) == nR, kmul, kinv, fac, name)
    _check_factorization(td)
    return td


def _check_factorization(td: TransversalData) -> None:
    G = td.group
    for xi, x in enumerate(td.subgroup.members):
        for ri, r in enumerate(td.reps):
            if G.table[x][r] != G.table[td.reps[td.act[xi][ri]]][td.k_elem(td.backact[xi][ri])]:
                raise GroupError("xr != (x▷r)(x◁r)")
    for ri, r in enumerate(td.reps):
        for si, s in enumerate(td.reps):
            if G.table[r][s] != G.table[td.reps[td.dot[ri][si]]][td.k_elem(td.cocycle[ri][si])]:
                raise GroupError("rs != (r·s)τ(r,s)")


def transversal_from_positions(G: FiniteGroup, K: SubgroupData) -> TransversalData:
    """Default transversal: the smallest element index in each left coset."""
    return build_transversal(G, K, [min(c) for c in K.left_cosets])


# -- verification reports


@dataclass
class IdentityResult:
    identity: str
    status: str  # "pass" | "fail" | "flag" | "skip"
    residual: float = 0.0
    witness: dict | None = None
    checked: int = 0

    def to_dict(self) -> dict:
        d = {"identity": self.identity, "status": self.status, "residual": self.residual, "checked": self.checked}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class Report:
    subject: str
    results: list[IdentityResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.status in ("pass", "flag", "skip") for r in self.results)

    @property
    def flagged(self) -> list[IdentityResult]:
        return [r for r in self.results if r.status == "flag"]

    def get(self, identity: str) -> IdentityResult:
        for r in self.results:
            if r.identity == identity:
                return r
        raise KeyError(identity)

    def add(self, res: IdentityResult) -> None:
        self.results.append(res)

    def extend(self, other: "Report") -> None:
        self.results.extend(other.results)

    def failures(self) -> list[IdentityResult]:
        return [r for r in self.results if r.status == "fail"]

    def to_dict(self) -> dict:
        return {"subject": self.subject, "ok": self.ok, "results": [r.to_dict() for r in self.results]}


class _Check:
    """Counts instances of an identity and keeps the first counterexample."""

    def __init__(self, name: str):
        self.name = name
        self.count = 0
        self.witness: dict | None = None

    def __call__(self, ok: bool, **witness) -> None:
        self.count += 1
        if not ok and self.witness is None:
            self.witness = witness

    def result(self) -> IdentityResult:
        return IdentityResult(self.name, "pass" if self.witness is None else "fail",
                              0.0 if self.witness is None else 1.0, self.witness, self.count)


def verify_matched_pair(td: TransversalData) -> Report:
    """Exhaustive check of the matched-pair identities computed from the tables alone."""
    act, back, tau, dot, kmul, kinv, RI = td.act, td.backact, td.cocycle, td.dot, td.kmul, td.kinv, td.rightInv
    nR, nK = td.nR, td.nK
    Rs, Ks = range(nR), range(nK)
    rl, kl = td.r_label, td.k_label
    G = td.group

    fac = _Check("factorization")
    for xi, x in enumerate(td.subgroup.members):
        for ri, r in enumerate(td.reps):
            fac(G.table[x][r] == G.table[td.reps[act[xi][ri]]][td.k_elem(back[xi][ri])], x=kl(xi), r=rl(ri))
    for ri, r in enumerate(td.reps):
        for si, s in enumerate(td.reps):
            fac(G.table[r][s] == G.table[td.reps[dot[ri][si]]][td.k_elem(tau[ri][si])], r=rl(ri), s=rl(si))

    unit = _Check("unit laws")
    for r in Rs:
        unit(act[0][r] == r and back[0][r] == 0, x="e", r=rl(r))
        unit(dot[0][r] == r and dot[r][0] == r and tau[0][r] == 0 and tau[r][0] == 0, r=rl(r))
    for x in Ks:
        unit(act[x][0] == 0 and back[x][0] == x, x=kl(x), r="e")

    act_assoc = _Check("(xy)▷r = x▷(y▷r)")
    back_mul = _Check("(xy)◁r = (x◁(y▷r))(y◁r)")
    for x in Ks:
        for y in Ks:
            xy = kmul[x][y]
            for r in Rs:
                act_assoc(act[xy][r] == act[x][act[y][r]], x=kl(x), y=kl(y), r=rl(r))
                back_mul(back[xy][r] == kmul[back[x][act[y][r]]][back[y][r]], x=kl(x), y=kl(y), r=rl(r))

    lax = _Check("x▷(r·s) = (x▷r)·((x◁r)▷s)")
    rax = _Check("(x◁r)◁s = τ(x▷r,(x◁r)▷s)^{-1}(x◁(r·s))τ(r,s)")
    for x in Ks:
        for r in Rs:
            xr, xbr = act[x][r], back[x][r]
            for s in Rs:
                lax(act[x][dot[r][s]] == dot[xr][act[xbr][s]], x=kl(x), r=rl(r), s=rl(s))
                rhs = kmul[kmul[kinv[tau[xr][act[xbr][s]]]][back[x][dot[r][s]]]][tau[r][s]]
                rax(back[xbr][s] == rhs, x=kl(x), r=rl(r), s=rl(s))

    tax = _Check("τ(r,s·t)τ(s,t) = τ(r·s,τ(r,s)▷t)(τ(r,s)◁t)")
    dassoc = _Check("r·(s·t) = (r·s)·(τ(r,s)▷t)")
    for r in Rs:
        for s in Rs:
            rs, trs = dot[r][s], tau[r][s]
            for t in Rs:
                st = dot[s][t]
                lhs = kmul[tau[r][st]][tau[s][t]]
                rhs = kmul[tau[rs][act[trs][t]]][back[trs][t]]
                tax(lhs == rhs, r=rl(r), s=rl(s), t=rl(t))
                dassoc(dot[r][st] == dot[rs][act[trs][t]], r=rl(r), s=rl(s), t=rl(t))

    rinv = _Check("r·r^R = e")
    for r in Rs:
        rinv(dot[r][RI[r]] == 0, r=rl(r))
    reg = _Check("regular ⟺ ( )^R bijective")
    reg(td.regular == (len(set(RI)) == nR), regular=td.regular)

    l1 = _Check("(x◁r)^{-1} = x^{-1}◁(x▷r)")
    l2 = _Check("(x▷r)^R = (x◁r)▷r^R")
    for x in Ks:
        for r in Rs:
            l1(kinv[back[x][r]] == back[kinv[x]][act[x][r]], x=kl(x), r=rl(r))
            l2(RI[act[x][r]] == act[back[x][r]][RI[r]], x=kl(x), r=rl(r))
    l3 = _Check("τ(r,r^R)^{-1}◁r = τ(r^R,r^RR)^{-1}")
    l4 = _Check("τ(r,r^R)^{-1}▷r = r^RR")
    for r in Rs:
        rr = RI[r]
        ti = kinv[tau[r][rr]]
        l3(back[ti][r] == kinv[tau[rr][RI[rr]]], r=rl(r))
        l4(act[ti][r] == RI[rr], r=rl(r))

    rep = Report(f"matched pair {td.name or ''}".strip())
    for c in (fac, unit, act_assoc, back_mul, lax, rax, tax, dassoc, rinv, reg, l1, l2, l3, l4):
        rep.add(c.result())
    return rep


def corrupt_cocycle(td: TransversalData, r: int, s: int, x: int) -> TransversalData:
    """Copy of td with τ(r,s) overwritten (negative control for verification)."""
    coc = [list(row) for row in td.cocycle]
    coc[r][s] = x
    return replace(td, cocycle=tuple(map(tuple, coc)))


def left_divide(td: TransversalData, s: int, t: int) -> int:
    """The unique r with s·r = t, as s^R·(τ(s,s^R)^{-1}▷t) (R positions)."""
    sR = td.rightInv[s]
    r = td.dot[sR][td.act[td.kinv[td.cocycle[s][sR]]][t]]
    if td.dot[s][r] != t:
        raise AssertionError("left division postcondition failed")
    return r


# ---------------------------------------------------------------------------
# conjugacy classes and orbits


def _choice(cands: list[int], choose: str | int) -> int:
    if choose == "min":
        return min(cands)
    if choose == "max":
        return max(cands)
    rng = np.random.default_rng(int(choose))
    return int(rng.choice(sorted(cands)))


@dataclass(frozen=True)
class ConjugacyData:
    group: FiniteGroup
    classes: tuple[tuple[int, ...], ...]
    reps: tuple[int, ...]  # c0 per class
    class_of: tuple[int, ...]
    q: tuple[int, ...]  # q_c per element: c = q_c c0 q_c^{-1}
    centralizers: tuple[SubgroupData, ...]

    def zeta(self, c: int, h: int) -> int:
        """ζ_c(h) = q_{hch^{-1}}^{-1} h q_c, an element of G^{c0}."""
        G = self.group
        return G.prod(G.inv[self.q[G.conj(h, c)]], h, self.q[c])


def conjugacy_data(G: FiniteGroup, rep_choice: str | int = "min", lift_choice: str | int = "min") -> ConjugacyData:
    class_of = [-1] * G.order
    classes = []
    for g in range(G.order):
        if class_of[g] >= 0:
            continue
        cl = sorted({G.conj(h, g) for h in range(G.order)})
        for c in cl:
            class_of[c] = len(classes)
        classes.append(tuple(cl))
    reps, q, cents = [], [0] * G.order, []
    for cl in classes:
        c0 = _choice(list(cl), rep_choice)
        reps.append(c0)
        for c in cl:
            if c == c0:
                q[c] = 0
                continue
            # breadth-first in index order: smallest h (or chosen h) with h c0 h^{-1} = c
            cands = [h for h in range(G.order) if G.conj(h, c0) == c]
            q[c] = _choice(cands, lift_choice)
        cents.append(make_subgroup(G, [h for h in range(G.order) if G.table[h][c0] == G.table[c0][h]]))
    cd = ConjugacyData(G, tuple(classes), tuple(reps), tuple(class_of), tuple(q), tuple(cents))
    for ci, cl in enumerate(classes):
        cent = set(cents[ci].members)
        for c in cl:
            if G.conj(q[c], reps[ci]) != c:
                raise AssertionError("q_c conjugation identity failed")
            for h in range(G.order):
                if cd.zeta(c, h) not in cent:
                    raise AssertionError("ζ_c(h) not in centralizer")
    return cd


@dataclass(frozen=True)
class OrbitData:
    td: TransversalData
    orbits: tuple[tuple[int, ...], ...]  # R positions
    basepoints: tuple[int, ...]
    orbit_of: tuple[int, ...]
    kappa: tuple[int, ...]  # K position per R position
    stabilizers: tuple[SubgroupData, ...]  # as subgroups of G
    zeta: tuple[tuple[int, ...], ...]  # zeta[r][x] = κ_{x▷r}^{-1} x κ_r (K position)


def orbit_data(td: TransversalData, rep_choice: str | int = "min", lift_choice: str | int = "min") -> OrbitData:
    nR, nK = td.nR, td.nK
    orbit_of = [-1] * nR
    orbits = []
    # orbits discovered in order of group element index of their smallest member
    for r in sorted(range(nR), key=lambda p: td.reps[p]):
        if orbit_of[r] >= 0:
            continue
        orb = sorted({td.act[x][r] for x in range(nK)}, key=lambda p: td.reps[p])
        for s in orb:
            orbit_of[s] = len(orbits)
        orbits.append(tuple(orb))
    base, kappa, stabs = [], [0] * nR, []
    for orb in orbits:
        elems = [td.reps[p] for p in orb]
        r0 = td.reps.index(_choice(elems, rep_choice))
        base.append(r0)
        for r in orb:
            if r == r0:
                kappa[r] = 0
                continue
            cands = [td.k_elem(x) for x in range(nK) if td.act[x][r0] == r]
            kappa[r] = td.k_pos(_choice(cands, lift_choice))
        stabs.append(make_subgroup(td.group, [td.k_elem(x) for x in range(nK) if td.act[x][r0] == r0]))
    zeta = tuple(tuple(td.kmul[td.kmul[td.kinv[kappa[td.act[x][r]]]][x]][kappa[r]] for x in range(nK))
                 for r in range(nR))
    od = OrbitData(td, tuple(orbits), tuple(base), tuple(orbit_of), tuple(kappa), tuple(stabs), zeta)
    for r in range(nR):
        r0 = base[orbit_of[r]]
        for x in range(nK):
            if td.act[zeta[r][x]][r0] != r0:
                raise AssertionError("ζ_r(x) does not stabilize r0")
            for y in range(nK):
                if zeta[r][td.kmul[x][y]] != td.kmul[zeta[td.act[y][r]][x]][zeta[r][y]]:
                    raise AssertionError("ζ cocycle property failed")
    return od


# ---------------------------------------------------------------------------
# characters


@dataclass(frozen=True)
class CharacterTable:
    group: FiniteGroup
    classes: tuple[tuple[int, ...], ...]
    rows: np.ndarray  # irreps x classes, complex
    dims: tuple[int, ...]

    def chi(self, i: int, g: int) -> complex:
        return complex(self.rows[i, self.class_index[g]])

    @property
    def class_index(self) -> list[int]:
        ci = [0] * self.group.order
        for k, cl in enumerate(self.classes):
            for g in cl:
                ci[g] = k
        return ci

    def element_characters(self) -> np.ndarray:
        """rows expanded to a (irreps x |G|) array."""
        return self.rows[:, self.class_index]

    def trivial_index(self) -> int:
        return 0


def _class_structure(G: FiniteGroup, classes: Sequence[Sequence[int]]) -> np.ndarray:
    ci = [0] * G.order
    for k, cl in enumerate(classes):
        for g in cl:
            ci[g] = k
    m = len(classes)
    a = np.zeros((m, m, m))  # a[i,j,k]: number of (x in C_i, y in C_j) with xy = g_k
    for k, cl in enumerate(classes):
        gk = cl[0]
        for x in range(G.order):
            y = G.table[G.inv[x]][gk]
            a[ci[x], ci[y], k] += 1
    return a


def character_table(G: FiniteGroup, seed: int = 0, max_attempts: int = 10) -> CharacterTable:
    """Characters from a simultaneous eigenbasis of class-sum structure matrices."""
    cd_classes = []
    seen = [False] * G.order
    for g in range(G.order):
        if not seen[g]:
            cl = sorted({G.conj(h, g) for h in range(G.order)})
            for c in cl:
                seen[c] = True
            cd_classes.append(tuple(cl))
    m = len(cd_classes)
    sizes = np.array([len(c) for c in cd_classes], dtype=float)
    a = _class_structure(G, cd_classes)
    # M_i[j,k] = a[i,j,k]; central characters w satisfy M_i w = ω_i w
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        coeffs = rng.standard_normal(m)
        M = np.einsum("i,ijk->jk", coeffs, a)
        vals, vecs = np.linalg.eig(M)
        gaps = np.abs(vals[:, None] - vals[None, :]) + np.eye(m) * 1e9
        if m == 1 or gaps.min() > 1e-6:
            break
    else:
        raise RuntimeError("degenerate class-sum combination after retries")
    rows = []
    for k in range(m):
        w = vecs[:, k] / vecs[0, k]  # ω on class of e is 1
        d2 = G.order / np.sum(np.abs(w) ** 2 / sizes)
        d = np.sqrt(d2.real)
        chi = w * d / sizes
        rows.append(chi)
    rows = np.array(rows)
    rows = np.where(np.abs(rows.real) < 1e-12, 1j * rows.imag, rows)
    rows = np.where(np.abs(rows.imag) < 1e-12, rows.real + 0j, rows)
    dims = [int(round(r[0].real)) for r in rows]

    def key(i: int):
        return (dims[i], tuple((-round(z.real, 9), -round(z.imag, 9)) for z in rows[i]))

    order = sorted(range(m), key=key)
    rows = rows[order]
    dims = [dims[i] for i in order]
    ct = CharacterTable(G, tuple(cd_classes), rows, tuple(dims))
    _check_orthogonality(ct, sizes)
    return ct


def _check_orthogonality(ct: CharacterTable, sizes: np.ndarray) -> None:
    n = ct.group.order
    rows = ct.rows
    gram = (rows * sizes) @ rows.conj().T
    if np.max(np.abs(gram - n * np.eye(len(rows)))) > TOL * n:
        raise AssertionError("row orthogonality failed")
    col = rows.conj().T @ rows
    if np.max(np.abs(col - np.diag(n / sizes))) > TOL * n:
        raise AssertionError("column orthogonality failed")
    if sum(d * d for d in ct.dims) != n:
        raise AssertionError("sum of squared dimensions differs from order")


def character_inner(G: FiniteGroup, chi1: np.ndarray, chi2: np.ndarray) -> complex:
    """<chi1, chi2> over per-element arrays."""
    return complex(np.vdot(chi2, chi1) / G.order)


# ---------------------------------------------------------------------------
# explicit matrix irreps


@dataclass(frozen=True)
class MatrixIrrep:
    dim: int
    matrices: tuple[np.ndarray, ...]  # indexed by group element

    def __call__(self, g: int) -> np.ndarray:
        return self.matrices[g]

    def character(self) -> np.ndarray:
        return np.array([np.trace(m) for m in self.matrices])


SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)


def _words(G: FiniteGroup, gens: Sequence[int]) -> list[list[int]]:
    """Shortest generator words for every element (breadth-first)."""
    words: list[list[int] | None] = [None] * G.order
    words[0] = []
    frontier = [0]
    while frontier:
        nxt = []
        for a in frontier:
            for gi, g in enumerate(gens):
                b = G.table[a][g]
                if words[b] is None:
                    words[b] = words[a] + [gi]
                    nxt.append(b)
        frontier = nxt
    if any(w is None for w in words):
        raise GroupError("generators do not generate the group")
    return words  # type: ignore[return-value]


def _from_generators(G: FiniteGroup, gens: Sequence[int], images: Sequence[np.ndarray]) -> MatrixIrrep:
    d = images[0].shape[0]
    mats = []
    for w in _words(G, gens):
        m = np.eye(d, dtype=complex)
        for gi in w:
            m = m @ images[gi]
        mats.append(m)
    return MatrixIrrep(d, tuple(mats))


def _s3_generators(G: FiniteGroup) -> tuple[int, int]:
    if "u" in G.labels and "v" in G.labels:
        return G.index("u"), G.index("v")
    invol = [g for g in range(1, G.order) if G.table[g][g] == 0]
    return invol[0], invol[1]


def _numeric_irreps(G: FiniteGroup, ct: CharacterTable, seed: int) -> list[MatrixIrrep]:
    """Decompose the left regular representation using commutant eigenspaces."""
    n = G.order
    L = np.zeros((n, n, n))
    Rt = np.zeros((n, n, n))
    for g in range(n):
        for x in range(n):
            L[g, G.table[g][x], x] = 1
            Rt[g, G.table[x][G.inv[g]], x] = 1
    chis = ct.element_characters()
    rng = np.random.default_rng(seed)
    out = []
    for i, d in enumerate(ct.dims):
        P = (d / n) * np.einsum("g,gab->ab", chis[i].conj(), L)
        w, v = np.linalg.eigh((P + P.conj().T) / 2)
        B = v[:, w > 0.5]
        c = rng.standard_normal(n)
        A = np.einsum("g,gab->ab", c, Rt)
        A = B.conj().T @ (A + A.conj().T) @ B
        ev, evec = np.linalg.eigh(A)
        sub = B @ evec[:, :d]
        mats = tuple(sub.conj().T @ L[g] @ sub for g in range(n))
        out.append(MatrixIrrep(d, mats))
    return out


def _check_irreps(G: FiniteGroup, irreps: Sequence[MatrixIrrep], tol: float = TOL) -> None:
    for ir in irreps:
        for a in range(G.order):
            ma = ir.matrices[a]
            if np.max(np.abs(ma @ ma.conj().T - np.eye(ir.dim))) > tol:
                raise GroupError("irrep matrix is not unitary")
            for b in range(G.order):
                if np.max(np.abs(ma @ ir.matrices[b] - ir.matrices[G.table[a][b]])) > tol:
                    raise GroupError("matrices fail the homomorphism property")


def matrix_irreps(G: FiniteGroup, source: str | Path | None = None, allow_numeric: bool = False,
                  seed: int = 0) -> list[MatrixIrrep]:
    """Unitary matrix irreps ordered like ``character_table(G).rows``.

    Built in: abelian groups (irreps are the linear characters) and groups
    isomorphic to S3 (u ↦ σ3, v ↦ (√3σ1 − σ3)/2).  Others need a JSON file
    or ``allow_numeric``.
    """
    ct = character_table(G)
    if source is not None:
        irreps = _load_irreps(G, source)
    elif all(d == 1 for d in ct.dims):
        chis = ct.element_characters()
        irreps = [MatrixIrrep(1, tuple(np.array([[z]]) for z in row)) for row in chis]
    elif G.order == 6:
        u, v = _s3_generators(G)
        one = np.ones((1, 1), dtype=complex)
        triv = _from_generators(G, [u, v], [one, one])
        sign = _from_generators(G, [u, v], [-one, -one])
        two = _from_generators(G, [u, v], [SIGMA3, (np.sqrt(3) * SIGMA1 - SIGMA3) / 2])
        irreps = [triv, sign, two]
    elif allow_numeric:
        irreps = _numeric_irreps(G, ct, seed)
    else:
        raise GroupError(f"no built-in matrix irreps for {G!r}; supply a file")
    _check_irreps(G, irreps)
    # align with character table order
    chis = ct.element_characters()
    ordered: list[MatrixIrrep | None] = [None] * len(irreps)
    for ir in irreps:
        c = ir.character()
        hits = [i for i in range(len(chis)) if np.max(np.abs(chis[i] - c)) < 1e-6]
        if len(hits) != 1 or ordered[hits[0]] is not None:
            raise GroupError("irrep characters do not match the character table")
        ordered[hits[0]] = ir
    if any(o is None for o in ordered):
        raise GroupError("irreps do not cover the character table")
    return ordered  # type: ignore[return-value]


def _load_irreps(G: FiniteGroup, source: str | Path) -> list[MatrixIrrep]:
    data = json.loads(Path(source).read_text())
    out = []
    for entry in data["irreps"]:
        d = int(entry["dim"])
        mats: list[np.ndarray | None] = [None] * G.order
        for lab, m in entry["matrices"].items():
            flat = np.array(m, dtype=float).reshape(-1, 2)  # row-major [re, im] pairs
            if flat.shape[0] != d * d:
                raise GroupError(f"matrix for {lab!r} has the wrong size")
            mats[G.index(lab)] = (flat[:, 0] + 1j * flat[:, 1]).reshape(d, d)
        if any(m is None for m in mats):
            raise GroupError("irrep file misses some elements")
        out.append(MatrixIrrep(d, tuple(mats)))  # type: ignore[arg-type]
    return out


def dump_irreps(G: FiniteGroup, irreps: Sequence[MatrixIrrep]) -> dict:
    return {"irreps": [{"dim": ir.dim, "matrices": {G.labels[g]: [[z.real, z.imag] for z in m.ravel()]
                                                     for g, m in enumerate(ir.matrices)}} for ir in irreps]}
