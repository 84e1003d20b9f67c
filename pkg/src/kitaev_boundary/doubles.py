"""The algebras D(G) and Ξ(R,K), their central idempotents, and bulk/boundary multiplicities.

Both algebras are cross products C(F)⋊CX with basis δ_f⊗x and product
(δ_f x)(δ_g y) = δ_{f, x▷g} δ_f xy.  For D(G), F = X = G and ▷ is conjugation;
for Ξ(R,K), F = R, X = K and ▷ is the transversal action.  Elements of tensor
powers are sparse dicts keyed by flattened tuples (f1, x1, ..., fn, xn).
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import dataclass
from numbers import Number
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .group_core import (
    CharacterTable,
    ConjugacyData,
    FiniteGroup,
    OrbitData,
    SubgroupData,
    TransversalData,
    character_table,
    conjugacy_data,
    orbit_data,
    subgroup_as_group,
)

PRUNE = 1e-12
INT_TOL = 1e-6


class AlgebraError(ValueError):
    """Tag mismatch or a failed internal consistency check."""


class CrossProductAlgebra:
    """Structure tables of a cross product C(F)⋊CX."""

    def __init__(self, kind: str, nF: int, nX: int, act: Sequence[Sequence[int]], xmul: Sequence[Sequence[int]],
                 xinv: Sequence[int], f_labels: Sequence[str], x_labels: Sequence[str], source=None, name: str = ""):
        self.kind = kind
        self.nF, self.nX = nF, nX
        self.act = [list(r) for r in act]
        self.xmul = [list(r) for r in xmul]
        self.xinv = list(xinv)
        self.f_labels = tuple(f_labels)
        self.x_labels = tuple(x_labels)
        self.source = source
        self.name = name

    def __repr__(self) -> str:
        return f"CrossProductAlgebra({self.kind}:{self.name}, dim={self.nF * self.nX})"

    @property
    def dim(self) -> int:
        return self.nF * self.nX

    # -- constructors
    def zero(self, degree: int = 1) -> "AlgebraElement":
        return AlgebraElement(self, degree, {})

    def basis(self, f: int, x: int, coeff: complex = 1) -> "AlgebraElement":
        return AlgebraElement(self, 1, {(f, x): coeff})

    def delta(self, f: int) -> "AlgebraElement":
        return AlgebraElement(self, 1, {(f, 0): 1})

    def group(self, x: int) -> "AlgebraElement":
        return AlgebraElement(self, 1, {(f, x): 1 for f in range(self.nF)})

    def unit(self, degree: int = 1) -> "AlgebraElement":
        out = AlgebraElement(self, 1, {(f, 0): 1 for f in range(self.nF)})
        return out.tensor_power(degree)

    def basis_elements(self) -> list["AlgebraElement"]:
        return [self.basis(f, x) for f in range(self.nF) for x in range(self.nX)]

    def from_dict(self, d: Mapping[tuple, complex], degree: int = 1) -> "AlgebraElement":
        return AlgebraElement(self, degree, dict(d))

    def random(self, rng: np.random.Generator, terms: int = 4, degree: int = 1, integer: bool = False) -> "AlgebraElement":
        out: dict[tuple, complex] = {}
        for _ in range(terms):
            key = tuple(v for _ in range(degree) for v in (int(rng.integers(self.nF)), int(rng.integers(self.nX))))
            c = int(rng.integers(-3, 4)) if integer else complex(rng.normal(), rng.normal())
            out[key] = out.get(key, 0) + c
        return AlgebraElement(self, degree, out)

    # -- structure shared by both algebras
    def star_basis(self, f: int, x: int) -> tuple[int, int]:
        """(δ_f x)* = x^{-1}δ_f = δ_{x^{-1}▷f} x^{-1}."""
        xi = self.xinv[x]
        return self.act[xi][f], xi


def _prune(d: dict) -> dict:
    return {k: v for k, v in d.items() if abs(v) > PRUNE}


class AlgebraElement:
    """Finitely supported element of a tensor power of a cross-product algebra."""

    __slots__ = ("alg", "degree", "coeffs")

    def __init__(self, alg: CrossProductAlgebra, degree: int, coeffs: dict):
        self.alg = alg
        self.degree = degree
        self.coeffs = _prune(coeffs)

    # -- arithmetic
    def _check(self, other: "AlgebraElement") -> None:
        if not isinstance(other, AlgebraElement) or other.alg is not self.alg or other.degree != self.degree:
            raise AlgebraError("algebra tag or tensor degree mismatch")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return AlgebraElement(self.alg, self.degree, out)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-1) * other

    def __neg__(self) -> "AlgebraElement":
        return (-1) * self

    def __rmul__(self, c: Number) -> "AlgebraElement":
        if isinstance(c, AlgebraElement):
            return c.__mul__(self)
        return AlgebraElement(self.alg, self.degree, {k: c * v for k, v in self.coeffs.items()})

    def __mul__(self, other):
        if not isinstance(other, AlgebraElement):
            return other * self
        self._check(other)
        alg, n = self.alg, self.degree
        act, xmul, xinv = alg.act, alg.xmul, alg.xinv
        out: dict[tuple, complex] = defaultdict(int)
        if n == 1:
            by_f: dict[int, list] = defaultdict(list)
            for (g, y), cb in other.coeffs.items():
                by_f[g].append((y, cb))
            for (f, x), ca in self.coeffs.items():
                xm = xmul[x]
                for y, cb in by_f.get(act[xinv[x]][f], ()):
                    out[(f, xm[y])] += ca * cb
            return AlgebraElement(alg, 1, out)
        by_s: dict[tuple, list] = defaultdict(list)
        for key, cb in other.coeffs.items():
            by_s[key[0::2]].append((key[1::2], cb))
        for key, ca in self.coeffs.items():
            fs, xs = key[0::2], key[1::2]
            s = tuple(act[xinv[x]][f] for f, x in zip(fs, xs))
            hits = by_s.get(s)
            if not hits:
                continue
            for ys, cb in hits:
                nk = []
                for f, x, y in zip(fs, xs, ys):
                    nk.append(f)
                    nk.append(xmul[x][y])
                out[tuple(nk)] += ca * cb
        return AlgebraElement(alg, n, out)

    def __pow__(self, k: int) -> "AlgebraElement":
        out = self.alg.unit(self.degree)
        for _ in range(k):
            out = out * self
        return out

    def tensor(self, other: "AlgebraElement") -> "AlgebraElement":
        if other.alg is not self.alg:
            raise AlgebraError("algebra tag mismatch")
        out = {}
        for k1, v1 in self.coeffs.items():
            for k2, v2 in other.coeffs.items():
                out[k1 + k2] = v1 * v2
        return AlgebraElement(self.alg, self.degree + other.degree, out)

    def tensor_power(self, n: int) -> "AlgebraElement":
        out = self
        for _ in range(n - 1):
            out = out.tensor(self)
        return out

    def conj(self) -> "AlgebraElement":
        return AlgebraElement(self.alg, self.degree, {k: np.conj(v) for k, v in self.coeffs.items()})

    def star(self) -> "AlgebraElement":
        """Legwise * (antilinear, antimultiplicative)."""
        sb = self.alg.star_basis
        out = {}
        for key, c in self.coeffs.items():
            nk = []
            for i in range(0, len(key), 2):
                nk.extend(sb(key[i], key[i + 1]))
            out[tuple(nk)] = np.conj(c)
        return AlgebraElement(self.alg, self.degree, out)

    def map_leg(self, leg: int, image: Callable[[int, int], Iterable[tuple[tuple, complex]]], out_degree: int,
                antilinear: bool = False) -> "AlgebraElement":
        """Apply a linear map on one tensor leg; image(f, x) yields (flattened key, coeff)."""
        out: dict[tuple, complex] = defaultdict(int)
        cache: dict = {}
        i = 2 * leg
        for key, c in self.coeffs.items():
            f, x = key[i], key[i + 1]
            im = cache.get((f, x))
            if im is None:
                im = cache[(f, x)] = list(image(f, x))
            pre, post = key[:i], key[i + 2:]
            if antilinear:
                c = np.conj(c)
            for k, v in im:
                out[pre + k + post] += c * v
        return AlgebraElement(self.alg, self.degree - 1 + out_degree, out)

    def map_all(self, image: Callable[[int, int], Iterable[tuple[tuple, complex]]], antilinear: bool = False) -> "AlgebraElement":
        """Apply the same degree-preserving map to every leg."""
        out = self
        for leg in range(self.degree):
            out = out.map_leg(leg, image, 1, antilinear=antilinear and leg == 0)
        return out

    def permute(self, perm: Sequence[int]) -> "AlgebraElement":
        """New leg j is old leg perm[j]."""
        out = {}
        for key, c in self.coeffs.items():
            out[tuple(v for p in perm for v in (key[2 * p], key[2 * p + 1]))] = c
        return AlgebraElement(self.alg, self.degree, out)

    # -- comparison
    def residual(self, other: "AlgebraElement") -> float:
        self._check(other)
        d = (self - other).coeffs
        return float(max((abs(v) for v in d.values()), default=0.0))

    def close(self, other: "AlgebraElement", tol: float = 1e-9) -> bool:
        return self.residual(other) <= tol

    def __eq__(self, other) -> bool:  # exact up to pruning
        return isinstance(other, AlgebraElement) and other.alg is self.alg and other.degree == self.degree \
            and self.residual(other) <= PRUNE

    def __hash__(self):
        return id(self)

    def is_zero(self, tol: float = PRUNE) -> bool:
        return all(abs(v) <= tol for v in self.coeffs.values())

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        a = self.alg
        parts = []
        for key in sorted(self.coeffs):
            legs = ["δ_" + a.f_labels[key[i]] + "⊗" + a.x_labels[key[i + 1]] for i in range(0, len(key), 2)]
            parts.append(f"{self.coeffs[key]}·" + " ⊗ ".join(legs))
        return " + ".join(parts) or "0"

    def to_json(self) -> list[dict]:
        a = self.alg
        out = []
        for key in sorted(self.coeffs):
            c = complex(self.coeffs[key])
            out.append({"legs": [[a.f_labels[key[i]], a.x_labels[key[i + 1]]] for i in range(0, len(key), 2)],
                        "re": c.real, "im": c.imag})
        return out


# ---------------------------------------------------------------------------
# D(G)


def double_algebra(G: FiniteGroup) -> CrossProductAlgebra:
    conj = [[G.conj(h, g) for g in range(G.order)] for h in range(G.order)]
    return CrossProductAlgebra("DG", G.order, G.order, conj, G.table, G.inv, G.labels, G.labels, source=G,
                               name=G.name)


def xi_algebra(td: TransversalData) -> CrossProductAlgebra:
    return CrossProductAlgebra("XI", td.nR, td.nK, td.act, td.kmul, td.kinv,
                               [td.r_label(r) for r in range(td.nR)], [td.k_label(x) for x in range(td.nK)],
                               source=td, name=td.name)


_DG_CACHE: dict[int, CrossProductAlgebra] = {}
_XI_CACHE: dict[int, CrossProductAlgebra] = {}


def DG(G: FiniteGroup) -> CrossProductAlgebra:
    """Cached D(G) so that elements built in different places share one tag."""
    alg = _DG_CACHE.get(id(G))
    if alg is None or alg.source is not G:
        alg = _DG_CACHE[id(G)] = double_algebra(G)
    return alg


def XI(td: TransversalData) -> CrossProductAlgebra:
    alg = _XI_CACHE.get(id(td))
    if alg is None or alg.source is not td:
        alg = _XI_CACHE[id(td)] = xi_algebra(td)
    return alg


def _require(a: AlgebraElement, kind: str) -> None:
    if a.alg.kind != kind:
        raise AlgebraError(f"expected a {kind} element, got {a.alg.kind}")


def dg_mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _require(a, "DG")
    return a * b


def dg_star(a: AlgebraElement) -> AlgebraElement:
    _require(a, "DG")
    return a.star()


def dg_antipode(a: AlgebraElement) -> AlgebraElement:
    """S(δ_g h) = δ_{h^{-1}g^{-1}h} h^{-1}, legwise."""
    _require(a, "DG")
    G: FiniteGroup = a.alg.source

    def img(g, h):
        hi = G.inv[h]
        return [((G.conj(hi, G.inv[g]), hi), 1)]

    return a.map_all(img)


def dg_coproduct(a: AlgebraElement, leg: int = 0) -> AlgebraElement:
    """Δ(δ_g h) = Σ_{ab=g} δ_a h ⊗ δ_b h on one leg."""
    _require(a, "DG")
    G: FiniteGroup = a.alg.source

    def img(g, h):
        return [((x, h, G.table[G.inv[x]][g], h), 1) for x in range(G.order)]

    return a.map_leg(leg, img, 2)


def dg_counit(a: AlgebraElement, leg: int = 0) -> AlgebraElement | complex:
    _require(a, "DG")
    out = a.map_leg(leg, lambda g, h: [((), 1)] if g == 0 else [], 0)
    if out.degree == 0:
        return complex(out.coeffs.get((), 0))
    return out


def dg_rmatrix(G: FiniteGroup) -> AlgebraElement:
    """ℛ = Σ_h (δ_h⊗e)⊗(Σ_g δ_g⊗h)."""
    alg = DG(G)
    out = {}
    for h in range(G.order):
        for g in range(G.order):
            out[(h, 0, g, h)] = 1
    return AlgebraElement(alg, 2, out)


def dg_rmatrix_inverse(G: FiniteGroup) -> AlgebraElement:
    alg = DG(G)
    return AlgebraElement(alg, 2, {(h, 0, g, G.inv[h]): 1 for h in range(G.order) for g in range(G.order)})


def xi_mul(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _require(a, "XI")
    return a * b


def xi_star(a: AlgebraElement) -> AlgebraElement:
    _require(a, "XI")
    return a.star()


def xi_counit(a: AlgebraElement, leg: int = 0) -> AlgebraElement | complex:
    """ε(δ_r x) = δ_{r,e}."""
    out = a.map_leg(leg, lambda r, x: [((), 1)] if r == 0 else [], 0)
    if out.degree == 0:
        return complex(out.coeffs.get((), 0))
    return out


def xi_integral(td: TransversalData) -> AlgebraElement:
    """Λ = δ_e ⊗ (1/|K|)Σ_x x; two-sidedness is asserted on the basis."""
    alg = XI(td)
    lam = AlgebraElement(alg, 1, {(0, x): 1 / td.nK for x in range(td.nK)})
    for b in alg.basis_elements():
        eps = xi_counit(b)
        if not ((b * lam).close(eps * lam) and (lam * b).close(eps * lam)):
            raise AlgebraError("Λ is not a two-sided integral")
    if abs(xi_counit(lam) - 1) > 1e-12:
        raise AlgebraError("ε(Λ) != 1")
    return lam


# ---------------------------------------------------------------------------
# characters of subgroups


class SubgroupCharacters:
    """Character table of a subgroup, addressed by parent element indices."""

    def __init__(self, H: SubgroupData):
        self.subgroup = H
        self.group, self.embed = subgroup_as_group(H)
        self.table: CharacterTable = character_table(self.group)
        pos = {g: i for i, g in enumerate(self.embed)}
        ci = self.table.class_index
        self._col = {g: ci[pos[g]] for g in self.embed}

    @property
    def dims(self) -> tuple[int, ...]:
        return self.table.dims

    def __len__(self) -> int:
        return len(self.table.dims)

    def chi(self, i: int, g: int) -> complex:
        return complex(self.table.rows[i, self._col[g]])

    def chi_vector(self, i: int) -> dict[int, complex]:
        return {g: self.chi(i, g) for g in self.embed}


_CD_CACHE: dict[int, tuple[FiniteGroup, ConjugacyData, list[SubgroupCharacters]]] = {}
_OD_CACHE: dict[int, tuple[TransversalData, OrbitData, list[SubgroupCharacters]]] = {}


def dg_irrep_data(G: FiniteGroup) -> tuple[ConjugacyData, list[SubgroupCharacters]]:
    hit = _CD_CACHE.get(id(G))
    if hit is None or hit[0] is not G:
        cd = conjugacy_data(G)
        hit = _CD_CACHE[id(G)] = (G, cd, [SubgroupCharacters(c) for c in cd.centralizers])
    return hit[1], hit[2]


def xi_irrep_data(td: TransversalData) -> tuple[OrbitData, list[SubgroupCharacters]]:
    hit = _OD_CACHE.get(id(td))
    if hit is None or hit[0] is not td:
        od = orbit_data(td)
        hit = _OD_CACHE[id(td)] = (td, od, [SubgroupCharacters(s) for s in od.stabilizers])
    return hit[1], hit[2]


@dataclass(frozen=True, order=True)
class IrrepLabelDG:
    cls: int
    irrep: int


@dataclass(frozen=True, order=True)
class IrrepLabelXi:
    orbit: int
    irrep: int


def dg_labels(G: FiniteGroup) -> list[IrrepLabelDG]:
    """Sorted by (class representative index, irrep index)."""
    cd, chars = dg_irrep_data(G)
    order = sorted(range(len(cd.classes)), key=lambda i: cd.reps[i])
    return [IrrepLabelDG(ci, j) for ci in order for j in range(len(chars[ci]))]


def xi_labels(td: TransversalData) -> list[IrrepLabelXi]:
    """Sorted by (orbit basepoint element index, irrep index)."""
    od, chars = xi_irrep_data(td)
    order = sorted(range(len(od.orbits)), key=lambda i: td.reps[od.basepoints[i]])
    return [IrrepLabelXi(oi, j) for oi in order for j in range(len(chars[oi]))]


def dg_irrep_dim(G: FiniteGroup, a: IrrepLabelDG) -> int:
    cd, chars = dg_irrep_data(G)
    return len(cd.classes[a.cls]) * chars[a.cls].dims[a.irrep]


def xi_irrep_dim(td: TransversalData, i: IrrepLabelXi) -> int:
    od, chars = xi_irrep_data(td)
    return len(od.orbits[i.orbit]) * chars[i.orbit].dims[i.irrep]


def dg_label_name(G: FiniteGroup, a: IrrepLabelDG) -> str:
    cd, _ = dg_irrep_data(G)
    return f"C{a.cls}[{G.labels[cd.reps[a.cls]]}]:{a.irrep}"


def xi_label_name(td: TransversalData, i: IrrepLabelXi) -> str:
    od, _ = xi_irrep_data(td)
    return f"O{i.orbit}[{td.r_label(od.basepoints[i.orbit])}]:{i.irrep}"


def _round(c: complex) -> complex:
    c = complex(c)
    re = round(c.real, 12)
    im = round(c.imag, 12)
    return complex(re, im) if im else re


def dg_projector(G: FiniteGroup, a: IrrepLabelDG, check: bool = True) -> AlgebraElement:
    """P_(C,π) = (dim π/|G^{c0}|) Σ_{c∈C} Σ_{n∈G^{c0}} χ_π(n^{-1}) δ_c ⊗ q_c n q_c^{-1}."""
    cd, chars = dg_irrep_data(G)
    ch = chars[a.cls]
    cent = cd.centralizers[a.cls]
    pref = ch.dims[a.irrep] / cent.order
    out: dict[tuple, complex] = defaultdict(int)
    for c in cd.classes[a.cls]:
        q = cd.q[c]
        for n in cent.members:
            out[(c, G.prod(q, n, G.inv[q]))] += pref * ch.chi(a.irrep, G.inv[n])
    P = AlgebraElement(DG(G), 1, {k: _round(v) for k, v in out.items()})
    if check:
        _check_central_idempotent(P, selfadjoint=True)
    return P


def xi_projector(td: TransversalData, i: IrrepLabelXi, check: bool = True) -> AlgebraElement:
    """P_(O,ρ) = (dim ρ/|K^{r0}|) Σ_{r∈O} Σ_{n∈K^{r0}} χ_ρ(n^{-1}) δ_r ⊗ κ_r n κ_r^{-1}."""
    od, chars = xi_irrep_data(td)
    G = td.group
    ch = chars[i.orbit]
    stab = od.stabilizers[i.orbit]
    pref = ch.dims[i.irrep] / stab.order
    out: dict[tuple, complex] = defaultdict(int)
    for r in od.orbits[i.orbit]:
        k = td.k_elem(od.kappa[r])
        for n in stab.members:
            out[(r, td.k_pos(G.prod(k, n, G.inv[k])))] += pref * ch.chi(i.irrep, G.inv[n])
    P = AlgebraElement(XI(td), 1, {k: _round(v) for k, v in out.items()})
    if check:
        _check_central_idempotent(P, selfadjoint=True)
    return P


def _check_central_idempotent(P: AlgebraElement, selfadjoint: bool) -> None:
    if not (P * P).close(P):
        raise AlgebraError("projector is not idempotent")
    if selfadjoint and not P.star().close(P):
        raise AlgebraError("projector is not self-adjoint")
    for b in P.alg.basis_elements():
        if not (P * b).close(b * P):
            raise AlgebraError("projector is not central")


def include_xi(td: TransversalData, a: AlgebraElement) -> AlgebraElement:
    """i(δ_r x) = Σ_{y∈K} δ_{ry} ⊗ x, legwise."""
    _require(a, "XI")
    G = td.group
    alg = DG(G)
    kmem = td.subgroup.members
    cosets = [[G.table[td.reps[r]][y] for y in kmem] for r in range(td.nR)]
    out: dict[tuple, complex] = defaultdict(int)
    for key, c in a.coeffs.items():
        legs = [[(g, kmem[key[i + 1]]) for g in cosets[key[i]]] for i in range(0, len(key), 2)]
        for combo in _product(legs):
            out[tuple(v for pair in combo for v in pair)] += c
    return AlgebraElement(alg, a.degree, out)


def _product(lists):
    if not lists:
        yield ()
        return
    for head in lists[0]:
        for tail in _product(lists[1:]):
            yield (head,) + tail


def frobenius_form(a: AlgebraElement) -> complex:
    """∫ δ_g ⊗ h = δ_{h,e}, so ∫1 = |G|."""
    _require(a, "DG")
    if a.degree != 1:
        raise AlgebraError("Frobenius form is defined on D(G) itself")
    return complex(sum(c for (g, h), c in a.coeffs.items() if h == 0))


# ---------------------------------------------------------------------------
# multiplicities


def _to_int(v: complex, what: str) -> int:
    v = complex(v)
    n = round(v.real)
    if abs(v - n) >= INT_TOL:
        raise AlgebraError(f"{what} = {v} is not an integer within {INT_TOL}")
    return int(n)


def multiplicity_frobenius(td: TransversalData, i: IrrepLabelXi, a: IrrepLabelDG) -> complex:
    G = td.group
    Pi = include_xi(td, xi_projector(td, i, check=False))
    Pa = dg_projector(G, a, check=False)
    return G.order / (xi_irrep_dim(td, i) * dg_irrep_dim(G, a)) * frobenius_form(Pi * Pa)


def multiplicity_direct(td: TransversalData, i: IrrepLabelXi, a: IrrepLabelDG) -> complex:
    """Sum over r∈O, c∈C with r^{-1}c∈K of |K^{r,c}|⟨ρ̃, π̃⟩ on K^{r,c}."""
    G = td.group
    od, xchars = xi_irrep_data(td)
    cd, gchars = dg_irrep_data(G)
    K = set(td.subgroup.members)
    orbit = od.orbits[i.orbit]
    cls = cd.classes[a.cls]
    rho, pi = xchars[i.orbit], gchars[a.cls]
    total = 0j
    for rp in orbit:
        r = td.reps[rp]
        kap = td.k_elem(od.kappa[rp])
        Kr = [x for x in td.subgroup.members if td.act[td.k_pos(x)][rp] == rp]
        for c in cls:
            if G.table[G.inv[r]][c] not in K:
                continue
            q = cd.q[c]
            Krc = [m for m in Kr if G.table[m][c] == G.table[c][m]]
            # |K^{r,c}| Σ_τ n_τρ̃ n_τπ̃ = Σ_{m∈K^{r,c}} χ_ρ̃(m^{-1}) χ_π̃(m)
            s = 0j
            for m in Krc:
                mi = G.inv[m]
                s += rho.chi(i.irrep, G.prod(G.inv[kap], mi, kap)) * pi.chi(a.irrep, G.prod(G.inv[q], m, q))
            total += s
    pref = G.order / (len(orbit) * len(cls) * od.stabilizers[i.orbit].order * cd.centralizers[a.cls].order)
    return pref * total


def multiplicity(td: TransversalData, i: IrrepLabelXi, a: IrrepLabelDG) -> int:
    """n^i_a by two independent routes, cross-checked and rounded."""
    fro = multiplicity_frobenius(td, i, a)
    direct = multiplicity_direct(td, i, a)
    if abs(fro - direct) >= INT_TOL:
        raise AlgebraError(f"Frobenius route {fro} and direct route {direct} disagree")
    _to_int(direct, "direct multiplicity")
    return _to_int(fro, "Frobenius multiplicity")


@dataclass
class MultiplicityTable:
    td: TransversalData
    rows: list[IrrepLabelXi]
    cols: list[IrrepLabelDG]
    values: np.ndarray  # integers
    frobenius: np.ndarray  # raw values before rounding
    direct: np.ndarray

    @property
    def residual(self) -> float:
        return float(max(np.max(np.abs(self.frobenius - self.values)), np.max(np.abs(self.direct - self.values))))

    def row_names(self) -> list[str]:
        return [xi_label_name(self.td, i) for i in self.rows]

    def col_names(self) -> list[str]:
        return [dg_label_name(self.td.group, a) for a in self.cols]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + self.col_names())
        for name, row in zip(self.row_names(), self.values):
            w.writerow([name] + [int(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> dict:
        G = self.td.group
        od, xchars = xi_irrep_data(self.td)
        cd, gchars = dg_irrep_data(G)
        return {
            "rows": [{"name": xi_label_name(self.td, i), "orbit": [self.td.r_label(r) for r in od.orbits[i.orbit]],
                      "basepoint": self.td.r_label(od.basepoints[i.orbit]), "irrep": i.irrep,
                      "dim": xi_irrep_dim(self.td, i)} for i in self.rows],
            "cols": [{"name": dg_label_name(G, a), "class": [G.labels[c] for c in cd.classes[a.cls]],
                      "rep": G.labels[cd.reps[a.cls]], "irrep": a.irrep, "dim": dg_irrep_dim(G, a)}
                     for a in self.cols],
            "values": self.values.astype(int).tolist(),
            "residual": self.residual,
        }


def multiplicity_table(td: TransversalData) -> MultiplicityTable:
    rows, cols = xi_labels(td), dg_labels(td.group)
    fro = np.zeros((len(rows), len(cols)), dtype=complex)
    direct = np.zeros_like(fro)
    vals = np.zeros((len(rows), len(cols)), dtype=int)
    for a_i, i in enumerate(rows):
        for b_i, a in enumerate(cols):
            fro[a_i, b_i] = multiplicity_frobenius(td, i, a)
            direct[a_i, b_i] = multiplicity_direct(td, i, a)
            if abs(fro[a_i, b_i] - direct[a_i, b_i]) >= INT_TOL:
                raise AlgebraError(f"routes disagree at {i}, {a}")
            vals[a_i, b_i] = _to_int(fro[a_i, b_i], "multiplicity")
    return MultiplicityTable(td, rows, cols, vals, fro, direct)


def multiplicity_special(td: TransversalData, case: str, i: IrrepLabelXi, a: IrrepLabelDG) -> int:
    """Closed forms for the chargeon, fluxion, trivial-V and trivial-W cases."""
    G = td.group
    od, xchars = xi_irrep_data(td)
    cd, gchars = dg_irrep_data(G)
    K = td.subgroup.members
    e_orbit = od.orbit_of[0]
    if case == "trivial-Wa":
        if not (cd.classes[a.cls] == (0,) and a.irrep == 0):
            raise AlgebraError("case trivial-Wa needs the trivial D(G) irrep")
        val = 1 if (i.orbit == e_orbit and i.irrep == 0) else 0
    elif case == "trivial-Vi":
        if not (i.orbit == e_orbit and i.irrep == 0):
            raise AlgebraError("case trivial-Vi needs the trivial Ξ irrep")
        cls = cd.classes[a.cls]
        pi = gchars[a.cls]
        s = 0j
        for c in cls:
            if c not in K:
                continue
            q = cd.q[c]
            for m in K:
                if G.table[m][c] == G.table[c][m]:
                    s += pi.chi(a.irrep, G.prod(G.inv[q], m, q))
        val = _to_int(G.order / (len(cls) * len(K) * cd.centralizers[a.cls].order) * s, "trivial-Vi")
    elif case == "fluxion":
        if i.irrep != 0 or a.irrep != 0:
            raise AlgebraError("case fluxion needs trivial ρ and π")
        orbit, cls = od.orbits[i.orbit], cd.classes[a.cls]
        Kset = set(K)
        s = 0
        for rp in orbit:
            r = td.reps[rp]
            for c in cls:
                if G.table[G.inv[r]][c] in Kset:
                    s += sum(1 for m in K if td.act[td.k_pos(m)][rp] == rp and G.table[m][c] == G.table[c][m])
        val = _to_int(G.order * s / (len(orbit) * len(cls) * od.stabilizers[i.orbit].order
                                     * cd.centralizers[a.cls].order), "fluxion")
    elif case == "chargeon":
        if not (i.orbit == e_orbit and cd.classes[a.cls] == (0,)):
            raise AlgebraError("case chargeon needs O={e} and C={e}")
        rho, pi = xchars[i.orbit], gchars[a.cls]
        s = sum(np.conj(rho.chi(i.irrep, m)) * pi.chi(a.irrep, m) for m in K) / len(K)
        val = _to_int(s, "chargeon")
    else:
        raise AlgebraError(f"unknown special case {case!r}")
    full = multiplicity(td, i, a)
    if val != full:
        raise AlgebraError(f"special case {case} gives {val}, general formula gives {full}")
    return val


def restriction_decomposition(td: TransversalData, a: IrrepLabelDG) -> dict[IrrepLabelXi, int]:
    """i*(W_a) = ⊕ n^i_a V_i with the dimension identity asserted."""
    out = {i: multiplicity(td, i, a) for i in xi_labels(td)}
    out = {i: n for i, n in out.items() if n}
    if sum(n * xi_irrep_dim(td, i) for i, n in out.items()) != dg_irrep_dim(td.group, a):
        raise AlgebraError("restriction does not preserve dimension")
    return out


def boundary_projection(td: TransversalData, a: IrrepLabelDG) -> AlgebraElement:
    """Sum of P_(O,ρ) over the Ξ irreps occurring in the restriction of W_a."""
    out = XI(td).zero()
    for i in restriction_decomposition(td, a):
        out = out + xi_projector(td, i, check=False)
    return out


def table_json(table: MultiplicityTable) -> str:
    return json.dumps(table.to_json(), indent=2, sort_keys=True)
