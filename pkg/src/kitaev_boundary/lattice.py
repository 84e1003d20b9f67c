"""Sparse simulation of the Kitaev model on square lattices with smooth and rough boundaries.

Conventions (fixed throughout):

* vertices are grid points (i, j), i to the right, j downward;
* edge ('h', i, j) runs (i, j) -> (i+1, j); edge ('v', i, j) runs (i, j) -> (i, j+1);
* face (i, j) has corners (i, j), (i+1, j), (i+1, j+1), (i, j+1) listed clockwise,
  and side c joins corner c to corner c+1 (top, right, bottom, left);
* the vertex action of h at v maps an edge value x to hx when v is its tail and
  to xh^{-1} when v is its head;
* the holonomy at a site (v, p) is read clockwise from v; an edge traversed
  against its arrow contributes x^{-1}.  When the first clockwise side from v is
  missing (a grey edge), the face is read counterclockwise instead, and missing
  sides are always skipped.

A state is a pair of arrays: ``configs`` (N, E) of element indices and complex
``amps``.  Rows are kept unique and sorted, with |amp| <= 1e-12 pruned.
"""

from __future__ import annotations

import json
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .doubles import (
    AlgebraElement,
    IrrepLabelDG,
    dg_irrep_data,
    dg_labels,
    dg_label_name,
    multiplicity,
    xi_label_name,
    xi_labels,
    xi_projector,
)
from .group_core import (
    FiniteGroup,
    IdentityResult,
    Report,
    TransversalData,
    build_transversal,
    make_subgroup,
    matrix_irreps,
)

PRUNE = 1e-12
TOL = 1e-9
SUPPORT_BUDGET = 4_000_000

Vertex = tuple[int, int]
Site = tuple[Vertex, tuple[int, int]]

SIDES = ("left", "right", "top", "bottom")
KINDS = ("bulk", "smooth", "rough")
SIDE_SIGN = (1, 1, -1, -1)


class LatticeError(ValueError):
    """Invalid geometry, site or ribbon."""


class BudgetError(RuntimeError):
    """A state would exceed the configured support budget."""


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class BoundarySpec:
    """One side of the lattice; ``td`` overrides the default subgroup (smooth K=G, rough K={e})."""

    kind: str = "bulk"
    td: TransversalData | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise LatticeError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "bulk" and self.td is not None:
            raise LatticeError("a bulk side takes no transversal")


_DEFAULT_TD: dict[tuple[int, str], tuple[FiniteGroup, TransversalData]] = {}


def default_boundary(G: FiniteGroup, kind: str) -> TransversalData:
    """K=G (R={e}) for smooth sides, K={e} (R=G) for rough sides."""
    hit = _DEFAULT_TD.get((id(G), kind))
    if hit is None or hit[0] is not G:
        if kind == "smooth":
            td = build_transversal(G, make_subgroup(G, range(G.order)), [0], name="K=G")
        elif kind == "rough":
            td = build_transversal(G, make_subgroup(G, [0]), range(G.order), name="K={e}")
        else:
            raise LatticeError(f"no default transversal for {kind!r}")
        hit = _DEFAULT_TD[(id(G), kind)] = (G, td)
    return hit[1]


@dataclass(frozen=True)
class Face:
    key: tuple[int, int]
    corners: tuple[Vertex, Vertex, Vertex, Vertex]
    sides: tuple[int | None, int | None, int | None, int | None]
    kind: str  # bulk | smooth | rough
    side: str | None = None


def _corners(i: int, j: int) -> tuple[Vertex, Vertex, Vertex, Vertex]:
    return (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)


def _side_keys(i: int, j: int) -> tuple[tuple, tuple, tuple, tuple]:
    return ("h", i, j), ("v", i + 1, j), ("h", i, j + 1), ("v", i, j)


class Lattice:
    """Edges, faces, boundary data and Hamiltonian terms of one rectangular lattice."""

    def __init__(self, G: FiniteGroup, width: int, height: int, sides: Mapping[str, BoundarySpec]):
        self.group = G
        self.width, self.height = width, height
        self.sides = {s: sides.get(s, BoundarySpec()) for s in SIDES}
        self.cay = np.asarray(G.table, dtype=np.int64)
        self.inv = np.asarray(G.inv, dtype=np.int64)
        self._build()

    # -- construction
    def _side_td(self, side: str) -> TransversalData | None:
        spec = self.sides[side]
        if spec.kind == "bulk":
            return None
        return spec.td if spec.td is not None else default_boundary(self.group, spec.kind)

    def _build(self) -> None:
        W, H = self.width, self.height
        rough = {s: self.sides[s].kind == "rough" for s in SIDES}
        edges: list[tuple[str, int, int]] = []
        for j in range(H + 1):
            edges += [("h", i, j) for i in range(W)]
        for j in range(H):
            edges += [("v", i, j) for i in range(W + 1)]
        exterior: set[Vertex] = set()
        if rough["top"]:
            edges += [("v", i, -1) for i in range(W + 1)]
            exterior |= {(i, -1) for i in range(W + 1)}
        if rough["bottom"]:
            edges += [("v", i, H) for i in range(W + 1)]
            exterior |= {(i, H + 1) for i in range(W + 1)}
        if rough["left"]:
            edges += [("h", -1, j) for j in range(H + 1)]
            exterior |= {(-1, j) for j in range(H + 1)}
        if rough["right"]:
            edges += [("h", W, j) for j in range(H + 1)]
            exterior |= {(W + 1, j) for j in range(H + 1)}
        edges.sort(key=lambda k: (k[0], k[2], k[1]))
        self.edge_keys = edges
        self.edge_index = {k: n for n, k in enumerate(edges)}
        self.tails = [(i, j) for _, i, j in edges]
        self.heads = [(i + 1, j) if d == "h" else (i, j + 1) for d, i, j in edges]
        self.exterior = frozenset(exterior)
        verts = sorted(set(self.tails) | set(self.heads), key=lambda v: (v[1], v[0]))
        self.vertices = verts
        self.incident: dict[Vertex, list[tuple[int, bool]]] = {v: [] for v in verts}
        for n in range(len(edges)):
            self.incident[self.tails[n]].append((n, True))
            self.incident[self.heads[n]].append((n, False))

        faces: dict[tuple[int, int], Face] = {}

        def add(i, j, kind, side=None):
            sides = tuple(self.edge_index.get(k) for k in _side_keys(i, j))
            faces[(i, j)] = Face((i, j), _corners(i, j), sides, kind, side)

        for j in range(H):
            for i in range(W):
                add(i, j, "bulk")
        if rough["top"]:
            for i in range(W):
                add(i, -1, "rough", "top")
        if rough["bottom"]:
            for i in range(W):
                add(i, H, "rough", "bottom")
        if rough["left"]:
            for j in range(H):
                add(-1, j, "rough", "left")
        if rough["right"]:
            for j in range(H):
                add(W, j, "rough", "right")
        if self.sides["left"].kind == "smooth":
            for d, i, j in edges:
                if d == "v" and i == 0:
                    add(-1, j, "smooth", "left")
        if self.sides["right"].kind == "smooth":
            for d, i, j in edges:
                if d == "v" and i == W:
                    add(W, j, "smooth", "right")
        if self.sides["top"].kind == "smooth":
            for d, i, j in edges:
                if d == "h" and j == 0:
                    add(i, -1, "smooth", "top")
        if self.sides["bottom"].kind == "smooth":
            for d, i, j in edges:
                if d == "h" and j == H:
                    add(i, H, "smooth", "bottom")
        self.faces = dict(sorted(faces.items(), key=lambda kv: (kv[0][1], kv[0][0])))
        for f in self.faces.values():
            if all(s is None for s in f.sides):
                raise LatticeError(f"face {f.key} has no edges")

        # boundary data for vertices: intersection of smooth side subgroups; rough exterior vertices
        self.vertex_td: dict[Vertex, TransversalData] = {}
        self.vertex_K: dict[Vertex, tuple[int, ...]] = {}
        G = self.group
        full = tuple(range(G.order))
        for v in verts:
            if v in self.exterior:
                side = self._exterior_side(v)
                td = self._side_td(side)
                self.vertex_td[v] = td
                self.vertex_K[v] = td.subgroup.members
                continue
            K = set(full)
            tds = []
            for side in self._border_sides(v):
                if self.sides[side].kind == "smooth":
                    td = self._side_td(side)
                    tds.append(td)
                    K &= set(td.subgroup.members)
            self.vertex_K[v] = tuple(sorted(K))
            if len(tds) == 1:
                self.vertex_td[v] = tds[0]
        self.face_td: dict[tuple[int, int], TransversalData] = {}
        for f in self.faces.values():
            if f.kind != "bulk":
                self.face_td[f.key] = self._side_td(f.side)

    def _exterior_side(self, v: Vertex) -> str:
        i, j = v
        if j == -1:
            return "top"
        if j == self.height + 1:
            return "bottom"
        if i == -1:
            return "left"
        return "right"

    def _border_sides(self, v: Vertex) -> list[str]:
        i, j = v
        out = []
        if i == 0:
            out.append("left")
        if i == self.width:
            out.append("right")
        if j == 0:
            out.append("top")
        if j == self.height:
            out.append("bottom")
        return out

    # -- basic queries
    @property
    def n_edges(self) -> int:
        return len(self.edge_keys)

    def edge(self, key: tuple[str, int, int] | int) -> int:
        if isinstance(key, (int, np.integer)):
            return int(key)
        try:
            return self.edge_index[tuple(key)]
        except KeyError:
            raise LatticeError(f"no edge {key}") from None

    def face(self, key: tuple[int, int]) -> Face:
        try:
            return self.faces[tuple(key)]
        except KeyError:
            raise LatticeError(f"no face {key}") from None

    def check_site(self, site: Site) -> tuple[Vertex, Face]:
        v, fk = tuple(site[0]), tuple(site[1])
        f = self.face(fk)
        if v not in f.corners:
            raise LatticeError(f"{v} is not a corner of face {fk}")
        if v not in self.incident:
            raise LatticeError(f"{v} is not a lattice vertex")
        return v, f

    def traversal(self, site: Site) -> list[tuple[int, int]]:
        """(edge, ±1) pairs read from the cilium; see the module docstring for the rule."""
        v, f = self.check_site(site)
        c = f.corners.index(v)
        if f.sides[c] is not None:
            steps = [((c + i) % 4, 1) for i in range(4)]
        else:
            steps = [((c - 1 - i) % 4, -1) for i in range(4)]
        return [(f.sides[s], SIDE_SIGN[s] * d) for s, d in steps if f.sides[s] is not None]

    def site_case(self, site: Site) -> str:
        """Which boundary reading applies at a site: bulk, smooth-cw/ccw, rough-{exterior,interior}-{cw,ccw}."""
        v, f = self.check_site(site)
        c = f.corners.index(v)
        turn = "cw" if f.sides[c] is not None else "ccw"
        if f.kind == "bulk":
            return "bulk"
        if f.kind == "smooth":
            return f"smooth-{turn}"
        where = "exterior" if v in self.exterior else "interior"
        return f"rough-{where}-{turn}"

    def holonomy(self, configs: np.ndarray, site: Site) -> np.ndarray:
        out = np.zeros(len(configs), dtype=np.int64)
        for e, s in self.traversal(site):
            x = configs[:, e]
            out = self.cay[out, x if s > 0 else self.inv[x]]
        return out

    def vertex_apply(self, configs: np.ndarray, v: Vertex, h) -> np.ndarray:
        """Vertex action on a copy; ``h`` may be a scalar or a per-row array."""
        if v not in self.incident:
            raise LatticeError(f"no vertex {v}")
        out = configs.copy()
        for e, tail in self.incident[v]:
            out[:, e] = self.cay[h, out[:, e]] if tail else self.cay[out[:, e], self.inv[h]]
        return out

    # -- Hamiltonian terms
    def vertex_terms(self) -> list[tuple[Vertex, tuple[int, ...]]]:
        """(vertex, subgroup averaged over); trivial subgroups are dropped."""
        return [(v, K) for v, K in self.vertex_K.items() if len(K) > 1]

    def face_terms(self) -> list[tuple[Site, tuple[int, ...]]]:
        """(site, K) with term [holonomy ∈ K]; trivial terms (K=G) are dropped."""
        out = []
        for f in self.faces.values():
            if f.kind == "bulk":
                out.append(((f.corners[0], f.key), (0,)))
                continue
            K = self.face_td[f.key].subgroup.members
            if len(K) == self.group.order:
                continue
            real = [v for v in f.corners if v in self.incident]
            if f.kind == "rough":
                ext = [v for v in real if v in self.exterior]
                real = ext or real
            out.append(((real[0], f.key), K))
        return out

    def describe(self) -> dict:
        G = self.group
        return {
            "group": G.name,
            "width": self.width,
            "height": self.height,
            "sides": {s: {"kind": b.kind, "K": [G.labels[k] for k in self._side_td(s).subgroup.members]}
                      if b.kind != "bulk" else {"kind": "bulk"} for s, b in self.sides.items()},
            "edges": [{"key": list(k), "tail": list(t), "head": list(h)}
                      for k, t, h in zip(self.edge_keys, self.tails, self.heads)],
            "faces": [{"key": list(f.key), "kind": f.kind,
                       "sides": [None if s is None else list(self.edge_keys[s]) for s in f.sides]}
                      for f in self.faces.values()],
            "exterior": sorted(list(v) for v in self.exterior),
        }

    def __repr__(self) -> str:
        kinds = ",".join(f"{s}={b.kind}" for s, b in self.sides.items())
        return f"Lattice({self.group.name}, {self.width}x{self.height}, {kinds}, E={self.n_edges})"


def build_lattice(G: FiniteGroup, width: int, height: int,
                  sides: Mapping[str, BoundarySpec | str] | None = None) -> Lattice:
    """A width×height block of faces with per-side boundaries.

    Zero width or height is allowed so that thin patches can be built; rough
    sides add dangling edges with exterior vertices and faces missing their
    outer edge, smooth sides add one-edge exterior faces along the border.
    """
    if width < 0 or height < 0:
        raise LatticeError("width and height must be non-negative")
    spec = {}
    for s, b in (sides or {}).items():
        if s not in SIDES:
            raise LatticeError(f"unknown side {s!r}")
        spec[s] = b if isinstance(b, BoundarySpec) else BoundarySpec(b)
    lat = Lattice(G, width, height, spec)
    if lat.n_edges == 0:
        raise LatticeError("lattice has no edges")
    return lat


# ---------------------------------------------------------------------------
# states


def _keys(configs: np.ndarray, base: int) -> np.ndarray:
    E = configs.shape[1]
    if E * np.log2(max(base, 2)) < 62:
        powers = base ** np.arange(E - 1, -1, -1, dtype=np.int64)
        return configs.astype(np.int64) @ powers
    c = np.ascontiguousarray(configs.astype(np.int64))
    return c.view(np.dtype((np.void, c.dtype.itemsize * E))).ravel()


def _canonical(configs: np.ndarray, amps: np.ndarray, base: int) -> tuple[np.ndarray, np.ndarray]:
    if len(configs) == 0:
        return configs.reshape(0, configs.shape[1]), amps.reshape(0)
    keys = _keys(configs, base)
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    n = len(first)
    re = np.bincount(inverse, weights=amps.real, minlength=n)
    im = np.bincount(inverse, weights=amps.imag, minlength=n)
    out = re + 1j * im
    keep = np.abs(out) > PRUNE
    return configs[first][keep], out[keep]


class LatticeState:
    """An immutable sparse vector in the edge Hilbert space of a lattice."""

    __slots__ = ("lattice", "configs", "amps")

    def __init__(self, lattice: Lattice, configs: np.ndarray, amps: np.ndarray, canonical: bool = False):
        configs = np.asarray(configs, dtype=np.int64).reshape(-1, lattice.n_edges)
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if len(configs) != len(amps):
            raise LatticeError("configs and amplitudes differ in length")
        if not canonical:
            configs, amps = _canonical(configs, amps, lattice.group.order)
        self.lattice = lattice
        self.configs = configs
        self.amps = amps

    @classmethod
    def basis(cls, lattice: Lattice, config: Sequence[int | str] | Mapping) -> "LatticeState":
        G = lattice.group
        if isinstance(config, Mapping):
            row = [0] * lattice.n_edges
            for k, g in config.items():
                row[lattice.edge(k)] = G.index(g)
        else:
            if len(config) != lattice.n_edges:
                raise LatticeError("configuration length differs from the edge count")
            row = [G.index(g) for g in config]
        return cls(lattice, np.array([row]), np.ones(1))

    @classmethod
    def identity_config(cls, lattice: Lattice) -> "LatticeState":
        return cls(lattice, np.zeros((1, lattice.n_edges), dtype=np.int64), np.ones(1), canonical=True)

    @classmethod
    def zero(cls, lattice: Lattice) -> "LatticeState":
        return cls(lattice, np.zeros((0, lattice.n_edges), dtype=np.int64), np.zeros(0), canonical=True)

    @classmethod
    def random(cls, lattice: Lattice, rng: np.random.Generator, n: int = 32) -> "LatticeState":
        configs = rng.integers(0, lattice.group.order, size=(n, lattice.n_edges))
        amps = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return cls(lattice, configs, amps)

    def _new(self, configs: np.ndarray, amps: np.ndarray) -> "LatticeState":
        return LatticeState(self.lattice, configs, amps)

    def __len__(self) -> int:
        return len(self.amps)

    def _same(self, other: "LatticeState") -> None:
        if other.lattice is not self.lattice:
            raise LatticeError("states live on different lattices")

    def __add__(self, other: "LatticeState") -> "LatticeState":
        self._same(other)
        return self._new(np.vstack([self.configs, other.configs]), np.concatenate([self.amps, other.amps]))

    def __sub__(self, other: "LatticeState") -> "LatticeState":
        return self + (-1) * other

    def __rmul__(self, c: complex) -> "LatticeState":
        return self._new(self.configs, self.amps * c)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def normalized(self) -> "LatticeState":
        n = self.norm()
        if n <= PRUNE:
            raise LatticeError("cannot normalize the zero vector")
        return LatticeState(self.lattice, self.configs, self.amps / n, canonical=True)

    def inner(self, other: "LatticeState") -> complex:
        """⟨self|other⟩."""
        self._same(other)
        base = self.lattice.group.order
        if len(self) == 0 or len(other) == 0:
            return 0j
        ka, kb = _keys(self.configs, base), _keys(other.configs, base)
        _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
        return complex(np.sum(np.conj(self.amps[ia]) * other.amps[ib]))

    def distance(self, other: "LatticeState") -> float:
        return (self - other).norm()

    def is_zero(self, tol: float = TOL) -> bool:
        return self.norm() <= tol

    def values(self, edge) -> np.ndarray:
        return self.configs[:, self.lattice.edge(edge)]

    def to_json(self) -> list[dict]:
        labels = self.lattice.group.labels
        return [{"config": [labels[g] for g in row], "re": float(a.real), "im": float(a.imag)}
                for row, a in zip(self.configs.tolist(), self.amps)]

    @classmethod
    def from_json(cls, lattice: Lattice, data: Iterable[Mapping]) -> "LatticeState":
        G = lattice.group
        rows, amps = [], []
        for rec in data:
            rows.append([G.index(g) for g in rec["config"]])
            amps.append(complex(rec["re"], rec["im"]))
        if not rows:
            return cls.zero(lattice)
        return cls(lattice, np.array(rows), np.array(amps))

    def __repr__(self) -> str:
        return f"LatticeState(terms={len(self)}, norm={self.norm():.6g})"


def state_dump(state: LatticeState) -> str:
    return json.dumps(state.to_json(), sort_keys=True)


def _check_budget(n: int, budget: int | None) -> None:
    cap = SUPPORT_BUDGET if budget is None else budget
    if n > cap:
        raise BudgetError(f"support of {n} configurations exceeds the budget {cap}")


# ---------------------------------------------------------------------------
# site actions and projectors


def vertex_action(state: LatticeState, v: Vertex, h: int) -> LatticeState:
    lat = state.lattice
    return LatticeState(lat, lat.vertex_apply(state.configs, tuple(v), int(h)), state.amps)


def face_function(state: LatticeState, site: Site, weights: Sequence[complex] | np.ndarray) -> LatticeState:
    """Action of a ∈ C(G) given by its values on G, read from the site holonomy."""
    hol = state.lattice.holonomy(state.configs, site)
    w = np.asarray(weights, dtype=np.complex128)
    return state._new(state.configs, state.amps * w[hol])


def face_action(state: LatticeState, site: Site, g: int) -> LatticeState:
    """δ_g at a site."""
    w = np.zeros(state.lattice.group.order)
    w[int(g)] = 1
    return face_function(state, site, w)


def _grouped(a: AlgebraElement) -> dict[int, dict[int, complex]]:
    out: dict[int, dict[int, complex]] = defaultdict(dict)
    for (f, x), c in a.coeffs.items():
        out[x][f] = out[x].get(f, 0) + c
    return out


def site_action(state: LatticeState, site: Site, a: AlgebraElement) -> LatticeState:
    """Representation of D(G) at a site: (δ_f x)▷ = δ_f▷ ∘ x▷."""
    if a.alg.kind != "DG" or a.degree != 1:
        raise LatticeError("site_action takes a degree-1 D(G) element")
    lat = state.lattice
    v = tuple(site[0])
    n = lat.group.order
    rows, amps = [], []
    for x, fs in _grouped(a).items():
        cfg = lat.vertex_apply(state.configs, v, x)
        w = np.zeros(n, dtype=np.complex128)
        for f, c in fs.items():
            w[f] += c
        hol = lat.holonomy(cfg, site)
        rows.append(cfg)
        amps.append(state.amps * w[hol])
    if not rows:
        return LatticeState.zero(lat)
    return state._new(np.vstack(rows), np.concatenate(amps))


def coset_index(td: TransversalData) -> np.ndarray:
    """For each g the R position r with g ∈ rK."""
    return np.array([td.factor[g][0] for g in range(td.group.order)], dtype=np.int64)


def boundary_action(state: LatticeState, site: Site, a: AlgebraElement, td: TransversalData | None = None,
                    case_tag: str | None = None) -> LatticeState:
    """Representation of Ξ(R,K) at a boundary site: δ_r▷ is [holonomy ∈ rK], x acts at the vertex."""
    lat = state.lattice
    v, f = lat.check_site(site)
    if f.kind == "bulk":
        raise LatticeError("boundary_action needs a boundary face")
    case = lat.site_case(site)
    if case_tag is not None and case_tag != case:
        raise LatticeError(f"site case is {case!r}, not {case_tag!r}")
    td = td if td is not None else lat.face_td[f.key]
    if a.alg.kind != "XI" or a.alg.source is not td or a.degree != 1:
        raise LatticeError("boundary_action takes a degree-1 element of the site's Ξ(R,K)")
    cos = coset_index(td)
    rows, amps = [], []
    for x, rs in _grouped(a).items():
        cfg = lat.vertex_apply(state.configs, v, td.k_elem(x))
        w = np.zeros(td.nR, dtype=np.complex128)
        for r, c in rs.items():
            w[r] += c
        hol = lat.holonomy(cfg, site)
        rows.append(cfg)
        amps.append(state.amps * w[cos[hol]])
    if not rows:
        return LatticeState.zero(lat)
    return state._new(np.vstack(rows), np.concatenate(amps))


def vertex_average(state: LatticeState, v: Vertex, K: Sequence[int]) -> LatticeState:
    """(1/|K|) Σ_{k∈K} k▷_v."""
    lat = state.lattice
    rows = [lat.vertex_apply(state.configs, tuple(v), k) for k in K]
    amps = [state.amps / len(K)] * len(K)
    return state._new(np.vstack(rows), np.concatenate(amps))


def face_indicator(state: LatticeState, site: Site, K: Sequence[int]) -> LatticeState:
    w = np.zeros(state.lattice.group.order)
    w[list(K)] = 1
    return face_function(state, site, w)


def projector_A(state: LatticeState, v: Vertex) -> LatticeState:
    """Vertex term: average over G in the bulk, over K on a boundary."""
    return vertex_average(state, v, state.lattice.vertex_K[tuple(v)])


def projector_B(state: LatticeState, face: tuple[int, int]) -> LatticeState:
    """Face term: [holonomy = e] in the bulk, [holonomy ∈ K] on a boundary face."""
    for site, K in state.lattice.face_terms():
        if site[1] == tuple(face):
            return face_indicator(state, site, K)
    return state


def all_terms(lattice: Lattice) -> list[tuple[str, object, tuple[int, ...]]]:
    return ([("A", v, K) for v, K in lattice.vertex_terms()]
            + [("B", site, K) for site, K in lattice.face_terms()])


def apply_term(state: LatticeState, term: tuple[str, object, tuple[int, ...]]) -> LatticeState:
    kind, where, K = term
    if kind == "A":
        return vertex_average(state, where, K)
    return face_indicator(state, where, K)


def term_name(term) -> str:
    kind, where, _ = term
    return f"{kind}{list(where) if kind == 'A' else [list(where[0]), list(where[1])]}"


def expectation(state: LatticeState, op) -> float:
    n2 = state.norm() ** 2
    if n2 <= PRUNE:
        raise LatticeError("expectation of the zero vector")
    return float(np.real(state.inner(op(state))) / n2)


def term_expectations(state: LatticeState) -> list[tuple[str, float]]:
    return [(term_name(t), expectation(state, lambda s, t=t: apply_term(s, t))) for t in all_terms(state.lattice)]


def hamiltonian_energy(state: LatticeState) -> float:
    """Σ (1 − ⟨P⟩) over all vertex, face and boundary terms."""
    return float(sum(1 - e for _, e in term_expectations(state)))


def excited_terms(state: LatticeState, tol: float = TOL) -> list[str]:
    return [n for n, e in term_expectations(state) if e < 1 - tol]


def vacuum_state(lattice: Lattice, which: str = "A", budget: int | None = None,
                 normalize: bool = True) -> LatticeState:
    """Product of all projectors applied to ⊗e (``"A"``) or ⊗Σ_g g (``"B"``)."""
    terms = all_terms(lattice)
    if which == "A":
        est = 1
        for _, _, K in [t for t in terms if t[0] == "A"]:
            est *= len(K)
        state = LatticeState.identity_config(lattice)
        for t in terms:
            if t[0] == "A" and len(state) * len(t[2]) > (budget or SUPPORT_BUDGET):
                _check_budget(len(state) * len(t[2]), budget)
            state = apply_term(state, t)
    elif which == "B":
        state = _flat_product(lattice, budget)
        for t in terms:
            state = apply_term(state, t)
    else:
        raise LatticeError("which must be 'A' or 'B'")
    if state.is_zero():
        raise LatticeError("projected vacuum is zero")
    return state.normalized() if normalize else state


def _flat_product(lattice: Lattice, budget: int | None) -> LatticeState:
    """⊗Σ_g g restricted edge by edge to configurations passing every complete face term."""
    n = lattice.group.order
    face_terms = lattice.face_terms()
    needs = [set(e for e, _ in lattice.traversal(site)) for site, _ in face_terms]
    done: set[int] = set()
    configs = np.zeros((1, lattice.n_edges), dtype=np.int64)
    pending = list(range(len(face_terms)))
    for e in range(lattice.n_edges):
        _check_budget(len(configs) * n, budget)
        configs = np.repeat(configs, n, axis=0)
        configs[:, e] = np.tile(np.arange(n), len(configs) // n)
        done.add(e)
        still = []
        for t in pending:
            if needs[t] <= done:
                site, K = face_terms[t]
                ok = np.isin(lattice.holonomy(configs, site), K)
                configs = configs[ok]
            else:
                still.append(t)
        pending = still
    return LatticeState(lattice, configs, np.ones(len(configs)))


# ---------------------------------------------------------------------------
# ribbons


@dataclass(frozen=True)
class Triangle:
    """A direct triangle reads an edge (sign -1: inverse; edge None: grey, reads e).

    A dual triangle crosses an edge at the ribbon vertex; sign +1 means the
    vertex is the edge's tail, so the value read away from the vertex is the
    stored one.
    """

    kind: str
    edge: int | None
    sign: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("direct", "dual"):
            raise LatticeError(f"unknown triangle kind {self.kind!r}")
        if self.sign not in (1, -1):
            raise LatticeError("triangle sign must be ±1")
        if self.kind == "dual" and self.edge is None:
            raise LatticeError("a dual triangle must cross a real edge")


@dataclass(frozen=True)
class Ribbon:
    triangles: tuple[Triangle, ...]
    s0: Site
    s1: Site
    sites: tuple[Site, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.triangles)

    def split(self, n: int) -> tuple["Ribbon", "Ribbon"]:
        """(first n triangles, the rest); needs the site list."""
        if not self.sites:
            raise LatticeError("ribbon carries no site list")
        a = Ribbon(self.triangles[:n], self.sites[0], self.sites[n], self.sites[:n + 1])
        b = Ribbon(self.triangles[n:], self.sites[n], self.sites[-1], self.sites[n:])
        return a, b

    def then(self, other: "Ribbon") -> "Ribbon":
        """ξ' ∘ ξ with ξ = self first."""
        if tuple(map(tuple, self.s1)) != tuple(map(tuple, other.s0)):
            raise LatticeError("ribbons do not meet")
        sites = self.sites[:-1] + other.sites if self.sites and other.sites else ()
        return Ribbon(self.triangles + other.triangles, self.s0, other.s1, sites)

    def edges(self) -> set[int]:
        return {t.edge for t in self.triangles if t.edge is not None}

    def to_json(self, lattice: Lattice) -> dict:
        def ek(e):
            return None if e is None else list(lattice.edge_keys[e])

        return {"s0": [list(self.s0[0]), list(self.s0[1])], "s1": [list(self.s1[0]), list(self.s1[1])],
                "triangles": [{"kind": t.kind, "edge": ek(t.edge), "sign": t.sign} for t in self.triangles]}


def _shared_edge(lattice: Lattice, f1: Face, f2: Face, v: Vertex) -> int:
    common = [e for e in f1.sides if e is not None and e in f2.sides
              and v in (lattice.tails[e], lattice.heads[e])]
    if len(common) != 1:
        raise LatticeError(f"faces {f1.key} and {f2.key} share no edge at {v}")
    return common[0]


def ribbon_from_sites(lattice: Lattice, sites: Sequence[Site]) -> Ribbon:
    """Build a ribbon from consecutive sites differing in exactly one of vertex or face."""
    sites = [(tuple(s[0]), tuple(s[1])) for s in sites]
    if len(sites) < 1:
        raise LatticeError("a ribbon needs at least one site")
    for s in sites:
        if s[0] not in lattice.incident:
            raise LatticeError(f"{s[0]} is not a lattice vertex")
        f = lattice.face(s[1])
        if s[0] not in f.corners:
            raise LatticeError(f"{s[0]} is not a corner of face {s[1]}")
    tris = []
    for (v, p), (w, q) in zip(sites, sites[1:]):
        if p == q and v != w:
            f = lattice.face(p)
            ci, cj = f.corners.index(v), f.corners.index(w)
            if (cj - ci) % 4 == 1:
                side = ci
            elif (ci - cj) % 4 == 1:
                side = cj
            else:
                raise LatticeError(f"{v} and {w} are not adjacent on face {p}")
            e = f.sides[side]
            if e is None:
                tris.append(Triangle("direct", None, 1))
            else:
                tris.append(Triangle("direct", e, 1 if lattice.tails[e] == v else -1))
        elif v == w and p != q:
            e = _shared_edge(lattice, lattice.face(p), lattice.face(q), v)
            tris.append(Triangle("dual", e, 1 if lattice.tails[e] == v else -1))
        else:
            raise LatticeError(f"consecutive sites {(v, p)} and {(w, q)} are not joined by a triangle")
    return Ribbon(tuple(tris), sites[0], sites[-1], tuple(sites))


def row_ribbon(lattice: Lattice, row: int, start: int, length: int, faces: str = "below") -> Ribbon:
    """East-going ribbon along a row of horizontal edges, crossing the vertical edges on one side.

    With ``faces="below"`` it starts at ((start,row), face (start-1,row)) and
    alternates dual (crossing ('v',i,row)) and direct (('h',i,row)) triangles.
    """
    dj = 0 if faces == "below" else -1
    if faces not in ("below", "above"):
        raise LatticeError("faces must be 'below' or 'above'")
    sites: list[Site] = [((start, row), (start - 1, row + dj))]
    for t in range(length):
        i = start + t
        sites.append(((i, row), (i, row + dj)))
        sites.append(((i + 1, row), (i, row + dj)))
    return ribbon_from_sites(lattice, sites)


def column_ribbon(lattice: Lattice, col: int, start: int, stop: int, lead: bool = True) -> Ribbon:
    """North-going ribbon from vertex (col, start) to (col, stop) along faces west of the column.

    With ``lead`` it starts at ((col,start), face (col-1,start-1)) after first
    crossing the edge below into that face from face (col, start-1); without it
    the first triangle is the direct step up ('v', col, start-1).  On a bottom
    rough boundary with start = height+1 both variants start at an exterior site.
    """
    if stop >= start:
        raise LatticeError("a north-going ribbon needs stop < start")
    sites: list[Site] = []
    if lead:
        sites.append(((col, start), (col, start - 1)))
    sites.append(((col, start), (col - 1, start - 1)))
    for j in range(start, stop, -1):
        sites.append(((col, j - 1), (col - 1, j - 1)))
        if j - 1 > stop:
            sites.append(((col, j - 1), (col - 1, j - 2)))
    return ribbon_from_sites(lattice, sites)


def path_ribbon(lattice: Lattice, vertices: Sequence[Vertex]) -> Ribbon:
    """Direct-only ribbon along a vertex path; only F^{e,g} is meaningful on it."""
    tris = []
    for v, w in zip(vertices, vertices[1:]):
        v, w = tuple(v), tuple(w)
        hit = [e for e, _ in lattice.incident[v] if w in (lattice.tails[e], lattice.heads[e])]
        if not hit:
            tris.append(Triangle("direct", None, 1))
        else:
            e = hit[0]
            tris.append(Triangle("direct", e, 1 if lattice.tails[e] == v else -1))
    f0 = _any_face(lattice, tuple(vertices[0]))
    f1 = _any_face(lattice, tuple(vertices[-1]))
    return Ribbon(tuple(tris), (tuple(vertices[0]), f0), (tuple(vertices[-1]), f1))


def _any_face(lattice: Lattice, v: Vertex) -> tuple[int, int]:
    for f in lattice.faces.values():
        if v in f.corners:
            return f.key
    return (v[0], v[1])


def ribbon_between(lattice: Lattice, s0: Site, s1: Site) -> Ribbon:
    """Shortest site path (breadth-first, deterministic) turned into a ribbon."""
    start = (tuple(s0[0]), tuple(s0[1]))
    goal = (tuple(s1[0]), tuple(s1[1]))
    lattice.check_site(start)
    lattice.check_site(goal)
    prev = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for nxt in _neighbour_sites(lattice, cur):
            if nxt not in prev:
                prev[nxt] = cur
                queue.append(nxt)
    if goal not in prev:
        raise LatticeError("sites are not connected")
    path = [goal]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return ribbon_from_sites(lattice, path[::-1])


def _neighbour_sites(lattice: Lattice, site: Site) -> list[Site]:
    v, p = site
    f = lattice.faces[p]
    out = []
    c = f.corners.index(v)
    for w in (f.corners[(c + 1) % 4], f.corners[(c - 1) % 4]):
        if w in lattice.incident:
            out.append((w, p))
    for q in sorted(lattice.faces):
        g = lattice.faces[q]
        if q != p and v in g.corners:
            try:
                _shared_edge(lattice, f, g, v)
            except LatticeError:
                continue
            out.append((v, q))
    return out


def _ribbon_walk(lattice: Lattice, ribbon: Ribbon, configs: np.ndarray, translate) -> tuple[np.ndarray, np.ndarray]:
    """Walk the triangles: returns (new configs, running direct product).

    ``translate(k)`` gives, per row, the element t with away-value y ↦ t y at a
    dual triangle reached with direct product k.
    """
    cay, inv = lattice.cay, lattice.inv
    out = configs.copy()
    k = np.zeros(len(configs), dtype=np.int64)
    for tri in ribbon.triangles:
        if tri.kind == "direct":
            if tri.edge is None:
                continue
            x = configs[:, tri.edge]
            k = cay[k, x if tri.sign > 0 else inv[x]]
        else:
            t = translate(k)
            if t is None:
                continue
            e = tri.edge
            out[:, e] = cay[t, out[:, e]] if tri.sign > 0 else cay[out[:, e], inv[t]]
    return out, k


def ribbon_value(lattice: Lattice, configs: np.ndarray, ribbon: Ribbon) -> np.ndarray:
    """Per-row product of the direct triangles (the g read by F^{h,g})."""
    return _ribbon_walk(lattice, ribbon, configs, lambda k: None)[1]


def _translated(state: LatticeState, ribbon: Ribbon, h: int) -> tuple[np.ndarray, np.ndarray]:
    lat = state.lattice
    cay, inv = lat.cay, lat.inv
    if h == 0:
        return _ribbon_walk(lat, ribbon, state.configs, lambda k: None)
    return _ribbon_walk(lat, ribbon, state.configs, lambda k: cay[cay[inv[k], h], k])


def apply_ribbon(state: LatticeState, ribbon: Ribbon, h: int, g: int | None = None) -> LatticeState:
    """F^{h,g}_ξ; ``g=None`` gives Σ_g F^{h,g}."""
    cfg, k = _translated(state, ribbon, int(h))
    amps = state.amps if g is None else state.amps * (k == int(g))
    return state._new(cfg, amps)


def apply_ribbon_combo(state: LatticeState, ribbon: Ribbon, coeffs: Mapping[tuple[int, int], complex]) -> LatticeState:
    """Σ c_{h,g} F^{h,g}_ξ."""
    n = state.lattice.group.order
    byh: dict[int, np.ndarray] = {}
    for (h, g), c in coeffs.items():
        if abs(c) <= PRUNE:
            continue
        byh.setdefault(h, np.zeros(n, dtype=np.complex128))[g] += c
    rows, amps = [], []
    for h in sorted(byh):
        cfg, k = _translated(state, ribbon, h)
        rows.append(cfg)
        amps.append(state.amps * byh[h][k])
    if not rows:
        return LatticeState.zero(state.lattice)
    return state._new(np.vstack(rows), np.concatenate(amps))


# ---------------------------------------------------------------------------
# quasiparticle basis


@dataclass(frozen=True)
class _ClassIrreps:
    cls: int
    c0: int
    members: tuple[int, ...]
    cent: tuple[int, ...]
    pos: dict
    irreps: tuple


_QP_CACHE: dict[tuple[int, int], tuple[FiniteGroup, _ClassIrreps]] = {}


def _class_irreps(G: FiniteGroup, cls: int) -> _ClassIrreps:
    hit = _QP_CACHE.get((id(G), cls))
    if hit is None or hit[0] is not G:
        cd, chars = dg_irrep_data(G)
        ch = chars[cls]
        irreps = matrix_irreps(ch.group, allow_numeric=True)
        data = _ClassIrreps(cls, cd.reps[cls], cd.classes[cls], tuple(ch.embed),
                            {g: i for i, g in enumerate(ch.embed)}, tuple(irreps))
        hit = _QP_CACHE[(id(G), cls)] = (G, data)
    return hit[1]


def quasiparticle_coeffs(G: FiniteGroup, label: IrrepLabelDG, u: tuple[int, int], v: tuple[int, int]) -> dict:
    """F'^{C,π;u,v} = Σ_{n∈G^{c0}} π(n^{-1})_{ji} F^{c, q_c n q_d^{-1}} with u=(c,i), v=(d,j)."""
    cd, _ = dg_irrep_data(G)
    ci = _class_irreps(G, label.cls)
    pi = ci.irreps[label.irrep]
    (c, i), (d, j) = u, v
    if c not in ci.members or d not in ci.members:
        raise LatticeError("u and v must carry elements of the class")
    out: dict[tuple[int, int], complex] = defaultdict(complex)
    for n in ci.cent:
        coef = pi(ci.pos[G.inv[n]])[j, i]
        if abs(coef) > PRUNE:
            out[(c, G.prod(cd.q[c], n, G.inv[cd.q[d]]))] += coef
    return dict(out)


def trace_coeffs(G: FiniteGroup, label: IrrepLabelDG) -> dict:
    """W^{C,π} = Σ_{c∈C} Σ_{n∈G^{c0}} χ_π(n^{-1}) F^{c, q_c n q_c^{-1}}."""
    cd, chars = dg_irrep_data(G)
    ch = chars[label.cls]
    out: dict[tuple[int, int], complex] = defaultdict(complex)
    for c in cd.classes[label.cls]:
        q = cd.q[c]
        for n in ch.embed:
            out[(c, G.prod(q, n, G.inv[q]))] += ch.chi(label.irrep, G.inv[n])
    return {k: v for k, v in out.items() if abs(v) > PRUNE}


def chargeon_coeffs(G: FiniteGroup, irrep: int, i: int, j: int) -> dict:
    """F'^{e,π;i,j} = Σ_n π(n^{-1})_{ji} F^{e,n}."""
    cd, _ = dg_irrep_data(G)
    return quasiparticle_coeffs(G, IrrepLabelDG(cd.class_of[0], irrep), (0, i), (0, j))


def fluxion_coeffs(G: FiniteGroup, cls: int, c: int, d: int) -> dict:
    """F'^{C,1;c,d} = Σ_{n∈G^{c0}} F^{c, q_c n q_d^{-1}}."""
    ci = _class_irreps(G, cls)
    triv = [k for k, ir in enumerate(ci.irreps) if ir.dim == 1
            and all(abs(ir(x)[0, 0] - 1) < 1e-9 for x in range(len(ci.cent)))][0]
    return quasiparticle_coeffs(G, IrrepLabelDG(cls, triv), (c, 0), (d, 0))


def quasiparticle_labels(G: FiniteGroup) -> list[tuple[IrrepLabelDG, tuple[int, int], tuple[int, int]]]:
    out = []
    for lab in dg_labels(G):
        ci = _class_irreps(G, lab.cls)
        dim = ci.irreps[lab.irrep].dim
        for c in ci.members:
            for d in ci.members:
                for i in range(dim):
                    for j in range(dim):
                        out.append((lab, (c, i), (d, j)))
    return out


def fourier_inverse(G: FiniteGroup, h: int, g: int) -> dict:
    """F^{h,g} as a combination of F' operators.

    Coefficient of F'^{C,π;(h,i),(c,j)} with c = g^{-1}hg is
    (dim π/|G^{c0}|) π(q_h^{-1} g q_c)_{ij}; the dim π/|G^{c0}| factor is what
    makes the round trip exact.
    """
    cd, _ = dg_irrep_data(G)
    c = G.conj(G.inv[g], h)
    cls = cd.class_of[h]
    ci = _class_irreps(G, cls)
    n = G.prod(G.inv[cd.q[h]], g, cd.q[c])
    out = {}
    for k, pi in enumerate(ci.irreps):
        m = pi(ci.pos[n]) * (pi.dim / len(ci.cent))
        for i in range(pi.dim):
            for j in range(pi.dim):
                if abs(m[i, j]) > PRUNE:
                    out[(IrrepLabelDG(cls, k), (h, i), (c, j))] = complex(m[i, j])
    return out


def combine(terms: Mapping[tuple, complex], G: FiniteGroup) -> dict:
    """Expand Σ coeff·F' back into F^{h,g} coefficients."""
    out: dict[tuple[int, int], complex] = defaultdict(complex)
    for (lab, u, v), c in terms.items():
        for key, d in quasiparticle_coeffs(G, lab, u, v).items():
            out[key] += c * d
    return {k: v for k, v in out.items() if abs(v) > 1e-12}


def apply_quasiparticle_ribbon(state: LatticeState, ribbon: Ribbon, label: IrrepLabelDG,
                               u: tuple[int, int], v: tuple[int, int]) -> LatticeState:
    return apply_ribbon_combo(state, ribbon, quasiparticle_coeffs(state.lattice.group, label, u, v))


def trace_ribbon(state: LatticeState, ribbon: Ribbon, label: IrrepLabelDG) -> LatticeState:
    return apply_ribbon_combo(state, ribbon, trace_coeffs(state.lattice.group, label))


# ---------------------------------------------------------------------------
# condensation


def condense(state_vac: LatticeState, ribbon: Ribbon, label: IrrepLabelDG,
             td: TransversalData | None = None) -> dict:
    """Apply every boundary projector at s0 to W^{C,π}|vac⟩ and compare with the multiplicities."""
    lat = state_vac.lattice
    G = lat.group
    site = ribbon.s0
    f = lat.face(site[1])
    td = td if td is not None else lat.face_td.get(f.key)
    if td is None:
        raise LatticeError("the ribbon must start on a boundary site")
    W = trace_ribbon(state_vac, ribbon, label)
    wn = W.norm()
    rows = []
    total = LatticeState.zero(lat)
    agree = True
    for lab in xi_labels(td):
        P = xi_projector(td, lab)
        out = boundary_action(W, site, P, td)
        nrm = out.norm()
        n = multiplicity(td, lab, label)
        nonzero = nrm > 1e-9 * max(1.0, wn)
        agree &= nonzero == (n != 0)
        if n:
            total = total + out
        rows.append({"boundary": xi_label_name(td, lab), "norm": round(nrm, 12), "nonzero": bool(nonzero),
                     "multiplicity": n})
    return {"bulk": dg_label_name(G, label), "ribbon_norm": round(wn, 12), "rows": rows,
            "agree": bool(agree), "sum_residual": float(total.distance(W)) if wn > 0 else 0.0}


# ---------------------------------------------------------------------------
# suites


def _rel(a: LatticeState, b: LatticeState) -> float:
    return a.distance(b)


def _res(name: str, pairs: Iterable[tuple[float, dict]]) -> IdentityResult:
    worst, wit, n = 0.0, None, 0
    for r, w in pairs:
        n += 1
        worst = max(worst, r)
        if r > TOL and wit is None:
            wit = w
    return IdentityResult(name, "pass" if wit is None else "fail", float(worst), wit, n)


def check_dg_site(state: LatticeState, site: Site) -> IdentityResult:
    """(a▷)(b▷) = (ab)▷ for all basis pairs of D(G) at one site."""
    from .doubles import DG

    alg = DG(state.lattice.group)
    basis = alg.basis_elements()
    acted = [site_action(state, site, b) for b in basis]

    def gen():
        for a in basis:
            for b, sb in zip(basis, acted):
                yield _rel(site_action(sb, site, a), site_action(state, site, a * b)), {"a": repr(a), "b": repr(b)}

    return _res(f"D(G) representation at {site}", gen())


def check_xi_site(state: LatticeState, site: Site, td: TransversalData | None = None) -> IdentityResult:
    """Ξ(R,K) representation property at a boundary site, all basis pairs."""
    from .doubles import XI

    lat = state.lattice
    td = td if td is not None else lat.face_td[tuple(site[1])]
    alg = XI(td)
    basis = alg.basis_elements()
    acted = [boundary_action(state, site, b, td) for b in basis]

    def gen():
        for a in basis:
            for b, sb in zip(basis, acted):
                lhs = boundary_action(sb, site, a, td)
                rhs = boundary_action(state, site, a * b, td)
                yield _rel(lhs, rhs), {"a": repr(a), "b": repr(b)}

    return _res(f"Ξ representation at {site} ({lat.site_case(site)})", gen())


def check_projectors(state: LatticeState) -> list[IdentityResult]:
    terms = all_terms(state.lattice)
    once = [apply_term(state, t) for t in terms]
    idem = _res("projectors idempotent",
                ((_rel(apply_term(s, t), s), {"term": term_name(t)}) for t, s in zip(terms, once)))

    def comm():
        for i, (t1, s1) in enumerate(zip(terms, once)):
            for t2, s2 in list(zip(terms, once))[i + 1:]:
                yield _rel(apply_term(s1, t2), apply_term(s2, t1)), {"a": term_name(t1), "b": term_name(t2)}

    return [idem, _res("projectors commute", comm())]


def check_ribbon_algebra(state: LatticeState, ribbon: Ribbon, split: int) -> list[IdentityResult]:
    """Product rule, concatenation and adjoint of F^{h,g}."""
    G = state.lattice.group
    n = G.order
    a, b = ribbon.split(split)
    F = {(h, g): apply_ribbon(state, ribbon, h, g) for h in range(n) for g in range(n)}

    def product():
        for h2 in range(n):
            for g2 in range(n):
                inner = F[(h2, g2)]
                for h in range(n):
                    for g in range(n):
                        lhs = apply_ribbon(inner, ribbon, h, g)
                        rhs = F[(G.mul(h, h2), g)] if g == g2 else LatticeState.zero(state.lattice)
                        yield _rel(lhs, rhs), {"h": h, "g": g, "h'": h2, "g'": g2}

    def concat():
        for h in range(n):
            first = {f: apply_ribbon(state, a, h, f) for f in range(n)}
            for g in range(n):
                rhs = LatticeState.zero(state.lattice)
                for f in range(n):
                    fi = G.inv[f]
                    rhs = rhs + apply_ribbon(first[f], b, G.prod(fi, h, f), G.mul(fi, g))
                yield _rel(F[(h, g)], rhs), {"h": h, "g": g}

    other = LatticeState.random(state.lattice, np.random.default_rng(7), len(state))

    def adjoint():
        for (h, g), s in F.items():
            lhs = other.inner(s)
            rhs = apply_ribbon(other, ribbon, G.inv[h], g).inner(state)
            yield abs(lhs - rhs), {"h": h, "g": g}

    return [_res("F^{h,g}F^{h',g'} = δ_{g,g'}F^{hh',g}", product()),
            _res("concatenation", concat()), _res("adjoint F^{h^-1,g}", adjoint())]


def check_ribcom(state: LatticeState, ribbon: Ribbon) -> list[IdentityResult]:
    """Endpoint equivariance of F^{h,g} at s0 and s1 and commutation away from them."""
    lat = state.lattice
    G = lat.group
    n = G.order
    s0, s1 = ribbon.s0, ribbon.s1
    inv = G.inv

    def at_s0_x():
        for f in range(n):
            fs = vertex_action(state, s0[0], f)
            for h in range(n):
                for g in range(n):
                    lhs = vertex_action(apply_ribbon(state, ribbon, h, g), s0[0], f)
                    rhs = apply_ribbon(fs, ribbon, G.conj(f, h), G.mul(f, g))
                    yield _rel(lhs, rhs), {"f": f, "h": h, "g": g}

    def at_s0_d():
        for f in range(n):
            for h in range(n):
                for g in range(n):
                    lhs = face_action(apply_ribbon(state, ribbon, h, g), s0, f)
                    rhs = apply_ribbon(face_action(state, s0, G.mul(inv[h], f)), ribbon, h, g)
                    yield _rel(lhs, rhs), {"f": f, "h": h, "g": g}

    def at_s1_x():
        for f in range(n):
            fs = vertex_action(state, s1[0], f)
            for h in range(n):
                for g in range(n):
                    lhs = vertex_action(apply_ribbon(state, ribbon, h, g), s1[0], f)
                    rhs = apply_ribbon(fs, ribbon, h, G.mul(g, inv[f]))
                    yield _rel(lhs, rhs), {"f": f, "h": h, "g": g}

    def at_s1_d():
        for f in range(n):
            for h in range(n):
                for g in range(n):
                    lhs = face_action(apply_ribbon(state, ribbon, h, g), s1, f)
                    rhs = apply_ribbon(face_action(state, s1, G.prod(f, inv[g], h, g)), ribbon, h, g)
                    yield _rel(lhs, rhs), {"f": f, "h": h, "g": g}

    def away():
        ends_v = {tuple(s0[0]), tuple(s1[0])}
        ends_f = {tuple(s0[1]), tuple(s1[1])}
        terms = [t for t in all_terms(lat)
                 if (t[0] == "A" and tuple(t[1]) not in ends_v) or (t[0] == "B" and tuple(t[1][1]) not in ends_f)]
        for t in terms:
            ts = apply_term(state, t)
            for h in range(n):
                for g in range(n):
                    lhs = apply_term(apply_ribbon(state, ribbon, h, g), t)
                    rhs = apply_ribbon(ts, ribbon, h, g)
                    yield _rel(lhs, rhs), {"term": term_name(t), "h": h, "g": g}

    return [_res("f▷s0 F^{h,g} = F^{fhf^-1,fg} f▷s0", at_s0_x()),
            _res("δ_f▷s0 F^{h,g} = F^{h,g} δ_{h^-1 f}▷s0", at_s0_d()),
            _res("f▷s1 F^{h,g} = F^{h,gf^-1} f▷s1", at_s1_x()),
            _res("δ_f▷s1 F^{h,g} = F^{h,g} δ_{fg^-1hg}▷s1", at_s1_d()),
            _res("F^{h,g} commutes with terms away from the ends", away())]


def check_boundary_equivariance(state: LatticeState, ribbon: Ribbon,
                                td: TransversalData | None = None) -> list[IdentityResult]:
    """x▷^b F = F^{xhx^-1,xg} x▷^b and δ_r▷^b F^{h,g} = F^{h,g} δ_{s·(y▷r)}▷^b with h^{-1} = sy."""
    from .doubles import XI

    lat = state.lattice
    G = lat.group
    n = G.order
    site = ribbon.s0
    td = td if td is not None else lat.face_td[tuple(site[1])]
    alg = XI(td)

    def xeq():
        for x in range(td.nK):
            xe = alg.group(x)
            k = td.k_elem(x)
            xs = boundary_action(state, site, xe, td)
            for h in range(n):
                for g in range(n):
                    lhs = boundary_action(apply_ribbon(state, ribbon, h, g), site, xe, td)
                    rhs = apply_ribbon(xs, ribbon, G.conj(k, h), G.mul(k, g))
                    yield _rel(lhs, rhs), {"x": td.k_label(x), "h": G.labels[h], "g": G.labels[g]}

    def deq():
        for r in range(td.nR):
            for h in range(n):
                s, y = td.factor[G.inv[h]]
                r2 = td.dot[s][td.act[y][r]]
                for g in range(n):
                    lhs = boundary_action(apply_ribbon(state, ribbon, h, g), site, alg.delta(r), td)
                    rhs = apply_ribbon(boundary_action(state, site, alg.delta(r2), td), ribbon, h, g)
                    yield _rel(lhs, rhs), {"r": td.r_label(r), "h": G.labels[h], "g": G.labels[g]}

    return [_res("x▷b F^{h,g} = F^{xhx^-1,xg} x▷b", xeq()),
            _res("δ_r▷b F^{h,g} = F^{h,g} δ_{s·(y▷r)}▷b", deq()),
            factorization_consistency(td)]


def factorization_consistency(td: TransversalData) -> IdentityResult:
    """(s·(y▷r))K = h^{-1}rK for all h ∈ G, r ∈ R, where h^{-1} = sy."""
    G = td.group
    cos = coset_index(td)

    def gen():
        for h in range(G.order):
            s, y = td.factor[G.inv[h]]
            for r in range(td.nR):
                lhs = td.dot[s][td.act[y][r]]
                rhs = int(cos[G.mul(G.inv[h], td.r_elem(r))])
                yield float(lhs != rhs), {"h": G.labels[h], "r": td.r_label(r)}

    return _res("(s·(y▷r))K = h^-1 rK", gen())


def noncommuting_witness(state: LatticeState, site: Site, K: Sequence[int]) -> dict | None:
    """First basis configuration where [hol ∈ K] at the site and A(v) fail to commute."""
    lat = state.lattice
    v = tuple(site[0])
    full = lat.vertex_K[v]
    for row, amp in zip(state.configs, state.amps):
        one = LatticeState(lat, row[None, :], np.array([amp]))
        lhs = face_indicator(vertex_average(one, v, full), site, K)
        rhs = vertex_average(face_indicator(one, site, K), v, full)
        r = _rel(lhs, rhs)
        if r > TOL:
            return {"config": [lat.group.labels[g] for g in row], "residual": r}
    return None


# ---------------------------------------------------------------------------
# boundary-to-bulk ribbons in Ξ* form


def apply_Y_ribbon(state: LatticeState, ribbon: Ribbon, r: int, k: int, K: Sequence[int]) -> LatticeState:
    """Y^{r⊗δ_k}_ξ.

    Direct values accumulate a product; before each dual triangle it must lie
    in K (else the term vanishes), and the dual edge's away-value y becomes
    k_j^{-1} r y where k_j is the product so far.  The total must equal k.
    ``r`` may be any group element, which is what concatenation produces.
    """
    lat = state.lattice
    cay, inv = lat.cay, lat.inv
    inK = np.zeros(lat.group.order, dtype=bool)
    inK[list(K)] = True
    ok = np.ones(len(state), dtype=bool)

    def translate(kk):
        nonlocal ok
        ok &= inK[kk]
        return cay[inv[kk], int(r)]

    cfg, tot = _ribbon_walk(lat, ribbon, state.configs, translate)
    ok &= tot == int(k)
    return state._new(cfg, state.amps * ok)


def check_Y_concatenation(state: LatticeState, ribbon: Ribbon, split: int, td: TransversalData) -> IdentityResult:
    """Y_{ξ'∘ξ}^{r⊗δ_k} = Σ_{x∈K} Y_{ξ'}^{x^{-1}r ⊗ δ_{x^{-1}k}} Y_ξ^{r⊗δ_x}."""
    G = state.lattice.group
    K = td.subgroup.members
    a, b = ribbon.split(split)

    def gen():
        for r in td.reps:
            first = {x: apply_Y_ribbon(state, a, r, x, K) for x in K}
            for k in K:
                lhs = apply_Y_ribbon(state, ribbon, r, k, K)
                rhs = LatticeState.zero(state.lattice)
                for x in K:
                    xi = G.inv[x]
                    rhs = rhs + apply_Y_ribbon(first[x], b, G.mul(xi, r), G.mul(xi, k), K)
                yield _rel(lhs, rhs), {"r": G.labels[r], "k": G.labels[k], "split": split}

    return _res(f"Y concatenation at split {split}", gen())


def check_Y_coassociativity(state: LatticeState, ribbon: Ribbon, i: int, j: int, td: TransversalData) -> IdentityResult:
    """Both bracketings of a three-piece split give the same operator (and the whole ribbon's)."""
    G = state.lattice.group
    K = td.subgroup.members
    p1, rest = ribbon.split(i)
    p2, p3 = rest.split(j - i)
    p12, _ = ribbon.split(j)
    inv = G.inv

    def gen():
        for r in td.reps:
            for k in K:
                left = LatticeState.zero(state.lattice)  # (ξ3 ∘ ξ2) ∘ ξ1
                right = LatticeState.zero(state.lattice)  # ξ3 ∘ (ξ2 ∘ ξ1)
                for x in K:
                    s1 = apply_Y_ribbon(state, p1, r, x, K)
                    for y in K:
                        s2 = apply_Y_ribbon(s1, p2, G.mul(inv[x], r), y, K)
                        left = left + apply_Y_ribbon(s2, p3, G.prod(inv[y], inv[x], r), G.prod(inv[y], inv[x], k), K)
                for z in K:
                    s12 = apply_Y_ribbon(state, p12, r, z, K)
                    right = right + apply_Y_ribbon(s12, p3, G.mul(inv[z], r), G.mul(inv[z], k), K)
                whole = apply_Y_ribbon(state, ribbon, r, k, K)
                yield max(_rel(left, right), _rel(left, whole)), {"r": G.labels[r], "k": G.labels[k]}

    return _res("Y three-piece bracketings agree", gen())


def check_Y_direct_relations(state: LatticeState, lattice_edge_ribbon: Ribbon, td: TransversalData) -> list[IdentityResult]:
    """k'▷v0 Y^{δk} = Y^{δ_{k'k}} k'▷v0 and k'▷v1 Y^{δk} = Y^{δ_{kk'^{-1}}} k'▷v1 on one direct triangle."""
    G = state.lattice.group
    K = td.subgroup.members
    rib = lattice_edge_ribbon
    v0, v1 = rib.s0[0], rib.s1[0]

    def at(v, fn):
        for kp in K:
            moved = vertex_action(state, v, kp)
            for k in K:
                lhs = vertex_action(apply_Y_ribbon(state, rib, 0, k, K), v, kp)
                rhs = apply_Y_ribbon(moved, rib, 0, fn(kp, k), K)
                yield _rel(lhs, rhs), {"k'": G.labels[kp], "k": G.labels[k]}

    return [_res("k'▷v0 Y^{δk} = Y^{δ_{k'k}} k'▷v0", at(v0, lambda kp, k: G.mul(kp, k))),
            _res("k'▷v1 Y^{δk} = Y^{δ_{kk'^-1}} k'▷v1", at(v1, lambda kp, k: G.mul(k, G.inv[kp])))]


def y_equivariance_counterexample(state: LatticeState, ribbon: Ribbon, mid: int, td: TransversalData,
                                  variant: str = "CK") -> dict:
    """Search for a violation of Λ▷_{s2} Y = Y Λ▷_{s2} at the intermediate site ``ribbon.sites[mid]``.

    ``variant="CK"`` uses (1/|K|)Σ_{k∈K} k at the vertex of s2; ``"CR"`` uses
    [holonomy ∈ K] at s2.  Returns the first witness in a fixed search order.
    """
    lat = state.lattice
    G = lat.group
    K = td.subgroup.members
    s2 = ribbon.sites[mid]
    if variant == "CK":
        def lam(s):
            return vertex_average(s, s2[0], K)
    elif variant == "CR":
        def lam(s):
            return face_indicator(s, s2, K)
    else:
        raise LatticeError("variant must be 'CK' or 'CR'")
    checked = 0
    for r in td.reps:
        for k in K:
            for row, amp in zip(state.configs, state.amps):
                one = LatticeState(lat, row[None, :], np.array([1.0]))
                lhs = lam(apply_Y_ribbon(one, ribbon, r, k, K))
                rhs = apply_Y_ribbon(lam(one), ribbon, r, k, K)
                checked += 1
                res = _rel(lhs, rhs)
                if res > TOL:
                    return {"variant": variant, "site": [list(s2[0]), list(s2[1])], "found": True,
                            "r": G.labels[r], "k": G.labels[k],
                            "config": [G.labels[g] for g in row], "residual": round(res, 12), "checked": checked}
    return {"variant": variant, "site": [list(s2[0]), list(s2[1])], "found": False, "checked": checked}


def y_example_ribbon(G: FiniteGroup) -> tuple[Lattice, Ribbon]:
    """Eight-triangle ribbon: dual, direct, dual, direct, dual, direct, direct (reversed), dual."""
    lat = build_lattice(G, 4, 3)
    sites = [((1, 2), (0, 1)), ((1, 2), (1, 1)), ((2, 2), (1, 1)), ((2, 2), (2, 1)), ((3, 2), (2, 1)),
             ((3, 2), (3, 1)), ((4, 2), (3, 1)), ((4, 1), (3, 1)), ((4, 1), (3, 0))]
    return lat, ribbon_from_sites(lat, sites)


# ---------------------------------------------------------------------------
# the lattice verification suite


def _s3_boundary_td(G: FiniteGroup, transversal: TransversalData | None) -> TransversalData:
    if transversal is not None:
        return transversal
    K = make_subgroup(G, [0, 1])
    return build_transversal(G, K, [min(c) for c in K.left_cosets], name="K=Z2")


def verify_lattice(G: FiniteGroup, td: TransversalData | None = None, seed: int = 0, samples: int = 24) -> Report:
    """Representation, projector, ribbon and boundary checks on lattices of at most 10 edges."""
    rng = np.random.default_rng(seed)
    td = _s3_boundary_td(G, td)
    rep = Report(f"lattice {G.name} K={[G.labels[k] for k in td.subgroup.members]}")

    bulk = build_lattice(G, 3, 1)
    psi = LatticeState.random(bulk, rng, samples)
    rep.add(check_dg_site(psi, ((1, 0), (0, 0))))
    rep.add(check_dg_site(psi, ((2, 1), (1, 0))))
    for r in check_projectors(psi):
        rep.add(r)
    rib = row_ribbon(bulk, 0, 1, 2)
    for r in check_ribbon_algebra(psi, rib, 2):
        rep.add(r)
    for r in check_ribcom(psi, rib):
        rep.add(r)

    smooth = build_lattice(G, 2, 1, {"left": BoundarySpec("smooth", td)})
    phi = LatticeState.random(smooth, rng, samples)
    for site in (((0, 0), (-1, 0)), ((0, 1), (-1, 0))):
        rep.add(check_xi_site(phi, site, td))
    for r in check_projectors(phi):
        rep.add(r)
    for r in check_boundary_equivariance(phi, row_ribbon(smooth, 0, 0, 2), td):
        rep.add(r)

    rough = build_lattice(G, 1, 1, {"bottom": BoundarySpec("rough", td)})
    chi = LatticeState.random(rough, rng, samples)
    for site in (((0, 2), (0, 1)), ((1, 2), (0, 1))):
        rep.add(check_xi_site(chi, site, td))
    for r in check_boundary_equivariance(chi, column_ribbon(rough, 1, 2, 0, lead=False), td):
        rep.add(r)
    wit = noncommuting_witness(chi, ((0, 1), (0, 1)), td.subgroup.members)
    rep.add(IdentityResult("rough interior site [hol∈K] and A(v) fail to commute",
                           "pass" if wit is not None or len(td.subgroup.members) in (1, G.order) else "fail",
                           0.0, wit, len(chi)))
    return rep
