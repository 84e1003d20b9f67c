"""Patches, their |G|-dimensional logical space, and lattice surgery.

A patch (m, n) has m columns of vertical edges and n rows of horizontal edges
between a rough top and bottom (dangling edges to exterior vertices, K={e})
and a smooth left and right (K=G).  Its lattice is ``build_lattice(G, m-1, n-1)``.

Logical basis: |e⟩_L is the normalized vacuum Π A(⊗e) and |h⟩_L = F^{h,e}|e⟩_L
along the bottom corner ribbon, which right-multiplies every bottom dangling
edge by h^{-1}.  The readout value of a basis configuration is the product of
the column-0 edges read from the bottom exterior vertex to the top one; it is
h on |h⟩_L.  Multi-patch states live on a :class:`Register` with parts listed
bottom-to-top for rough cuts and left-to-right for smooth cuts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .group_core import FiniteGroup, character_table
from .lattice import (
    BudgetError,
    Lattice,
    LatticeState,
    Ribbon,
    SUPPORT_BUDGET,
    _keys,
    apply_ribbon,
    apply_ribbon_combo,
    build_lattice,
    chargeon_coeffs,
    path_ribbon,
    ribbon_from_sites,
    ribbon_value,
    vacuum_state,
)

TOL = 1e-9


class SurgeryError(ValueError):
    """Incompatible patch geometry or an impossible surgery request."""


# ---------------------------------------------------------------------------
# patches


@dataclass(frozen=True, eq=False)
class Patch:
    group: FiniteGroup
    m: int
    n: int
    lattice: Lattice = field(repr=False)

    @property
    def W(self) -> int:
        return self.m - 1

    @property
    def H(self) -> int:
        return self.n - 1

    @property
    def n_edges(self) -> int:
        return self.lattice.n_edges

    def describe(self) -> dict:
        return {"m": self.m, "n": self.n, "edges": self.n_edges, "lattice": self.lattice.describe()}


_PATCHES: dict[tuple[int, int, int], Patch] = {}


def support_estimate(G: FiniteGroup, m: int, n: int) -> int:
    """Support of one logical basis state: |G| per interior vertex."""
    return G.order ** (m * n)


def build_patch(G: FiniteGroup, m: int, n: int, budget: int | None = None) -> Patch:
    """The cached (m, n) patch; the same object is returned for equal arguments."""
    if m < 1 or n < 1:
        raise SurgeryError("patch needs m, n >= 1")
    est = support_estimate(G, m, n)
    cap = SUPPORT_BUDGET if budget is None else budget
    if est > cap:
        raise BudgetError(f"patch ({m},{n}) over {G.name or G.order}: estimated support {est} exceeds {cap}")
    key = (id(G), m, n)
    hit = _PATCHES.get(key)
    if hit is None or hit.group is not G:
        lat = build_lattice(G, m - 1, n - 1, {"left": "smooth", "right": "smooth", "top": "rough", "bottom": "rough"})
        hit = _PATCHES[key] = Patch(G, m, n, lat)
    return hit


def readout_ribbon(patch: Patch, col: int = 0) -> Ribbon:
    """Direct ribbon up column ``col`` from the bottom exterior vertex to the top one."""
    if not 0 <= col <= patch.W:
        raise SurgeryError("column outside the patch")
    return path_ribbon(patch.lattice, [(col, j) for j in range(patch.H + 1, -2, -1)])


def corner_ribbon(patch: Patch) -> Ribbon:
    """Bottom-left to bottom-right ribbon crossing every bottom dangling edge at its exterior vertex."""
    H, W = patch.H, patch.W
    sites = [((0, H + 1), (-1, H))]
    for i in range(W + 1):
        sites.append(((i, H + 1), (i, H)))
        if i < W:
            sites.append(((i + 1, H + 1), (i, H)))
    return ribbon_from_sites(patch.lattice, sites)


def central_ribbon(patch: Patch, row: int = 0) -> Ribbon:
    """Left-to-right ribbon through row ``row`` crossing the vertical edges above it."""
    if not 0 <= row <= patch.H:
        raise SurgeryError("row outside the patch")
    sites = [((0, row), (-1, row - 1))]
    for i in range(patch.W + 1):
        sites.append(((i, row), (i, row - 1)))
        if i < patch.W:
            sites.append(((i + 1, row), (i, row - 1)))
    return ribbon_from_sites(patch.lattice, sites)


def logical_zero(patch: Patch) -> LatticeState:
    return vacuum_state(patch.lattice, "A")


def logical_encode(patch: Patch, h: int) -> LatticeState:
    return apply_ribbon(logical_zero(patch), corner_ribbon(patch), int(h), 0)


def logical_irrep_encode(patch: Patch, irrep: int, i: int, j: int) -> LatticeState:
    """|π;i,j⟩_L = F'^{e,π;i,j}|1;0,0⟩_L along the readout ribbon, with |1;0,0⟩_L = Σ_h |h⟩_L."""
    G = patch.group
    plus = LatticeState.zero(patch.lattice)
    for h in range(G.order):
        plus = plus + logical_encode(patch, h)
    return apply_ribbon_combo(plus, readout_ribbon(patch), chargeon_coeffs(G, irrep, i, j))


@dataclass(frozen=True)
class _BasisTable:
    keys: np.ndarray
    values: np.ndarray
    amps: np.ndarray
    norms2: np.ndarray


@lru_cache(maxsize=None)
def _basis_table(patch: Patch) -> _BasisTable:
    G = patch.group
    keys, vals, amps, norms2 = [], [], [], []
    for h in range(G.order):
        s = logical_encode(patch, h)
        keys.append(_keys(s.configs, G.order))
        vals.append(np.full(len(s), h, dtype=np.int64))
        amps.append(s.amps)
        norms2.append(s.norm() ** 2)
    k = np.concatenate(keys)
    order = np.argsort(k, kind="stable")
    return _BasisTable(k[order], np.concatenate(vals)[order], np.concatenate(amps)[order], np.array(norms2))


def logical_basis(patch: Patch) -> list[LatticeState]:
    return [logical_encode(patch, h) for h in range(patch.group.order)]


# ---------------------------------------------------------------------------
# registers of several patches


@dataclass(frozen=True, eq=False)
class Register:
    """Several patches side by side; a LatticeState on it concatenates their edge columns."""

    parts: tuple[Patch, ...]

    @property
    def group(self) -> FiniteGroup:
        return self.parts[0].group

    @property
    def n_edges(self) -> int:
        return sum(p.n_edges for p in self.parts)

    def columns(self, k: int) -> slice:
        start = sum(p.n_edges for p in self.parts[:k])
        return slice(start, start + self.parts[k].n_edges)

    def describe(self) -> list[dict]:
        return [{"m": p.m, "n": p.n} for p in self.parts]


_REGISTERS: dict[tuple[int, ...], Register] = {}


def register(*parts: Patch) -> Register:
    key = tuple(id(p) for p in parts)
    hit = _REGISTERS.get(key)
    if hit is None or hit.parts != parts:
        if len({p.group for p in parts}) != 1:
            raise SurgeryError("patches carry different groups")
        hit = _REGISTERS[key] = Register(tuple(parts))
    return hit


def as_register(state: LatticeState) -> tuple[Register, LatticeState]:
    """View a single-patch state as a one-part register state."""
    lat = state.lattice
    if isinstance(lat, Register):
        return lat, state
    patch = _patch_of(lat)
    reg = register(patch)
    return reg, LatticeState(reg, state.configs, state.amps, canonical=True)


def _patch_of(lat) -> Patch:
    for p in _PATCHES.values():
        if p.lattice is lat:
            return p
    raise SurgeryError("state does not live on a patch")


def product_state(states: Sequence[LatticeState]) -> LatticeState:
    """Tensor product of single-patch states, parts in the given order."""
    reg = register(*[_patch_of(s.lattice) for s in states])
    configs = np.zeros((1, 0), dtype=np.int64)
    amps = np.ones(1, dtype=np.complex128)
    for s in states:
        n1, n2 = len(configs), len(s)
        configs = np.hstack([np.repeat(configs, n2, axis=0), np.tile(s.configs, (n1, 1))])
        amps = np.repeat(amps, n2) * np.tile(s.amps, n1)
    return LatticeState(reg, configs, amps)


def logical_state(parts: Sequence[Patch], coeffs: np.ndarray) -> LatticeState:
    """Σ c_{a,b,...} |a⟩_L⊗|b⟩_L⊗... on a register (single patch: a plain patch state)."""
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    G = parts[0].group
    if coeffs.shape != (G.order,) * len(parts):
        raise SurgeryError("coefficient tensor shape does not match the parts")
    bases = [logical_basis(p) for p in parts]
    reg = register(*parts)
    rows, amps = [], []
    for idx in zip(*np.nonzero(np.abs(coeffs) > 0)):
        s = product_state([b[i] for b, i in zip(bases, idx)])
        rows.append(s.configs)
        amps.append(s.amps * coeffs[idx])
    if len(parts) == 1:
        lat = parts[0].lattice
        if not rows:
            return LatticeState.zero(lat)
        return LatticeState(lat, np.vstack(rows), np.concatenate(amps))
    if not rows:
        return LatticeState(reg, np.zeros((0, reg.n_edges), dtype=np.int64), np.zeros(0))
    return LatticeState(reg, np.vstack(rows), np.concatenate(amps))


@dataclass(frozen=True)
class LogicalVector:
    """Coefficients over the group basis of each part (tensor of shape (|G|,)*parts)."""

    coeffs: np.ndarray
    residual: float
    labels: tuple[str, ...]

    def to_json(self) -> dict:
        out = []
        for idx in zip(*np.nonzero(np.abs(self.coeffs) > 1e-12)):
            c = complex(self.coeffs[idx])
            out.append({"basis": [self.labels[i] for i in idx], "re": round(c.real, 12), "im": round(c.imag, 12)})
        return {"coefficients": out, "residual": round(self.residual, 12)}


def logical_readout(state: LatticeState) -> LogicalVector:
    """Coefficients c with state = Σ c |a⟩⊗|b⟩⊗... + (residual orthogonal to the logical space)."""
    reg, st = as_register(state)
    G = reg.group
    n = len(st)
    ok = np.ones(n, dtype=bool)
    vals, weight = [], np.ones(n, dtype=np.complex128)
    for k, p in enumerate(reg.parts):
        tab = _basis_table(p)
        keys = _keys(st.configs[:, reg.columns(k)], G.order)
        pos = np.searchsorted(tab.keys, keys)
        pos = np.minimum(pos, len(tab.keys) - 1)
        hit = tab.keys[pos] == keys
        ok &= hit
        vals.append(tab.values[pos])
        weight = weight * np.conj(tab.amps[pos])
    coeffs = np.zeros((G.order,) * len(reg.parts), dtype=np.complex128)
    if ok.any():
        np.add.at(coeffs, tuple(v[ok] for v in vals), weight[ok] * st.amps[ok])
    norm = np.ones((G.order,) * len(reg.parts))
    for k, p in enumerate(reg.parts):
        shape = [1] * len(reg.parts)
        shape[k] = G.order
        norm = norm * _basis_table(p).norms2.reshape(shape)
    coeffs = coeffs / norm
    # residual: rows outside the basis supports, misfit on found rows, and basis rows absent from the state
    res2 = float(np.sum(np.abs(st.amps[~ok]) ** 2))
    if ok.any():
        idx = tuple(v[ok] for v in vals)
        pred = coeffs[idx] * np.conj(weight[ok])
        res2 += float(np.sum(np.abs(st.amps[ok] - pred) ** 2))
        found = np.zeros(coeffs.shape)
        np.add.at(found, idx, np.abs(pred) ** 2)
        counts = np.zeros(coeffs.shape, dtype=np.int64)
        np.add.at(counts, idx, 1)
    else:
        found = np.zeros(coeffs.shape)
        counts = np.zeros(coeffs.shape, dtype=np.int64)
    sizes = np.ones(coeffs.shape, dtype=np.int64)
    for k, p in enumerate(reg.parts):
        shape = [1] * len(reg.parts)
        shape[k] = G.order
        sizes = sizes * np.bincount(_basis_table(p).values, minlength=G.order).reshape(shape)
    partial = (np.abs(coeffs) > 0) & (counts < sizes)
    res2 += float(np.sum(np.clip(np.abs(coeffs[partial]) ** 2 * norm[partial] - found[partial], 0, None)))
    coeffs[np.abs(coeffs) < 1e-13] = 0
    return LogicalVector(coeffs, float(np.sqrt(res2)), G.labels)


# ---------------------------------------------------------------------------
# geometry changes


def _remap(src_keys: Sequence[tuple], dst: Sequence[Lattice], fn: Callable) -> tuple[list[np.ndarray], list[int]]:
    """Column maps src -> each dst lattice; ``fn(key)`` gives (part, new key) or None (removed)."""
    cols = [np.full(d.n_edges, -1, dtype=np.int64) for d in dst]
    removed = []
    for n, k in enumerate(src_keys):
        hit = fn(k)
        if hit is None:
            removed.append(n)
            continue
        part, nk = hit
        cols[part][dst[part].edge(nk)] = n
    for c in cols:
        if (c < 0).any():
            raise SurgeryError("geometry map leaves edges unassigned")
    return cols, removed


def _split(state: LatticeState, parts: tuple[Patch, Patch], fn: Callable, project: str) -> LatticeState:
    lat = state.lattice
    cols, removed = _remap(lat.edge_keys, [p.lattice for p in parts], fn)
    cfg, amps = state.configs, state.amps
    if project == "e":
        keep = np.all(cfg[:, removed] == 0, axis=1)
        cfg, amps = cfg[keep], amps[keep]
    reg = register(*parts)
    return LatticeState(reg, np.hstack([cfg[:, c] for c in cols]), amps)


def _cut_row(patch: Patch, row: int | None) -> int:
    j0 = patch.n // 2 if row is None else row
    if not 1 <= j0 <= patch.n - 2:
        raise SurgeryError("a rough split needs n >= 3 and a row strictly inside the patch")
    return j0


def _cut_col(patch: Patch, col: int | None) -> int:
    c0 = (patch.m - 2) // 2 if col is None else col
    if not 0 <= c0 <= patch.m - 2:
        raise SurgeryError("a smooth split needs m >= 2 and a column cut inside the patch")
    return c0


def _rough_parts(patch: Patch, j0: int) -> tuple[tuple[Patch, Patch], Callable]:
    G = patch.group
    top = build_patch(G, patch.m, j0)
    bottom = build_patch(G, patch.m, patch.n - j0 - 1)

    def fn(k):
        d, i, j = k
        if d == "h":
            if j < j0:
                return 1, k
            if j == j0:
                return None
            return 0, ("h", i, j - j0 - 1)
        if j <= j0 - 1:
            return 1, k
        return 0, ("v", i, j - j0 - 1)

    return (bottom, top), fn


def _smooth_parts(patch: Patch, c0: int) -> tuple[tuple[Patch, Patch], Callable]:
    G = patch.group
    left = build_patch(G, c0 + 1, patch.n)
    right = build_patch(G, patch.m - c0 - 1, patch.n)

    def fn(k):
        d, i, j = k
        if d == "h":
            if i < c0:
                return 0, k
            if i == c0:
                return None
            return 1, ("h", i - c0 - 1, j)
        if i <= c0:
            return 0, k
        return 1, ("v", i - c0 - 1, j)

    return (left, right), fn


def _single(state: LatticeState) -> Patch:
    if isinstance(state.lattice, Register):
        raise SurgeryError("expected a single-patch state")
    return _patch_of(state.lattice)


def rough_split(state: LatticeState, row: int | None = None) -> LatticeState:
    """Project the horizontal edges of one row onto e and cut; parts are (bottom, top)."""
    patch = _single(state)
    parts, fn = _rough_parts(patch, _cut_row(patch, row))
    return _split(state, parts, fn, "e")


def smooth_split(state: LatticeState, col: int | None = None) -> LatticeState:
    """Contract the horizontal edges of one column gap with Σ_g⟨g| and cut; parts are (left, right)."""
    patch = _single(state)
    parts, fn = _smooth_parts(patch, _cut_col(patch, col))
    return _split(state, parts, fn, "sum")


def _assemble(state: LatticeState, target: Patch, fn: Callable, fresh: str) -> tuple[LatticeState, list[int]]:
    """Build target configurations from register columns; fresh edges get e or every group element."""
    reg = state.lattice
    G = target.group
    src_cols = []
    fresh_edges = []
    for n, k in enumerate(target.lattice.edge_keys):
        hit = fn(k)
        if hit is None:
            fresh_edges.append(n)
            src_cols.append(-1)
        else:
            part, old = hit
            src_cols.append(reg.columns(part).start + reg.parts[part].lattice.edge(old))
    cfg = np.zeros((len(state), target.n_edges), dtype=np.int64)
    for n, c in enumerate(src_cols):
        if c >= 0:
            cfg[:, n] = state.configs[:, c]
    amps = state.amps
    if fresh == "sum":
        for e in fresh_edges:
            rows = len(cfg)
            cfg = np.repeat(cfg, G.order, axis=0)
            cfg[:, e] = np.tile(np.arange(G.order), rows)
            amps = np.repeat(amps, G.order)
    return LatticeState(target.lattice, cfg, amps), fresh_edges


def _check_register(state: LatticeState, count: int) -> Register:
    reg = state.lattice
    if not isinstance(reg, Register) or len(reg.parts) != count:
        raise SurgeryError(f"expected a register of {count} patches")
    return reg


def _rough_merge_target(reg: Register) -> tuple[Patch, Callable, int]:
    bottom, top = reg.parts
    if bottom.m != top.m:
        raise SurgeryError("rough merge needs equal widths")
    j0 = top.n
    target = build_patch(reg.group, top.m, top.n + bottom.n + 1)

    def fn(k):
        d, i, j = k
        if d == "h":
            if j < j0:
                return 1, k
            if j == j0:
                return None
            return 0, ("h", i, j - j0 - 1)
        if j <= j0 - 1:
            return 1, k
        return 0, ("v", i, j - j0 - 1)

    return target, fn, j0


def _smooth_merge_target(reg: Register) -> tuple[Patch, Callable, int]:
    left, right = reg.parts
    if left.n != right.n:
        raise SurgeryError("smooth merge needs equal heights")
    c0 = left.m - 1
    target = build_patch(reg.group, left.m + right.m, left.n)

    def fn(k):
        d, i, j = k
        if d == "h":
            if i < c0:
                return 0, k
            if i == c0:
                return None
            return 1, ("h", i - c0 - 1, j)
        if i <= c0:
            return 0, k
        return 1, ("v", i - c0 - 1, j)

    return target, fn, c0


def rough_merge(state: LatticeState) -> LatticeState:
    """Join (bottom, top) with a row of horizontal edges in state e, then apply A on the joined vertices."""
    reg = _check_register(state, 2)
    target, fn, j0 = _rough_merge_target(reg)
    out, _ = _assemble(state, target, fn, "e")
    for i in range(target.W + 1):
        out = _vertex_A(out, (i, j0))
    return out


def smooth_merge(state: LatticeState) -> LatticeState:
    """Join (left, right) with fresh horizontal edges in Σ_g g, then apply B on the fresh faces."""
    reg = _check_register(state, 2)
    target, fn, c0 = _smooth_merge_target(reg)
    out, _ = _assemble(state, target, fn, "sum")
    for j in range(-1, target.H + 1):
        out = _face_B(out, (c0, j))
    return out


def _vertex_A(state: LatticeState, v) -> LatticeState:
    from .lattice import projector_A

    return projector_A(state, v)


def _face_B(state: LatticeState, face) -> LatticeState:
    from .lattice import projector_B

    return projector_B(state, face)


def logical_antipode(state: LatticeState) -> LatticeState:
    """Invert every edge value and read the patch rotated by 180°; |h⟩_L goes to |h^{-1}⟩_L."""
    patch = _single(state)
    lat = patch.lattice
    m, n = patch.m, patch.n
    cols = np.zeros(lat.n_edges, dtype=np.int64)
    for e, (d, i, j) in enumerate(lat.edge_keys):
        nk = ("h", m - 2 - i, n - 1 - j) if d == "h" else ("v", m - 1 - i, n - 2 - j)
        cols[lat.edge(nk)] = e
    inv = lat.inv
    return LatticeState(lat, inv[state.configs[:, cols]], state.amps)


# ---------------------------------------------------------------------------
# logical maps


def logical_map(op: Callable[[LatticeState], LatticeState], parts: Sequence[Patch]) -> np.ndarray:
    """Matrix of ``op`` on logical basis inputs: rows index outputs, columns inputs (row-major tensors)."""
    G = parts[0].group
    cols = []
    for idx in np.ndindex(*(G.order,) * len(parts)):
        c = np.zeros((G.order,) * len(parts))
        c[idx] = 1
        out = op(logical_state(parts, c))
        cols.append(logical_readout(out).coeffs.ravel())
    return np.stack(cols, axis=1)


def proportional(M: np.ndarray, E: np.ndarray) -> tuple[complex, float]:
    """(λ, ‖M − λE‖/‖E‖) with λ the least-squares scalar."""
    e2 = np.vdot(E, E)
    lam = np.vdot(E, M) / e2
    return complex(lam), float(np.linalg.norm(M - lam * E) / np.sqrt(e2.real))


def expected_map(G: FiniteGroup, op: str) -> np.ndarray:
    """Exact logical map of each surgery on group-basis tensors (row-major, bottom/left part first)."""
    n = G.order
    if op == "rough-split":  # |l⟩ ↦ Σ_g |g⟩⊗|g^{-1}l⟩
        M = np.zeros((n * n, n))
        for lv in range(n):
            for g in range(n):
                M[g * n + G.mul(G.inv[g], lv), lv] = 1
    elif op == "smooth-split":  # |h⟩ ↦ |h⟩⊗|h⟩
        M = np.zeros((n * n, n))
        for h in range(n):
            M[h * n + h, h] = 1
    elif op == "rough-merge":  # |j⟩⊗|k⟩ ↦ |jk⟩
        M = np.zeros((n, n * n))
        for j in range(n):
            for k in range(n):
                M[G.mul(j, k), j * n + k] = 1
    elif op == "smooth-merge":  # |j⟩⊗|k⟩ ↦ δ_{jk}|j⟩
        M = np.zeros((n, n * n))
        for j in range(n):
            M[j, j * n + j] = 1
    elif op == "antipode":
        M = np.zeros((n, n))
        for h in range(n):
            M[G.inv[h], h] = 1
    else:
        raise SurgeryError(f"unknown surgery {op!r}")
    return M


def expected_measured_merge(G: FiniteGroup, cls: Sequence[int]) -> np.ndarray:
    """|j⟩⊗|k⟩ ↦ Σ_{s∈C''} δ_{js,k}|js⟩."""
    n = G.order
    M = np.zeros((n, n * n))
    for j in range(n):
        for s in cls:
            k = G.mul(j, s)
            M[k, j * n + k] = 1
    return M


# ---------------------------------------------------------------------------
# measurements


@dataclass(frozen=True)
class MeasurementStep:
    where: str
    observable: str
    outcome: str
    probability: float
    correction: str

    def to_dict(self) -> dict:
        return {"where": self.where, "observable": self.observable, "outcome": self.outcome,
                "probability": round(self.probability, 12), "correction": self.correction}


@dataclass
class MeasurementRecord:
    op: str
    seed: int | None
    steps: list[MeasurementStep] = field(default_factory=list)

    def outcomes(self) -> list[str]:
        return [s.outcome for s in self.steps]

    def to_dict(self) -> dict:
        return {"op": self.op, "seed": self.seed, "steps": [s.to_dict() for s in self.steps]}


class _Chooser:
    """Samples outcomes from exact Born weights, or replays given outcome labels."""

    def __init__(self, seed: int | None, forced: Sequence[str] | None):
        self.rng = np.random.default_rng(seed)
        self.forced = list(forced) if forced is not None else None

    def pick(self, labels: Sequence[str], weights: np.ndarray) -> int:
        total = float(np.sum(weights))
        if total <= 0:
            raise SurgeryError("measurement on the zero vector")
        if self.forced is not None:
            if not self.forced:
                raise SurgeryError("replay record is shorter than the run")
            lab = self.forced.pop(0)
            if lab not in labels:
                raise SurgeryError(f"recorded outcome {lab!r} is not a possible outcome")
            i = list(labels).index(lab)
            if weights[i] / total <= 1e-12:
                raise SurgeryError(f"recorded outcome {lab!r} has zero probability")
            return i
        u = self.rng.random()
        cum = np.cumsum(weights) / total
        return int(min(np.searchsorted(cum, u, side="right"), len(labels) - 1))


def _branch(state: LatticeState, branches: list[tuple[str, LatticeState]], chooser: _Chooser, where: str,
            observable: str, rec: MeasurementRecord) -> tuple[str, LatticeState]:
    n2 = state.norm() ** 2
    w = np.array([b.norm() ** 2 for _, b in branches])
    i = chooser.pick([lab for lab, _ in branches], w)
    lab, out = branches[i]
    rec.steps.append(MeasurementStep(where, observable, lab, float(w[i] / n2), "none"))
    return lab, out.normalized()


def _set_correction(rec: MeasurementRecord, text: str) -> None:
    s = rec.steps[-1]
    rec.steps[-1] = MeasurementStep(s.where, s.observable, s.outcome, s.probability, text)


def _on_part(state: LatticeState, k: int, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    reg = state.lattice
    cfg = state.configs.copy()
    sl = reg.columns(k)
    cfg[:, sl] = fn(cfg[:, sl])
    return cfg


def _flatten_value(lat: Lattice, configs: np.ndarray, site, edge: int) -> np.ndarray:
    """Per row, the value of ``edge`` making the holonomy at ``site`` trivial."""
    out = np.full(len(configs), -1, dtype=np.int64)
    trial = configs.copy()
    for g in range(lat.group.order):
        trial[:, edge] = g
        hit = lat.holonomy(trial, site) == 0
        out[hit & (out < 0)] = g
    if (out < 0).any():
        raise SurgeryError("edge does not enter the face holonomy")
    return out


def _canonical_site(lat: Lattice, face) -> tuple:
    for site, _ in lat.face_terms():
        if site[1] == tuple(face):
            return site
    raise SurgeryError(f"face {face} carries no term")


def _fourier_branches(G: FiniteGroup, state: LatticeState, move: Callable[[np.ndarray, int], np.ndarray]):
    """[(label, P_π state)] with P_π = (d_π/|G|) Σ_g χ_π(g^{-1}) (g acting through ``move``)."""
    ct = character_table(G)
    out = []
    moved = [move(state.configs, g) for g in range(G.order)]
    for i, d in enumerate(ct.dims):
        rows, amps = [], []
        for g in range(G.order):
            c = d / G.order * ct.chi(i, G.inv[g])
            if abs(c) > 1e-15:
                rows.append(moved[g])
                amps.append(state.amps * c)
        out.append((f"pi{i}", LatticeState(state.lattice, np.vstack(rows), np.concatenate(amps))))
    return out, ct


def _edge_name(lat: Lattice, e: int) -> str:
    d, i, j = lat.edge_keys[e]
    return f"{d}({i},{j})"


def measured_rough_split(state: LatticeState, seed: int | None = None, row: int | None = None,
                         outcomes: Sequence[str] | None = None) -> tuple[LatticeState, MeasurementRecord]:
    """Measure the cut row in the group basis, cut, then flatten the new rough faces left to right.

    Each correction right-multiplies (top part) or left-multiplies (bottom part)
    one dangling edge at an exterior vertex by a fixed element, so it is unitary.
    """
    patch = _single(state)
    G = patch.group
    lat = patch.lattice
    j0 = _cut_row(patch, row)
    rec = MeasurementRecord("measured-rough-split", seed)
    chooser = _Chooser(seed, outcomes)
    for c in range(patch.W):
        e = lat.edge(("h", c, j0))
        branches = []
        for g in range(G.order):
            keep = state.configs[:, e] == g
            branches.append((G.labels[g], LatticeState(lat, state.configs[keep], state.amps[keep], canonical=True)))
        _, state = _branch(state, branches, chooser, _edge_name(lat, e), "group basis", rec)
    parts, fn = _rough_parts(patch, j0)
    out = _split(state, parts, fn, "keep")
    bottom, top = parts
    notes = []
    for c in range(patch.W):
        for k, p, site, edge_key, side in (
                (1, top, ((c + 1, top.H + 1), (c, top.H)), ("v", c + 1, top.H), "right"),
                (0, bottom, ((c + 1, -1), (c, -1)), ("v", c + 1, -1), "left")):
            sl = out.lattice.columns(k)
            e = p.lattice.edge(edge_key)
            sub = out.configs[:, sl]
            new = _flatten_value(p.lattice, sub, site, e)
            old = sub[:, e]
            mult = G.cayley[G.inverse[old], new] if side == "right" else G.cayley[new, G.inverse[old]]
            if len(set(mult.tolist())) > 1:
                raise SurgeryError("correction is not a fixed translation; input outside the vacuum space")
            m = int(mult[0]) if len(mult) else 0
            if m:
                notes.append(f"{'top' if k else 'bottom'} {edge_key[0]}({edge_key[1]},{edge_key[2]}) "
                             f"{'·' + G.labels[m] if side == 'right' else G.labels[m] + '·'}")
            cfg = out.configs.copy()
            cfg[:, sl.start + e] = new
            out = LatticeState(out.lattice, cfg, out.amps)
    if notes:
        _set_correction(rec, "; ".join(notes))
    return out, rec


def measured_smooth_split(state: LatticeState, seed: int | None = None, col: int | None = None,
                          outcomes: Sequence[str] | None = None) -> tuple[LatticeState, MeasurementRecord]:
    """Measure each cut edge with the Fourier projectors of the left regular representation.

    For π ≠ 1 the edge is first moved to e by a vertex action at its left end
    controlled on its value, then the amplitude is multiplied by the conjugate
    character of the detour path (up the left column, across the top, down the
    right column), and finally A is applied at both ends.  The multiplication is
    a non-unitary state-level correction.
    """
    patch = _single(state)
    G = patch.group
    lat = patch.lattice
    c0 = _cut_col(patch, col)
    rec = MeasurementRecord("measured-smooth-split", seed)
    chooser = _Chooser(seed, outcomes)
    ct = character_table(G)
    triv = ct.trivial_index()
    touched = []
    for j in range(patch.H + 1):
        e = lat.edge(("h", c0, j))

        def move(cfg, g, e=e):
            out = cfg.copy()
            out[:, e] = lat.cay[g, out[:, e]]
            return out

        branches, _ = _fourier_branches(G, state, move)
        lab, state = _branch(state, branches, chooser, _edge_name(lat, e), "Fourier (left regular)", rec)
        i = int(lab[2:])
        if i == triv:
            continue
        y = state.configs[:, e]
        cfg = lat.vertex_apply(state.configs, (c0, j), lat.inv[y])
        detour = path_ribbon(lat, [(c0, jj) for jj in range(j, -2, -1)] + [(c0 + 1, jj) for jj in range(-1, j + 1)])
        val = ribbon_value(lat, cfg, detour)
        chi = np.array([np.conj(ct.chi(i, g)) for g in range(G.order)])
        state = LatticeState(lat, cfg, state.amps * chi[val])
        touched.append(j)
        _set_correction(rec, f"controlled vertex action at ({c0},{j}); conj character of detour; A at both ends")
    parts, fn = _smooth_parts(patch, c0)
    out = _split(state, parts, fn, "sum")
    if touched:
        left, right = parts
        for j in touched:
            out = _part_A(out, 0, (left.W, j))
            out = _part_A(out, 1, (0, j))
    if out.is_zero():
        raise SurgeryError("correction annihilated the state")
    return out.normalized(), rec


def _part_A(state: LatticeState, k: int, v) -> LatticeState:
    reg = state.lattice
    p = reg.parts[k]
    K = p.lattice.vertex_K[tuple(v)]
    sl = reg.columns(k)
    rows, amps = [], []
    for g in K:
        cfg = state.configs.copy()
        cfg[:, sl] = p.lattice.vertex_apply(cfg[:, sl], tuple(v), g)
        rows.append(cfg)
        amps.append(state.amps / len(K))
    return LatticeState(reg, np.vstack(rows), np.concatenate(amps))


def measured_smooth_merge(state: LatticeState, seed: int | None = None, outcomes: Sequence[str] | None = None
                          ) -> tuple[LatticeState, MeasurementRecord, tuple[int, ...]]:
    """Smooth merge by face measurements; returns (state, record, inner class C'').

    Fresh edges start in Σ_g g.  The top and bottom fresh faces are measured in
    conjugacy classes and each is flattened by resetting its fresh edge; each
    inner face is measured in classes and flattened by resetting its left edge
    followed by A on that edge's ends.  Resetting is a many-to-one, non-unitary
    state-level correction.  C'' is reported as the class of the inverse inner
    holonomy; with C'' = {e} the result is the deterministic merge.
    """
    reg = _check_register(state, 2)
    target, fn, c0 = _smooth_merge_target(reg)
    G = reg.group
    lat = target.lattice
    rec = MeasurementRecord("measured-smooth-merge", seed)
    chooser = _Chooser(seed, outcomes)
    cur, _ = _assemble(state, target, fn, "sum")
    cur = cur.normalized()
    from .group_core import conjugacy_data

    cd = conjugacy_data(G)
    inner_cls: tuple[int, ...] = (0,)

    def class_measure(cur, face, tag):
        site = _canonical_site(lat, face)
        hol = lat.holonomy(cur.configs, site)
        cls_of = np.array(cd.class_of)[hol]
        branches = []
        for ci, members in enumerate(cd.classes):
            keep = cls_of == ci
            branches.append((f"C[{G.labels[cd.reps[ci]]}]",
                             LatticeState(lat, cur.configs[keep], cur.amps[keep], canonical=True)))
        lab, out = _branch(cur, branches, chooser, f"face({face[0]},{face[1]})", tag, rec)
        ci = [b[0] for b in branches].index(lab)
        return ci, out, site

    for face, edge_key in (((c0, -1), ("h", c0, 0)), ((c0, target.H), ("h", c0, target.H))):
        ci, cur, site = class_measure(cur, face, "conjugacy class of holonomy")
        if cd.classes[ci] != (0,):
            e = lat.edge(edge_key)
            cfg = cur.configs.copy()
            cfg[:, e] = _flatten_value(lat, cfg, site, e)
            cur = LatticeState(lat, cfg, cur.amps).normalized()
            _set_correction(rec, f"reset {edge_key[0]}({edge_key[1]},{edge_key[2]}) to flatten the face")
    for j in range(target.H):
        face = (c0, j)
        ci, cur, site = class_measure(cur, face, "conjugacy class of holonomy (inner)")
        inner_cls = tuple(sorted(G.inv[x] for x in cd.classes[ci]))
        if cd.classes[ci] != (0,):
            e = lat.edge(("v", c0, j))
            cfg = cur.configs.copy()
            cfg[:, e] = _flatten_value(lat, cfg, site, e)
            cur = LatticeState(lat, cfg, cur.amps)
            cur = _vertex_A(_vertex_A(cur, (c0, j)), (c0, j + 1)).normalized()
            _set_correction(rec, f"reset v({c0},{j}) to flatten the face; A at its ends")
    return cur, rec, inner_cls


def measured_rough_merge(state: LatticeState, seed: int | None = None, outcomes: Sequence[str] | None = None
                         ) -> tuple[LatticeState, MeasurementRecord, np.ndarray]:
    """Rough merge of width-2 patches by measuring the two joined vertices in the Fourier basis.

    Returns (state, record, w): the logical map of the branch is
    |j⟩⊗|k⟩ ↦ w(j)|jk⟩ up to a scalar, with j the bottom input.  When the
    outcomes are a conjugate pair (π, π*) the charges are paired along the
    joining edge (multiply by χ_π of its value) and w ≡ 1.  Otherwise each
    charge is paired with the bottom rough boundary (multiply by the conjugate
    character of the column path from the bottom exterior vertex), giving
    w(j) = χ_π(j^{-1})χ_π'(j^{-1}).  A is then applied at both vertices.  These
    amplitude multiplications are non-unitary state-level corrections.
    """
    reg = _check_register(state, 2)
    target, fn, j0 = _rough_merge_target(reg)
    if target.m != 2:
        raise SurgeryError("measured rough merge is implemented for width-2 patches")
    G = reg.group
    lat = target.lattice
    rec = MeasurementRecord("measured-rough-merge", seed)
    chooser = _Chooser(seed, outcomes)
    cur, _ = _assemble(state, target, fn, "e")
    cur = cur.normalized()
    ct = character_table(G)
    got = []
    for v in ((0, j0), (1, j0)):
        branches, _ = _fourier_branches(G, cur, lambda cfg, g, v=v: lat.vertex_apply(cfg, v, g))
        lab, cur = _branch(cur, branches, chooser, f"vertex({v[0]},{v[1]})", "Fourier (vertex action)", rec)
        got.append(int(lab[2:]))
    a, b = got
    triv = ct.trivial_index()
    chi = np.array([[ct.chi(i, g) for g in range(G.order)] for i in range(len(ct.dims))])
    weight = np.ones(G.order, dtype=np.complex128)
    if a == triv and b == triv:
        return cur, rec, weight
    dual_a = [i for i in range(len(ct.dims)) if np.allclose(chi[i], np.conj(chi[a]))][0]
    if b == dual_a:
        y = cur.configs[:, lat.edge(("h", 0, j0))]
        factor = chi[a][y]
        note = "character of the joining edge; A at both vertices"
    else:
        factor = np.ones(len(cur), dtype=np.complex128)
        for col, i in ((0, a), (1, b)):
            path = path_ribbon(lat, [(col, j) for j in range(target.H + 1, j0 - 1, -1)])
            factor = factor * np.conj(chi[i][ribbon_value(lat, cur.configs, path)])
        weight = chi[a][G.inverse] * chi[b][G.inverse]
        note = "conjugate characters of both column paths to the bottom boundary; A at both vertices"
    cur = LatticeState(lat, cur.configs, cur.amps * factor)
    cur = _vertex_A(_vertex_A(cur, (0, j0)), (1, j0))
    if not cur.is_zero():
        cur = cur.normalized()
    _set_correction(rec, note)
    return cur, rec, weight


def expected_measured_rough_merge(G: FiniteGroup, weight: np.ndarray) -> np.ndarray:
    """|j⟩⊗|k⟩ ↦ w(j)|jk⟩."""
    n = G.order
    M = np.zeros((n, n * n), dtype=np.complex128)
    for j in range(n):
        for k in range(n):
            M[G.mul(j, k), j * n + k] = weight[j]
    return M


# ---------------------------------------------------------------------------
# vacuum-space dimension


def flat_gauge_orbits(lattice: Lattice, budget: int | None = None) -> int:
    """Number of gauge orbits of configurations passing every face term.

    The vertex terms average permutation actions of the gauge group on the
    flat configurations, so this count equals dim H_vac.
    """
    from .lattice import _flat_product

    flat = _flat_product(lattice, budget)
    G = lattice.group
    keys = _keys(flat.configs, G.order)
    order = np.argsort(keys)
    skeys = keys[order]
    labels = np.arange(len(keys))
    gens = [(v, k) for v, K in lattice.vertex_terms() for k in K if k != 0]
    perms = []
    for v, k in gens:
        moved = _keys(lattice.vertex_apply(flat.configs, v, k), G.order)
        perms.append(order[np.searchsorted(skeys, moved)])
    while True:
        new = labels.copy()
        for p in perms:
            new = np.minimum(new, new[p])
        if np.array_equal(new, labels):
            break
        labels = new
    return int(len(np.unique(labels)))


def vacuum_dimension(patch: Patch) -> dict:
    """dim H_vac by gauge-orbit counting and by the Gram rank of the logical basis."""
    basis = logical_basis(patch)
    gram = np.array([[a.inner(b) for b in basis] for a in basis])
    return {"orbits": flat_gauge_orbits(patch.lattice), "gram_rank": int(np.linalg.matrix_rank(gram, tol=1e-9)),
            "order": patch.group.order}


def in_vacuum_space(state: LatticeState, tol: float = TOL) -> bool:
    v = logical_readout(state)
    return v.residual <= tol * max(1.0, state.norm())

