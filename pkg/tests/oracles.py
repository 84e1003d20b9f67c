"""Dense brute-force references for small lattices.

Everything here works on full state vectors of length |G|^E and rebuilds the
operators from the lattice geometry alone, so it shares no arithmetic with the
sparse simulator.
"""

from __future__ import annotations

import itertools

import numpy as np


def all_configs(n: int, E: int) -> np.ndarray:
    """Every configuration, row r listing the base-n digits of r (first edge most significant)."""
    return np.indices((n,) * E, dtype=np.int64).reshape(E, -1).T


def config_index(configs: np.ndarray, n: int) -> np.ndarray:
    E = configs.shape[1]
    weights = n ** np.arange(E - 1, -1, -1)
    return configs @ weights


def dense(state) -> np.ndarray:
    """Sparse LatticeState (plain lattice or register) as a dense vector."""
    n = state.lattice.group.order
    E = state.configs.shape[1]
    vec = np.zeros(n**E, dtype=np.complex128)
    np.add.at(vec, config_index(state.configs, n), state.amps)
    return vec


def _mul(G, a, b):
    return G.table[a][b]


def vertex_permutation(lattice, v, h) -> np.ndarray:
    """Index map c ↦ index of h▷_v c on all configurations."""
    G = lattice.group
    n, E = G.order, lattice.n_edges
    cfg = all_configs(n, E)
    out = cfg.copy()
    for e, is_tail in lattice.incident[tuple(v)]:
        col = cfg[:, e]
        if is_tail:
            out[:, e] = [_mul(G, h, x) for x in col]
        else:
            out[:, e] = [_mul(G, x, G.inv[h]) for x in col]
    return config_index(out, n)


def holonomies(lattice, site) -> np.ndarray:
    G = lattice.group
    table = np.array(G.table)
    inv = np.array(G.inv)
    cfg = all_configs(G.order, lattice.n_edges)
    out = np.zeros(len(cfg), dtype=np.int64)
    for e, s in lattice.traversal(site):
        x = cfg[:, e]
        out = table[out, x if s > 0 else inv[x]]
    return out


def vertex_projector(lattice, v, K) -> np.ndarray:
    dim = lattice.group.order ** lattice.n_edges
    P = np.zeros((dim, dim))
    for h in K:
        perm = vertex_permutation(lattice, v, h)
        P[perm, np.arange(dim)] += 1 / len(K)
    return P


def face_projector(lattice, site, K) -> np.ndarray:
    hol = holonomies(lattice, site)
    return np.diag(np.isin(hol, list(K)).astype(float))


def vacuum_projector(lattice) -> np.ndarray:
    dim = lattice.group.order ** lattice.n_edges
    P = np.eye(dim)
    for v, K in lattice.vertex_terms():
        P = vertex_projector(lattice, v, K) @ P
    for site, K in lattice.face_terms():
        P = face_projector(lattice, site, K) @ P
    return P


def vacuum_rank(lattice) -> int:
    P = vacuum_projector(lattice)
    assert np.allclose(P @ P, P, atol=1e-9)
    return int(round(np.trace(P).real))


# -- Born probabilities

def _normalized(vec: np.ndarray) -> np.ndarray:
    return vec / np.linalg.norm(vec)


def edge_value_probabilities(vec: np.ndarray, n: int, E: int, e: int) -> np.ndarray:
    p = np.abs(_normalized(vec).reshape((n,) * E)) ** 2
    axes = tuple(a for a in range(E) if a != e)
    return p.sum(axis=axes)


def joint_edge_probabilities(vec: np.ndarray, n: int, E: int, edges) -> np.ndarray:
    p = np.abs(_normalized(vec).reshape((n,) * E)) ** 2
    keep = list(edges)
    axes = tuple(a for a in range(E) if a not in keep)
    q = p.sum(axis=axes)
    order = sorted(range(len(keep)), key=lambda i: keep[i])
    return np.transpose(q, np.argsort(order))


def character_rows(G) -> tuple[np.ndarray, list[int]]:
    from kitaev_boundary.group_core import character_table

    ct = character_table(G)
    return np.array([[ct.chi(i, g) for g in range(G.order)] for i in range(len(ct.dims))]), list(ct.dims)


def left_regular_fourier(G, vec: np.ndarray, E: int, e: int, i: int) -> np.ndarray:
    """P_π on one edge: (d/|G|) Σ_g χ(g^{-1}) L_g."""
    chi, dims = character_rows(G)
    n = G.order
    t = vec.reshape((n,) * E)
    out = np.zeros_like(t)
    for g in range(n):
        c = dims[i] / n * chi[i][G.inv[g]]
        moved = np.zeros_like(t)
        for x in range(n):
            src = [slice(None)] * E
            dst = [slice(None)] * E
            src[e], dst[e] = x, G.table[g][x]
            moved[tuple(dst)] = t[tuple(src)]
        out = out + c * moved
    return out.reshape(-1)


def vertex_fourier(lattice, vec: np.ndarray, v, i: int) -> np.ndarray:
    """P_π at a vertex: (d/|G|) Σ_g χ(g^{-1}) A_g(v)."""
    G = lattice.group
    chi, dims = character_rows(G)
    out = np.zeros_like(vec)
    for g in range(G.order):
        perm = vertex_permutation(lattice, v, g)
        moved = np.zeros_like(vec)
        moved[perm] = vec
        out = out + dims[i] / G.order * chi[i][G.inv[g]] * moved
    return out


def class_probabilities(lattice, vec: np.ndarray, sites, classes) -> dict[tuple[int, ...], float]:
    """Joint distribution of the conjugacy classes of several face holonomies."""
    p = np.abs(_normalized(vec)) ** 2
    cls_of = np.zeros(lattice.group.order, dtype=np.int64)
    for ci, members in enumerate(classes):
        cls_of[list(members)] = ci
    nc = len(classes)
    joint = np.zeros(len(p), dtype=np.int64)
    for s in sites:
        joint = joint * nc + cls_of[holonomies(lattice, s)]
    sums = np.bincount(joint, weights=p, minlength=nc ** len(sites))
    return {idx: float(sums[i]) for i, idx in enumerate(itertools.product(range(nc), repeat=len(sites)))}


# -- boundary ribbon example

def y_example_closed_form(lattice, row, r, k, K, G):
    """Closed form of the eight-triangle boundary ribbon on one basis configuration, or None if it vanishes.

    The dual edges carry x^j read away from the ribbon; the output stores
    y^j = (k_j^{-1} r x^j)^{-1} with k_j the ordered product of the direct
    edges passed so far.  Every k_j met before a dual step must lie in K and the
    last one must equal k.
    """
    inv = G.inv
    val = {key: row[lattice.edge(key)] for key in lattice.edge_keys}
    g2, g4, g6, g7 = val[("h", 1, 2)], val[("h", 2, 2)], val[("h", 3, 2)], val[("v", 4, 1)]
    k2 = g2
    k3 = G.mul(g2, g4)
    k4 = G.prod(g2, g4, g6, inv[g7])
    if not (k2 in K and k3 in K and k4 in K) or k4 != k:
        return None
    out = dict(val)
    for kj, key in ((0, ("v", 1, 1)), (k2, ("v", 2, 1)), (k3, ("v", 3, 1)), (k4, ("h", 3, 1))):
        out[key] = inv[G.prod(inv[kj], r, inv[val[key]])]
    return [out[key] for key in lattice.edge_keys]
