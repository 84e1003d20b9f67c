from __future__ import annotations

import numpy as np
import pytest

import branches
import oracles
from kitaev_boundary.group_core import cyclic_group, s3
from kitaev_boundary.lattice import BudgetError, LatticeState, apply_ribbon, excited_terms, hamiltonian_energy
from kitaev_boundary.surgery import (
    SurgeryError,
    build_patch,
    central_ribbon,
    expected_map,
    in_vacuum_space,
    logical_antipode,
    logical_basis,
    logical_encode,
    logical_irrep_encode,
    logical_map,
    logical_readout,
    logical_state,
    measured_rough_merge,
    measured_rough_split,
    measured_smooth_merge,
    product_state,
    proportional,
    rough_merge,
    rough_split,
    smooth_merge,
    smooth_split,
    vacuum_dimension,
)

GROUPS = {"Z2": cyclic_group(2), "Z3": cyclic_group(3), "S3": s3()}
DETERMINISTIC = {"rough-split": rough_split, "smooth-split": smooth_split, "rough-merge": rough_merge,
                 "smooth-merge": smooth_merge, "antipode": logical_antipode}


# -- logical space

@pytest.mark.parametrize("gname", GROUPS)
@pytest.mark.parametrize("size", [(1, 1), (2, 1), (1, 2), (2, 2)])
def test_vacuum_dimension_is_group_order(gname, size):
    G = GROUPS[gname]
    d = vacuum_dimension(build_patch(G, *size))
    assert d["orbits"] == d["gram_rank"] == G.order


@pytest.mark.parametrize("gname,size", [("Z2", (1, 1)), ("Z2", (2, 1)), ("Z2", (2, 2)), ("Z3", (1, 2)),
                                        ("Z3", (2, 1)), ("S3", (1, 1)), ("S3", (1, 2))])
def test_vacuum_dimension_dense_rank(gname, size):
    G = GROUPS[gname]
    patch = build_patch(G, *size)
    assert oracles.vacuum_rank(patch.lattice) == G.order
    P = oracles.vacuum_projector(patch.lattice)
    for s in logical_basis(patch):
        v = oracles.dense(s)
        assert np.allclose(P @ v, v)


def test_logical_basis_orthogonal_and_unexcited(S3):
    patch = build_patch(S3, 2, 2)
    basis = logical_basis(patch)
    gram = np.array([[a.inner(b) for b in basis] for a in basis])
    assert np.allclose(gram, np.diag(np.diag(gram)))
    for s in basis:
        assert excited_terms(s) == []
        assert in_vacuum_space(s)


def test_readout_recovers_coefficients(S3):
    patch = build_patch(S3, 2, 1)
    rng = np.random.default_rng(7)
    c = branches.random_coeffs(S3, 1, rng)
    v = logical_readout(logical_state([patch], c))
    assert v.residual < 1e-9 and np.allclose(v.coeffs, c)
    two = logical_readout(logical_state([patch, patch], np.outer(c, c[::-1])))
    assert two.residual < 1e-9 and np.allclose(two.coeffs, np.outer(c, c[::-1]))


def test_central_ribbon_resolves_identity(S3):
    patch = build_patch(S3, 2, 2)
    rib = central_ribbon(patch, 1)
    for h in range(S3.order):
        psi = logical_encode(patch, h)
        total = LatticeState.zero(patch.lattice)
        for g in range(S3.order):
            total = total + apply_ribbon(psi, rib, 0, g)
        assert total.distance(psi) < 1e-9


def test_irrep_encoding_is_logical(S3):
    patch = build_patch(S3, 2, 1)
    s = logical_irrep_encode(patch, 2, 0, 1)
    v = logical_readout(s)
    assert v.residual < 1e-9 and not s.is_zero()
    assert abs(hamiltonian_energy(s.normalized())) < 1e-9


def test_patch_budget(S3):
    with pytest.raises(BudgetError):
        build_patch(S3, 4, 4, budget=10**5)
    with pytest.raises(SurgeryError):
        build_patch(S3, 0, 1)


# -- deterministic surgery

@pytest.mark.parametrize("gname", GROUPS)
@pytest.mark.parametrize("op", list(DETERMINISTIC))
def test_deterministic_maps_exact(gname, op):
    G = GROUPS[gname]
    parts = branches.parts_for(G, op) if op != "antipode" else [build_patch(G, 2, 2)]
    M = logical_map(DETERMINISTIC[op], parts)
    E = expected_map(G, op)
    lam, res = proportional(M, E)
    assert res < 1e-9
    assert abs(lam.imag) < 1e-12 and lam.real > 0


def test_antipode_squares_to_identity(S3):
    patch = build_patch(S3, 2, 2)
    for h in range(S3.order):
        s = logical_encode(patch, h)
        assert logical_antipode(logical_antipode(s)).distance(s) < 1e-12


def test_surgery_geometry_errors(S3):
    p = build_patch(S3, 2, 2)
    with pytest.raises(SurgeryError):
        rough_split(logical_encode(p, 0))
    with pytest.raises(SurgeryError):
        smooth_merge(product_state([logical_encode(p, 0), logical_encode(build_patch(S3, 2, 1), 0)]))
    with pytest.raises(SurgeryError):
        rough_merge(logical_encode(p, 0))


# -- measured surgery

@pytest.mark.parametrize("op", branches.MEASURED)
@pytest.mark.parametrize("gname", ["Z2", "Z3"])
def test_measured_branch_maps_small(gname, op):
    G = GROUPS[gname]
    for seed in range(12):
        res, _ = branches.branch_check(G, op, seed)
        assert res < 1e-9, (seed, res)


@pytest.mark.parametrize("op", branches.MEASURED)
def test_measured_branch_maps_s3(op):
    res, rec = branches.branch_check(s3(), op, 5)
    assert res < 1e-9
    assert rec.outcomes()


@pytest.mark.parametrize("op", branches.MEASURED)
@pytest.mark.parametrize("gname", ["Z2", "Z3"])
def test_born_probabilities(gname, op):
    G = GROUPS[gname]
    for seed in range(4 if gname == "Z2" else 1):
        assert branches.born_check(G, op, seed) < 1e-9


def test_born_smooth_split_s3():
    assert branches.born_check(s3(), "smooth-split", 1) < 1e-9


def test_trivial_outcomes_reproduce_deterministic_merge(S3):
    parts = branches.parts_for(S3, "smooth-merge")
    c = branches.random_coeffs(S3, 2, np.random.default_rng(2))
    state = logical_state(parts, c).normalized()
    out, rec, cls = measured_smooth_merge(state, outcomes=["C[e]", "C[e]", "C[e]"])
    assert cls == (0,)
    _, res = proportional(logical_readout(out).coeffs.ravel(), expected_map(S3, "smooth-merge") @ c.ravel())
    assert res < 1e-9


def test_rough_merge_conjugate_pair_is_deterministic(S3):
    parts = branches.parts_for(S3, "rough-merge")
    c = branches.random_coeffs(S3, 2, np.random.default_rng(4))
    state = logical_state(parts, c).normalized()
    out, rec, w = measured_rough_merge(state, outcomes=["pi1", "pi1"])
    assert np.allclose(w, 1)
    _, res = proportional(logical_readout(out).coeffs.ravel(), expected_map(S3, "rough-merge") @ c.ravel())
    assert res < 1e-9


def test_replay_reproduces_record(S3):
    patch = branches.parts_for(S3, "rough-split")[0]
    state = logical_state([patch], branches.random_coeffs(S3, 1, np.random.default_rng(0))).normalized()
    out, rec = measured_rough_split(state, seed=17)
    again, rec2 = measured_rough_split(state, outcomes=rec.outcomes())
    assert again.distance(out) < 1e-12
    assert [s.probability for s in rec.steps] == pytest.approx([s.probability for s in rec2.steps])
    same, rec3 = measured_rough_split(state, seed=17)
    assert rec3.to_dict() == rec.to_dict()


def test_impossible_replay_is_refused(S3):
    parts = branches.parts_for(S3, "smooth-merge")
    c = np.zeros((6, 6))
    c[0, S3.index("u")] = 1
    state = logical_state(parts, c)
    with pytest.raises(SurgeryError):
        measured_smooth_merge(state, outcomes=["C[e]", "C[e]", "C[e]"])
    _, _, cls = measured_smooth_merge(state, outcomes=["C[e]", "C[e]", "C[u]"])
    assert S3.index("u") in cls
    patch = branches.parts_for(S3, "rough-split")[0]
    with pytest.raises(SurgeryError):
        measured_rough_split(logical_encode(patch, 0), outcomes=["not-a-label"])
    with pytest.raises(SurgeryError):
        measured_rough_split(logical_encode(patch, 0), outcomes=[])


@pytest.mark.parametrize("op", ["rough-split", "rough-merge"])
def test_sparse_born_table_matches_dense(op):
    G = GROUPS["Z2"]
    parts = branches.parts_for(G, op)
    state = logical_state(parts, branches.random_coeffs(G, len(parts), np.random.default_rng(8))).normalized()
    dense = branches.born_table(G, op, state)
    sparse = branches.born_table_sparse(G, op, state)
    assert dense.keys() == sparse.keys()
    assert all(abs(dense[k] - sparse[k]) < 1e-12 for k in dense)
