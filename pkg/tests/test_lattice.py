from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from kitaev_boundary.doubles import DG, XI, dg_labels
from kitaev_boundary.group_core import build_transversal, cyclic_group, make_subgroup, s3
from kitaev_boundary.lattice import (
    BoundarySpec,
    BudgetError,
    LatticeError,
    LatticeState,
    apply_ribbon,
    apply_Y_ribbon,
    boundary_action,
    build_lattice,
    check_boundary_equivariance,
    check_dg_site,
    check_projectors,
    check_ribbon_algebra,
    check_ribcom,
    check_xi_site,
    check_Y_coassociativity,
    check_Y_concatenation,
    check_Y_direct_relations,
    column_ribbon,
    combine,
    condense,
    excited_terms,
    face_indicator,
    fourier_inverse,
    hamiltonian_energy,
    quasiparticle_coeffs,
    quasiparticle_labels,
    ribbon_between,
    ribbon_from_sites,
    row_ribbon,
    site_action,
    state_dump,
    trace_ribbon,
    vacuum_state,
    vertex_action,
    vertex_average,
    verify_lattice,
    y_equivariance_counterexample,
    y_example_ribbon,
)
from kitaev_boundary.quasihopf import catalog

S3_NAMES = ["s3/standard", "s3/t2", "s3/t3", "s3/t4"]


def s3_z2(G):
    return build_transversal(G, make_subgroup(G, ["e", "u"]), ["e", "uv", "vu"])


# -- geometry and states

def test_geometry_counts(S3):
    lat = build_lattice(S3, 3, 2)
    assert lat.n_edges == 3 * 3 + 4 * 2
    assert len(lat.faces) == 6
    rough = build_lattice(S3, 1, 1, {"bottom": "rough"})
    assert rough.n_edges == 6 and rough.exterior == {(0, 2), (1, 2)}
    smooth = build_lattice(S3, 1, 1, {"left": BoundarySpec("smooth")})
    assert list(smooth.faces) == [(-1, 0), (0, 0)]


def test_geometry_errors(S3):
    with pytest.raises(LatticeError):
        build_lattice(S3, 1, 1, {"north": "rough"})
    with pytest.raises(LatticeError):
        BoundarySpec("custom")
    with pytest.raises(LatticeError):
        build_lattice(S3, -1, 1)
    lat = build_lattice(S3, 1, 1)
    with pytest.raises(LatticeError):
        lat.check_site(((5, 5), (0, 0)))
    with pytest.raises(LatticeError):
        ribbon_from_sites(lat, [((0, 0), (0, 0)), ((1, 1), (0, 0))])


def test_state_canonical_form(S3):
    lat = build_lattice(S3, 1, 1)
    a = LatticeState.basis(lat, ["u"] * 4)
    s = a + a + LatticeState.identity_config(lat)
    assert len(s) == 2
    assert np.isclose(s.norm(), np.sqrt(5))
    assert (s - s).is_zero()
    assert np.isclose(a.inner(s), 2)
    again = LatticeState.from_json(lat, json.loads(state_dump(s)))
    assert again.distance(s) == 0


@given(st.integers(0, 2**32 - 1))
def test_vertex_action_is_group_action(seed):
    G = s3()
    lat = build_lattice(G, 2, 1)
    rng = np.random.default_rng(seed)
    psi = LatticeState.random(lat, rng, 8)
    g, h = (int(x) for x in rng.integers(0, 6, 2))
    v = (1, 1)
    lhs = vertex_action(vertex_action(psi, v, h), v, g)
    assert lhs.distance(vertex_action(psi, v, G.mul(g, h))) < 1e-12
    assert np.isclose(vertex_action(psi, v, g).norm(), psi.norm())


@given(st.integers(0, 2**32 - 1))
def test_dg_site_action_random(seed):
    G = s3()
    lat = build_lattice(G, 1, 1)
    rng = np.random.default_rng(seed)
    psi = LatticeState.random(lat, rng, 6)
    A = DG(G)
    a, b = A.random(rng, 3), A.random(rng, 3)
    site = ((1, 1), (0, 0))
    lhs = site_action(site_action(psi, site, b), site, a)
    assert lhs.distance(site_action(psi, site, a * b)) < 1e-9


# -- suites on small lattices

def test_dg_and_projector_suites(S3):
    psi = LatticeState.random(build_lattice(S3, 2, 1), np.random.default_rng(1), 10)
    assert check_dg_site(psi, ((1, 0), (0, 0))).status == "pass"
    assert all(r.status == "pass" for r in check_projectors(psi))


@pytest.mark.parametrize("name", S3_NAMES)
def test_boundary_representations(name):
    td = catalog(name)
    G = td.group
    rng = np.random.default_rng(3)
    smooth = build_lattice(G, 1, 1, {"left": BoundarySpec("smooth", td)})
    psi = LatticeState.random(smooth, rng, 10)
    for site in (((0, 0), (-1, 0)), ((0, 1), (-1, 0))):
        assert check_xi_site(psi, site, td).status == "pass"
    rough = build_lattice(G, 1, 1, {"bottom": BoundarySpec("rough", td)})
    chi = LatticeState.random(rough, rng, 10)
    for site in (((0, 2), (0, 1)), ((1, 2), (0, 1))):
        assert check_xi_site(chi, site, td).status == "pass"


def test_boundary_action_rejects_bulk_face(S3):
    td = s3_z2(S3)
    lat = build_lattice(S3, 1, 1)
    with pytest.raises(LatticeError):
        boundary_action(LatticeState.identity_config(lat), ((0, 0), (0, 0)), XI(td).unit(), td)


def test_ribbon_suites(S3):
    lat = build_lattice(S3, 3, 1)
    psi = LatticeState.random(lat, np.random.default_rng(5), 8)
    rib = row_ribbon(lat, 0, 1, 2)
    assert all(r.status == "pass" for r in check_ribbon_algebra(psi, rib, 1))
    assert all(r.status == "pass" for r in check_ribcom(psi, rib))


def test_boundary_equivariance_rough_column(S3):
    td = s3_z2(S3)
    lat = build_lattice(S3, 1, 1, {"bottom": BoundarySpec("rough", td)})
    psi = LatticeState.random(lat, np.random.default_rng(9), 10)
    res = check_boundary_equivariance(psi, column_ribbon(lat, 1, 2, 0, lead=False), td)
    assert all(r.status == "pass" for r in res)


def test_verify_lattice_report(S3):
    rep = verify_lattice(S3)
    assert rep.ok
    assert all(r.residual < 1e-9 for r in rep.results)


# -- dense cross-checks

@given(st.integers(0, 2**32 - 1))
def test_projectors_match_dense_oracle(seed):
    G = cyclic_group(2)
    lat = build_lattice(G, 1, 1, {"bottom": "rough", "left": "smooth"})
    rng = np.random.default_rng(seed)
    psi = LatticeState.random(lat, rng, 12)
    vec = oracles.dense(psi)
    for v, K in lat.vertex_terms():
        want = oracles.vertex_projector(lat, v, K) @ vec
        assert np.allclose(oracles.dense(vertex_average(psi, v, K)), want)
    for site, K in lat.face_terms():
        want = oracles.face_projector(lat, site, K) @ vec
        assert np.allclose(oracles.dense(face_indicator(psi, site, K)), want)


def test_vacuum_matches_dense_projector():
    G = cyclic_group(3)
    lat = build_lattice(G, 1, 1, {"left": "smooth", "bottom": "rough"})
    vac = vacuum_state(lat)
    P = oracles.vacuum_projector(lat)
    v = oracles.dense(vac)
    assert np.allclose(P @ v, v)
    assert oracles.vacuum_rank(lat) == 1


# -- vacuum and excitations

@pytest.mark.parametrize("G", [cyclic_group(2), s3()], ids=["Z2", "S3"])
def test_vacuum_has_zero_energy(G):
    lat = build_lattice(G, 2, 1)
    vac = vacuum_state(lat)
    assert abs(hamiltonian_energy(vac)) < 1e-9
    assert excited_terms(vac) == []
    other = vacuum_state(lat, "B")
    assert np.isclose(abs(vac.inner(other)), 1)


def test_vacuum_budget(S3):
    with pytest.raises(BudgetError):
        vacuum_state(build_lattice(S3, 3, 3), budget=1000)


def test_ribbon_deformation_invariance_z3():
    G = cyclic_group(3)
    lat = build_lattice(G, 3, 2)
    vac = vacuum_state(lat)
    straight = ribbon_from_sites(lat, [((0, 1), (0, 0)), ((1, 1), (0, 0)), ((1, 1), (1, 0)), ((2, 1), (1, 0)),
                                       ((2, 1), (2, 0)), ((3, 1), (2, 0))])
    detour = ribbon_from_sites(lat, [((0, 1), (0, 0)), ((0, 1), (0, 1)), ((0, 2), (0, 1)), ((1, 2), (0, 1)),
                                     ((1, 2), (1, 1)), ((2, 2), (1, 1)), ((2, 2), (2, 1)), ((3, 2), (2, 1)),
                                     ((3, 1), (2, 1)), ((3, 1), (2, 0))])
    assert straight.edges() != detour.edges()
    for h in range(3):
        for g in range(3):
            a = apply_ribbon(vac, straight, h, g)
            assert a.distance(apply_ribbon(vac, detour, h, g)) < 1e-12
            assert a.norm() > 0.1


def test_trace_ribbons_excite_only_the_ends(S3):
    lat = build_lattice(S3, 2, 1)
    vac = vacuum_state(lat)
    rib = ribbon_between(lat, ((0, 0), (0, 0)), ((2, 1), (1, 0)))
    ends = {"A[0, 0]", "A[2, 1]", "B[[0, 0], [0, 0]]", "B[[1, 0], [1, 0]]"}
    for lab in dg_labels(S3):
        W = trace_ribbon(vac, rib, lab)
        assert W.norm() > 0.5
        exc = set(excited_terms(W.normalized()))
        assert exc <= ends
        if lab.cls == 0 and lab.irrep == 0:
            assert not exc
        else:
            assert {"A[0, 0]", "A[2, 1]"} <= exc or lab.cls != 0


@pytest.mark.parametrize("G", [cyclic_group(3), s3()], ids=["Z3", "S3"])
def test_fourier_round_trip(G):
    n = G.order
    for h in range(n):
        for g in range(n):
            back = combine(fourier_inverse(G, h, g), G)
            assert set(back) == {(h, g)} and abs(back[(h, g)] - 1) < 1e-9
    assert len(quasiparticle_labels(G)) == n * n


def test_quasiparticle_ribbon_requires_class_members(S3):
    lab = dg_labels(S3)[-1]
    with pytest.raises(LatticeError):
        quasiparticle_coeffs(S3, lab, (0, 0), (0, 0))


# -- condensation

@pytest.mark.parametrize("name", S3_NAMES)
def test_condensation_pattern(name):
    td = catalog(name)
    G = td.group
    lat = build_lattice(G, 1, 1, {"left": BoundarySpec("smooth", td)})
    vac = vacuum_state(lat)
    rib = ribbon_from_sites(lat, [((0, 0), (-1, 0)), ((0, 0), (0, 0)), ((1, 0), (0, 0))])
    for lab in dg_labels(G):
        out = condense(vac, rib, lab, td)
        assert out["agree"], out
        assert out["sum_residual"] < 1e-9


# -- boundary ribbons with Ξ* labels

def test_y_example_closed_form(S3):
    lat, rib = y_example_ribbon(S3)
    kinds = [t.kind for t in rib.triangles]
    assert kinds == ["dual", "direct", "dual", "direct", "dual", "direct", "direct", "dual"]
    td = s3_z2(S3)
    K = td.subgroup.members
    rng = np.random.default_rng(11)
    rows = rng.integers(0, 6, size=(400, lat.n_edges))
    # force many rows through the K-membership conditions
    rows[::2, lat.edge(("h", 1, 2))] = rng.choice(K, size=200)
    rows[::2, lat.edge(("h", 2, 2))] = rng.choice(K, size=200)
    hits = misses = 0
    for row in rows:
        one = LatticeState(lat, row[None, :], np.ones(1))
        for r in td.reps:
            for k in K:
                got = apply_Y_ribbon(one, rib, r, k, K)
                want = oracles.y_example_closed_form(lat, row, r, k, K, S3)
                if want is None:
                    assert got.is_zero()
                    misses += 1
                else:
                    assert got.distance(LatticeState(lat, np.array([want]), np.ones(1))) < 1e-12
                    hits += 1
    assert hits > 50 and misses > 50


def test_y_concatenation_any_split(S3):
    lat, rib = y_example_ribbon(S3)
    td = s3_z2(S3)
    psi = LatticeState.random(lat, np.random.default_rng(2), 12)
    for split in range(1, len(rib)):
        assert check_Y_concatenation(psi, rib, split, td).status == "pass"
    assert check_Y_coassociativity(psi, rib, 2, 5, td).status == "pass"


def test_y_direct_triangle_relations(S3):
    td = s3_z2(S3)
    lat = build_lattice(S3, 1, 1)
    psi = LatticeState.random(lat, np.random.default_rng(4), 10)
    rib = ribbon_from_sites(lat, [((0, 0), (0, 0)), ((1, 0), (0, 0))])
    assert all(r.status == "pass" for r in check_Y_direct_relations(psi, rib, td))


def test_y_equivariance_search_is_stable(S3):
    lat, rib = y_example_ribbon(S3)
    td = s3_z2(S3)
    psi = LatticeState.random(lat, np.random.default_rng(0), 16)
    for variant in ("CK", "CR"):
        a = y_equivariance_counterexample(psi, rib, 4, td, variant)
        b = y_equivariance_counterexample(psi, rib, 4, td, variant)
        assert a == b
        assert a["checked"] > 0
