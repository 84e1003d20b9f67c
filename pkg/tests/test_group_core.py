from __future__ import annotations

import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kitaev_boundary.group_core import (
    GroupError,
    all_subgroups,
    all_transversals,
    build_transversal,
    character_table,
    conjugacy_data,
    corrupt_cocycle,
    cyclic_group,
    group_from_permutations,
    left_divide,
    load_group,
    make_subgroup,
    matrix_irreps,
    orbit_data,
    s3,
    symmetric_group,
    verify_matched_pair,
)
from kitaev_boundary.quasihopf import catalog, catalog_octonion


def s3_td(reps):
    G = s3()
    return build_transversal(G, make_subgroup(G, ["e", "u"]), reps)


# -- groups

def test_permutation_groups():
    assert group_from_permutations(["(1 2)"]).order == 2
    G = group_from_permutations(["(1 2)", "(2 3)"])
    assert G.order == 6 and not G.is_abelian()
    Z4 = group_from_permutations(["(1 2 3 4)"])
    assert Z4.order == 4 and Z4.is_abelian()
    assert max(Z4.element_order(g) for g in range(4)) == 4


def test_group_axioms_tables():
    for G in (s3(), cyclic_group(5), symmetric_group(4)):
        T = np.asarray(G.cayley)
        assert (T[0] == np.arange(G.order)).all() and (T[:, 0] == np.arange(G.order)).all()
        assert all(T[g, G.inv[g]] == 0 for g in range(G.order))
        for a, b, c in itertools.product(range(G.order), repeat=3):
            assert T[T[a, b], c] == T[a, T[b, c]]


def test_s3_labels():
    G = s3()
    assert G.labels == ("e", "u", "v", "w", "uv", "vu")
    assert G.mul(G.index("u"), G.index("v")) == G.index("uv")
    # w = uvu
    assert G.prod(G.index("u"), G.index("v"), G.index("u")) == G.index("w")


def test_bad_cayley_table_rejected():
    with pytest.raises(GroupError):
        from kitaev_boundary.group_core import FiniteGroup

        FiniteGroup([[0, 1], [1, 1]])


def test_load_group_file(tmp_path):
    p = tmp_path / "z3.json"
    p.write_text(json.dumps({"cayley": [[0, 1, 2], [1, 2, 0], [2, 0, 1]], "labels": ["e", "a", "b"]}))
    G = load_group(p)
    assert G.order == 3 and G.mul(1, 1) == 2
    q = tmp_path / "s3.json"
    q.write_text(json.dumps({"permutation_generators": ["(1 2)", "(2 3)"]}))
    assert load_group(q).order == 6


# -- transversals

def test_standard_transversal():
    td = s3_td(["e", "uv", "vu"])
    G = td.group
    assert all(t == 0 for row in td.cocycle for t in row)
    assert all(b == x for x, row in enumerate(td.backact) for b in row)
    u = td.subgroup.members.index(G.index("u"))
    assert td.r_label(td.act[u][td.r_pos("uv")]) == "vu"
    assert td.regular


def test_second_transversal():
    td = s3_td(["e", "w", "v"])
    v, w = td.r_pos("v"), td.r_pos("w")
    u = td.k_pos("u")
    assert td.cocycle[v][w] == u and td.cocycle[w][v] == u
    assert td.act[u][v] == w
    assert all(b == x for x, row in enumerate(td.backact) for b in row)
    assert td.dot[v][v] == 0 and td.dot[w][w] == 0
    assert td.regular


def test_third_transversal_not_regular():
    td = s3_td(["e", "uv", "v"])
    assert td.rightInv[td.r_pos("v")] == td.r_pos("v")
    assert td.rightInv[td.r_pos("uv")] == td.r_pos("v")
    assert not td.regular


def test_bad_transversal():
    G = s3()
    K = make_subgroup(G, ["e", "u"])
    with pytest.raises(GroupError):
        build_transversal(G, K, ["e", "u", "v"])
    with pytest.raises(GroupError):
        build_transversal(G, K, ["uv", "v", "u"])


def _transversals(G):
    for K in all_subgroups(G):
        for reps in all_transversals(K):
            yield build_transversal(G, K, reps)


def test_factorization_is_bijective_all_s3_s4():
    for G in (s3(), symmetric_group(4)):
        for td in _transversals(G):
            seen = {G.mul(td.r_elem(r), td.k_elem(x)) for r in range(td.nR) for x in range(td.nK)}
            assert len(seen) == G.order


@pytest.mark.parametrize("name", ["e,uv,vu", "e,w,v", "e,uv,v", "e,w,vu"])
def test_matched_pair_s3(name):
    assert verify_matched_pair(s3_td(name.split(","))).ok


def test_matched_pair_all_s3_transversals():
    assert all(verify_matched_pair(td).ok for td in _transversals(s3()))


@pytest.mark.slow
def test_matched_pair_all_s4_transversals():
    tds = list(_transversals(symmetric_group(4)))
    assert len(tds) > 100
    for td in tds:
        rep = verify_matched_pair(td)
        assert rep.ok, rep.failures()


def test_regular_iff_rightinv_bijective():
    for td in _transversals(symmetric_group(4)):
        assert td.regular == (len(set(td.rightInv)) == td.nR)
        assert all(td.dot[r][td.rightInv[r]] == 0 for r in range(td.nR))


def test_corrupted_cocycle_is_caught():
    td = s3_td(["e", "w", "v"])
    bad = corrupt_cocycle(td, 1, 2, 0)
    rep = verify_matched_pair(bad)
    assert not rep.ok
    assert rep.failures()[0].witness


def test_left_division():
    td = s3_td(["e", "w", "v"])
    assert left_divide(td, td.r_pos("v"), td.r_pos("w")) == td.r_pos("w")
    for r in range(td.nR):
        assert left_divide(td, 0, r) == r
    for td in _transversals(symmetric_group(4)):
        for s, t in itertools.product(range(td.nR), repeat=2):
            assert td.dot[s][left_divide(td, s, t)] == t


# -- conjugacy classes and orbits

def test_conjugacy_s3():
    G = s3()
    cd = conjugacy_data(G)
    assert [sorted(G.labels[g] for g in c) for c in cd.classes] == [["e"], ["u", "v", "w"], ["uv", "vu"]]
    assert len(conjugacy_data(cyclic_group(2)).classes) == 2


def test_conjugacy_s4_against_brute_force():
    G = symmetric_group(4)
    orbits = {frozenset(G.conj(h, g) for h in range(G.order)) for g in range(G.order)}
    cd = conjugacy_data(G)
    assert sorted(len(c) for c in cd.classes) == sorted(len(o) for o in orbits) == [1, 3, 6, 6, 8]


@pytest.mark.parametrize("choice", ["min", "max", 1])
def test_q_and_zeta(choice):
    G = symmetric_group(4)
    cd = conjugacy_data(G, lift_choice=choice)
    for c in range(G.order):
        k = cd.class_of[c]
        assert G.prod(cd.q[c], cd.reps[k], G.inv[cd.q[c]]) == c
        for h in range(G.order):
            assert cd.zeta(c, h) in cd.centralizers[k]
    assert all(cd.q[r] == 0 for r in cd.reps)


def test_orbits_standard_s3():
    od = orbit_data(catalog("s3/standard"))
    td = od.td
    assert sorted(sorted(td.r_label(r) for r in o) for o in od.orbits) == [["e"], ["uv", "vu"]]
    assert od.stabilizers[od.orbit_of[0]].members == td.subgroup.members
    assert len(od.stabilizers[od.orbit_of[1]].members) == 1


def test_orbits_trivial_k():
    G = s3()
    td = build_transversal(G, make_subgroup(G, ["e"]), range(6))
    assert len(orbit_data(td).orbits) == 6


def test_orbit_zeta_cocycle_all_s4():
    for td in _transversals(symmetric_group(4)):
        od = orbit_data(td)
        for r in range(td.nR):
            for x in range(td.nK):
                b = od.basepoints[od.orbit_of[r]]
                assert td.act[od.zeta[r][x]][b] == b
                for y in range(td.nK):
                    xy = td.kmul[x][y]
                    assert od.zeta[r][xy] == td.kmul[od.zeta[td.act[y][r]][x]][od.zeta[r][y]]


def test_octonion_orbits():
    _, td = catalog_octonion()
    od = orbit_data(td)
    # g^a ▷ r_b = ±r_b: each orbit is {r_b} or {r_b, -r_b}
    assert sum(len(o) for o in od.orbits) == 16
    assert all(len(o) in (1, 2) for o in od.orbits)


# -- characters and irreps

def test_character_tables():
    ct = character_table(cyclic_group(2))
    assert np.allclose(ct.rows, [[1, 1], [1, -1]])
    ct = character_table(s3())
    assert ct.dims == (1, 1, 2)
    assert np.allclose(ct.rows[2], [2, 0, -1])
    w = np.exp(2j * np.pi / 3)
    vals = sorted(tuple(np.round(r, 9)) for r in character_table(cyclic_group(3)).rows)
    assert all(np.isclose(abs(v), 1) for row in vals for v in row)
    assert any(np.isclose(row[1], w) for row in character_table(cyclic_group(3)).rows)


@pytest.mark.parametrize("G", [cyclic_group(4), s3(), symmetric_group(4)], ids=["Z4", "S3", "S4"])
def test_character_orthogonality(G):
    ct = character_table(G)
    X = ct.element_characters()
    assert np.allclose(X @ X.conj().T, G.order * np.eye(len(ct.dims)), atol=1e-9)
    assert sum(d * d for d in ct.dims) == G.order


def test_matrix_irreps():
    G = s3()
    irr = matrix_irreps(G)
    two = irr[2]
    assert np.allclose(two(G.index("u")), np.diag([1, -1]))
    s1 = np.array([[0, 1], [1, 0]])
    assert np.allclose(two(G.index("v")), (np.sqrt(3) * s1 - np.diag([1, -1])) / 2)
    Z4 = cyclic_group(4)
    vals = sorted(np.round(np.angle(ir(1)[0, 0]) / (np.pi / 2)) % 4 for ir in matrix_irreps(Z4))
    assert vals == [0, 1, 2, 3]


@given(st.sampled_from(["Z4", "S3", "S4"]), st.data())
def test_irreps_are_unitary_homomorphisms(name, data):
    G = {"Z4": cyclic_group(4), "S3": s3(), "S4": symmetric_group(4)}[name]
    irr = matrix_irreps(G, allow_numeric=True)
    a = data.draw(st.integers(0, G.order - 1))
    b = data.draw(st.integers(0, G.order - 1))
    for ir in irr:
        assert np.allclose(ir(a) @ ir(b), ir(G.mul(a, b)), atol=1e-9)
        assert np.allclose(ir(a) @ ir(a).conj().T, np.eye(ir.dim), atol=1e-9)
