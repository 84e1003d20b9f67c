from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kitaev_boundary.doubles import XI
from kitaev_boundary.group_core import GroupError, corrupt_cocycle
from kitaev_boundary.quasihopf import (
    CATALOG_NAMES,
    VECS,
    PreconditionError,
    QuasiHopfData,
    catalog,
    cochain_twist,
    octonion_delta,
    octonion_f,
    octonion_G_formula,
    octonion_view,
    twist_antipode,
    twisted_coproduct,
    twisted_phi,
    verify_antipode,
    verify_octonion,
    verify_quasibialgebra,
    verify_star,
    verify_twist,
    verify_twisted_antipode,
)

S3_NAMES = ["s3/standard", "s3/t2", "s3/t3", "s3/t4"]


def el(alg, *terms):
    """Σ c·δ_r⊗x from (c, r-label, x-label) triples."""
    out = alg.zero()
    for c, r, x in terms:
        out = out + alg.basis(alg.f_labels.index(r), alg.x_labels.index(x), c)
    return out


def exact(rep):
    return rep.ok and all(r.residual == 0 for r in rep.results)


# -- catalog

def test_catalog_names_resolve():
    for name in CATALOG_NAMES:
        if name.endswith("/6"):
            continue
        td = catalog(name)
        assert td.nR * td.nK == td.group.order
    with pytest.raises(GroupError):
        catalog("s3/t9")


@pytest.mark.parametrize("name,regular", [("s3/standard", True), ("s3/t2", True), ("s3/t3", False),
                                          ("s3/t4", False)])
def test_s3_regularity(name, regular):
    assert catalog(name).regular == regular


def test_standard_has_trivial_phi():
    qh = QuasiHopfData(catalog("s3/standard"))
    assert qh.phi == qh.alg.unit(3)


def test_t3_phi_matches_closed_form():
    td = catalog("s3/t3")
    qh = QuasiHopfData(td)
    X = qh.alg
    one = X.unit()
    d1, d2 = el(X, (1, "uv", "e")), el(X, (1, "v", "e"))
    um1 = el(X, (1, "e", "u"), (1, "uv", "u"), (1, "v", "u")) - one
    want = X.unit(3) + (d1.tensor(d2) + d2.tensor(d1) + d1.tensor(d1)).tensor(um1)
    assert qh.phi == want
    assert qh.phi_inv == want


def test_t3_coproduct_of_u():
    td = catalog("s3/t3")
    qh = QuasiHopfData(td)
    X = qh.alg
    u = X.group(td.k_pos("u"))
    one = X.unit()
    d0 = X.delta(0)
    assert qh.coproduct(u) == u.tensor(one) + (d0 * u).tensor(u - one)


# -- axiom suites

@pytest.mark.parametrize("name", S3_NAMES + ["sn/cyclic/3", "sn/cyclic/4", "sn/cyclic/5", "sn/transpositions/3",
                                             "sn/transpositions/4", "sn/transpositions/5"])
def test_quasihopf_suite_exact(name):
    td = catalog(name)
    qh = QuasiHopfData(td)
    assert exact(verify_quasibialgebra(qh, multiplicativity=td.group.order <= 24))
    if td.regular:
        assert exact(verify_antipode(qh))
        assert exact(verify_star(qh, flag_only=False))
    else:
        with pytest.raises(PreconditionError):
            verify_antipode(qh)


def test_octonion_suite_exact():
    qh = QuasiHopfData(catalog("octonion"))
    assert exact(verify_quasibialgebra(qh, multiplicativity=False))
    assert exact(verify_antipode(qh))
    assert exact(verify_star(qh, flag_only=False))


def test_corrupted_cocycle_breaks_suite():
    td = corrupt_cocycle(catalog("s3/t2"), 1, 2, 0)
    rep = verify_quasibialgebra(QuasiHopfData(td))
    assert not rep.ok
    assert rep.failures()[0].witness is not None


@given(st.sampled_from(S3_NAMES), st.integers(0, 2**32 - 1))
def test_coproduct_is_multiplicative_random(name, seed):
    qh = QuasiHopfData(catalog(name))
    rng = np.random.default_rng(seed)
    a, b = qh.alg.random(rng), qh.alg.random(rng)
    assert qh.coproduct(a * b).close(qh.coproduct(a) * qh.coproduct(b))
    assert qh.coproduct(a).star().close(qh.coproduct(a.star()))


@given(st.sampled_from(["s3/standard", "s3/t2", "sn/cyclic/4"]), st.integers(0, 2**32 - 1))
def test_theta_is_antilinear_homomorphism(name, seed):
    qh = QuasiHopfData(catalog(name))
    rng = np.random.default_rng(seed)
    a, b = qh.alg.random(rng), qh.alg.random(rng)
    assert qh.theta(a * b).close(qh.theta(a) * qh.theta(b))
    assert qh.theta(1j * a).close(-1j * qh.theta(a))


# -- twists

@pytest.mark.parametrize("dst", ["s3/t2", "s3/t3", "s3/t4"])
def test_twists_from_standard(dst):
    tw = cochain_twist(catalog("s3/standard"), catalog(dst))
    assert exact(verify_twist(tw))
    assert exact(verify_twisted_antipode(tw))


def test_twist_to_t2_values():
    src = catalog("s3/standard")
    tw = cochain_twist(src, catalog("s3/t2"))
    X = XI(src)
    one = X.unit()
    d0 = X.delta(0)
    u = X.group(src.k_pos("u"))
    assert tw.chi == d0.tensor(one) + (one - d0).tensor(u)
    assert (tw.chi * tw.chi) == X.unit(2)
    ta = twist_antipode(tw)
    want = d0 * (one - u) + u
    assert ta.alpha == want and ta.beta == want


def test_twist_to_t3_values():
    src = catalog("s3/standard")
    tw = cochain_twist(src, catalog("s3/t3"))
    X = XI(src)
    one = X.unit()
    u = X.group(src.k_pos("u"))
    d1, d2 = X.delta(src.r_pos("uv")), X.delta(src.r_pos("vu"))
    assert tw.chi == X.unit(2) + d2.tensor(u - one)
    ta = twist_antipode(tw)
    assert ta.alpha == one + d1 * (u - one)
    assert ta.beta == one + d2 * (u - one)
    assert ta.alpha * ta.alpha == ta.alpha
    assert ta.beta * ta.beta == ta.beta


@pytest.mark.parametrize("dst", ["s3/t2", "s3/t3", "s3/t4"])
def test_twisted_structure_matches_target(dst):
    src = catalog("s3/standard")
    tw = cochain_twist(src, catalog(dst))
    qs, qd = QuasiHopfData(src), QuasiHopfData(tw.dst)
    cop = twisted_coproduct(tw, qs)
    for b in qs.alg.basis_elements():
        (r, x), = b.coeffs
        assert cop(b) == tw.to_src(qd.coproduct(qd.alg.basis(tw.bar[r], x)))
    assert twisted_phi(tw, qs) == tw.to_src(qd.phi)


def test_twist_needs_same_subgroup():
    with pytest.raises(GroupError):
        cochain_twist(catalog("s3/standard"), catalog("sn/cyclic/4"))


def test_twist_antipode_needs_regular_source():
    tw = cochain_twist(catalog("s3/t3"), catalog("s3/standard"))
    with pytest.raises(PreconditionError):
        twist_antipode(tw)


# -- octonions

def test_octonion_structure():
    rep = verify_octonion()
    assert exact(rep)
    checked = {r.identity: r.checked for r in rep.results}
    assert checked["r_a·r_b = (-1)^{f(a,b)} r_{a+b}"] == 256
    assert checked["r_a·(r_b·r_c) = ±(r_a·r_b)·r_c, -1 iff independent"] == 512


def test_octonion_sign_function():
    # f(a,a) counts the squares: e_a² = -1 for a ≠ 0
    assert all(octonion_f(a, a) == (a != (0, 0, 0)) for a in VECS)
    assert octonion_f((0, 0, 0), (1, 1, 1)) == 0


def test_octonion_coproduct_and_G():
    view = octonion_view()
    qh = QuasiHopfData(view.td)
    for b in VECS:
        for s in (0, 1):
            assert qh.coproduct(qh.alg.delta(view.r(b, s))) == octonion_delta(view, b, s)
    assert qh.G_elem == octonion_G_formula(view)
