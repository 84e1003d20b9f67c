"""Quasi-Hopf and *-quasi-Hopf structure of Ξ(R,K), cochain twists, and the example catalog."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable

from .doubles import AlgebraElement, CrossProductAlgebra, XI, xi_counit
from .group_core import (
    FiniteGroup,
    GroupError,
    IdentityResult,
    Report,
    TransversalData,
    build_transversal,
    group_from_elements,
    make_subgroup,
    parse_permutation,
    permutation_of,
    s3,
    symmetric_group,
    verify_matched_pair,
)

TOL = 1e-9


class PreconditionError(ValueError):
    """A structure was requested that the transversal does not support."""


def _result(name: str, residuals: Iterable[tuple[float, dict]], flag_only: bool = False) -> IdentityResult:
    worst, witness, n = 0.0, None, 0
    for res, wit in residuals:
        n += 1
        if res > worst:
            worst = res
        if res > TOL and witness is None:
            witness = wit
    status = "pass" if witness is None else ("flag" if flag_only else "fail")
    return IdentityResult(name, status, float(worst), witness, n)


class QuasiHopfData:
    """Δ, ε, φ, and (when ( )^R is bijective) S, α, β, θ, γ, 𝒢 for one transversal."""

    def __init__(self, td: TransversalData):
        self.td = td
        self.alg: CrossProductAlgebra = XI(td)
        nR, nK = td.nR, td.nK
        dot, act, back, kinv = td.dot, td.act, td.backact, td.kinv
        # Δ(δ_r x) = Σ_{s·t=r} δ_s x ⊗ δ_t (x◁(x^{-1}▷s))
        pairs = defaultdict(list)
        for s in range(nR):
            for t in range(nR):
                pairs[dot[s][t]].append((s, t))
        self._cop = {}
        for r in range(nR):
            for x in range(nK):
                xi = kinv[x]
                self._cop[(r, x)] = [((s, x, t, back[x][act[xi][s]]), 1) for s, t in pairs[r]]

    # -- coalgebra
    def coproduct(self, a: AlgebraElement, leg: int = 0) -> AlgebraElement:
        cop = self._cop
        return a.map_leg(leg, lambda r, x: cop[(r, x)], 2)

    def coproduct_op(self, a: AlgebraElement) -> AlgebraElement:
        return self.coproduct(a).permute([1, 0])

    def counit(self, a: AlgebraElement, leg: int = 0):
        return xi_counit(a, leg)

    def group_element(self, x: int) -> AlgebraElement:
        return self.alg.group(x)

    @cached_property
    def phi(self) -> AlgebraElement:
        """φ = Σ_{r,s} δ_r ⊗ δ_s ⊗ τ(r,s)^{-1}."""
        td = self.td
        out = {}
        for r in range(td.nR):
            for s in range(td.nR):
                y = td.kinv[td.cocycle[r][s]]
                for t in range(td.nR):
                    out[(r, 0, s, 0, t, y)] = 1
        return AlgebraElement(self.alg, 3, out)

    @cached_property
    def phi_inv(self) -> AlgebraElement:
        td = self.td
        out = {}
        for r in range(td.nR):
            for s in range(td.nR):
                y = td.cocycle[r][s]
                for t in range(td.nR):
                    out[(r, 0, s, 0, t, y)] = 1
        return AlgebraElement(self.alg, 3, out)

    # -- antipode
    @property
    def regular(self) -> bool:
        return self.td.regular

    def _require_regular(self) -> None:
        if not self.td.regular:
            raise PreconditionError("( )^R is not bijective; use a twist from a regular transversal")

    def S_basis(self, r: int, x: int) -> tuple[int, int]:
        """S(δ_r x) = δ_{(x^{-1}▷r)^R} ⊗ x^{-1}◁r."""
        td = self.td
        xi = td.kinv[x]
        return td.rightInv[td.act[xi][r]], td.backact[xi][r]

    def S(self, a: AlgebraElement) -> AlgebraElement:
        self._require_regular()
        return a.map_all(lambda r, x: [(self.S_basis(r, x), 1)])

    @cached_property
    def alpha(self) -> AlgebraElement:
        return self.alg.unit()

    @cached_property
    def beta(self) -> AlgebraElement:
        td = self.td
        return AlgebraElement(self.alg, 1, {(r, td.cocycle[r][td.rightInv[r]]): 1 for r in range(td.nR)})

    def antipode(self) -> tuple[Callable[[AlgebraElement], AlgebraElement], AlgebraElement, AlgebraElement]:
        self._require_regular()
        return self.S, self.alpha, self.beta

    # -- star structure
    def theta_basis(self, r: int, x: int) -> tuple[int, int]:
        """θ(δ_r x) = δ_{r^R} θ(x) = δ_{r^R}(x◁(x^{-1}▷r)) (regular case)."""
        td = self.td
        return td.rightInv[r], td.backact[x][td.act[td.kinv[x]][r]]

    def theta(self, a: AlgebraElement) -> AlgebraElement:
        """Antilinear; on tensor powers acts legwise."""
        self._require_regular()
        out = {}
        tb = self.theta_basis
        for key, c in a.coeffs.items():
            nk = []
            for i in range(0, len(key), 2):
                nk.extend(tb(key[i], key[i + 1]))
            out[tuple(nk)] = c.conjugate()
        return AlgebraElement(self.alg, a.degree, out)

    def theta_generators(self, x: int) -> AlgebraElement:
        """θ(x) = Σ_s (x◁s)δ_{s^R}, built from the defining formula."""
        td = self.td
        out = self.alg.zero()
        for s in range(td.nR):
            out = out + self.group_element(td.backact[x][s]) * self.alg.delta(td.rightInv[s])
        return out

    @cached_property
    def gamma(self) -> AlgebraElement:
        """γ = Σ_s τ(s,s^R)^{-1} δ_s."""
        self._require_regular()
        td = self.td
        out = self.alg.zero()
        for s in range(td.nR):
            out = out + self.group_element(td.kinv[td.cocycle[s][td.rightInv[s]]]) * self.alg.delta(s)
        return out

    @cached_property
    def gamma_inv(self) -> AlgebraElement:
        td = self.td
        out = self.alg.zero()
        for s in range(td.nR):
            out = out + self.alg.delta(s) * self.group_element(td.cocycle[s][td.rightInv[s]])
        return out

    def _leg(self, f: int | None, x: int) -> AlgebraElement:
        return self.group_element(x) if f is None else self.alg.basis(f, x)

    @cached_property
    def G_elem(self) -> AlgebraElement:
        """𝒢 = Σ_{s,t} δ_{t^R}τ(s,t)^{-1} ⊗ δ_{s^R}τ(t,t^R)(τ(s,t)◁t^R)^{-1}."""
        self._require_regular()
        td = self.td
        RI, tau, km, ki, back = td.rightInv, td.cocycle, td.kmul, td.kinv, td.backact
        out: dict[tuple, complex] = defaultdict(int)
        for s in range(td.nR):
            for t in range(td.nR):
                tR = RI[t]
                x1 = ki[tau[s][t]]
                x2 = km[tau[t][tR]][ki[back[tau[s][t]][tR]]]
                out[(tR, x1, RI[s], x2)] += 1
        return AlgebraElement(self.alg, 2, out)

    @cached_property
    def G_inv(self) -> AlgebraElement:
        """𝒢^{-1} = Σ τ(s,t)δ_{t^R} ⊗ (τ(s,t)◁t^R)τ(t,t^R)^{-1}δ_{s^R}."""
        self._require_regular()
        td = self.td
        RI, tau, km, ki, back, act = td.rightInv, td.cocycle, td.kmul, td.kinv, td.backact, td.act
        out: dict[tuple, complex] = defaultdict(int)
        for s in range(td.nR):
            for t in range(td.nR):
                tR = RI[t]
                y1 = tau[s][t]
                y2 = km[back[tau[s][t]][tR]][ki[tau[t][tR]]]
                out[(act[y1][tR], y1, act[y2][RI[s]], y2)] += 1
        return AlgebraElement(self.alg, 2, out)

    def star(self, a: AlgebraElement) -> AlgebraElement:
        return a.star()


# ---------------------------------------------------------------------------
# verification suites


def _basis(qh: QuasiHopfData) -> list[tuple[tuple[int, int], AlgebraElement]]:
    return [((r, x), qh.alg.basis(r, x)) for r in range(qh.td.nR) for x in range(qh.td.nK)]


def _lab(qh: QuasiHopfData, key: tuple[int, int]) -> str:
    return f"δ_{qh.td.r_label(key[0])}⊗{qh.td.k_label(key[1])}"


def verify_quasibialgebra(qh: QuasiHopfData, multiplicativity: bool = True) -> Report:
    """Δ algebra map, counit laws, quasi-coassociativity, φ invertible, 3-cocycle, counital φ."""
    alg = qh.alg
    basis = _basis(qh)
    rep = Report(f"quasi-bialgebra {qh.td.name}".strip())
    one1, one2, one3 = alg.unit(1), alg.unit(2), alg.unit(3)
    rep.add(_result("Δ(1) = 1⊗1", [(qh.coproduct(one1).residual(one2), {})]))
    if multiplicativity:
        cop = {k: qh.coproduct(b) for k, b in basis}
        res = []
        for k1, b1 in basis:
            for k2, b2 in basis:
                res.append(((cop[k1] * cop[k2]).residual(qh.coproduct(b1 * b2)),
                            {"a": _lab(qh, k1), "b": _lab(qh, k2)}))
        rep.add(_result("Δ(ab) = Δ(a)Δ(b)", res))
    res_l, res_r = [], []
    for k, b in basis:
        d = qh.coproduct(b)
        res_l.append((qh.counit(d, 0).residual(b), {"a": _lab(qh, k)}))
        res_r.append((qh.counit(d, 1).residual(b), {"a": _lab(qh, k)}))
    rep.add(_result("(ε⊗id)Δ = id", res_l))
    rep.add(_result("(id⊗ε)Δ = id", res_r))
    phi, phii = qh.phi, qh.phi_inv
    rep.add(_result("φφ^{-1} = 1⊗1⊗1", [((phi * phii).residual(one3), {}), ((phii * phi).residual(one3), {})]))
    res = []
    for k, b in basis:
        d = qh.coproduct(b)
        left = qh.coproduct(d, 1)  # (id⊗Δ)Δa
        right = qh.coproduct(d, 0)  # (Δ⊗id)Δa
        res.append(((left * phi).residual(phi * right), {"a": _lab(qh, k)}))
    rep.add(_result("(id⊗Δ)Δa = φ((Δ⊗id)Δa)φ^{-1}", res))
    rep.add(_result("3-cocycle", [(_cocycle_residual(qh), {})]))
    rep.add(_result("(id⊗ε⊗id)φ = 1⊗1", [(qh.counit(phi, 1).residual(one2), {})]))
    return rep


def _cocycle_residual(qh: QuasiHopfData) -> float:
    """(1⊗φ)((id⊗Δ⊗id)φ)(φ⊗1) vs ((id⊗id⊗Δ)φ)((Δ⊗id⊗id)φ)."""
    phi = qh.phi
    one = qh.alg.unit(1)
    lhs = one.tensor(phi) * qh.coproduct(phi, 1) * phi.tensor(one)
    rhs = qh.coproduct(phi, 2) * qh.coproduct(phi, 0)
    return lhs.residual(rhs)


def _contract(qh: QuasiHopfData, X: AlgebraElement, legmaps: list[Callable | None], inserts: list[AlgebraElement | None]) -> AlgebraElement:
    """Σ c · m_1(X^1) ins_1 m_2(X^2) ins_2 ... as a single-leg element."""
    alg = qh.alg
    out = alg.zero()
    cache: dict = {}
    acc: dict[tuple, complex] = defaultdict(int)
    for key, c in X.coeffs.items():
        prod = None
        for leg in range(X.degree):
            f, x = key[2 * leg], key[2 * leg + 1]
            ck = (leg, f, x)
            el = cache.get(ck)
            if el is None:
                el = alg.basis(f, x)
                if legmaps[leg] is not None:
                    el = legmaps[leg](el)
                cache[ck] = el
            prod = el if prod is None else prod * el
            if inserts[leg] is not None:
                prod = prod * inserts[leg]
            if prod.is_zero():
                break
        for k, v in prod.coeffs.items():
            acc[k] += c * v
    return out + AlgebraElement(alg, 1, acc)


def verify_antipode(qh: QuasiHopfData, S: Callable[[AlgebraElement], AlgebraElement] | None = None,
                    alpha: AlgebraElement | None = None, beta: AlgebraElement | None = None,
                    coproduct: Callable[[AlgebraElement], AlgebraElement] | None = None,
                    phi: AlgebraElement | None = None, phi_inv: AlgebraElement | None = None,
                    subject: str | None = None) -> Report:
    """Antimultiplicativity and the four antipode axioms.

    Alternative (S, α, β, Δ, φ) can be supplied, e.g. twisted structure expressed
    in the same algebra.
    """
    if S is None:
        S, alpha, beta = qh.antipode()
    coproduct = coproduct or qh.coproduct
    phi = phi if phi is not None else qh.phi
    phi_inv = phi_inv if phi_inv is not None else qh.phi_inv
    alg = qh.alg
    basis = _basis(qh)
    rep = Report(subject or f"antipode {qh.td.name}".strip())
    res = []
    for k1, b1 in basis:
        for k2, b2 in basis:
            res.append((S(b1 * b2).residual(S(b2) * S(b1)), {"a": _lab(qh, k1), "b": _lab(qh, k2)}))
    rep.add(_result("S(ab) = S(b)S(a)", res))
    r1, r2 = [], []
    for k, b in basis:
        d = coproduct(b)
        eps = qh.counit(b)
        r1.append((_contract(qh, d, [S, None], [alpha, None]).residual(eps * alpha), {"a": _lab(qh, k)}))
        r2.append((_contract(qh, d, [None, S], [beta, None]).residual(eps * beta), {"a": _lab(qh, k)}))
    rep.add(_result("S(ξ1)αξ2 = ε(ξ)α", r1))
    rep.add(_result("ξ1βS(ξ2) = ε(ξ)β", r2))
    one = alg.unit()
    rep.add(_result("φ1βS(φ2)αφ3 = 1", [(_contract(qh, phi, [None, S, None], [beta, alpha, None]).residual(one), {})]))
    rep.add(_result("S(φ^-1)αφ^-2βS(φ^-3) = 1",
                    [(_contract(qh, phi_inv, [S, None, S], [alpha, beta, None]).residual(one), {})]))
    return rep


def verify_star(qh: QuasiHopfData, flag_only: bool = True) -> Report:
    """θ, γ, 𝒢 identities; the (*Gphi)/(*Gstrong) checks flag rather than fail when flag_only."""
    qh._require_regular()
    alg = qh.alg
    basis = _basis(qh)
    rep = Report(f"star {qh.td.name}".strip())
    th = qh.theta
    res = []
    for k1, b1 in basis:
        for k2, b2 in basis:
            res.append((th(b1 * b2).residual(th(b1) * th(b2)), {"a": _lab(qh, k1), "b": _lab(qh, k2)}))
    rep.add(_result("θ(ab) = θ(a)θ(b)", res))
    res = [(th(1j * b).residual(-1j * th(b)), {"a": _lab(qh, k)}) for k, b in basis[:3]]
    rep.add(_result("θ antilinear", res))
    res = [(th(qh.group_element(x)).residual(qh.theta_generators(x)), {"x": qh.td.k_label(x)}) for x in range(qh.td.nK)]
    res += [(th(alg.delta(s)).residual(alg.delta(qh.td.rightInv[s])), {"s": qh.td.r_label(s)}) for s in range(qh.td.nR)]
    rep.add(_result("θ on generators", res))
    g, gi = qh.gamma, qh.gamma_inv
    rep.add(_result("γγ^{-1} = 1", [((g * gi).residual(alg.unit()), {}), ((gi * g).residual(alg.unit()), {})]))
    rep.add(_result("θ(γ) = γ", [(th(g).residual(g), {})]))
    rep.add(_result("θ² = γ( )γ^{-1}", [(th(th(b)).residual(g * b * gi), {"a": _lab(qh, k)}) for k, b in basis]))
    G, Gi = qh.G_elem, qh.G_inv
    one2 = alg.unit(2)
    rep.add(_result("𝒢𝒢^{-1} = 1⊗1", [((G * Gi).residual(one2), {}), ((Gi * G).residual(one2), {})]))
    res = [(qh.coproduct(th(b)).residual(Gi * th(qh.coproduct_op(b)) * G), {"a": _lab(qh, k)}) for k, b in basis]
    rep.add(_result("Δθ = 𝒢^{-1}(θ⊗θ)(Δ^op)𝒢", res))
    rep.add(_result("(ε⊗id)𝒢 = (id⊗ε)𝒢 = 1",
                    [(qh.counit(G, 0).residual(alg.unit()), {}), (qh.counit(G, 1).residual(alg.unit()), {})]))
    one = alg.unit()
    lhs = th(qh.phi.permute([2, 1, 0])) * one.tensor(G) * qh.coproduct(G, 1) * qh.phi
    rhs = G.tensor(one) * qh.coproduct(G, 0)
    rep.add(_result("(*Gphi)", [(lhs.residual(rhs), {})], flag_only=flag_only))
    lhs = g.tensor(g) * qh.coproduct(gi)
    rhs = th(G.permute([1, 0])) * G
    rep.add(_result("(*Gstrong)", [(lhs.residual(rhs), {})], flag_only=flag_only))
    rep.add(_result("θ = *∘S", [(th(b).residual(qh.S(b).star()), {"a": _lab(qh, k)}) for k, b in basis]))
    return rep


# ---------------------------------------------------------------------------
# cochain twists


@dataclass
class CochainTwist:
    """χ = Σ_r δ_r ⊗ c_r with c_r = r^{-1} r̄, written in the source algebra."""

    src: TransversalData
    dst: TransversalData
    bar: tuple[int, ...]  # source R position -> target R position in the same coset
    c: tuple[int, ...]  # source R position -> K position of r^{-1} r̄
    chi: AlgebraElement
    chi_inv: AlgebraElement

    def to_src(self, a: AlgebraElement) -> AlgebraElement:
        """Carry a target-algebra element to the source algebra via δ_r̄ ↦ δ_r."""
        unbar = {b: r for r, b in enumerate(self.bar)}
        alg = XI(self.src)
        out = {}
        for key, v in a.coeffs.items():
            out[tuple(unbar[k] if i % 2 == 0 else k for i, k in enumerate(key))] = v
        return AlgebraElement(alg, a.degree, out)


def cochain_twist(src: TransversalData, dst: TransversalData) -> CochainTwist:
    G = src.group
    if dst.group is not G or dst.subgroup.members != src.subgroup.members:
        raise GroupError("twist needs the same G and K")
    bar, c = [], []
    for r in range(src.nR):
        re = src.reps[r]
        hits = [b for b in range(dst.nR) if G.table[G.inv[re]][dst.reps[b]] in set(src.subgroup.members)]
        if len(hits) != 1:
            raise GroupError("representatives are not coset-aligned")
        bar.append(hits[0])
        c.append(src.k_pos(G.table[G.inv[re]][dst.reps[hits[0]]]))
    alg = XI(src)
    chi = AlgebraElement(alg, 2, {(r, 0, t, c[r]): 1 for r in range(src.nR) for t in range(src.nR)})
    chi_inv = AlgebraElement(alg, 2, {(r, 0, t, src.kinv[c[r]]): 1 for r in range(src.nR) for t in range(src.nR)})
    return CochainTwist(src, dst, tuple(bar), tuple(c), chi, chi_inv)


def twisted_coproduct(tw: CochainTwist, qh: QuasiHopfData) -> Callable[[AlgebraElement], AlgebraElement]:
    return lambda a: tw.chi_inv * qh.coproduct(a) * tw.chi


def twisted_phi(tw: CochainTwist, qh: QuasiHopfData) -> AlgebraElement:
    """χ23^{-1}((id⊗Δ)χ^{-1}) φ ((Δ⊗id)χ) χ12."""
    one = qh.alg.unit()
    return one.tensor(tw.chi_inv) * qh.coproduct(tw.chi_inv, 1) * qh.phi * qh.coproduct(tw.chi, 0) * tw.chi.tensor(one)


def verify_twist(tw: CochainTwist) -> Report:
    src, dst = tw.src, tw.dst
    qs, qd = QuasiHopfData(src), QuasiHopfData(dst)
    alg = qs.alg
    rep = Report(f"twist {src.name}->{dst.name}")
    one, one2 = alg.unit(), alg.unit(2)
    rep.add(_result("χχ^{-1} = 1⊗1", [((tw.chi * tw.chi_inv).residual(one2), {})]))
    rep.add(_result("(ε⊗id)χ = (id⊗ε)χ = 1",
                    [(qs.counit(tw.chi, 0).residual(one), {}), (qs.counit(tw.chi, 1).residual(one), {})]))
    # algebra identification δ_r̄ ↔ δ_r
    res = []
    for x in range(src.nK):
        for r in range(src.nR):
            res.append((float(tw.bar[src.act[x][r]] != dst.act[x][tw.bar[r]]), {"x": src.k_label(x), "r": src.r_label(r)}))
    rep.add(_result("algebra identification x▷̄r̄ = (x▷r)‾", res))
    dcop = twisted_coproduct(tw, qs)
    res = []
    for r in range(src.nR):
        for x in range(src.nK):
            b = alg.basis(r, x)
            target = tw.to_src(qd.coproduct(qd.alg.basis(tw.bar[r], x)))
            res.append((dcop(b).residual(target), {"a": f"δ_{src.r_label(r)}⊗{src.k_label(x)}"}))
    rep.add(_result("Δ̄ = χ^{-1}Δχ", res))
    rep.add(_result("φ̄ = χ23^{-1}((id⊗Δ)χ^{-1})φ((Δ⊗id)χ)χ12", [(twisted_phi(tw, qs).residual(tw.to_src(qd.phi)), {})]))
    c, km, ki = tw.c, src.kmul, src.kinv
    res_dot, res_tau, res_back = [], [], []
    for s in range(src.nR):
        for t in range(src.nR):
            u = src.act[c[s]][t]
            st = src.dot[s][u]
            res_dot.append((float(dst.dot[tw.bar[s]][tw.bar[t]] != tw.bar[st]), {"s": src.r_label(s), "t": src.r_label(t)}))
            want = km[km[km[ki[c[st]]][src.cocycle[s][u]]][src.backact[c[s]][t]]][c[t]]
            res_tau.append((float(dst.cocycle[tw.bar[s]][tw.bar[t]] != want), {"s": src.r_label(s), "t": src.r_label(t)}))
    for x in range(src.nK):
        for r in range(src.nR):
            want = km[km[ki[c[src.act[x][r]]]][src.backact[x][r]]][c[r]]
            res_back.append((float(dst.backact[x][tw.bar[r]] != want), {"x": src.k_label(x), "r": src.r_label(r)}))
    rep.add(_result("s̄·̄t̄ = (s·(c_s▷t))‾", res_dot))
    rep.add(_result("τ̄(s̄,t̄) = c^{-1}_{s·c_s▷t} τ(s,c_s▷t)(c_s◁t)c_t", res_tau))
    rep.add(_result("x◁̄r̄ = c^{-1}_{x▷r}(x◁r)c_r", res_back))
    return rep


@dataclass
class TwistedAntipode:
    S: Callable[[AlgebraElement], AlgebraElement]
    alpha: AlgebraElement
    beta: AlgebraElement
    alpha_formula: AlgebraElement
    beta_formula: AlgebraElement


def twist_antipode(tw: CochainTwist, src_qh: QuasiHopfData | None = None) -> TwistedAntipode:
    """ᾱ = S(χ^1)αχ^2, β̄ = χ^{-1}βS(χ^{-2}), cross-checked against the closed forms."""
    qs = src_qh or QuasiHopfData(tw.src)
    if not tw.src.regular:
        raise PreconditionError("source transversal is not regular")
    S, alpha, beta = qs.antipode()
    a_bar = _contract(qs, tw.chi, [S, None], [alpha, None])
    b_bar = _contract(qs, tw.chi_inv, [None, S], [beta, None])
    td, c = tw.src, tw.c
    alg = qs.alg
    a_f = alg.zero()
    b_f = alg.zero()
    for r in range(td.nR):
        rR = td.rightInv[r]
        a_f = a_f + alg.delta(rR) * qs.group_element(c[r])
        y = td.kmul[td.cocycle[r][rR]][td.kinv[td.backact[td.kinv[c[r]]][rR]]]
        b_f = b_f + alg.delta(r) * qs.group_element(y)
    return TwistedAntipode(S, a_bar, b_bar, a_f, b_f)


def verify_twisted_antipode(tw: CochainTwist) -> Report:
    qs = QuasiHopfData(tw.src)
    ta = twist_antipode(tw, qs)
    rep = verify_antipode(qs, ta.S, ta.alpha, ta.beta, coproduct=twisted_coproduct(tw, qs), phi=twisted_phi(tw, qs),
                          phi_inv=tw.to_src(QuasiHopfData(tw.dst).phi_inv),
                          subject=f"twisted antipode {tw.src.name}->{tw.dst.name}")
    rep.add(_result("ᾱ = Σ δ_{r^R} c_r", [(ta.alpha.residual(ta.alpha_formula), {})]))
    rep.add(_result("β̄ = Σ δ_r τ(r,r^R)(c_r^{-1}◁r^R)^{-1}", [(ta.beta.residual(ta.beta_formula), {})]))
    return rep


# ---------------------------------------------------------------------------
# catalog


_S3 = None


def _s3_group() -> FiniteGroup:
    global _S3
    if _S3 is None:
        _S3 = s3()
    return _S3


S3_TRANSVERSALS = {
    "standard": ["e", "uv", "vu"],
    "t2": ["e", "w", "v"],
    "t3": ["e", "uv", "v"],
    "t4": ["e", "w", "vu"],
}


def catalog_s3(which: str) -> TransversalData:
    G = _s3_group()
    K = make_subgroup(G, ["e", "u"])
    return build_transversal(G, K, S3_TRANSVERSALS[which], name=f"s3/{which}")


_SN: dict[int, FiniteGroup] = {}


def _sn_group(n: int) -> FiniteGroup:
    if n not in _SN:
        _SN[n] = _s3_group() if n == 3 else symmetric_group(n)
    return _SN[n]


def _perm_index(G: FiniteGroup, perm: tuple[int, ...]) -> int:
    n = len(perm)
    for g in range(G.order):
        p = permutation_of(G, g) if G.name != "S3" else _S3_PERMS[G.labels[g]]
        p = p + tuple(range(len(p), n))
        if p == perm:
            return g
    raise GroupError("permutation not found")


_S3_PERMS = {"e": (0, 1, 2), "u": (1, 0, 2), "v": (0, 2, 1), "w": (2, 1, 0), "uv": (1, 2, 0), "vu": (2, 0, 1)}


def sn_permutation(G: FiniteGroup, g: int, n: int) -> tuple[int, ...]:
    p = _S3_PERMS[G.labels[g]] if G.name == "S3" else permutation_of(G, g)
    return p + tuple(range(len(p), n))


def catalog_sn(n: int, variant: str) -> TransversalData:
    """S_{n-1} ⊂ S_n with R = Z_n (cyclic) or R = {e,(i n)} (transpositions)."""
    if not 3 <= n <= 6:
        raise GroupError("n must lie in 3..6")
    G = _sn_group(n)
    K = make_subgroup(G, [g for g in range(G.order) if sn_permutation(G, g, n)[n - 1] == n - 1])
    if variant == "cyclic":
        c = tuple((i + 1) % n for i in range(n))  # (1 2 ... n)
        reps, p = [], tuple(range(n))
        for _ in range(n):
            reps.append(_perm_index(G, p))
            p = tuple(c[i] for i in p)
        # order reps by the point n is sent to: c^i maps n to i
        reps = sorted(reps, key=lambda g: (sn_permutation(G, g, n)[n - 1] + 1) % n)
    elif variant == "transpositions":
        reps = [0]
        for i in range(n - 1):
            t = list(range(n))
            t[i], t[n - 1] = n - 1, i
            reps.append(_perm_index(G, tuple(t)))
    else:
        raise GroupError(f"unknown variant {variant!r}")
    td = build_transversal(G, K, reps, name=f"sn/{variant}/{n}")
    if not verify_matched_pair(td).ok:
        raise AssertionError("catalog transversal fails matched-pair identities")
    _check_sn(td, n, variant)
    return td


def _check_sn(td: TransversalData, n: int, variant: str) -> None:
    G = td.group
    perm = lambda g: sn_permutation(G, g, n)  # noqa: E731
    if variant == "cyclic":
        if any(td.cocycle[r][s] for r in range(n) for s in range(n)):
            raise AssertionError("τ should be trivial for R = Z_n")
        point = [(perm(td.reps[r])[n - 1] + 1) % n for r in range(n)]  # r_i ↔ i
        for x in range(td.nK):
            sig = perm(td.k_elem(x))
            sg = lambda i: (sig[(i - 1) % n] + 1) % n  # σ on Z_n with n ≡ 0  # noqa: E731
            for r in range(n):
                i = point[r]
                if point[td.act[x][r]] != sg(i):
                    raise AssertionError("σ▷i should be σ(i)")
                back = perm(td.k_elem(td.backact[x][r]))
                for j in range(n):
                    want = (sg((i + j) % n) - sg(i)) % n
                    if (back[(j - 1) % n] + 1) % n != want:
                        raise AssertionError("(σ◁i)(j) should be σ(i+j)-σ(i)")
    else:
        for a in range(1, n):
            for b in range(1, n):
                if a != b:
                    if td.dot[a][b] != b:
                        raise AssertionError("(i n)·(j n) should be (j n)")
                    ij = list(range(n))
                    i, j = perm(td.reps[a]).index(n - 1), perm(td.reps[b]).index(n - 1)
                    ij[i], ij[j] = j, i
                    if perm(td.k_elem(td.cocycle[a][b])) != tuple(ij):
                        raise AssertionError("τ((i n),(j n)) should be (ij)")


# -- octonions


def _dot3(a, b) -> int:
    return (a[0] & b[0]) ^ (a[1] & b[1]) ^ (a[2] & b[2])


def _cl_sign(a, b) -> int:
    """Σ_{i≥j} a_i b_j mod 2."""
    s = 0
    for i in range(3):
        for j in range(i + 1):
            s ^= a[i] & b[j]
    return s


def _xor(a, b):
    return (a[0] ^ b[0], a[1] ^ b[1], a[2] ^ b[2])


def _cross(a, b):
    return ((a[1] & b[2]) ^ (a[2] & b[1]), (a[2] & b[0]) ^ (a[0] & b[2]), (a[0] & b[1]) ^ (a[1] & b[0]))


def octonion_f(a, b) -> int:
    return _cl_sign(a, b) ^ (a[0] & a[1] & b[2]) ^ (a[0] & b[1] & a[2]) ^ (b[0] & a[1] & a[2])


VECS = [tuple((i >> k) & 1 for k in (2, 1, 0)) for i in range(8)]  # (a1,a2,a3), lexicographic


def _octo_mul(p, q):
    s1, a, k = p
    s2, b, l = q
    return (s1 ^ s2 ^ _dot3(k, b) ^ _cl_sign(a, b), _xor(a, b), _xor(k, l))


def _octo_label(el) -> str:
    s, a, k = el
    lab = "".join(map(str, a)) + "|" + "".join(map(str, k))
    return ("-" if s else "+") + lab


def r_element(a, sign: int = 0):
    """r_a = e_a g1^{a2a3} g2^{a1a3} g3^{a1a2} (times -1 if sign)."""
    return (sign, tuple(a), (a[1] & a[2], a[0] & a[2], a[0] & a[1]))


def catalog_octonion() -> tuple[FiniteGroup, TransversalData]:
    """G = Cl3 ⋊ Z2^3 of order 128 with K = Z2^3 and R = {±r_a}."""
    zero = (0, 0, 0)
    elems = [(s, a, k) for s in (0, 1) for a in VECS for k in VECS]
    elems.sort(key=lambda e: (e != (0, zero, zero), e))
    G = group_from_elements(elems, _octo_mul, [_octo_label(e) for e in elems], name="Cl3xZ2^3")
    pos = {e: i for i, e in enumerate(elems)}
    K = make_subgroup(G, [pos[(0, zero, k)] for k in VECS])
    reps = [pos[r_element(a, s)] for s in (0, 1) for a in VECS]
    td = build_transversal(G, K, reps, name="octonion")
    return G, td


@dataclass
class OctonionView:
    """Coordinates of the octonion transversal: R position ↔ (sign, a), K position ↔ k."""

    G: FiniteGroup
    td: TransversalData
    elems: list

    @cached_property
    def r_of(self) -> dict[tuple[int, tuple], int]:
        return {(self.elems[self.td.reps[r]][0], self.elems[self.td.reps[r]][1]): r for r in range(self.td.nR)}

    @cached_property
    def k_of(self) -> dict[tuple, int]:
        return {self.elems[self.td.k_elem(x)][2]: x for x in range(self.td.nK)}

    def r(self, a, sign: int = 0) -> int:
        return self.r_of[(sign, tuple(a))]

    def k(self, v) -> int:
        return self.k_of[tuple(v)]


def octonion_view() -> OctonionView:
    G, td = catalog_octonion()
    zero = (0, 0, 0)
    elems = [(s, a, k) for s in (0, 1) for a in VECS for k in VECS]
    elems.sort(key=lambda e: (e != (0, zero, zero), e))
    return OctonionView(G, td, elems)


def _independent(*vs) -> bool:
    span = {(0, 0, 0)}
    for v in vs:
        if v in span:
            return False
        span |= {_xor(v, w) for w in span}
    return True


def verify_octonion(view: OctonionView | None = None) -> Report:
    """Signed products, τ, actions, inverses, quasi-commutativity and associator signs."""
    view = view or octonion_view()
    td = view.td
    rep = Report("octonion structure")
    res_dot, res_tau = [], []
    for sa in (0, 1):
        for a in VECS:
            for sb in (0, 1):
                for b in VECS:
                    ra, rb = view.r(a, sa), view.r(b, sb)
                    want = view.r(_xor(a, b), sa ^ sb ^ octonion_f(a, b))
                    res_dot.append((float(td.dot[ra][rb] != want), {"a": a, "b": b, "signs": (sa, sb)}))
                    res_tau.append((float(td.cocycle[ra][rb] != view.k(_cross(a, b))), {"a": a, "b": b}))
    rep.add(_result("r_a·r_b = (-1)^{f(a,b)} r_{a+b}", res_dot))
    rep.add(_result("τ(r_a,r_b) = g^{a×b}", res_tau))
    res_act, res_back = [], []
    for k in VECS:
        for s in (0, 1):
            for b in VECS:
                x, rb = view.k(k), view.r(b, s)
                res_act.append((float(td.act[x][rb] != view.r(b, s ^ _dot3(k, b))), {"k": k, "b": b}))
                res_back.append((float(td.backact[x][rb] != x), {"k": k, "b": b}))
    rep.add(_result("g^a▷r_b = (-1)^{a·b} r_b", res_act))
    rep.add(_result("◁ trivial", res_back))
    res = []
    for s in (0, 1):
        for a in VECS:
            want = view.r(a, s ^ (a != (0, 0, 0)))  # r_a^{-1} = -r_a for a ≠ 0
            ra = view.r(a, s)
            two_sided = td.dot[ra][want] == 0 and td.dot[want][ra] == 0
            res.append((float(td.rightInv[ra] != want or not two_sided), {"a": a}))
    rep.add(_result("two-sided inverse r_a^{-1}", res))
    rep.add(_result("regular", [(float(not td.regular), {})]))
    e110 = view.r((1, 1, 0))
    e101 = view.r((1, 0, 1))
    rep.add(_result("e110·e101 = -e011", [(float(td.dot[e110][e101] != view.r((0, 1, 1), 1)), {})]))
    res = []
    for a in VECS:
        for b in VECS:
            ra, rb = view.r(a), view.r(b)
            flip = _sign_of(view, td.dot[ra][rb]) ^ _sign_of(view, td.dot[rb][ra])
            res.append((float(flip != _independent(a, b)), {"a": a, "b": b}))
    rep.add(_result("r_a·r_b = ±r_b·r_a, -1 iff independent", res))
    res = []
    for a in VECS:
        for b in VECS:
            for c in VECS:
                ra, rb, rc = view.r(a), view.r(b), view.r(c)
                flip = _sign_of(view, td.dot[ra][td.dot[rb][rc]]) ^ _sign_of(view, td.dot[td.dot[ra][rb]][rc])
                res.append((float(flip != _independent(a, b, c)), {"a": a, "b": b, "c": c}))
    rep.add(_result("r_a·(r_b·r_c) = ±(r_a·r_b)·r_c, -1 iff independent", res))
    return rep


def _sign_of(view: OctonionView, r: int) -> int:
    return view.elems[view.td.reps[r]][0]


def octonion_G_formula(view: OctonionView) -> AlgebraElement:
    """Σ_{a,b} δ_{r_a} g^{a×b} ⊗ δ_{r_b} g^{a×b}, summed over signed representatives."""
    alg = XI(view.td)
    out = {}
    for sa in (0, 1):
        for a in VECS:
            for sb in (0, 1):
                for b in VECS:
                    x = view.k(_cross(a, b))
                    out[(view.r(a, sa), x, view.r(b, sb), x)] = 1
    return AlgebraElement(alg, 2, out)


def octonion_delta(view: OctonionView, b, sb: int = 0) -> AlgebraElement:
    """Δδ_{±r_b} = Σ_{sign,a} δ_{r} ⊗ δ_{r'} over pairs with r·r' = ±r_b."""
    alg = XI(view.td)
    out = {}
    for sa in (0, 1):
        for a in VECS:
            c = _xor(a, b)
            sc = sb ^ sa ^ octonion_f(a, c)
            out[(view.r(a, sa), 0, view.r(c, sc), 0)] = 1
    return AlgebraElement(alg, 2, out)


# -- catalog by name

CATALOG_NAMES = ["s3/standard", "s3/t2", "s3/t3", "s3/t4"] + [f"sn/{v}/{n}" for v in ("cyclic", "transpositions")
                                                              for n in range(3, 7)] + ["octonion"]


def catalog(name: str) -> TransversalData:
    parts = name.split("/")
    if parts[0] == "s3" and len(parts) == 2 and parts[1] in S3_TRANSVERSALS:
        return catalog_s3(parts[1])
    if parts[0] == "sn" and len(parts) == 3:
        return catalog_sn(int(parts[2]), parts[1])
    if name == "octonion":
        return catalog_octonion()[1]
    raise GroupError(f"unknown catalog entry {name!r}")


def parse_element_list(G: FiniteGroup, items: Iterable[str]) -> list[int]:
    out = []
    for it in items:
        try:
            out.append(G.index(it))
        except GroupError:
            out.append(G.labels.index(parse_cycle_label(it)))
    return out


def parse_cycle_label(s: str) -> str:
    from .group_core import cycle_notation

    return cycle_notation(parse_permutation(s))

