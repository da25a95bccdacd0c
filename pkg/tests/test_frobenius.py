"""The block-form Frobenius structure: axioms, shifts, automorphisms."""

import random
from fractions import Fraction

import pytest
from specfrob.frobenius import (AutomorphismCandidate, FrobeniusStructure,
                                InputError, automorphism_check, build,
                                c_from_potential, metric_rows,
                                quadratic_shift, verify_axioms, weights)
from specfrob.jets import INF, Jet


def psi_cubic(order=5):
    return Jet(1, order, {(3,): Fraction(1, 6)})


def random_psi(rng, n, order, terms=5):
    coeffs = {}
    for _ in range(terms):
        e = tuple(rng.randrange(0, order + 1) for _ in range(n))
        if 0 < sum(e) <= order:
            coeffs[e] = Fraction(rng.randrange(-9, 10), rng.randrange(1, 10))
    return Jet(n, order, coeffs)


# ----------------------------------------------------------------------- build


def test_build_cubic_products_and_euler():
    fs = build(psi_cubic(), 1, 5)
    one = Jet.const(1, 4, INF)
    # d2 o d2 = d3 (third derivative of t^3/6 is 1), d2 o d3 = d4
    assert fs.c[2][1][1] == one
    assert fs.c[3][1][2] == one
    assert fs.euler_weights == [1, 0, -1, -2]


def test_build_zero_psi_products():
    fs = build(Jet.zero(1), 1, 5)
    for g in range(4):
        assert fs.c[g][1][1].is_zero()
    assert fs.c[3][1][2] == Jet.const(1, 4, INF)  # d_i o d_{i+n} survives


def test_metric_pattern_n1():
    g = metric_rows(1)
    assert g[0][3] == 1 and g[1][2] == 1
    assert sum(1 for r in g for x in r if x != 0) == 4


def test_build_rejects_nonzero_constant():
    with pytest.raises(InputError):
        build(Jet.const(2, 1, 5), 1, 5)


def test_c_depends_only_on_base_block():
    rng = random.Random(5)
    fs = build(random_psi(rng, 2, 5), 2, 5)
    base_vars = {1, 2}
    for g in range(6):
        for a in range(6):
            for b in range(6):
                for e in fs.c[g][a][b].coeffs:
                    assert all(e[v] == 0 for v in range(6) if v not in base_vars)


# ---------------------------------------------------------------------- axioms


def test_axioms_pass_cubic_and_random():
    rng = random.Random(11)
    cases = [(psi_cubic(), 1)]
    for n in (1, 2, 3):
        cases.append((random_psi(rng, n, 5), n))
    for psi, n in cases:
        rep = verify_axioms(build(psi, n, 5))
        assert rep.all_pass, rep.summary_lines()
        assert len(rep.checks) == 8


def test_axioms_zero_psi_and_eigenvalues():
    fs = build(Jet.zero(2), 2, 5)
    rep = verify_axioms(fs)
    assert rep.all_pass
    # nabla E has eigenvalues 1 - p with p = (0,1,1,2,2,3); the Lie_E weights
    # are p - 1 = {-1, 0, 0, 1, 1, 2}
    assert sorted(fs.euler_weights) == [-2, -1, -1, 0, 0, 1]


def test_inconsistent_structure_detected():
    # set c^4_{22} to t2 while keeping Phi: potentiality must fail with witness
    fs = build(psi_cubic(), 1, 5)
    t2 = Jet.coordinate(1, 4, 5)
    fs.c[3][1][1] = t2
    fs.c[3][1][1] = t2
    rep = verify_axioms(fs)
    pot = rep.get("potentiality")
    assert not pot.passed
    assert pot.witness is not None


def test_potential_route_matches_build_route():
    rng = random.Random(23)
    psi = random_psi(rng, 2, 5)
    fs = build(psi, 2, 5)
    c2 = c_from_potential(fs.phi, fs.g, fs.n)
    for g in range(6):
        for a in range(6):
            for b in range(6):
                assert fs.c[g][a][b] == c2[g][a][b]


def test_euler_annihilates_potential():
    rng = random.Random(31)
    psi = random_psi(rng, 3, 5)
    fs = build(psi, 3, 5)
    E = fs.euler_field()
    ephi = Jet.zero(fs.m, None, fs.kind)
    for a in range(fs.m):
        if not E[a].is_zero():
            ephi = ephi + E[a] * fs.phi.diff(a)
    assert ephi.is_zero()


# ------------------------------------------------------------- quadratic shift


def test_quadratic_shift_identity():
    fs = build(psi_cubic(), 1, 5)
    Q = Jet(4, INF, {(0, 2, 0, 0): Fraction(1)})  # t2^2
    _, rep = quadratic_shift(fs, Q)
    assert rep.all_pass


def test_quadratic_shift_constant():
    fs = build(psi_cubic(), 1, 5)
    _, rep = quadratic_shift(fs, Jet.const(7, 4, INF))
    assert rep.all_pass


def test_quadratic_shift_rejects_cubic():
    fs = build(psi_cubic(), 1, 5)
    Q = Jet(4, INF, {(0, 1, 1, 1): Fraction(1)})  # t2 t3 t4
    with pytest.raises(InputError):
        quadratic_shift(fs, Q)


# --------------------------------------------------------------- automorphisms


def zero_gamma(n, order=5):
    return [[Jet.zero(n, order) for _ in range(n)] for _ in range(n)]


def test_identity_is_automorphism():
    fs = build(psi_cubic(), 1, 5)
    res = automorphism_check(fs, AutomorphismCandidate(Fraction(1), zero_gamma(1)))
    assert res["is_automorphism"] and res["routes_agree"]
    assert res["forced_beta"] == 1


def test_gamma_obstruction():
    # n=1, psi = t^3/6, beta=1, gamma33 = 1: (d2 o d2)(phi4) = 2 t3 != 0
    fs = build(psi_cubic(), 1, 5)
    gamma = [[Jet.const(1, 1, 5)]]
    res = automorphism_check(fs, AutomorphismCandidate(Fraction(1), gamma))
    assert not res["is_automorphism"]
    assert not res["conditions_pass"]
    assert res["routes_agree"]


def test_beta_free_when_psi_flat():
    # psi = 0: any beta and gamma give an automorphism
    fs = build(Jet.zero(1, 5), 1, 5)
    gamma = [[Jet(1, 5, {(1,): Fraction(2)})]]
    res = automorphism_check(fs, AutomorphismCandidate(Fraction(5), gamma))
    assert res["is_automorphism"] and res["routes_agree"]
    assert res["forced_beta"] is None


def test_beta_forced_to_one():
    fs = build(psi_cubic(), 1, 5)
    res = automorphism_check(fs, AutomorphismCandidate(Fraction(5), zero_gamma(1)))
    assert not res["is_automorphism"]
    assert res["forced_beta"] == 1
    assert res["routes_agree"]


def test_nontrivial_gamma_kernel_direction():
    # n=2 with psi depending only on t2: gamma supported on the t3-dual block
    # satisfies the obstruction and gives a genuine automorphism
    psi = Jet(2, 5, {(3, 0): Fraction(1, 6)})
    fs = build(psi, 2, 5)
    gamma = zero_gamma(2)
    gamma[1][1] = Jet.const(1, 2, 5)  # couples only t5 t5, killed by d3-products
    res = automorphism_check(fs, AutomorphismCandidate(Fraction(1), gamma))
    assert res["is_automorphism"] and res["routes_agree"]


# --------------------------------------------------------- cross-module origin


def test_graded_origin_equals_structure_constants():
    from specfrob.vhs import build_lemma24, graded_algebra_at_origin
    rng = random.Random(41)
    psi = random_psi(rng, 2, 5)
    model = build_lemma24(psi, 2, 5)
    _, c_adapted, g0 = graded_algebra_at_origin(model, Fraction(1))
    fs = build(psi, 2, 5)
    for g in range(6):
        for a in range(6):
            for b in range(6):
                assert c_adapted[g][a][b] == fs.c[g][a][b].constant_term()
    assert g0 == fs.g
