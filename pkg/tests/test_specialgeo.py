"""Homogeneous prepotentials, adjoint coordinates, the cubic identity."""

import random
from fractions import Fraction

import pytest
from specfrob.jets import Jet
from specfrob.specialgeo import (GradedFunction, InputError, adjoint_checks,
                                 adjoint_coordinates, cubic,
                                 cubic_identity_check, homogenize,
                                 quadratic_action, restrict)


def psi_cubic(order=6):
    return Jet(1, order, {(3,): Fraction(1, 6)})


def random_psi(rng, n, order, terms=5):
    coeffs = {}
    for _ in range(terms):
        e = tuple(rng.randrange(0, order + 1) for _ in range(n))
        if 0 < sum(e) <= order:
            coeffs[e] = Fraction(rng.randrange(-9, 10), rng.randrange(1, 10))
    return Jet(n, order, coeffs)


# ------------------------------------------------------------------ homogenize


def test_homogenize_cubic():
    hp = homogenize(psi_cubic())
    # single graded piece k=3 with cone exponent 2-3 = -1
    assert set(hp.F.pieces) == {3}
    assert hp.F.piece(3) == Jet(1, 6, {(3,): Fraction(1, 6)})


def test_homogenize_quadratic_has_no_cone_dependence():
    psi = Jet(2, 5, {(1, 1): Fraction(2)})
    hp = homogenize(psi)
    assert set(hp.F.pieces) == {2}  # exponent 2-2 = 0 on the cone variable


def test_homogenize_zero():
    hp = homogenize(Jet.zero(1, 5))
    assert hp.F.is_zero()


def test_restrict_inverts_homogenize():
    rng = random.Random(2)
    for n in (1, 2, 3):
        psi = random_psi(rng, n, 6)
        hp = homogenize(psi)
        back, rep = restrict(hp)
        assert back == psi
        assert rep.all_pass


def test_eps_degree_two():
    rng = random.Random(4)
    hp = homogenize(random_psi(rng, 2, 6))
    assert hp.F.euler_defect().is_zero()


# ---------------------------------------------------------- adjoint coordinates


def test_adjoint_cubic_values():
    hp = homogenize(psi_cubic())
    st = adjoint_coordinates(hp)
    # w1 = dF/dz1 = -z2^3/(6 z1^2): eps-degree 1, piece k=3 with coeff -1/6
    assert st.w[0].eps_degree == 1
    assert st.w[0].piece(3) == Jet(1, 5, {(3,): Fraction(-1, 6)})
    # w2 = z2^2/(2 z1)
    assert st.w[1].piece(2) == Jet(1, 5, {(2,): Fraction(1, 2)})
    # on the chart: w1 = -t^3/6 = -(t d/dt - 2) psi
    psi = psi_cubic()
    euler = psi.euler_apply(shift=-2)
    assert st.w[0].restrict_chart() == -euler


def test_adjoint_zero_and_quadratic():
    assert all(w.is_zero() for w in adjoint_coordinates(homogenize(Jet.zero(1, 5))).w)
    # quadratic psi: w_i = sum A_ij z_j, w_1 = 0
    psi = Jet(2, 5, {(2, 0): Fraction(1, 2)})
    st = adjoint_coordinates(homogenize(psi))
    assert st.w[0].is_zero()
    assert st.w[1].piece(1) == Jet(2, 5, {(1, 0): Fraction(1)})


def test_adjoint_identities_random():
    rng = random.Random(7)
    for n in (1, 2, 3):
        rep = adjoint_checks(homogenize(random_psi(rng, n, 6)))
        assert rep.all_pass, rep.summary_lines()


# ------------------------------------------------------------ quadratic action


def test_quadratic_action_zero_matrix():
    hp = homogenize(psi_cubic())
    hp2 = quadratic_action(hp, [[Fraction(0), Fraction(0)], [Fraction(0), Fraction(0)]])
    assert (hp2.F - hp.F).is_zero()


def test_quadratic_action_cone_square():
    hp = homogenize(psi_cubic())
    A = [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(0)]]
    hp2 = quadratic_action(hp, A)
    # restriction shifts psi by -1/2
    psi2 = hp2.F.restrict_chart()
    assert psi2 == psi_cubic() - Jet.const(Fraction(1, 2), 1, 6)


def test_quadratic_action_torsor():
    rng = random.Random(9)
    hp = homogenize(random_psi(rng, 2, 5))

    def sym(seed):
        r = random.Random(seed)
        A = [[Fraction(r.randrange(-3, 4)) for _ in range(3)] for _ in range(3)]
        for i in range(3):
            for j in range(i):
                A[i][j] = A[j][i]
        return A

    A, B = sym(1), sym(2)
    AB = [[A[i][j] + B[i][j] for j in range(3)] for i in range(3)]
    lhs = quadratic_action(quadratic_action(hp, A), B)
    rhs = quadratic_action(hp, AB)
    assert (lhs.F - rhs.F).is_zero()
    # roundtrip with -A restores F exactly
    negA = [[-A[i][j] for j in range(3)] for i in range(3)]
    assert (quadratic_action(quadratic_action(hp, A), negA).F - hp.F).is_zero()


def test_quadratic_action_rejects_asymmetric():
    hp = homogenize(psi_cubic())
    with pytest.raises(InputError):
        quadratic_action(hp, [[Fraction(0), Fraction(1)], [Fraction(0), Fraction(0)]])


# -------------------------------------------------------------- cubic identity


def test_cubic_value_cubic_prepotential():
    hp = homogenize(psi_cubic())
    c222 = cubic(hp, 1, 1, 1)
    # d^3F/dz2^3 = 1/z1: eps-degree -1, piece k=0 coefficient 1
    assert c222.eps_degree == -1
    assert c222.piece(0) == Jet.const(1, 1, 3)


def test_cubic_identity_cubic_and_random():
    rng = random.Random(12)
    cases = [psi_cubic()] + [random_psi(rng, n, 6) for n in (1, 2, 3)]
    for psi in cases:
        rep = cubic_identity_check(homogenize(psi))
        assert rep.all_pass, rep.summary_lines()


def test_cubic_identity_trivial_for_quadratic():
    psi = Jet(2, 5, {(1, 1): Fraction(3)})
    hp = homogenize(psi)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                assert cubic(hp, i, j, k).is_zero()
    assert cubic_identity_check(hp).all_pass


def test_quadratic_action_leaves_cubics_invariant():
    rng = random.Random(15)
    hp = homogenize(random_psi(rng, 2, 5))
    A = [[Fraction(1), Fraction(2), Fraction(0)],
         [Fraction(2), Fraction(-1), Fraction(3)],
         [Fraction(0), Fraction(3), Fraction(5)]]
    hp2 = quadratic_action(hp, A)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                assert (cubic(hp, i, j, k) - cubic(hp2, i, j, k)).is_zero()


# ----------------------------------------------------- cross-module class law


def test_restrict_of_action_is_low_degree_shift():
    # restrict(quadratic_action(F, A)) - restrict(F) has degree <= 2: the
    # same equivalence class that leaves the Frobenius structure unchanged
    from specfrob.frobenius import build, embed_base_jet, quadratic_shift
    rng = random.Random(18)
    psi = random_psi(rng, 2, 5)
    hp = homogenize(psi)
    A = [[Fraction(2), Fraction(1), Fraction(0)],
         [Fraction(1), Fraction(0), Fraction(-1)],
         [Fraction(0), Fraction(-1), Fraction(4)]]
    psi2, _ = restrict(quadratic_action(hp, A))
    shift = psi2 - psi
    assert shift.degree() <= 2
    fs = build(psi, 2, 5)
    _, rep = quadratic_shift(fs, embed_base_jet(shift, 2, 6))
    assert rep.all_pass


def test_linear_substitute_matches_hand_computation():
    # F = z2^3/(6 z1) pulled back along z1 = z1~ + c z2~, z2 = z2~ gives
    # z2~^3 / (6 (z1~ + c z2~)); on the chart this is t^3/6 * 1/(1+ct)
    c = Fraction(2)
    hp = homogenize(psi_cubic(6))
    A = [[Fraction(1), c], [Fraction(0), Fraction(1)]]
    F2 = hp.F.linear_substitute(A)
    t = Jet.coordinate(0, 1, 6)
    geom = Jet(1, 6, {(k,): (-c) ** k for k in range(7)})
    expect = Jet(1, 6, {(3,): Fraction(1, 6)}) * geom
    assert F2.restrict_chart() == expect
