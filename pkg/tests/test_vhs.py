"""Flat-frame model construction, verification, and extraction."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from specfrob import frobenius
from specfrob.jets import INF, Jet, JetMatrix, invert_scalar_matrix
from specfrob.vhs import (FlatFrameModel, InputError, PairingMatrix,
                          build_lemma24, connection, connection_closed_form,
                          extract_lemma21, graded_algebra_at_origin,
                          lagrangian_check, period_map, verify_vhf)


def psi_cubic(order=6):
    return Jet(1, order, {(3,): Fraction(1, 6)})


def random_psi(rng, n, order, terms=5, allow_low_degree=True):
    coeffs = {}
    for _ in range(terms):
        e = tuple(rng.randrange(0, order + 1) for _ in range(n))
        d = sum(e)
        if d == 0 or d > order or (not allow_low_degree and d < 3):
            continue
        coeffs[e] = Fraction(rng.randrange(-9, 10), rng.randrange(1, 10))
    return Jet(n, order, coeffs)


# -------------------------------------------------------------- pairing matrix


def test_pairing_matrix_pattern():
    S = PairingMatrix.standard(2)
    rows = S.rows
    assert rows[0][5] == -1 and rows[5][0] == 1
    assert rows[1][3] == 1 and rows[2][4] == 1
    for a in range(6):
        for b in range(6):
            assert rows[a][b] == -rows[b][a]
    assert S.determinant_nonzero()


# ------------------------------------------------------------------- lemma 2.4


def test_build_cubic_generator_column():
    # oracle: t*psi' - 2 psi = t^3/2 - t^3/3 = t^3/6 by direct arithmetic
    psi = psi_cubic()
    t = Jet.coordinate(0, 1, 6)
    oracle_last = t * psi.diff(0) - psi.scale(2)
    model = build_lemma24(psi, 1, 6)
    col = model.V.column(0)
    assert col[0] == Jet.const(1, 1, 6)
    assert col[1] == t
    assert col[2] == Jet(1, 5, {(2,): Fraction(1, 2)})
    assert col[3] == oracle_last
    assert col[3] == Jet(1, 6, {(3,): Fraction(1, 6)})


def test_build_zero_psi_column():
    model = build_lemma24(Jet.zero(1), 1, 5)
    col = model.V.column(0)
    assert col[0] == Jet.const(1, 1, 5)
    assert col[1] == Jet.coordinate(0, 1, 5)
    assert col[2].is_zero() and col[3].is_zero()


def test_build_euler_kills_quadratic():
    # n=2, psi = t2 t3: the Euler-operator coefficient vanishes
    psi = Jet(2, 5, {(1, 1): Fraction(1)})
    model = build_lemma24(psi, 2, 5)
    assert model.V.column(0)[5].is_zero()


def test_build_rejects_constant_term():
    with pytest.raises(InputError):
        build_lemma24(Jet.const(1, 1, 5), 1, 5)


def test_hessian_entries_in_section_matrix():
    # n=2, psi = t2^2 t3 / 2: the degree-2 column for v_2 carries the Hessian
    # row (t3, t2) in its degree-1 slots (second partials of psi)
    psi = Jet(2, 6, {(2, 1): Fraction(1, 2)})
    model = build_lemma24(psi, 2, 6)
    col = model.V.column(1)
    assert col[3] == psi.diff(0).diff(0)  # = t3
    assert col[4] == psi.diff(0).diff(1)  # = t2


# ------------------------------------------------------------------ connection


def test_connection_cubic():
    model = build_lemma24(psi_cubic(), 1, 6)
    conn = connection(model)
    G = conn.gammas[0]
    # third derivative of t^3/6 is 1
    assert G[(2, 1)] == Jet.const(1, 1, 3)
    assert G[(1, 0)] == Jet.const(1, 1, 5)
    assert G[(3, 2)] == Jet.const(1, 1, 5)


def test_connection_zero_psi_structural():
    model = build_lemma24(Jet.zero(2), 2, 5)
    conn = connection(model)
    for i in range(2):
        G = conn.gammas[i]
        for r in range(6):
            for c in range(6):
                expect_one = (r, c) in {(1 + i, 0), (5, 3 + i)}
                assert G[(r, c)].is_zero() != expect_one


def test_connection_two_routes_agree():
    import random
    rng = random.Random(7)
    for n in (1, 2):
        psi = random_psi(rng, n, 5)
        model = build_lemma24(psi, n, 5)
        a = connection(model)
        b = connection_closed_form(model)
        for i in range(n):
            assert a.gammas[i].eq(b.gammas[i])


def test_connection_third_partial_entries():
    # full (2.6) pattern for n=2, psi = t2^2 t3 / 2
    psi = Jet(2, 6, {(2, 1): Fraction(1, 2)})
    model = build_lemma24(psi, 2, 6)
    G2 = connection(model).gammas[0]
    assert G2[(3, 1)] == psi.diff(0).diff(0).diff(0)  # 0
    assert G2[(4, 1)] == psi.diff(0).diff(0).diff(1)  # 1
    assert G2[(3, 2)] == psi.diff(0).diff(1).diff(0)  # 1
    assert G2[(4, 2)] == psi.diff(0).diff(1).diff(1)  # 0


# -------------------------------------------------------------------- verifier


def test_verify_passes_for_builds():
    import random
    rng = random.Random(13)
    for n in (1, 2, 3):
        psi = random_psi(rng, n, 5)
        rep = verify_vhf(build_lemma24(psi, n, 5))
        assert rep.all_pass, rep.summary_lines()


def test_verify_passes_zero_psi():
    rep = verify_vhf(build_lemma24(Jet.zero(1), 1, 5))
    assert rep.all_pass


def test_perturbed_model_fails():
    # perturb a degree-1-slot coefficient of the generator column by t2^2
    psi = Jet(2, 5, {(1, 2): Fraction(1, 3)})
    model = build_lemma24(psi, 2, 5)
    V = model.V
    V.entries[3][0] = V.entries[3][0] + Jet(2, 5, {(2, 0): Fraction(1)})
    bad = FlatFrameModel(2, 5, psi, V, model.S)
    rep = verify_vhf(bad)
    assert not rep.all_pass
    # the pairing check is among the failures (broken curl of kappa)
    assert not rep.get("pairing_flatness").passed


# ------------------------------------------------------------------ extraction


def test_extract_roundtrip_cubic_and_random():
    import random
    rng = random.Random(3)
    cases = [(psi_cubic(5), 1), (Jet.zero(1, 5), 1)]
    for n in (1, 2, 3):
        cases.append((random_psi(rng, n, 5), n))
    for psi, n in cases:
        model = build_lemma24(psi, n, 5)
        t_hat, psi_hat = extract_lemma21(model.V, n, 5)
        for j in range(n):
            assert t_hat[j] == Jet.coordinate(j, n, 5)
        assert psi_hat == psi


def test_extract_invariant_under_unit_rescaling():
    psi = psi_cubic(5)
    model = build_lemma24(psi, 1, 5)
    u = Jet(1, 5, {(0,): Fraction(1), (1,): Fraction(2), (2,): Fraction(-1, 3)})
    V2 = JetMatrix([[model.V[(i, j)] * u if j == 0 else model.V[(i, j)]
                     for j in range(4)] for i in range(4)])
    t_hat, psi_hat = extract_lemma21(V2, 1, 5)
    assert t_hat[0] == Jet.coordinate(0, 1, 5)
    assert psi_hat == psi


def test_extract_rejects_broken_curl():
    # n=2: swap one kappa for an incompatible jet -> curl asymmetry
    psi = Jet(2, 5, {(2, 1): Fraction(1)})
    model = build_lemma24(psi, 2, 5)
    V = model.V
    V.entries[3][0] = Jet(2, 5, {(0, 2): Fraction(1)})
    with pytest.raises(InputError):
        extract_lemma21(V, 2, 5)


def test_frame_choice_independence():
    # replacing the degree-2 frame by an invertible constant mix transforms the
    # coordinates linearly and pulls the prepotential back along that map
    psi = Jet(2, 5, {(3, 0): Fraction(1, 6), (1, 2): Fraction(1, 2)})
    model = build_lemma24(psi, 2, 5)
    A = [[Fraction(1), Fraction(2)], [Fraction(1), Fraction(3)]]
    Ainv = invert_scalar_matrix(A)
    At_inv = invert_scalar_matrix([[A[j][i] for j in range(2)] for i in range(2)])
    m = 6
    M = [[Fraction(1 if i == j else 0) for j in range(m)] for i in range(m)]
    for r in range(2):
        for c in range(2):
            M[1 + r][1 + c] = A[r][c]
            M[3 + r][3 + c] = At_inv[r][c]
    Minv = invert_scalar_matrix(M)
    MinvJ = JetMatrix.from_scalar(Minv, 2, INF)
    V2 = MinvJ * model.V
    t_hat, psi_hat = extract_lemma21(V2, 2, 5)
    # t_hat = A^{-1} t
    ts = [Jet.coordinate(j, 2, 5) for j in range(2)]
    for j in range(2):
        expect = ts[0].scale(Ainv[j][0]) + ts[1].scale(Ainv[j][1])
        assert t_hat[j] == expect
    # psi_hat(t~) = psi(A t~)
    subs = [ts[0].scale(A[j][0]) + ts[1].scale(A[j][1]) for j in range(2)]
    assert psi_hat == psi.compose(subs)


def test_generator_rescaling_rescales_psi_by_graded_degree():
    # lambda -> r lambda with the pairing-compatible frame completion:
    # coordinates scale by r and psi(t) -> r^2 psi(t/r)
    psi = Jet(1, 5, {(3,): Fraction(1, 6), (4,): Fraction(1, 8)})
    model = build_lemma24(psi, 1, 5)
    r = Fraction(3)
    m = 4
    M = [[Fraction(1 if i == j else 0) for j in range(m)] for i in range(m)]
    M[0][0] = r
    M[m - 1][m - 1] = 1 / r
    Minv = invert_scalar_matrix(M)
    V2 = JetMatrix.from_scalar(Minv, 1, INF) * model.V
    V2 = JetMatrix([[V2[(i, j)].scale(r) if j == 0 else V2[(i, j)] for j in range(m)]
                    for i in range(m)])
    t_hat, psi_hat = extract_lemma21(V2, 1, 5)
    assert t_hat[0] == Jet.coordinate(0, 1, 5).scale(r)
    shrink = [Jet.coordinate(0, 1, 5).scale(1 / r)]
    assert psi_hat == psi.compose(shrink).scale(r * r)


# ------------------------------------------------------------------ period map


def test_period_map_cubic_flag():
    model = build_lemma24(psi_cubic(5), 1, 5)
    flag = period_map(model)
    assert flag[3].cols == 1 and flag[2].cols == 2 and flag[1].cols == 3
    rep = lagrangian_check(model)
    assert rep.all_pass
    # at t=0 the flag is the standard flag (V(0) = identity for this psi)
    assert model.V.constant_part() == [[1 if i == j else 0 for j in range(4)] for i in range(4)]


def test_lagrangian_random():
    import random
    rng = random.Random(99)
    psi = random_psi(rng, 2, 5)
    assert lagrangian_check(build_lemma24(psi, 2, 5)).all_pass


# --------------------------------------------------- graded algebra at origin


def test_graded_algebra_matches_frobenius_at_origin():
    psi = psi_cubic(6)
    model = build_lemma24(psi, 1, 6)
    _, c_adapted, g0 = graded_algebra_at_origin(model, Fraction(1))
    fs = frobenius.build(psi, 1, 6)
    m = 4
    for g in range(m):
        for a in range(m):
            for b in range(m):
                assert c_adapted[g][a][b] == fs.c[g][a][b].constant_term()
    assert g0 == fs.g


def test_graded_algebra_rescaling_law():
    model = build_lemma24(psi_cubic(6), 1, 6)
    c1, _, _ = graded_algebra_at_origin(model, Fraction(1))
    r = Fraction(5)
    cr, _, _ = graded_algebra_at_origin(model, r)
    for g in range(4):
        for a in range(4):
            for b in range(4):
                assert cr[g][a][b] == c1[g][a][b] / r


def test_graded_algebra_zero_psi_square_zero():
    model = build_lemma24(Jet.zero(1, 5), 1, 5)
    c1, _, _ = graded_algebra_at_origin(model, Fraction(1))
    # degree-1 generators square to zero
    assert all(c1[g][1][1] == 0 for g in range(4))


def test_graded_algebra_rejects_zero_scale():
    model = build_lemma24(psi_cubic(5), 1, 5)
    with pytest.raises(InputError):
        graded_algebra_at_origin(model, Fraction(0))


# --------------------------------------------------------------- property suite


@settings(max_examples=15, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 4), st.integers(0, 4),
                          st.fractions(min_value=-4, max_value=4, max_denominator=5)),
                min_size=0, max_size=4))
def test_verify_and_roundtrip_property(monos):
    coeffs = {}
    for d1, d2, c in monos:
        if 0 < d1 + d2 <= 5:
            coeffs[(d1, d2)] = c
    psi = Jet(2, 5, coeffs)
    model = build_lemma24(psi, 2, 5)
    assert verify_vhf(model).all_pass
    t_hat, psi_hat = extract_lemma21(model.V, 2, 5)
    assert psi_hat == psi


def test_model_serialization_roundtrip():
    model = build_lemma24(psi_cubic(5), 1, 5)
    d = model.to_dict()
    back = FlatFrameModel.from_dict(d)
    assert back.V.eq(model.V)
    assert back.psi == model.psi
