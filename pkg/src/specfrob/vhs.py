"""Weight-3 filtration-with-pairing models built from a prepotential.

Frame slot layout for all (2n+2)-dimensional objects, 0-based:

    slot 0        : the distinguished degree-3 generator section
    slots 1..n    : degree-2 sections (base directions)
    slots n+1..2n : degree-1 sections
    slot 2n+1     : degree-0 section

The base coordinates are t-variables 0..n-1, attached to slots 1..n.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .jets import (INF, RATIONAL, ContextError, DegenerateCoordinates, Jet,
                   JetMatrix, divide, invert_coordinates, invert_scalar_matrix)
from .reports import CheckReport


class InputError(ValueError):
    pass


def filtration_degrees(n):
    return [3] + [2] * n + [1] * n + [0]


@dataclass(frozen=True)
class PairingMatrix:
    """Constant antisymmetric pairing: S(v_1, v_{2n+2}) = -1, S(v_k, v_{k+n}) = 1."""
    n: int
    rows: tuple

    @classmethod
    def standard(cls, n):
        m = 2 * n + 2
        S = [[Fraction(0)] * m for _ in range(m)]
        S[0][m - 1] = Fraction(-1)
        S[m - 1][0] = Fraction(1)
        for k in range(1, n + 1):  # slots 1..n pair with n+1..2n
            S[k][k + n] = Fraction(1)
            S[k + n][k] = Fraction(-1)
        return cls(n, tuple(tuple(r) for r in S))

    def as_jet_matrix(self, num_vars, kind=RATIONAL):
        return JetMatrix.from_scalar([list(r) for r in self.rows], num_vars, INF, kind)

    def determinant_nonzero(self):
        return invert_scalar_matrix([list(r) for r in self.rows]) is not None


@dataclass
class FlatFrameModel:
    """Filtration sections as columns of V over the flat frame, plus the pairing."""
    n: int
    order: int
    psi: Jet
    V: JetMatrix
    S: PairingMatrix

    @property
    def m(self):
        return 2 * self.n + 2

    @property
    def hodge_ranks(self):
        return (1, self.n, self.n, 1)

    def kappa(self, i):
        """Degree-1-slot coefficient of the generator column (d psi / d t_i)."""
        return self.V[(self.n + 1 + i, 0)]

    def kappa_last(self):
        return self.V[(self.m - 1, 0)]

    def to_dict(self):
        from .jets import jet_to_literal
        return {"n": self.n, "order": self.order,
                "psi": jet_to_literal(self.psi),
                "V": [[jet_to_literal(self.V[(i, j)]) for j in range(self.m)]
                      for i in range(self.m)]}

    @classmethod
    def from_dict(cls, d):
        from .jets import jet_from_literal
        n, order = d["n"], d["order"]
        m = 2 * n + 2
        psi = jet_from_literal(d["psi"], n, order)
        V = JetMatrix([[jet_from_literal(d["V"][i][j], n, order) for j in range(m)]
                       for i in range(m)])
        return cls(n, order, psi, V, PairingMatrix.standard(n))


def build_lemma24(psi: Jet, n: int, order: int) -> FlatFrameModel:
    """Assemble the section matrix of the flat-frame model from a prepotential.

    The generator column carries (1, t_i, dpsi/dt_i, (sum_k t_k d_k - 2) psi);
    the degree-2 columns carry the Hessian of psi; the degree-1 columns are
    e_a + t_{a-n} e_last; the last column is constant.
    """
    if psi.num_vars != n:
        raise InputError("psi must be a jet in the n base variables")
    if psi.constant_term() != 0:
        raise InputError("psi(0) != 0")
    if order < 3:
        raise InputError("order must be >= 3")
    psi = psi.truncate(order).with_order(order)
    m = 2 * n + 2
    kind = psi.kind
    zero = Jet.zero(n, INF, kind)
    one = Jet.const(1, n, INF, kind)
    ts = [Jet.coordinate(j, n, INF, kind) for j in range(n)]
    cols = []

    # generator column (2.3)
    kappas = [psi.diff(j) for j in range(n)]
    col = [one] + list(ts) + kappas + [psi.euler_apply(shift=-2)]
    cols.append(col)

    # degree-2 columns (2.5)
    for j in range(n):
        col = [zero] * m
        col[1 + j] = one
        for k in range(n):
            col[n + 1 + k] = kappas[j].diff(k)
        col[m - 1] = kappas[j].euler_apply(shift=-1)
        cols.append(col)

    # degree-1 columns (2.7)
    for j in range(n):
        col = [zero] * m
        col[n + 1 + j] = one
        col[m - 1] = ts[j]
        cols.append(col)

    # constant last column (2.9)
    col = [zero] * m
    col[m - 1] = one
    cols.append(col)

    V = JetMatrix([[cols[j][i] for j in range(m)] for i in range(m)])
    return FlatFrameModel(n, order, psi, V, PairingMatrix.standard(n))


# ------------------------------------------------------------------ connection


@dataclass
class ConnectionForm:
    """Moving-frame connection matrices Gamma_i (one per base direction)."""
    n: int
    gammas: list  # JetMatrix per t-variable


def connection(model: FlatFrameModel) -> ConnectionForm:
    """Gamma_i = V^{-1} dV/dt_i, derived from the section matrix itself."""
    Vinv = model.V.inverse()
    gammas = [Vinv * model.V.diff(j) for j in range(model.n)]
    return ConnectionForm(model.n, gammas)


def connection_closed_form(model: FlatFrameModel) -> ConnectionForm:
    """The explicit pattern: nabla_i v_1 = v_i, nabla_i v_j = sum_k psi_ijk v_{n+k},
    nabla_i v_a = delta_{i+n,a} v_last, nabla_i v_last = 0."""
    n, m = model.n, model.m
    kind = model.psi.kind
    gammas = []
    for i in range(n):
        G = JetMatrix.zero(m, m, n, model.psi.order, kind)
        G.entries[1 + i][0] = Jet.const(1, n, INF, kind)
        for j in range(n):
            for k in range(n):
                G.entries[n + 1 + k][1 + j] = model.psi.diff(i).diff(j).diff(k)
        G.entries[m - 1][n + 1 + i] = Jet.const(1, n, INF, kind)
        gammas.append(G)
    return ConnectionForm(n, gammas)


# -------------------------------------------------------------------- verifier


def verify_vhf(model: FlatFrameModel) -> CheckReport:
    """Exact checks: flatness, Griffiths transversality, pairing flatness,
    isotropy, and the rank-plus-isomorphism condition of the weight-3 setup."""
    rep = CheckReport()
    n, m = model.n, model.m
    V = model.V

    # (i) flatness: mixed partials of columns commute, and the moving-frame
    # curvature dGamma + Gamma ^ Gamma vanishes
    mixed_ok = True
    mixed_witness = None
    for i in range(n):
        for j in range(i + 1, n):
            d = V.diff(i).diff(j) - V.diff(j).diff(i)
            if not d.is_zero():
                mixed_ok = False
                mixed_witness = f"directions ({i},{j})"
    rep.add("flatness_mixed_partials", mixed_ok, witness=mixed_witness)

    conn = connection(model)
    curv_ok = True
    curv_witness = None
    for i in range(n):
        for j in range(i + 1, n):
            Gi, Gj = conn.gammas[i], conn.gammas[j]
            R = Gj.diff(i) - Gi.diff(j) + Gi * Gj - Gj * Gi
            if not R.is_zero():
                curv_ok = False
                curv_witness = f"directions ({i},{j})"
    rep.add("flatness_moving_frame", curv_ok, witness=curv_witness)

    # (ii) Griffiths transversality with the opposite-filtration block pattern:
    # Gamma_i sends the slot of degree p only into the slot of degree p-1
    deg = filtration_degrees(n)
    bad = None
    for i in range(n):
        for r in range(m):
            for c in range(m):
                if deg[r] != deg[c] - 1 and not conn.gammas[i][(r, c)].is_zero():
                    bad = f"Gamma_{i}[{r},{c}]"
    rep.add("griffiths_transversality", bad is None, witness=bad)

    # (iii) pairing flatness: V^t S V = S as jets
    Smat = model.S.as_jet_matrix(n, model.psi.kind)
    rep.add_jet_zero("pairing_flatness", V.transpose() * Smat * V - Smat)

    # (iv) isotropy S(F^p, F^{4-p}) = 0: blocks of V^t S V where deg sums >= 4
    G = V.transpose() * Smat * V
    iso_bad = None
    for r in range(m):
        for c in range(m):
            if deg[r] + deg[c] >= 4 and not G[(r, c)].is_zero():
                iso_bad = f"S(v_{r+1}, v_{c+1})"
    rep.add("isotropy", iso_bad is None, witness=iso_bad)

    # (v) CY-condition: rank pattern is structural (1, n, n, 1); the map from
    # base directions to degree-2/degree-3 quotient at 0 must be invertible
    block = [[conn.gammas[i][(1 + r, 0)].constant_term() for i in range(n)] for r in range(n)]
    ok = invert_scalar_matrix(block, model.psi.kind) is not None
    rep.add("cy_condition", ok, witness=None if ok else "degenerate Higgs map at origin")
    return rep


# ------------------------------------------------------------------ extraction


def extract_lemma21(V: JetMatrix, n: int, order: int):
    """Recover the base coordinates and the prepotential from a section matrix.

    The first column is the degree-3 generator in the flat frame.  It is
    normalized so its slot-0 coefficient is 1; the slot-1..n coefficients are
    the coordinates; the degree-1-slot coefficients integrate to psi; the
    last coefficient must match (sum t_k d_k - 2) psi.
    """
    m = 2 * n + 2
    col = V.column(0)
    u = col[0]
    if u.constant_term() == 0:
        raise DegenerateCoordinates("CY-condition fails: generator has no unit part")
    uinv = None
    if u == Jet.const(1, n, INF, u.kind):
        norm = col
    else:
        from .jets import inverse_unit
        uinv = inverse_unit(u.with_order(order) if u.order is INF else u, order)
        norm = [c * uinv for c in col]
    t_hat = [norm[1 + j].with_order(order) for j in range(n)]
    # invertible linear part is required for these to be coordinates
    lin = [[t_hat[j].coeffs.get(tuple(1 if s == i else 0 for s in range(n)), Fraction(0))
            for i in range(n)] for j in range(n)]
    if invert_scalar_matrix(lin, u.kind) is None:
        raise DegenerateCoordinates("CY-condition fails: coordinate linear part singular")
    for t in t_hat:
        if t.constant_term() != 0:
            raise DegenerateCoordinates("coordinates not centered: generator not normalized at 0")

    inv = invert_coordinates(t_hat, order)
    kappas = [norm[n + 1 + j].compose(inv) for j in range(n)]

    # curl symmetry d_j kappa_i = d_i kappa_j is what makes psi exist
    for i in range(n):
        for j in range(i + 1, n):
            if not (kappas[i].diff(j) - kappas[j].diff(i)).is_zero():
                raise InputError("not flat/not isotropic input: curl of kappa is asymmetric")

    psi_hat = integrate_gradient(kappas, n, order)
    # (2.18): last coefficient is the Euler operator applied to psi
    last = norm[m - 1].compose(inv)
    if not (last - psi_hat.euler_apply(shift=-2)).is_zero():
        raise InputError("not flat/not isotropic input: Euler coefficient mismatch")
    return t_hat, psi_hat


def integrate_gradient(kappas, n, order):
    """Term-wise primitive with psi(0) = 0 of a curl-symmetric gradient."""
    kind = kappas[0].kind
    coeffs = {}
    for i, k in enumerate(kappas):
        for e, c in k.coeffs.items():
            e2 = e[:i] + (e[i] + 1,) + e[i + 1:]
            val = c / e2[i]
            if e2 in coeffs:
                if coeffs[e2] != val:
                    raise InputError("inconsistent gradient (curl asymmetry)")
            else:
                coeffs[e2] = val
    return Jet(n, order, coeffs, kind)


# ------------------------------------------------------------------ period map


def period_map(model: FlatFrameModel):
    """Bases of the filtration steps in the flat frame, one jet matrix per step."""
    n, m = model.n, model.m
    spans = {3: [0], 2: list(range(0, n + 1)), 1: list(range(0, 2 * n + 1)), 0: list(range(m))}
    flag = {}
    for p, cols in spans.items():
        flag[p] = JetMatrix([[model.V[(i, j)] for j in cols] for i in range(m)])
    return flag


def lagrangian_check(model: FlatFrameModel) -> CheckReport:
    """S(F^2, F^2) = 0: the degree-2 flag is isotropic for the pairing."""
    rep = CheckReport()
    n = model.n
    Smat = model.S.as_jet_matrix(n, model.psi.kind)
    G = model.V.transpose() * Smat * model.V
    block = JetMatrix([[G[(r, c)] for c in range(n + 1)] for r in range(n + 1)])
    rep.add_jet_zero("lagrangian_F2", block)
    return rep


# ------------------------------------------------- graded algebra at the origin


def graded_algebra_at_origin(model: FlatFrameModel, lambda_scale=Fraction(1)):
    """Structure constants of the graded product on the associated graded at 0.

    Returns (c_fixed, c_adapted, g0): constants in the fixed frame basis for a
    generator scaled by lambda_scale, constants in the generator-adapted basis
    (scale-free), and the symmetrized pairing.
    """
    r = Fraction(lambda_scale) if model.psi.kind == RATIONAL else complex(lambda_scale)
    if r == 0:
        raise InputError("lambda_scale must be nonzero")
    n, m = model.n, model.m
    deg = filtration_degrees(n)
    grade = [3 - d for d in deg]
    conn = connection(model)
    gam0 = [[[conn.gammas[i][(rr, cc)].constant_term() for cc in range(m)] for rr in range(m)]
            for i in range(n)]

    # C_X on graded classes: component from grade g to grade g+1 only
    def higgs(xcoeffs, vec):
        out = [0 * vec[0]] * m
        for i in range(n):
            if xcoeffs[i] == 0:
                continue
            for rr in range(m):
                acc = 0
                for cc in range(m):
                    if grade[rr] == grade[cc] + 1 and vec[cc] != 0:
                        acc += xcoeffs[i] * gam0[i][rr][cc] * vec[cc]
                if acc:
                    out[rr] = out[rr] + acc
        return out

    # direction X(alpha) with C_{X(alpha)} lambda0 = u_alpha for degree-1 slots:
    # solve the n x n Higgs block at the origin (CY isomorphism)
    block = [[gam0[i][1 + rr][0] for i in range(n)] for rr in range(n)]
    binv = invert_scalar_matrix(block, model.psi.kind)
    if binv is None:
        raise InputError("CY isomorphism fails at origin")

    def xdir(alpha):  # alpha in 1..n (degree-1 basis slot), for lambda0 = r*u0
        e = [binv[i][alpha - 1] / r for i in range(n)]
        return e

    zero = Fraction(0) if model.psi.kind == RATIONAL else 0j
    c_fixed = [[[zero for _ in range(m)] for _ in range(m)] for _ in range(m)]

    def setprod(a, b, vec):
        for g in range(m):
            c_fixed[g][a][b] = vec[g]
            c_fixed[g][b][a] = vec[g]

    # unit: (r u0) o x = x
    for b in range(m):
        e = [zero] * m
        e[b] = 1 / r
        setprod(0, b, e)
    # degree-1 products
    for a in range(1, n + 1):
        Xa = xdir(a)
        for b in range(a, n + 1):
            basis_b = [zero] * m
            basis_b[b] = 1
            setprod(a, b, higgs(Xa, basis_b))
        for b in range(n + 1, 2 * n + 1):
            basis_b = [zero] * m
            basis_b[b] = 1
            setprod(a, b, higgs(Xa, basis_b))
    # all other products vanish by grading (grades would exceed 3)

    # adapted basis b_alpha = r * u_alpha rescales every product back
    c_adapted = [[[c_fixed[g][a][b] * r for b in range(m)] for a in range(m)] for g in range(m)]

    g0 = [[(-1) ** deg[a] * model.S.rows[a][b] for b in range(m)] for a in range(m)]
    return c_fixed, c_adapted, g0
