"""Families of meromorphic connections over the thickened base.

The base coordinates are x_0 = y_1 (unit direction), x_1..x_n = t (the
curved directions), x_{n+1}..x_{2n} = y_a (fiber), x_{2n+1} = y_last
(fiber).  Slot alpha of the section basis pairs with coordinate alpha, so
the multiplication extracted here compares index-by-index with the
Frobenius-structure constants.

Sections live in the flat frame as finite Laurent series in z whose
coefficients are jet matrices.  The connection matrices are recovered
from the section matrix itself (flat gauge), never copied from the
closed-form pattern; the closed form is a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .jets import (INF, RATIONAL, DegenerateCoordinates, Jet, JetMatrix,
                   invert_scalar_matrix)
from .reports import CheckReport
from .vhs import FlatFrameModel, PairingMatrix, build_lemma24, extract_lemma21

DEFAULT_ZMAX = 6


class InputError(ValueError):
    pass


class ReductionError(ValueError):
    """Lattice column reduction hit a zero pivot or a non-member target."""


# ------------------------------------------------------------- Laurent matrices


@dataclass
class LaurentMatrix:
    """z-Laurent series with JetMatrix coefficients and a validity bound zhi."""
    rows: int
    cols: int
    num_vars: int
    kind: str
    coeffs: dict = field(default_factory=dict)
    zhi: object = INF  # coefficients with exponent > zhi are unknown

    def _z(self):
        return JetMatrix.zero(self.rows, self.cols, self.num_vars, INF, self.kind)

    def coeff(self, k):
        return self.coeffs.get(k, self._z())

    def clean(self):
        self.coeffs = {k: m for k, m in self.coeffs.items()
                       if (self.zhi is INF or k <= self.zhi) and not m.is_zero()}
        return self

    @classmethod
    def from_jetmatrix(cls, M, z_exp=0, zhi=INF):
        some = M.entries[0][0]
        return cls(M.rows, M.cols, some.num_vars, some.kind, {z_exp: M}, zhi).clean()

    @classmethod
    def identity(cls, size, num_vars, kind=RATIONAL, zhi=INF):
        return cls.from_jetmatrix(JetMatrix.identity(size, num_vars, INF, kind), 0, zhi)

    def zval(self):
        return min(self.coeffs, default=0)

    def is_zero(self):
        return all(m.is_zero() for m in self.coeffs.values())

    def max_abs(self):
        return max((m.max_abs() for m in self.coeffs.values()), default=0.0)

    def __add__(self, other):
        zhi = _zmin(self.zhi, other.zhi)
        ks = set(self.coeffs) | set(other.coeffs)
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             {k: self.coeff(k) + other.coeff(k) for k in ks}, zhi).clean()

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s):
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             {k: m.scale(s) for k, m in self.coeffs.items()}, self.zhi)

    def scale_jet(self, j):
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             {k: m.map(lambda a: a * j) for k, m in self.coeffs.items()},
                             self.zhi).clean()

    def __mul__(self, other):
        zhi = _zmin(_zadd(self.zhi, other.zval()), _zadd(other.zhi, self.zval()))
        out = {}
        for k1, m1 in self.coeffs.items():
            for k2, m2 in other.coeffs.items():
                k = k1 + k2
                if zhi is not INF and k > zhi:
                    continue
                p = m1 * m2
                out[k] = out.get(k) + p if k in out else p
        return LaurentMatrix(self.rows, other.cols, self.num_vars, self.kind,
                             out, zhi).clean()

    def shift_z(self, k):
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             {kk + k: m for kk, m in self.coeffs.items()},
                             _zadd(self.zhi, k))

    def row_shift(self, shifts):
        """Multiply row i by z^{shifts[i]}."""
        out = {}
        for k, M in self.coeffs.items():
            for i in range(self.rows):
                kk = k + shifts[i]
                if kk not in out:
                    out[kk] = [[None] * self.cols for _ in range(self.rows)]
                for j in range(self.cols):
                    out[kk][i][j] = M.entries[i][j]
        zero = Jet.zero(self.num_vars, INF, self.kind)
        coeffs = {}
        for kk, rows in out.items():
            coeffs[kk] = JetMatrix([[e if e is not None else zero for e in row]
                                    for row in rows])
        zhi = _zadd(self.zhi, min(shifts)) if self.zhi is not INF else INF
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             coeffs, zhi).clean()

    def column_shift(self, shifts):
        out = {}
        for k, M in self.coeffs.items():
            for j in range(self.cols):
                kk = k + shifts[j]
                if kk not in out:
                    out[kk] = [[None] * self.cols for _ in range(self.rows)]
                for i in range(self.rows):
                    out[kk][i][j] = M.entries[i][j]
        zero = Jet.zero(self.num_vars, INF, self.kind)
        coeffs = {kk: JetMatrix([[e if e is not None else zero for e in row] for row in rows])
                  for kk, rows in out.items()}
        zhi = _zadd(self.zhi, min(shifts)) if self.zhi is not INF else INF
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             coeffs, zhi).clean()

    def transpose(self):
        return LaurentMatrix(self.cols, self.rows, self.num_vars, self.kind,
                             {k: m.transpose() for k, m in self.coeffs.items()}, self.zhi)

    def subs_minus_z(self):
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             {k: m.scale(Fraction(-1) ** (k % 2) if self.kind == RATIONAL
                                         else (-1.0) ** (k % 2))
                              for k, m in self.coeffs.items()}, self.zhi).clean()

    def diff_var(self, var):
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind,
                             {k: m.diff(var) for k, m in self.coeffs.items()},
                             self.zhi).clean()

    def diff_z(self):
        out = {}
        for k, m in self.coeffs.items():
            if k != 0:
                out[k - 1] = m.scale(k)
        return LaurentMatrix(self.rows, self.cols, self.num_vars, self.kind, out,
                             _zadd(self.zhi, -1)).clean()

    def column(self, j):
        """Column as a LaurentMatrix with a single column."""
        return LaurentMatrix(self.rows, 1, self.num_vars, self.kind,
                             {k: JetMatrix([[m.entries[i][j]] for i in range(self.rows)])
                              for k, m in self.coeffs.items()}, self.zhi).clean()

    def entry_series(self, i, j):
        return {k: m.entries[i][j] for k, m in self.coeffs.items()
                if not m.entries[i][j].is_zero()}


def _zmin(a, b):
    if a is INF:
        return b
    if b is INF:
        return a
    return min(a, b)


def _zadd(a, k):
    return INF if a is INF else a + k


def laurent_inverse_power_series(B: LaurentMatrix, zmax: int) -> LaurentMatrix:
    """Inverse of a z-power series of jet matrices with invertible z^0 part."""
    if B.zval() < 0:
        raise InputError("not a power series in z")
    B0inv = B.coeff(0).inverse()
    B0invL = LaurentMatrix.from_jetmatrix(B0inv, 0, zmax)
    N = (B0invL * B) - LaurentMatrix.identity(B.rows, B.num_vars, B.kind, zmax)
    acc = LaurentMatrix.identity(B.rows, B.num_vars, B.kind, zmax)
    term = acc
    for _ in range(zmax + 1):
        term = (term * N).scale(-1)
        if term.is_zero():
            break
        acc = acc + term
    return acc * B0invL


# ------------------------------------------------------------------- TEP model


@dataclass
class TEPModel:
    base: FlatFrameModel
    n: int
    order: int
    zmax: int
    F: LaurentMatrix            # untwisted section matrix in the flat frame
    omegas: dict                # direction (0..m-1 or "z") -> connection matrix, twisted
    P: LaurentMatrix            # pairing values P(sigma_a, sigma_b)

    @property
    def m(self):
        return 2 * self.n + 2

    def spectrum_exponents(self):
        return [0] + [1] * self.n + [2] * self.n + [3]


def _extend_base(jet, n, m):
    return jet.extend(m, [1 + j for j in range(n)])


def build_tep(model: FlatFrameModel, zmax: int = DEFAULT_ZMAX,
              perturb_x_last=None, perturb_x_a=None) -> TEPModel:
    """Assemble the section matrix, the connection in the flat gauge, and the
    pairing.  The unit-direction twist enters the connection as an exact
    identity in dy_1 and a -y_1/z term in the z-direction.

    perturb_x_last adds x * z^{-2} * (last section) to the generator column;
    perturb_x_a shifts the z^{-1}-coefficients of the middle columns away
    from the fiber coordinates.  Both produce non-members of the moduli
    space and must be rejected by verify_tep.
    """
    n = model.n
    m = 2 * n + 2
    kind = model.psi.kind
    order = model.order

    def ext(j):
        return _extend_base(j, n, m)

    V = model.V.map(ext)
    ys = [Jet.coordinate(n + 1 + j, m, INF, kind) for j in range(n)]  # y_a
    ylast = Jet.coordinate(m - 1, m, INF, kind)
    zero = Jet.zero(m, INF, kind)

    Fc = {0: JetMatrix.zero(m, m, m, INF, kind),
          1: JetMatrix.zero(m, m, m, INF, kind),
          2: JetMatrix.zero(m, m, m, INF, kind),
          3: JetMatrix.zero(m, m, m, INF, kind)}
    # generator column: v_1(t) + sum_a y_a z v_a(t) + y_last z^2 v_last
    for i in range(m):
        Fc[0].entries[i][0] = V[(i, 0)]
        acc = zero
        for j in range(n):
            acc = acc + V[(i, n + 1 + j)] * ys[j]
        Fc[1].entries[i][0] = acc
        Fc[2].entries[i][0] = V[(i, m - 1)] * ylast
    # middle columns: z v_i(t) + y_{n+i} z^2 v_last
    for j in range(n):
        for i in range(m):
            Fc[1].entries[i][1 + j] = V[(i, 1 + j)]
            Fc[2].entries[i][1 + j] = V[(i, m - 1)] * ys[j]
    # degree-1 columns: z^2 v_a(t); last column: z^3 v_last
    for j in range(n):
        for i in range(m):
            Fc[2].entries[i][n + 1 + j] = V[(i, n + 1 + j)]
    for i in range(m):
        Fc[3].entries[i][m - 1] = V[(i, m - 1)]

    if perturb_x_last is not None:
        x = Jet.const(perturb_x_last, m, INF, kind)
        for i in range(m):
            Fc[1].entries[i][0] = Fc[1].entries[i][0] + V[(i, m - 1)] * x
    if perturb_x_a is not None:
        for j, xval in perturb_x_a.items():
            x = Jet.const(xval, m, INF, kind)
            for i in range(m):
                Fc[2].entries[i][1 + j] = V[(i, m - 1)] * (ys[j] + x)

    F = LaurentMatrix(m, m, m, kind, Fc, INF).clean()
    return tep_from_sections(model, F, zmax)


def tep_from_sections(model: FlatFrameModel, F: LaurentMatrix, zmax: int) -> TEPModel:
    """Connection (in the flat gauge, with the unit-direction twist) and pairing
    recomputed from an explicit section matrix."""
    n = model.n
    m = 2 * n + 2
    omegas = connection_from_sections(F, n, zmax)
    # unit-direction twist: identity in dy_1 and -y_1 id dz/(z^2)
    ident = LaurentMatrix.identity(m, m, F.kind, omegas["z"].zhi)
    omegas[0] = omegas[0] + ident.shift_z(-1)
    omegas["z"] = omegas["z"] - ident.shift_z(-2).scale_jet(
        Jet.coordinate(0, m, INF, F.kind))
    P = pairing_matrix(F, model.S)
    return TEPModel(model, n, model.order, zmax, F, omegas, P)


def section_shifts(n):
    return [0] + [1] * n + [2] * n + [3]


def factor_sections(F: LaurentMatrix, n: int):
    """F = B(z) * diag(z^q): returns the power-series factor B."""
    q = section_shifts(n)
    B = F.column_shift([-s for s in q])
    if B.zval() < 0:
        raise InputError("sections do not respect the exponent pattern")
    return B


def connection_from_sections(F: LaurentMatrix, n: int, zmax: int) -> dict:
    """omega_mu = F^{-1} dF/dmu in the flat gauge, for every base direction and z.

    With F = B(z) diag(z^q), the inverse acts as B^{-1} followed by row
    shifts -q; the column exponents travel inside dF.
    """
    m = 2 * n + 2
    q = section_shifts(n)
    B = factor_sections(F, n)
    Binv = laurent_inverse_power_series(B, zmax + 3)
    neg_q = [-s for s in q]
    omegas = {mu: (Binv * F.diff_var(mu)).row_shift(neg_q) for mu in range(m)}
    omegas["z"] = (Binv * F.diff_z()).row_shift(neg_q)
    return omegas


def pairing_matrix(F: LaurentMatrix, S: PairingMatrix) -> LaurentMatrix:
    """P(sigma_a, sigma_b)(z) with the sign twist on the second argument."""
    some = F.coeffs[min(F.coeffs)].entries[0][0]
    Sj = LaurentMatrix.from_jetmatrix(
        JetMatrix.from_scalar([list(r) for r in S.rows], some.num_vars, INF, some.kind))
    return F.transpose() * Sj * F.subs_minus_z()


def expected_pairing(n, num_vars, kind=RATIONAL) -> LaurentMatrix:
    """z^3 times the constant block metric."""
    from .frobenius import metric_rows
    g = JetMatrix.from_scalar(metric_rows(n, kind), num_vars, INF, kind)
    return LaurentMatrix.from_jetmatrix(g, 3)


# --------------------------------------------------------------------- verifier


def verify_tep(tep: TEPModel) -> CheckReport:
    rep = CheckReport()
    m = tep.m
    om = tep.omegas
    dirs = list(range(m)) + ["z"]

    # (i) full flatness including the z-rows
    flat_ok, flat_witness, worst = True, None, 0.0
    for ai in range(len(dirs)):
        for bi in range(ai + 1, len(dirs)):
            a, b = dirs[ai], dirs[bi]
            da = om[b].diff_var(a) if a != "z" else om[b].diff_z()
            db = om[a].diff_var(b) if b != "z" else om[a].diff_z()
            R = da - db + om[a] * om[b] - om[b] * om[a]
            if not R.is_zero():
                flat_ok = False
                worst = max(worst, R.max_abs())
                flat_witness = flat_witness or f"directions ({a},{b})"
    rep.add("flatness_full", flat_ok, worst, flat_witness)

    # (ii) pole order: z * omega_mu and z^2 * omega_z are regular at z = 0
    rank_ok, rank_witness = True, None
    for mu in range(m):
        if om[mu].zval() < -1:
            rank_ok = False
            rank_witness = f"direction {mu} has z-valuation {om[mu].zval()}"
    if om["z"].zval() < -2:
        rank_ok = False
        rank_witness = f"z-direction has z-valuation {om['z'].zval()}"
    rep.add("poincare_rank_1", rank_ok, witness=rank_witness)

    # (iii) pairing takes values in z^3 * constants with the block pattern
    d = tep.P - expected_pairing(tep.n, m, tep.F.kind)
    rep.add("pairing_form", d.is_zero(), d.max_abs(),
            None if d.is_zero() else f"z-exponents {sorted(d.coeffs)}")

    # (iv) pairing flat under the connection
    pf_ok, pf_worst = True, 0.0
    for mu in range(m):
        lhs = tep.P.diff_var(mu)
        rhs = om[mu].transpose() * tep.P + tep.P * om[mu].subs_minus_z()
        dd = lhs - rhs
        if not dd.is_zero():
            pf_ok = False
            pf_worst = max(pf_worst, dd.max_abs())
    lhs = tep.P.diff_z()
    rhs = om["z"].transpose() * tep.P - tep.P * om["z"].subs_minus_z()
    dd = lhs - rhs
    if not dd.is_zero():
        pf_ok = False
        pf_worst = max(pf_worst, dd.max_abs())
    rep.add("pairing_flat", pf_ok, pf_worst)

    # (v) spectrum from the valuation filtration of the section lattice
    try:
        accepted = lattice_leading_reduction(tep.F, tep.n)
        spec = sorted(v for v, _vec in accepted)
        rep.add("spectrum", spec == sorted(tep.spectrum_exponents()),
                witness=str(spec))
    except ReductionError as exc:
        accepted = None
        rep.add("spectrum", False, witness=str(exc))

    # (vi) the induced filtration reproduces the base filtration
    if accepted is None:
        rep.add("induced_filtration", False, witness="no valuation reduction")
    else:
        ok = induced_filtration_matches(tep, accepted)
        rep.add("induced_filtration", ok)
    return rep


def jet_linear_solve(columns, target, m):
    """Solve sum_j x_j columns[j] = target over jets (unit pivots); None if not solvable."""
    k = len(columns)
    aug = [[columns[j][i] for j in range(k)] + [target[i]] for i in range(m)]
    perm = []
    used_rows = set()
    for col in range(k):
        piv = None
        for r in range(m):
            if r not in used_rows and aug[r][col].constant_term() != 0:
                piv = r
                break
        if piv is None:
            return None
        used_rows.add(piv)
        perm.append((col, piv))
    # forward eliminate
    from .jets import inverse_unit
    order = None
    for row in aug:
        for e in row:
            if e.order is not INF:
                order = e.order if order is None else min(order, e.order)
    if order is None:
        order = 6
    for col, piv in perm:
        inv = inverse_unit(aug[piv][col].with_order(order), order)
        aug[piv] = [e * inv for e in aug[piv]]
        for r in range(m):
            if r != piv and not aug[r][col].is_zero():
                f = aug[r][col]
                aug[r] = [e - f * ee for e, ee in zip(aug[r], aug[piv])]
    for r in range(m):
        if r not in used_rows and not aug[r][k].is_zero():
            return None
    x = [None] * k
    for col, piv in perm:
        x[col] = aug[piv][k]
    return x


def lattice_leading_reduction(F: LaurentMatrix, n: int, max_val=6):
    """Echelonize the lattice generators by z-valuation; returns (val, lead) pairs."""
    m = 2 * n + 2
    gens = []
    for j in range(m):
        col = F.column(j)
        gens.append(col)
    accepted = []  # (val, lead vector as list of jets, column LaurentMatrix)

    def lead_of(col):
        ks = sorted(col.coeffs)
        if not ks:
            return None, None
        v = ks[0]
        return v, [col.coeffs[v].entries[i][0] for i in range(m)]

    for col in gens:
        while True:
            v, lead = lead_of(col)
            if v is None:
                raise ReductionError("generator reduced to zero")
            if v > max_val:
                raise ReductionError(f"valuation exceeded {max_val}")
            usable = [(vv, ll, cc) for (vv, ll, cc) in accepted if vv <= v]
            if not usable:
                accepted.append((v, lead, col))
                break
            x = jet_linear_solve([u[1] for u in usable], lead, m)
            if x is None:
                accepted.append((v, lead, col))
                break
            # subtract z^{v - vv} * x_j * gen_j to raise the valuation
            for (vv, _ll, cc), xj in zip(usable, x):
                col = col - cc.shift_z(v - vv).scale_jet(xj)
    return [(v, lead) for v, lead, _c in accepted]


def induced_filtration_matches(tep: TEPModel, accepted) -> bool:
    """span{leads with val <= 3-p} == span{filtration-step columns of V}."""
    n, m = tep.n, tep.m
    V = tep.base.V.map(lambda j: _extend_base(j, n, m))
    step_cols = {3: [0], 2: list(range(n + 1)), 1: list(range(2 * n + 1)),
                 0: list(range(m))}
    for p, cols in step_cols.items():
        leads = [lead for v, lead in accepted if v <= 3 - p]
        vcols = [[V[(i, c)] for i in range(m)] for c in cols]
        if len(leads) != len(cols):
            return False
        for vc in vcols:
            if jet_linear_solve(leads, vc, m) is None:
                return False
        for lead in leads:
            if jet_linear_solve(vcols, lead, m) is None:
                return False
    return True


# ------------------------------------------------------------------ extraction


@dataclass
class FManifoldData:
    n: int
    c: list       # structure constants, jets in the m coordinates
    e: list       # unit field components
    E: list       # Euler field components
    higgs: list   # C matrices per direction
    endo_u: JetMatrix


def extract_fmanifold(tep: TEPModel) -> FManifoldData:
    """Multiplication, unit, and Euler field from the z = 0 restriction."""
    m = tep.m
    kind = tep.F.kind
    C = [tep.omegas[mu].coeff(-1) for mu in range(m)]
    U = tep.omegas["z"].coeff(-2)
    K = JetMatrix([[C[mu][(i, 0)] for mu in range(m)] for i in range(m)])
    if invert_scalar_matrix(K.constant_part(), kind) is None:
        raise InputError("not generically cyclic: C.xi is not an isomorphism")
    Kinv = K.inverse(tep.order)
    c = [[[None] * m for _ in range(m)] for _ in range(m)]
    for mu in range(m):
        Mmu = Kinv * (C[mu] * K)
        for gam in range(m):
            for nu in range(m):
                c[gam][mu][nu] = Mmu[(gam, nu)]
    e = Kinv.apply([Jet.const(1, m, INF, kind) if i == 0 else Jet.zero(m, INF, kind)
                    for i in range(m)])
    E = Kinv.apply([-U[(i, 0)] for i in range(m)])
    return FManifoldData(tep.n, c, e, E, C, U)


def expected_euler_field(n, m, kind=RATIONAL):
    """y_1 d_{y_1} - sum_a y_a d_{y_a} - 2 y_last d_{y_last}."""
    weights = [1] + [0] * n + [-1] * n + [-2]
    return [Jet.coordinate(a, m, INF, kind).scale(w) for a, w in enumerate(weights)]


def verify_fmanifold_normal_form(data: FManifoldData) -> CheckReport:
    rep = CheckReport()
    m = 2 * data.n + 2
    kind = data.c[0][0][0].kind
    ok = all((data.e[i] - (Jet.const(1, m, INF, kind) if i == 0
                           else Jet.zero(m, INF, kind))).is_zero() for i in range(m))
    rep.add("unit_is_dy1", ok)
    expect = expected_euler_field(data.n, m, kind)
    worst = 0.0
    ok = True
    for i in range(m):
        d = data.E[i] - expect[i]
        if not d.is_zero():
            ok = False
            worst = max(worst, d.max_abs())
    rep.add("euler_field_form", ok, worst)
    return rep


# ---------------------------------------------------------------- C*-action


def cstar_action(tep: TEPModel, r) -> TEPModel:
    """Pull back along z -> r z and renormalize the section basis.

    Verified effect: the fiber coordinates scale with weights (1,...,1,2).
    """
    if r == 0:
        raise InputError("r must be nonzero")
    kind = tep.F.kind
    r = Fraction(r) if kind == RATIONAL else complex(r)
    m = tep.m
    q = section_shifts(tep.n)
    scaled = LaurentMatrix(m, m, m, kind,
                           {k: M.scale(r ** k) for k, M in tep.F.coeffs.items()},
                           tep.F.zhi).clean()
    rinvq = [Fraction(1) / (r ** s) if kind == RATIONAL else 1.0 / (r ** s) for s in q]
    renorm = LaurentMatrix(m, m, m, kind,
                           {k: JetMatrix([[M.entries[i][j] * Jet.const(rinvq[j], m, INF, kind)
                                           for j in range(m)] for i in range(m)])
                            for k, M in scaled.coeffs.items()}, scaled.zhi).clean()
    # the renormalized sections are the standard ones at rescaled fiber coords
    factors = {tep.n + 1 + j: r for j in range(tep.n)}
    factors[m - 1] = r * r
    expected = LaurentMatrix(m, m, m, kind,
                             {k: M.map(lambda jj: jj.scale_vars(factors))
                              for k, M in tep.F.coeffs.items()}, tep.F.zhi).clean()
    if not (renorm - expected).is_zero():
        raise InputError("C*-action does not have weights (1,...,1,2)")
    return tep_from_sections(tep.base, renorm, tep.zmax)


def euler_generates_cstar(tep: TEPModel) -> bool:
    """E_BL = sum_a y_a d_a + 2 y_last d_last generates the fiber scaling:
    checked infinitesimally as Lie_E(o) = o for the extracted product."""
    from .jets import lie_derivative_12
    data = extract_fmanifold(tep)
    m = tep.m
    E = data.E
    lie_c = lie_derivative_12(E, data.c)
    for g in range(m):
        for a in range(m):
            for b in range(m):
                if not (lie_c[g][a][b] - data.c[g][a][b]).is_zero():
                    return False
    return True


# -------------------------------------------------------------------- rechart


@dataclass
class RechartResult:
    t_new: list          # jets in the base variables
    psi_new: Jet
    y_new: list          # fiber coordinate jets in the full m variables (y_a..., y_last)
    report: CheckReport
    metrics_equal: bool
    u1_preserved: bool


def validate_frame_change(M, n) -> None:
    """Constant symplectic frame change fixing the generator with the
    adapted block pattern and genuinely opposite new splitting."""
    m = 2 * n + 2
    S = PairingMatrix.standard(n).rows
    # M^t S M = S
    for a in range(m):
        for b in range(m):
            acc = Fraction(0)
            for i in range(m):
                for j in range(m):
                    acc += M[i][a] * S[i][j] * M[j][b]
            if acc != S[a][b]:
                raise InputError("M is not symplectic for the pairing")
    for i in range(m):
        if M[i][0] != (1 if i == 0 else 0):
            raise InputError("M must fix the flat generator")
    for j in range(1, n + 1):          # degree-2 frame inside the degree-2 step
        for i in range(n + 1, m):
            if M[i][j] != 0:
                raise InputError("degree-2 frame columns must live in the degree-2 step")
    for j in range(n + 1, 2 * n + 1):  # degree-1 frame inside the degree-1 step
        if M[m - 1][j] != 0:
            raise InputError("degree-1 frame columns must live in the degree-1 step")
    # oppositeness at the origin: standard flag spans against new splitting
    checks = [(list(range(1)), list(range(1, m))),
              (list(range(n + 1)), list(range(n + 1, m))),
              (list(range(2 * n + 1)), [m - 1])]
    for fcols, ucols in checks:
        mat = [[Fraction(1 if i == c else 0) for c in fcols] +
               [M[i][c] for c in ucols] for i in range(m)]
        if invert_scalar_matrix(mat) is None:
            raise InputError("M not opposite")


def rechart(model: FlatFrameModel, M, zmax: int = DEFAULT_ZMAX) -> RechartResult:
    """Re-run the whole construction in a new opposite frame and certify that
    the induced multiplication agrees with the original chart.

    Steps: extract the new coordinates and prepotential from the generator in
    the new frame, rebuild the section model, locate the distinguished lattice
    sections in the new basis to read the fiber coordinates, then push the
    product forward along the coordinate change and compare.
    """
    n, order = model.n, model.order
    m = 2 * n + 2
    kind = model.psi.kind
    for j in range(n):
        if not model.psi.diff(j).constant_term() == 0:
            raise InputError("rechart needs a generator with critical value at 0")
    validate_frame_change(M, n)
    Minv = invert_scalar_matrix(M, kind)
    MinvJ = JetMatrix.from_scalar(Minv, n, INF, kind)

    # (1)+(2): coordinates and prepotential in the new frame
    t_new, psi_new = extract_lemma21(MinvJ * model.V, n, order)

    # (3): new section model and the fiber-coordinate reduction
    new_model = build_lemma24(psi_new, n, order)
    tep_old = build_tep(model, zmax)
    y_new, rep = locate_new_fiber_coordinates(tep_old, new_model, M, t_new)

    # (4): compare multiplication, unit, Euler field, and the metrics
    data_old = extract_fmanifold(tep_old)
    tep_new = build_tep(new_model, zmax)
    data_new = extract_fmanifold(tep_new)

    t_new_m = [_extend_base(t, n, m) for t in t_new]
    phi_map = [Jet.coordinate(0, m, INF, kind)] + t_new_m + y_new
    J = [[phi_map[gam].diff(mu) for mu in range(m)] for gam in range(m)]

    ok_c, worst, witness = True, 0.0, None
    for a in range(m):
        for b in range(a, m):
            for gam in range(m):
                lhs = Jet.zero(m, None, kind)
                rhs = Jet.zero(m, None, kind)
                for lam in range(m):
                    if not data_old.c[lam][a][b].is_zero() and not J[gam][lam].is_zero():
                        lhs = lhs + data_old.c[lam][a][b] * J[gam][lam]
                for mu in range(m):
                    if J[mu][a].is_zero():
                        continue
                    for nu in range(m):
                        cc = data_new.c[gam][mu][nu]
                        if cc.is_zero() or J[nu][b].is_zero():
                            continue
                        rhs = rhs + J[mu][a] * J[nu][b] * cc.compose(phi_map)
                d = lhs - rhs
                if not d.is_zero():
                    ok_c = False
                    worst = max(worst, d.max_abs())
                    witness = witness or f"pair ({a},{b}) component {gam}"
    rep.add("structure_constants_agree", ok_c, worst, witness)

    # Euler field: J . E_old == E_new o phi
    E_old = expected_euler_field(n, m, kind)
    weights = [1] + [0] * n + [-1] * n + [-2]
    ok_e = True
    for gam in range(m):
        lhs = Jet.zero(m, None, kind)
        for mu in range(m):
            if not E_old[mu].is_zero() and not J[gam][mu].is_zero():
                lhs = lhs + J[gam][mu] * E_old[mu]
        if not (lhs - phi_map[gam].scale(weights[gam])).is_zero():
            ok_e = False
    rep.add("euler_field_agrees", ok_e)

    # metric comparison: pullback of the constant block metric along phi
    from .frobenius import metric_rows
    g = metric_rows(n, kind)
    metrics_equal = True
    for a in range(m):
        for b in range(m):
            acc = Jet.zero(m, None, kind)
            for mu in range(m):
                if J[mu][a].is_zero():
                    continue
                for nu in range(m):
                    if g[mu][nu] != 0 and not J[nu][b].is_zero():
                        acc = acc + (J[mu][a] * J[nu][b]).scale(g[mu][nu])
            if not (acc - Jet.const(g[a][b], m, INF, kind)).is_zero():
                metrics_equal = False
    rep.add("metric_pullback_computed", True,
            witness="equal" if metrics_equal else "metrics differ")

    u1_preserved = all(M[i][j] == 0 for j in range(n + 1, m) for i in range(n + 1))
    if u1_preserved:
        # fixed degree-1 splitting: the homogeneous prepotentials match under
        # the induced linear change of cone coordinates
        from .specialgeo import homogenize
        A = [[M[i][j] for j in range(n + 1)] for i in range(n + 1)]
        F_old = homogenize(model.psi).F
        F_new = homogenize(psi_new).F
        d = F_new - F_old.linear_substitute(A)
        rep.add("homogeneous_prepotential_agrees", d.is_zero(), d.max_abs())

    return RechartResult(t_new, psi_new, y_new, rep, metrics_equal, u1_preserved)


def locate_new_fiber_coordinates(tep_old: TEPModel, new_model: FlatFrameModel,
                                 M, t_new):
    """Find the distinguished lattice sections in the new adapted basis.

    Targets: new degree-1 and last sections must already lie in the lattice;
    the middle sections need one z^{-1} correction each whose coefficient is a
    fiber coordinate; the generator needs n+1 corrections.  Membership is
    decided through the valuation pattern of the coefficient series; the
    unknown coefficients solve the cancellation of the forbidden exponents.
    """
    rep = CheckReport()
    n, m = tep_old.n, tep_old.m
    kind = tep_old.F.kind
    q = section_shifts(n)
    zmax = tep_old.zmax

    B = factor_sections(tep_old.F, n)
    Binv = laurent_inverse_power_series(B, zmax + 3)

    MJ = JetMatrix.from_scalar(M, m, INF, kind)
    Vnew = new_model.V.map(lambda j: _extend_base(j, n, m))
    t_new_m = [_extend_base(t, n, m) for t in t_new]
    subs = [Jet.coordinate(0, m, INF, kind)] + t_new_m + \
        [Jet.coordinate(n + 1 + k, m, INF, kind) for k in range(n)] + \
        [Jet.coordinate(m - 1, m, INF, kind)]
    # sections of the new model expressed over the old coordinates
    Wcols = []
    for j in range(m):
        col = [Vnew[(i, j)].compose(subs) for i in range(m)]
        Wcols.append(MJ.apply(col))

    def forbidden_coeffs(series):
        """Jet equations: slot r needs z-exponents >= q_r in F^{-1}*target."""
        eqs = []
        for k, Mx in series.coeffs.items():
            for r in range(m):
                if k < q[r] and not Mx.entries[r][0].is_zero():
                    eqs.append((r, k, Mx.entries[r][0]))
        return eqs

    # (a) the last and degree-1 sections must be lattice members as they stand
    for j in [m - 1] + list(range(n + 1, 2 * n + 1)):
        shift = q[j]
        tl = LaurentMatrix(m, 1, m, kind,
                           {shift: JetMatrix([[e] for e in Wcols[j]])}, INF).clean()
        series = Binv * tl
        bad = forbidden_coeffs(series)
        rep.add(f"lattice_membership_slot_{j}", not bad,
                witness=None if not bad else f"forbidden exponent {bad[0][1]} in slot {bad[0][0]}")
        if bad:
            raise ReductionError("new adapted section is not a lattice member")

    # (b) middle sections: z w_i + x z^2 w_last with one unknown x each
    xs = []
    wlast = LaurentMatrix(m, 1, m, kind, {2: JetMatrix([[e] for e in Wcols[m - 1]])},
                          INF).clean()
    g_last = Binv * wlast
    for j in range(1, n + 1):
        base = LaurentMatrix(m, 1, m, kind, {1: JetMatrix([[e] for e in Wcols[j]])},
                             INF).clean()
        g0 = Binv * base
        x = solve_forbidden_cancellation(g0, [g_last], q, m)
        xs.append(x[0])
    # (c) generator: w_1 + sum_a Y_a z w_a + Y_last z^2 w_last
    gens = []
    for j in range(n + 1, 2 * n + 1):
        ga = LaurentMatrix(m, 1, m, kind, {1: JetMatrix([[e] for e in Wcols[j]])},
                           INF).clean()
        gens.append(Binv * ga)
    gens.append(g_last)
    g0 = Binv * LaurentMatrix(m, 1, m, kind, {0: JetMatrix([[e] for e in Wcols[0]])},
                              INF).clean()
    ys = solve_forbidden_cancellation(g0, gens, q, m)
    y_new = ys[:n] + [ys[n]]
    # consistency: the middle-section corrections equal the fiber coordinates
    ok = all((xs[j] - y_new[j]).is_zero() for j in range(n))
    rep.add("middle_coefficients_match_fiber", ok)
    if not ok:
        raise ReductionError("normal form inconsistent: x_a != y_a")
    return y_new, rep


def solve_forbidden_cancellation(g0: LaurentMatrix, gens, q, m):
    """Solve g0 + sum_k X_k gens[k] having no forbidden z-exponents.

    The unknowns are jets; equations come from every (slot, exponent) pair
    below the slot's threshold.  Pivots must be unit jets; the remaining
    equations are verified to vanish exactly.
    """
    unknowns = len(gens)
    eqs = {}
    exps = set(g0.coeffs)
    for g in gens:
        exps |= set(g.coeffs)
    for k in sorted(exps):
        for r in range(m):
            if k < q[r]:
                row = [g.coeff(k).entries[r][0] for g in gens]
                rhs = g0.coeff(k).entries[r][0].scale(-1)
                if all(e.is_zero() for e in row) and rhs.is_zero():
                    continue
                eqs[(r, k)] = (row, rhs)
    if not eqs:
        zero = Jet.zero(g0.num_vars, INF, g0.kind)
        return [zero] * unknowns
    keys = sorted(eqs)
    # Gaussian elimination over jets with unit pivots
    rows = [list(eqs[k][0]) + [eqs[k][1]] for k in keys]
    from .jets import inverse_unit
    order = None
    for row in rows:
        for e in row:
            if e.order is not INF:
                order = e.order if order is None else min(order, e.order)
    if order is None:
        order = 6
    used = set()
    piv_of_col = {}
    for col in range(unknowns):
        piv = None
        for ri, row in enumerate(rows):
            if ri not in used and row[col].constant_term() != 0:
                piv = ri
                break
        if piv is None:
            raise ReductionError(f"zero pivot for unknown {col}")
        used.add(piv)
        piv_of_col[col] = piv
        inv = inverse_unit(rows[piv][col].with_order(order), order)
        rows[piv] = [e * inv for e in rows[piv]]
        for ri in range(len(rows)):
            if ri != piv and not rows[ri][col].is_zero():
                f = rows[ri][col]
                rows[ri] = [e - f * ee for e, ee in zip(rows[ri], rows[piv])]
    for ri, row in enumerate(rows):
        if ri not in used and not row[unknowns].is_zero():
            raise ReductionError("overdetermined reduction is inconsistent")
    return [rows[piv_of_col[c]][unknowns] for c in range(unknowns)]
