"""Semihomogeneous Frobenius structures on 2n+2 coordinates.

Coordinate layout (0-based): slot 0 is the unit direction, slots 1..n the
base directions (the only ones the multiplication depends on), slots
n+1..2n the dual directions, slot 2n+1 the socle direction.  Weights
p = (0, 1^n, 2^n, 3); the Euler field is sum (1 - p_a) t_a d_a.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .jets import (COMPLEX, INF, RATIONAL, Jet, JetMatrix,
                   invert_scalar_matrix, lie_derivative_02, lie_derivative_12,
                   lie_derivative_vector)
from .reports import CheckReport


class InputError(ValueError):
    pass


def weights(n):
    return [0] + [1] * n + [2] * n + [3]


def metric_rows(n, kind=RATIONAL):
    """The constant antidiagonal-block metric: g(d_1, d_a) = delta_{a,last},
    g(d_i, d_a) = delta_{i+n,a}."""
    m = 2 * n + 2
    one = Fraction(1) if kind == RATIONAL else 1.0 + 0j
    g = [[one * 0 for _ in range(m)] for _ in range(m)]
    g[0][m - 1] = one
    g[m - 1][0] = one
    for k in range(1, n + 1):
        g[k][k + n] = one
        g[k + n][k] = one
    return g


@dataclass
class FrobeniusStructure:
    n: int
    order: int
    phi: Jet            # potential, jet in the full m coordinates
    g: list             # constant metric, m x m scalars
    c: list             # structure constants c[gamma][alpha][beta], jets in m vars
    euler_weights: list  # integers 1 - p_alpha

    @property
    def m(self):
        return 2 * self.n + 2

    @property
    def kind(self):
        return self.phi.kind

    def euler_field(self):
        return [Jet.coordinate(a, self.m, INF, self.kind).scale(w)
                for a, w in enumerate(self.euler_weights)]

    def unit_field(self):
        e = [Jet.zero(self.m, INF, self.kind) for _ in range(self.m)]
        e[0] = Jet.const(1, self.m, INF, self.kind)
        return e


def embed_base_jet(psi: Jet, n: int, m: int) -> Jet:
    """Re-embed an n-variable base jet into the m coordinates at slots 1..n."""
    return psi.extend(m, [1 + j for j in range(n)])


def build(psi: Jet, n: int, order: int) -> FrobeniusStructure:
    """Potential, metric, products, and Euler weights of the block-form structure."""
    if psi.num_vars != n:
        raise InputError("psi must be a jet in the n base variables")
    if psi.constant_term() != 0:
        raise InputError("psi(0) != 0")
    kind = psi.kind
    m = 2 * n + 2
    psi = psi.truncate(order).with_order(order)
    psim = embed_base_jet(psi, n, m)
    t = [Jet.coordinate(a, m, INF, kind) for a in range(m)]
    half = Fraction(1, 2) if kind == RATIONAL else 0.5
    phi = psim + (t[0] * t[0] * t[m - 1]).scale(half)
    for j in range(1, n + 1):
        phi = phi + t[0] * t[j] * t[j + n]

    zero = Jet.zero(m, INF, kind)
    one = Jet.const(1, m, INF, kind)
    c = [[[zero for _ in range(m)] for _ in range(m)] for _ in range(m)]

    def setc(g, a, b, val):
        c[g][a][b] = val
        c[g][b][a] = val

    for b in range(m):
        setc(b, 0, b, one)
    third = {}
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                key = tuple(sorted((i, j, k)))
                if key not in third:
                    third[key] = embed_base_jet(
                        psi.diff(key[0]).diff(key[1]).diff(key[2]), n, m)
                setc(n + 1 + k, 1 + i, 1 + j, third[key])
    for i in range(n):
        setc(m - 1, 1 + i, n + 1 + i, one)

    p = weights(n)
    return FrobeniusStructure(n, order, phi, metric_rows(n, kind),
                              c, [1 - pa for pa in p])


def c_from_potential(phi: Jet, g, n: int) -> list:
    """Independent route: c^gamma_{ab} = sum_mu g^{gamma mu} d_a d_b d_mu Phi."""
    m = 2 * n + 2
    kind = phi.kind
    ginv = invert_scalar_matrix(g, kind)
    c = [[[None] * m for _ in range(m)] for _ in range(m)]
    hess3 = {}
    for a in range(m):
        for b in range(a, m):
            for mu in range(m):
                key = tuple(sorted((a, b, mu)))
                if key not in hess3:
                    hess3[key] = phi.diff(key[0]).diff(key[1]).diff(key[2])
    for gam in range(m):
        for a in range(m):
            for b in range(a, m):
                acc = Jet.zero(m, None, kind).truncate(phi.order)
                for mu in range(m):
                    if ginv[gam][mu] != 0:
                        acc = acc + hess3[tuple(sorted((a, b, mu)))].scale(ginv[gam][mu])
                c[gam][a][b] = acc
                c[gam][b][a] = acc
    return c


def multiply_fields(fs: FrobeniusStructure, X, Y):
    """(X o Y)^gamma = sum c^gamma_{ab} X^a Y^b."""
    m = fs.m
    out = []
    for gam in range(m):
        acc = Jet.zero(m, None, fs.kind)
        for a in range(m):
            if X[a].is_zero():
                continue
            for b in range(m):
                if Y[b].is_zero() or fs.c[gam][a][b].is_zero():
                    continue
                acc = acc + fs.c[gam][a][b] * X[a] * Y[b]
        out.append(acc)
    return out


class _DefectTracker:
    """Worst single defect over many jet comparisons (no cancellation)."""

    def __init__(self):
        self.metric = 0
        self.witness = None

    def feed(self, d, where=""):
        if d.is_zero():
            return
        mx = d.max_abs()
        if self.witness is None or mx > self.metric:
            self.metric = mx
            self.witness = f"{where} {d.witness_monomial()}".strip()

    def record(self, rep, name, tol):
        rep.add(name, self.metric <= tol, float(self.metric), self.witness)


def verify_axioms(fs: FrobeniusStructure, tol=0.0) -> CheckReport:
    """The eight exact structure checks; tol > 0 switches to float thresholds."""
    rep = CheckReport()
    m = fs.m
    kind = fs.kind
    c = fs.c

    # (i) commutativity and associativity for all coordinate triples
    tr = _DefectTracker()
    for a in range(m):
        for b in range(a + 1, m):
            for gam in range(m):
                tr.feed(c[gam][a][b] - c[gam][b][a], f"c^{gam}_{a}{b}")
    for i in range(m):
        for j in range(m):
            for k in range(m):
                for gam in range(m):
                    left = Jet.zero(m, None, kind)
                    right = Jet.zero(m, None, kind)
                    for mu in range(m):
                        if not c[mu][i][j].is_zero() and not c[gam][mu][k].is_zero():
                            left = left + c[mu][i][j] * c[gam][mu][k]
                        if not c[mu][j][k].is_zero() and not c[gam][i][mu].is_zero():
                            right = right + c[mu][j][k] * c[gam][i][mu]
                    tr.feed(left - right, f"assoc({i},{j},{k})^{gam}")
    tr.record(rep, "commutativity_associativity", tol)

    # (ii) potentiality g(d_a o d_b, d_c) = d_a d_b d_c Phi
    tr = _DefectTracker()
    for a in range(m):
        for b in range(a, m):
            third = fs.phi.diff(a).diff(b)
            for gam in range(m):
                lhs = Jet.zero(m, None, kind)
                for mu in range(m):
                    if fs.g[mu][gam] != 0 and not c[mu][a][b].is_zero():
                        lhs = lhs + c[mu][a][b].scale(fs.g[mu][gam])
                tr.feed(lhs - third.diff(gam), f"pot({a},{b},{gam})")
    tr.record(rep, "potentiality", tol)

    # (iii) multiplication invariance g(X o Y, Z) = g(X, Y o Z)
    tr = _DefectTracker()
    for a in range(m):
        for b in range(m):
            for gam in range(m):
                lhs = Jet.zero(m, None, kind)
                rhs = Jet.zero(m, None, kind)
                for mu in range(m):
                    if fs.g[mu][gam] != 0 and not c[mu][a][b].is_zero():
                        lhs = lhs + c[mu][a][b].scale(fs.g[mu][gam])
                    if fs.g[a][mu] != 0 and not c[mu][b][gam].is_zero():
                        rhs = rhs + c[mu][b][gam].scale(fs.g[a][mu])
                tr.feed(lhs - rhs, f"inv({a},{b},{gam})")
    tr.record(rep, "metric_invariance", tol)

    # (iv) unit field: d_1 o d_b = d_b, and it is flat (constant coefficients)
    tr = _DefectTracker()
    one = Jet.const(1, m, INF, kind)
    for b in range(m):
        for gam in range(m):
            expect = one if gam == b else Jet.zero(m, INF, kind)
            tr.feed(c[gam][0][b] - expect, f"unit({b})^{gam}")
    tr.record(rep, "unit_field", tol)

    # (v) Lie_E(o) = o
    E = fs.euler_field()
    lie_c = lie_derivative_12(E, c)
    tr = _DefectTracker()
    for gam in range(m):
        for a in range(m):
            for b in range(m):
                tr.feed(lie_c[gam][a][b] - c[gam][a][b], f"LieE(c)({a},{b})^{gam}")
    tr.record(rep, "euler_multiplication", tol)

    # (vi) Lie_E(g) = -g
    gjets = [[Jet.const(fs.g[a][b], m, INF, kind) for b in range(m)] for a in range(m)]
    lie_g = lie_derivative_02(E, gjets)
    tr = _DefectTracker()
    for a in range(m):
        for b in range(m):
            tr.feed(lie_g[a][b] + gjets[a][b], f"LieE(g)({a},{b})")
    tr.record(rep, "euler_metric", tol)

    # (vii) Lie_{X o Y}(o) = X o Lie_Y(o) + Y o Lie_X(o) on coordinate pairs
    tr = _DefectTracker()
    coord_fields = []
    for a in range(m):
        f = [Jet.zero(m, INF, kind) for _ in range(m)]
        f[a] = one
        coord_fields.append(f)
    lie_by_dir = [lie_derivative_12(coord_fields[a], c) for a in range(m)]
    for a in range(m):
        for b in range(a, m):
            XoY = [c[gam][a][b] for gam in range(m)]
            lhs = lie_derivative_12(XoY, c)
            for gam in range(m):
                for r in range(m):
                    for s in range(m):
                        rhs = Jet.zero(m, None, kind)
                        for mu in range(m):
                            if not lie_by_dir[b][mu][r][s].is_zero() and not c[gam][a][mu].is_zero():
                                rhs = rhs + c[gam][a][mu] * lie_by_dir[b][mu][r][s]
                            if not lie_by_dir[a][mu][r][s].is_zero() and not c[gam][b][mu].is_zero():
                                rhs = rhs + c[gam][b][mu] * lie_by_dir[a][mu][r][s]
                        tr.feed(lhs[gam][r][s] - rhs, f"fman({a},{b})")
    tr.record(rep, "f_manifold_identity", tol)

    # (viii) semihomogeneity: nabla_X E is flat with eigenvalue multiset
    # {1 - p_a} (equivalently Lie_E acts on flat fields with weights p_a - 1)
    E = fs.euler_field()
    nablaE = [[E[gam].diff(b) for b in range(m)] for gam in range(m)]  # rows gamma, cols b
    flat_ok = all(nablaE[gam][b].degree() == 0 for gam in range(m) for b in range(m))
    eigs = sorted(nablaE[a][a].constant_term() for a in range(m))
    offdiag_zero = all(nablaE[gam][b].is_zero() for gam in range(m) for b in range(m) if gam != b)
    expect_nabla = sorted(Fraction(w) if kind == RATIONAL else complex(w)
                          for w in fs.euler_weights)
    p = weights(fs.n)
    lie_eigs = sorted(-e for e in eigs)  # Lie_E d_a = (p_a - 1) d_a
    expect_lie = sorted(Fraction(pa - 1) if kind == RATIONAL else complex(pa - 1) for pa in p)
    ok = flat_ok and offdiag_zero and eigs == expect_nabla and lie_eigs == expect_lie
    rep.add("semihomogeneity", ok,
            witness=None if ok else f"nablaE eigenvalues {eigs}")
    return rep


def quadratic_shift(fs: FrobeniusStructure, Q: Jet):
    """Shift the potential by a polynomial of degree <= 2; certify nothing moves."""
    if Q.num_vars != fs.m:
        raise InputError("Q must live in the full coordinate context")
    if Q.degree() > 2:
        raise InputError("polynomial degree must be <= 2")
    phi2 = fs.phi + Q
    c_old = c_from_potential(fs.phi, fs.g, fs.n)
    c_new = c_from_potential(phi2, fs.g, fs.n)
    rep = CheckReport()
    tr = _DefectTracker()
    for gam in range(fs.m):
        for a in range(fs.m):
            for b in range(fs.m):
                tr.feed(c_new[gam][a][b] - c_old[gam][a][b], f"c^{gam}_{a}{b}")
    tr.record(rep, "quadratic_shift_constants_equal", 0.0)
    shifted = FrobeniusStructure(fs.n, fs.order, phi2, fs.g, fs.c, fs.euler_weights)
    return shifted, rep


# ----------------------------------------------------------------- automorphisms


@dataclass
class AutomorphismCandidate:
    beta: Fraction
    gamma: list  # symmetric n x n matrix of jets in the base variables

    def validate(self, n):
        if len(self.gamma) != n or any(len(r) != n for r in self.gamma):
            raise InputError("gamma must be n x n")
        for a in range(n):
            for b in range(n):
                if not (self.gamma[a][b] - self.gamma[b][a]).is_zero():
                    raise InputError("gamma must be symmetric")


def automorphism_check(fs: FrobeniusStructure, cand: AutomorphismCandidate):
    """Pushforward test of the candidate map plus the independent closed conditions.

    The map is phi_1 = t_1, phi_i = t_i, phi_a = beta t_a,
    phi_last = beta t_last + sum gamma_ab t_a t_b.  Pass iff multiplication,
    unit and Euler field are preserved; cross-checked against the conditions
    "beta = 1 unless every third derivative vanishes" and
    "(d_i o d_j)(phi_last) = 0".
    """
    n, m = fs.n, fs.m
    kind = fs.kind
    cand.validate(n)
    beta = Fraction(cand.beta) if kind == RATIONAL else complex(cand.beta)
    t = [Jet.coordinate(a, m, INF, kind) for a in range(m)]
    phi_map = [t[0]] + [t[1 + j] for j in range(n)] + \
        [t[n + 1 + j].scale(beta) for j in range(n)]
    last = t[m - 1].scale(beta)
    gam_m = [[embed_base_jet(cand.gamma[a][b], n, m) for b in range(n)] for a in range(n)]
    for a in range(n):
        for b in range(n):
            last = last + gam_m[a][b] * t[n + 1 + a] * t[n + 1 + b]
    phi_map.append(last)

    J = [[phi_map[gam].diff(b) for b in range(m)] for gam in range(m)]  # J[gamma][mu]

    # multiplication: sum_l c^l_{ab} J^g_l == sum_{mu,nu} J^mu_a J^nu_b c^g_{mu nu} o phi
    # (c depends only on the base block, which phi fixes, so no composition needed)
    ok_mult = True
    witness = None
    for a in range(m):
        for b in range(a, m):
            for gam in range(m):
                lhs = Jet.zero(m, None, kind)
                rhs = Jet.zero(m, None, kind)
                for mu in range(m):
                    if not fs.c[mu][a][b].is_zero() and not J[gam][mu].is_zero():
                        lhs = lhs + fs.c[mu][a][b] * J[gam][mu]
                    for nu in range(m):
                        if not fs.c[gam][mu][nu].is_zero() and not J[mu][a].is_zero() \
                                and not J[nu][b].is_zero():
                            rhs = rhs + J[mu][a] * J[nu][b] * fs.c[gam][mu][nu]
                d = lhs - rhs
                if not d.is_zero():
                    ok_mult = False
                    witness = f"product (d_{a+1}, d_{b+1}) component {gam+1}"
    # unit: J column 0 must be e_1
    ok_unit = all((J[gam][0] - (Jet.const(1, m, INF, kind) if gam == 0 else
                                Jet.zero(m, INF, kind))).is_zero() for gam in range(m))
    # Euler: sum_mu J^g_mu E^mu == E^g o phi = weight * phi_g
    E = fs.euler_field()
    ok_euler = True
    for gam in range(m):
        lhs = Jet.zero(m, None, kind)
        for mu in range(m):
            if not E[mu].is_zero() and not J[gam][mu].is_zero():
                lhs = lhs + J[gam][mu] * E[mu]
        rhs = phi_map[gam].scale(fs.euler_weights[gam])
        if not (lhs - rhs).is_zero():
            ok_euler = False

    is_auto = ok_mult and ok_unit and ok_euler

    # independent conditions from the classification
    has_cubic = False
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                psi3 = fs.phi.diff(1 + i).diff(1 + j).diff(1 + k)
                if not psi3.is_zero():
                    has_cubic = True
    forced_beta = 1 if has_cubic else None
    cond_beta = (beta == 1) if has_cubic else True
    cond_gamma = True
    for i in range(n):
        for j in range(i, n):
            acc = Jet.zero(m, None, kind)
            for k in range(n):
                if not fs.c[n + 1 + k][1 + i][1 + j].is_zero():
                    acc = acc + fs.c[n + 1 + k][1 + i][1 + j] * phi_map[m - 1].diff(n + 1 + k)
            if not acc.is_zero():
                cond_gamma = False
    conditions_pass = cond_beta and cond_gamma
    return {"is_automorphism": is_auto,
            "forced_beta": forced_beta,
            "conditions_pass": conditions_pass,
            "witness": witness,
            "routes_agree": is_auto == conditions_pass}
