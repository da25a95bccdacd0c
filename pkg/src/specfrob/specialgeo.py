"""Holomorphic projective special geometry on the cone coordinates z_1..z_{n+1}.

A degree-d homogeneous function is stored as graded pieces: the piece of
inner degree k is a homogeneous jet in (z_2..z_{n+1}) multiplying
z_1^(d-k).  Negative z_1-exponents are therefore exact, and the affine
chart {z_1 = 1} is just the sum of the pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .jets import INF, RATIONAL, Jet
from .reports import CheckReport


class InputError(ValueError):
    pass


def homogeneous_parts(jet: Jet):
    parts = {}
    for e, c in jet.coeffs.items():
        parts.setdefault(sum(e), {})[e] = c
    return {k: Jet(jet.num_vars, jet.order, d, jet.kind) for k, d in parts.items()}


@dataclass
class GradedFunction:
    """sum_k z_1^(eps_degree - k) * piece_k(z_2..z_{n+1}), piece_k homogeneous of degree k."""
    n: int
    eps_degree: int
    order: int
    pieces: dict
    kind: str = RATIONAL

    def _clean(self):
        self.pieces = {k: p for k, p in self.pieces.items() if not p.is_zero()}
        return self

    @classmethod
    def zero(cls, n, eps_degree, order, kind=RATIONAL):
        return cls(n, eps_degree, order, {}, kind)

    @classmethod
    def from_chart_jet(cls, jet: Jet, eps_degree, order=None):
        """The unique degree-eps extension of a function on {z_1 = 1}."""
        order = jet.order if order is None else order
        return cls(jet.num_vars, eps_degree, order, homogeneous_parts(jet.truncate(order)),
                   jet.kind)._clean()

    @classmethod
    def coordinate_z(cls, i, n, order, kind=RATIONAL):
        """z_i as a degree-1 graded function; i = 0 means z_1."""
        if i == 0:
            return cls(n, 1, order, {0: Jet.const(1, n, INF, kind)}, kind)
        return cls(n, 1, order, {1: Jet.coordinate(i - 1, n, INF, kind)}, kind)

    def piece(self, k):
        if k in self.pieces:
            return self.pieces[k]
        return Jet.zero(self.n, self.order, self.kind)

    def is_zero(self):
        return all(p.is_zero() for p in self.pieces.values())

    def max_abs(self):
        return max((p.max_abs() for p in self.pieces.values()), default=0.0)

    def __add__(self, other):
        self._match(other)
        ks = set(self.pieces) | set(other.pieces)
        return GradedFunction(self.n, self.eps_degree, min(self.order, other.order),
                              {k: self.piece(k) + other.piece(k) for k in ks},
                              self.kind)._clean()

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, s):
        return GradedFunction(self.n, self.eps_degree, self.order,
                              {k: p.scale(s) for k, p in self.pieces.items()}, self.kind)

    def __mul__(self, other):
        self._match(other, same_degree=False)
        out = {}
        for k1, p1 in self.pieces.items():
            for k2, p2 in other.pieces.items():
                k = k1 + k2
                if k > min(self.order, other.order):
                    continue
                q = p1 * p2
                out[k] = out.get(k, Jet.zero(self.n, self.order, self.kind)) + q
        return GradedFunction(self.n, self.eps_degree + other.eps_degree,
                              min(self.order, other.order), out, self.kind)._clean()

    def _match(self, other, same_degree=True):
        if self.n != other.n or self.kind != other.kind:
            raise InputError("graded context mismatch")
        if same_degree and self.eps_degree != other.eps_degree:
            raise InputError("eps-degree mismatch")

    def diff_z1(self):
        d = self.eps_degree
        return GradedFunction(self.n, d - 1, self.order,
                              {k: p.scale(d - k) for k, p in self.pieces.items()},
                              self.kind)._clean()

    def diff_zi(self, i):
        """d/dz_i for i = 1..n (the non-cone variables, 0-based into the jet)."""
        out = {}
        for k, p in self.pieces.items():
            dp = p.diff(i)
            if not dp.is_zero():
                out[k - 1] = out.get(k - 1, Jet.zero(self.n, self.order, self.kind)) + dp
        return GradedFunction(self.n, self.eps_degree - 1, self.order, out, self.kind)._clean()

    def diff(self, i):
        """d/dz_{i+1}: i = 0 is the cone variable z_1."""
        return self.diff_z1() if i == 0 else self.diff_zi(i - 1)

    def euler_defect(self):
        """eps(F) - d*F as a graded function; zero by construction, verified."""
        out = {}
        for k, p in self.pieces.items():
            q = p.euler_apply(shift=self.eps_degree - k) - p.scale(self.eps_degree)
            out[k] = q
        return GradedFunction(self.n, self.eps_degree, self.order, out, self.kind)._clean()

    def restrict_chart(self):
        """Value on {z_1 = 1}: the sum of the pieces as a jet."""
        total = Jet.zero(self.n, self.order, self.kind)
        for p in self.pieces.values():
            total = total + p
        return total

    def linear_substitute(self, A):
        """Pull back along z = A z~ for an invertible (n+1) x (n+1) matrix A.

        Negative powers of the new cone coordinate are expanded as a
        truncated binomial series, which is exact at the working order as
        long as A[0][0] is invertible.
        """
        if A[0][0] == 0:
            raise InputError("substitution does not preserve the cone chart")
        n, order, kind = self.n, self.order, self.kind
        a00 = A[0][0]
        # u := (sum_{i>=1} A[0][i] z~_{i+1}) / a00, so z_1 = a00 * z1~ * (1 + u/z1~)
        u = Jet.zero(n, INF, kind)
        for i in range(1, n + 1):
            if A[0][i] != 0:
                u = u + Jet.coordinate(i - 1, n, INF, kind).scale(A[0][i] / a00)
        # new z_i (i >= 2) on the chart {z1~ = 1}: these are jets in the new
        # chart variables; grading is restored from homogeneity afterwards
        zs = []
        for j in range(1, n + 1):
            w = Jet.const(A[j][0], n, INF, kind)
            for i in range(1, n + 1):
                if A[j][i] != 0:
                    w = w + Jet.coordinate(i - 1, n, INF, kind).scale(A[j][i])
            zs.append(w)
        total = Jet.zero(n, order, kind)
        upow = [Jet.const(1, n, INF, kind)]
        for _ in range(order + 1):
            upow.append((upow[-1] * u).truncate(order))
        for k, p in self.pieces.items():
            e = self.eps_degree - k  # exponent of z_1
            # p(z_2..) evaluated at the new chart values
            val = substitute_affine(p, zs, order)
            if e >= 0:
                base = Jet.const(1, n, INF, kind)
                for _ in range(e):
                    base = (base * (Jet.const(1, n, INF, kind) + u)).truncate(order)
                contrib = (val * base).scale(a00 ** e)
            else:
                # (1 + u)^e as a truncated series for negative e
                series = Jet.zero(n, order, kind)
                for j in range(order + 1):
                    coeff = Fraction(1) if kind == RATIONAL else 1.0 + 0j
                    for t in range(j):
                        coeff = coeff * Fraction(e - t, t + 1) if kind == RATIONAL \
                            else coeff * (e - t) / (t + 1)
                    series = series + upow[j].scale(coeff)
                inv_a = (Fraction(1) / a00) if kind == RATIONAL else 1.0 / a00
                contrib = (val * series).scale(inv_a ** (-e))
            total = total + contrib
        return GradedFunction.from_chart_jet(total.with_order(order), self.eps_degree, order)


def substitute_affine(p: Jet, zs, order):
    """Evaluate a polynomial jet at affine-linear arguments (constant terms allowed)."""
    kind = p.kind
    n = p.num_vars
    total = Jet.zero(n, order, kind)
    cache = [{0: Jet.const(1, n, INF, kind)} for _ in range(n)]

    def power(i, k):
        memo = cache[i]
        if k not in memo:
            memo[k] = (power(i, k - 1) * zs[i]).truncate(order)
        return memo[k]

    for e, c in sorted(p.coeffs.items()):
        term = Jet.const(c, n, INF, kind)
        for i, k in enumerate(e):
            if k:
                term = (term * power(i, k)).truncate(order)
        total = total + term
    return total


# ------------------------------------------------------------------ operations


@dataclass
class HomogeneousPrepotential:
    n: int
    order: int
    F: GradedFunction  # eps-degree 2


@dataclass
class SigmaTaut:
    """Coefficients of the tautological section in the symplectic frame."""
    z: list  # degree-1 graded functions, length n+1
    w: list  # degree-1 graded functions, length n+1


def homogenize(psi: Jet, order=None) -> HomogeneousPrepotential:
    if psi.constant_term() != 0:
        raise InputError("psi(0) != 0")
    order = psi.order if order is None else order
    F = GradedFunction.from_chart_jet(psi, 2, order)
    return HomogeneousPrepotential(psi.num_vars, order, F)


def restrict(hp: HomogeneousPrepotential, strict=False):
    """Back to the affine chart, with the normalization and quadratic-class certificate.

    strict=True enforces the canonical normalization F(z_1=1, 0) = 0; the
    lenient default records the check and returns the class representative,
    so quadratic-action shifts (which add chart constants) stay restrictable.
    """
    psi = hp.F.restrict_chart()
    rep = CheckReport()
    norm = hp.F.piece(0)
    rep.add("chart_normalization", norm.is_zero(),
            witness=None if norm.is_zero() else "F(z_1=1, 0) != 0")
    if strict and not norm.is_zero():
        raise InputError("normalization error: F(z_1=1, z_i=0) != 0")
    # the class F + quadratics restricts onto the degree-<=2 class on the chart:
    # restrict a basis of quadratics and check each has chart degree <= 2
    n, order, kind = hp.n, hp.order, hp.F.kind
    ok = True
    for i in range(n + 1):
        for j in range(i, n + 1):
            q = GradedFunction.coordinate_z(i, n, order, kind) * \
                GradedFunction.coordinate_z(j, n, order, kind)
            if q.restrict_chart().degree() > 2:
                ok = False
    rep.add("quadratic_class_restricts", ok)
    return psi, rep


def adjoint_coordinates(hp: HomogeneousPrepotential) -> SigmaTaut:
    n, order = hp.n, hp.order
    kind = hp.F.kind
    z = [GradedFunction.coordinate_z(i, n, order, kind) for i in range(n + 1)]
    w = [hp.F.diff(i) for i in range(n + 1)]
    return SigmaTaut(z, w)


def adjoint_checks(hp: HomogeneousPrepotential) -> CheckReport:
    """Euler identity sum z_i w_i = 2F, eps-eigenvalue of w, curl symmetry."""
    rep = CheckReport()
    st = adjoint_coordinates(hp)
    n = hp.n
    total = GradedFunction.zero(n, 2, hp.order, hp.F.kind)
    for i in range(n + 1):
        total = total + st.z[i] * st.w[i]
    diff = total - hp.F.scale(2)
    rep.add("euler_identity", diff.is_zero(), diff.max_abs())
    eps_ok = hp.F.euler_defect().is_zero()
    for wi in st.w:
        eps_ok = eps_ok and wi.euler_defect().is_zero()
    rep.add("eps_eigenvalues", eps_ok)
    curl_ok = True
    worst = 0.0
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            d = st.w[i].diff(j) - st.w[j].diff(i)
            if not d.is_zero():
                curl_ok = False
                worst = max(worst, d.max_abs())
    rep.add("curl_symmetry", curl_ok, worst)
    return rep


def quadratic_action(hp: HomogeneousPrepotential, A) -> HomogeneousPrepotential:
    """F -> F - (1/2) sum A_ij z_i z_j for a symmetric (n+1) x (n+1) matrix."""
    n = hp.n
    for i in range(n + 1):
        for j in range(n + 1):
            if A[i][j] != A[j][i]:
                raise InputError("quadratic action needs a symmetric matrix")
    half = Fraction(1, 2) if hp.F.kind == RATIONAL else 0.5
    quad = GradedFunction.zero(n, 2, hp.order, hp.F.kind)
    for i in range(n + 1):
        for j in range(n + 1):
            if A[i][j] != 0:
                q = GradedFunction.coordinate_z(i, n, hp.order, hp.F.kind) * \
                    GradedFunction.coordinate_z(j, n, hp.order, hp.F.kind)
                quad = quad + q.scale(A[i][j] * half)
    return HomogeneousPrepotential(n, hp.order, hp.F - quad)


def cubic(hp: HomogeneousPrepotential, i, j, k) -> GradedFunction:
    return hp.F.diff(i).diff(j).diff(k)


def cubic_identity_check(hp: HomogeneousPrepotential) -> CheckReport:
    """-S(sigma_taut, third covariant derivative of sigma_taut) = third
    derivative of F, for every index triple; both sides computed literally."""
    rep = CheckReport()
    st = adjoint_coordinates(hp)
    n = hp.n
    ok = True
    worst = 0.0
    witness = None
    for i in range(n + 1):
        for j in range(n + 1):
            for k in range(n + 1):
                # flat-frame coefficient vector of the third derivative:
                # (d3 z_m, d3 w_m); S(a_m, b_m) = +1
                lhs = GradedFunction.zero(n, -1, hp.order, hp.F.kind)
                for mm in range(n + 1):
                    d3w = st.w[mm].diff(i).diff(j).diff(k)
                    d3z = st.z[mm].diff(i).diff(j).diff(k)
                    lhs = lhs + st.z[mm] * d3w - st.w[mm] * d3z
                lhs = lhs.scale(-1)
                rhs = cubic(hp, i, j, k)
                d = lhs - rhs
                if not d.is_zero():
                    ok = False
                    worst = max(worst, d.max_abs())
                    witness = f"triple ({i+1},{j+1},{k+1})"
    rep.add("cubic_identity", ok, worst, witness)
    return rep
