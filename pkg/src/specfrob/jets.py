"""Truncated multivariate power series ("jets") over exact rationals or complex floats.

A jet is a sparse polynomial truncated at a total degree together with a
validity order: coefficients of degree <= order are meaningful, everything
above is discarded.  Differentiation lowers the validity order by one;
multiplication propagates validity through the valuations of the factors,
so that e.g. multiplying by a coordinate never loses a degree.  An order of
None means "exact polynomial" (valid to every degree).
"""

from __future__ import annotations

import cmath
from fractions import Fraction

RATIONAL = "rational"
COMPLEX = "complex"

INF = None  # validity order sentinel for exact polynomials


class ContextError(ValueError):
    """Mismatched variable count, order, or scalar kind."""


class CompositionError(ValueError):
    """Inner jet of a composition has a nonzero constant term."""


class DegenerateCoordinates(ValueError):
    """Coordinate system with singular linear part."""


def _omin(a, b):
    if a is INF:
        return b
    if b is INF:
        return a
    return min(a, b)


def _oadd(a, k):
    return INF if a is INF else a + k


def _as_scalar(c, kind):
    if kind == RATIONAL:
        if isinstance(c, Fraction):
            return c
        if isinstance(c, int):
            return Fraction(c)
        raise ContextError(f"rational jet got scalar {type(c).__name__}")
    c = complex(c)
    if not (cmath.isfinite(c)):
        raise ContextError("complex scalar is NaN/Inf")
    return c


class Jet:
    __slots__ = ("num_vars", "order", "kind", "coeffs")

    def __init__(self, num_vars, order, coeffs, kind=RATIONAL):
        self.num_vars = num_vars
        self.order = order
        self.kind = kind
        clean = {}
        for exp, c in coeffs.items():
            if len(exp) != num_vars:
                raise ContextError("exponent length != num_vars")
            if order is not INF and sum(exp) > order:
                continue
            c = _as_scalar(c, kind)
            if c == 0:
                continue
            clean[exp] = c
        self.coeffs = clean

    # ---------------------------------------------------------------- basics

    @classmethod
    def zero(cls, num_vars, order=INF, kind=RATIONAL):
        return cls(num_vars, order, {}, kind)

    @classmethod
    def const(cls, value, num_vars, order=INF, kind=RATIONAL):
        return cls(num_vars, order, {(0,) * num_vars: value}, kind)

    @classmethod
    def coordinate(cls, var, num_vars, order=INF, kind=RATIONAL):
        exp = tuple(1 if i == var else 0 for i in range(num_vars))
        one = Fraction(1) if kind == RATIONAL else 1.0 + 0.0j
        return cls(num_vars, order, {exp: one}, kind)

    def is_zero(self):
        return not self.coeffs

    def valuation(self):
        """Lowest total degree of a stored term; INF for the zero jet."""
        if not self.coeffs:
            return INF
        return min(sum(e) for e in self.coeffs)

    def degree(self):
        if not self.coeffs:
            return 0
        return max(sum(e) for e in self.coeffs)

    def constant_term(self):
        zero = Fraction(0) if self.kind == RATIONAL else 0.0 + 0.0j
        return self.coeffs.get((0,) * self.num_vars, zero)

    def truncate(self, order):
        if order is INF or (self.order is not INF and self.order <= order):
            return self
        return Jet(self.num_vars, order, self.coeffs, self.kind)

    def with_order(self, order):
        return Jet(self.num_vars, order, self.coeffs, self.kind)

    def _check(self, other):
        if self.num_vars != other.num_vars:
            raise ContextError("num_vars mismatch")
        if self.kind != other.kind:
            raise ContextError("scalar kind mismatch")

    # ------------------------------------------------------------ arithmetic

    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.const(other, self.num_vars, INF, self.kind)
        self._check(other)
        order = _omin(self.order, other.order)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return Jet(self.num_vars, order, out, self.kind)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else Jet.const(-_as_scalar(other, self.kind), self.num_vars, INF, self.kind))

    def __neg__(self):
        return Jet(self.num_vars, self.order, {e: -c for e, c in self.coeffs.items()}, self.kind)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        # fixed-order ring semantics for truncated operands; an exact operand
        # (order INF) shifts the partner's validity by its valuation, so that
        # multiplying by coordinates or constants never loses a degree
        if self.order is INF and other.order is INF:
            order = INF
        elif self.order is INF:
            order = _oadd(other.order, self.valuation() if self.coeffs else 0)
        elif other.order is INF:
            order = _oadd(self.order, other.valuation() if other.coeffs else 0)
        else:
            order = min(self.order, other.order)
        if not self.coeffs or not other.coeffs:
            return Jet.zero(self.num_vars, order, self.kind)
        a, b = self.coeffs, other.coeffs
        if len(a) > len(b):
            a, b = b, a
        out = {}
        for e1, c1 in a.items():
            d1 = sum(e1)
            for e2, c2 in b.items():
                if order is not INF and d1 + sum(e2) > order:
                    continue
                e = tuple(x + y for x, y in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Jet(self.num_vars, order, out, self.kind)

    __radd__ = __add__
    __rmul__ = __mul__

    def scale(self, s):
        s = _as_scalar(s, self.kind)
        return Jet(self.num_vars, self.order, {e: c * s for e, c in self.coeffs.items()}, self.kind)

    def __pow__(self, k):
        assert isinstance(k, int) and k >= 0
        out = Jet.const(1, self.num_vars, INF, self.kind)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def __eq__(self, other):
        """Exact equality of stored coefficients up to the common validity order."""
        if not isinstance(other, Jet):
            other = Jet.const(other, self.num_vars, INF, self.kind)
        order = _omin(self.order, other.order)
        if order is not INF and order < 0:
            raise ContextError("cannot compare jets below validity order 0")
        return (self - other).truncate(order).is_zero()

    __hash__ = None  # mutable-ish semantics; jets are not dict keys

    # ---------------------------------------------------------------- calculus

    def diff(self, var):
        """Formal partial derivative; validity order drops by one."""
        if var >= self.num_vars:
            raise ContextError("variable index out of range")
        out = {}
        for e, c in self.coeffs.items():
            k = e[var]
            if k == 0:
                continue
            e2 = e[:var] + (k - 1,) + e[var + 1:]
            out[e2] = out.get(e2, 0) + c * k
        return Jet(self.num_vars, _oadd(self.order, -1), out, self.kind)

    def euler_apply(self, shift=0):
        """(sum_i x_i d_i + shift) applied to the jet; exact per-monomial."""
        out = {}
        for e, c in self.coeffs.items():
            out[e] = c * (sum(e) + shift)
        return Jet(self.num_vars, self.order, out, self.kind)

    def compose(self, inner):
        """Substitute inner[i] for variable i; every inner jet needs zero constant term."""
        if len(inner) != self.num_vars:
            raise CompositionError("need one inner jet per outer variable")
        if not inner:
            raise CompositionError("composition needs at least one variable")
        nv = inner[0].num_vars
        kind = inner[0].kind
        order = self.order
        for g in inner:
            if g.num_vars != nv or g.kind != kind:
                raise ContextError("inner jets share no common context")
            if g.constant_term() != 0:
                raise CompositionError("inner jet has nonzero constant term")
            order = _omin(order, g.order)
        one = Jet.const(1, nv, INF, kind)
        cache = [{0: one} for _ in range(self.num_vars)]

        def power(i, k):
            memo = cache[i]
            if k not in memo:
                memo[k] = (power(i, k - 1) * inner[i]).truncate(order)
            return memo[k]

        total = Jet.zero(nv, order, kind)
        for e, c in sorted(self.coeffs.items()):
            if order is not INF and sum(e) > order:
                continue
            term = Jet.const(c, nv, INF, kind)
            for i, k in enumerate(e):
                if k:
                    term = term * power(i, k)
            total = total + term
        return total.truncate(order)

    def substitute_zero(self, vars_to_zero):
        """Set the listed variables to 0 (keeps the variable context)."""
        keep = {e: c for e, c in self.coeffs.items() if all(e[v] == 0 for v in vars_to_zero)}
        return Jet(self.num_vars, self.order, keep, self.kind)

    def scale_vars(self, factors):
        """Substitute x_i -> factors[i] * x_i (dict var -> scalar)."""
        out = {}
        for e, c in self.coeffs.items():
            v = c
            for var, f in factors.items():
                k = e[var]
                if k:
                    for _ in range(k):
                        v = v * f
            out[e] = out.get(e, 0) + v
        return Jet(self.num_vars, self.order, out, self.kind)

    def extend(self, num_vars, var_map):
        """Re-embed into a larger variable context; var_map[i] = new index of old var i."""
        out = {}
        for e, c in self.coeffs.items():
            e2 = [0] * num_vars
            for i, k in enumerate(e):
                e2[var_map[i]] = k
            out[tuple(e2)] = c
        return Jet(num_vars, self.order, out, self.kind)

    def eval_scalars(self, point):
        """Evaluate at a scalar point (mainly for complex-kind jets)."""
        total = 0
        for e, c in self.coeffs.items():
            v = c
            for x, k in zip(point, e):
                for _ in range(k):
                    v = v * x
            total += v
        return total

    def max_abs(self):
        """Largest absolute value of a coefficient (float); 0 for the zero jet."""
        if not self.coeffs:
            return 0.0
        return max(abs(c) for c in self.coeffs.values())

    def witness_monomial(self):
        """Some nonzero monomial exponent, smallest degree first; None if zero."""
        if not self.coeffs:
            return None
        return min(self.coeffs, key=lambda e: (sum(e), e))

    def __repr__(self):
        if not self.coeffs:
            body = "0"
        else:
            parts = []
            for e, c in sorted(self.coeffs.items(), key=lambda t: (sum(t[0]), t[0])):
                mono = "*".join(f"x{i}^{k}" for i, k in enumerate(e) if k)
                parts.append(f"{c}" + (f"*{mono}" if mono else ""))
            body = " + ".join(parts)
        return f"Jet[{self.num_vars}v,o={self.order}]({body})"


# --------------------------------------------------------------------- division


def inverse_unit(a: Jet, order=None) -> Jet:
    """Multiplicative inverse of a jet with invertible constant term."""
    c0 = a.constant_term()
    if c0 == 0:
        raise DegenerateCoordinates("jet has no invertible constant term")
    order = a.order if order is None else order
    if order is INF:
        # an exact-polynomial input still only has a power-series inverse;
        # caller must pick a truncation order
        raise ContextError("inverse of an exact polynomial needs an explicit order")
    inv0 = Fraction(1) / c0 if a.kind == RATIONAL else 1.0 / c0
    x = Jet.const(inv0, a.num_vars, order, a.kind)
    two = Jet.const(2, a.num_vars, INF, a.kind)
    at = a.truncate(order).with_order(order)
    k = 1
    while k <= order:
        x = (x * (two - at * x)).with_order(order)
        k *= 2
    return x


def divide(a: Jet, b: Jet, order=None) -> Jet:
    if order is None:
        order = _omin(a.order, b.order)
    if order is INF:
        order = max(a.degree(), b.degree()) + 1
    return (a.truncate(order) * inverse_unit(b, order)).with_order(_omin(_omin(a.order, b.order), order))


# ----------------------------------------------------------- coordinate inversion


def invert_coordinates(maps, order=None):
    """Compositional inverse of a square jet map with invertible linear part.

    maps: m jets in m variables, zero constant terms.  Returns g with
    compose(maps, g) = identity to the working order.
    """
    m = len(maps)
    if m == 0:
        return []
    nv = maps[0].num_vars
    kind = maps[0].kind
    if nv != m:
        raise ContextError("need a square system")
    if order is None:
        order = maps[0].order
        for f in maps:
            order = _omin(order, f.order)
    if order is INF:
        order = max(f.degree() for f in maps)
    L = [[Fraction(0) if kind == RATIONAL else 0j] * m for _ in range(m)]
    for j, f in enumerate(maps):
        if f.constant_term() != 0:
            raise CompositionError("coordinate map has nonzero constant term")
        for i in range(m):
            e = tuple(1 if t == i else 0 for t in range(m))
            L[j][i] = f.coeffs.get(e, Fraction(0) if kind == RATIONAL else 0j)
    Linv = invert_scalar_matrix(L, kind)
    if Linv is None:
        raise DegenerateCoordinates("degenerate coordinates")
    # split f = L x + h(x); iterate g <- Linv(y - h(g))
    hs = []
    for j, f in enumerate(maps):
        lin = {tuple(1 if t == i else 0 for t in range(m)): L[j][i] for i in range(m)}
        h = f - Jet(m, f.order, lin, kind)
        hs.append(h.truncate(order))
    ys = [Jet.coordinate(i, m, INF, kind) for i in range(m)]
    g = [sum((ys[i].scale(Linv[j][i]) for i in range(m)), Jet.zero(m, order, kind)).with_order(order)
         for j in range(m)]
    for _ in range(order):
        hg = [h.compose(g) for h in hs]
        g = [sum(((ys[i] - hg[i]).scale(Linv[j][i]) for i in range(m)),
                 Jet.zero(m, order, kind)).with_order(order)
             for j in range(m)]
    return g


def invert_scalar_matrix(rows, kind=RATIONAL):
    """Exact Gauss-Jordan inverse; returns None when singular."""
    m = len(rows)
    one = Fraction(1) if kind == RATIONAL else 1.0 + 0j
    aug = [[_as_scalar(rows[i][j], kind) for j in range(m)] + [one if i == j else one * 0 for j in range(m)]
           for i in range(m)]
    for col in range(m):
        piv = None
        if kind == COMPLEX:
            cand = max(range(col, m), key=lambda r: abs(aug[r][col]))
            if abs(aug[cand][col]) > 1e-14:
                piv = cand
        else:
            for r in range(col, m):
                if aug[r][col] != 0:
                    piv = r
                    break
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        d = aug[col][col]
        aug[col] = [x / d for x in aug[col]]
        for r in range(m):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[m:] for row in aug]


# ------------------------------------------------------------------- matrices


class JetMatrix:
    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        self.entries = entries
        self.rows = len(entries)
        self.cols = len(entries[0]) if entries else 0

    @classmethod
    def zero(cls, rows, cols, num_vars, order=INF, kind=RATIONAL):
        z = Jet.zero(num_vars, order, kind)
        return cls([[z for _ in range(cols)] for _ in range(rows)])

    @classmethod
    def identity(cls, size, num_vars, order=INF, kind=RATIONAL):
        m = cls.zero(size, size, num_vars, order, kind)
        one = Jet.const(1, num_vars, INF, kind)
        for i in range(size):
            m.entries[i][i] = one
        return m

    @classmethod
    def from_scalar(cls, rows, num_vars, order=INF, kind=RATIONAL):
        return cls([[Jet.const(c, num_vars, order, kind) for c in row] for row in rows])

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def column(self, j):
        return [self.entries[i][j] for i in range(self.rows)]

    def __add__(self, other):
        return JetMatrix([[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __sub__(self, other):
        return JetMatrix([[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.entries, other.entries)])

    def __neg__(self):
        return JetMatrix([[-a for a in row] for row in self.entries])

    def __mul__(self, other):
        if isinstance(other, JetMatrix):
            out = []
            for i in range(self.rows):
                row = []
                for j in range(other.cols):
                    acc = None
                    for k in range(self.cols):
                        a, b = self.entries[i][k], other.entries[k][j]
                        if a.is_zero() or b.is_zero():
                            continue
                        term = a * b
                        acc = term if acc is None else acc + term
                    if acc is None:
                        acc = Jet.zero(self.entries[i][0].num_vars,
                                       self.entries[i][0].order, self.entries[i][0].kind)
                    row.append(acc)
                out.append(row)
            return JetMatrix(out)
        return JetMatrix([[a * other for a in row] for row in self.entries])

    def scale(self, s):
        return JetMatrix([[a.scale(s) for a in row] for row in self.entries])

    def transpose(self):
        return JetMatrix([[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def diff(self, var):
        return JetMatrix([[a.diff(var) for a in row] for row in self.entries])

    def apply(self, vec):
        out = []
        for i in range(self.rows):
            acc = Jet.zero(vec[0].num_vars, vec[0].order, vec[0].kind)
            for k in range(self.cols):
                if not self.entries[i][k].is_zero() and not vec[k].is_zero():
                    acc = acc + self.entries[i][k] * vec[k]
            out.append(acc)
        return out

    def map(self, fn):
        return JetMatrix([[fn(a) for a in row] for row in self.entries])

    def is_zero(self):
        return all(a.is_zero() for row in self.entries for a in row)

    def max_abs(self):
        return max((a.max_abs() for row in self.entries for a in row), default=0.0)

    def eq(self, other):
        return (self - other).is_zero()

    def constant_part(self):
        return [[a.constant_term() for a in row] for row in self.entries]

    def inverse(self, order=None):
        """Inverse of a jet matrix with invertible constant part (Neumann series)."""
        some = self.entries[0][0]
        nv, kind = some.num_vars, some.kind
        if order is None:
            order = INF
            for row in self.entries:
                for a in row:
                    order = _omin(order, a.order)
        A0 = self.constant_part()
        A0inv = invert_scalar_matrix(A0, kind)
        if A0inv is None:
            raise DegenerateCoordinates("matrix constant part is singular")
        A0invM = JetMatrix.from_scalar(A0inv, nv, INF, kind)
        N = A0invM * self - JetMatrix.identity(self.rows, nv, INF, kind)
        # N has valuation >= 1, so the series stops at the working order
        cap = order if order is not INF else max(
            (a.degree() for row in self.entries for a in row), default=0)
        term = JetMatrix.identity(self.rows, nv, order, kind)
        acc = term
        for _ in range(cap):
            term = (term * N).map(lambda a: -a.truncate(cap))
            if term.is_zero():
                break
            acc = acc + term
        return (acc * A0invM).map(lambda a: a.with_order(order))


# --------------------------------------------------------- Lie calculus helpers


def lie_bracket(X, Y):
    """[X, Y] for vector fields given as lists of jets (coordinates of the same context)."""
    m = len(X)
    out = []
    for g in range(m):
        acc = Jet.zero(X[0].num_vars, _omin(X[0].order, Y[0].order), X[0].kind)
        for mu in range(m):
            if not X[mu].is_zero():
                acc = acc + X[mu] * Y[g].diff(mu)
            if not Y[mu].is_zero():
                acc = acc - Y[mu] * X[g].diff(mu)
        out.append(acc)
    return out


def lie_derivative_vector(X, Y):
    return lie_bracket(X, Y)


def lie_derivative_02(X, g):
    """Lie_X g for a (0,2)-tensor g given as nested lists of jets."""
    m = len(g)
    out = []
    for a in range(m):
        row = []
        for b in range(m):
            acc = Jet.zero(X[0].num_vars, X[0].order, X[0].kind)
            for mu in range(m):
                if not X[mu].is_zero() and not g[a][b].is_zero():
                    acc = acc + X[mu] * g[a][b].diff(mu)
                if not g[mu][b].is_zero():
                    acc = acc + g[mu][b] * X[mu].diff(a)
                if not g[a][mu].is_zero():
                    acc = acc + g[a][mu] * X[mu].diff(b)
            row.append(acc)
        out.append(row)
    return out


def lie_derivative_12(X, c):
    """Lie_X c for a (1,2)-tensor c[g][a][b] given as nested lists of jets."""
    m = len(c)
    out = []
    for g in range(m):
        plane = []
        for a in range(m):
            row = []
            for b in range(m):
                acc = Jet.zero(X[0].num_vars, X[0].order, X[0].kind)
                for mu in range(m):
                    if not X[mu].is_zero() and not c[g][a][b].is_zero():
                        acc = acc + X[mu] * c[g][a][b].diff(mu)
                    if not c[mu][a][b].is_zero():
                        acc = acc - c[mu][a][b] * X[g].diff(mu)
                    if not c[g][mu][b].is_zero():
                        acc = acc + c[g][mu][b] * X[mu].diff(a)
                    if not c[g][a][mu].is_zero():
                        acc = acc + c[g][a][mu] * X[mu].diff(b)
                row.append(acc)
            plane.append(row)
        out.append(plane)
    return out


def lie_derivative_tensor(X, T, signature):
    if signature == "vector":
        return lie_derivative_vector(X, T)
    if signature == (0, 2):
        return lie_derivative_02(X, T)
    if signature == (1, 2):
        return lie_derivative_12(X, T)
    raise ContextError(f"unsupported tensor signature {signature!r}")


# ------------------------------------------------------------- serialization


def jet_to_literal(jet: Jet):
    out = []
    for e, c in sorted(jet.coeffs.items(), key=lambda t: (sum(t[0]), t[0])):
        if jet.kind == RATIONAL:
            out.append({"exp": list(e), "num": c.numerator, "den": c.denominator})
        else:
            out.append({"exp": list(e), "re": c.real, "im": c.imag})
    return out

def jet_from_literal(records, num_vars, order=INF):
    if not records:
        return Jet.zero(num_vars, order, RATIONAL)
    kind = RATIONAL if "num" in records[0] else COMPLEX
    coeffs = {}
    for r in records:
        e = tuple(r["exp"])
        if kind == RATIONAL:
            coeffs[e] = Fraction(r["num"], r.get("den", 1))
        else:
            coeffs[e] = complex(r.get("re", 0.0), r.get("im", 0.0))
    return Jet(num_vars, order, coeffs, kind)
