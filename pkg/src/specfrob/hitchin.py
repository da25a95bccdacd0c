"""Cameral-cover combinatorics and a hyperelliptic period laboratory.

The exact part tabulates divisor degrees and dimensions for simple group
types.  The numerical part works on a local polynomial model y^2 = q(z; u):
branch points, monodromy-safe contour quadrature, period Jacobians, the
finite-difference cubic of the period map, and the branch-point residue
formula for the same cubic, glued to the exact modules through sampled
prepotential values on the projective chart.

Determinism: every contour integral sums its trapezoid nodes in a fixed
order; identical inputs and node counts give bit-identical values.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .reports import CheckReport


class InputError(ValueError):
    pass


class DiscriminantError(ValueError):
    """Branch points too close: the family left the regular locus."""


class QuadratureError(ValueError):
    pass


# ----------------------------------------------------------- exact combinatorics


@dataclass(frozen=True)
class RootSystemData:
    label: str
    rank: int
    degrees: tuple
    weyl_order: int
    num_roots: int

    @property
    def dim_g(self):
        return self.num_roots + self.rank

    def validate(self):
        if sum(self.degrees) != self.num_roots // 2 + self.rank:
            raise InputError(f"inconsistent degree table for {self.label}")


ROOT_SYSTEMS = {
    "A1": RootSystemData("A1", 1, (2,), 2, 2),
    "A2": RootSystemData("A2", 2, (2, 3), 6, 6),
    "B2": RootSystemData("B2", 2, (2, 4), 8, 8),
    "G2": RootSystemData("G2", 2, (2, 6), 12, 12),
}


@dataclass(frozen=True)
class CurveData:
    genus: int

    def validate(self):
        if self.genus < 2:
            raise InputError("genus must be >= 2")

    @property
    def canonical_degree(self):
        return 2 * self.genus - 2


def combinatorics(group: RootSystemData, curve: CurveData) -> dict:
    """Base dimension, cameral genus, and the two zero-divisor degrees,
    with the internal consistency identities as recorded checks."""
    group.validate()
    curve.validate()
    g = curve.genus
    K = curve.canonical_degree
    dim_B = sum((2 * d - 1) * (g - 1) for d in group.degrees)
    genus_cameral = group.weyl_order * K // 2 + K * group.num_roots // 2 + 1
    deg_D_int = group.weyl_order * K
    deg_D_br = group.num_roots * K
    return {
        "group": group.label,
        "genus": g,
        "dim_B": dim_B,
        "genus_cameral": genus_cameral,
        "deg_D_int": deg_D_int,
        "deg_D_br": deg_D_br,
        "degree_sum_ok": deg_D_int + deg_D_br == 2 * genus_cameral - 2,
        "half_dim_ok": dim_B == group.dim_g * (g - 1),
    }


# ------------------------------------------------------------------ the family


@dataclass
class QuadratureConfig:
    nodes: int = 256
    fd_step: float = 1e-4
    pad: float = 0.35
    margin: float = 0.15
    node_doubling_rtol: float = 1e-9


@dataclass
class Tolerances:
    cy: float = 1e-6
    tau_symmetry: float = 1e-8
    euler_scaling: float = 1e-8
    cubic_symmetry: float = 1e-5
    kappa_stability: float = 1e-3
    agm: float = 1e-8
    frobenius_residual: float = 1e-6


@dataclass
class HyperellipticFamily:
    """y^2 = q0(z) + sum_j u_j phi_j(z); coefficients ascending in z."""
    q0: np.ndarray
    phis: list
    u_star: np.ndarray
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    tolerances: Tolerances = field(default_factory=Tolerances)
    sep_min_rel: float = 1e-6

    def __post_init__(self):
        self.q0 = np.asarray(self.q0, dtype=complex)
        self.phis = [np.asarray(p, dtype=complex) for p in self.phis]
        self.u_star = np.asarray(self.u_star, dtype=complex)
        if len(self.q0) - 1 < 3:
            raise InputError("q must have degree >= 3")
        for p in self.phis:
            if len(p) >= len(self.q0):
                raise InputError("deformation degree must stay below deg q")

    @property
    def degree(self):
        return len(self.q0) - 1

    @property
    def num_cuts(self):
        # complete cuts among the finite branch points
        return (self.degree + 1) // 2 if self.degree % 2 else self.degree // 2

    @property
    def genus(self):
        return (self.degree - 1) // 2 if self.degree % 2 else self.degree // 2 - 1

    def q_coeffs(self, u):
        q = np.array(self.q0, dtype=complex)
        for uj, p in zip(u, self.phis):
            q[:len(p)] += uj * p
        return q

    def euler_weights(self):
        """Grading with z of weight 2: u_j has weight 2(deg q - deg phi_j),
        and the one-form scales with weight deg q + 2."""
        d = self.degree
        return [2 * (d - (len(p) - 1)) for p in self.phis], d + 2

    @classmethod
    def shipped_genus2(cls):
        """q = z^6 + u1 + u2 z near u* = (-1, 0)."""
        return cls(q0=np.array([0, 0, 0, 0, 0, 0, 1], dtype=complex),
                   phis=[np.array([1], dtype=complex), np.array([0, 1], dtype=complex)],
                   u_star=np.array([-1.0, 0.0], dtype=complex))

    @classmethod
    def from_dict(cls, d):
        def cplx(v):
            if isinstance(v, (list, tuple)):
                return complex(v[0], v[1])
            return complex(v)
        quad = QuadratureConfig(**d.get("quadrature", {}))
        tol = Tolerances(**d.get("tolerances", {}))
        return cls(q0=np.array([cplx(c) for c in d["q0"]]),
                   phis=[np.array([cplx(c) for c in p]) for p in d["phis"]],
                   u_star=np.array([cplx(c) for c in d["u_star"]]),
                   quadrature=quad, tolerances=tol,
                   sep_min_rel=d.get("sep_min_rel", 1e-6))


def polyval_ascending(coeffs, z):
    return np.polyval(coeffs[::-1], z)


def polyder_ascending(coeffs):
    n = len(coeffs)
    return np.array([coeffs[k] * k for k in range(1, n)], dtype=complex)


# --------------------------------------------------------------- branch points


def branch_points(family: HyperellipticFamily, u, seeds=None):
    """All roots of q(.; u), Newton-polished, sorted lexicographically by
    (real, imaginary) and paired consecutively for cuts.  With seeds given,
    polishing starts there and the seed order is kept (used to track cycles
    across large parameter moves)."""
    q = family.q_coeffs(u)
    dq = polyder_ascending(q)
    if seeds is None:
        raw = np.roots(q[::-1])
    else:
        raw = np.asarray(seeds, dtype=complex)
    roots = []
    scale = max(1.0, float(np.max(np.abs(raw))))
    qnorm = float(np.max(np.abs(q)))
    for r in raw:
        zc = complex(r)
        for _ in range(50):
            f = complex(polyval_ascending(q, zc))
            if abs(f) <= 1e-16 * qnorm * max(1.0, abs(zc)) ** family.degree:
                break
            d = complex(polyval_ascending(dq, zc))
            if d == 0:
                break
            zc = zc - f / d
        if abs(complex(polyval_ascending(q, zc))) > 1e-13 * qnorm * scale ** family.degree:
            raise DiscriminantError("root polishing failed (multiple root?)")
        roots.append(zc)
    if seeds is None:
        roots.sort(key=lambda zc: (zc.real, zc.imag))
    sep_min = family.sep_min_rel * scale
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < sep_min:
                raise DiscriminantError("near discriminant locus: branch points collide")
    pairs = [(2 * i, 2 * i + 1) for i in range(len(roots) // 2)]
    return roots, pairs


# ----------------------------------------------------------- loops & quadrature


@dataclass(frozen=True)
class Loop:
    """Ellipse around exactly two branch points, in the frame of their chord."""
    center: complex
    half_chord: complex
    a_semi: float
    b_semi: float

    def nodes(self, count):
        thetas = [2.0 * math.pi * k / count for k in range(count)]
        zs, dzs = [], []
        for th in thetas:
            w = self.a_semi * math.cos(th) + 1j * self.b_semi * math.sin(th)
            dw = -self.a_semi * math.sin(th) + 1j * self.b_semi * math.cos(th)
            zs.append(self.center + self.half_chord * w)
            dzs.append(self.half_chord * dw)
        return zs, dzs


def make_pair_loop(points, i, j, pad=0.35, margin=0.15) -> Loop:
    """Ellipse containing points[i], points[j] and excluding every other point."""
    p, qq = points[i], points[j]
    c = (p + qq) / 2.0
    h = (qq - p) / 2.0
    if h == 0:
        raise DiscriminantError("coincident branch points")
    a = 1.0 + pad
    b_cap = a
    for k, other in enumerate(points):
        if k in (i, j):
            continue
        w = (other - c) / h
        x, y = abs(w.real), abs(w.imag)
        lim = (1.0 + margin)
        if x / a >= lim:
            continue
        rest = lim * lim - (x / a) ** 2
        b_need = y / math.sqrt(rest)
        b_cap = min(b_cap, b_need / lim)
    if b_cap < 1e-3:
        raise DiscriminantError("no monodromy-safe contour: branch points crowded")
    return Loop(c, h, a, 0.95 * b_cap)


def _continued_sqrt(values):
    """Branch-continuous square root along a closed node sequence."""
    out = []
    prev = None
    for v in values:
        s = cmath.sqrt(v)
        if prev is not None and abs(s - prev) > abs(s + prev):
            s = -s
        out.append(s)
        prev = s
    first, last = out[0], out[-1]
    if abs(last - first) > abs(last + first):
        raise QuadratureError("square root does not close up: odd monodromy on loop")
    return out


def loop_integral(qcoeffs, loop: Loop, integrand, count):
    """Trapezoid rule for the chosen one-form along the loop.

    integrand: "sw" for y dz; ("dl", phi) for phi/(2y) dz;
    ("d2l", phi_a, phi_b) for -phi_a phi_b/(4 y^3) dz.
    """
    zs, dzs = loop.nodes(count)
    qv = [complex(polyval_ascending(qcoeffs, z)) for z in zs]
    ys = _continued_sqrt(qv)
    total = 0j
    if integrand == "sw":
        for y, dz in zip(ys, dzs):
            total += y * dz
    elif integrand[0] == "dl":
        phi = integrand[1]
        for z, y, dz in zip(zs, ys, dzs):
            total += complex(polyval_ascending(phi, z)) / (2.0 * y) * dz
    elif integrand[0] == "d2l":
        pa, pb = integrand[1], integrand[2]
        for z, y, dz in zip(zs, ys, dzs):
            total += -complex(polyval_ascending(pa, z)) * complex(polyval_ascending(pb, z)) \
                / (4.0 * y ** 3) * dz
    else:
        raise InputError(f"unknown integrand {integrand!r}")
    return total * (2.0 * math.pi / count)


def loop_period(qcoeffs, loop: Loop, integrand, config: QuadratureConfig):
    """Node-doubled trapezoid value with a convergence guard."""
    v1 = loop_integral(qcoeffs, loop, integrand, config.nodes)
    v2 = loop_integral(qcoeffs, loop, integrand, 2 * config.nodes)
    if abs(v2 - v1) > config.node_doubling_rtol * (1.0 + abs(v2)):
        raise QuadratureError(
            f"node doubling did not converge: |delta| = {abs(v2 - v1):.3e} "
            f"at {config.nodes} nodes")
    return v2


# ----------------------------------------------------------------- cycle basis


@dataclass
class CycleBasis:
    """a-cycles around consecutive cut pairs; b-cycles as nested sums of
    bridge loops between neighbouring cuts (fixed planar convention)."""
    points: list
    a_loops: list
    bridge_loops: list

    @property
    def genus(self):
        return len(self.a_loops)

    def a_cycle(self, i):
        return [(1, self.a_loops[i])]

    def b_cycle(self, i):
        return [(1, self.bridge_loops[j]) for j in range(i, len(self.bridge_loops))]


def cycle_basis(family: HyperellipticFamily, u, seeds=None) -> CycleBasis:
    points, pairs = branch_points(family, u, seeds=seeds)
    g = family.genus
    cfg = family.quadrature
    a_loops = [make_pair_loop(points, pairs[i][0], pairs[i][1], cfg.pad, cfg.margin)
               for i in range(g)]
    bridges = [make_pair_loop(points, pairs[i][1], pairs[i + 1][0], cfg.pad, cfg.margin)
               for i in range(g)]
    return CycleBasis(points, a_loops, bridges)


def cycle_period(qcoeffs, cycle, integrand, config):
    total = 0j
    for coeff, loop in cycle:
        total += coeff * loop_period(qcoeffs, loop, integrand, config)
    return total


def period(family: HyperellipticFamily, u, integrand, cycle,
           basis: CycleBasis = None, qcoeffs=None):
    """Contour period of the chosen integrand over a cycle of the basis.

    integrand: "sw", ("dl", j), or ("d2l", j, k) with j, k deformation indices.
    cycle: ("a", i) or ("b", i), or an explicit list of (coeff, Loop).
    """
    if basis is None:
        basis = cycle_basis(family, u)
    if qcoeffs is None:
        qcoeffs = family.q_coeffs(u)
    if isinstance(integrand, tuple) and integrand[0] == "dl":
        integrand = ("dl", family.phis[integrand[1]])
    elif isinstance(integrand, tuple) and integrand[0] == "d2l":
        integrand = ("d2l", family.phis[integrand[1]], family.phis[integrand[2]])
    if isinstance(cycle, tuple):
        kind, idx = cycle
        cyc = basis.a_cycle(idx) if kind == "a" else basis.b_cycle(idx)
    else:
        cyc = cycle
    return cycle_period(qcoeffs, cyc, integrand, family.quadrature)


# --------------------------------------------------------------- period vectors


def period_data(family: HyperellipticFamily, u, basis: CycleBasis = None):
    """z_i, w_i and the two derivative Jacobians over the cycle basis."""
    if basis is None:
        basis = cycle_basis(family, u)
    q = family.q_coeffs(u)
    g = basis.genus
    d = len(family.phis)
    z = [cycle_period(q, basis.a_cycle(i), "sw", family.quadrature) for i in range(g)]
    w = [cycle_period(q, basis.b_cycle(i), "sw", family.quadrature) for i in range(g)]
    dz = [[cycle_period(q, basis.a_cycle(i), ("dl", family.phis[l]), family.quadrature)
           for l in range(d)] for i in range(g)]
    dw = [[cycle_period(q, basis.b_cycle(i), ("dl", family.phis[l]), family.quadrature)
           for l in range(d)] for i in range(g)]
    return {"z": np.array(z), "w": np.array(w),
            "dz_du": np.array(dz), "dw_du": np.array(dw), "basis": basis}


def cy_check(family: HyperellipticFamily, u) -> dict:
    """Finite differences of periods against the derivative integrands, plus
    the weighted Euler scaling of the special coordinates."""
    basis = cycle_basis(family, u)
    q0 = family.q_coeffs(u)
    cfg = family.quadrature
    d = len(family.phis)
    scale = max(1.0, float(np.max(np.abs(u))))
    h = cfg.fd_step * scale
    worst = 0.0
    cycles = [basis.a_cycle(i) for i in range(basis.genus)] + \
             [basis.b_cycle(i) for i in range(basis.genus)]
    for cyc in cycles:
        for l in range(d):
            direct = cycle_period(q0, cyc, ("dl", family.phis[l]), cfg)
            for step in (h, h / 2.0):
                up = np.array(u, dtype=complex)
                um = np.array(u, dtype=complex)
                up[l] += step
                um[l] -= step
                fd = (cycle_period(family.q_coeffs(up), cyc, "sw", cfg)
                      - cycle_period(family.q_coeffs(um), cyc, "sw", cfg)) / (2 * step)
                worst = max(worst, abs(fd - direct) / max(1.0, abs(direct)))

    weights, lam_weight = family.euler_weights()
    euler_worst = 0.0
    z0 = [cycle_period(q0, basis.a_cycle(i), "sw", cfg) for i in range(basis.genus)]
    for eta in (0.8, 1.25, cmath.exp(0.1j), cmath.exp(-0.15j)):
        us = np.array([uj * eta ** wj for uj, wj in zip(u, weights)], dtype=complex)
        seed = [p * eta ** 2 for p in basis.points]
        basis_s = cycle_basis(family, us, seeds=seed)
        qs = family.q_coeffs(us)
        for i in range(basis.genus):
            zi = cycle_period(qs, basis_s.a_cycle(i), "sw", cfg)
            expect = (eta ** lam_weight) * z0[i]
            euler_worst = max(euler_worst, abs(zi - expect) / max(1.0, abs(expect)))
    return {"fd_vs_direct": worst, "euler_scaling": euler_worst,
            "pass": worst <= family.tolerances.cy
            and euler_worst <= family.tolerances.euler_scaling}


def period_matrix(family: HyperellipticFamily, u, data=None) -> dict:
    """tau = (dw/du)(dz/du)^{-1} with its symmetry defect."""
    if data is None:
        data = period_data(family, u)
    A = data["dz_du"]
    B = data["dw_du"]
    if A.shape[0] != A.shape[1]:
        raise InputError("need as many deformation directions as a-cycles")
    if abs(np.linalg.det(A)) < 1e-12:
        raise InputError("special-coordinate degeneracy at this base point")
    tau = B @ np.linalg.inv(A)
    sym = float(np.max(np.abs(tau - tau.T)))
    rel = sym / max(1e-300, float(np.max(np.abs(tau))))
    return {"tau": tau, "symmetry_defect": rel,
            "pass": rel <= family.tolerances.tau_symmetry, "data": data}


# ------------------------------------------------------------------ the cubics


def cubic_direct(family: HyperellipticFamily, u) -> dict:
    """d tau / d z by central differences in u, chained to the special frame."""
    basis = cycle_basis(family, u)
    data = period_data(family, u, basis)
    cfg = family.quadrature
    d = len(family.phis)
    scale = max(1.0, float(np.max(np.abs(u))))
    h = cfg.fd_step * scale

    def tau_at(uu):
        dd = period_data(family, uu, basis)
        return dd["dw_du"] @ np.linalg.inv(dd["dz_du"])

    T_u = np.zeros((d, d, d), dtype=complex)
    for l in range(d):
        up = np.array(u, dtype=complex)
        um = np.array(u, dtype=complex)
        up[l] += h
        um[l] -= h
        T_u[:, :, l] = (tau_at(up) - tau_at(um)) / (2 * h)
    dudz = np.linalg.inv(data["dz_du"])
    T_z = np.einsum("ijl,lk->ijk", T_u, dudz)
    mx = float(np.max(np.abs(T_z)))
    defect = 0.0
    for p in ((1, 0, 2), (0, 2, 1), (2, 1, 0)):
        defect = max(defect, float(np.max(np.abs(T_z - np.transpose(T_z, p)))))
    rel = defect / max(1e-300, mx)
    return {"tensor": T_z, "symmetry_defect": rel,
            "pass": rel <= family.tolerances.cubic_symmetry, "data": data}


def cubic_balduzzi(family: HyperellipticFamily, u, data=None) -> dict:
    """Branch-point residue formula: each simple root p of q contributes
    phi_a(p) phi_b(p) phi_c(p) / (2 q'(p)^2), chained to the special frame."""
    if data is None:
        data = period_data(family, u)
    q = family.q_coeffs(u)
    dq = polyder_ascending(q)
    points, _pairs = branch_points(family, u)
    d = len(family.phis)
    B_u = np.zeros((d, d, d), dtype=complex)
    for p in points:
        ph = [complex(polyval_ascending(phi, p)) for phi in family.phis]
        qp = complex(polyval_ascending(dq, p))
        for a in range(d):
            for b in range(d):
                for c in range(d):
                    B_u[a, b, c] += ph[a] * ph[b] * ph[c] / (2.0 * qp * qp)
    dudz = np.linalg.inv(data["dz_du"])
    B_z = np.einsum("abc,ai,bj,ck->ijk", B_u, dudz, dudz, dudz)
    return {"tensor": B_z, "data": data}


def kappa_fit(family: HyperellipticFamily, u, samples=10, spread_scale=0.02, seed=7):
    """The residue cubic is proportional to the finite-difference cubic; fit
    the constant once and check it is stable over nearby base points."""
    rng = np.random.default_rng(seed)
    kappas = []
    base = np.array(u, dtype=complex)
    for s in range(samples):
        if s == 0:
            uu = base
        else:
            uu = base * (1.0 + spread_scale * (rng.standard_normal(len(base))
                                               + 1j * rng.standard_normal(len(base))))
        direct = cubic_direct(family, uu)
        resid = cubic_balduzzi(family, uu, direct["data"])
        T, Bt = direct["tensor"], resid["tensor"]
        denom = complex(np.sum(T * np.conj(T)))
        kappas.append(complex(np.sum(Bt * np.conj(T))) / denom)
    k0 = kappas[0]
    spread = max(abs(k - k0) / abs(k0) for k in kappas)
    return {"kappa": k0, "kappas": kappas, "spread": spread,
            "pass": spread <= family.tolerances.kappa_stability}


# ------------------------------------------------------- chart and the pipeline


def special_chart(family: HyperellipticFamily, u, basis=None) -> dict:
    """Projective chart t_i = z_{i+1}/z_1 and the prepotential value
    Psi = (1/2) sum z_i w_i, normalized to the hyperplane z_1 = 1."""
    data = period_data(family, u, basis)
    z, w = data["z"], data["w"]
    if abs(z[0]) < 1e-10:
        raise InputError("opposedness failure: distinguished a-period vanishes")
    A = data["dz_du"]
    if abs(np.linalg.det(A)) < 1e-12:
        raise InputError("special-coordinate degeneracy at this base point")
    psi = 0.5 * complex(np.dot(z, w))
    t = [complex(z[i] / z[0]) for i in range(1, len(z))]
    return {"t": t, "psi_chart": psi / z[0] ** 2, "z": z, "w": w, "data": data}


def euler_consistency(family, u, basis=None) -> float:
    """The homogeneity route to Psi against a short line integral of w . dz."""
    qsteps = 24
    data0 = special_chart(family, u, basis)
    direction = 0.01 * np.ones(len(u), dtype=complex)
    total = 0j
    prev = period_data(family, u, data0["data"]["basis"])
    for s in range(1, qsteps + 1):
        uu = np.array(u, dtype=complex) + direction * s / qsteps
        cur = period_data(family, uu, data0["data"]["basis"])
        dz = cur["z"] - prev["z"]
        wmid = 0.5 * (cur["w"] + prev["w"])
        total += complex(np.dot(wmid, dz))
        prev = cur
    end = special_chart(family, np.array(u) + direction, data0["data"]["basis"])
    lhs = end["psi_chart"] * end["z"][0] ** 2 - data0["psi_chart"] * data0["z"][0] ** 2
    return abs(lhs - total) / max(1.0, abs(lhs))


def pipeline(family: HyperellipticFamily, u_star=None, fit_degree=4, grid=5,
             grid_scale=0.04) -> dict:
    """Sample the chart on a grid, fit a polynomial prepotential, build the
    block Frobenius structure with complex scalars, and verify everything."""
    import time

    from .frobenius import build as frob_build
    from .frobenius import verify_axioms
    from .jets import COMPLEX, Jet

    t_start = time.perf_counter()
    u0 = np.array(family.u_star if u_star is None else u_star, dtype=complex)
    basis = cycle_basis(family, u0)
    base = special_chart(family, u0, basis)
    if len(base["t"]) != 1:
        raise InputError("the chart pipeline expects a one-dimensional base")
    t0 = base["t"][0]

    k = grid // 2
    ts, psis = [], []
    scale = np.abs(u0) * grid_scale + grid_scale
    for i in range(-k, grid - k):
        for j in range(-k, grid - k):
            uu = u0 + np.array([i * scale[0], j * scale[1]], dtype=complex)
            ch = special_chart(family, uu, basis)
            ts.append(ch["t"][0] - t0)
            psis.append(ch["psi_chart"])
    V = np.vander(np.array(ts), fit_degree + 1, increasing=True)
    sol, residuals, rank, sv = np.linalg.lstsq(V, np.array(psis), rcond=None)
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    rms = float(np.sqrt(np.mean(np.abs(V @ sol - np.array(psis)) ** 2)))

    coeffs = {(d,): complex(sol[d]) for d in range(1, fit_degree + 1)
              if abs(sol[d]) > 1e-14}
    psi_jet = Jet(1, fit_degree, coeffs, COMPLEX)
    fs = frob_build(psi_jet, 1, fit_degree)
    rep = verify_axioms(fs, tol=family.tolerances.frobenius_residual)

    # cross-check: third chart derivative against the residue cubic
    kap = kappa_fit(family, u0, samples=3)
    direct = cubic_direct(family, u0)
    balduzzi = cubic_balduzzi(family, u0, direct["data"])
    z1 = base["z"][0]
    psi3_fit = 6.0 * complex(sol[3]) if fit_degree >= 3 else 0j
    psi3_resid = complex(z1 * balduzzi["tensor"][1, 1, 1] / kap["kappa"])
    consistency = abs(psi3_fit - psi3_resid) / max(1.0, abs(psi3_resid))

    residual = max((c.error_metric for c in rep.checks), default=0.0)
    return {
        "structure": fs,
        "axioms": rep,
        "max_axiom_residual": residual,
        "fit_condition": cond,
        "fit_rms": rms,
        "fit_coefficients": [complex(c) for c in sol],
        "t0": t0,
        "kappa": kap["kappa"],
        "cubic_consistency": consistency,
        "runtime_s": time.perf_counter() - t_start,
        "pass": rep.all_pass and consistency <= family.tolerances.kappa_stability,
    }


# ------------------------------------------------------------------ AGM oracle


def agm(a, b, tol=1e-15):
    a, b = complex(a), complex(b)
    for _ in range(200):
        a, b = (a + b) / 2.0, cmath.sqrt(a * b)
        if abs(a - b) <= tol * abs(a):
            return (a + b) / 2.0
    raise QuadratureError("AGM did not converge")


def elliptic_loop_period_agm(e1, e2, e3):
    """Period of dz/y around the cut [e3, e2] for y^2 = 4(z-e1)(z-e2)(z-e3),
    real roots e1 > e2 > e3: 2 K(k)/sqrt(e1-e3) with k^2 = (e2-e3)/(e1-e3)."""
    ksq = (e2 - e3) / (e1 - e3)
    kprime = math.sqrt(1.0 - ksq)
    K = math.pi / (2.0 * abs(agm(1.0, kprime)))
    return 2.0 * K / math.sqrt(e1 - e3)
