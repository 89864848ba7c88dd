"""Radial risk functionals for the two-class isotropic Gaussian law.

With features drawn per class from ``N(0, (1 +/- delta)^2 I)`` and inner
activations of the form ``sigma(<w, z>)``, the population potentials reduce
by rotational invariance to scalar functions of the weight norms. The
building block is

    q(t1, t2) = E sigma2(t2 * sigma1(t1 * G)),   G ~ N(0,1),

from which the pair potential ``v``, the quadratic kernels ``u0``/``u_d``/
``u_inf``, the limiting risk and its first variation ``psi_inf`` are all
assembled. Because the activations here are piecewise affine, ``q`` and its
partial derivatives are evaluated in closed form (the Gaussian integral is
split at the kink preimages); a Gauss-Hermite path is kept for comparison,
and Monte Carlo twins of each expectation live alongside for use in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .activations import PiecewiseAffine, _phi, composite_breakpoints
from .errors import ConfigError
from .synth_data import rng_from_seed

_SQRT2PI = float(np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class StaticsContext:
    """Spread parameter and the two activations entering ``q``."""

    delta: float
    activation1: PiecewiseAffine
    activation2: PiecewiseAffine
    quad_nodes: int = 64

    def __post_init__(self):
        if not 0 <= self.delta < 1:
            raise ConfigError("delta must lie in [0, 1)")
        if self.quad_nodes < 1:
            raise ConfigError("quad_nodes must be positive")

    @property
    def tau_plus(self) -> float:
        return 1.0 + self.delta

    @property
    def tau_minus(self) -> float:
        return 1.0 - self.delta


@dataclass(frozen=True)
class RadialMeasure:
    """Finitely supported probability measure on the nonnegative half line."""

    atoms: np.ndarray
    masses: np.ndarray = field(default=None)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim != 1 or atoms.size == 0:
            raise ConfigError("atoms must be a nonempty 1-d array")
        if np.any(atoms < 0):
            raise ConfigError("radial atoms must be nonnegative")
        if self.masses is None:
            masses = np.full(atoms.size, 1.0 / atoms.size)
        else:
            masses = np.asarray(self.masses, dtype=float)
            if masses.shape != atoms.shape:
                raise ConfigError("masses must match atoms")
            if np.any(masses < 0):
                raise ConfigError("masses must be nonnegative")
            if abs(masses.sum() - 1.0) > 1e-12:
                raise ConfigError("masses must sum to 1 within 1e-12")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "masses", masses)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(np.asarray(values, dtype=float), self.masses))


# ---------------------------------------------------------------------------
# q and its partial derivatives
# ---------------------------------------------------------------------------

def _composite_segments(sig1: PiecewiseAffine, sig2: PiecewiseAffine,
                        t1: float, t2: float):
    """Breakpoints and per-piece data of ``g -> sigma2(t2*sigma1(t1*g))``.

    Returns ``(bps, a, b, a2, b2, b1coef)`` where on each piece the composite
    is ``a + b*g``, the integrand of dq/dt2 is ``a2 + b2*g`` and the integrand
    of dq/dt1 is ``b1coef * g``.
    """
    inner = sig1.affine_arg(t1).scale_out(t2)
    bps = composite_breakpoints(inner, sig2)
    if bps.size == 0:
        pts = np.array([0.0])
    else:
        pts = np.concatenate(([bps[0] - 1.0],
                              0.5 * (bps[:-1] + bps[1:]),
                              [bps[-1] + 1.0]))
    u = t1 * pts
    s1_val = sig1(u)
    s1_slope = sig1.deriv(u)
    m_val = t2 * s1_val
    outer_slope = sig2.deriv(m_val)
    comp_val = sig2(m_val)
    slope = outer_slope * t2 * s1_slope * t1
    a = comp_val - slope * pts
    # dq/dt2 integrand: sigma2'(m) * sigma1(t1 g), affine per piece
    b2 = outer_slope * s1_slope * t1
    a2 = outer_slope * s1_val - b2 * pts
    # dq/dt1 integrand: sigma2'(m) * t2 * sigma1'(t1 g) * g
    b1coef = outer_slope * t2 * s1_slope
    return bps, a, slope, a2, b2, b1coef


def _segment_moments(bps: np.ndarray):
    """``(M0, M1)`` per piece: integrals of ``phi`` and ``g*phi`` over it."""
    if bps.size == 0:
        return np.array([1.0]), np.array([0.0])
    cdf = ndtr(bps)
    pdf = _phi(bps)
    lo_cdf = np.concatenate(([0.0], cdf))
    hi_cdf = np.concatenate((cdf, [1.0]))
    lo_pdf = np.concatenate(([0.0], pdf))
    hi_pdf = np.concatenate((pdf, [0.0]))
    return hi_cdf - lo_cdf, lo_pdf - hi_pdf


def q_with_partials(ctx: StaticsContext, t1: float, t2: float):
    """Exact ``(q, dq/dt1, dq/dt2)`` at ``(t1, t2)``."""
    bps, a, b, a2, b2, b1coef = _composite_segments(
        ctx.activation1, ctx.activation2, float(t1), float(t2))
    m0, m1 = _segment_moments(bps)
    qv = float(np.dot(a, m0) + np.dot(b, m1))
    dq2 = float(np.dot(a2, m0) + np.dot(b2, m1))
    dq1 = float(np.dot(b1coef, m1))
    return qv, dq1, dq2


def q(ctx: StaticsContext, t1: float, t2: float, method: str = "exact") -> float:
    """``E sigma2(t2 * sigma1(t1 * G))`` with ``G ~ N(0,1)``.

    ``method="exact"`` integrates each affine piece of the composite in
    closed form (the kink-split path; deterministic, independent of
    ``quad_nodes``). ``method="hermite"`` uses plain Gauss-Hermite with
    ``ctx.quad_nodes`` nodes and is retained for comparison; kinks slow its
    convergence, which is why it is not the default.
    """
    if method == "exact":
        return q_with_partials(ctx, t1, t2)[0]
    if method == "hermite":
        nodes, weights = np.polynomial.hermite_e.hermegauss(ctx.quad_nodes)
        vals = ctx.activation2(float(t2) * ctx.activation1(float(t1) * nodes))
        return float(np.dot(weights, vals) / _SQRT2PI)
    raise ConfigError(f"unknown q method {method!r}")


def q_pm(ctx: StaticsContext, r1: float, r2: float, sign: int) -> float:
    """``q((1+delta) r1, (1 +/- delta) r2)``; note the first slot always
    carries the plus factor, exactly as the statics prescribe."""
    if r1 < 0 or r2 < 0:
        raise ConfigError("radii must be nonnegative")
    tau2 = ctx.tau_plus if sign > 0 else ctx.tau_minus
    return q(ctx, ctx.tau_plus * r1, tau2 * r2)


def v(ctx: StaticsContext, r1: float, r2: float) -> float:
    """Pair potential: ``-q_+(r1,r2)/2 + q_-(r1,r2)/2``."""
    if r1 < 0 or r2 < 0:
        raise ConfigError("radii must be nonnegative")
    return -0.5 * q_pm(ctx, r1, r2, +1) + 0.5 * q_pm(ctx, r1, r2, -1)


# ---------------------------------------------------------------------------
# quadratic kernels
# ---------------------------------------------------------------------------

def _pair_term_exact(F: PiecewiseAffine, H: PiecewiseAffine, flip: bool = False) -> float:
    """``E[F(G) H(G)]`` (or ``E[F(G) H(-G)]``) for two piecewise-affine maps:
    merged pieces, quadratic closed form per piece."""
    Hx = H.affine_arg(-1.0) if flip else H
    bps = np.unique(np.concatenate((F.knots, Hx.knots)))
    if bps.size == 0:
        pts = np.array([0.0])
    else:
        pts = np.concatenate(([bps[0] - 1.0], 0.5 * (bps[:-1] + bps[1:]),
                              [bps[-1] + 1.0]))
    bf = F.deriv(pts)
    af = F(pts) - bf * pts
    bh = Hx.deriv(pts)
    ah = Hx(pts) - bh * pts
    c0 = af * ah
    c1 = af * bh + ah * bf
    c2 = bf * bh
    if bps.size == 0:
        m0, m1 = np.array([1.0]), np.array([0.0])
        m2 = np.array([1.0])
    else:
        cdf = ndtr(bps)
        pdf = _phi(bps)
        lo_c = np.concatenate(([0.0], cdf))
        hi_c = np.concatenate((cdf, [1.0]))
        lo_p = np.concatenate(([0.0], pdf))
        hi_p = np.concatenate((pdf, [0.0]))
        m0 = hi_c - lo_c
        m1 = lo_p - hi_p
        lo_x = np.concatenate(([0.0], bps * pdf))   # x*phi(x) -> 0 at +/-inf
        hi_x = np.concatenate((bps * pdf, [0.0]))
        m2 = m0 + lo_x - hi_x
    return float(np.dot(c0, m0) + np.dot(c1, m1) + np.dot(c2, m2))


def _outer_nodes(F: PiecewiseAffine, extra_splits, half_width: float = 12.0,
                 max_piece: float = 0.5, order: int = 16):
    """Gauss-Legendre nodes/weights (with the N(0,1) density folded in) on
    [-half_width, half_width], split at F's kinks and any extra points."""
    splits = [-half_width, half_width]
    splits.extend(float(k) for k in F.knots if -half_width < k < half_width)
    splits.extend(float(s) for s in extra_splits if -half_width < s < half_width)
    splits = np.unique(np.asarray(splits))
    gx, gw = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(splits[:-1], splits[1:]):
        nsub = max(1, int(np.ceil((hi - lo) / max_piece)))
        edges = np.linspace(lo, hi, nsub + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            mid, rad = 0.5 * (a + b), 0.5 * (b - a)
            nodes.append(mid + rad * gx)
            weights.append(rad * gw)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights) * _phi(nodes)
    return nodes, weights


def _pair_expectations(ctx: StaticsContext, t1: float, beta2, beta3,
                       cos_alpha) -> np.ndarray:
    """``E[sigma2(b2 sigma1(t1 G1)) sigma2(b3 sigma1(t1 G2))]`` with
    ``corr(G1, G2) = c``, broadcast over ``(b2, b3, c)`` triples.

    Conditions on ``G1``: the inner expectation of the piecewise-affine
    ``H(g2) = sigma2(b3 sigma1(t1 g2))`` under ``N(c g1, 1 - c^2)`` is exact,
    and the remaining 1-d integral is done piecewise (split at the kinks of
    the ``G1`` factor) with Gauss-Legendre, truncated at |g| = 12 where the
    Gaussian weight is ~1e-32.
    """
    beta2, beta3, cos_alpha = np.broadcast_arrays(
        np.asarray(beta2, float), np.asarray(beta3, float), np.asarray(cos_alpha, float))
    if np.any(np.abs(cos_alpha) > 1 + 1e-12):
        raise ConfigError("|cos_alpha| must be <= 1")
    out = np.empty(beta2.shape, dtype=float)
    it = np.nditer(beta2, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        b2v, b3v, c = float(beta2[idx]), float(beta3[idx]), float(cos_alpha[idx])
        c = min(1.0, max(-1.0, c))
        F = ctx.activation2.compose(ctx.activation1.affine_arg(t1).scale_out(b2v))
        H = ctx.activation2.compose(ctx.activation1.affine_arg(t1).scale_out(b3v))
        if abs(c) == 1.0:
            out[idx] = _pair_term_exact(F, H, flip=(c < 0))
            continue
        sd = float(np.sqrt(1.0 - c * c))
        extra = H.knots / c if abs(c) >= 0.5 else ()
        nodes, weights = _outer_nodes(F, extra)
        inner = H.gaussian_mean(mu=c * nodes, sd=sd)
        out[idx] = float(np.dot(weights, F(nodes) * inner))
    return out if out.ndim else float(out)


def u0(ctx: StaticsContext, r1: float, r2: float, r3: float, cos_alpha: float,
       variant: str = "printed") -> float:
    """Quadratic kernel at fixed geometry ``cos_alpha`` between the two
    second-layer weight vectors.

    ``variant="printed"`` is the two-term form in which the class factor
    touches only the ``r2`` slot (asymmetric in ``r2, r3`` -- kept verbatim).
    ``variant="symmetric"`` is the quarter-weighted four-term mixture that
    symmetrizes the class factor over both slots; it is the positive
    semidefinite counterpart used by the Gram tests.
    """
    if min(r1, r2, r3) < 0:
        raise ConfigError("radii must be nonnegative")
    if not -1 - 1e-12 <= cos_alpha <= 1 + 1e-12:
        raise ConfigError("|cos_alpha| must be <= 1")
    t1 = ctx.tau_plus * r1
    tp, tm = ctx.tau_plus, ctx.tau_minus
    if variant == "printed":
        terms = _pair_expectations(ctx, t1,
                                   [tp * r2, tm * r2],
                                   [tp * r3, tp * r3],
                                   [cos_alpha, cos_alpha])
        return float(0.5 * terms[0] + 0.5 * terms[1])
    if variant == "symmetric":
        terms = _pair_expectations(ctx, t1,
                                   [tp * r2, tp * r2, tm * r2, tm * r2],
                                   [tp * r3, tm * r3, tp * r3, tm * r3],
                                   [cos_alpha] * 4)
        return float(np.mean(terms))
    raise ConfigError(f"unknown u0 variant {variant!r}")


def u_d(ctx: StaticsContext, d: int, r1: float, r2: float, r3: float,
        mc_samples: int = 2000, seed: int = 0, variant: str = "printed"):
    """Monte Carlo of the dimension-``d`` kernel: ``u0`` averaged over the
    angle between two i.i.d. standard Gaussian directions in R^d (whose
    cosine follows the sin^(d-2) law). Returns ``(estimate, stderr)``.
    """
    if d < 2:
        raise ConfigError("u_d requires d >= 2")
    if mc_samples < 2:
        raise ConfigError("mc_samples must be >= 2")
    rng = rng_from_seed(seed)
    g1 = rng.standard_normal((mc_samples, d))
    g2 = rng.standard_normal((mc_samples, d))
    cosines = np.sum(g1 * g2, axis=1) / (
        np.linalg.norm(g1, axis=1) * np.linalg.norm(g2, axis=1))
    vals = u0_batch(ctx, r1, r2, r3, cosines, variant=variant)
    est = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(mc_samples))
    return est, se


def u0_batch(ctx: StaticsContext, r1: float, r2: float, r3: float,
             cosines: np.ndarray, variant: str = "printed") -> np.ndarray:
    """Vectorized ``u0`` over many cosines (shared composites, one node grid)."""
    cosines = np.asarray(cosines, dtype=float)
    t1 = ctx.tau_plus * r1
    tp, tm = ctx.tau_plus, ctx.tau_minus
    if variant == "printed":
        pairs = [(tp * r2, tp * r3, 0.5), (tm * r2, tp * r3, 0.5)]
    elif variant == "symmetric":
        pairs = [(tp * r2, tp * r3, 0.25), (tp * r2, tm * r3, 0.25),
                 (tm * r2, tp * r3, 0.25), (tm * r2, tm * r3, 0.25)]
    else:
        raise ConfigError(f"unknown u0 variant {variant!r}")
    total = np.zeros(cosines.shape, dtype=float)
    for b2v, b3v, w in pairs:
        F = ctx.activation2.compose(ctx.activation1.affine_arg(t1).scale_out(b2v))
        H = ctx.activation2.compose(ctx.activation1.affine_arg(t1).scale_out(b3v))
        extra = np.concatenate([H.knots / c for c in (0.7, -0.7, 0.95, -0.95)]) \
            if H.knots.size else ()
        nodes, weights = _outer_nodes(F, extra)
        Fn = F(nodes) * weights
        cs = np.clip(cosines, -1.0, 1.0)
        # chunked so the (knots x cosines x nodes) work arrays stay small
        step = max(1, 400_000 // max(1, nodes.size))
        for lo in range(0, cs.size, step):
            c = cs[lo:lo + step, None]
            sd = np.sqrt(np.maximum(0.0, 1.0 - c * c))
            inner = H.gaussian_mean(mu=c * nodes[None, :],
                                    sd=np.broadcast_to(sd, (c.shape[0], nodes.size)))
            total[lo:lo + step] += w * (inner @ Fn)
    return total


def u_infinity(ctx: StaticsContext, r1: float, r2: float, r3: float) -> float:
    """Large-dimension limit of the kernel: products of ``q`` values."""
    if min(r1, r2, r3) < 0:
        raise ConfigError("radii must be nonnegative")
    t1 = ctx.tau_plus * r1
    qpp = q(ctx, t1, ctx.tau_plus * r2)
    qmp = q(ctx, t1, ctx.tau_minus * r2)
    q3 = q(ctx, t1, ctx.tau_plus * r3)
    return 0.5 * (qpp * q3 + qmp * q3)


# ---------------------------------------------------------------------------
# limiting risk and its first variation
# ---------------------------------------------------------------------------

class PsiInfinity(NamedTuple):
    psi: float
    lambda_plus: float
    lambda_minus: float


def _brackets(ctx: StaticsContext, rho2: RadialMeasure, r1_ref=None,
              paired_r1=None):
    """``(<q_+, rho>, <q_-, rho>)``; atoms pair with ``paired_r1`` when the
    measure carries a first-layer radius per atom, else with the fixed
    ``r1_ref``."""
    if paired_r1 is not None:
        paired_r1 = np.asarray(paired_r1, dtype=float)
        if paired_r1.shape != rho2.atoms.shape:
            raise ConfigError("paired_r1 must match the atom count")
        qp = np.array([q_pm(ctx, a1, a2, +1) for a1, a2 in zip(paired_r1, rho2.atoms)])
        qm = np.array([q_pm(ctx, a1, a2, -1) for a1, a2 in zip(paired_r1, rho2.atoms)])
    else:
        if r1_ref is None:
            raise ConfigError("need r1_ref or paired_r1")
        qp = np.array([q_pm(ctx, r1_ref, a2, +1) for a2 in rho2.atoms])
        qm = np.array([q_pm(ctx, r1_ref, a2, -1) for a2 in rho2.atoms])
    return rho2.integrate(qp), rho2.integrate(qm)


def risk_infinity(ctx: StaticsContext, rho2: RadialMeasure, r1_ref: float,
                  paired_r1=None) -> float:
    """Limiting risk ``(1 - <q_+,rho>)^2/2 + (1 + <q_-,rho>)^2/2``."""
    sp, sm = _brackets(ctx, rho2, r1_ref=r1_ref, paired_r1=paired_r1)
    return 0.5 * (1.0 - sp) ** 2 + 0.5 * (1.0 + sm) ** 2


def lambda_coefficients(ctx: StaticsContext, rho2: RadialMeasure,
                        r1_ref=None, paired_r1=None):
    sp, sm = _brackets(ctx, rho2, r1_ref=r1_ref, paired_r1=paired_r1)
    return 0.5 * (sp - 1.0), 0.5 * (sm + 1.0)


def psi_infinity(ctx: StaticsContext, rho2: RadialMeasure, r1: float, r2: float,
                 r1_ref=None, paired_r1=None) -> PsiInfinity:
    """First variation of the limiting risk at ``(r1, r2)`` given the
    second-layer radial measure: ``lambda_+ q_+ + lambda_- q_-``.

    The bracket means default to pairing every atom with the evaluation
    point's ``r1``; pass ``paired_r1`` for ensembles that carry their own
    first-layer radii.
    """
    if r1_ref is None and paired_r1 is None:
        r1_ref = r1
    lam_p, lam_m = lambda_coefficients(ctx, rho2, r1_ref=r1_ref, paired_r1=paired_r1)
    return PsiInfinity(lam_p * q_pm(ctx, r1, r2, +1) + lam_m * q_pm(ctx, r1, r2, -1),
                       lam_p, lam_m)


# ---------------------------------------------------------------------------
# ReLU closed forms
# ---------------------------------------------------------------------------

def relu_q_pm(delta: float, r1: float, r2: float, b: float, sign: int) -> float:
    """``E max(s G + b, 0)`` with ``s = sqrt((1 +/- delta)^2 r1^2 + r2^2)``:
    ``b Phi(b/s) + s phi(b/s)``; the degenerate ``s = 0`` returns ``max(b, 0)``
    (the pointwise limit)."""
    if r1 < 0 or r2 < 0:
        raise ConfigError("radii must be nonnegative")
    tau = (1.0 + delta) if sign > 0 else (1.0 - delta)
    s = float(np.hypot(tau * r1, r2))
    if s == 0.0:
        return max(b, 0.0)
    z = b / s
    return float(b * ndtr(z) + s * _phi(z))


def relu_q_pm_partials(delta: float, r1: float, r2: float, b: float, sign: int):
    """``(value, d/db, d/dr1, d/dr2)``; uses ``dq/db = Phi(b/s)`` and
    ``dq/ds = phi(b/s)``."""
    tau = (1.0 + delta) if sign > 0 else (1.0 - delta)
    s = float(np.hypot(tau * r1, r2))
    if s == 0.0:
        return max(b, 0.0), 1.0 if b > 0 else 0.0, 0.0, 0.0
    z = b / s
    val = float(b * ndtr(z) + s * _phi(z))
    dq_ds = float(_phi(z))
    return val, float(ndtr(z)), dq_ds * tau * tau * r1 / s, dq_ds * r2 / s


def relu_risk_infinity(delta: float, ensemble) -> float:
    """Finite-atom limiting risk for the four-parameter ReLU ansatz; the
    second bracket uses the minus-class kernel."""
    arr = np.atleast_2d(np.asarray(ensemble, dtype=float))
    if arr.size == 0 or arr.shape[1] != 4:
        raise ConfigError("ensemble must be a nonempty sequence of (a, b, r1, r2)")
    a, b, r1, r2 = arr.T
    sp = float(np.mean([ai * relu_q_pm(delta, x1, x2, bi, +1)
                        for ai, bi, x1, x2 in zip(a, b, r1, r2)]))
    sm = float(np.mean([ai * relu_q_pm(delta, x1, x2, bi, -1)
                        for ai, bi, x1, x2 in zip(a, b, r1, r2)]))
    return 0.5 * (1.0 - sp) ** 2 + 0.5 * (1.0 + sm) ** 2


# ---------------------------------------------------------------------------
# Monte Carlo twins (test oracles; production paths stay deterministic)
# ---------------------------------------------------------------------------

def q_mc(ctx: StaticsContext, t1: float, t2: float, n: int, seed: int):
    rng = rng_from_seed(seed)
    vals = ctx.activation2(t2 * ctx.activation1(t1 * rng.standard_normal(n)))
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(n))


def radial_v_mc(ctx: StaticsContext, r1: float, r2: float, n: int, seed: int):
    """Monte Carlo of the defining pair potential ``-E{y * unit output}``
    under the radial reduction (class factor on the second-layer slot, first
    slot pinned at the plus class, exactly as the printed formulas place
    them)."""
    rng = rng_from_seed(seed)
    g = rng.standard_normal(n)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    tau2 = np.where(y > 0, ctx.tau_plus, ctx.tau_minus)
    vals = -y * ctx.activation2(tau2 * r2 * ctx.activation1(ctx.tau_plus * r1 * g))
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(n))


def u0_mc(ctx: StaticsContext, r1: float, r2: float, r3: float, cos_alpha: float,
          n: int, seed: int, variant: str = "printed"):
    rng = rng_from_seed(seed)
    g1 = rng.standard_normal(n)
    z = rng.standard_normal(n)
    c = float(np.clip(cos_alpha, -1.0, 1.0))
    g2 = c * g1 + np.sqrt(max(0.0, 1.0 - c * c)) * z
    t1 = ctx.tau_plus * r1
    inner1 = ctx.activation1(t1 * g1)
    inner2 = ctx.activation1(t1 * g2)
    tp, tm = ctx.tau_plus, ctx.tau_minus
    if variant == "printed":
        vals = 0.5 * (ctx.activation2(tp * r2 * inner1) * ctx.activation2(tp * r3 * inner2)
                      + ctx.activation2(tm * r2 * inner1) * ctx.activation2(tp * r3 * inner2))
    elif variant == "symmetric":
        vals = 0.25 * sum(ctx.activation2(s2 * r2 * inner1) * ctx.activation2(s3 * r3 * inner2)
                          for s2 in (tp, tm) for s3 in (tp, tm))
    else:
        raise ConfigError(f"unknown u0 variant {variant!r}")
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(n))


def relu_q_mc(delta: float, r1: float, r2: float, b: float, sign: int,
              n: int, seed: int):
    rng = rng_from_seed(seed)
    tau = (1.0 + delta) if sign > 0 else (1.0 - delta)
    s = float(np.hypot(tau * r1, r2))
    vals = np.maximum(s * rng.standard_normal(n) + b, 0.0)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(n))


@dataclass(frozen=True)
class PotentialsMC:
    """Monte Carlo estimates of the linear and quadratic potentials of a
    network's second layer, with standard errors."""

    v_hat: np.ndarray
    v_se: np.ndarray
    u_hat: np.ndarray
    u_se: np.ndarray


def population_potentials_mc(data_spec, params, samples: int, seed: int) -> PotentialsMC:
    """Estimate ``V_i = -E{y * out_i}`` and ``U_ij = E{out_i * out_j}`` over
    the given data law, where ``out_i`` is second-layer unit ``i``'s output.
    ``U`` is symmetric by construction (common random numbers)."""
    from . import network_sgd  # local import; network_sgd does not import us
    from .synth_data import sample

    if samples < 1:
        raise ConfigError("samples must be >= 1")
    X, y = sample(data_spec, seed, samples)
    outs = network_sgd.output_unit_values(params, X)  # (samples, N_out)
    v_terms = -y[:, None] * outs
    v_hat = v_terms.mean(axis=0)
    v_se = v_terms.std(axis=0, ddof=1) / np.sqrt(samples) if samples > 1 else np.zeros_like(v_hat)
    u_hat = outs.T @ outs / samples
    sq = (outs ** 2).T @ (outs ** 2) / samples
    u_se = np.sqrt(np.maximum(0.0, sq - u_hat ** 2) / samples) if samples > 1 else np.zeros_like(u_hat)
    return PotentialsMC(v_hat=v_hat, v_se=v_se, u_hat=u_hat, u_se=u_se)
