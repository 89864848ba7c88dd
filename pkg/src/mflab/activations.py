"""Scalar activations as exact piecewise-affine functions.

Every activation used here (saturating linear interpolation, ReLU, identity,
tabulated curves) is piecewise affine, and the family is closed under the
three operations the rest of the package needs:

* scaling the argument or the output,
* composition,
* taking expectations against a Gaussian.

The Gaussian expectation of a piecewise-affine function has a closed form in
``Phi``/``phi`` terms, one per affine piece, so the radial risk functionals
can be evaluated to machine precision instead of by generic quadrature whose
convergence the kinks would ruin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError

_SQRT2PI = float(np.sqrt(2.0 * np.pi))


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / _SQRT2PI


@dataclass(frozen=True)
class PiecewiseAffine:
    """A continuous piecewise-affine map R -> R.

    ``knots`` are the ordered breakpoints (may be empty), ``seg_a``/``seg_b``
    hold intercept and slope of each of the ``len(knots)+1`` affine pieces,
    piece ``j`` covering ``(knots[j-1], knots[j])`` with infinite tails at the
    ends. ``knot_derivs[i]`` pins the derivative reported exactly at
    ``knots[i]``; constructors choose the tie-breaking convention there.
    """

    knots: np.ndarray
    seg_a: np.ndarray
    seg_b: np.ndarray
    knot_derivs: np.ndarray
    kind: str = "custom"
    params: tuple = field(default=())

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        seg_a = np.asarray(self.seg_a, dtype=float)
        seg_b = np.asarray(self.seg_b, dtype=float)
        kd = np.asarray(self.knot_derivs, dtype=float)
        if seg_a.shape != (knots.size + 1,) or seg_b.shape != (knots.size + 1,):
            raise ConfigError("piece arrays must have len(knots)+1 entries")
        if kd.shape != knots.shape:
            raise ConfigError("one pinned derivative per knot required")
        if knots.size and np.any(np.diff(knots) <= 0):
            raise ConfigError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "seg_a", seg_a)
        object.__setattr__(self, "seg_b", seg_b)
        object.__setattr__(self, "knot_derivs", kd)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side="right")
        out = self.seg_a[idx] + self.seg_b[idx] * x
        return out if out.ndim else float(out)

    def deriv(self, x):
        """Derivative; exactly at a knot the pinned convention applies."""
        x0 = np.asarray(x, dtype=float)
        x1 = np.atleast_1d(x0)
        idx = np.searchsorted(self.knots, x1, side="right")
        out = self.seg_b[idx].copy()
        if self.knots.size:
            pos = np.searchsorted(self.knots, x1, side="left")
            hit = (pos < self.knots.size) & (self.knots[np.minimum(pos, self.knots.size - 1)] == x1)
            out[hit] = self.knot_derivs[pos[hit]]
        return float(out[0]) if x0.ndim == 0 else out.reshape(x0.shape)

    # -- closed operations --------------------------------------------------

    def scale_out(self, c: float) -> "PiecewiseAffine":
        """The function ``x -> c * f(x)``."""
        return PiecewiseAffine(self.knots, c * self.seg_a, c * self.seg_b,
                               c * self.knot_derivs, kind=self.kind)

    def affine_arg(self, a: float, b: float = 0.0) -> "PiecewiseAffine":
        """The function ``x -> f(a*x + b)``."""
        if a == 0.0:
            v = self(b)
            return PiecewiseAffine(np.empty(0), np.array([v]), np.array([0.0]),
                                   np.empty(0), kind=self.kind)
        knots = (self.knots - b) / a
        seg_a = self.seg_a + self.seg_b * b
        seg_b = self.seg_b * a
        kd = self.knot_derivs * a
        if a < 0:
            knots = knots[::-1].copy()
            seg_a = seg_a[::-1].copy()
            seg_b = seg_b[::-1].copy()
            kd = kd[::-1].copy()
        return PiecewiseAffine(knots, seg_a, seg_b, kd, kind=self.kind)

    def compose(self, inner: "PiecewiseAffine") -> "PiecewiseAffine":
        """The function ``x -> f(inner(x))``; exact, knot set recomputed."""
        bps = composite_breakpoints(inner, self)
        return _from_breakpoints(bps, lambda x: self(inner(x)),
                                 lambda x: self.deriv(inner(x)) * inner.deriv(x))

    def gaussian_mean(self, mu=0.0, sd=1.0):
        """``E f(mu + sd*Z)`` with ``Z ~ N(0,1)``; exact, broadcasts.

        Piece ``j`` contributes ``alpha*(Phi(hi)-Phi(lo)) + beta*(phi(lo)-phi(hi))``
        where ``f(mu+sd*z) = alpha + beta*z`` on the piece.
        """
        mu = np.asarray(mu, dtype=float)
        sd = np.asarray(sd, dtype=float)
        mu, sd = np.broadcast_arrays(mu, sd)
        if np.any(sd < 0):
            raise ConfigError("sd must be nonnegative")
        scalar = mu.ndim == 0
        mu = np.atleast_1d(mu).astype(float)
        sd = np.atleast_1d(sd).astype(float)
        out = np.empty(mu.shape, dtype=float)
        degenerate = sd == 0.0
        if degenerate.any():
            out[degenerate] = self(mu[degenerate])
        live = ~degenerate
        if live.any():
            m, s = mu[live], sd[live]
            if self.knots.size == 0:
                val = self.seg_a[0] + self.seg_b[0] * m
            else:
                # z-space knot positions, one column per (mu, sd) pair
                t = (self.knots[:, None] - m[None, :]) / s[None, :]
                cdf = ndtr(t)
                pdf = _phi(t)
                lo_cdf = np.vstack([np.zeros((1, m.size)), cdf])
                hi_cdf = np.vstack([cdf, np.ones((1, m.size))])
                lo_pdf = np.vstack([np.zeros((1, m.size)), pdf])
                hi_pdf = np.vstack([pdf, np.zeros((1, m.size))])
                alpha = self.seg_a[:, None] + self.seg_b[:, None] * m[None, :]
                beta = self.seg_b[:, None] * s[None, :]
                val = np.sum(alpha * (hi_cdf - lo_cdf) + beta * (lo_pdf - hi_pdf), axis=0)
            out[live] = val
        return float(out[0]) if scalar else out

    @property
    def is_bounded(self) -> bool:
        return self.seg_b[0] == 0.0 and self.seg_b[-1] == 0.0


def _from_breakpoints(bps, fn, deriv_fn) -> PiecewiseAffine:
    """Rebuild a piecewise-affine function from breakpoints and a pointwise
    evaluator that is affine between consecutive breakpoints."""
    bps = np.asarray(bps, dtype=float)
    pts = _interior_points(bps)
    slopes = np.asarray([float(deriv_fn(p)) for p in pts])
    seg_a = np.asarray([float(fn(p)) - s * p for p, s in zip(pts, slopes)])
    kd = np.asarray([float(deriv_fn(b + _step(b))) for b in bps])  # right convention
    return PiecewiseAffine(bps, seg_a, slopes, kd)


def _step(x):
    return 1e-9 * max(1.0, abs(x))


def _interior_points(bps: np.ndarray) -> np.ndarray:
    """One strictly interior representative per piece, tails included."""
    if bps.size == 0:
        return np.array([0.0])
    pts = [bps[0] - 1.0]
    for lo, hi in zip(bps[:-1], bps[1:]):
        pts.append(0.5 * (lo + hi))
    pts.append(bps[-1] + 1.0)
    return np.asarray(pts)


def composite_breakpoints(inner: PiecewiseAffine, outer: PiecewiseAffine) -> np.ndarray:
    """Breakpoints (in the argument of ``inner``) of ``outer(inner(x))``."""
    cands = list(inner.knots)
    if outer.knots.size:
        # piece j of inner covers (edges[j], edges[j+1]) and maps x to a+b*x
        edges = np.concatenate(([-np.inf], inner.knots, [np.inf]))
        for j in range(inner.seg_a.size):
            a, b = inner.seg_a[j], inner.seg_b[j]
            if b == 0.0:
                continue
            pre = (outer.knots - a) / b
            lo, hi = edges[j], edges[j + 1]
            for x in pre:
                if lo < x < hi:
                    cands.append(float(x))
    if not cands:
        return np.empty(0)
    bps = np.sort(np.asarray(cands, dtype=float))
    keep = np.concatenate(([True], np.diff(bps) > 1e-14 * np.maximum(1.0, np.abs(bps[1:]))))
    return bps[keep]


# -- the activation kinds the package exposes -------------------------------

def piecewise_linear(t1: float, t2: float, s1: float, s2: float) -> PiecewiseAffine:
    """Saturating interpolation: ``s1`` below ``t1``, ``s2`` above ``t2``,
    linear in between. Derivative pinned to the interior slope at both knots
    (right-sided at ``t1``, left-sided at ``t2``)."""
    if not t1 < t2:
        raise ConfigError("need t1 < t2")
    if not s1 <= s2:
        raise ConfigError("need s1 <= s2 (non-decreasing activation)")
    m = (s2 - s1) / (t2 - t1)
    knots = np.array([t1, t2])
    seg_b = np.array([0.0, m, 0.0])
    seg_a = np.array([s1, s1 - m * t1, s2])
    return PiecewiseAffine(knots, seg_a, seg_b, np.array([m, m]),
                           kind="piecewise_linear", params=(t1, t2, s1, s2))


def relu() -> PiecewiseAffine:
    """max(x, 0); derivative at 0 pinned to 1 (right-sided)."""
    return PiecewiseAffine(np.array([0.0]), np.array([0.0, 0.0]),
                           np.array([0.0, 1.0]), np.array([1.0]), kind="relu")


def identity() -> PiecewiseAffine:
    return PiecewiseAffine(np.empty(0), np.array([0.0]), np.array([1.0]),
                           np.empty(0), kind="identity")


def from_table(x, y) -> PiecewiseAffine:
    """Linear interpolation of ``(x, y)`` pairs, constant beyond the table."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.shape != y.shape:
        raise ConfigError("need at least two (x, y) pairs of equal length")
    if np.any(np.diff(x) <= 0):
        raise ConfigError("table abscissae must be strictly increasing")
    mids = np.diff(y) / np.diff(x)
    seg_b = np.concatenate(([0.0], mids, [0.0]))
    seg_a = np.concatenate(([y[0]], y[:-1] - mids * x[:-1], [y[-1]]))
    kd = np.concatenate((mids, [0.0]))  # right-sided at every interior knot
    return PiecewiseAffine(x, seg_a, seg_b, kd, kind="custom")


def logistic(knots: int = 161, span: float = 8.0) -> PiecewiseAffine:
    """Tabulated 1/(1+exp(-x)) on [-span, span], clamped outside; the
    bounded stock activation for generic trained networks."""
    x = np.linspace(-span, span, knots)
    return from_table(x, 1.0 / (1.0 + np.exp(-x)))


_NAMED = {
    "relu": relu,
    "identity": identity,
    "logistic": logistic,
    "piecewise_linear": lambda: piecewise_linear(0.5, 1.5, -2.5, 7.5),
}


def by_name(name: str) -> PiecewiseAffine:
    """Resolve a CLI/config activation name. ``piecewise_linear`` accepts
    explicit parameters as ``piecewise_linear:t1,t2,s1,s2``."""
    if name.startswith("piecewise_linear:"):
        try:
            t1, t2, s1, s2 = (float(v) for v in name.split(":", 1)[1].split(","))
        except ValueError as exc:
            raise ConfigError(f"bad activation spec {name!r}") from exc
        return piecewise_linear(t1, t2, s1, s2)
    try:
        return _NAMED[name]()
    except KeyError:
        raise ConfigError(f"unknown activation {name!r}; known: {sorted(_NAMED)}") from None
