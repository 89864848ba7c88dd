"""Finite-atom transport flows for the limiting risk.

Replacing each layer's radial distribution by J equal-mass atoms turns the
limiting transport equation into the coupled ODE system

    dr/dt = -J * xi(t) * grad R_J(r),

integrated here by forward Euler exactly as written (a Heun variant exists
behind a flag for step-size studies only). Three ensemble kinds:

* ``piecewise2``   -- one radial coordinate per atom, single saturating
                      activation;
* ``relu2``        -- four coordinates (a, b, r1, r2) per atom with the
                      closed-form ReLU kernels;
* ``joint3``       -- two coupled radial blocks (r1, r2) sharing J.

Radial coordinates are clamped at zero after every step (they stand for
weight norms; the flow is silent about sign crossings) and clamps are
counted in the trajectory diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels, meanfield_core as mf
from .errors import ConfigError, NumericError

KINDS = ("piecewise2", "relu2", "joint3")
_COORD_NAMES = {
    "piecewise2": ("r",),
    "relu2": ("a", "b", "r1", "r2"),
    "joint3": ("r1", "r2"),
}
_RADIAL = {"piecewise2": ("r",), "relu2": ("r1", "r2"), "joint3": ("r1", "r2")}


@dataclass
class ParticleEnsemble:
    """J equal-mass atoms; ``coords`` maps coordinate name -> (J,) array."""

    kind: str
    coords: dict
    time: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown ensemble kind {self.kind!r}")
        names = _COORD_NAMES[self.kind]
        if set(self.coords) != set(names):
            raise ConfigError(f"{self.kind} needs coordinates {names}")
        size = None
        for name in names:
            arr = np.ascontiguousarray(self.coords[name], dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ConfigError("coordinate arrays must be nonempty 1-d")
            if size is None:
                size = arr.size
            elif arr.size != size:
                raise ConfigError("all coordinate arrays must share J")
            if name in _RADIAL[self.kind]:
                arr = np.maximum(arr, 0.0)
            self.coords[name] = arr

    @property
    def J(self) -> int:
        return next(iter(self.coords.values())).size

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.kind,
                                {k: v.copy() for k, v in self.coords.items()},
                                self.time)

    def radial_measure(self, name: str = None) -> mf.RadialMeasure:
        if name is None:
            name = "r" if self.kind == "piecewise2" else "r2"
        return mf.RadialMeasure(np.sort(self.coords[name]))


def radial1d(r, time: float = 0.0) -> ParticleEnsemble:
    return ParticleEnsemble("piecewise2", {"r": np.asarray(r, float)}, time)


def relu_abrr(a, b, r1, r2, time: float = 0.0) -> ParticleEnsemble:
    return ParticleEnsemble("relu2", {"a": np.asarray(a, float),
                                      "b": np.asarray(b, float),
                                      "r1": np.asarray(r1, float),
                                      "r2": np.asarray(r2, float)}, time)


def three_layer_rr(r1, r2, time: float = 0.0) -> ParticleEnsemble:
    return ParticleEnsemble("joint3", {"r1": np.asarray(r1, float),
                                       "r2": np.asarray(r2, float)}, time)


@dataclass(frozen=True)
class IntegratorConfig:
    """Forward-Euler settings; ``xi`` as in the SGD schedule, floored at
    ``dt`` for the power law. ``grad_mode`` picks closed-form gradients or
    central finite differences of the same kernels."""

    dt: float
    steps: int
    xi_kind: str = "constant"
    xi_param: float = 1.0
    grad_mode: str = "analytic"
    fd_h: float = 1e-6
    record_every: int = 100
    checkpoint_every: Optional[int] = None
    integrator: str = "euler"

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.steps < 0:
            raise ConfigError("steps must be nonnegative")
        if self.xi_kind not in ("constant", "power"):
            raise ConfigError("xi_kind must be constant or power")
        if self.xi_kind == "power" and not -1.0 <= self.xi_param <= 0.0:
            raise ConfigError("power-law exponent must lie in [-1, 0]")
        if self.grad_mode not in ("analytic", "fd"):
            raise ConfigError("grad_mode must be analytic or fd")
        if not 1e-8 <= self.fd_h <= 1e-4:
            raise ConfigError("fd_h must lie in [1e-8, 1e-4]")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.integrator not in ("euler", "heun"):
            raise ConfigError("integrator must be euler or heun")

    def _encoded(self):
        kind = 0 if self.xi_kind == "constant" else 1
        return kind, float(self.xi_param), float(self.dt)

    def xi(self, t: float) -> float:
        if self.xi_kind == "constant":
            return self.xi_param
        return max(t, self.dt) ** self.xi_param


@dataclass
class Trajectory:
    """Per-step risk/lambda series, sparse records, particle checkpoints."""

    kind: str
    times: np.ndarray
    risks: np.ndarray
    lambda_plus: np.ndarray
    lambda_minus: np.ndarray
    records: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    clamp_count: int = 0
    ensemble: Optional[ParticleEnsemble] = None

    @property
    def final_risk(self) -> float:
        return float(self.risks[-1])


def _quantiles(arr: np.ndarray):
    qs = np.quantile(arr, [0.1, 0.5, 0.9])
    return float(qs[0]), float(qs[1]), float(qs[2])


def _record_row(ens: ParticleEnsemble, risk, lamp, lamm):
    row = {"t": ens.time, "risk": float(risk),
           "lambda_plus": float(lamp), "lambda_minus": float(lamm)}
    for name, arr in ens.coords.items():
        q10, q50, q90 = _quantiles(arr)
        row[f"{name}_q10"] = q10
        row[f"{name}_q50"] = q50
        row[f"{name}_q90"] = q90
    return row


def _sigma_arrays(act):
    return act.knots, act.seg_a, act.seg_b


def _chunk_kernel(ens: ParticleEnsemble, ctx_or_delta, cfg: IntegratorConfig,
                  nsteps: int):
    xi_kind, xi_param, xi_floor = cfg._encoded()
    gm = 0 if cfg.grad_mode == "analytic" else 1
    if ens.kind == "piecewise2":
        ctx = ctx_or_delta
        k1, a1, b1 = _sigma_arrays(ctx.activation2)
        return _kernels.euler_pw2_chunk(
            ens.coords["r"], k1, a1, b1, ctx.tau_plus, ctx.tau_minus,
            ens.time, cfg.dt, nsteps, xi_kind, xi_param, xi_floor, gm, cfg.fd_h)
    if ens.kind == "relu2":
        delta = float(ctx_or_delta)
        return _kernels.euler_relu2_chunk(
            ens.coords["a"], ens.coords["b"], ens.coords["r1"], ens.coords["r2"],
            delta, ens.time, cfg.dt, nsteps, xi_kind, xi_param, xi_floor, gm, cfg.fd_h)
    ctx = ctx_or_delta
    k1, a1, b1 = _sigma_arrays(ctx.activation1)
    k2, a2, b2 = _sigma_arrays(ctx.activation2)
    return _kernels.euler_joint3_chunk(
        ens.coords["r1"], ens.coords["r2"], k1, a1, b1, k2, a2, b2,
        ctx.tau_plus, ctx.tau_minus, ens.time, cfg.dt, nsteps,
        xi_kind, xi_param, xi_floor, gm, cfg.fd_h)


def _evolve(ens: ParticleEnsemble, ctx_or_delta, cfg: IntegratorConfig) -> Trajectory:
    if cfg.integrator == "heun":
        return _evolve_heun(ens, ctx_or_delta, cfg)
    work = ens.copy()
    steps = cfg.steps
    risks = [np.empty(0)]
    lamps = [np.empty(0)]
    lamms = [np.empty(0)]
    records = []
    checkpoints = [(work.time, work.copy().coords)]
    clamped = 0
    done = 0
    while True:
        take = min(cfg.record_every, steps - done)
        r, lp, lm, cl, bad = _chunk_kernel(work, ctx_or_delta, cfg, take)
        if bad >= 0:
            raise NumericError(f"non-finite gradient at particle {bad} near t={work.time:.6g}")
        clamped += cl
        records.append(_record_row(work, r[0], lp[0], lm[0]))
        last = done + take == steps
        keep = slice(None) if last else slice(0, take)
        risks.append(r[keep])
        lamps.append(lp[keep])
        lamms.append(lm[keep])
        work.time += take * cfg.dt
        done += take
        if cfg.checkpoint_every and (done % cfg.checkpoint_every == 0) and not last:
            checkpoints.append((work.time, work.copy().coords))
        if last:
            if take > 0:
                records.append(_record_row(work, r[-1], lp[-1], lm[-1]))
            checkpoints.append((work.time, work.copy().coords))
            break
    risks = np.concatenate(risks)
    lamp = np.concatenate(lamps)
    lamm = np.concatenate(lamms)
    times = ens.time + cfg.dt * np.arange(steps + 1)
    return Trajectory(kind=ens.kind, times=times, risks=risks,
                      lambda_plus=lamp, lambda_minus=lamm, records=records,
                      checkpoints=checkpoints, clamp_count=int(clamped),
                      ensemble=work)


def evolve_two_layer_piecewise(ens: ParticleEnsemble, ctx: mf.StaticsContext,
                               cfg: IntegratorConfig) -> Trajectory:
    """Radial flow for the single-hidden-layer ansatz; uses
    ``ctx.activation2`` as the network activation."""
    if ens.kind != "piecewise2":
        raise ConfigError("expected a piecewise2 ensemble")
    return _evolve(ens, ctx, cfg)


def evolve_two_layer_relu(ens: ParticleEnsemble, delta: float,
                          cfg: IntegratorConfig) -> Trajectory:
    if ens.kind != "relu2":
        raise ConfigError("expected a relu2 ensemble")
    return _evolve(ens, float(delta), cfg)


def evolve_three_layer(ens: ParticleEnsemble, ctx: mf.StaticsContext,
                       cfg: IntegratorConfig) -> Trajectory:
    if ens.kind != "joint3":
        raise ConfigError("expected a joint3 ensemble")
    return _evolve(ens, ctx, cfg)


def evolve(ens: ParticleEnsemble, ctx_or_delta, cfg: IntegratorConfig) -> Trajectory:
    """Kind-dispatching front end used by the CLI."""
    if ens.kind == "piecewise2":
        return evolve_two_layer_piecewise(ens, ctx_or_delta, cfg)
    if ens.kind == "relu2":
        delta = ctx_or_delta.delta if hasattr(ctx_or_delta, "delta") else ctx_or_delta
        return evolve_two_layer_relu(ens, delta, cfg)
    return evolve_three_layer(ens, ctx_or_delta, cfg)


# ---------------------------------------------------------------------------
# risk and gradient (NumPy reference path, shared by tests and experiments)
# ---------------------------------------------------------------------------

def risk_value(ens: ParticleEnsemble, ctx_or_delta) -> float:
    """R_J of the ensemble, from the same closed forms as the flow."""
    if ens.kind == "piecewise2":
        ctx = ctx_or_delta
        sig = ctx.activation2
        r = ens.coords["r"]
        sp = float(np.mean(sig.gaussian_mean(0.0, ctx.tau_plus * r)))
        sm = float(np.mean(sig.gaussian_mean(0.0, ctx.tau_minus * r)))
        return 0.5 * (1.0 - sp) ** 2 + 0.5 * (1.0 + sm) ** 2
    if ens.kind == "relu2":
        delta = float(ctx_or_delta)
        arr = np.column_stack([ens.coords[k] for k in ("a", "b", "r1", "r2")])
        return mf.relu_risk_infinity(delta, arr)
    ctx = ctx_or_delta
    rho2 = mf.RadialMeasure(ens.coords["r2"])
    return mf.risk_infinity(ctx, rho2, r1_ref=None, paired_r1=ens.coords["r1"])


def gradient_riskJ(ens: ParticleEnsemble, ctx_or_delta,
                   grad_mode: str = "analytic", fd_h: float = 1e-6) -> dict:
    """Gradient of R_J with respect to every particle coordinate.

    Returns arrays keyed like ``ens.coords``; satisfies the first-variation
    identity ``d psi / d r_m = (J/2) * (grad R_J)_m`` against the statics
    module (checked in tests at every accepted step).
    """
    J = ens.J
    if grad_mode == "fd":
        return _fd_gradient(ens, ctx_or_delta, fd_h)
    if grad_mode != "analytic":
        raise ConfigError("grad_mode must be analytic or fd")
    if ens.kind == "relu2":
        delta = float(ctx_or_delta)
        a, b, r1, r2 = (ens.coords[k] for k in ("a", "b", "r1", "r2"))
        qp = np.empty(J); qm = np.empty(J)
        parts = {k: np.empty((J, 2)) for k in ("a", "b", "r1", "r2")}
        for i in range(J):
            for col, sign in ((0, +1), (1, -1)):
                val, db, dr1, dr2 = mf.relu_q_pm_partials(delta, r1[i], r2[i], b[i], sign)
                (qp if col == 0 else qm)[i] = a[i] * val
                parts["a"][i, col] = val
                parts["b"][i, col] = a[i] * db
                parts["r1"][i, col] = a[i] * dr1
                parts["r2"][i, col] = a[i] * dr2
        sp, sm = float(np.mean(qp)), float(np.mean(qm))
        out = {}
        for k in ("a", "b", "r1", "r2"):
            out[k] = (-(1.0 - sp) * parts[k][:, 0] + (1.0 + sm) * parts[k][:, 1]) / J
        return out
    ctx = ctx_or_delta
    if ens.kind == "piecewise2":
        r = ens.coords["r"]
        qp = np.empty(J); qm = np.empty(J); dp = np.empty(J); dm = np.empty(J)
        for i in range(J):
            qv, d1, _ = _q_identity(ctx, ctx.tau_plus * r[i])
            qp[i] = qv; dp[i] = ctx.tau_plus * d1
            qv, d1, _ = _q_identity(ctx, ctx.tau_minus * r[i])
            qm[i] = qv; dm[i] = ctx.tau_minus * d1
        sp, sm = float(np.mean(qp)), float(np.mean(qm))
        return {"r": (-(1.0 - sp) * dp + (1.0 + sm) * dm) / J}
    r1, r2 = ens.coords["r1"], ens.coords["r2"]
    qp = np.empty(J); qm = np.empty(J)
    gp1 = np.empty(J); gp2 = np.empty(J); gm1 = np.empty(J); gm2 = np.empty(J)
    for i in range(J):
        qv, d1, d2 = mf.q_with_partials(ctx, ctx.tau_plus * r1[i], ctx.tau_plus * r2[i])
        qp[i] = qv; gp1[i] = ctx.tau_plus * d1; gp2[i] = ctx.tau_plus * d2
        qv, d1, d2 = mf.q_with_partials(ctx, ctx.tau_plus * r1[i], ctx.tau_minus * r2[i])
        qm[i] = qv; gm1[i] = ctx.tau_plus * d1; gm2[i] = ctx.tau_minus * d2
    sp, sm = float(np.mean(qp)), float(np.mean(qm))
    return {"r1": (-(1.0 - sp) * gp1 + (1.0 + sm) * gm1) / J,
            "r2": (-(1.0 - sp) * gp2 + (1.0 + sm) * gm2) / J}


def _q_identity(ctx, t):
    """q with the identity inner map: E sigma2(t * G) and d/dt."""
    from .activations import identity
    tmp = mf.StaticsContext(ctx.delta, identity(), ctx.activation2, ctx.quad_nodes)
    return mf.q_with_partials(tmp, t, 1.0)


def _fd_gradient(ens: ParticleEnsemble, ctx_or_delta, h: float) -> dict:
    out = {}
    for name in ens.coords:
        arr = ens.coords[name]
        g = np.empty(arr.size)
        for i in range(arr.size):
            saved = arr[i]
            arr[i] = saved + h
            up = risk_value(ens, ctx_or_delta)
            arr[i] = saved - h
            dn = risk_value(ens, ctx_or_delta)
            arr[i] = saved
            g[i] = (up - dn) / (2.0 * h)
        out[name] = g
    return out


def _evolve_heun(ens: ParticleEnsemble, ctx_or_delta, cfg: IntegratorConfig) -> Trajectory:
    """Second-order trapezoidal variant; step-size studies only."""
    work = ens.copy()
    names = list(work.coords)
    risks = np.empty(cfg.steps + 1)
    lamp = np.empty(cfg.steps + 1)
    lamm = np.empty(cfg.steps + 1)
    records = []
    clamped = 0
    for step in range(cfg.steps + 1):
        risks[step] = risk_value(work, ctx_or_delta)
        lamp[step] = np.nan
        lamm[step] = np.nan
        if step == cfg.steps:
            break
        t = work.time
        scale = work.J * cfg.dt
        g0 = gradient_riskJ(work, ctx_or_delta)
        trial = work.copy()
        for n in names:
            trial.coords[n] -= scale * cfg.xi(t) * g0[n]
        g1 = gradient_riskJ(trial, ctx_or_delta)
        xi1 = cfg.xi(t + cfg.dt)
        for n in names:
            upd = 0.5 * scale * (cfg.xi(t) * g0[n] + xi1 * g1[n])
            work.coords[n] -= upd
            if n in _RADIAL[work.kind]:
                neg = work.coords[n] < 0
                clamped += int(neg.sum())
                work.coords[n][neg] = 0.0
        work.time += cfg.dt
    times = ens.time + cfg.dt * np.arange(cfg.steps + 1)
    records.append(_record_row(work, risks[-1], np.nan, np.nan))
    return Trajectory(kind=ens.kind, times=times, risks=risks, lambda_plus=lamp,
                      lambda_minus=lamm, records=records,
                      checkpoints=[(work.time, work.coords)], clamp_count=clamped,
                      ensemble=work)


# ---------------------------------------------------------------------------
# stock initializers
# ---------------------------------------------------------------------------

def init_radial_ensemble(J: int, dim: int, delta: float, seed,
                         off_diag: float = 0.0) -> ParticleEnsemble:
    """Atoms are norms of N(0, Sigma) draws with diagonal ``delta^2 / dim``."""
    from .synth_data import sample_gaussian_norms
    r = sample_gaussian_norms(dim, delta ** 2 / dim, off_diag, J, seed)
    return radial1d(r)


def _as_seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def init_relu_ensemble(J: int, dim: int, split: int, delta: float, seed,
                       a0: float = 1.0, b0: float = 1.0) -> ParticleEnsemble:
    """(a, b) at their reference values, radial blocks from independent
    Gaussian norms over the first ``split`` and remaining coordinates."""
    from .synth_data import sample_gaussian_norms
    if not 0 < split < dim:
        raise ConfigError("split must lie strictly inside the dimension")
    ss = _as_seed_seq(seed).spawn(2)
    r1 = sample_gaussian_norms(split, delta ** 2 / dim, 0.0, J, ss[0])
    r2 = sample_gaussian_norms(dim - split, delta ** 2 / dim, 0.0, J, ss[1])
    return relu_abrr(np.full(J, a0), np.full(J, b0), r1, r2)


def init_three_layer_ensemble(J: int, dim: int, delta: float, seed,
                              off_diag: float = 0.0) -> ParticleEnsemble:
    ss = _as_seed_seq(seed).spawn(2)
    from .synth_data import sample_gaussian_norms
    r1 = sample_gaussian_norms(dim, delta ** 2 / dim, off_diag, J, ss[0])
    r2 = sample_gaussian_norms(dim, delta ** 2 / dim, off_diag, J, ss[1])
    return three_layer_rr(r1, r2)
