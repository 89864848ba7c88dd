"""Config-driven experiments tying the trainers, flows and tests together.

Each experiment validates its whole configuration before any compute, runs
under an optional wall-clock budget (checkpointing partial results when it
expires), and persists flat, diffable artifacts: CSV/JSON plus a manifest
of content hashes in ``run.json``. Re-running an identical config and seed
reproduces every numeric output byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.signal import find_peaks
from scipy.stats import chi as chi_dist

from . import _svg, meanfield_core as mf, network_sgd, pde_dynamics as pde
from . import stats_tests as st
from . import synth_data as sd
from .activations import by_name, piecewise_linear
from .errors import ConfigError, NumericError

EXPERIMENT_KINDS = ("sgd_vs_pde", "convergence_scaling", "prop1_gap",
                    "hoeffding_table", "theoretical_weights", "statics_grid")


@dataclass
class Budget:
    """Wall-clock allowance; experiments poll between units of work."""

    seconds: Optional[float] = None
    started: float = field(default_factory=time.monotonic)

    @property
    def exceeded(self) -> bool:
        return self.seconds is not None and (time.monotonic() - self.started) > self.seconds


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    kind: str
    parameters: dict
    seed: int
    output_dir: Path

    def __post_init__(self):
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; "
                              f"known: {EXPERIMENT_KINDS}")
        object.__setattr__(self, "parameters",
                           _validate_params(self.kind, dict(self.parameters)))


@dataclass
class RunRecord:
    config: ExperimentConfig
    content_hash: str
    started: str
    finished: str = ""
    metrics: dict = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    interrupted: bool = False

    def to_json(self) -> str:
        payload = {
            "name": self.config.name,
            "kind": self.config.kind,
            "parameters": self.config.parameters,
            "seed": self.config.seed,
            "content_hash": self.content_hash,
            "started": self.started,
            "finished": self.finished,
            "metrics": self.metrics,
            "manifest": self.manifest,
            "interrupted": self.interrupted,
        }
        return json.dumps(payload, indent=2, sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# parameter validation (all of it before any compute)
# ---------------------------------------------------------------------------

def _positive(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0


def _pos_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v > 0


def _nonneg_int(v):
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _prob_open(v):
    return isinstance(v, (int, float)) and 0 < v < 1


_SCHEMAS = {
    "sgd_vs_pde": {
        "pde_kind": (None, lambda v: v in ("relu2", "piecewise2")),
        "deltas": ([0.4], lambda v: isinstance(v, (list, tuple)) and len(v) >= 1
                   and all(_prob_open(x) for x in v)),
        "dim": (252, _pos_int),
        "n_units": (200, _pos_int),
        "epsilon": (2e-4, _positive),
        "steps": (2000, _pos_int),
        "xi_kind": ("power", lambda v: v in ("constant", "power")),
        "xi_param": (-0.25, lambda v: isinstance(v, (int, float))),
        "J": (100, _pos_int),
        "dt": (1e-3, _positive),
        "split": (120, _pos_int),
        "snapshots": (20, _pos_int),
    },
    "convergence_scaling": {
        "ladder": ([100, 200, 400, 800], lambda v: isinstance(v, (list, tuple))
                   and len(v) >= 3 and all(_pos_int(x) for x in v)),
        "seeds_per_rung": (10, _pos_int),
        "delta": (0.8, _prob_open),
        "dim": (250, _pos_int),
        "t_final": (0.05, _positive),
        "eps_base": (1e-3, _positive),  # epsilon at the smallest rung
        "J_ref": (2000, _pos_int),
        "dt_ref": (1e-4, _positive),
        "bootstrap": (1000, _pos_int),
    },
    "prop1_gap": {
        "delta": (0.8, _prob_open),
        # spread initial law (low-dimensional norm) so the flow can populate
        # both saturation branches and drive the brackets near zero
        "dim": (8, _pos_int),
        "J_star": (400, _pos_int),
        "pde_steps": (30000, _nonneg_int),
        "pde_dt": (1e-3, _positive),
        "ladder": ([25, 50, 100, 200, 400], lambda v: isinstance(v, (list, tuple))
                   and len(v) >= 3 and all(_pos_int(x) for x in v)),
        "resamples": (2000, _pos_int),
    },
    "hoeffding_table": {
        "rows": (None, lambda v: isinstance(v, (list, tuple)) and len(v) >= 1
                 and all(isinstance(r, (list, tuple)) and len(r) == 4 for r in v)),
        "replicates": (100, _pos_int),
        "delta": (0.5, _prob_open),
        "lr_scale": (5.0, _positive),
        "perm_count": (399, _pos_int),
        "activation": ("logistic", lambda v: isinstance(v, str)),
    },
    "theoretical_weights": {
        "delta": (0.8, _prob_open),
        "dim": (250, _pos_int),
        "J": (100, _pos_int),
        "n_samples": (2000, _pos_int),
        "nodes": (100, _pos_int),
        "dt": (1e-5, _positive),
        "pde_steps": (20000, _nonneg_int),
        "sgd_steps": (None, lambda v: v is None or _nonneg_int(v)),
        "off_diag": (0.001, lambda v: isinstance(v, (int, float)) and v >= 0),
        "bins": (40, lambda v: _pos_int(v) and v >= 4),
        "prominence": (0.05, _prob_open),
    },
    "statics_grid": {
        "delta": (0.8, _prob_open),
        "activation": ("piecewise_linear", lambda v: isinstance(v, str)),
        "r_max": (2.0, _positive),
        "points": (21, lambda v: _pos_int(v) and v >= 2),
    },
}


def _validate_params(kind: str, params: dict) -> dict:
    schema = _SCHEMAS[kind]
    unknown = set(params) - set(schema)
    if unknown:
        raise ConfigError(f"unknown parameters for {kind}: {sorted(unknown)}")
    out = {}
    for name, (default, pred) in schema.items():
        if name in params:
            value = params[name]
        elif default is not None or name in ("sgd_steps",):
            value = default
        else:
            raise ConfigError(f"{kind}: missing required parameter {name!r}")
        if name in params or value is not None:
            if not pred(value) and not (name == "sgd_steps" and value is None):
                raise ConfigError(f"{kind}: parameter {name!r} out of range: {value!r}")
        out[name] = value
    if kind == "sgd_vs_pde" and out["pde_kind"] == "relu2":
        if not 0 < out["split"] < out["dim"]:
            raise ConfigError("split must lie strictly inside dim")
    if kind == "convergence_scaling" and len(set(out["ladder"])) == 1:
        pass  # degenerate ladders are allowed; slope is reported as 0
    return out


# ---------------------------------------------------------------------------
# persistence helpers
# ---------------------------------------------------------------------------

def _fmt_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    """CSV with round-trip float formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(v) for v in row) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class _Run:
    """Common run scaffolding: output dir, manifest, record."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        # the hash identifies the computation: label and output path excluded
        canonical = json.dumps({"kind": cfg.kind, "parameters": cfg.parameters,
                                "seed": cfg.seed},
                               sort_keys=True, default=_json_default)
        self.record = RunRecord(config=cfg,
                                content_hash=hashlib.sha256(canonical.encode()).hexdigest(),
                                started=_now())
        cfg.output_dir.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, content: str) -> Path:
        path = self.cfg.output_dir / name
        path.write_text(content, encoding="utf-8")
        self.record.manifest[name] = _sha256(path)
        return path

    def emit_csv(self, name: str, header, rows) -> Path:
        path = self.cfg.output_dir / name
        write_csv(path, header, rows)
        self.record.manifest[name] = _sha256(path)
        return path

    def finish(self, metrics: dict, interrupted: bool = False) -> RunRecord:
        self.record.metrics = metrics
        self.record.interrupted = interrupted
        self.record.finished = _now()
        (self.cfg.output_dir / "run.json").write_text(self.record.to_json(),
                                                      encoding="utf-8")
        return self.record


# ---------------------------------------------------------------------------
# experiment: SGD vs particle flow
# ---------------------------------------------------------------------------

def _radial_pwl_ctx(delta: float) -> mf.StaticsContext:
    from .activations import identity
    return mf.StaticsContext(delta, identity(), piecewise_linear(0.5, 1.5, -2.5, 7.5))


def _w2_uniform(a: np.ndarray, b: np.ndarray) -> float:
    return st.wasserstein2_1d(st.EmpiricalMeasure1D(a), st.EmpiricalMeasure1D(b))


def run_sgd_vs_pde(cfg: ExperimentConfig, budget: Optional[Budget] = None) -> RunRecord:
    """Train a network and integrate the matched particle flow from the same
    initialization law; emit time-aligned mean curves and per-checkpoint
    quadratic-Wasserstein distances between the empirical and atom measures."""
    p = cfg.parameters
    run = _Run(cfg)
    budget = budget or Budget()
    deltas = list(p["deltas"])
    snap_every = max(1, p["steps"] // p["snapshots"])
    coords = ("a", "b", "r1", "r2") if p["pde_kind"] == "relu2" else ("r",)
    rows = []
    panels = {c: [] for c in coords}
    final_w2 = {}
    interrupted = False
    root = np.random.SeedSequence(cfg.seed)
    for d_i, (delta, ss) in enumerate(zip(deltas, root.spawn(len(deltas)))):
        if budget.exceeded:
            interrupted = True
            break
        s_net, s_pde, s_data = ss.spawn(3)
        spec = sd.isotropic_spec(delta, p["dim"])
        stream = sd.MixtureStream(spec, s_data)
        schedule = network_sgd.StepSchedule(p["epsilon"], p["xi_kind"], p["xi_param"])
        icfg_kw = dict(dt=p["dt"], xi_kind=p["xi_kind"], xi_param=p["xi_param"])
        if p["pde_kind"] == "relu2":
            from .activations import relu
            rng = sd.rng_from_seed(s_net)
            net = network_sgd.init_params(rng, p["dim"], p["n_units"],
                                          activation1=relu(), delta=delta)
            trace = network_sgd.train_one_pass(net, stream, schedule,
                                               steps=p["steps"],
                                               snapshot_every=snap_every,
                                               norm_split=p["split"])
            ens = pde.init_relu_ensemble(p["J"], p["dim"], p["split"], delta, s_pde)
            ctx_or_delta = delta
        else:
            rng = sd.rng_from_seed(s_net)
            net = network_sgd.init_params(rng, p["dim"], p["n_units"],
                                          activation1=piecewise_linear(0.5, 1.5, -2.5, 7.5),
                                          delta=delta, has_ab=False)
            trace = network_sgd.train_one_pass(net, stream, schedule,
                                               steps=p["steps"],
                                               snapshot_every=snap_every)
            ens = pde.init_radial_ensemble(p["J"], p["dim"], delta, s_pde)
            ctx_or_delta = _radial_pwl_ctx(delta)

        # advance the flow to each snapshot time, comparing as we go
        sgd_series = {c: [] for c in coords}
        pde_series = {c: [] for c in coords}
        w2_series = {c: [] for c in coords}
        times = []
        for snap in trace.snapshots:
            target_steps = int(round(snap.t / p["dt"]))
            done = int(round(ens.time / p["dt"]))
            if target_steps > done:
                icfg = pde.IntegratorConfig(steps=target_steps - done,
                                            record_every=max(1, target_steps - done),
                                            **icfg_kw)
                traj = pde.evolve(ens, ctx_or_delta, icfg)
                ens = traj.ensemble
            times.append(snap.t)
            summ = snap.layers[0]
            sgd_vals = {"r": summ["norms"]} if p["pde_kind"] == "piecewise2" else {
                "a": summ["a"], "b": summ["b"], "r1": summ["r1"], "r2": summ["r2"]}
            for c in coords:
                pde_vals = ens.coords[c]
                sgd_series[c].append(float(np.mean(sgd_vals[c])))
                pde_series[c].append(float(np.mean(pde_vals)))
                w2_series[c].append(_w2_uniform(sgd_vals[c], pde_vals))
        for c in coords:
            label = f"delta={delta}"
            panels[c].append((f"SGD {label}", times, sgd_series[c]))
            panels[c].append((f"flow {label}", times, pde_series[c]))
            for t, sv, pv, wv in zip(times, sgd_series[c], pde_series[c], w2_series[c]):
                rows.append((delta, c, t, sv, pv, wv))
        final_w2[f"delta_{delta}"] = {c: w2_series[c][-1] for c in coords}
        if d_i == 0:
            final_w2["w2_t0"] = {c: w2_series[c][0] for c in coords}
    run.emit_csv("comparison.csv",
                 ("delta", "coord", "t", "sgd_mean", "flow_mean", "w2"), rows)
    svg = _svg.grid_chart([(f"coordinate {c}", panels[c]) for c in coords],
                          ncols=2, xlabel="t", ylabel="mean value")
    run.emit("evolution.svg", svg)
    metrics = {"final_w2": final_w2,
               "snapshots": len(times) if rows else 0}
    return run.finish(metrics, interrupted=interrupted)


# ---------------------------------------------------------------------------
# experiment: convergence of the empirical measure to the flow
# ---------------------------------------------------------------------------

def _chi_quantile_atoms(J: int, dim: int, delta: float) -> np.ndarray:
    """Deterministic atom quantization of the norm law ||N(0, (delta^2/d) I)||:
    mid-point chi quantiles scaled by delta/sqrt(d)."""
    u = (np.arange(J) + 0.5) / J
    return delta / np.sqrt(dim) * chi_dist.ppf(u, df=dim)


def _fit_loglog(ns: np.ndarray, w2: np.ndarray) -> float:
    ln = np.log(ns)
    lw = np.log(np.maximum(w2, 1e-300))
    if np.allclose(ln, ln[0]):
        return 0.0
    slope = np.polyfit(ln, lw, 1)[0]
    return float(slope)


def run_convergence_scaling(cfg: ExperimentConfig,
                            budget: Optional[Budget] = None) -> RunRecord:
    """Ladder of widths with epsilon ~ 1/N at fixed horizon; fits the
    log-log slope of the final-time W2 against the flow reference and
    bootstraps a confidence interval over seeds."""
    p = cfg.parameters
    run = _Run(cfg)
    budget = budget or Budget()
    delta, dim = p["delta"], p["dim"]
    ladder = list(p["ladder"])
    n0 = min(ladder)
    ctx = _radial_pwl_ctx(delta)
    # deterministic flow reference from the quantized initial law
    atoms0 = _chi_quantile_atoms(p["J_ref"], dim, delta)
    ref_steps = int(round(p["t_final"] / p["dt_ref"]))
    traj = pde.evolve_two_layer_piecewise(
        pde.radial1d(atoms0), ctx,
        pde.IntegratorConfig(dt=p["dt_ref"], steps=ref_steps,
                             record_every=max(1, ref_steps)))
    ref_atoms = traj.ensemble.coords["r"]
    ref_measure = st.EmpiricalMeasure1D(ref_atoms)

    act = piecewise_linear(0.5, 1.5, -2.5, 7.5)
    spec = sd.isotropic_spec(delta, dim)
    root = np.random.SeedSequence(cfg.seed)
    rows = []
    interrupted = False
    rung_seeds = root.spawn(len(ladder))
    for N, rseed in zip(ladder, rung_seeds):
        eps = p["eps_base"] * n0 / N
        steps = int(round(p["t_final"] / eps))
        for s_i, ss in enumerate(rseed.spawn(p["seeds_per_rung"])):
            if budget.exceeded:
                interrupted = True
                break
            s_net, s_data = ss.spawn(2)
            rng = sd.rng_from_seed(s_net)
            net = network_sgd.init_params(rng, dim, N, activation1=act,
                                          delta=delta, has_ab=False)
            stream = sd.MixtureStream(spec, s_data)
            schedule = network_sgd.StepSchedule(eps)
            trace = network_sgd.train_one_pass(net, stream, schedule, steps=steps)
            norms = np.linalg.norm(trace.final_params.layer1.W, axis=1)
            w2 = st.wasserstein2_1d(st.EmpiricalMeasure1D(norms), ref_measure)
            rows.append((N, s_i, eps, steps, w2))
        if interrupted:
            break
    run.emit_csv("rungs.csv", ("N", "seed", "epsilon", "steps", "w2"), rows)
    ns = np.asarray([r[0] for r in rows], dtype=float)
    w2s = np.asarray([r[4] for r in rows], dtype=float)
    slope = _fit_loglog(ns, w2s) if rows else float("nan")
    # bootstrap over seeds within rungs
    rng = sd.rng_from_seed(np.random.SeedSequence([cfg.seed, 0xB007]))
    slopes = []
    uniq = sorted(set(ns.tolist()))
    by_rung = {n: w2s[ns == n] for n in uniq}
    if rows and len(uniq) >= 2:
        for _ in range(p["bootstrap"]):
            bn, bw = [], []
            for n in uniq:
                vals = by_rung[n]
                pick = rng.integers(0, vals.size, vals.size)
                bn.extend([n] * vals.size)
                bw.extend(vals[pick])
            slopes.append(_fit_loglog(np.asarray(bn), np.asarray(bw)))
        ci_lo, ci_hi = np.quantile(slopes, [0.025, 0.975])
    else:
        ci_lo = ci_hi = 0.0
    medians = {str(int(n)): float(np.median(by_rung[n])) for n in uniq}
    series = [("median W2", uniq, [medians[str(int(n))] for n in uniq])]
    run.emit("w2_ladder.svg", _svg.line_chart(series, title="final-time W2 vs width",
                                              xlabel="N", ylabel="W2",
                                              logx=True, logy=True))
    metrics = {"slope": slope, "ci_lo": float(ci_lo), "ci_hi": float(ci_hi),
               "median_w2": medians}
    return run.finish(metrics, interrupted=interrupted)


# ---------------------------------------------------------------------------
# experiment: finite-width risk gap identity
# ---------------------------------------------------------------------------

def _pw2_q_values(ctx: mf.StaticsContext, atoms: np.ndarray):
    sig = ctx.activation2
    qp = sig.gaussian_mean(0.0, ctx.tau_plus * atoms)
    qm = sig.gaussian_mean(0.0, ctx.tau_minus * atoms)
    return np.atleast_1d(qp), np.atleast_1d(qm)


def run_prop1_gap(cfg: ExperimentConfig, budget: Optional[Budget] = None) -> RunRecord:
    """Near-optimal atom measure from a long flow run; compares the exact
    finite-width gap bracket (trace of the quadratic kernel minus its double
    integral, divided by N) against resampled Monte Carlo and fits the decay
    exponent."""
    p = cfg.parameters
    run = _Run(cfg)
    budget = budget or Budget()
    ctx = _radial_pwl_ctx(p["delta"])
    ens = pde.init_radial_ensemble(p["J_star"], p["dim"], p["delta"],
                                   np.random.SeedSequence([cfg.seed, 1]))
    if p["pde_steps"] > 0:
        traj = pde.evolve_two_layer_piecewise(
            ens, ctx, pde.IntegratorConfig(dt=p["pde_dt"], steps=p["pde_steps"],
                                           record_every=1000))
        ens = traj.ensemble
    atoms = ens.coords["r"]
    qp, qm = _pw2_q_values(ctx, atoms)
    sp, sm = float(np.mean(qp)), float(np.mean(qm))
    risk_star = 0.5 * (1 - sp) ** 2 + 0.5 * (1 + sm) ** 2
    # U(r, r) integrated minus the double integral
    bracket = float(0.5 * np.mean(qp ** 2 + qm ** 2) - 0.5 * (sp ** 2 + sm ** 2))
    rng = sd.rng_from_seed(np.random.SeedSequence([cfg.seed, 2]))
    rows = []
    interrupted = False
    for N in p["ladder"]:
        if budget.exceeded:
            interrupted = True
            break
        gaps = np.empty(p["resamples"])
        for b in range(p["resamples"]):
            pick = rng.integers(0, atoms.size, N)
            a_hat = float(np.mean(qp[pick]))
            b_hat = float(np.mean(qm[pick]))
            gaps[b] = 0.5 * (1 - a_hat) ** 2 + 0.5 * (1 + b_hat) ** 2 - risk_star
        mc = float(np.mean(gaps))
        se = float(np.std(gaps, ddof=1) / np.sqrt(p["resamples"]))
        ident = bracket / N
        z = (mc - ident) / se if se > 0 else 0.0
        rows.append((N, ident, mc, se, z))
    run.emit_csv("gaps.csv", ("N", "identity_gap", "mc_gap", "mc_se", "z"), rows)
    ns = np.asarray([r[0] for r in rows], dtype=float)
    mcs = np.asarray([max(r[2], 1e-300) for r in rows])
    exponent = _fit_loglog(ns, mcs) if len(rows) >= 2 else float("nan")
    run.emit("gap_ladder.svg", _svg.line_chart(
        [("identity", ns.tolist(), [r[1] for r in rows]),
         ("Monte Carlo", ns.tolist(), [r[2] for r in rows])],
        title="finite-width risk gap", xlabel="N", ylabel="gap",
        logx=True, logy=True))
    metrics = {"bracket": bracket, "risk_star": risk_star,
               "exponent": float(exponent),
               "max_abs_z": float(max((abs(r[4]) for r in rows), default=0.0))}
    return run.finish(metrics, interrupted=interrupted)


# ---------------------------------------------------------------------------
# experiment: independence table
# ---------------------------------------------------------------------------

def run_hoeffding_table(cfg: ExperimentConfig,
                        budget: Optional[Budget] = None) -> RunRecord:
    p = cfg.parameters
    run = _Run(cfg)
    budget = budget or Budget()
    rows = tuple(st.Table1Row(int(r[0]), float(r[1]), int(r[2]), int(r[3]))
                 for r in p["rows"])
    suite_cfg = st.Table1Config(rows=rows, replicates=p["replicates"],
                                delta=p["delta"], lr_scale=p["lr_scale"],
                                perm_count=p["perm_count"], seed=cfg.seed,
                                activation=p["activation"])
    results = st.hoeffding_suite(suite_cfg, budget=budget)
    out_rows = []
    for res in results:
        for rec in res.records:
            out_rows.append((res.row.n_samples, res.row.off_diag, res.row.nodes,
                             res.row.dim, rec[0], rec[1], rec[2], rec[3]))
    run.emit_csv("replicates.csv",
                 ("n_samples", "off_diag", "nodes", "dim",
                  "replicate", "d_stat", "p_value", "n_pairs"), out_rows)
    summary = [{"row": vars(res.row), "mean_p": res.mean_p,
                "frac_reject_05": res.frac_reject_05, "pairing": res.pairing}
               for res in results]
    run.emit("summary.json", json.dumps(summary, indent=2, sort_keys=True))
    interrupted = len(results) < len(rows)
    metrics = {"rows": summary}
    return run.finish(metrics, interrupted=interrupted)


# ---------------------------------------------------------------------------
# experiment: seeded-weights pipeline
# ---------------------------------------------------------------------------

def _hist_rows(values: np.ndarray, bins: int, lo: float, hi: float):
    hist, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return [(float(edges[i]), float(edges[i + 1]), int(hist[i]))
            for i in range(bins)]


def _mode_count(values: np.ndarray, bins: int, prominence: float) -> int:
    """Documented mode-counting rule: histogram, 3-bin moving average,
    peaks with prominence at least ``prominence`` times the smoothed max."""
    hist, _ = np.histogram(values, bins=bins)
    kernel = np.ones(3) / 3.0
    smooth = np.convolve(hist.astype(float), kernel, mode="same")
    if smooth.max() <= 0:
        return 0
    peaks, _ = find_peaks(np.concatenate(([0.0], smooth, [0.0])),
                          prominence=prominence * smooth.max())
    return int(peaks.size)


class _ArrayStream:
    """One pass over a fixed dataset (chunked-stream protocol)."""

    def __init__(self, X, y):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.ascontiguousarray(y, dtype=float)
        self.pos = 0

    def next_chunk(self, k: int):
        lo, hi = self.pos, min(self.pos + k, self.y.size)
        self.pos = hi
        return self.X[lo:hi], self.y[lo:hi]


def run_theoretical_weights(cfg: ExperimentConfig,
                            budget: Optional[Budget] = None) -> RunRecord:
    """Flow-evolve an initial radial law, seed trained networks' output
    weights with the evolved atoms, re-evolve the extracted weights, and
    persist every intermediate density. Both networks (one and two hidden
    layers) train one pass over the same fixed dataset."""
    p = cfg.parameters
    run = _Run(cfg)
    budget = budget or Budget()
    delta, dim, J = p["delta"], p["dim"], p["J"]
    ctx = _radial_pwl_ctx(delta)
    root = np.random.SeedSequence(cfg.seed)
    s_init, s_data, s_netA, s_netB = root.spawn(4)
    sgd_steps = p["sgd_steps"] if p["sgd_steps"] is not None else p["n_samples"]

    def stage_fail(stage, exc):
        raise NumericError(f"stage {stage!r} failed: {exc}") from exc

    def reflow(stage, values):
        try:
            ens = pde.radial1d(values)
            if p["pde_steps"] > 0:
                traj = pde.evolve_two_layer_piecewise(
                    ens, ctx, pde.IntegratorConfig(dt=p["dt"], steps=p["pde_steps"],
                                                   record_every=1000))
                ens = traj.ensemble
            return ens.coords["r"].copy()
        except NumericError:
            raise
        except Exception as exc:
            stage_fail(stage, exc)

    densities = {}

    # stage 1: flow from the correlated initial radial law
    try:
        r0 = sd.sample_gaussian_norms(dim, delta ** 2 / dim, p["off_diag"], J, s_init)
    except Exception as exc:
        stage_fail("init", exc)
    densities["init"] = r0.copy()
    seeds_rT = reflow("flow", r0)
    densities["flow_evolved"] = seeds_rT.copy()

    # stage 2: train networks whose output-layer weights start at the atoms
    spec = sd.correlated_spec(delta, dim, p["off_diag"])
    X, y = sd.sample_correlated(spec, s_data, p["n_samples"])
    extracted = {}
    for tag, hidden_layers, s_net in (("A", 1, s_netA), ("B", 2, s_netB)):
        if budget.exceeded:
            _persist_densities(run, densities, p)
            return run.finish({"stages": sorted(densities)}, interrupted=True)
        try:
            rng = sd.rng_from_seed(s_net)
            act = by_name("logistic")
            nodes = p["nodes"]
            net = network_sgd.init_params(
                rng, dim, nodes, nodes if hidden_layers == 2 else 0,
                activation1=act, activation2=act if hidden_layers == 2 else None,
                delta=delta)
            out_layer = net.output_layer
            k = min(J, out_layer.units)
            out_layer.a[:k] = seeds_rT[:k]
            schedule = network_sgd.StepSchedule(5.0 / dim)
            trace = network_sgd.train_one_pass(net, _ArrayStream(X, y), schedule,
                                               steps=min(sgd_steps, y.size))
            extracted[tag] = trace.final_params.output_layer.a.copy()
            densities[f"trained_{tag}"] = extracted[tag].copy()
        except Exception as exc:
            stage_fail(f"train_{tag}", exc)

    # stage 3: re-evolve the extracted weights
    finals = {}
    for tag in ("A", "B"):
        finals[tag] = reflow(f"reflow_{tag}", extracted[tag])
        densities[f"final_{tag}"] = finals[tag].copy()

    _persist_densities(run, densities, p)
    kl_self, _ = st.kl_and_l1(st.EmpiricalMeasure1D(finals["A"]),
                              st.EmpiricalMeasure1D(finals["A"]))
    metrics = {
        "modes_A": _mode_count(finals["A"], p["bins"], p["prominence"]),
        "modes_B": _mode_count(finals["B"], p["bins"], p["prominence"]),
        "kl_self_A": kl_self,
        "stages": sorted(densities),
    }
    return run.finish(metrics)


def _persist_densities(run: _Run, densities: dict, p: dict) -> None:
    all_vals = np.concatenate(list(densities.values()))
    lo, hi = float(all_vals.min()), float(all_vals.max())
    if lo == hi:
        hi = lo + 1e-12
    panels = []
    for name, vals in sorted(densities.items()):
        rows = _hist_rows(vals, p["bins"], lo, hi)
        run.emit_csv(f"density_{name}.csv", ("bin_lo", "bin_hi", "count"), rows)
        mids = [0.5 * (r[0] + r[1]) for r in rows]
        panels.append((name, [(name, mids, [r[2] for r in rows])]))
    run.emit("densities.svg", _svg.grid_chart(panels, ncols=2,
                                              xlabel="weight", ylabel="count"))


# ---------------------------------------------------------------------------
# experiment: statics tables
# ---------------------------------------------------------------------------

def run_statics_grid(cfg: ExperimentConfig, budget: Optional[Budget] = None) -> RunRecord:
    p = cfg.parameters
    run = _Run(cfg)
    act = by_name(p["activation"])
    from .activations import identity
    ctx = mf.StaticsContext(p["delta"], identity(), act)
    grid = np.linspace(0.0, p["r_max"], p["points"])
    rho = mf.RadialMeasure(grid[grid > 0] if np.any(grid > 0) else grid)
    rows = []
    for r1 in grid:
        for r2 in grid:
            rows.append((r1, r2,
                         mf.q(ctx, ctx.tau_plus * r1, ctx.tau_plus * r2),
                         mf.v(ctx, r1, r2),
                         mf.u_infinity(ctx, r1, r2, r2),
                         mf.psi_infinity(ctx, rho, r1, r2).psi))
    run.emit_csv("statics.csv", ("r1", "r2", "q", "v", "u_inf", "psi_inf"), rows)
    return run.finish({"points": len(rows)})


# ---------------------------------------------------------------------------
# dispatch and reporting
# ---------------------------------------------------------------------------

_RUNNERS = {
    "sgd_vs_pde": run_sgd_vs_pde,
    "convergence_scaling": run_convergence_scaling,
    "prop1_gap": run_prop1_gap,
    "hoeffding_table": run_hoeffding_table,
    "theoretical_weights": run_theoretical_weights,
    "statics_grid": run_statics_grid,
}


def run_experiment(cfg: ExperimentConfig, budget: Optional[Budget] = None) -> RunRecord:
    return _RUNNERS[cfg.kind](cfg, budget)


def load_config(path: Path, out_override=None) -> ExperimentConfig:
    path = Path(path)
    try:
        if path.suffix == ".toml":
            try:
                import tomllib
            except ImportError as exc:
                raise ConfigError("TOML configs need Python >= 3.11; "
                                  "use JSON instead") from exc
            payload = tomllib.loads(path.read_text())
        else:
            payload = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    missing = {"name", "kind", "parameters", "seed"} - set(payload)
    if missing:
        raise ConfigError(f"config missing keys: {sorted(missing)}")
    out_dir = out_override or payload.get("output_dir")
    if out_dir is None:
        raise ConfigError("config needs output_dir (or pass --out)")
    return ExperimentConfig(name=payload["name"], kind=payload["kind"],
                            parameters=payload["parameters"],
                            seed=int(payload["seed"]), output_dir=Path(out_dir))


def load_record(run_dir: Path) -> RunRecord:
    """Rehydrate a RunRecord from a run directory's run.json."""
    run_dir = Path(run_dir)
    path = run_dir / "run.json"
    try:
        payload = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    cfg = ExperimentConfig(name=payload["name"], kind=payload["kind"],
                           parameters=payload["parameters"],
                           seed=int(payload["seed"]), output_dir=run_dir)
    return RunRecord(config=cfg, content_hash=payload["content_hash"],
                     started=payload["started"], finished=payload["finished"],
                     metrics=payload["metrics"], manifest=payload["manifest"],
                     interrupted=payload["interrupted"])


def emit_report(records, out_dir: Path) -> Path:
    """Markdown report (plus inline-SVG HTML) over finished run records;
    deterministic bytes for identical records."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not records:
        raise ConfigError("emit_report needs at least one run record")
    lines = ["# Experiment report", ""]
    html = ["<html><head><meta charset='utf-8'><title>report</title></head><body>",
            "<h1>Experiment report</h1>"]
    for rec in records:
        lines.append(f"## {rec.config.name} ({rec.config.kind})")
        lines.append("")
        lines.append(f"- config hash: `{rec.content_hash}`")
        lines.append(f"- seed: {rec.config.seed}")
        lines.append(f"- interrupted: {rec.interrupted}")
        lines.append("")
        html.append(f"<h2>{rec.config.name} ({rec.config.kind})</h2>")
        html.append(f"<p>config hash <code>{rec.content_hash}</code>, "
                    f"seed {rec.config.seed}</p>")
        if rec.metrics:
            lines.append("| metric | value |")
            lines.append("| --- | --- |")
            for key in sorted(rec.metrics):
                val = json.dumps(rec.metrics[key], sort_keys=True, default=_json_default)
                lines.append(f"| {key} | `{val}` |")
            lines.append("")
        for name in sorted(rec.manifest):
            if name.endswith(".svg"):
                lines.append(f"![{name}]({rec.config.output_dir / name})")
                lines.append("")
                svg_path = rec.config.output_dir / name
                if svg_path.exists():
                    html.append(svg_path.read_text(encoding="utf-8"))
    html.append("</body></html>")
    report_md = out_dir / "report.md"
    report_md.write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out_dir / "report.html").write_text("\n".join(html) + "\n", encoding="utf-8")
    return report_md
