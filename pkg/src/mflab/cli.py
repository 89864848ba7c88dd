"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
``MFLAB_THREADS`` caps worker-pool parallelism; ``MFLAB_NO_NUMBA=1`` forces
the pure-NumPy kernel fallbacks.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import harness, meanfield_core as mf, network_sgd, pde_dynamics as pde
from . import stats_tests as st
from . import synth_data as sd
from .activations import by_name, identity
from .errors import ConfigError, MflabError, NumericError


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Default seed for subcommands that take one.")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Default output path for subcommands that take one.")
@click.option("--budget-seconds", type=float, default=None,
              help="Wall-clock budget; long experiments checkpoint when it expires.")
@click.pass_context
def cli(ctx, seed, out_dir, budget_seconds):
    ctx.obj = {"seed": seed, "out": out_dir, "budget": budget_seconds}


def _resolve_out(ctx, out, required=True):
    path = out or ctx.obj.get("out")
    if required and path is None:
        raise ConfigError("an output path is required (--out)")
    return Path(path) if path is not None else None


def _budget(ctx) -> harness.Budget:
    return harness.Budget(seconds=ctx.obj.get("budget"))


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


@cli.command("gen-data")
@click.option("--delta", type=float, required=True)
@click.option("--dim", type=int, required=True)
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, default=None)
@click.option("--off-diag", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def gen_data(ctx, delta, dim, count, seed, off_diag, out):
    """Write a labeled sample of the mixture law as CSV (y, x1..xd)."""
    out = _resolve_out(ctx, out)
    seed = seed if seed is not None else ctx.obj["seed"]
    if off_diag == 0.0:
        spec = sd.isotropic_spec(delta, dim)
        X, y = sd.sample_isotropic(spec, seed, count)
    else:
        spec = sd.correlated_spec(delta, dim, off_diag)
        X, y = sd.sample_correlated(spec, seed, count)
    sd.write_csv(out, X, y)
    click.echo(f"wrote {count} samples to {out}")


@cli.command("train-sgd")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def train_sgd(ctx, config_path, out):
    """One-pass SGD run from a JSON config; writes trace.csv and
    weights_final.csv."""
    out = _resolve_out(ctx, out)
    cfgd = _read_json(config_path)
    required = {"delta", "dim", "layers", "epsilon", "steps"}
    missing = required - set(cfgd)
    if missing:
        raise ConfigError(f"train-sgd config missing keys: {sorted(missing)}")
    layers = list(cfgd["layers"])
    if not 1 <= len(layers) <= 2 or any(not isinstance(v, int) or v < 1 for v in layers):
        raise ConfigError("layers must be [n1] or [n1, n2] with positive ints")
    act = by_name(cfgd.get("activation", "relu"))
    xi = cfgd.get("xi", {"kind": "constant", "param": 1.0})
    if isinstance(xi, (int, float)):
        xi = {"kind": "constant", "param": float(xi)}
    schedule = network_sgd.StepSchedule(float(cfgd["epsilon"]),
                                        xi.get("kind", "constant"),
                                        float(xi.get("param", 1.0)))
    seed = int(cfgd.get("seed", ctx.obj["seed"]))
    root = np.random.SeedSequence(seed)
    s_net, s_train, s_eval = root.spawn(3)
    spec = sd.isotropic_spec(float(cfgd["delta"]), int(cfgd["dim"]))
    rng = sd.rng_from_seed(s_net)
    net = network_sgd.init_params(
        rng, spec.dim, layers[0], layers[1] if len(layers) == 2 else 0,
        activation1=act, activation2=act if len(layers) == 2 else None,
        delta=spec.delta, has_ab=bool(cfgd.get("has_ab", True)),
        mean_field_scaling=bool(cfgd.get("layer1_mean_field_scaling", False)))
    eval_count = int(cfgd.get("eval_samples", 2000))
    X_eval, y_eval = sd.sample(spec, s_eval, eval_count)
    trace = network_sgd.train_one_pass(
        net, sd.MixtureStream(spec, s_train), schedule,
        steps=int(cfgd["steps"]), mode=cfgd.get("mode", network_sgd.FULL_BACKPROP),
        snapshot_every=int(cfgd.get("snapshot_every", 0)),
        eval_data=(X_eval, y_eval))
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for snap in trace.snapshots:
        row = [snap.step, snap.risk]
        for summ in snap.layers:
            qs = np.quantile(summ["norms"], [0.1, 0.5, 0.9])
            row.extend(float(q) for q in qs)
        rows.append(tuple(row))
    header = ["step", "risk_estimate"]
    for li in range(len(trace.snapshots[0].layers)):
        header += [f"layer{li + 1}_norm_q10", f"layer{li + 1}_norm_q50",
                   f"layer{li + 1}_norm_q90"]
    harness.write_csv(out / "trace.csv", header, rows)
    wrows = []
    final = trace.final_params
    for li, layer in enumerate(filter(None, (final.layer1, final.layer2)), start=1):
        for u in range(layer.units):
            if layer.has_ab:
                wrows.append((li, u, "a", 0, layer.a[u]))
                wrows.append((li, u, "b", 0, layer.b[u]))
            for j in range(layer.fan_in):
                wrows.append((li, u, "w", j, layer.W[u, j]))
    harness.write_csv(out / "weights_final.csv",
                      ("layer", "unit", "kind", "index", "value"), wrows)
    click.echo(f"trained {trace.steps} steps; outputs in {out}")


def _pde_ensemble_from_config(kind, cfgd, seed):
    init = cfgd.get("init", {})
    if "atoms" in init:
        atoms = {k: np.asarray(v, dtype=float) for k, v in init["atoms"].items()}
        return pde.ParticleEnsemble(kind, atoms)
    J = int(cfgd["J"])
    delta = float(cfgd["delta"])
    dim = int(init.get("dim", 250))
    off = float(init.get("off_diag", 0.0))
    if kind == "piecewise2":
        return pde.init_radial_ensemble(J, dim, delta, seed, off_diag=off)
    if kind == "relu2":
        split = int(init.get("split", max(1, dim // 2)))
        return pde.init_relu_ensemble(J, dim, split, delta, seed,
                                      a0=float(init.get("a0", 1.0)),
                                      b0=float(init.get("b0", 1.0)))
    return pde.init_three_layer_ensemble(J, dim, delta, seed, off_diag=off)


@cli.command("simulate-pde")
@click.option("--kind", type=click.Choice(["piecewise2", "relu2", "joint3"]),
              required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def simulate_pde(ctx, kind, config_path, out):
    """Integrate a particle flow; writes trajectory.csv and particle
    checkpoints."""
    out = _resolve_out(ctx, out)
    cfgd = _read_json(config_path)
    missing = {"delta", "J", "dt", "steps"} - set(cfgd)
    if missing:
        raise ConfigError(f"simulate-pde config missing keys: {sorted(missing)}")
    xi = cfgd.get("xi", {"kind": "constant", "param": 1.0})
    if isinstance(xi, (int, float)):
        xi = {"kind": "constant", "param": float(xi)}
    icfg = pde.IntegratorConfig(dt=float(cfgd["dt"]), steps=int(cfgd["steps"]),
                                xi_kind=xi.get("kind", "constant"),
                                xi_param=float(xi.get("param", 1.0)),
                                grad_mode=cfgd.get("grad_mode", "analytic"),
                                record_every=int(cfgd.get("record_every", 100)),
                                checkpoint_every=cfgd.get("checkpoint_every"),
                                integrator=cfgd.get("integrator", "euler"))
    seed = int(cfgd.get("seed", ctx.obj["seed"]))
    delta = float(cfgd["delta"])
    ens = _pde_ensemble_from_config(kind, cfgd, seed)
    if kind == "relu2":
        ctx_or_delta = delta
    else:
        act1 = by_name(cfgd.get("activation1", "identity"))
        act2 = by_name(cfgd.get("activation2", "piecewise_linear"))
        ctx_or_delta = mf.StaticsContext(delta, act1, act2)
    traj = pde.evolve(ens, ctx_or_delta, icfg)
    out.mkdir(parents=True, exist_ok=True)
    header = list(traj.records[0].keys())
    harness.write_csv(out / "trajectory.csv", header,
                      [tuple(row[k] for k in header) for row in traj.records])
    for t, coords in traj.checkpoints:
        tag = f"{t:.6f}".replace(".", "p")
        names = sorted(coords)
        harness.write_csv(out / f"particles_t{tag}.csv", names,
                          list(zip(*(coords[n] for n in names))))
    click.echo(f"integrated {icfg.steps} steps "
               f"(risk {traj.risks[0]:.6g} -> {traj.final_risk:.6g}, "
               f"{traj.clamp_count} clamps); outputs in {out}")


@cli.command("eval-statics")
@click.option("--delta", type=float, required=True)
@click.option("--activation", default="piecewise_linear", show_default=True)
@click.option("--grid", "grid_path", type=click.Path(exists=True), required=True,
              help="CSV with header r1,r2.")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def eval_statics(ctx, delta, activation, grid_path, out):
    """Tabulate q, v, u_inf and psi_inf on a radius grid."""
    out = _resolve_out(ctx, out)
    act = by_name(activation)
    ctx_s = mf.StaticsContext(delta, identity(), act)
    rows_in = []
    with open(grid_path, encoding="utf-8") as fh:
        header = fh.readline().strip().lower().split(",")
        if header[:2] != ["r1", "r2"]:
            raise ConfigError("grid file must have header r1,r2")
        for line in fh:
            if line.strip():
                parts = line.split(",")
                rows_in.append((float(parts[0]), float(parts[1])))
    if not rows_in:
        raise ConfigError("grid file has no rows")
    rho_atoms = np.unique([r2 for _, r2 in rows_in])
    rho = mf.RadialMeasure(rho_atoms)
    rows = []
    for r1, r2 in rows_in:
        psi = mf.psi_infinity(ctx_s, rho, r1, r2)
        rows.append((r1, r2,
                     mf.q(ctx_s, ctx_s.tau_plus * r1, ctx_s.tau_plus * r2),
                     mf.v(ctx_s, r1, r2),
                     mf.u_infinity(ctx_s, r1, r2, r2),
                     psi.psi, psi.lambda_plus, psi.lambda_minus))
    harness.write_csv(out, ("r1", "r2", "q", "v", "u_inf", "psi_inf",
                            "lambda_plus", "lambda_minus"), rows)
    click.echo(f"wrote {len(rows)} grid rows to {out}")


@cli.command("hoeffding-suite")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def hoeffding_suite_cmd(ctx, config_path, out):
    """Layer-independence suite over trained networks (per-row CSV + JSON)."""
    out = _resolve_out(ctx, out)
    cfgd = _read_json(config_path)
    params = {k: v for k, v in cfgd.items() if k not in ("seed", "name")}
    cfg = harness.ExperimentConfig(name=cfgd.get("name", "hoeffding-suite"),
                                   kind="hoeffding_table", parameters=params,
                                   seed=int(cfgd.get("seed", ctx.obj["seed"])),
                                   output_dir=out)
    record = harness.run_hoeffding_table(cfg, _budget(ctx))
    click.echo(f"suite done; summary in {out / 'summary.json'}")
    if record.interrupted:
        click.echo("note: budget expired before all rows finished")


@cli.command("compare-dist")
@click.option("--a", "path_a", type=click.Path(exists=True), required=True)
@click.option("--b", "path_b", type=click.Path(exists=True), required=True)
@click.option("--metrics", default="w2,bl,kl,l1", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def compare_dist(ctx, path_a, path_b, metrics, out):
    """Distances between two samples (one value per line, header allowed)."""
    out = _resolve_out(ctx, out)

    def read_values(path):
        vals = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                token = line.strip().split(",")[0]
                if not token:
                    continue
                try:
                    vals.append(float(token))
                except ValueError:
                    continue  # header line
        if not vals:
            raise ConfigError(f"no numeric values in {path}")
        return st.EmpiricalMeasure1D(np.asarray(vals))

    mu, nu = read_values(path_a), read_values(path_b)
    wanted = [m.strip() for m in metrics.split(",") if m.strip()]
    known = {"w2", "bl", "kl", "l1"}
    bad = set(wanted) - known
    if bad:
        raise ConfigError(f"unknown metrics: {sorted(bad)}; known: {sorted(known)}")
    results = {}
    if "w2" in wanted:
        results["w2"] = st.wasserstein2_1d(mu, nu)
    if "bl" in wanted:
        results["bl"] = st.bounded_lipschitz_distance(mu, nu)
    if "kl" in wanted or "l1" in wanted:
        kl, l1 = st.kl_and_l1(mu, nu)
        if "kl" in wanted:
            results["kl"] = kl
        if "l1" in wanted:
            results["l1"] = l1
    harness.write_csv(out, ("metric", "value"),
                      [(k, results[k]) for k in wanted])
    click.echo(", ".join(f"{k}={results[k]:.6g}" for k in wanted))


@cli.group()
def experiment():
    """Config-driven experiments (see harness.EXPERIMENT_KINDS)."""


@experiment.command("run")
@click.argument("config_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None,
              help="Override the config's output_dir.")
@click.pass_context
def experiment_run(ctx, config_path, out):
    cfg = harness.load_config(config_path, out_override=out or ctx.obj.get("out"))
    record = harness.run_experiment(cfg, _budget(ctx))
    click.echo(f"run record: {cfg.output_dir / 'run.json'}")
    if record.interrupted:
        click.echo("note: budget expired; partial results checkpointed")


@cli.command("report")
@click.argument("run_dirs", nargs=-1, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def report(ctx, run_dirs, out):
    """Combine run records into a markdown + HTML report with inline plots."""
    out = _resolve_out(ctx, out)
    if not run_dirs:
        raise ConfigError("report needs at least one run directory")
    records = [harness.load_record(Path(d)) for d in run_dirs]
    path = harness.emit_report(records, out)
    click.echo(f"report written to {path}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        return 2
    except NumericError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return 3
    except MflabError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 130


if __name__ == "__main__":
    sys.exit(main())
