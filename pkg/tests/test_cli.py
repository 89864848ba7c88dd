import json

import numpy as np
import pytest

from mflab.cli import main


def test_exit_codes(tmp_path):
    # config error: missing output path
    assert main(["gen-data", "--delta", "0.5", "--dim", "3", "--count", "5"]) == 2
    # config error: bad value
    assert main(["gen-data", "--delta", "1.5", "--dim", "3", "--count", "5",
                 "--out", str(tmp_path / "x.csv")]) == 2
    # numeric failure: covariance not positive definite
    assert main(["gen-data", "--delta", "0.1", "--dim", "5", "--count", "5",
                 "--off-diag", "10.0", "--out", str(tmp_path / "y.csv")]) == 3
    # usage error
    assert main(["no-such-command"]) == 2


def test_gen_data_reproducible(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path in (a, b):
        rc = main(["gen-data", "--delta", "0.5", "--dim", "4", "--count", "50",
                   "--seed", "11", "--out", str(path)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_train_sgd_cli(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "delta": 0.5, "dim": 8, "layers": [10, 10], "activation": "relu",
        "epsilon": 1e-3, "xi": 1.0, "steps": 50, "seed": 2,
        "snapshot_every": 25}))
    out = tmp_path / "run"
    assert main(["train-sgd", "--config", str(cfg), "--out", str(out)]) == 0
    trace = (out / "trace.csv").read_text().strip().split("\n")
    assert trace[0].startswith("step,risk_estimate,layer1_norm_q10")
    assert len(trace) == 4  # header + steps 0, 25, 50
    weights = (out / "weights_final.csv").read_text()
    assert weights.startswith("layer,unit,kind,index,value")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"delta": 0.5}))
    assert main(["train-sgd", "--config", str(bad), "--out", str(out)]) == 2


def test_simulate_pde_cli(tmp_path):
    cfg = tmp_path / "pde.json"
    cfg.write_text(json.dumps({
        "delta": 0.8, "J": 20, "dt": 1e-4, "steps": 100, "xi": 1.0,
        "seed": 4, "init": {"dim": 50}, "record_every": 50,
        "checkpoint_every": 50}))
    out = tmp_path / "pde_out"
    assert main(["simulate-pde", "--kind", "joint3", "--config", str(cfg),
                 "--out", str(out)]) == 0
    rows = (out / "trajectory.csv").read_text().strip().split("\n")
    assert rows[0].split(",")[:4] == ["t", "risk", "lambda_plus", "lambda_minus"]
    particles = sorted(out.glob("particles_t*.csv"))
    assert len(particles) >= 2
    header = particles[0].read_text().split("\n")[0]
    assert header == "r1,r2"


def test_eval_statics_cli(tmp_path):
    grid = tmp_path / "grid.csv"
    grid.write_text("r1,r2\n0.5,0.5\n1.0,1.0\n")
    out = tmp_path / "statics.csv"
    assert main(["eval-statics", "--delta", "0.8", "--grid", str(grid),
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "r1,r2,q,v,u_inf,psi_inf,lambda_plus,lambda_minus"
    assert len(lines) == 3
    bad = tmp_path / "bad_grid.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["eval-statics", "--delta", "0.8", "--grid", str(bad),
                 "--out", str(out)]) == 2


def test_compare_dist_cli(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    rng = np.random.default_rng(0)
    a.write_text("x\n" + "\n".join(str(v) for v in rng.normal(size=50)))
    b.write_text("x\n" + "\n".join(str(v) for v in rng.normal(size=60)))
    out = tmp_path / "d.csv"
    assert main(["compare-dist", "--a", str(a), "--b", str(b),
                 "--metrics", "w2,bl,kl,l1", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "metric,value" and len(lines) == 5
    assert main(["compare-dist", "--a", str(a), "--b", str(b),
                 "--metrics", "w2,zz", "--out", str(out)]) == 2


def test_experiment_and_report_cli(tmp_path):
    cfg = tmp_path / "exp.json"
    out = tmp_path / "expdir"
    cfg.write_text(json.dumps({
        "name": "grid", "kind": "statics_grid", "seed": 3,
        "output_dir": str(out), "parameters": {"points": 3, "r_max": 1.0}}))
    assert main(["experiment", "run", str(cfg)]) == 0
    assert (out / "run.json").exists()
    rep = tmp_path / "report"
    assert main(["report", str(out), "--out", str(rep)]) == 0
    assert (rep / "report.md").exists() and (rep / "report.html").exists()
    # invalid experiment config -> exit 2, no outputs
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "name": "g", "kind": "statics_grid", "seed": 3,
        "output_dir": str(tmp_path / "never"), "parameters": {"points": -3}}))
    assert main(["experiment", "run", str(bad)]) == 2
    assert not (tmp_path / "never").exists()


def test_hoeffding_suite_cli(tmp_path):
    cfg = tmp_path / "suite.json"
    cfg.write_text(json.dumps({
        "rows": [[100, 0.01, 6, 6]], "replicates": 2, "perm_count": 99,
        "seed": 7}))
    out = tmp_path / "suite_out"
    assert main(["hoeffding-suite", "--config", str(cfg), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary[0]["row"]["n_samples"] == 100
