import numpy as np
import pytest

from mflab import activations as act
from mflab import network_sgd as ns
from mflab import synth_data as sd
from mflab.errors import ConfigError


def _single_unit_relu(a=1.0, b=0.0, w=None, dim=3):
    w = np.zeros(dim) if w is None else np.asarray(w, float)
    layer = ns.LayerParams(w[None, :], np.array([a]), np.array([b]), act.relu())
    return ns.NetworkParams(layer)


def test_predict_zero_scales(rng, pwl):
    layer = ns.LayerParams(rng.normal(size=(8, 4)), np.zeros(8), rng.normal(size=8),
                           act.relu())
    net = ns.NetworkParams(layer)
    for _ in range(5):
        assert ns.predict(net, rng.normal(size=4)) == 0.0


def test_predict_single_relu_unit():
    net = _single_unit_relu(a=1.0, b=0.0, w=[1.0, 0.0, 0.0])
    assert ns.predict(net, np.array([2.0, 0.0, 0.0])) == 2.0


def test_predict_piecewise_interpolation(pwl):
    w = np.array([0.5, 0.5])
    layer = ns.LayerParams(w[None, :], np.array([1.0]), np.array([0.0]), pwl)
    net = ns.NetworkParams(layer)
    x = np.array([1.0, 1.0])  # <w, x> = 1.0
    assert ns.predict(net, x) == pytest.approx(2.5, abs=1e-15)


def test_predict_unit_permutation_invariance(rng):
    layer = ns.LayerParams(rng.normal(size=(64, 6)), rng.normal(size=64),
                           rng.normal(size=64), act.relu())
    net = ns.NetworkParams(layer)
    x = rng.normal(size=6)
    base = ns.predict(net, x)
    for _ in range(10):
        perm = rng.permutation(64)
        shuffled = ns.NetworkParams(ns.LayerParams(
            layer.W[perm], layer.a[perm], layer.b[perm], act.relu()))
        assert ns.predict(shuffled, x) == base  # exact, order-free sum


def test_finite_risk_trivial_cases(rng):
    net = _single_unit_relu(a=0.0)
    X = rng.normal(size=(20, 3))
    y = rng.normal(size=20)
    # predictor identically 0 -> risk is mean of y^2
    assert ns.finite_risk(net, X, y) == pytest.approx(np.mean(y ** 2), rel=1e-15)
    # perfect predictor on constant data
    net2 = _single_unit_relu(a=1.0, b=1.0, w=[0.0, 0.0, 0.0])
    yc = np.ones(20)
    assert ns.finite_risk(net2, X, yc) == 0.0
    with pytest.raises(ConfigError):
        ns.finite_risk(net, np.empty((0, 3)), np.empty(0))


def test_risk_decomposition_identity(rng, pwl):
    l1 = ns.LayerParams(rng.normal(size=(5, 4)), rng.normal(size=5),
                        rng.normal(size=5), pwl)
    l2 = ns.LayerParams(rng.normal(size=(6, 5)), rng.normal(size=6),
                        rng.normal(size=6), pwl)
    net = ns.NetworkParams(l1, l2)
    X = rng.normal(size=(10, 4))
    y = rng.normal(size=10)
    r_sharp, v_hat, u_hat = ns.finite_risk_decomposition(net, X, y)
    n2 = 6
    recon = r_sharp + 2.0 / n2 * v_hat.sum() + u_hat.sum() / n2 ** 2
    assert ns.finite_risk(net, X, y) == pytest.approx(recon, abs=1e-12)


def test_sgd_step_zero_residual_and_zero_step(rng):
    net = _single_unit_relu(a=1.0, b=1.0, w=[0.2, 0.1, 0.0])
    x = rng.normal(size=3)
    yhat = ns.predict(net, x)
    out = ns.sgd_step(net, x, yhat, 0, ns.StepSchedule(0.5))
    assert out.layer1.W.tobytes() == net.layer1.W.tobytes()
    assert out.layer1.b.tobytes() == net.layer1.b.tobytes()
    out = ns.sgd_step(net, x, yhat + 1.0, 0, ns.StepSchedule(0.5, "constant", 0.0))
    assert out.layer1.W.tobytes() == net.layer1.W.tobytes()


def test_sgd_step_hand_example():
    # single ReLU unit, y=1, yhat=0, a=1, b=0, w=0, x=e1, s_k=0.5:
    # subgradient 1 at the corner gives b <- 1 and w <- e1
    net = _single_unit_relu(a=1.0, b=0.0, w=[0.0, 0.0, 0.0])
    x = np.array([1.0, 0.0, 0.0])
    out = ns.sgd_step(net, x, 1.0, 0, ns.StepSchedule(0.5))
    assert out.layer1.b[0] == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(out.layer1.W[0], x, atol=1e-15)
    # a update: 2*s*resid*h = 2*0.5*1*max(0,0) = 0
    assert out.layer1.a[0] == 1.0


def test_paper_literal_equals_full_backprop_on_two_layer(rng, pwl):
    layer = ns.LayerParams(rng.normal(size=(12, 5)), rng.normal(size=12),
                           rng.normal(size=12), pwl)
    x = rng.normal(size=5)
    a = ns.sgd_step(ns.NetworkParams(layer.copy()), x, 0.7, 3,
                    ns.StepSchedule(0.01), mode=ns.PAPER_LITERAL)
    b = ns.sgd_step(ns.NetworkParams(layer.copy()), x, 0.7, 3,
                    ns.StepSchedule(0.01), mode=ns.FULL_BACKPROP)
    assert a.layer1.W.tobytes() == b.layer1.W.tobytes()
    assert a.layer1.a.tobytes() == b.layer1.a.tobytes()
    assert a.layer1.b.tobytes() == b.layer1.b.tobytes()


def _random_smooth_net(rng, pwl, dim=4, n1=6, n2=5):
    """Random three-layer net and input with all preactivations at least
    1e-3 away from the activation kinks."""
    while True:
        l1 = ns.LayerParams(rng.normal(size=(n1, dim)), rng.normal(size=n1),
                            rng.normal(size=n1), pwl)
        l2 = ns.LayerParams(rng.normal(size=(n2, n1)) * 0.4, rng.normal(size=n2),
                            rng.normal(size=n2), pwl)
        net = ns.NetworkParams(l1, l2)
        x = rng.normal(size=dim)
        pre1 = l1.W @ x + l1.b
        z = l1.a * pwl(pre1)
        pre2 = l2.W @ z + l2.b
        kinks = np.array([0.5, 1.5])
        d1 = np.min(np.abs(pre1[:, None] - kinks[None, :]))
        d2 = np.min(np.abs(pre2[:, None] - kinks[None, :]))
        if min(d1, d2) > 1e-3:
            return net, x


def test_full_backprop_gradient_matches_finite_differences(rng, pwl):
    h = 1e-6
    for _ in range(100):
        net, x = _random_smooth_net(rng, pwl)
        y = float(rng.normal())
        grad = ns.loss_gradient(net, x, y)
        blocks = [("W1", net.layer1.W, grad.W1), ("a1", net.layer1.a, grad.a1),
                  ("b1", net.layer1.b, grad.b1), ("W2", net.layer2.W, grad.W2),
                  ("a2", net.layer2.a, grad.a2), ("b2", net.layer2.b, grad.b2)]
        num = 0.0
        den = 0.0
        for _, arr, g in blocks:
            flat = arr.ravel()
            gf = np.empty(flat.size)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = old + h
                up = (y - ns.predict(net, x)) ** 2
                flat[i] = old - h
                dn = (y - ns.predict(net, x)) ** 2
                flat[i] = old
                gf[i] = (up - dn) / (2 * h)
            num += float(np.sum((np.asarray(g).ravel() - gf) ** 2))
            den += float(np.sum(gf ** 2))
        assert np.sqrt(num) <= 1e-5 * max(np.sqrt(den), 1e-8)


def test_train_one_pass_zero_steps(rng, pwl):
    net = _single_unit_relu()
    spec = sd.isotropic_spec(0.5, 3)
    trace = ns.train_one_pass(net, sd.MixtureStream(spec, 0),
                              ns.StepSchedule(1e-3), steps=0)
    assert len(trace.snapshots) == 1 and trace.snapshots[0].step == 0
    assert trace.steps == 0


def test_train_one_pass_reduces_risk_median_over_seeds(pwl):
    # smoke/monotonicity oracle: N=200 units, d=40, 1e4 steps, eps=2e-4
    spec = sd.isotropic_spec(0.8, 40)
    diffs = []
    for seed in range(5):
        root = np.random.SeedSequence(seed)
        s_net, s_train, s_eval = root.spawn(3)
        rng = sd.rng_from_seed(s_net)
        net = ns.init_params(rng, 40, 200, activation1=pwl, delta=0.8)
        X_eval, y_eval = sd.sample_isotropic(spec, s_eval, 10_000)
        risk0 = ns.finite_risk(net, X_eval, y_eval)
        trace = ns.train_one_pass(net, sd.MixtureStream(spec, s_train),
                                  ns.StepSchedule(2e-4), steps=10_000)
        risk1 = ns.finite_risk(trace.final_params, X_eval, y_eval)
        diffs.append(risk1 - risk0)
    assert np.median(diffs) < 0


def test_init_params_matches_iid_hypotheses(pwl):
    rng = sd.rng_from_seed(5)
    net = ns.init_params(rng, 30, 400, activation1=pwl, delta=0.8)
    # i.i.d. per unit: empirical weight variance close to delta^2/d
    var = net.layer1.W.var()
    assert var == pytest.approx(0.8 ** 2 / 30, rel=0.05)
    assert np.all(net.layer1.a == 1.0) and np.all(net.layer1.b == 1.0)
    rng2 = sd.rng_from_seed(5)
    net2 = ns.init_params(rng2, 30, 400, activation1=pwl, delta=0.8)
    assert net.layer1.W.tobytes() == net2.layer1.W.tobytes()


def test_schedule_validation_and_power_floor():
    with pytest.raises(ConfigError):
        ns.StepSchedule(0.0)
    with pytest.raises(ConfigError):
        ns.StepSchedule(1e-3, "power", -1.5)
    sch = ns.StepSchedule(1e-2, "power", -0.25)
    assert sch.step_size(0) == pytest.approx(1e-2 * (1e-2) ** -0.25)
    assert sch.step_size(100) == pytest.approx(1e-2 * 1.0 ** -0.25)


def test_snapshot_cadence_and_norm_split(rng, pwl):
    spec = sd.isotropic_spec(0.5, 10)
    net = ns.init_params(sd.rng_from_seed(1), 10, 16, activation1=act.relu(),
                         delta=0.5)
    trace = ns.train_one_pass(net, sd.MixtureStream(spec, 2),
                              ns.StepSchedule(1e-3), steps=100,
                              snapshot_every=25, norm_split=4)
    assert [s.step for s in trace.snapshots] == [0, 25, 50, 75, 100]
    summ = trace.snapshots[-1].layers[0]
    assert np.allclose(np.hypot(summ["r1"], summ["r2"]), summ["norms"])


def test_mean_field_scaling_flag(rng, pwl):
    l1 = ns.LayerParams(rng.normal(size=(4, 3)), np.ones(4), np.zeros(4), act.relu())
    l2 = ns.LayerParams(rng.normal(size=(2, 4)), np.ones(2), np.zeros(2), act.relu())
    x = rng.normal(size=3)
    plain = ns.NetworkParams(l1.copy(), l2.copy(), mean_field_scaling=False)
    scaled = ns.NetworkParams(l1.copy(), l2.copy(), mean_field_scaling=True)
    z = plain.layer1.outputs(x[None, :])[0]
    pre_plain = l2.W @ z
    pre_scaled = l2.W @ (z / 4)
    got_plain = ns.output_unit_values(plain, x[None, :])[0]
    got_scaled = ns.output_unit_values(scaled, x[None, :])[0]
    assert np.allclose(got_plain, np.maximum(pre_plain, 0.0))
    assert np.allclose(got_scaled, np.maximum(pre_scaled, 0.0))
