"""Finite-width predictors and the one-pass SGD iteration.

A network here is one or two hidden layers of averaging units: unit ``i`` of
a layer maps its input ``z`` to ``a_i * sigma(<w_i, z> + b_i)`` (layers may
also run "weights-only", dropping ``a`` and ``b``), and the prediction is
the mean of the last hidden layer's unit outputs.

Updates follow the width-scaled convention: each unit moves by
``2 * s_k * (y - yhat)`` times the gradient of its own layer's unit output,
with no ``1/N`` factor. For the first hidden layer two variants exist:
``PAPER_LITERAL`` uses the unit's own activation gradient with no chain
factor through the second layer, ``FULL_BACKPROP`` includes the chain rule.
The two coincide exactly on a network with a single hidden layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import islice
from typing import Optional

import numpy as np

from . import _kernels
from .activations import PiecewiseAffine
from .errors import ConfigError

PAPER_LITERAL = "paper_literal"
FULL_BACKPROP = "full_backprop"
_MODES = {PAPER_LITERAL: 0, FULL_BACKPROP: 1}


@dataclass(frozen=True)
class StepSchedule:
    """Step size ``s_k = epsilon * xi(k * epsilon)``.

    ``xi`` is either the constant ``param`` or the power law
    ``t ** param`` with exponent in [-1, 0]; the power law is floored at
    ``t = epsilon`` so the k = 0 step stays finite.
    """

    epsilon: float
    kind: str = "constant"
    param: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.kind == "constant":
            if self.param < 0:
                raise ConfigError("constant xi must be nonnegative")
        elif self.kind == "power":
            if not -1.0 <= self.param <= 0.0:
                raise ConfigError("power-law exponent must lie in [-1, 0]")
        else:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")

    def xi(self, t: float) -> float:
        if self.kind == "constant":
            return self.param
        return max(t, self.epsilon) ** self.param

    def step_size(self, k: int) -> float:
        return self.epsilon * self.xi(k * self.epsilon)

    def _encoded(self):
        kind = 0 if self.kind == "constant" else 1
        return kind, float(self.param), float(self.epsilon)


@dataclass(frozen=True)
class UnitParams:
    """Per-unit view (output scale, bias, incoming weights)."""

    a: Optional[float]
    b: Optional[float]
    w: np.ndarray


@dataclass
class LayerParams:
    W: np.ndarray
    a: Optional[np.ndarray]
    b: Optional[np.ndarray]
    activation: PiecewiseAffine

    def __post_init__(self):
        self.W = np.ascontiguousarray(self.W, dtype=float)
        if self.W.ndim != 2:
            raise ConfigError("layer weights must be (units, fan_in)")
        if (self.a is None) != (self.b is None):
            raise ConfigError("a and b must be present together or absent together")
        if self.a is not None:
            self.a = np.ascontiguousarray(self.a, dtype=float)
            self.b = np.ascontiguousarray(self.b, dtype=float)
            if self.a.shape != (self.W.shape[0],) or self.b.shape != (self.W.shape[0],):
                raise ConfigError("a and b must have one entry per unit")

    @property
    def units(self) -> int:
        return self.W.shape[0]

    @property
    def fan_in(self) -> int:
        return self.W.shape[1]

    @property
    def has_ab(self) -> bool:
        return self.a is not None

    def unit(self, i: int) -> UnitParams:
        return UnitParams(a=None if self.a is None else float(self.a[i]),
                          b=None if self.b is None else float(self.b[i]),
                          w=self.W[i].copy())

    def outputs(self, Z: np.ndarray) -> np.ndarray:
        """Unit outputs for a batch of inputs, shape (n, units)."""
        pre = Z @ self.W.T
        if self.has_ab:
            pre = pre + self.b
        h = self.activation(pre)
        return self.a * h if self.has_ab else h

    def copy(self) -> "LayerParams":
        return LayerParams(self.W.copy(),
                           None if self.a is None else self.a.copy(),
                           None if self.b is None else self.b.copy(),
                           self.activation)


@dataclass
class NetworkParams:
    """One or two hidden layers; ``layer2 is None`` for the two-layer net."""

    layer1: LayerParams
    layer2: Optional[LayerParams] = None
    mean_field_scaling: bool = False

    def __post_init__(self):
        if self.layer2 is not None and self.layer2.fan_in != self.layer1.units:
            raise ConfigError("layer2 fan_in must equal layer1 unit count")

    @property
    def dim(self) -> int:
        return self.layer1.fan_in

    @property
    def output_layer(self) -> LayerParams:
        return self.layer2 if self.layer2 is not None else self.layer1

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.layer1.copy(),
                             None if self.layer2 is None else self.layer2.copy(),
                             self.mean_field_scaling)


def init_params(rng: np.random.Generator, dim: int, n1: int, n2: int = 0,
                activation1: PiecewiseAffine = None,
                activation2: PiecewiseAffine = None,
                w_std: float = None, a0: float = 1.0, b0: float = 1.0,
                has_ab: bool = True, mean_field_scaling: bool = False,
                delta: float = None) -> NetworkParams:
    """i.i.d. per-unit initialization: ``w ~ N(0, w_std^2 I)``, ``a = a0``,
    ``b = b0``. ``w_std`` defaults to ``delta / sqrt(fan_in)`` when ``delta``
    is given (the stock covariance of the experiments here)."""
    if activation1 is None:
        raise ConfigError("activation1 is required")
    if n2 > 0 and activation2 is None:
        raise ConfigError("activation2 is required for a second hidden layer")

    def std(fan_in):
        if w_std is not None:
            return w_std
        if delta is not None:
            return delta / math.sqrt(fan_in)
        return 1.0 / math.sqrt(fan_in)

    def make(fan_in, n, act):
        W = rng.normal(0.0, std(fan_in), (n, fan_in))
        if has_ab:
            return LayerParams(W, np.full(n, float(a0)), np.full(n, float(b0)), act)
        return LayerParams(W, None, None, act)

    layer1 = make(dim, n1, activation1)
    layer2 = make(n1, n2, activation2) if n2 > 0 else None
    return NetworkParams(layer1, layer2, mean_field_scaling)


# ---------------------------------------------------------------------------
# forward pass and risks
# ---------------------------------------------------------------------------

def _hidden_values(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    z = params.layer1.outputs(X)
    if params.mean_field_scaling:
        z = z / params.layer1.units
    return z


def output_unit_values(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    """Outputs of the units feeding the prediction mean, shape (n, N_out)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.dim:
        raise ConfigError(f"feature dimension {X.shape[1]} != network dim {params.dim}")
    if params.layer2 is None:
        return params.layer1.outputs(X)
    return params.layer2.outputs(_hidden_values(params, X))


def predict(params: NetworkParams, x: np.ndarray) -> float:
    """Prediction for one feature vector: the exact mean of the output
    units (order-independent sum, so unit permutations change nothing)."""
    outs = output_unit_values(params, np.asarray(x, dtype=float)[None, :])[0]
    return math.fsum(outs) / outs.size


def predict_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    outs = output_unit_values(params, X)
    return outs.mean(axis=1)


def finite_risk(params: NetworkParams, X: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error over the sample."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise ConfigError("finite_risk needs a nonempty sample")
    return float(np.mean((y - predict_batch(params, X)) ** 2))


def finite_risk_decomposition(params: NetworkParams, X: np.ndarray, y: np.ndarray):
    """``(R_sharp, v_hat, u_hat)`` with the exact algebraic identity
    ``risk = R_sharp + 2 mean(v_hat) + mean(u_hat)`` over the same sample:
    ``R_sharp = mean(y^2)``, ``v_hat[i] = -mean(y * out_i)``,
    ``u_hat[i,j] = mean(out_i * out_j)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    outs = output_unit_values(params, X)
    n = y.size
    r_sharp = float(np.mean(y ** 2))
    v_hat = -(y @ outs) / n
    u_hat = outs.T @ outs / n
    return r_sharp, v_hat, u_hat


# ---------------------------------------------------------------------------
# gradients and SGD
# ---------------------------------------------------------------------------

@dataclass
class LossGradient:
    """Exact gradient of the squared loss ``(y - yhat)^2`` in parameters."""

    W1: np.ndarray
    a1: Optional[np.ndarray]
    b1: Optional[np.ndarray]
    W2: Optional[np.ndarray] = None
    a2: Optional[np.ndarray] = None
    b2: Optional[np.ndarray] = None


def loss_gradient(params: NetworkParams, x: np.ndarray, y: float) -> LossGradient:
    """Full-backpropagation gradient of the per-sample squared loss,
    including every averaging factor (reference for finite-difference
    checks; SGD directions are width-scaled multiples of blocks of this)."""
    x = np.asarray(x, dtype=float)
    l1, l2 = params.layer1, params.layer2
    pre1 = l1.W @ x + (l1.b if l1.has_ab else 0.0)
    h1 = l1.activation(pre1)
    d1 = _act_deriv(l1.activation, pre1)
    if l2 is None:
        n_out = l1.units
        yhat = float(np.mean((l1.a * h1) if l1.has_ab else h1))
        g = -2.0 * (y - yhat) / n_out
        if l1.has_ab:
            return LossGradient(W1=g * (l1.a * d1)[:, None] * x[None, :],
                                a1=g * h1, b1=g * l1.a * d1)
        return LossGradient(W1=g * d1[:, None] * x[None, :], a1=None, b1=None)
    z = (l1.a * h1) if l1.has_ab else h1
    scale1 = 1.0 / l1.units if params.mean_field_scaling else 1.0
    z = z * scale1
    pre2 = l2.W @ z + (l2.b if l2.has_ab else 0.0)
    h2 = l2.activation(pre2)
    d2 = _act_deriv(l2.activation, pre2)
    a2 = l2.a if l2.has_ab else np.ones(l2.units)
    yhat = float(np.mean(a2 * h2))
    g = -2.0 * (y - yhat) / l2.units
    gW2 = g * (a2 * d2)[:, None] * z[None, :]
    ga2 = g * h2 if l2.has_ab else None
    gb2 = g * a2 * d2 if l2.has_ab else None
    chain = (a2 * d2) @ l2.W * scale1  # dyhat/dz_i times n2
    a1 = l1.a if l1.has_ab else np.ones(l1.units)
    gW1 = g * (chain * a1 * d1)[:, None] * x[None, :]
    ga1 = g * chain * h1 if l1.has_ab else None
    gb1 = g * chain * a1 * d1 if l1.has_ab else None
    return LossGradient(W1=gW1, a1=ga1, b1=gb1, W2=gW2, a2=ga2, b2=gb2)


def _act_deriv(act: PiecewiseAffine, pre: np.ndarray) -> np.ndarray:
    """Segment slopes with the kernels' saturation convention at exact knots."""
    return np.asarray([_kernels._pw_slope_conv(act.knots, act.seg_b, float(p))
                       for p in np.atleast_1d(pre)])


def _layer_kernel_args(layer: LayerParams):
    act = layer.activation
    n = layer.units
    a = layer.a if layer.has_ab else np.ones(n)
    b = layer.b if layer.has_ab else np.zeros(n)
    return a, b, int(layer.has_ab), act.knots, act.seg_a, act.seg_b


def _run_chunk(params: NetworkParams, X: np.ndarray, y: np.ndarray, k0: int,
               schedule: StepSchedule, mode: str) -> None:
    """Apply one SGD step per sample, mutating ``params`` in place."""
    xi_kind, xi_param, xi_floor = schedule._encoded()
    l1 = params.layer1
    a1v, b1v, has1, k1, sa1, sb1 = _layer_kernel_args(l1)
    if params.layer2 is None:
        _kernels.sgd_two_layer_chunk(l1.W, a1v, b1v, has1, k1, sa1, sb1,
                                     X, y, k0, schedule.epsilon,
                                     xi_kind, xi_param, xi_floor)
    else:
        l2 = params.layer2
        a2v, b2v, has2, k2, sa2, sb2 = _layer_kernel_args(l2)
        _kernels.sgd_three_layer_chunk(
            l1.W, a1v, b1v, l2.W, a2v, b2v, has1, has2,
            k1, sa1, sb1, k2, sa2, sb2,
            int(params.mean_field_scaling), _MODES[mode],
            X, y, k0, schedule.epsilon, xi_kind, xi_param, xi_floor)


def sgd_step(params: NetworkParams, x: np.ndarray, y: float, k: int,
             schedule: StepSchedule, mode: str = FULL_BACKPROP) -> NetworkParams:
    """One width-scaled SGD update on a fresh sample; returns new params."""
    if mode not in _MODES:
        raise ConfigError(f"unknown gradient mode {mode!r}")
    out = params.copy()
    X = np.ascontiguousarray(np.asarray(x, dtype=float)[None, :])
    yv = np.asarray([y], dtype=float)
    if X.shape[1] != params.dim:
        raise ConfigError("sample dimension mismatch")
    _run_chunk(out, X, yv, k, schedule, mode)
    return out


@dataclass
class Snapshot:
    step: int
    t: float
    layers: list
    risk: Optional[float] = None


@dataclass
class TrainingTrace:
    snapshots: list = field(default_factory=list)
    final_params: Optional[NetworkParams] = None
    steps: int = 0

    def series(self, key, layer=0):
        return [snap.layers[layer][key] for snap in self.snapshots]


def _layer_summary(layer: LayerParams, norm_split: Optional[int]):
    out = {"norms": np.linalg.norm(layer.W, axis=1)}
    if layer.has_ab:
        out["a"] = layer.a.copy()
        out["b"] = layer.b.copy()
    if norm_split is not None and 0 < norm_split < layer.fan_in:
        out["r1"] = np.linalg.norm(layer.W[:, :norm_split], axis=1)
        out["r2"] = np.linalg.norm(layer.W[:, norm_split:], axis=1)
    return out


def _snapshot(params: NetworkParams, step: int, schedule: StepSchedule,
              eval_data, norm_split) -> Snapshot:
    layers = [_layer_summary(params.layer1, norm_split)]
    if params.layer2 is not None:
        layers.append(_layer_summary(params.layer2, None))
    risk = None
    if eval_data is not None:
        risk = finite_risk(params, eval_data[0], eval_data[1])
    return Snapshot(step=step, t=step * schedule.epsilon, layers=layers, risk=risk)


def train_one_pass(init: NetworkParams, stream, schedule: StepSchedule,
                   steps: int, mode: str = FULL_BACKPROP,
                   snapshot_every: int = 0, eval_data=None,
                   norm_split: Optional[int] = None,
                   chunk: int = 2048) -> TrainingTrace:
    """Run ``steps`` one-pass SGD updates, each on a fresh sample from the
    stream (never revisited). Snapshots record per-layer weight norms and
    scale/bias copies every ``snapshot_every`` steps (0 = ends only).

    ``stream`` is either an iterator of ``(x, y)`` pairs or an object with
    ``next_chunk(k) -> (X, y)``.
    """
    if mode not in _MODES:
        raise ConfigError(f"unknown gradient mode {mode!r}")
    if steps < 0:
        raise ConfigError("steps must be nonnegative")
    params = init.copy()
    trace = TrainingTrace()
    trace.snapshots.append(_snapshot(params, 0, schedule, eval_data, norm_split))
    done = 0
    next_snap = snapshot_every if snapshot_every > 0 else steps
    while done < steps:
        take = min(chunk, steps - done, max(1, next_snap - done))
        X, y = _draw(stream, take, params.dim)
        if X.shape[0] == 0:
            break  # stream exhausted
        _run_chunk(params, X, y, done, schedule, mode)
        done += X.shape[0]
        if done >= next_snap and done < steps:
            trace.snapshots.append(_snapshot(params, done, schedule, eval_data, norm_split))
            while next_snap <= done:
                next_snap += snapshot_every if snapshot_every > 0 else steps + 1
        if X.shape[0] < take:
            break
    if steps > 0 and (not trace.snapshots or trace.snapshots[-1].step != done):
        trace.snapshots.append(_snapshot(params, done, schedule, eval_data, norm_split))
    trace.final_params = params
    trace.steps = done
    return trace


def _draw(stream, k: int, dim: int):
    if hasattr(stream, "next_chunk"):
        X, y = stream.next_chunk(k)
        return (np.ascontiguousarray(X, dtype=float),
                np.ascontiguousarray(y, dtype=float))
    xs, ys = [], []
    for xv, yv in islice(stream, k):
        xs.append(np.asarray(xv, dtype=float))
        ys.append(float(yv))
    if not xs:
        return np.empty((0, dim)), np.empty(0)
    return np.ascontiguousarray(xs, dtype=float), np.asarray(ys, dtype=float)
