"""Independence testing and distances between 1-d empirical measures.

The centrepiece is the rank-based D statistic for bivariate independence,

    D = (A - 2(n-2) B + (n-2)(n-3) C) / (n(n-1)(n-2)(n-3)(n-4)),

with A, B, C built from the dominance counts

    a_a = #{b : X_b <= X_a} - 1,   b_a likewise for Y,
    c_a = #{b : X_b <= X_a and Y_b <= Y_a} - 1,

ties included (the indicator is >= 0). Counts come from an O(n log n)
Fenwick sweep (numba) or an O(n^2) broadcast fallback; for n <= 1500 the
A/B/C sums are exact 64-bit integers. p-values are primarily by seeded
permutation; a small-sample critical-value table (null distribution
simulated once offline, see tools/gen_null_table.py) backs the
interpolation method.

The distance toolkit covers the exact 1-d quadratic Wasserstein distance
(monotone rearrangement), a grid-witness lower bound of the bounded
Lipschitz distance, and smoothed-histogram KL / L1.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import lil_matrix

from . import _kernels
from ._compat import thread_count
from ._null_table import ALPHAS as _TABLE_ALPHAS, CRITICAL as _TABLE_CRITICAL
from .errors import ConfigError
from .synth_data import rng_from_seed

_EXACT_INT_MAX_N = 1500  # n^5 must stay inside int64 for the exact sums


def parallel_map(fn, items):
    """Map over independent work items on the shared thread pool; kernel
    calls release the GIL so this scales for replicate loops."""
    items = list(items)
    n = thread_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# independence statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Permutation:
    """Seeded permutation p-value: (1 + #{D* >= D}) / (1 + count)."""

    count: int = 999
    seed: int = 0


@dataclass(frozen=True)
class TableInterpolation:
    """Linear interpolation in the embedded small-sample critical-value
    table (continuous data, n <= 50); p clamped to [0.001, 0.5]."""


@dataclass
class HoeffdingResult:
    """D statistic with its intermediates.

    For continuous (tie-free) data D lies in [-1/60, 1/30]; ties can push it
    outside, which is not an error. ``a``, ``b``, ``c`` are the per-point
    dominance counts in input order; ``A``, ``B``, ``C`` are exact integers
    for n <= 1500.
    """

    d_stat: float
    n: int
    A: float
    B: float
    C: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    p_value: Optional[float] = None
    p_method: Optional[object] = None
    x: np.ndarray = field(default=None, repr=False)
    y: np.ndarray = field(default=None, repr=False)


def _prepare(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ConfigError("x and y must be 1-d arrays of equal length")
    n = x.size
    if n < 5:
        raise ConfigError("the D statistic needs n >= 5")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ConfigError("samples must be finite")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    starts = np.flatnonzero(np.concatenate(([True], xs[1:] != xs[:-1])))
    group_starts = np.concatenate((starts, [n])).astype(np.int64)
    a_cnt = np.searchsorted(xs, xs, side="right").astype(np.int64)  # x order
    uy = np.unique(y)
    yr = (np.searchsorted(uy, y) + 1).astype(np.int64)
    ysort = np.sort(y)
    b_of_rank = np.zeros(uy.size + 1, dtype=np.int64)
    b_of_rank[1:] = np.searchsorted(ysort, uy, side="right")
    return x, y, n, order, group_starts, a_cnt, yr, b_of_rank, uy.size


def hoeffding_d(x, y) -> HoeffdingResult:
    """The D statistic (no p-value); exact integer arithmetic for the
    A/B/C sums whenever n <= 1500."""
    x, y, n, order, group_starts, a_cnt, yr, b_of_rank, m = _prepare(x, y)
    c_cnt_x = np.asarray(_kernels.c_counts(group_starts, yr[order], m))
    inv = np.empty(n, dtype=np.int64)
    inv[order] = np.arange(n)
    a_all = a_cnt[inv] - 1          # input order
    b_all = b_of_rank[yr] - 1
    c_all = c_cnt_x[inv] - 1
    if n <= _EXACT_INT_MAX_N:
        aa, bb, cc = a_all, b_all, c_all
        A = int(np.sum(aa * (aa - 1) * bb * (bb - 1)))
        B = int(np.sum((aa - 1) * (bb - 1) * cc))
        C = int(np.sum(cc * (cc - 1)))
        num = A - 2 * (n - 2) * B + (n - 2) * (n - 3) * C
        den = n * (n - 1) * (n - 2) * (n - 3) * (n - 4)
        d = num / den
    else:
        aa = a_all.astype(float)
        bb = b_all.astype(float)
        cc = c_all.astype(float)
        A = float(np.sum(aa * (aa - 1.0) * bb * (bb - 1.0)))
        B = float(np.sum((aa - 1.0) * (bb - 1.0) * cc))
        C = float(np.sum(cc * (cc - 1.0)))
        den = float(n) * (n - 1.0) * (n - 2.0) * (n - 3.0) * (n - 4.0)
        d = (A - 2.0 * (n - 2.0) * B + (n - 2.0) * (n - 3.0) * C) / den
    return HoeffdingResult(d_stat=float(d), n=n, A=float(A), B=float(B),
                           C=float(C), a=a_all, b=b_all, c=c_all, x=x, y=y)


def _perm_d_values(result: HoeffdingResult, count: int, seed: int) -> np.ndarray:
    """D under ``count`` random re-pairings of y, plus the observed D
    recomputed on the same float path (element 0)."""
    x, y = result.x, result.y
    _, _, n, order, group_starts, a_cnt, yr, b_of_rank, m = _prepare(x, y)
    rng = rng_from_seed(seed)
    chunk = max(1, min(count + 1, 4_000_000 // max(n, 1)))
    out = np.empty(count + 1)
    rows = np.empty((chunk, n), dtype=np.int64)
    done = 0
    first = True
    while done < count + 1:
        take = min(chunk, count + 1 - done)
        for i in range(take):
            if first and i == 0:
                rows[0] = yr[order]
                first = False
            else:
                rows[i] = yr[rng.permutation(n)][order]
        out[done:done + take] = _kernels.d_stats_perm(
            a_cnt, b_of_rank, group_starts, rows[:take], m)
        done += take
    return out


def hoeffding_p_value(result: HoeffdingResult, method=None) -> float:
    """p-value for the observed D under independence.

    Permutation (default): seeded re-pairings, add-one estimator, identical
    float path for D and D* so ties behave consistently. Table
    interpolation: small-sample critical values (requires n within the
    table; large n must use permutation).
    """
    if method is None:
        method = Permutation()
    if isinstance(method, Permutation):
        if method.count < 1:
            raise ConfigError("permutation count must be >= 1")
        ds = _perm_d_values(result, method.count, method.seed)
        p = (1.0 + float(np.sum(ds[1:] >= ds[0]))) / (1.0 + method.count)
        return float(p)
    if isinstance(method, TableInterpolation):
        ns = sorted(_TABLE_CRITICAL)
        if result.n < ns[0] or result.n > ns[-1]:
            raise ConfigError(
                f"critical-value table covers n in [{ns[0]}, {ns[-1]}]; "
                "use the permutation method instead")
        row_n = max(k for k in ns if k <= result.n)
        crit = _TABLE_CRITICAL[row_n]  # D at each alpha, alphas descending in p
        alphas = _TABLE_ALPHAS
        d = result.d_stat
        if d <= crit[0]:
            return float(alphas[0])
        if d >= crit[-1]:
            return float(alphas[-1])
        j = int(np.searchsorted(crit, d, side="right")) - 1
        d0, d1 = crit[j], crit[j + 1]
        a0, a1 = alphas[j], alphas[j + 1]
        if d1 == d0:
            return float(a1)
        return float(a0 + (d - d0) * (a1 - a0) / (d1 - d0))
    raise ConfigError(f"unknown p-value method {method!r}")


def hoeffding_test(x, y, method=None) -> HoeffdingResult:
    """Statistic plus p-value in one call."""
    res = hoeffding_d(x, y)
    res.p_value = hoeffding_p_value(res, method)
    res.p_method = method if method is not None else Permutation()
    return res


# ---------------------------------------------------------------------------
# trained-network independence suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Table1Row:
    n_samples: int
    off_diag: float
    nodes: int
    dim: int


@dataclass(frozen=True)
class Table1Config:
    """Row grid and training settings for the layer-independence suite.

    The data spread parameter is not pinned by the protocol this reproduces
    (only the diagonal ``(1+delta)^2`` is); ``delta`` defaults to 0.5 and is
    exposed here and on the CLI. With ``epsilon=None`` the learning rate is
    ``lr_scale / dim``, which keeps the desk-scale one-pass run in the
    mildly-coupled regime across row sizes.
    """

    rows: tuple
    replicates: int = 100
    delta: float = 0.5
    epsilon: Optional[float] = None
    lr_scale: float = 5.0
    mode: str = "full_backprop"
    perm_count: int = 399
    seed: int = 0
    activation: str = "logistic"

    def __post_init__(self):
        if not self.rows:
            raise ConfigError("at least one row is required")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.lr_scale <= 0:
            raise ConfigError("lr_scale must be positive")

    def row_epsilon(self, row: "Table1Row") -> float:
        return self.epsilon if self.epsilon is not None else self.lr_scale / row.dim


@dataclass
class SuiteRowResult:
    row: Table1Row
    mean_p: float
    frac_reject_05: float
    records: list  # (replicate, d_stat, p_value, n_pairs)
    pairing: str = "flattened incoming weights, matched by index up to min length"


def _suite_replicate(row: Table1Row, cfg: Table1Config, seed_seq) -> tuple:
    from . import network_sgd
    from .activations import by_name
    from .synth_data import MixtureStream, correlated_spec

    child = seed_seq.spawn(3)
    spec = correlated_spec(cfg.delta, row.dim, row.off_diag)
    stream = MixtureStream(spec, child[0])
    act = by_name(cfg.activation)
    rng = rng_from_seed(child[1])
    params = network_sgd.init_params(
        rng, row.dim, row.nodes, row.nodes, activation1=act, activation2=act,
        delta=cfg.delta)
    schedule = network_sgd.StepSchedule(epsilon=cfg.row_epsilon(row))
    trace = network_sgd.train_one_pass(params, stream, schedule,
                                       steps=row.n_samples, mode=cfg.mode)
    final = trace.final_params
    w1 = final.layer1.W.ravel()
    w2 = final.layer2.W.ravel()
    n_pairs = min(w1.size, w2.size)
    res = hoeffding_d(w1[:n_pairs], w2[:n_pairs])
    p = hoeffding_p_value(res, Permutation(count=cfg.perm_count,
                                           seed=int(child[2].generate_state(1)[0])))
    return res.d_stat, p, n_pairs


def hoeffding_suite(cfg: Table1Config, budget=None) -> list:
    """Train a fresh two-hidden-layer network per replicate on the
    correlated law, test the two layers' flattened weights for independence,
    and summarize (mean p, rejection fraction at 5%) per row."""
    results = []
    root = np.random.SeedSequence(cfg.seed)
    row_seeds = root.spawn(len(cfg.rows))
    for row, row_seed in zip(cfg.rows, row_seeds):
        rep_seeds = row_seed.spawn(cfg.replicates)

        def work(item):
            idx, ss = item
            try:
                d, p, n_pairs = _suite_replicate(row, cfg, ss)
            except Exception as exc:
                raise type(exc)(f"row {row}, replicate {idx}: {exc}") from exc
            return (idx, d, p, n_pairs)

        todo = list(enumerate(rep_seeds))
        if budget is not None and budget.exceeded:
            break
        records = sorted(parallel_map(work, todo))
        ps = np.asarray([r[2] for r in records])
        results.append(SuiteRowResult(
            row=row, mean_p=float(ps.mean()),
            frac_reject_05=float(np.mean(ps < 0.05)),
            records=records))
    return results


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalMeasure1D:
    """Sorted weighted sample on the line; uniform weights by default."""

    values: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ConfigError("values must be a nonempty 1-d array")
        if self.weights is None:
            w = np.full(vals.size, 1.0 / vals.size)
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != vals.shape or np.any(w < 0):
                raise ConfigError("weights must be nonnegative, one per value")
            total = w.sum()
            if abs(total - 1.0) > 1e-9:
                raise ConfigError("weights must sum to 1")
            w = w / total
        order = np.argsort(vals, kind="stable")
        object.__setattr__(self, "values", vals[order])
        object.__setattr__(self, "weights", w[order])

    @property
    def n(self) -> int:
        return self.values.size


def wasserstein2_1d(mu: EmpiricalMeasure1D, nu: EmpiricalMeasure1D) -> float:
    """Exact quadratic Wasserstein distance in 1-d: monotone rearrangement
    for equal uniform samples, quantile-function integration in general."""
    if mu.n == nu.n and mu.weights[0] == nu.weights[0] \
            and np.all(mu.weights == mu.weights[0]) and np.all(nu.weights == nu.weights[0]):
        diff = mu.values - nu.values
        return float(np.sqrt(np.mean(diff * diff)))
    cx = np.cumsum(mu.weights)
    cy = np.cumsum(nu.weights)
    levels = np.union1d(cx, cy)
    levels = np.clip(levels, 0.0, 1.0)
    lo = np.concatenate(([0.0], levels[:-1]))
    seg = levels - lo
    mid = 0.5 * (levels + lo)
    xi = mu.values[np.minimum(np.searchsorted(cx, mid, side="left"), mu.n - 1)]
    yi = nu.values[np.minimum(np.searchsorted(cy, mid, side="left"), nu.n - 1)]
    return float(np.sqrt(np.sum(seg * (xi - yi) ** 2)))


def bounded_lipschitz_distance(mu: EmpiricalMeasure1D, nu: EmpiricalMeasure1D,
                               witness_grid: int = 512) -> float:
    """Lower bound of the bounded-Lipschitz distance via the best
    piecewise-linear witness on a grid (1-Lipschitz, |f| <= 1).

    The grid is the union of ``witness_grid`` equispaced points and every
    sample value, so sample evaluations are exact and the optimum is a true
    lower bound of ``sup |mu(f) - nu(f)|`` over the witness class.
    """
    if witness_grid < 2:
        raise ConfigError("witness_grid must be >= 2")
    lo = min(mu.values[0], nu.values[0])
    hi = max(mu.values[-1], nu.values[-1])
    if lo == hi:
        return 0.0
    grid = np.union1d(np.linspace(lo, hi, witness_grid),
                      np.concatenate((mu.values, nu.values)))
    K = grid.size
    c = np.zeros(K)
    for meas, sign in ((mu, 1.0), (nu, -1.0)):
        idx = np.searchsorted(grid, meas.values)
        # sample values are grid members by construction
        np.add.at(c, idx, sign * meas.weights)
    h = np.diff(grid)
    A = lil_matrix((2 * (K - 1), K))
    rhs = np.empty(2 * (K - 1))
    for k in range(K - 1):
        A[2 * k, k + 1] = 1.0
        A[2 * k, k] = -1.0
        rhs[2 * k] = h[k]
        A[2 * k + 1, k] = 1.0
        A[2 * k + 1, k + 1] = -1.0
        rhs[2 * k + 1] = h[k]
    res = linprog(-c, A_ub=A.tocsr(), b_ub=rhs, bounds=(-1.0, 1.0),
                  method="highs")
    if not res.success:
        raise ConfigError(f"witness optimization failed: {res.message}")
    return float(max(0.0, -res.fun))


@dataclass(frozen=True)
class HistogramSpec:
    bins: int = 100
    alpha: float = 0.5
    lo: Optional[float] = None
    hi: Optional[float] = None

    def __post_init__(self):
        if self.bins < 2:
            raise ConfigError("need at least 2 bins")
        if self.alpha <= 0:
            raise ConfigError("Laplace smoothing alpha must be positive")


def kl_and_l1(mu: EmpiricalMeasure1D, nu: EmpiricalMeasure1D,
              spec: HistogramSpec = HistogramSpec()):
    """(KL(mu || nu), L1) over shared smoothed histograms.

    Binning spans the union support; probabilities are
    ``(count + alpha) / (n + alpha * bins)`` per measure.
    """
    lo = spec.lo if spec.lo is not None else min(mu.values[0], nu.values[0])
    hi = spec.hi if spec.hi is not None else max(mu.values[-1], nu.values[-1])
    if lo >= hi:
        hi = lo + 1e-12
    edges = np.linspace(lo, hi, spec.bins + 1)

    def smoothed(m: EmpiricalMeasure1D):
        hist, _ = np.histogram(m.values, bins=edges, weights=m.weights)
        counts = hist * m.n
        return (counts + spec.alpha) / (m.n + spec.alpha * spec.bins)

    p = smoothed(mu)
    q = smoothed(nu)
    kl = float(np.sum(p * np.log(p / q)))
    l1 = float(np.sum(np.abs(p - q)))
    return kl, l1
