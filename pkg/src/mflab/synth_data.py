"""Two-class Gaussian data streams.

Two laws are used throughout:

* the centered isotropic pair (label +1 with covariance ``(1+delta)^2 I``,
  label -1 with ``(1-delta)^2 I``, each with probability 1/2), which feeds
  the radial statics and the one-pass SGD runs;
* a single-class correlated law (labels 1/0 at random, features from a
  covariance with ``(1+delta)^2`` on the diagonal and a small constant
  ``off_diag`` elsewhere), which feeds the independence-test simulations.

All sampling goes through a splittable seeded generator (``SeedSequence`` ->
PCG64, ziggurat normals), so replicate streams are independent and every
stream is reproducible byte-for-byte from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Parameters of the two-class data law.

    ``label_values`` defaults to (+1, -1); the independence-table law uses
    (1, 0). ``off_diag`` is the constant off-diagonal covariance entry and
    must be 0 for the isotropic two-class law.
    """

    delta: float
    dim: int
    label_values: tuple[float, float] = (1.0, -1.0)
    off_diag: float = 0.0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError("dim must be a positive integer")
        if self.off_diag < 0:
            raise ConfigError("off_diag must be nonnegative")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        if self.off_diag == 0.0 and not self.delta < 1:
            raise ConfigError("isotropic two-class law requires delta < 1")

    @property
    def tau_plus(self) -> float:
        return 1.0 + self.delta

    @property
    def tau_minus(self) -> float:
        return 1.0 - self.delta


def isotropic_spec(delta: float, dim: int, label_values=(1.0, -1.0)) -> GaussianMixtureSpec:
    if not 0 <= delta < 1:
        raise ConfigError("isotropic law requires 0 <= delta < 1")
    return GaussianMixtureSpec(delta=delta, dim=dim, label_values=tuple(label_values))


def correlated_spec(delta: float, dim: int, off_diag: float) -> GaussianMixtureSpec:
    """Single-class correlated law used by the independence simulations."""
    return GaussianMixtureSpec(delta=delta, dim=dim, label_values=(1.0, 0.0),
                               off_diag=off_diag)


def rng_from_seed(seed: int | np.random.SeedSequence) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """Independent child generators for parallel replicates."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def sample_isotropic(spec: GaussianMixtureSpec, rng_seed, count: int):
    """Draw ``count`` labeled samples of the isotropic two-class law.

    Returns ``(X, y)`` with ``X`` of shape (count, dim). Conditional on the
    label, every coordinate is i.i.d. normal with standard deviation
    ``1 + delta`` (first label) or ``1 - delta`` (second label).
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    if spec.off_diag != 0.0:
        raise ConfigError("isotropic sampler requires off_diag == 0; "
                          "use sample_correlated for the correlated law")
    if not 0 <= spec.delta < 1:
        raise ConfigError("isotropic law requires 0 <= delta < 1")
    rng = rng_from_seed(rng_seed)
    plus = rng.random(count) < 0.5
    scale = np.where(plus, spec.tau_plus, spec.tau_minus)
    X = rng.standard_normal((count, spec.dim)) * scale[:, None]
    y = np.where(plus, spec.label_values[0], spec.label_values[1]).astype(float)
    return X, y


def covariance_matrix(spec: GaussianMixtureSpec) -> np.ndarray:
    sigma = np.full((spec.dim, spec.dim), spec.off_diag, dtype=float)
    np.fill_diagonal(sigma, spec.tau_plus ** 2)
    return sigma


def sample_correlated(spec: GaussianMixtureSpec, rng_seed, count: int):
    """Draw ``count`` samples with x ~ N(0, Sigma), Sigma constant-correlation.

    Labels are ``label_values[0]`` with probability 1/2, else
    ``label_values[1]``; they are independent of x under this law. Fails if
    Sigma is not positive definite (no silent regularization).
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    sigma = covariance_matrix(spec)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"covariance not positive definite: {exc}") from exc
    rng = rng_from_seed(rng_seed)
    ones = rng.random(count) < 0.5
    y = np.where(ones, spec.label_values[0], spec.label_values[1]).astype(float)
    X = rng.standard_normal((count, spec.dim)) @ chol.T
    return X, y


def sample(spec: GaussianMixtureSpec, rng_seed, count: int):
    """Dispatch on the law: isotropic two-class when off_diag == 0."""
    if spec.off_diag == 0.0:
        return sample_isotropic(spec, rng_seed, count)
    return sample_correlated(spec, rng_seed, count)


class MixtureStream:
    """Endless fresh-sample stream over a mixture spec; supports both the
    chunked protocol (``next_chunk``) and plain iteration."""

    def __init__(self, spec: GaussianMixtureSpec, seed):
        self.spec = spec
        self._rng = rng_from_seed(seed)
        self._chol = None
        if spec.off_diag != 0.0:
            try:
                self._chol = np.linalg.cholesky(covariance_matrix(spec))
            except np.linalg.LinAlgError as exc:
                raise NumericError(f"covariance not positive definite: {exc}") from exc

    def next_chunk(self, k: int):
        spec = self.spec
        if spec.off_diag == 0.0:
            plus = self._rng.random(k) < 0.5
            scale = np.where(plus, spec.tau_plus, spec.tau_minus)
            X = self._rng.standard_normal((k, spec.dim)) * scale[:, None]
            y = np.where(plus, spec.label_values[0], spec.label_values[1]).astype(float)
            return X, y
        chol = self._chol
        ones = self._rng.random(k) < 0.5
        y = np.where(ones, spec.label_values[0], spec.label_values[1]).astype(float)
        X = self._rng.standard_normal((k, spec.dim)) @ chol.T
        return X, y

    def __iter__(self):
        while True:
            X, y = self.next_chunk(256)
            yield from zip(X, y)


def constant_covariance(dim: int, diag: float, off_diag: float) -> np.ndarray:
    """A dim x dim matrix with ``diag`` on the diagonal, ``off_diag`` elsewhere."""
    sigma = np.full((dim, dim), off_diag, dtype=float)
    np.fill_diagonal(sigma, diag)
    return sigma


def sample_gaussian_norms(dim: int, diag: float, off_diag: float, count: int,
                          rng_seed) -> np.ndarray:
    """Euclidean norms of ``count`` draws from N(0, Sigma) with a
    constant-covariance Sigma; the stock initializer for radial particle
    ensembles and hidden-layer weights."""
    sigma = constant_covariance(dim, diag, off_diag)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"covariance not positive definite: {exc}") from exc
    rng = rng_from_seed(rng_seed)
    Z = rng.standard_normal((count, dim)) @ chol.T
    return np.linalg.norm(Z, axis=1)


def write_csv(path, X: np.ndarray, y: np.ndarray) -> None:
    """CSV with header ``y,x1,...,xd``; floats use round-trip formatting."""
    d = X.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("y," + ",".join(f"x{i + 1}" for i in range(d)) + "\n")
        for yi, row in zip(y, X):
            fh.write(repr(float(yi)) + "," + ",".join(repr(float(v)) for v in row) + "\n")
