import numpy as np
import pytest

from mflab import synth_data as sd
from mflab.errors import ConfigError, NumericError


def test_zero_delta_collapses_to_standard_normal():
    spec = sd.isotropic_spec(0.0, 20)
    X, y = sd.sample_isotropic(spec, 1, 20000)
    assert np.mean(np.sum(X ** 2, axis=1) / spec.dim) == pytest.approx(1.0, abs=0.02)


def test_per_class_variance_matches_protocol_shapes():
    # delta=0.8, d=250, 2000 draws: first-coordinate variance per class
    spec = sd.isotropic_spec(0.8, 250)
    X, y = sd.sample_isotropic(spec, 7, 2000)
    for label, tau in ((1.0, 1.8), (-1.0, 0.2)):
        xs = X[y == label][:, 0]
        var = xs.var(ddof=1)
        se = tau ** 2 * np.sqrt(2.0 / xs.size)
        assert abs(var - tau ** 2) < 3 * se


def test_stream_determinism():
    spec = sd.isotropic_spec(0.5, 7)
    X1, y1 = sd.sample_isotropic(spec, 123, 100)
    X2, y2 = sd.sample_isotropic(spec, 123, 100)
    assert X1.tobytes() == X2.tobytes() and y1.tobytes() == y2.tobytes()
    s1 = sd.MixtureStream(spec, 9)
    s2 = sd.MixtureStream(spec, 9)
    a = s1.next_chunk(64)[0]
    b = s2.next_chunk(64)[0]
    assert a.tobytes() == b.tobytes()


def test_isotropic_rejects_correlated_spec():
    spec = sd.correlated_spec(0.5, 5, 0.01)
    with pytest.raises(ConfigError):
        sd.sample_isotropic(spec, 0, 10)
    with pytest.raises(ConfigError):
        sd.sample_isotropic(sd.isotropic_spec(0.5, 5), 0, 0)


def test_correlated_zero_offdiag_uncorrelated():
    spec = sd.GaussianMixtureSpec(0.5, 6, label_values=(1.0, 0.0), off_diag=0.0)
    X, _ = sd.sample_correlated(spec, 3, 20000)
    corr = np.corrcoef(X.T)
    off = corr[~np.eye(6, dtype=bool)]
    assert np.max(np.abs(off)) < 4.0 / np.sqrt(20000)


def test_correlated_offdiag_covariance():
    # Table-row configuration; mean off-diagonal sample covariance near target
    spec = sd.correlated_spec(0.5, 50, 0.01)
    X, y = sd.sample_correlated(spec, 11, 1000)
    assert set(np.unique(y)) <= {0.0, 1.0}
    cov = np.cov(X.T)
    off = cov[~np.eye(50, dtype=bool)]
    single_se = spec.tau_plus ** 2 / np.sqrt(1000)
    assert abs(off.mean() - 0.01) < 3 * single_se


def test_correlated_delta_one_cholesky_exists():
    # diag (1+1)^2 = 4, off 0.001: eigenvalues 4 +/- 0.001 > 0
    spec = sd.GaussianMixtureSpec(1.0, 2, label_values=(1.0, 0.0), off_diag=0.001)
    X, y = sd.sample_correlated(spec, 0, 50)
    assert X.shape == (50, 2)


def test_correlated_non_pd_fails():
    spec = sd.GaussianMixtureSpec(0.1, 5, label_values=(1.0, 0.0), off_diag=10.0)
    with pytest.raises(NumericError):
        sd.sample_correlated(spec, 0, 10)


def test_label_frequency():
    spec = sd.isotropic_spec(0.3, 3)
    _, y = sd.sample_isotropic(spec, 21, 4000)
    freq = np.mean(y == 1.0)
    assert abs(freq - 0.5) < 4 * np.sqrt(0.25 / 4000)


def test_per_class_covariance_entrywise():
    spec = sd.isotropic_spec(0.4, 5)
    X, y = sd.sample_isotropic(spec, 5, 100_000)
    for label, tau in ((1.0, 1.4), (-1.0, 0.6)):
        xs = X[y == label]
        n = xs.shape[0]
        cov = np.cov(xs.T)
        target = tau ** 2 * np.eye(5)
        se = tau ** 2 * np.sqrt((1.0 + np.eye(5)) / n)
        assert np.all(np.abs(cov - target) < 5 * se)


def test_spec_validation():
    with pytest.raises(ConfigError):
        sd.isotropic_spec(1.0, 5)
    with pytest.raises(ConfigError):
        sd.GaussianMixtureSpec(-0.1, 5)
    with pytest.raises(ConfigError):
        sd.GaussianMixtureSpec(0.5, 0)


def test_csv_roundtrip(tmp_path):
    spec = sd.isotropic_spec(0.5, 3)
    X, y = sd.sample_isotropic(spec, 2, 10)
    path = tmp_path / "data.csv"
    sd.write_csv(path, X, y)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "y,x1,x2,x3"
    back = np.asarray([[float(v) for v in line.split(",")] for line in lines[1:]])
    assert back[:, 1:].tobytes() == X.tobytes()  # repr round-trips exactly
    assert back[:, 0].tobytes() == y.tobytes()


def test_gaussian_norms_helper():
    r = sd.sample_gaussian_norms(250, 0.64 / 250, 0.0, 4000, 13)
    assert np.all(r >= 0)
    assert np.mean(r) == pytest.approx(0.8, abs=0.01)
