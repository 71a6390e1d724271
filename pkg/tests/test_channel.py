import numpy as np
import pytest

from linmimo.channel import (
    ChannelSample,
    RngStream,
    SystemDims,
    complex_gaussians,
    gram_spectrum,
    min_eigenvalue_cdf_probe,
    sample_channel,
    sample_entries,
)


def test_dims_validation():
    with pytest.raises(ValueError):
        SystemDims(0, 4)
    with pytest.raises(ValueError):
        SystemDims(3, 2)
    assert SystemDims(2, 4).beta() == 0.5


def test_stream_validation():
    with pytest.raises(ValueError):
        RngStream(1, -1)
    assert len(RngStream.batch(5, 3)) == 3


def test_determinism_same_stream():
    dims = SystemDims(2, 4)
    a = sample_channel(dims, RngStream(7, 3))
    b = sample_channel(dims, RngStream(7, 3))
    assert np.array_equal(a.entries, b.entries)
    assert np.array_equal(a.gram, b.gram)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)


def test_single_trial_matches_batch_row():
    dims = SystemDims(3, 5)
    batch = sample_entries(dims, 99, 10, 20)
    for i, t in enumerate(range(10, 30)):
        one = sample_channel(dims, RngStream(99, t))
        assert np.array_equal(one.entries, batch[i])


def test_batch_split_invariance():
    # Partitioning trials across "workers" at any boundary reproduces the
    # same matrices: the contract behind scheduling-independent Monte Carlo.
    dims = SystemDims(2, 2)
    whole = sample_entries(dims, 4, 0, 50)
    parts = np.concatenate([
        sample_entries(dims, 4, 0, 13),
        sample_entries(dims, 4, 13, 24),
        sample_entries(dims, 4, 37, 13),
    ])
    assert np.array_equal(whole, parts)


def test_distinct_trials_differ():
    dims = SystemDims(2, 2)
    a = sample_channel(dims, RngStream(1, 0))
    b = sample_channel(dims, RngStream(1, 1))
    c = sample_channel(dims, RngStream(2, 0))
    assert not np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)


def test_entry_distribution_moments():
    # CN(0,1): unit modulus-squared mean, real/imag parts each variance 1/2.
    h = sample_entries(SystemDims(4, 4), 11, 0, 20000).ravel()
    n = h.size
    p = np.abs(h) ** 2
    assert abs(p.mean() - 1.0) <= 3 * p.std(ddof=1) / np.sqrt(n)
    for part in (h.real, h.imag):
        v = part**2
        assert abs(v.mean() - 0.5) <= 3 * v.std(ddof=1) / np.sqrt(n)
        assert abs(part.mean()) <= 3 * part.std(ddof=1) / np.sqrt(n)


def test_mean_trace_matches_mn():
    # E[(1/N) Tr H^H H] = M for CN(0,1) entries; dims (2,4) per contract.
    dims = SystemDims(2, 4)
    h = sample_entries(dims, 21, 0, 100000)
    tr = np.einsum("bij,bij->b", h.conj(), h).real / dims.n_rx
    se = tr.std(ddof=1) / np.sqrt(len(tr))
    assert abs(tr.mean() - dims.m_tx) <= 3 * se


def test_mean_eigenvalue_average():
    # E[(1/M) sum lambda_k] = N since E Tr H^H H = M*N.
    dims = SystemDims(3, 6)
    h = sample_entries(dims, 13, 0, 30000)
    _, w = gram_spectrum(h)
    lbar = w.mean(axis=1)
    se = lbar.std(ddof=1) / np.sqrt(len(lbar))
    assert abs(lbar.mean() - dims.n_rx) <= 3 * se


def test_gram_reconstruction_and_spectrum():
    dims = SystemDims(4, 6)
    for t in range(10):
        ch = sample_channel(dims, RngStream(3, t))
        rebuilt = ch.entries.conj().T @ ch.entries
        err = np.linalg.norm(rebuilt - ch.gram) / np.linalg.norm(ch.gram)
        assert err <= 1e-10
        assert np.all(np.diff(ch.eigenvalues) >= 0)
        assert np.all(ch.eigenvalues >= 0)
        direct = np.linalg.eigvalsh(ch.gram)
        assert np.allclose(ch.eigenvalues, np.maximum(direct, 0), atol=1e-12)


def test_complex_gaussians_layout():
    # sample_entries is the (N*M)-value gaussian stream reshaped row-major.
    dims = SystemDims(2, 3)
    flat = complex_gaussians(17, 0, 5, 4, dims.n_rx * dims.m_tx)
    ent = sample_entries(dims, 17, 5, 4)
    assert np.array_equal(ent, flat.reshape(4, dims.n_rx, dims.m_tx))


class TestMinEigenvalueProbe:
    def test_siso_exponential_closed_form(self):
        # P(|h|^2 <= t) = 1 - exp(-t).
        dims = SystemDims(1, 1)
        t = 0.05
        n = 40000
        p = min_eigenvalue_cdf_probe(dims, RngStream.batch(31, n), t)
        exact = 1.0 - np.exp(-t)
        se = np.sqrt(exact * (1 - exact) / n)
        assert abs(p - exact) <= 4 * se

    def test_large_threshold_saturates(self):
        dims = SystemDims(1, 1)
        assert min_eigenvalue_cdf_probe(dims, RngStream.batch(1, 200), 50.0) == 1.0

    def test_cdf_exponent_2x2(self):
        # For M = N the CDF behaves like c*t near zero: log-log slope 1.
        dims = SystemDims(2, 2)
        streams = RngStream.batch(8, 200000)
        ts = np.logspace(-3, -1, 5)
        ps = [min_eigenvalue_cdf_probe(dims, streams, t) for t in ts]
        slope = np.polyfit(np.log10(ts), np.log10(ps), 1)[0]
        assert abs(slope - 1.0) <= 0.15

    def test_cdf_exponent_2x4(self):
        # N - M + 1 = 3 for dims (2,4); larger thresholds keep counts up.
        dims = SystemDims(2, 4)
        streams = RngStream.batch(9, 150000)
        ts = np.logspace(-1.2, -0.2, 4)
        ps = [min_eigenvalue_cdf_probe(dims, streams, t) for t in ts]
        slope = np.polyfit(np.log10(ts), np.log10(ps), 1)[0]
        assert abs(slope - 3.0) <= 0.4

    def test_errors(self):
        dims = SystemDims(1, 1)
        with pytest.raises(ValueError):
            min_eigenvalue_cdf_probe(dims, [], 0.1)
        with pytest.raises(ValueError):
            min_eigenvalue_cdf_probe(dims, RngStream.batch(1, 10), -1.0)
