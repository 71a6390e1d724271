import numpy as np
import pytest

from linmimo.channel import ChannelSample, RngStream, SystemDims, sample_channel
from linmimo.receivers import (
    MMSE,
    ZF,
    SingularGram,
    SinrVector,
    SnrPoint,
    bits_to_nats,
    mmse_bound_statistic,
    mmse_sinrs,
    mmse_sinrs_schur,
    mutual_info_linear,
    mutual_info_optimal,
    nats_to_bits,
    per_stream_rates,
    zf_bound_statistic,
    zf_sinrs,
)


def make_channel(h) -> ChannelSample:
    h = np.asarray(h, dtype=np.complex128)
    gram = h.conj().T @ h
    return ChannelSample(entries=h, gram=gram,
                         eigenvalues=np.maximum(np.linalg.eigvalsh(gram), 0.0))


UPPER = make_channel([[1, 1], [0, 1]])   # hand-workable 2x2 example
EYE2 = make_channel(np.eye(2))


def test_snr_point():
    assert SnrPoint.from_db(10.0).rho == pytest.approx(10.0)
    assert SnrPoint(2.0).alpha(SystemDims(2, 4)) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        SnrPoint(-1.0)


def test_unit_conversions():
    assert bits_to_nats(1.0) == pytest.approx(np.log(2))
    assert nats_to_bits(np.log(2)) == pytest.approx(1.0)


class TestZfSinrs:
    def test_unit_column(self):
        ch = make_channel([[1.0], [0.0]])
        assert zf_sinrs(ch, SnrPoint(2.0)).gammas == pytest.approx([2.0])

    def test_identity(self):
        assert zf_sinrs(EYE2, SnrPoint(4.0)).gammas == pytest.approx([2.0, 2.0])

    def test_hand_inverse(self):
        # (H^H H)^{-1} = [[2,-1],[-1,1]] for the upper-triangular example.
        g = zf_sinrs(UPPER, SnrPoint(2.0)).gammas
        assert g == pytest.approx([0.5, 1.0], rel=1e-12)

    def test_zero_snr_is_zero(self):
        assert zf_sinrs(EYE2, SnrPoint(0.0)).gammas == pytest.approx([0.0, 0.0])

    def test_singular_gram_raises(self):
        ch = make_channel([[1, 1], [1, 1]])  # duplicated columns, rank 1
        with pytest.raises(SingularGram):
            zf_sinrs(ch, SnrPoint(1.0))


class TestMmseSinrs:
    def test_identity(self):
        assert mmse_sinrs(EYE2, SnrPoint(2.0)).gammas == pytest.approx([1.0, 1.0])

    def test_hand_inverse(self):
        # (I + G)^{-1} has diagonal (0.6, 0.4) => gammas (2/3, 3/2).
        g = mmse_sinrs(UPPER, SnrPoint(2.0)).gammas
        assert g == pytest.approx([2.0 / 3.0, 1.5], rel=1e-12)

    def test_zero_snr(self):
        assert mmse_sinrs(UPPER, SnrPoint(0.0)).gammas == pytest.approx([0.0, 0.0])

    def test_two_forms_agree(self):
        # Diagonal-of-inverse vs Schur-complement form on random 4x6.
        dims = SystemDims(4, 6)
        snr = SnrPoint(3.7)
        for t in range(20):
            ch = sample_channel(dims, RngStream(50, t))
            a = mmse_sinrs(ch, snr).gammas
            b = mmse_sinrs_schur(ch, snr).gammas
            assert np.all(np.abs(a - b) <= 1e-10 * np.maximum(a, 1.0))


class TestInformation:
    def test_mutual_info_linear(self):
        v = SinrVector(np.array([1.0, 1.0]), MMSE)
        assert mutual_info_linear(v) == pytest.approx(2 * np.log(2))
        assert mutual_info_linear(SinrVector(np.zeros(3), ZF)) == 0.0
        v = SinrVector(np.array([0.5, 1.0]), ZF)
        assert mutual_info_linear(v) == pytest.approx(np.log(1.5) + np.log(2))

    def test_per_stream_rates(self):
        assert per_stream_rates(SinrVector(np.array([3.0]), ZF)) == pytest.approx(
            [np.log(4)])
        r = per_stream_rates(SinrVector(np.array([0.5, 1.0]), MMSE))
        assert r == pytest.approx([0.4054651081, 0.6931471806])
        with pytest.raises(ValueError):
            SinrVector(np.array([]), ZF)

    def test_mutual_info_optimal(self):
        assert mutual_info_optimal(EYE2, SnrPoint(2.0)) == pytest.approx(2 * np.log(2))
        assert mutual_info_optimal(EYE2, SnrPoint(0.0)) == 0.0
        # det(I + G) = 1 + tr G + det G = 5 for the hand example.
        assert mutual_info_optimal(UPPER, SnrPoint(2.0)) == pytest.approx(np.log(5.0))


class TestBoundStatistics:
    def test_mmse_statistic(self):
        assert mmse_bound_statistic(UPPER, SnrPoint(0.0)) == pytest.approx(1.0)
        assert mmse_bound_statistic(EYE2, SnrPoint(2.0)) == pytest.approx(0.5)
        # Eigenvalues (3 +- sqrt 5)/2: mean of 1/(1+lam) = 0.5 exactly.
        assert mmse_bound_statistic(UPPER, SnrPoint(2.0)) == pytest.approx(0.5)

    def test_zf_statistic(self):
        assert zf_bound_statistic(EYE2, SnrPoint(0.0)) == 0.0
        ch = make_channel([[1.0], [0.0]])
        assert zf_bound_statistic(ch, SnrPoint(3.0)) == pytest.approx(np.log(4))
        assert zf_bound_statistic(EYE2, SnrPoint(2.0)) == pytest.approx(np.log(3))


class TestOrderings:
    def test_mmse_dominates_zf_and_info_ordering(self):
        dims = SystemDims(3, 5)
        for t in range(30):
            ch = sample_channel(dims, RngStream(60, t))
            for rho in (0.3, 2.0, 25.0):
                snr = SnrPoint(rho)
                gz = zf_sinrs(ch, snr).gammas
                gm = mmse_sinrs(ch, snr).gammas
                assert np.all(gm >= gz - 1e-12)
                iz = mutual_info_linear(SinrVector(gz, ZF))
                im = mutual_info_linear(SinrVector(gm, MMSE))
                io = mutual_info_optimal(ch, snr)
                assert iz <= im + 1e-12
                assert im <= io + 1e-12

    def test_monotone_in_rho(self):
        dims = SystemDims(2, 3)
        rhos = [0.0, 0.5, 1.0, 4.0, 20.0]
        for t in range(10):
            ch = sample_channel(dims, RngStream(61, t))
            for fn in (lambda c, s: zf_sinrs(c, s).gammas,
                       lambda c, s: mmse_sinrs(c, s).gammas):
                vals = np.array([fn(ch, SnrPoint(r)) for r in rhos])
                assert np.all(np.diff(vals, axis=0) >= -1e-12)
            infos = [mutual_info_optimal(ch, SnrPoint(r)) for r in rhos]
            assert np.all(np.diff(infos) >= -1e-12)


def test_zf_marginal_gamma_moments():
    # gamma_k / (rho/M) is Gamma(N-M+1, 1); check mean and variance.
    dims = SystemDims(2, 8)
    rho = 10.0
    shape = dims.n_rx - dims.m_tx + 1
    n = 8000
    vals = np.empty(n)
    for t in range(n):
        ch = sample_channel(dims, RngStream(77, t))
        vals[t] = zf_sinrs(ch, SnrPoint(rho)).gammas[0] / (rho / dims.m_tx)
    se_mean = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - shape) <= 3 * se_mean
    # variance of Gamma(7,1) is 7; sampling error of the sample variance
    # is roughly var * sqrt((kurt+2)/n) -- use 4 of those.
    v = vals.var(ddof=1)
    se_var = v * np.sqrt((6.0 / shape + 2.0) / n)
    assert abs(v - shape) <= 4 * se_var
