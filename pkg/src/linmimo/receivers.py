"""Exact finite-dimensional SINRs and mutual information on one realization.

All information quantities are in nats; the CLI converts to/from bits per
channel use at the boundary (R_nats = R_bits * ln 2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .channel import ChannelSample, SystemDims

ZF = "zf"
MMSE = "mmse"
OPTIMAL = "optimal"

LN2 = float(np.log(2.0))

# Gram matrices with lambda_min below this multiple of lambda_max are treated
# as singular for the ZF inverse (a probability-zero event under Rayleigh
# fading; callers typically resample the trial).
SINGULAR_RTOL = 1e-12


class SingularGram(RuntimeError):
    """Raised when the Gram matrix is numerically singular for ZF."""


@dataclass(frozen=True)
class SnrPoint:
    """Transmit SNR rho = M * Es / N0, linear scale."""

    rho: float

    def __post_init__(self) -> None:
        if self.rho < 0:
            raise ValueError("rho must be nonnegative")

    @staticmethod
    def from_db(snr_db: float) -> "SnrPoint":
        return SnrPoint(10.0 ** (snr_db / 10.0))

    def alpha(self, dims: SystemDims) -> float:
        """rho / beta, the SNR parameter of the large-system formulas."""
        return self.rho * dims.n_rx / dims.m_tx


@dataclass(frozen=True)
class SinrVector:
    """Per-stream SINRs gamma_1..gamma_M produced by a linear receiver."""

    gammas: np.ndarray
    receiver: str

    def __post_init__(self) -> None:
        if self.receiver not in (ZF, MMSE):
            raise ValueError(f"unknown linear receiver tag {self.receiver!r}")
        if len(self.gammas) < 1:
            raise ValueError("SinrVector needs at least one stream")


def bits_to_nats(rate_bits: float) -> float:
    return rate_bits * LN2


def nats_to_bits(rate_nats: float) -> float:
    return rate_nats / LN2


def zf_sinrs(channel: ChannelSample, snr: SnrPoint) -> SinrVector:
    """ZF per-stream SINRs, gamma_k = (rho/M) / [(H^H H)^{-1}]_kk."""
    w = channel.eigenvalues
    if w[0] <= SINGULAR_RTOL * w[-1]:
        raise SingularGram(
            f"lambda_min/lambda_max = {w[0] / max(w[-1], 1e-300):.3e} too small"
        )
    m = channel.gram.shape[0]
    inv_diag = np.diag(np.linalg.inv(channel.gram)).real
    gammas = (snr.rho / m) / inv_diag
    return SinrVector(gammas=np.maximum(gammas, 0.0), receiver=ZF)


def mmse_sinrs(channel: ChannelSample, snr: SnrPoint) -> SinrVector:
    """MMSE per-stream SINRs, gamma_k = 1 / [(I + (rho/M) H^H H)^{-1}]_kk - 1.

    Computed from one Cholesky factorization of the (always positive
    definite) regularized Gram matrix.
    """
    m = channel.gram.shape[0]
    a = np.eye(m, dtype=np.complex128) + (snr.rho / m) * channel.gram
    c, low = cho_factor(a, lower=True)
    inv = cho_solve((c, low), np.eye(m, dtype=np.complex128))
    gammas = 1.0 / np.diag(inv).real - 1.0
    return SinrVector(gammas=np.maximum(gammas, 0.0), receiver=MMSE)


def mmse_sinrs_schur(channel: ChannelSample, snr: SnrPoint) -> SinrVector:
    """MMSE SINRs from the rank-reduced (Schur complement) form.

    gamma_k = (rho/M) h_k^H [I + (rho/M) H_k H_k^H]^{-1} h_k with H_k the
    channel minus column k.  Mathematically identical to :func:`mmse_sinrs`;
    kept as an independent cross-check of the diagonal-of-inverse route.
    """
    h = channel.entries
    n, m = h.shape
    c = snr.rho / m
    gammas = np.empty(m)
    for k in range(m):
        hk = np.delete(h, k, axis=1)
        a = np.eye(n, dtype=np.complex128) + c * (hk @ hk.conj().T)
        gammas[k] = c * (h[:, k].conj() @ np.linalg.solve(a, h[:, k])).real
    return SinrVector(gammas=np.maximum(gammas, 0.0), receiver=MMSE)


def mutual_info_linear(sinrs: SinrVector) -> float:
    """Mutual information (nats) with coding across the antennas: sum ln(1+g_k)."""
    return float(np.sum(np.log1p(sinrs.gammas)))


def per_stream_rates(sinrs: SinrVector) -> np.ndarray:
    """ln(1+gamma_k) per stream, for the spatial-multiplexing outage event."""
    return np.log1p(sinrs.gammas)


def mutual_info_optimal(channel: ChannelSample, snr: SnrPoint) -> float:
    """log det(I + (rho/M) H H^H) in nats, from the Gram eigenvalues."""
    m = channel.gram.shape[0]
    return float(np.sum(np.log1p((snr.rho / m) * channel.eigenvalues)))


def mmse_bound_statistic(channel: ChannelSample, snr: SnrPoint) -> float:
    """(1/M) sum_k 1/(1 + (rho/M) lambda_k).

    The MMSE outage upper-bound event is {statistic >= exp(-R_nats/M)}
    (equivalently 2^{-R_bits/M}); it contains the coded MMSE outage event on
    every realization.
    """
    m = channel.gram.shape[0]
    return float(np.mean(1.0 / (1.0 + (snr.rho / m) * channel.eigenvalues)))


def zf_bound_statistic(channel: ChannelSample, snr: SnrPoint) -> float:
    """ln(1 + rho * lambda_min), the ZF diversity bound statistic.

    In DMT form the bound event is {value <= (r/M) ln rho}.  Note the exact
    per-realization inequality on the ZF mutual information involves
    (rho/M) * lambda_min (see montecarlo's zf_upper_bound scheme); the rho
    normalization here only shifts the event by a constant number of dB and
    leaves every fitted slope unchanged.
    """
    return float(np.log1p(snr.rho * channel.eigenvalues[0]))
