"""Reproducible parallel Monte Carlo for outage probabilities and moments.

Trials are partitioned into fixed-size chunks (a pure function of the
problem dimensions, never of the worker count); chunk results are combined
in chunk order, and outage accumulators are integer counts, so every
estimate here is bit-identical for any ``workers`` setting.

Common random numbers: the channel of trial ``t`` depends only on
``(seed, t)`` and the antenna dimensions, so sweeps over SNR, rate or scheme
with the same seed see identical channel realizations trial by trial.  This
turns the per-realization inequalities between schemes (coded outage implies
spatial-multiplexing outage; coded outage implies the corresponding
upper-bound event) into exact, assertable orderings of the counts.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel import SystemDims, complex_gaussians, gram_spectrum, sample_entries
from .receivers import MMSE, OPTIMAL, ZF, bits_to_nats

# Philox key-word-2 values; 0 is the channel sampler in linmimo.channel.
_NOVIKOV_CONTEXT = 1
_TRACE_CONTEXT = 2

_WILSON_Z = 1.959963984540054  # two-sided 95%

OPTIMAL_ARCH = "optimal"
CODED = "coded_across_antennas"
SPATIAL = "spatial_multiplexing"
MMSE_BOUND = "mmse_upper_bound"
ZF_BOUND = "zf_upper_bound"

_ARCHITECTURES = (OPTIMAL_ARCH, CODED, SPATIAL, MMSE_BOUND, ZF_BOUND)


class InvalidRate(ValueError):
    """Target rates must be strictly positive."""


class InsufficientPoints(ValueError):
    """Slope fitting needs at least two usable curve points in the window."""


@dataclass(frozen=True)
class SchemeSpec:
    """A transmit architecture paired with a receiver."""

    architecture: str
    receiver: str

    def __post_init__(self) -> None:
        if self.architecture not in _ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.receiver not in (ZF, MMSE, OPTIMAL):
            raise ValueError(f"unknown receiver {self.receiver!r}")
        pairings = {
            OPTIMAL_ARCH: (OPTIMAL,),
            MMSE_BOUND: (MMSE,),
            ZF_BOUND: (ZF,),
            CODED: (ZF, MMSE),
            SPATIAL: (ZF, MMSE),
        }
        if self.receiver not in pairings[self.architecture]:
            raise ValueError(
                f"architecture {self.architecture!r} cannot pair with "
                f"receiver {self.receiver!r}"
            )

    def label(self) -> str:
        return f"{self.architecture}:{self.receiver}"


@dataclass(frozen=True)
class OutageEstimate:
    """Monte Carlo outage probability with a 95% Wilson interval."""

    p_hat: float
    trials: int
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class MomentEstimate:
    """Sample mean/variance/skewness with standard errors."""

    mean: float
    variance: float
    skewness: float
    se_mean: float
    se_variance: float
    se_skewness: float
    trials: int


@dataclass(frozen=True)
class NovikovRow:
    """One fourth-moment index pattern: empirical vs predicted value."""

    pattern: str
    empirical: float
    predicted: float
    z_score: float


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion.

    Zero-success (and all-success) points use the exact one-sided bound
    1 - 0.025**(1/n), about 3.69/n, which keeps rare-event sweep points
    informative instead of degenerating to [0, 0].
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = trials
    if successes == 0:
        return 0.0, 1.0 - 0.025 ** (1.0 / n)
    if successes == n:
        return 0.025 ** (1.0 / n), 1.0
    z = _WILSON_Z
    p = successes / n
    den = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / den
    return max(center - half, 0.0), min(center + half, 1.0)


def _estimate_from_count(k: int, n: int) -> OutageEstimate:
    lo, hi = wilson_interval(k, n)
    return OutageEstimate(p_hat=k / n, trials=n, ci_low=lo, ci_high=hi)


def _chunk_size(dims: SystemDims) -> int:
    # ~2^21 complex channel entries per chunk, clamped; depends only on the
    # dimensions so chunk boundaries are identical for every worker count.
    per_trial = dims.n_rx * dims.m_tx
    return int(min(max(2**21 // per_trial, 256), 65536))


def _chunk_starts(trials: int, chunk: int) -> list[tuple[int, int]]:
    return [(s, min(chunk, trials - s)) for s in range(0, trials, chunk)]


def _map_chunks(fn, payloads: list, workers: int) -> list:
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, payloads))


def _needs_vectors(keys: Iterable[tuple[str, str]]) -> bool:
    return any(arch in (CODED, SPATIAL) for arch, _ in keys)


def _outage_chunk(payload) -> np.ndarray:
    """Outage-event counts for one chunk: (n_schemes, n_rho) int64."""
    (m_tx, n_rx, seed, start, count, rho_list, rate_nats, keys) = payload
    dims = SystemDims(m_tx, n_rx)
    h = sample_entries(dims, seed, start, count)
    gram = np.einsum("bij,bik->bjk", h.conj(), h)
    if _needs_vectors(keys):
        lam, vec = np.linalg.eigh(gram)
        lam = np.maximum(lam, 0.0)
        w = vec.real**2 + vec.imag**2
    else:
        lam = np.maximum(np.linalg.eigvalsh(gram), 0.0)
        w = None
    m = m_tx
    counts = np.zeros((len(keys), len(rho_list)), dtype=np.int64)
    for j, rho in enumerate(rho_list):
        c = rho / m
        tinv = 1.0 / (1.0 + c * lam)
        mmse_rates = zf_rates = None
        for i, (arch, rx) in enumerate(keys):
            if arch == OPTIMAL_ARCH:
                out = np.log1p(c * lam).sum(axis=1) <= rate_nats
            elif arch == MMSE_BOUND:
                out = tinv.mean(axis=1) >= math.exp(-rate_nats / m)
            elif arch == ZF_BOUND:
                # Exact per-realization form: I_zf >= M*ln(1 + (rho/M)*lmin)
                # on every channel, so this event contains the coded ZF
                # outage event trial by trial.
                out = np.log1p(c * lam[:, 0]) <= rate_nats / m
            else:
                if rx == MMSE:
                    if mmse_rates is None:
                        d = np.einsum("bkl,bl->bk", w, tinv)
                        mmse_rates = -np.log(d)
                    rates = mmse_rates
                else:
                    if zf_rates is None:
                        with np.errstate(divide="ignore"):
                            inv_diag = np.einsum("bkl,bl->bk", w, 1.0 / lam)
                        zf_rates = np.log1p(c / inv_diag)
                    rates = zf_rates
                if arch == CODED:
                    out = rates.sum(axis=1) <= rate_nats
                else:
                    out = rates.min(axis=1) <= rate_nats / m
            counts[i, j] = np.count_nonzero(out)
    return counts


def _count_outages(schemes: Sequence[SchemeSpec], dims: SystemDims,
                   rho_list: Sequence[float], rate_nats: float, trials: int,
                   seed: int, workers: int) -> np.ndarray:
    keys = tuple((s.architecture, s.receiver) for s in schemes)
    payloads = [
        (dims.m_tx, dims.n_rx, seed, start, count, tuple(rho_list),
         rate_nats, keys)
        for start, count in _chunk_starts(trials, _chunk_size(dims))
    ]
    parts = _map_chunks(_outage_chunk, payloads, workers)
    return np.sum(parts, axis=0)


def estimate_outage(scheme: SchemeSpec, dims: SystemDims, rho: float,
                    rate_bits: float, trials: int, seed: int,
                    workers: int = 1) -> OutageEstimate:
    """Outage probability of ``scheme`` at linear SNR ``rho``.

    Events (rates converted to nats internally):
      coded_across_antennas  sum_k ln(1+gamma_k) <= R
      spatial_multiplexing   min_k ln(1+gamma_k) <= R/M
      optimal                sum_k ln(1+(rho/M)*lambda_k) <= R
      mmse_upper_bound       (1/M) sum_k 1/(1+(rho/M)*lambda_k) >= e^(-R/M)
      zf_upper_bound         ln(1+(rho/M)*lambda_min) <= R/M
    """
    if rate_bits <= 0:
        raise InvalidRate(f"rate_bits must be positive, got {rate_bits}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    counts = _count_outages([scheme], dims, [rho], bits_to_nats(rate_bits),
                            trials, seed, workers)
    return _estimate_from_count(int(counts[0, 0]), trials)


def sweep_outage(scheme: SchemeSpec, dims: SystemDims,
                 snr_db_list: Sequence[float], rate_bits: float, trials: int,
                 seed: int, workers: int = 1
                 ) -> list[tuple[float, OutageEstimate]]:
    """One outage estimate per SNR point, under common random numbers."""
    table = sweep_outage_many([scheme], dims, snr_db_list, rate_bits, trials,
                              seed, workers)
    return table[scheme.label()]


def sweep_outage_many(schemes: Sequence[SchemeSpec], dims: SystemDims,
                      snr_db_list: Sequence[float], rate_bits: float,
                      trials: int, seed: int, workers: int = 1
                      ) -> dict[str, list[tuple[float, OutageEstimate]]]:
    """Sweep several schemes in one pass over shared channel realizations."""
    if rate_bits <= 0:
        raise InvalidRate(f"rate_bits must be positive, got {rate_bits}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if len(snr_db_list) == 0:
        raise ValueError("snr_db_list must be nonempty")
    diffs = np.diff(np.asarray(snr_db_list, dtype=float))
    if len(diffs) and not np.all(diffs > 0):
        raise ValueError("snr_db_list must be strictly increasing")
    rho_list = [10.0 ** (db / 10.0) for db in snr_db_list]
    counts = _count_outages(schemes, dims, rho_list, bits_to_nats(rate_bits),
                            trials, seed, workers)
    return {
        s.label(): [
            (float(db), _estimate_from_count(int(counts[i, j]), trials))
            for j, db in enumerate(snr_db_list)
        ]
        for i, s in enumerate(schemes)
    }


def fit_slope(curve: Sequence[tuple[float, float]],
              window_db: tuple[float, float]) -> float:
    """Least-squares slope of -log10(p) against log10(rho) inside a dB window.

    ``curve`` holds (snr_db, p_hat) pairs (an OutageEstimate is accepted in
    place of p_hat).  Zero-probability points are excluded with a warning;
    fewer than two usable points raises InsufficientPoints.
    """
    lo, hi = window_db
    xs, ys, dropped = [], [], 0
    for snr_db, p in curve:
        if hasattr(p, "p_hat"):
            p = p.p_hat
        if not lo <= snr_db <= hi:
            continue
        if p <= 0.0:
            dropped += 1
            continue
        xs.append(snr_db / 10.0)       # log10(rho)
        ys.append(-math.log10(p))
    if dropped:
        warnings.warn(
            f"fit_slope: excluded {dropped} zero-probability point(s) in "
            f"window [{lo}, {hi}] dB",
            stacklevel=2,
        )
    if len(xs) < 2:
        raise InsufficientPoints(
            f"need >= 2 usable points in window [{lo}, {hi}] dB, have {len(xs)}"
        )
    return float(np.polyfit(xs, ys, 1)[0])


def _info_chunk(payload) -> np.ndarray:
    """Mutual-information samples (nats) for one chunk of trials."""
    (m_tx, n_rx, seed, start, count, rho, receiver) = payload
    if rho == 0.0:
        return np.zeros(count)
    dims = SystemDims(m_tx, n_rx)
    h = sample_entries(dims, seed, start, count)
    gram = np.einsum("bij,bik->bjk", h.conj(), h)
    c = rho / m_tx
    if receiver == OPTIMAL:
        lam = np.maximum(np.linalg.eigvalsh(gram), 0.0)
        return np.log1p(c * lam).sum(axis=1)
    lam, vec = np.linalg.eigh(gram)
    lam = np.maximum(lam, 0.0)
    w = vec.real**2 + vec.imag**2
    if receiver == MMSE:
        d = np.einsum("bkl,bl->bk", w, 1.0 / (1.0 + c * lam))
        return -np.log(d).sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_diag = np.einsum("bkl,bl->bk", w, 1.0 / lam)
    return np.log1p(c / inv_diag).sum(axis=1)


def info_samples(receiver: str, dims: SystemDims, rho: float, trials: int,
                 seed: int, workers: int = 1) -> np.ndarray:
    """Per-trial mutual information I_N (nats) for trials 0..trials-1."""
    if receiver not in (ZF, MMSE, OPTIMAL):
        raise ValueError(f"unknown receiver {receiver!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    payloads = [
        (dims.m_tx, dims.n_rx, seed, start, count, rho, receiver)
        for start, count in _chunk_starts(trials, _chunk_size(dims))
    ]
    return np.concatenate(_map_chunks(_info_chunk, payloads, workers))


def estimate_info_moments(receiver: str, dims: SystemDims, rho: float,
                          trials: int, seed: int,
                          workers: int = 1) -> MomentEstimate:
    """Sample mean/variance/skewness of I_N with standard errors.

    The variance standard error uses the fourth-moment formula
    Var(s^2) = (m4 - (n-3)/(n-1) s^4)/n; the skewness standard error is the
    normal-theory value sqrt(6n(n-1)/((n-2)(n+1)(n+3))).
    """
    if trials < 100:
        raise ValueError("trials must be >= 100 for moment estimation")
    x = info_samples(receiver, dims, rho, trials, seed, workers)
    n = trials
    mean = float(x.mean())
    d = x - mean
    m2 = float((d**2).mean())
    m3 = float((d**3).mean())
    m4 = float((d**4).mean())
    var = m2 * n / (n - 1)
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    se_mean = math.sqrt(var / n)
    se_var = math.sqrt(max(m4 - (n - 3) / (n - 1) * m2 * m2, 0.0) / n)
    se_skew = math.sqrt(6.0 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3)))
    return MomentEstimate(mean=mean, variance=var, skewness=skew,
                          se_mean=se_mean, se_variance=se_var,
                          se_skewness=se_skew, trials=n)


def _sinr_chunk(payload) -> np.ndarray:
    """Per-trial SINR vectors (count, M) for one chunk."""
    (m_tx, n_rx, seed, start, count, rho, receiver) = payload
    if rho == 0.0:
        return np.zeros((count, m_tx))
    dims = SystemDims(m_tx, n_rx)
    h = sample_entries(dims, seed, start, count)
    gram = np.einsum("bij,bik->bjk", h.conj(), h)
    lam, vec = np.linalg.eigh(gram)
    lam = np.maximum(lam, 0.0)
    w = vec.real**2 + vec.imag**2
    c = rho / m_tx
    if receiver == MMSE:
        d = np.einsum("bkl,bl->bk", w, 1.0 / (1.0 + c * lam))
        return 1.0 / d - 1.0
    with np.errstate(divide="ignore"):
        inv_diag = np.einsum("bkl,bl->bk", w, 1.0 / lam)
    return c / inv_diag


def estimate_sinr_covariance(receiver: str, dims: SystemDims, rho: float,
                             trials: int, seed: int,
                             workers: int = 1) -> tuple[float, float]:
    """Averaged empirical (Var(gamma_k), Cov(gamma_j, gamma_k) for j != k).

    The per-stream SINRs are exchangeable, so the diagonal and off-diagonal
    entries of the covariance matrix are each averaged into one scalar.
    """
    if receiver not in (ZF, MMSE):
        raise ValueError(f"receiver must be {ZF!r} or {MMSE!r}")
    if dims.m_tx < 2:
        raise ValueError("off-diagonal covariance needs m_tx >= 2")
    if trials < 2:
        raise ValueError("trials must be >= 2")
    payloads = [
        (dims.m_tx, dims.n_rx, seed, start, count, rho, receiver)
        for start, count in _chunk_starts(trials, _chunk_size(dims))
    ]
    g = np.concatenate(_map_chunks(_sinr_chunk, payloads, workers), axis=0)
    centered = g - g.mean(axis=0)
    cov = centered.T @ centered / (trials - 1)
    m = dims.m_tx
    diag_avg = float(np.trace(cov) / m)
    offdiag_avg = float((cov.sum() - np.trace(cov)) / (m * (m - 1)))
    return diag_avg, offdiag_avg


_NOVIKOV_PATTERNS = (
    ("i=j=k=l", (0, 0, 0, 0), 2.0),
    ("i=j!=k=l", (0, 0, 1, 1), 1.0),
    ("i=l!=k=j", (0, 1, 1, 0), 1.0),
    ("all distinct", (0, 1, 2, 3), 0.0),
)


def novikov_fourth_moment_check(n_dim: int, trials: int,
                                seed: int) -> list[NovikovRow]:
    """Empirical E[h_i* h_j h_k* h_l] for CN(0,1/N) entries vs predictions.

    The Gaussian integration-by-parts identity gives
    (delta_ij delta_kl + delta_il delta_kj)/N^2, i.e. 2/N^2, 1/N^2, 1/N^2
    and 0 for the four index patterns.  ``empirical`` reports the real part
    of the sample mean; the z-score uses the full complex deviation.
    """
    if trials < 10_000:
        raise ValueError("trials must be >= 10^4")
    if n_dim < 4:
        raise ValueError("n_dim must be >= 4 so four distinct indices exist")
    # Only four vector components ever appear in the patterns.
    h = complex_gaussians(seed, _NOVIKOV_CONTEXT, 0, trials, 4) / math.sqrt(n_dim)
    rows = []
    for name, (i, j, k, l), numerator in _NOVIKOV_PATTERNS:
        x = h[:, i].conj() * h[:, j] * h[:, k].conj() * h[:, l]
        mean = x.mean()
        var = float(np.mean(np.abs(x - mean) ** 2))
        se = math.sqrt(var / trials)
        predicted = numerator / n_dim**2
        z = abs(mean - predicted) / se
        rows.append(NovikovRow(pattern=name, empirical=float(mean.real),
                               predicted=predicted, z_score=float(z)))
    return rows


def _trace_chunk(payload) -> np.ndarray:
    (n_dim, m_cols, seed, start, count, alpha) = payload
    h = complex_gaussians(seed, _TRACE_CONTEXT, start, count,
                          n_dim * m_cols).reshape(count, n_dim, m_cols)
    gram = np.einsum("bij,bik->bjk", h.conj(), h)
    lam = np.maximum(np.linalg.eigvalsh(gram), 0.0) / n_dim
    return (n_dim - m_cols) + (1.0 / (1.0 + alpha * lam)).sum(axis=1)


def estimate_trace_variance(n_dim: int, beta: float, alpha: float,
                            trials: int, seed: int,
                            workers: int = 1) -> float:
    """Empirical Var(Tr B), B = (I + alpha H H^H)^{-1}, H of size N x beta*N
    with CN(0,1/N) entries.

    Cross-checks the closed form
    :func:`linmimo.asymptotics.trace_variance_closed_form`.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    if trials < 2:
        raise ValueError("trials must be >= 2")
    m_cols = max(int(round(beta * n_dim)), 1)
    chunk = _chunk_size(SystemDims(min(m_cols, n_dim), max(m_cols, n_dim)))
    payloads = [
        (n_dim, m_cols, seed, start, count, alpha)
        for start, count in _chunk_starts(trials, chunk)
    ]
    x = np.concatenate(_map_chunks(_trace_chunk, payloads, workers))
    return float(x.var(ddof=1))


def higher_cumulant_decay_check(receiver: str, beta: float, rho: float,
                                n_list: Sequence[int], trials: int, seed: int,
                                workers: int = 1) -> list[tuple[int, float]]:
    """|skewness(I_N)| for each N in an ascending list of antenna counts.

    The mutual information is asymptotically Gaussian, so the magnitude of
    the skewness must decay as N grows.
    """
    if len(n_list) < 2:
        raise ValueError("n_list needs at least two sizes")
    arr = list(n_list)
    if any(nxt <= cur for cur, nxt in zip(arr, arr[1:])):
        raise ValueError("n_list must be strictly ascending")
    out = []
    for n in arr:
        m = max(int(round(beta * n)), 1)
        mom = estimate_info_moments(receiver, SystemDims(m, n), rho, trials,
                                    seed, workers)
        out.append((int(n), abs(mom.skewness)))
    return out
