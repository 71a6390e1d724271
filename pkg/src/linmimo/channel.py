"""i.i.d. Rayleigh MIMO channel sampling with reproducible counter-based streams.

Entries of the channel matrix H (N receive rows, M transmit columns) are
complex Gaussian CN(0,1).  Every trial owns a fixed, disjoint range of Philox
counter blocks, so the sample produced for ``(master_seed, trial_index)`` is a
pure function of those two integers: workers can draw trials in any order, in
any batch size, on any number of processes, and always reproduce the same
matrices bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.random import Generator, Philox

# Key word 2 of the Philox key; keeps channel draws disjoint from other
# samplers (Gaussian vectors, sphere points) that reuse the same master seed.
_CHANNEL_CONTEXT = 0

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SystemDims:
    """Antenna configuration: M transmit, N receive, with N >= M."""

    m_tx: int
    n_rx: int

    def __post_init__(self) -> None:
        if self.m_tx < 1:
            raise ValueError(f"m_tx must be >= 1, got {self.m_tx}")
        if self.n_rx < self.m_tx:
            raise ValueError(
                f"n_rx must be >= m_tx, got n_rx={self.n_rx} < m_tx={self.m_tx}"
            )

    def beta(self) -> float:
        """Aspect ratio M/N, in (0, 1]."""
        return self.m_tx / self.n_rx


@dataclass(frozen=True)
class RngStream:
    """Addresses the random draws of one Monte Carlo trial.

    The stream is keyed by ``(master_seed, trial_index)`` only; the value
    sequence never depends on scheduling or on how many other streams are
    drawn concurrently.
    """

    master_seed: int
    trial_index: int

    def __post_init__(self) -> None:
        if self.trial_index < 0:
            raise ValueError("trial_index must be nonnegative")

    @staticmethod
    def batch(master_seed: int, trials: int) -> list["RngStream"]:
        """Streams for trials 0..trials-1 under one master seed."""
        return [RngStream(master_seed, t) for t in range(trials)]


@dataclass(frozen=True)
class ChannelSample:
    """One channel realization with its Gram matrix and ascending spectrum."""

    entries: np.ndarray      # (N, M) complex128
    gram: np.ndarray         # (M, M) Hermitian PSD, H^H H
    eigenvalues: np.ndarray  # (M,) real, ascending, clamped at 0


def _blocks_per_trial(values_per_trial: int) -> int:
    # One complex value consumes two uniform doubles; Philox emits 4 doubles
    # per counter block.  Rounding up wastes at most 3 doubles per trial but
    # keeps every trial block-aligned, which is what makes batched and
    # single-trial generation bit-identical.
    return -(-2 * values_per_trial // 4)


def complex_gaussians(master_seed: int, context: int, start_trial: int,
                      count: int, values_per_trial: int) -> np.ndarray:
    """CN(0,1) values for ``count`` consecutive trials, shape (count, values).

    Trial ``t`` owns Philox counter blocks [t*k, (t+1)*k) under the key
    ``(master_seed, context)``, so the output rows are a pure function of
    the trial index.  Each value consumes exactly two uniforms via the
    amplitude/phase transform (|h|^2 = -log(1-u1) ~ Exp(1), phase =
    2*pi*u2); the fixed per-value bit budget is what keeps the counter
    layout intact -- ziggurat-style normal generation, with its rejection
    steps, would not.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return np.empty((0, values_per_trial), dtype=np.complex128)
    k = _blocks_per_trial(values_per_trial)
    key = np.array([master_seed & _MASK64, context & _MASK64], dtype=np.uint64)
    bg = Philox(key=key)
    bg.advance(start_trial * k)
    u = Generator(bg).random(count * 4 * k).reshape(count, 4 * k)
    u1 = u[:, :values_per_trial]
    u2 = u[:, values_per_trial: 2 * values_per_trial]
    return np.sqrt(-np.log1p(-u1)) * np.exp(2j * np.pi * u2)


def sample_entries(dims: SystemDims, master_seed: int, start_trial: int,
                   count: int) -> np.ndarray:
    """Channel matrices for trials [start_trial, start_trial+count), (count,N,M)."""
    h = complex_gaussians(master_seed, _CHANNEL_CONTEXT, start_trial, count,
                          dims.n_rx * dims.m_tx)
    return h.reshape(-1, dims.n_rx, dims.m_tx)


def gram_spectrum(entries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched (gram, ascending eigenvalues) of H^H H for (B,N,M) entries.

    The eigenproblem is solved on the M x M Gram matrix (M <= N), and tiny
    negative eigenvalues from roundoff are clamped to zero.
    """
    gram = np.einsum("bij,bik->bjk", entries.conj(), entries)
    w = np.linalg.eigvalsh(gram)
    return gram, np.maximum(w, 0.0)


def sample_channel(dims: SystemDims, stream: RngStream) -> ChannelSample:
    """Draw the channel realization owned by ``stream``.

    Repeated calls with equal (master_seed, trial_index) return bit-identical
    matrices, and the result equals the corresponding row of any batched draw
    covering the same trial index.
    """
    h = sample_entries(dims, stream.master_seed, stream.trial_index, 1)[0]
    gram = h.conj().T @ h
    w = np.maximum(np.linalg.eigvalsh(gram), 0.0)
    return ChannelSample(entries=h, gram=gram, eigenvalues=w)


def _contiguous_runs(indices: np.ndarray) -> Iterable[tuple[int, int]]:
    """Yield (start, stop) over maximal runs of consecutive integers."""
    start = indices[0]
    prev = start
    for t in indices[1:]:
        if t != prev + 1:
            yield int(start), int(prev) + 1
            start = t
        prev = t
    yield int(start), int(prev) + 1


def min_eigenvalue_cdf_probe(dims: SystemDims, stream_batch: Sequence[RngStream],
                             threshold: float) -> float:
    """Empirical P(lambda_min(H^H H) <= threshold) over the given streams.

    Used to measure the small-argument exponent of the minimum-eigenvalue
    CDF (a log-log slope of N - M + 1 for small thresholds).
    """
    if len(stream_batch) == 0:
        raise ValueError("stream_batch must contain at least one stream")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    hits = 0
    total = 0
    by_seed: dict[int, list[int]] = {}
    for s in stream_batch:
        by_seed.setdefault(s.master_seed, []).append(s.trial_index)
    for seed, idx in by_seed.items():
        order = np.sort(np.asarray(idx, dtype=np.int64))
        for start, stop in _contiguous_runs(order):
            h = sample_entries(dims, seed, start, stop - start)
            _, w = gram_spectrum(h)
            hits += int(np.count_nonzero(w[:, 0] <= threshold))
            total += stop - start
    return hits / total
