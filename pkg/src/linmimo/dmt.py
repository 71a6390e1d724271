"""Diversity-multiplexing tradeoff curves and finite-rate diversity predictions.

A DMT curve gives the high-SNR outage exponent d as a function of the
multiplexing gain r (rate growing as r*log2(rho)).  The rate-to-diversity
mapping for the MMSE receiver at a fixed rate R (bpcu) goes through
t = M * 2^(-R/M); the integer m with m-1 < t <= m selects the predicted
diversity m*(m + N - M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from .channel import SystemDims

OPTIMAL_KIND = "optimal"
LINEAR_KIND = "linear"
PARALLEL_IID_KIND = "parallel_iid"


class EpsilonOutOfRange(ValueError):
    """Spherical-cap half-chord must lie in (0, sqrt(2))."""


@dataclass(frozen=True)
class DmtCurve:
    """Piecewise-linear (r, d) curve; d = 0 beyond the last breakpoint."""

    breakpoints: tuple[tuple[float, float], ...]
    kind: str

    def evaluate(self, r: float) -> float:
        rs = [p[0] for p in self.breakpoints]
        ds = [p[1] for p in self.breakpoints]
        if r < 0:
            raise ValueError("multiplexing gain must be nonnegative")
        if r >= rs[-1]:
            return ds[-1] if r == rs[-1] else 0.0
        return float(np.interp(r, rs, ds))


@dataclass(frozen=True)
class DiversityPrediction:
    """Finite-rate MMSE diversity prediction for spatial encoding."""

    rate_bits: float
    t_frak: float                 # M * 2^(-R/M)
    m: int                        # unique integer with m-1 < t <= m
    d_pred: int                   # m * (m + N - M)
    d_tilde: tuple[int, ...]      # i*(i + N - M) for i = 1..M


def dmt_optimal(dims: SystemDims) -> DmtCurve:
    """Optimal-receiver DMT: breakpoints (k, (M-k)(N-k)), k = 0..min(M,N)."""
    m, n = dims.m_tx, dims.n_rx
    pts = tuple((float(k), float((m - k) * (n - k))) for k in range(min(m, n) + 1))
    return DmtCurve(breakpoints=pts, kind=OPTIMAL_KIND)


def dmt_linear(dims: SystemDims, r: float) -> float:
    """Linear-receiver (ZF or MMSE) DMT: (N - M + 1) * (1 - r/M)^+."""
    if r < 0:
        raise ValueError("multiplexing gain must be nonnegative")
    m, n = dims.m_tx, dims.n_rx
    return (n - m + 1) * max(1.0 - r / m, 0.0)


def dmt_linear_curve(dims: SystemDims) -> DmtCurve:
    m, n = dims.m_tx, dims.n_rx
    return DmtCurve(breakpoints=((0.0, float(n - m + 1)), (float(m), 0.0)),
                    kind=LINEAR_KIND)


def dmt_parallel_iid(dims: SystemDims, r: float) -> float:
    """(N - M + 1) * (M - r)^+: what independent per-stream gains would give.

    A counterfactual upper curve; the actual per-stream gains are strongly
    correlated through the minimum eigenvalue, which is why coding across
    antennas cannot beat :func:`dmt_linear`.
    """
    if r < 0:
        raise ValueError("multiplexing gain must be nonnegative")
    m, n = dims.m_tx, dims.n_rx
    return (n - m + 1) * max(float(m) - r, 0.0)


def dmt_parallel_iid_curve(dims: SystemDims) -> DmtCurve:
    m, n = dims.m_tx, dims.n_rx
    return DmtCurve(breakpoints=((0.0, float((n - m + 1) * m)), (float(m), 0.0)),
                    kind=PARALLEL_IID_KIND)


def finite_rate_prediction(dims: SystemDims, rate_bits: float) -> DiversityPrediction:
    """Predicted MMSE coded diversity m*(m+N-M) at fixed rate (bpcu).

    t = M * 2^(-R/M) always lies in (0, M], so m = ceil(t) is in 1..M; rates
    above M*log2(M) all map to m = 1.
    """
    if rate_bits <= 0:
        raise ValueError(f"rate_bits must be positive, got {rate_bits}")
    m_tx, n_rx = dims.m_tx, dims.n_rx
    t = m_tx * 2.0 ** (-rate_bits / m_tx)
    m = min(max(int(math.ceil(t)), 1), m_tx)
    return DiversityPrediction(
        rate_bits=rate_bits,
        t_frak=t,
        m=m,
        d_pred=m * (m + n_rx - m_tx),
        d_tilde=tuple(i * (i + n_rx - m_tx) for i in range(1, m_tx + 1)),
    )


def spherical_cap_probability(m_dim: int, epsilon: float) -> float:
    """Probability that a uniform point on the real unit M-sphere falls in
    the cap cut out by a radius-epsilon ball centred at a surface point.

    The cap half-angle is phi = arctan(eps*sqrt(1-eps^2/4)/(1-eps^2/2))
    (equivalently cos(phi) = 1 - eps^2/2) and the surface-area ratio is

        [(M-1) pi^((M-1)/2) / Gamma((M+1)/2)] * int_0^phi sin^(M-2) dtheta
        ---------------------------------------------------------------- .
                      M pi^(M/2) / Gamma(M/2 + 1)

    Strictly positive for any epsilon in (0, sqrt(2)); this is the quantity
    that keeps the high-SNR outage lower bound alive.
    """
    if m_dim < 2:
        raise ValueError(f"m_dim must be >= 2, got {m_dim}")
    if not 0.0 < epsilon < math.sqrt(2.0):
        raise EpsilonOutOfRange(
            f"epsilon must be in (0, sqrt(2)), got {epsilon}"
        )
    phi = math.atan2(epsilon * math.sqrt(1.0 - epsilon**2 / 4.0),
                     1.0 - epsilon**2 / 2.0)
    integral, _ = quad(lambda th: math.sin(th) ** (m_dim - 2), 0.0, phi)
    log_const = (math.log(m_dim - 1) - math.log(m_dim)
                 - 0.5 * math.log(math.pi)
                 + gammaln(m_dim / 2.0 + 1.0) - gammaln((m_dim + 1) / 2.0))
    return math.exp(log_const) * integral
