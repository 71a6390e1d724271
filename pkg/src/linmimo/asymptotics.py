"""Closed-form large-antenna statistics of linear and optimal receivers.

Everything here is a deterministic function of (alpha, beta) or of
(dims, rho), where alpha = rho/beta converts the CN(0,1) sampling convention
of :mod:`linmimo.channel` to the normalized-variance convention the
large-system limits are written in.  Information quantities are in nats.

The g-moments are the normalized trace limits
    g_m(alpha, beta) = lim alpha^m E[(1/N) Tr (I + alpha W W^H)^{-m}]
for an N x (beta N) matrix W with CN(0,1/N) entries; g1 is the limiting MMSE
SINR and satisfies the fixed point g1 = alpha / (1 + alpha*beta/(1+g1)).
Derivatives of g1 are implemented analytically and locked by
finite-difference tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import erfc

from .channel import SystemDims
from .receivers import MMSE, ZF

_FIXED_POINT_MAX_ITER = 100_000

# Gaussian-approximation validity heuristic: at beta = 1 the predicted
# variance grows like rho and the approximation degrades once the variance
# stops being O(1); flag results with c2 above this many nats^2 at beta = 1.
_C2_VALIDITY_CAP = 1.0


class BetaOneUnsupported(ValueError):
    """ZF large-system formulas are undefined at beta = 1 (M = N)."""


class NonpositiveVariance(ValueError):
    """Gaussian outage needs a strictly positive variance."""


class NonConvergence(RuntimeError):
    """Fixed-point iteration failed to reach tolerance."""


@dataclass(frozen=True)
class GMoments:
    """g1, g2, g3 evaluated at a given (alpha, beta_eff)."""

    g1: float
    g2: float
    g3: float
    alpha: float
    beta_eff: float


@dataclass(frozen=True)
class AsymptoticMoments:
    """Mean/variance of the mutual information and SINR covariance scales.

    c1, c2 are the mean (nats) and variance (nats^2) of the per-realization
    mutual information; v_d/M and v_od/M^2 are the per-stream SINR variance
    and cross-covariance; mean_sinr is E[gamma_1] including its 1/N
    correction.  ``valid`` is False where the Gaussian approximation is
    documented to break down (beta = 1 with large predicted variance).
    """

    c1: float
    c2: float
    v_d: float
    v_od: float
    mean_sinr: float
    receiver: str
    valid: bool


@dataclass(frozen=True)
class OptimalAsymptotics:
    """Per-antenna mean mu and variance nu2 of the log-det mutual information."""

    mu: float
    nu2: float


def _check_alpha_beta(alpha: float, beta: float) -> None:
    # beta = 0 is admitted as the degenerate no-interference limit: a matrix
    # with zero columns has (1/N) Tr(I + alpha W W^H)^{-m} = 1 exactly, so
    # g_m(alpha, 0) = alpha^m.  The 1/N-shifted aspect ratios beta - 1/N and
    # beta - 2/N land there for M = 1 and M = 2.
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")


def g1_mmse(alpha: float, beta: float) -> float:
    """Limiting MMSE SINR: 0.5*[a(1-b) - 1 + sqrt((a(1-b)-1)^2 + 4a)]."""
    _check_alpha_beta(alpha, beta)
    t = alpha * (1.0 - beta) - 1.0
    return 0.5 * (t + math.sqrt(t * t + 4.0 * alpha))


def g1_fixed_point_oracle(alpha: float, beta: float, tol: float = 1e-14) -> float:
    """Iterate g <- alpha / (1 + alpha*beta/(1+g)) to convergence.

    Independent oracle for :func:`g1_mmse`; the map is a contraction on
    [0, alpha] for the admissible (alpha, beta).
    """
    _check_alpha_beta(alpha, beta)
    g = alpha
    for _ in range(_FIXED_POINT_MAX_ITER):
        g_next = alpha / (1.0 + alpha * beta / (1.0 + g))
        if abs(g_next - g) <= tol * (1.0 + abs(g_next)):
            return g_next
        g = g_next
    raise NonConvergence(
        f"fixed point not reached at (alpha={alpha}, beta={beta}, tol={tol})"
    )


def _dg1_dalpha(alpha: float, beta: float) -> float:
    t = alpha * (1.0 - beta) - 1.0
    s = math.sqrt(t * t + 4.0 * alpha)
    return 0.5 * ((1.0 - beta) + (t * (1.0 - beta) + 2.0) / s)


def _d2g1_dalpha2(alpha: float, beta: float) -> float:
    t = alpha * (1.0 - beta) - 1.0
    s = math.sqrt(t * t + 4.0 * alpha)
    u = t * (1.0 - beta) + 2.0
    return 0.5 * ((1.0 - beta) ** 2 / s - u * u / s**3)


def g1_beta_derivative(alpha: float, beta: float) -> float:
    """d g1 / d beta = -(alpha/2) * [1 + (a(1-b)-1)/sqrt((a(1-b)-1)^2+4a)]."""
    _check_alpha_beta(alpha, beta)
    if alpha == 0.0:
        return 0.0
    t = alpha * (1.0 - beta) - 1.0
    s = math.sqrt(t * t + 4.0 * alpha)
    return -0.5 * alpha * (1.0 + t / s)


def g_moments(alpha: float, beta: float) -> GMoments:
    """g1 plus the higher moments g2 = a^2 g1' and g3 = (a^3/2)(a g1'' + 2 g1')."""
    _check_alpha_beta(alpha, beta)
    g2 = alpha**2 * _dg1_dalpha(alpha, beta)
    g3 = 0.5 * alpha**3 * (alpha * _d2g1_dalpha2(alpha, beta)
                           + 2.0 * _dg1_dalpha(alpha, beta))
    return GMoments(g1=g1_mmse(alpha, beta), g2=g2, g3=g3,
                    alpha=alpha, beta_eff=beta)


def _vod_mmse(alpha: float, beta: float, n_rx: int) -> float:
    # The near-cancelling combination of g2^2 and g3 terms plus the
    # eigenvalue-fluctuation term, all at the doubly-reduced aspect ratio
    # beta - 2/N of the matrix with two columns struck out (exactly 0 when
    # M = 2).
    b2 = beta - 2.0 / n_rx
    gm = g_moments(alpha, b2)
    fluct = b2 * alpha**4 / (1.0 + 2.0 * alpha * (1.0 + b2)
                             + alpha**2 * (1.0 - b2) ** 2) ** 2
    return beta**2 * (3.0 * gm.g2**2 / (1.0 + gm.g1) ** 2
                      - 2.0 * gm.g3 / (1.0 + gm.g1) + fluct)


def mmse_moments(dims: SystemDims, rho: float) -> AsymptoticMoments:
    """Large-N mean/variance of the MMSE mutual information, with 1/N shifts.

    The aspect ratio enters as beta - 1/N in E[gamma_1], v_d and the
    variance (the receiver matrix strikes one column), and as beta - 2/N
    inside v_od (two columns struck).
    """
    m, n = dims.m_tx, dims.n_rx
    beta = dims.beta()
    alpha = rho / beta
    b1 = beta - 1.0 / n
    v_d = beta * g_moments(alpha, b1).g2
    v_od = _vod_mmse(alpha, beta, n) if m >= 2 else 0.0
    g1 = g1_mmse(alpha, beta)
    c1 = (m * math.log1p(g1)
          - beta * g1_beta_derivative(alpha, beta) / (1.0 + g1)
          - v_d / (2.0 * (1.0 + g1) ** 2))
    g1_shift = g1_mmse(alpha, b1)
    c2 = (v_d + v_od) / (1.0 + g1_shift) ** 2
    mean_sinr = g1_shift
    valid = beta < 1.0 or c2 <= _C2_VALIDITY_CAP
    return AsymptoticMoments(c1=c1, c2=c2, v_d=v_d, v_od=v_od,
                             mean_sinr=mean_sinr, receiver=MMSE, valid=valid)


def zf_moments(dims: SystemDims, rho: float) -> AsymptoticMoments:
    """Large-N mean/variance of the ZF mutual information (beta < 1 only)."""
    m, n = dims.m_tx, dims.n_rx
    beta = dims.beta()
    if beta >= 1.0:
        raise BetaOneUnsupported(
            "ZF large-system statistics are undefined at beta = 1: the SINR "
            "covariance matrix acquires (narrowly) negative eigenvalues"
        )
    alpha = rho / beta
    a1b = alpha * (1.0 - beta)
    c1 = (m * math.log1p(a1b)
          + alpha * beta * (1.0 + a1b / 2.0) / (1.0 + a1b) ** 2)
    shift = alpha * (1.0 - beta + 1.0 / n)
    c2 = beta * alpha**2 * (1.0 + 1.0 / n) / (1.0 + shift) ** 2
    v_d = alpha**2 * beta * (1.0 - beta + 1.0 / n)
    v_od = alpha**2 * beta**2
    return AsymptoticMoments(c1=c1, c2=c2, v_d=v_d, v_od=v_od,
                             mean_sinr=shift, receiver=ZF, valid=True)


@dataclass(frozen=True)
class SinrCovariance:
    """Exchangeable SINR covariance: common diagonal, common off-diagonal."""

    diag: float
    offdiag: float
    eig_large: float
    eig_small: float


def sinr_covariance_matrix(receiver: str, dims: SystemDims,
                           rho: float) -> SinrCovariance:
    """Covariance scales Var(gamma_k) = v_d/M, Cov = v_od/M^2 and eigenvalues.

    The M x M covariance matrix with constant diagonal d and constant
    off-diagonal o has one eigenvalue d + (M-1)o and M-1 eigenvalues d - o.
    """
    if receiver == MMSE:
        mom = mmse_moments(dims, rho)
    elif receiver == ZF:
        mom = zf_moments(dims, rho)
    else:
        raise ValueError(f"receiver must be {ZF!r} or {MMSE!r}, got {receiver!r}")
    m = dims.m_tx
    diag = mom.v_d / m
    off = mom.v_od / m**2
    return SinrCovariance(diag=diag, offdiag=off,
                          eig_large=diag + (m - 1) * off,
                          eig_small=diag - off)


def optimal_asymptotics(dims: SystemDims, rho: float) -> OptimalAsymptotics:
    """Per-antenna mean mu and variance nu2 of log det(I + (rho/M) H H^H)."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    beta = dims.beta()
    alpha = rho / beta
    g1 = g1_mmse(alpha, beta)
    # 1 - a(1-b) + g1 equals alpha/g1 via the fixed point, so the argument
    # of the second log is strictly positive for alpha > 0.
    mu = (math.log1p(g1)
          + math.log(1.0 - alpha * (1.0 - beta) + g1) / beta
          + g1 / (alpha * beta) - 1.0 / beta)
    nu2 = -math.log(1.0 - (1.0 - g1 / alpha) ** 2 / beta)
    return OptimalAsymptotics(mu=mu, nu2=nu2)


def gaussian_outage(rate_nats: float, moments) -> float:
    """Gaussian outage approximation P(I <= R) = Q((c1 - R)/sqrt(c2)).

    ``moments`` is anything with c1/c2 attributes (e.g. AsymptoticMoments)
    or a (c1, c2) pair.
    """
    if hasattr(moments, "c1"):
        c1, c2 = moments.c1, moments.c2
    else:
        c1, c2 = moments
    if c2 <= 0:
        raise NonpositiveVariance(f"c2 must be > 0, got {c2}")
    x = (c1 - rate_nats) / math.sqrt(c2)
    return 0.5 * erfc(x / math.sqrt(2.0))


def trace_variance_closed_form(alpha: float, beta: float) -> float:
    """Var(Tr (I + alpha W W^H)^{-1}) in the large-N limit.

    alpha^2 beta / (1 + 2 alpha (1+beta) + alpha^2 (1-beta)^2)^2, an O(1)
    quantity reflecting the strong eigenvalue correlations.
    """
    _check_alpha_beta(alpha, beta)
    den = 1.0 + 2.0 * alpha * (1.0 + beta) + alpha**2 * (1.0 - beta) ** 2
    return alpha**2 * beta / den**2


def mp_support(beta: float) -> tuple[float, float]:
    """Support edges ((1-sqrt(beta))^2, (1+sqrt(beta))^2) of the limit spectrum."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must be in (0, 1], got {beta}")
    r = math.sqrt(beta)
    return ((1.0 - r) ** 2, (1.0 + r) ** 2)


def high_snr_gaussian_exponent(dims: SystemDims, rho: float, r_mult: float) -> float:
    """Outage exponent the Gaussian approximation predicts at high SNR.

    (M - r)^2 * ln(rho) / (2 |ln(1-beta)|) for beta < 1 and (M - r)^2 at
    beta = 1.  A diagnostic: for beta < 1 this grows without bound in rho,
    wildly overstating the true diversity (at most M*N), because the
    approximation ignores the near-zero eigenvalues that dominate deep
    outage.
    """
    beta = dims.beta()
    m = dims.m_tx
    if beta >= 1.0:
        return float((m - r_mult) ** 2)
    if rho <= 1.0:
        raise ValueError("rho must exceed 1 for the beta < 1 high-SNR form")
    return (m - r_mult) ** 2 * math.log(rho) / (2.0 * abs(math.log1p(-beta)))
