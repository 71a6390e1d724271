"""Self-contained invariant suites behind the CLI ``validate`` command.

Each suite runs a deterministic, desk-scale experiment and returns a
``SuiteResult`` whose details make the pass/fail decision auditable:
Monte Carlo checks report the measured values, predictions and the margin
actually used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .channel import SystemDims
from .asymptotics import (
    g1_beta_derivative,
    g1_fixed_point_oracle,
    g1_mmse,
    g_moments,
    trace_variance_closed_form,
)
from .montecarlo import (
    estimate_info_moments,
    estimate_trace_variance,
    novikov_fourth_moment_check,
    _sinr_chunk,
)
from .receivers import MMSE, ZF


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)


def novikov_suite(n_dim: int = 100, trials: int = 1_000_000,
                  seed: int = 1002) -> SuiteResult:
    """Fourth-moment identity: every index pattern within 3 standard errors."""
    rows = novikov_fourth_moment_check(n_dim, trials, seed)
    details = {
        "n_dim": n_dim,
        "trials": trials,
        "rows": [
            {"pattern": r.pattern, "empirical": r.empirical,
             "predicted": r.predicted, "z_score": r.z_score}
            for r in rows
        ],
    }
    return SuiteResult("novikov", all(r.z_score <= 3.0 for r in rows), details)


def trace_variance_suite(n_dim: int = 64, beta: float = 0.5, alpha: float = 1.0,
                         trials: int = 100_000, seed: int = 1003,
                         rel_tol: float = 0.05, workers: int = 1) -> SuiteResult:
    """Var(Tr B) against the closed form, within 5% relative."""
    mc = estimate_trace_variance(n_dim, beta, alpha, trials, seed, workers)
    cf = trace_variance_closed_form(alpha, beta)
    rel = abs(mc - cf) / cf
    return SuiteResult("trace_variance", bool(rel <= rel_tol), {
        "n_dim": n_dim, "beta": beta, "alpha": alpha, "trials": trials,
        "monte_carlo": mc, "closed_form": cf, "rel_error": rel,
        "rel_tol": rel_tol,
    })


def cumulant_decay_suite(beta: float = 0.5, snr_db: float = 3.0,
                         n_small: int = 8, n_large: int = 64,
                         trials: int = 100_000, seed: int = 1004,
                         workers: int = 1) -> SuiteResult:
    """|skewness(I_N)| strictly smaller at the larger N, beyond joint noise."""
    rho = 10.0 ** (snr_db / 10.0)
    out = {}
    for n in (n_small, n_large):
        dims = SystemDims(max(int(round(beta * n)), 1), n)
        out[n] = estimate_info_moments(MMSE, dims, rho, trials, seed, workers)
    margin = abs(out[n_small].skewness) - abs(out[n_large].skewness)
    noise = out[n_small].se_skewness + out[n_large].se_skewness
    return SuiteResult("cumulant_decay", bool(margin > noise), {
        "beta": beta, "snr_db": snr_db, "trials": trials,
        "skew_small_n": out[n_small].skewness,
        "skew_large_n": out[n_large].skewness,
        "margin": margin, "combined_se": noise,
        "n_small": n_small, "n_large": n_large,
    })


def gamma_marginal_suite(m_tx: int = 2, n_rx: int = 8, rho: float = 10.0,
                         trials: int = 100_000, seed: int = 1005,
                         ks_tol: float = 0.01) -> SuiteResult:
    """Kolmogorov-Smirnov fit of gamma_1^zf/(rho/M) to Gamma(N-M+1, 1)."""
    gam = _sinr_chunk((m_tx, n_rx, seed, 0, trials, rho, ZF))[:, 0]
    scaled = gam / (rho / m_tx)
    shape = n_rx - m_tx + 1
    ks = stats.kstest(scaled, "gamma", args=(shape,)).statistic
    return SuiteResult("gamma_marginal", bool(ks <= ks_tol), {
        "m_tx": m_tx, "n_rx": n_rx, "rho": rho, "trials": trials,
        "gamma_shape": shape, "ks_distance": float(ks), "ks_tol": ks_tol,
    })


def _g1_raw(a: float, b: float) -> float:
    # Closed form without domain checks; analytic in b, so the stencil may
    # poke slightly outside [0, 1].
    t = a * (1.0 - b) - 1.0
    return 0.5 * (t + math.sqrt(t * t + 4.0 * a))


def _d1_4th(f, x: float, h: float) -> float:
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _d2_4th(f, x: float, h: float) -> float:
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x)
            + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def fixed_points_suite(grid: int = 20, seed: int = 1006) -> SuiteResult:
    """Closed-form g1 vs oracle iteration and analytic vs numeric derivatives.

    Derivatives are checked against fourth-order central stencils, which keep
    the truncation error far below the 1e-6 relative gate across the grid.
    """
    alphas = np.logspace(-2, 3, grid)
    betas = np.linspace(0.05, 1.0, grid)
    worst_fp = 0.0
    worst_d = 0.0
    for a in alphas:
        for b in betas:
            g = g1_mmse(a, b)
            worst_fp = max(worst_fp,
                           abs(g - g1_fixed_point_oracle(a, b, 1e-15)) / (1 + g))
            ha = max(a, 1.0) * 1e-3
            fd1 = _d1_4th(lambda x: _g1_raw(x, b), a, ha)
            fd2 = _d2_4th(lambda x: _g1_raw(x, b), a, ha)
            gm = g_moments(a, b)
            d2 = abs(gm.g2 - a * a * fd1) / max(abs(gm.g2), 1e-30)
            g3_fd = 0.5 * a**3 * (a * fd2 + 2 * fd1)
            d3 = abs(gm.g3 - g3_fd) / max(abs(gm.g3), 1e-30)
            fdb = _d1_4th(lambda x: _g1_raw(a, x), b, 1e-4)
            db = abs(g1_beta_derivative(a, b) - fdb) / max(abs(fdb), 1e-30)
            worst_d = max(worst_d, d2, d3, db)
    return SuiteResult("fixed_points", bool(worst_fp <= 1e-12 and worst_d <= 1e-6), {
        "grid": f"{grid}x{grid}",
        "worst_fixed_point_residual": worst_fp,
        "worst_derivative_rel_error": worst_d,
    })


SUITES = {
    "novikov": novikov_suite,
    "trace_variance": trace_variance_suite,
    "cumulant_decay": cumulant_decay_suite,
    "gamma_marginal": gamma_marginal_suite,
    "fixed_points": fixed_points_suite,
}


def run_suites(names, workers: int = 1) -> list[SuiteResult]:
    results = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; known: {sorted(SUITES)}")
        fn = SUITES[name]
        if name in ("trace_variance", "cumulant_decay"):
            results.append(fn(workers=workers))
        else:
            results.append(fn())
    return results
