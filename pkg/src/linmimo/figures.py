"""Reference figure datasets: outage curves, moment grids and CDF overlays.

Each figure has a shipped JSON configuration sized for a desktop run (a few
minutes at most).  ``reproduce`` computes the dataset rows; ``render`` draws
the companion PNG next to the CSV.  The deep-tail regions of the original
outage plots (probabilities below ~1e-6) are out of reach at these trial
budgets; raise ``trials`` in the config to push the floor down.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .channel import SystemDims
from .receivers import LN2, MMSE, OPTIMAL, ZF, bits_to_nats
from .asymptotics import mmse_moments, optimal_asymptotics
from .montecarlo import SchemeSpec, info_samples, sweep_outage_many

# Fields rendered in 6-significant-digit scientific notation by the CLI.
PROB_FIELDS = {"p_hat", "ci_low", "ci_high", "p_out_gaussian",
               "cdf_analytic", "cdf_mc"}

FIGURES = (2, 3, 4, 5, 6, 7, 8)


@dataclass
class FigureResult:
    figure: int
    config: dict
    fieldnames: list[str]
    rows: list[dict] = field(default_factory=list)
    csv_path: str = ""
    png_path: str = ""


def load_config(figure: int) -> dict:
    ref = resources.files("linmimo").joinpath(f"configs/fig{figure}.json")
    return json.loads(ref.read_text())


def _outage_rows(systems, rates, schemes, snr_db, trials, seed, workers):
    rows = []
    for m_tx, n_rx in systems:
        dims = SystemDims(m_tx, n_rx)
        specs = [SchemeSpec(a, r) for a, r in schemes]
        for rate in rates:
            table = sweep_outage_many(specs, dims, snr_db, rate, trials,
                                      seed, workers)
            for spec in specs:
                for db, est in table[spec.label()]:
                    rows.append({
                        "m_tx": m_tx, "n_rx": n_rx, "rate_bpcu": rate,
                        "architecture": spec.architecture,
                        "receiver": spec.receiver, "snr_db": db,
                        "p_hat": est.p_hat, "ci_low": est.ci_low,
                        "ci_high": est.ci_high, "trials": est.trials,
                    })
    return rows


_OUTAGE_FIELDS = ["m_tx", "n_rx", "rate_bpcu", "architecture", "receiver",
                  "snr_db", "p_hat", "ci_low", "ci_high", "trials"]


def _fig_outage(figure: int, cfg: dict, workers: int) -> FigureResult:
    rows = _outage_rows(cfg["systems"], cfg["rates_bpcu"], cfg["schemes"],
                        cfg["snr_db"], cfg["trials"], cfg["seed"], workers)
    return FigureResult(figure=figure, config=cfg, fieldnames=_OUTAGE_FIELDS,
                        rows=rows)


def _fig_moments(figure: int, cfg: dict, workers: int) -> FigureResult:
    per_antenna = figure == 5
    rows = []
    for m_tx in cfg["m_tx_list"]:
        for beta in cfg["beta"]:
            n_rx = max(int(round(m_tx / beta)), m_tx)
            dims = SystemDims(m_tx, n_rx)
            for db in cfg["snr_db"]:
                rho = 10.0 ** (db / 10.0)
                mom = mmse_moments(dims, rho)
                x = info_samples(MMSE, dims, rho, cfg["trials"], cfg["seed"],
                                 workers)
                row = {"m_tx": m_tx, "n_rx": n_rx, "beta": dims.beta(),
                       "snr_db": db, "valid": mom.valid,
                       "trials": cfg["trials"]}
                if per_antenna:
                    row["c1_per_antenna"] = mom.c1 / m_tx
                    row["c1_per_antenna_mc"] = float(x.mean()) / m_tx
                else:
                    row["c2"] = mom.c2
                    row["c2_mc"] = float(x.var(ddof=1))
                rows.append(row)
    fields = ["m_tx", "n_rx", "beta", "snr_db"]
    fields += (["c1_per_antenna", "c1_per_antenna_mc"] if per_antenna
               else ["c2", "c2_mc"])
    fields += ["valid", "trials"]
    return FigureResult(figure=figure, config=cfg, fieldnames=fields,
                        rows=rows)


def _cdf_moments(receiver: str, dims: SystemDims, rho: float):
    if receiver == OPTIMAL:
        o = optimal_asymptotics(dims, rho)
        return dims.m_tx * o.mu, o.nu2
    mom = mmse_moments(dims, rho)
    return mom.c1, mom.c2


def _fig_cdf(figure: int, cfg: dict, workers: int) -> FigureResult:
    from scipy.special import erfc
    rows = []
    for m_tx, n_rx in cfg["systems"]:
        dims = SystemDims(m_tx, n_rx)
        for db in cfg["snr_db"]:
            rho = 10.0 ** (db / 10.0)
            for receiver in cfg["receivers"]:
                c1, c2 = _cdf_moments(receiver, dims, rho)
                sigma = math.sqrt(c2)
                grid = np.linspace(c1 - 4 * sigma, c1 + 4 * sigma,
                                   cfg["cdf_points"])
                x = np.sort(info_samples(receiver, dims, rho, cfg["trials"],
                                         cfg["seed"], workers))
                emp = np.searchsorted(x, grid, side="right") / len(x)
                ana = 0.5 * erfc((c1 - grid) / (sigma * math.sqrt(2.0)))
                for r_nats, a, e in zip(grid, ana, emp):
                    rows.append({
                        "m_tx": m_tx, "n_rx": n_rx, "snr_db": db,
                        "receiver": receiver, "rate_bpcu": r_nats / LN2,
                        "cdf_analytic": float(a), "cdf_mc": float(e),
                        "trials": cfg["trials"],
                    })
    fields = ["m_tx", "n_rx", "snr_db", "receiver", "rate_bpcu",
              "cdf_analytic", "cdf_mc", "trials"]
    return FigureResult(figure=figure, config=cfg, fieldnames=fields,
                        rows=rows)


_BUILDERS = {
    2: _fig_outage, 3: _fig_outage, 4: _fig_outage,
    5: _fig_moments, 6: _fig_moments,
    7: _fig_cdf, 8: _fig_cdf,
}


def reproduce(figure: int, trials_override: int | None = None,
              seed_override: int | None = None, workers: int = 1,
              out_dir: str = ".") -> FigureResult:
    if figure not in FIGURES:
        raise KeyError(f"unknown figure {figure}; choose from {FIGURES}")
    cfg = load_config(figure)
    if trials_override is not None:
        cfg["trials"] = trials_override
    if seed_override is not None:
        cfg["seed"] = seed_override
    result = _BUILDERS[figure](figure, cfg, workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result.csv_path = str(out / f"fig{figure}.csv")
    result.png_path = str(out / f"fig{figure}.png")
    return result


def _group(rows, keys):
    seen = {}
    for row in rows:
        seen.setdefault(tuple(row[k] for k in keys), []).append(row)
    return seen


def render(result: FigureResult) -> str:
    """Draw the figure PNG next to the CSV; returns the PNG path."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.5, 5.5))
    n = result.figure
    if n in (2, 3, 4):
        groups = _group(result.rows,
                        ["m_tx", "n_rx", "rate_bpcu", "architecture",
                         "receiver"])
        for (m, nn, rate, arch, rx), rows in groups.items():
            xs = [r["snr_db"] for r in rows]
            ys = [r["p_hat"] for r in rows]
            label = f"{m}x{nn} R={rate} {arch}/{rx}"
            ax.semilogy(xs, ys, marker=".", label=label)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("outage probability")
        ax.set_ylim(bottom=max(1e-7, 0.3 / result.config["trials"]))
    elif n in (5, 6):
        ycol = "c1_per_antenna" if n == 5 else "c2"
        groups = _group(result.rows, ["m_tx", "snr_db"])
        for (m, db), rows in groups.items():
            xs = [r["beta"] for r in rows]
            ax.plot(xs, [r[ycol] for r in rows], "-",
                    label=f"M={m} {db} dB analytic")
            ax.plot(xs, [r[f"{ycol}_mc"] for r in rows], "o", ms=3,
                    label=f"M={m} {db} dB MC")
        ax.set_xlabel("beta = M/N")
        ax.set_ylabel("mean mutual information per antenna (nats)"
                      if n == 5 else "mutual information variance (nats^2)")
    else:
        groups = _group(result.rows, ["m_tx", "n_rx", "snr_db", "receiver"])
        for (m, nn, db, rx), rows in groups.items():
            xs = [r["rate_bpcu"] for r in rows]
            ax.plot(xs, [r["cdf_analytic"] for r in rows], "-",
                    label=f"{m}x{nn} {db} dB {rx} analytic")
            ax.plot(xs, [r["cdf_mc"] for r in rows], "--",
                    label=f"{m}x{nn} {db} dB {rx} MC")
        ax.set_xlabel("rate (bpcu)")
        ax.set_ylabel("P(mutual information <= rate)")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=7)
    ax.set_title(result.config.get("title", f"figure {n}"))
    fig.tight_layout()
    fig.savefig(result.png_path, dpi=150)
    plt.close(fig)
    return result.png_path
