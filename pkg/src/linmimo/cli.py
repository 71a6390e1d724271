"""Experiment runner: outage sweeps, asymptotic grids, DMT tables, slope
fits, invariant suites and figure reproduction behind one console script.

Conventions: SNR is configured in dB and converted once via
rho = 10^(dB/10); rates are configured in bits per channel use and converted
to nats internally.  Data outputs (CSV or JSON) are byte-identical across
runs with the same configuration and seed; anything run-dependent (wall
time) lives in a ``<out>.meta.json`` sidecar.  ``--workers`` changes wall
time only, never results.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import jsonschema

from . import __version__
from .channel import SystemDims
from .receivers import LN2, MMSE, OPTIMAL, ZF, bits_to_nats
from .asymptotics import (
    BetaOneUnsupported,
    gaussian_outage,
    mmse_moments,
    optimal_asymptotics,
    zf_moments,
)
from .dmt import (
    dmt_linear_curve,
    dmt_optimal,
    dmt_parallel_iid_curve,
    finite_rate_prediction,
)
from .montecarlo import SchemeSpec, fit_slope, sweep_outage_many
from .validation import SUITES, run_suites
from . import figures

# Probabilities are printed in scientific notation with 6 significant digits.
PROB_FMT = "{:.5e}"
FLOAT_FMT = "{:.10g}"

_POSITIVE_INT = {"type": "integer", "minimum": 1}
_SNR_LIST = {
    "type": "array", "items": {"type": "number"}, "minItems": 1,
}

OUTAGE_SCHEMA = {
    "type": "object",
    "required": ["scheme", "receiver", "m_tx", "n_rx", "snr_db",
                 "rate_bpcu", "trials", "seed"],
    "additionalProperties": False,
    "properties": {
        "scheme": {"enum": ["optimal", "coded_across_antennas",
                            "spatial_multiplexing", "mmse_upper_bound",
                            "zf_upper_bound"]},
        "receiver": {"enum": ["zf", "mmse", "optimal"]},
        "m_tx": _POSITIVE_INT,
        "n_rx": _POSITIVE_INT,
        "snr_db": _SNR_LIST,
        "rate_bpcu": {"type": "number", "exclusiveMinimum": 0},
        "trials": _POSITIVE_INT,
        "seed": {"type": "integer", "minimum": 0},
        "slope_window_db": {
            "type": "array", "items": {"type": "number"},
            "minItems": 2, "maxItems": 2,
        },
    },
}

ASYMPTOTIC_SCHEMA = {
    "type": "object",
    "required": ["receiver", "m_tx", "snr_db"],
    "additionalProperties": False,
    "properties": {
        "receiver": {"enum": ["zf", "mmse", "optimal"]},
        "m_tx": _POSITIVE_INT,
        "n_rx": _POSITIVE_INT,
        "beta": {"type": "array", "minItems": 1,
                 "items": {"type": "number", "exclusiveMinimum": 0,
                           "maximum": 1.0}},
        "snr_db": _SNR_LIST,
        "cdf_rates_bpcu": {"type": "array", "minItems": 1,
                           "items": {"type": "number"}},
    },
    "oneOf": [{"required": ["beta"]}, {"required": ["n_rx"]}],
}

DMT_SCHEMA = {
    "type": "object",
    "required": ["m_tx", "n_rx"],
    "additionalProperties": False,
    "properties": {
        "m_tx": _POSITIVE_INT,
        "n_rx": _POSITIVE_INT,
        "r_grid": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "rates_bpcu": {"type": "array",
                       "items": {"type": "number", "exclusiveMinimum": 0}},
    },
}


class ConfigError(SystemExit):
    pass


def _load_config(path: str, schema: dict) -> dict:
    try:
        with open(path) as f:
            cfg = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path}: invalid JSON at line {e.lineno}, "
                          f"column {e.colno}: {e.msg}")
    except OSError as e:
        raise ConfigError(f"config {path}: {e}")
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config {path}: field '{where}': {e.message}")
    return cfg


def format_cell(field: str, value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    if field in figures.PROB_FIELDS:
        return PROB_FMT.format(value)
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    return FLOAT_FMT.format(value)


def write_rows(out: str | None, fieldnames: list[str], rows: list[dict],
               fmt: str) -> None:
    """Write CSV (default) or JSON records; '-' or None means stdout."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(fieldnames)
        for row in rows:
            w.writerow([format_cell(f, row.get(f)) for f in fieldnames])
        payload = buf.getvalue()
    else:
        rendered = [
            {f: (format_cell(f, row.get(f)) if isinstance(row.get(f), float)
                 else row.get(f)) for f in fieldnames}
            for row in rows
        ]
        payload = json.dumps(rendered, indent=2, sort_keys=True) + "\n"
    if out is None or out == "-":
        sys.stdout.write(payload)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(payload)


def write_meta(out: str | None, meta: dict) -> None:
    if out is None or out == "-":
        return
    Path(f"{out}.meta.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")


def _meta(args, command: str, extra: dict | None = None) -> dict:
    m = {
        "command": command,
        "version": __version__,
        "workers": args.workers,
    }
    if extra:
        m.update(extra)
    return m


def cmd_outage(args) -> int:
    cfg = _load_config(args.config, OUTAGE_SCHEMA)
    seed = args.seed if args.seed is not None else cfg["seed"]
    dims = SystemDims(cfg["m_tx"], cfg["n_rx"])
    scheme = SchemeSpec(cfg["scheme"], cfg["receiver"])
    t0 = time.perf_counter()
    table = sweep_outage_many([scheme], dims, cfg["snr_db"], cfg["rate_bpcu"],
                              cfg["trials"], seed, args.workers)
    curve = table[scheme.label()]
    rows = [
        {"snr_db": db, "p_hat": est.p_hat, "ci_low": est.ci_low,
         "ci_high": est.ci_high, "trials": est.trials}
        for db, est in curve
    ]
    write_rows(args.out, ["snr_db", "p_hat", "ci_low", "ci_high", "trials"],
               rows, args.format)
    extra = {"config": cfg, "seed": seed,
             "wall_time_s": time.perf_counter() - t0}
    if "slope_window_db" in cfg:
        lo, hi = cfg["slope_window_db"]
        extra["slope_fit"] = fit_slope(curve, (lo, hi))
    write_meta(args.out, _meta(args, "outage", extra))
    return 0


def _asymptotic_systems(cfg) -> list[SystemDims]:
    m = cfg["m_tx"]
    if "beta" in cfg:
        dims = []
        for b in cfg["beta"]:
            n = max(int(round(m / b)), m)
            dims.append(SystemDims(m, n))
        return dims
    return [SystemDims(m, cfg["n_rx"])]


def _moments_for(receiver: str, dims: SystemDims, rho: float):
    """(c1, c2, valid) for any receiver tag."""
    if receiver == OPTIMAL:
        o = optimal_asymptotics(dims, rho)
        return dims.m_tx * o.mu, o.nu2, True
    mom = mmse_moments(dims, rho) if receiver == MMSE else zf_moments(dims, rho)
    return mom.c1, mom.c2, mom.valid


def cmd_asymptotic(args) -> int:
    cfg = _load_config(args.config, ASYMPTOTIC_SCHEMA)
    receiver = cfg["receiver"]
    t0 = time.perf_counter()
    rows = []
    cdf_rows = []
    for dims in _asymptotic_systems(cfg):
        for db in cfg["snr_db"]:
            rho = 10.0 ** (db / 10.0)
            row = {"beta": dims.beta(), "m_tx": dims.m_tx, "n_rx": dims.n_rx,
                   "snr_db": db}
            try:
                c1, c2, valid = _moments_for(receiver, dims, rho)
                row.update(c1=c1, c2=c2, valid=valid, error="")
            except BetaOneUnsupported:
                row.update(c1="", c2="", valid=False,
                           error="BetaOneUnsupported")
                rows.append(row)
                continue
            rows.append(row)
            for rate in cfg.get("cdf_rates_bpcu", []):
                cdf_rows.append({
                    "beta": dims.beta(), "m_tx": dims.m_tx,
                    "n_rx": dims.n_rx, "snr_db": db, "rate_bpcu": rate,
                    "p_out_gaussian": gaussian_outage(bits_to_nats(rate),
                                                      (c1, c2)),
                })
    fields = ["beta", "m_tx", "n_rx", "snr_db", "c1", "c2", "valid", "error"]
    write_rows(args.out, fields, rows, args.format)
    if cdf_rows:
        cdf_out = None
        if args.out and args.out != "-":
            p = Path(args.out)
            cdf_out = str(p.with_name(p.stem + "_cdf" + p.suffix))
        write_rows(cdf_out, ["beta", "m_tx", "n_rx", "snr_db", "rate_bpcu",
                             "p_out_gaussian"], cdf_rows, args.format)
    write_meta(args.out, _meta(args, "asymptotic", {
        "config": cfg, "wall_time_s": time.perf_counter() - t0}))
    return 0


def cmd_dmt(args) -> int:
    cfg = _load_config(args.config, DMT_SCHEMA)
    dims = SystemDims(cfg["m_tx"], cfg["n_rx"])
    fields = ["kind", "r", "d", "rate_bpcu", "t_frak", "m"]
    rows = []
    curves = [dmt_optimal(dims), dmt_linear_curve(dims),
              dmt_parallel_iid_curve(dims)]
    for curve in curves:
        for r, d in curve.breakpoints:
            rows.append({"kind": curve.kind, "r": r, "d": d})
        for r in cfg.get("r_grid", []):
            rows.append({"kind": f"{curve.kind}_eval", "r": float(r),
                         "d": curve.evaluate(float(r))})
    for rate in cfg.get("rates_bpcu", []):
        p = finite_rate_prediction(dims, rate)
        rows.append({"kind": "finite_rate_prediction", "d": p.d_pred,
                     "rate_bpcu": rate, "t_frak": p.t_frak, "m": p.m})
    write_rows(args.out, fields, rows, args.format)
    write_meta(args.out, _meta(args, "dmt", {"config": cfg}))
    return 0


def cmd_slope(args) -> int:
    with open(args.curve) as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or \
                not {"snr_db", "p_hat"} <= set(reader.fieldnames):
            raise ConfigError(
                f"{args.curve}: expected CSV with snr_db and p_hat columns")
        curve = [(float(row["snr_db"]), float(row["p_hat"])) for row in reader]
    slope = fit_slope(curve, (args.window[0], args.window[1]))
    payload = json.dumps({"slope": slope, "window_db": list(args.window),
                          "points": len(curve)}, sort_keys=True) + "\n"
    if args.out and args.out != "-":
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    return 0


def cmd_validate(args) -> int:
    names = args.suite
    if not names or "all" in names:
        names = sorted(SUITES)
    t0 = time.perf_counter()
    try:
        results = run_suites(names, workers=args.workers)
    except KeyError as e:
        raise ConfigError(str(e))
    report = {
        "passed": all(r.passed for r in results),
        "suites": [
            {"name": r.name, "passed": r.passed, "details": r.details}
            for r in results
        ],
        "wall_time_s": time.perf_counter() - t0,
    }
    payload = json.dumps(report, indent=2, sort_keys=True, default=float) + "\n"
    if args.out and args.out != "-":
        Path(args.out).write_text(payload)
    else:
        sys.stdout.write(payload)
    return 0 if report["passed"] else 1


def cmd_reproduce(args) -> int:
    t0 = time.perf_counter()
    result = figures.reproduce(args.figure, trials_override=args.trials,
                               seed_override=args.seed, workers=args.workers,
                               out_dir=args.out or ".")
    write_rows(result.csv_path, result.fieldnames, result.rows, args.format)
    if not args.no_plot:
        figures.render(result)
    write_meta(result.csv_path, _meta(args, "reproduce-figure", {
        "figure": args.figure,
        "config": result.config,
        "wall_time_s": time.perf_counter() - t0,
        "plot": None if args.no_plot else result.png_path,
    }))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="linmimo",
        description="MIMO linear-receiver outage, DMT and large-antenna "
                    "Gaussian analysis",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        if config_required:
            sp.add_argument("--config", required=True,
                            help="JSON configuration file")
        sp.add_argument("--out", default=None,
                        help="output path ('-' or omitted: stdout)")
        sp.add_argument("--workers", type=int, default=1,
                        help="worker processes (affects wall time only)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("outage", help="Monte Carlo outage sweep")
    common(sp)
    sp.set_defaults(fn=cmd_outage)

    sp = sub.add_parser("asymptotic", help="closed-form large-N moments")
    common(sp)
    sp.set_defaults(fn=cmd_asymptotic)

    sp = sub.add_parser("dmt", help="DMT curves and finite-rate predictions")
    common(sp)
    sp.set_defaults(fn=cmd_dmt)

    sp = sub.add_parser("slope", help="fit a diversity slope to a curve CSV")
    sp.add_argument("--curve", required=True, help="CSV from the outage command")
    sp.add_argument("--window", nargs=2, type=float, required=True,
                    metavar=("LO_DB", "HI_DB"))
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_slope, workers=1, seed=None, format="csv")

    sp = sub.add_parser("validate", help="run invariant suites")
    sp.add_argument("--suite", action="append", default=None,
                    choices=sorted(SUITES) + ["all"],
                    help="suite name (repeatable; default all)")
    sp.add_argument("--out", default=None)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(fn=cmd_validate, seed=None, format="json")

    sp = sub.add_parser("reproduce-figure",
                        help="regenerate a reference figure dataset and plot")
    sp.add_argument("figure", type=int, choices=sorted(figures.FIGURES))
    sp.add_argument("--out", default=None, help="output directory")
    sp.add_argument("--trials", type=int, default=None,
                    help="override the per-point trial budget")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--no-plot", action="store_true",
                    help="skip matplotlib rendering")
    sp.set_defaults(fn=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError:
        raise
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
