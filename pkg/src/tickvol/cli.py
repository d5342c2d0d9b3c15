"""Command-line interface: simulate, clean, estimate, validate.

Every subcommand resolves its configuration as CLI flags > config file >
built-in defaults, runs deterministically under a fixed seed, writes outputs
atomically (temp file + rename), and drops a JSON manifest next to each
output sufficient to reproduce it bit-exactly.

Exit codes: 0 success, 1 validation-band failure, 2 input/config error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np
import yaml

from . import __version__
from .curves import curve_from_config
from .errors import TickVolError, ConfigError
from .estimators import (
    ESTIMATOR_TAGS,
    EstimatorConfig,
    a1_tick_window,
    estimate_on_grid,
)
from .ingest import (
    SESSION_END,
    SESSION_START,
    clean_ticks,
    parse_tick_csv,
    read_series_csv,
    write_series_csv,
)
from .kernels import KernelSpec, PreAvgWeight
from .mc_harness import check_band, compare_estimators, run_scenario, scenario_from_config
from .simulate import NoiseModel, simulate_series

DEFAULT_BANDWIDTH_SECONDS = 200.0
DEFAULT_BLOCK_SIZE = 15
DEFAULT_GRID_POINTS = 50
DEFAULT_LOG_FLOOR = 1e-12
ESTIMATE_TAGS_DEFAULT = ["intensity", "clock_pavg", "tick_pavg", "decomposed", "noise_var"]


# ---------------------------------------------------------------------------
# Plumbing
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path, subcommand, resolved, inputs, outputs, seed, started):
    manifest = {
        "tool": "tickvol",
        "version": __version__,
        "subcommand": subcommand,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "seed": seed,
        "config_resolved": resolved,
        "inputs": {p: _sha256(p) for p in inputs if p and os.path.exists(p)},
        "outputs": outputs,
        "wall_clock_s": round(time.perf_counter() - started, 3),
    }
    _atomic_write(f"{out_path}.manifest.json", json.dumps(manifest, indent=2) + "\n")


def _load_yaml(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    return cfg


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _load_yaml(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    horizon = float(cfg.get("horizon", SESSION_END - SESSION_START))
    sigma2 = curve_from_config(cfg.get("sigma2", {"kind": "constant", "c": 1.0}))
    intensity = curve_from_config(cfg.get("intensity", {"kind": "constant", "c": 1.0}))
    noise_cfg = cfg.get("noise", {})
    noise = NoiseModel(
        omega=float(noise_cfg.get("omega", 0.0)),
        theta=float(noise_cfg.get("theta", 2.0)),
        rounding=bool(noise_cfg.get("rounding", False)),
    )
    arrivals_file = args.arrivals_file or cfg.get("arrivals_file")
    arrival_times = None
    if arrivals_file:
        arrivals = read_series_csv(arrivals_file)
        if arrivals.horizon_T != horizon:
            raise ConfigError(
                f"arrivals file horizon {arrivals.horizon_T} != configured {horizon}"
            )
        arrival_times = arrivals.times

    series = simulate_series(
        sigma2,
        intensity,
        horizon,
        seed,
        noise=noise,
        rescaled=bool(cfg.get("rescaled", True)),
        x0=float(cfg.get("x0", 0.0)),
        arrival_times=arrival_times,
    )
    write_series_csv(series, args.out)
    resolved = {
        "horizon": horizon,
        "sigma2": sigma2.to_config(),
        "intensity": intensity.to_config(),
        "noise": noise.to_config(),
        "rescaled": bool(cfg.get("rescaled", True)),
        "x0": float(cfg.get("x0", 0.0)),
        "arrivals_file": arrivals_file,
    }
    _write_manifest(args.out, "simulate", resolved, [args.config, arrivals_file],
                    [args.out], seed, started)
    print(f"simulate: wrote {len(series)} ticks to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# clean
# ---------------------------------------------------------------------------

def cmd_clean(args) -> int:
    started = time.perf_counter()
    with open(args.raw, "r", encoding="utf-8") as fh:
        records, malformed = parse_tick_csv(fh)
    bad = frozenset(c.strip() for c in (args.bad_conditions or "").split(",") if c.strip())
    series, report = clean_ticks(
        records,
        session_start=args.session_start,
        session_end=args.session_end,
        bad_conditions=bad,
        outlier_window=args.outlier_window,
        outlier_multiplier=args.outlier_multiplier,
    )
    write_series_csv(series, args.out)
    outputs = [args.out]
    if args.report:
        payload = report.to_dict()
        payload["malformed_rows"] = [{"line": ln, "reason": why} for ln, why in malformed]
        _atomic_write(f"{args.out}.report.json", json.dumps(payload, indent=2) + "\n")
        outputs.append(f"{args.out}.report.json")
    resolved = {
        "session_start": args.session_start,
        "session_end": args.session_end,
        "bad_conditions": sorted(bad),
        "outlier_window": args.outlier_window,
        "outlier_multiplier": args.outlier_multiplier,
    }
    _write_manifest(args.out, "clean", resolved, [args.raw], outputs, None, started)
    print(
        f"clean: kept {report.kept}/{report.total} records "
        f"({report.dropped_session} pre/after market, {report.dropped_condition} bad condition)"
    )
    return 0


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------

def _resolve_estimator_config(args, cfg: dict, series) -> tuple[EstimatorConfig, dict]:
    T = series.horizon_T
    n = len(series)

    def frac(flag_value, key, default_seconds):
        if flag_value is not None:
            return float(flag_value)
        if key in cfg:
            return float(cfg[key])
        return float(cfg.get(f"{key}_seconds", default_seconds)) / T

    b_int = frac(args.bandwidth_intensity, "bandwidth_intensity", DEFAULT_BANDWIDTH_SECONDS)
    b_clock = frac(args.bandwidth_clock, "bandwidth_clock", DEFAULT_BANDWIDTH_SECONDS)
    block = int(args.block_size if args.block_size is not None
                else cfg.get("block_size", DEFAULT_BLOCK_SIZE))
    tick_window = args.tick_window if args.tick_window is not None else cfg.get("tick_window", "a1")
    if tick_window in ("a1", None):
        tick_window = max(a1_tick_window(b_clock, n), block)
    kern = KernelSpec(cfg.get("kernel", "epanechnikov"))

    n_grid = int(args.grid_points if args.grid_points is not None
                 else cfg.get("grid_points", DEFAULT_GRID_POINTS))
    lo = max(b_int, b_clock)
    grid = np.linspace(lo, 1.0 - lo, n_grid + 2)[1:-1]

    config = EstimatorConfig(
        intensity_bandwidth=b_int,
        clock_bandwidth=b_clock,
        tick_window=int(tick_window),
        block_size=block,
        intensity_kernel=kern,
        clock_kernel=kern,
        tick_kernel=kern,
        weight=PreAvgWeight(block),
        grid=grid,
    )
    resolved = config.to_dict()
    resolved["grid_points"] = n_grid
    return config, resolved


def cmd_estimate(args) -> int:
    started = time.perf_counter()
    cfg = _load_yaml(args.config)
    series = read_series_csv(args.data)
    config, resolved = _resolve_estimator_config(args, cfg, series)
    tags = cfg.get("estimators", ESTIMATE_TAGS_DEFAULT)
    unknown = [t for t in tags if t not in ESTIMATOR_TAGS]
    if unknown:
        raise ConfigError(f"unknown estimators {unknown}; choose from {ESTIMATOR_TAGS}")
    log_floor = float(args.log_floor if args.log_floor is not None
                      else cfg.get("log_floor", DEFAULT_LOG_FLOOR))

    outputs = []
    for tag in tags:
        est = estimate_on_grid(series, config, tag)
        out_path = f"{args.out}_{tag}.csv"
        est.to_csv(out_path, log_floor=log_floor)
        outputs.append(out_path)
        if args.json:
            json_path = f"{args.out}_{tag}.json"
            _atomic_write(json_path, est.to_json() + "\n")
            outputs.append(json_path)
        n_ok = int(np.sum(~np.isnan(est.values)))
        print(f"estimate[{tag}]: {n_ok}/{est.grid.size} grid points -> {out_path}")
    resolved["log_floor"] = log_floor
    resolved["estimators"] = list(tags)
    _write_manifest(args.out, "estimate", resolved, [args.config, args.data],
                    outputs, None, started)
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    started = time.perf_counter()
    registry = _load_yaml(args.registry)
    scenarios = registry.get("scenarios", {})
    if not isinstance(scenarios, dict) or not scenarios:
        raise ConfigError(f"registry {args.registry} has no 'scenarios' mapping")

    names = args.names or []
    if args.all:
        names = list(scenarios)
    if not names:
        print("validate: no scenarios selected (use names or --all); nothing to do")
        return 0
    unknown = [n for n in names if n not in scenarios]
    if unknown:
        print(f"validate: unknown scenario(s) {unknown}", file=sys.stderr)
        print(f"available: {', '.join(sorted(scenarios))}", file=sys.stderr)
        return 2

    all_ok = True
    results = {}
    for name in names:
        scenario, tag, check = scenario_from_config(name, scenarios[name])
        if tag == "compare":
            report = compare_estimators(scenario)
        else:
            report = run_scenario(scenario, tag)
        ok, detail = check_band(report, check)
        all_ok &= ok
        results[name] = {"pass": ok, "detail": detail, "report": report.to_dict()}
        print(f"validate[{name}]: {'PASS' if ok else 'FAIL'} - {detail}")

    if args.out:
        payload = {
            "registry": os.path.abspath(args.registry),
            "results": results,
            "all_pass": bool(all_ok),
        }
        _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
        _write_manifest(args.out, "validate", {"scenarios": names}, [args.registry],
                        [args.out], None, started)
    return 0 if all_ok else 1


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tickvol",
        description="Simulate, clean, estimate and validate spot volatility "
        "curves on tick data (clock-time volatility = tick-time volatility x "
        "trading intensity).",
    )
    parser.add_argument("--version", action="version", version=f"tickvol {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic tick series")
    p_sim.add_argument("--config", help="YAML simulation config")
    p_sim.add_argument("--seed", type=int, help="master seed (overrides config)")
    p_sim.add_argument("--out", required=True, help="output series CSV path")
    p_sim.add_argument("--arrivals-file", help="reuse arrival times from a cleaned series")
    p_sim.set_defaults(func=cmd_simulate)

    p_clean = sub.add_parser("clean", help="clean a raw tick CSV into a series")
    p_clean.add_argument("raw", help="raw CSV (timestamp,price,condition)")
    p_clean.add_argument("--out", required=True)
    p_clean.add_argument("--session-start", type=float, default=SESSION_START)
    p_clean.add_argument("--session-end", type=float, default=SESSION_END)
    p_clean.add_argument("--bad-conditions", help="comma-separated sale-condition codes to drop")
    p_clean.add_argument("--outlier-window", type=int, help="rolling-median outlier window (off by default)")
    p_clean.add_argument("--outlier-multiplier", type=float, default=10.0)
    p_clean.add_argument("--report", action="store_true", help="also write a JSON cleaning summary")
    p_clean.set_defaults(func=cmd_clean)

    p_est = sub.add_parser("estimate", help="evaluate estimator curves on a grid")
    p_est.add_argument("data", help="cleaned/simulated series CSV")
    p_est.add_argument("--config", help="YAML estimation config")
    p_est.add_argument("--out", required=True, help="output prefix; writes <out>_<tag>.csv")
    p_est.add_argument("--grid-points", type=int, help=f"grid size (default {DEFAULT_GRID_POINTS})")
    p_est.add_argument("--bandwidth-clock", type=float, help="clock bandwidth as a fraction of [0,1]")
    p_est.add_argument("--bandwidth-intensity", type=float, help="intensity bandwidth fraction")
    p_est.add_argument("--tick-window", type=int, help="ticks per side for the tick-time estimator")
    p_est.add_argument("--block-size", type=int, help=f"pre-averaging block size (default {DEFAULT_BLOCK_SIZE})")
    p_est.add_argument("--log-floor", type=float, help="floor for the log_value column")
    p_est.add_argument("--json", action="store_true", help="also write <out>_<tag>.json curves")
    p_est.set_defaults(func=cmd_estimate)

    p_val = sub.add_parser("validate", help="run Monte Carlo validation scenarios")
    p_val.add_argument("registry", help="YAML scenario registry")
    p_val.add_argument("names", nargs="*", help="scenario names (empty: no-op)")
    p_val.add_argument("--all", action="store_true", help="run every scenario in the registry")
    p_val.add_argument("--out", help="write a JSON report of all results")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TickVolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
