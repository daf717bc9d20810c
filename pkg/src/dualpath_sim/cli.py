"""Batch command-line interface.

``run`` executes scenarios and writes CSV (and optionally SVG) artifacts;
``fit`` re-derives a behavior polynomial from an exported CSV. Progress
goes to stderr, machine-readable output to stdout and files, so pipelines
stay clean. Exit codes: 0 success, 1 execution failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import fields
from pathlib import Path

from .config import ConfigError, CrowdsConfig, DualPathConfig, SimConfig
from .fitting import fit_polynomial
from .report import export_report
from .scenarios import SCENARIO_ORDER, resolve_scenarios, run_scenario

OUT_DIR_ENV = "DUALPATH_SIM_OUT"

_SIM_FIELDS = {f.name: f.type for f in fields(SimConfig)}
_CROWDS_FIELDS = {f.name: f.type for f in fields(CrowdsConfig)}
_DUALPATH_FIELDS = {f.name: f.type for f in fields(DualPathConfig)}


def _coerce(name: str, raw: str, type_name: str):
    if type_name == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name} expects a boolean, got {raw!r}")
    if type_name == "int":
        return int(raw)
    if type_name == "float":
        return float(raw)
    return raw


def _parse_assignments(pairs, parser) -> tuple[dict, dict, dict]:
    """Split key=value settings by the config they belong to."""
    sim: dict = {}
    crowds: dict = {}
    dual: dict = {}
    for pair in pairs:
        if "=" not in pair:
            parser.error(f"--set expects key=value, got {pair!r}")
        key, raw = pair.split("=", 1)
        key = key.strip()
        try:
            if key in _SIM_FIELDS:
                sim[key] = _coerce(key, raw, _SIM_FIELDS[key])
            elif key in _CROWDS_FIELDS:
                crowds[key] = _coerce(key, raw, _CROWDS_FIELDS[key])
            elif key in _DUALPATH_FIELDS:
                dual[key] = _coerce(key, raw, _DUALPATH_FIELDS[key])
            else:
                parser.error(f"unknown configuration key {key!r}")
        except ValueError as exc:
            parser.error(str(exc))
    return sim, crowds, dual


def _read_config_file(path: str, parser) -> list[str]:
    """Read key=value lines; '#' starts a comment."""
    pairs = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            parser.error(f"{path}:{lineno}: expected key=value")
        pairs.append(stripped)
    return pairs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualpath-sim",
        description="Compare the dual-path and crowds anonymity protocols "
                    "in a deterministic delay simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute scenarios and export reports")
    run_p.add_argument("--scenario", action="append", default=None,
                       metavar="ID", help="scenario id, comma list, or 'all' "
                       f"(known: {', '.join(SCENARIO_ORDER)})")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--reps", type=int, default=None,
                       help="transactions averaged per tick")
    run_p.add_argument("--ticks", type=int, default=None)
    run_p.add_argument("--out", default=None,
                       help=f"output directory (default: ${OUT_DIR_ENV} or ./results)")
    run_p.add_argument("--emit-svg", action="store_true",
                       help="also write SVG line charts")
    run_p.add_argument("--emit-cost-ledger", action="store_true",
                       help="write a per-term cost ledger per scenario (large!)")
    run_p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any configuration field (repeatable)")
    run_p.add_argument("--config", default=None, metavar="FILE",
                       help="key=value file providing defaults (flags win)")

    fit_p = sub.add_parser("fit", help="fit a polynomial to an exported CSV column")
    fit_p.add_argument("csv_path")
    fit_p.add_argument("--column", default="dualpath_ms",
                       help="CSV column to fit against the tick column")
    fit_p.add_argument("--degree", type=int, default=1, choices=(1, 2))
    return parser


def _cmd_run(args, parser) -> int:
    pairs = []
    if args.config:
        pairs.extend(_read_config_file(args.config, parser))
    pairs.extend(args.set)
    sim_over, crowds_over, dual_over = _parse_assignments(pairs, parser)
    for name in ("seed", "reps", "ticks"):
        value = getattr(args, name)
        if value is not None:
            sim_over[name] = value
    cfg = SimConfig(**sim_over)

    try:
        specs = resolve_scenarios(args.scenario or ["all"])
    except KeyError as exc:
        parser.error(f"unknown scenario id {exc.args[0]!r} "
                     f"(known: {', '.join(SCENARIO_ORDER)}, or 'all')")

    out_dir = args.out or os.environ.get(OUT_DIR_ENV) or "results"
    results = []
    try:
        cfg.validate()
        for spec in specs:
            print(f"running {spec.id} ({spec.title}) ...", file=sys.stderr, flush=True)
            started = time.perf_counter()
            ledger = None
            if args.emit_cost_ledger:
                Path(out_dir).mkdir(parents=True, exist_ok=True)
                ledger = open(Path(out_dir) / f"{spec.id}_costs.log", "w",
                              encoding="ascii", newline="\n")
            try:
                series = run_scenario(spec, cfg, crowds_overrides=crowds_over,
                                      dualpath_overrides=dual_over, ledger=ledger)
            finally:
                if ledger is not None:
                    ledger.close()
            elapsed = time.perf_counter() - started
            print(f"  {spec.id} done in {elapsed:.1f}s", file=sys.stderr, flush=True)
            results.append(series)
        paths = export_report(results, out_dir, emit_svg=args.emit_svg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for series in results:
        crowds_mean = sum(series.crowds_ms) / len(series.crowds_ms)
        dual_mean = sum(series.dualpath_ms) / len(series.dualpath_ms)
        improvement = sum(series.improvement) / len(series.improvement)
        print(f"{series.scenario_id} crowds_ms={crowds_mean:.3f} "
              f"dualpath_ms={dual_mean:.3f} mean_improvement={improvement:.4f}")
    print(f"wrote {len(paths)} files to {out_dir}", file=sys.stderr)
    return 0


def _cmd_fit(args, parser) -> int:
    try:
        with open(args.csv_path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError("CSV has no data rows")
        if args.column not in rows[0] or "tick" not in rows[0]:
            raise ValueError(f"CSV lacks a {args.column!r} or 'tick' column")
        xs = [float(row["tick"]) for row in rows]
        ys = [float(row[args.column]) for row in rows]
        result = fit_polynomial(ys, args.degree, xs)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    coeffs = " ".join(f"{c:.17g}" for c in result.coefficients)
    print(f"column: {args.column}")
    print(f"degree: {args.degree}")
    print(f"coefficients: {coeffs}")
    print(f"r_squared: {result.r_squared:.9f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, parser)
    return _cmd_fit(args, parser)


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
