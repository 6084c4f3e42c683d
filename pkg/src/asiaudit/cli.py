"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 degenerate dummy
(report written, but the unrestricted model could not be estimated).
Diagnostics go to stderr as JSON lines; ``ASIAUDIT_LOG`` sets verbosity
(``quiet``, ``error``, ``warning`` (default), ``info``, ``debug``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .asi_diag import diagnose
from .errors import AsiAuditError, ConfigError
from .panel import Diagnostic, derive_delta_totals, difference_panel, ingest_csv, write_csv
from .prep import PrepConfig, rest_columns
from .report import FORMATS, load_report, render_table
from .synth import REST_MODES, SimulationConfig, metadata, simulate_panel

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3

_LEVELS = {"quiet": 100, "error": 40, "warning": 30, "info": 20, "debug": 10}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class DiagnosticStream:
    """JSON-lines writer filtered by ``ASIAUDIT_LOG``."""

    def __init__(self, stream=None, level: str | None = None):
        self.stream = stream if stream is not None else sys.stderr
        name = (level or os.environ.get("ASIAUDIT_LOG", "warning")).lower()
        self.threshold = _LEVELS.get(name, _LEVELS["warning"])

    def emit(self, payload: dict, level: str = "warning") -> None:
        if _LEVELS[level] >= self.threshold:
            self.stream.write(json.dumps({"level": level, **payload}) + "\n")

    def diagnostic(self, d: Diagnostic, level: str = "warning") -> None:
        self.emit(d.to_dict(), level)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asiaudit", description="Audit FHP investment-cash flow regressions for ASI bias.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("diagnose", help="run the restricted/unrestricted comparison on CSV panels")
    d.add_argument("--input", action="append", required=True, help="panel CSV (repeatable)")
    d.add_argument("--schema", choices=("flow", "level"), default="flow")
    d.add_argument("--scale", choices=("lagged", "current"), default="lagged")
    d.add_argument("--trim", type=float, default=0.01)
    d.add_argument("--label", action="append", help="panel label, one per --input")
    d.add_argument("--out", help="report JSON path (stdout when omitted)")
    d.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("simulate", help="write a seeded synthetic panel")
    s.add_argument("--config", help="JSON file with SimulationConfig fields")
    s.add_argument("--firms", type=int)
    s.add_argument("--years", type=int)
    s.add_argument("--rest-mode", choices=REST_MODES)
    s.add_argument("--rest-scale", type=float)
    s.add_argument("--mix-fraction", type=float)
    s.add_argument("--seed", type=int)
    s.add_argument("--label")
    s.add_argument("--out", required=True, help="panel CSV path")

    t = sub.add_parser("table", help="render saved reports as a table")
    t.add_argument("--inputs", nargs="+", required=True)
    t.add_argument("--format", choices=FORMATS, default="markdown")
    t.add_argument("--out")

    c = sub.add_parser("check", help="scan a panel for accounting-identity violations")
    c.add_argument("--input", required=True)
    c.add_argument("--schema", choices=("flow", "level"), default="flow")
    c.add_argument("--tolerance", type=float, default=1e-6)
    return parser


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _cmd_diagnose(args, log: DiagnosticStream) -> int:
    try:
        config = PrepConfig(
            scale_base="lagged_total_assets" if args.scale == "lagged" else "current_total_assets",
            trim_fraction=args.trim,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.label and len(args.label) != len(args.input):
        raise UsageError("give one --label per --input")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    labels = args.label or [None] * len(args.input)

    def run(item):
        path, label = item
        panel = ingest_csv(path, args.schema, provenance=label)
        return panel, diagnose(panel, config)

    items = list(zip(args.input, labels))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]

    for panel, diag in results:
        for d in panel.diagnostics:
            log.diagnostic(d)
        log.emit({"code": "prep_summary", "label": diag.label, "removed": diag.removal_counts}, "info")
    diags = [diag for _, diag in results]
    _write(render_table(diags, "json"), args.out)
    degenerate = [d for d in diags if d.is_degenerate]
    for d in degenerate:
        log.emit(
            {"code": "degenerate_dummy", "label": d.label, "message": f"sign dummy is constant ({d.degenerate})"},
            "error",
        )
    return EXIT_DEGENERATE if degenerate else EXIT_OK


def _cmd_simulate(args) -> int:
    if args.config:
        base = SimulationConfig.from_json(args.config).to_dict()
    else:
        if args.firms is None or args.years is None or args.rest_mode is None or args.seed is None:
            raise UsageError("simulate needs --config or all of --firms --years --rest-mode --seed")
        base = SimulationConfig().to_dict()
    overrides = {
        "n_firms": args.firms,
        "n_years": args.years,
        "rest_mode": args.rest_mode,
        "rest_scale": args.rest_scale,
        "mix_fraction": args.mix_fraction,
        "seed": args.seed,
        "label": args.label,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    config = SimulationConfig.from_dict(base)
    panel = simulate_panel(config)
    write_csv(panel, args.out)
    meta = metadata(config, created=datetime.now(timezone.utc).isoformat())
    Path(str(args.out) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_table(args) -> int:
    diags = []
    for path in args.inputs:
        try:
            diags.extend(load_report(path))
        except (OSError, ValueError, KeyError) as exc:
            raise AsiAuditError(f"{path}: {exc}") from exc
    _write(render_table(diags, args.format), args.out)
    return EXIT_OK


def _cmd_check(args, log: DiagnosticStream) -> int:
    panel = ingest_csv(args.input, args.schema)
    for d in panel.diagnostics:
        log.diagnostic(d)
    if panel.schema_mode == "level":
        panel = difference_panel(panel)
    panel = derive_delta_totals(panel, args.tolerance)
    _, violation = rest_columns(panel, args.tolerance)
    funds = panel["funds_violation"].astype(bool)
    for i in np.flatnonzero(violation):
        log.diagnostic(
            Diagnostic(
                "identity_violation",
                "identity components disagree with investment - cash_flow",
                firm_id=str(panel.firm_id[i]),
                year=int(panel.year[i]),
            )
        )
    for d in panel.diagnostics:
        if d.code == "identity_violation":
            log.diagnostic(d)
    summary = {
        "input": str(args.input),
        "records": len(panel),
        "component_violations": int(violation.sum()),
        "funds_violations": int(funds.sum()),
    }
    sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    log = DiagnosticStream()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: diagnose, simulate, table, check")
        if args.command == "diagnose":
            return _cmd_diagnose(args, log)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "table":
            return _cmd_table(args)
        return _cmd_check(args, log)
    except UsageError as exc:
        log.emit({"code": "usage_error", "message": str(exc)}, "error")
        return EXIT_USAGE
    except ConfigError as exc:
        log.emit({"code": exc.code, "message": str(exc)}, "error")
        return EXIT_USAGE
    except (AsiAuditError, OSError) as exc:
        log.emit({"code": getattr(exc, "code", "io_error"), "message": str(exc)}, "error")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
