"""Batch command line: `rovella run --config cfg.json` executes one
experiment; `rovella report DIR [--strict]` collates summaries.

Exit codes: 0 ok, 2 validation error, 3 runtime error, 4 failed
acceptance criterion under report --strict. Failures print a
machine-readable error JSON to stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .core import ParamError
from .experiments import ExperimentError, ReportError, collate_report, run_config
from .io_utils import write_json

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3
EXIT_ACCEPTANCE = 4


def _error_json(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}))


def _resolve_threads(cli_value, cfg_threads: int) -> int:
    if cli_value is not None:
        return int(cli_value)
    if cfg_threads != 1:
        return cfg_threads
    env = os.environ.get("ROVELLA_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            return 1
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rovella",
        description="Contracting-Lorenz computational laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="config JSON path")
    run_p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (u64)")
    run_p.add_argument("--threads", type=int, default=None,
                       help="worker threads (fallback: ROVELLA_THREADS)")
    run_p.add_argument("--out", default=None, help="output directory")

    rep_p = sub.add_parser("report", help="collate experiment summaries")
    rep_p.add_argument("directory", help="directory holding *_summary.json")
    rep_p.add_argument("--strict", action="store_true",
                       help="exit 4 if any collated criterion failed")
    return parser


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must fit in u64")
            cfg = dataclasses.replace(cfg, seed=args.seed)
        cfg = dataclasses.replace(
            cfg, threads=_resolve_threads(args.threads, cfg.threads))
        out_dir = Path(args.out or cfg.out or "results")
    except (ConfigError, ParamError, OSError) as exc:
        _error_json("validation", str(exc))
        return EXIT_VALIDATION
    try:
        summary = run_config(cfg, out_dir)
    except (ExperimentError, RuntimeError, ValueError, OSError) as exc:
        _error_json("runtime", str(exc))
        return EXIT_RUNTIME
    criteria = summary.get("criteria", {})
    print(json.dumps({"kind": cfg.kind, "out": str(out_dir),
                      "criteria": criteria}))
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = collate_report(args.directory)
    except ReportError as exc:
        _error_json("validation", str(exc))
        return EXIT_VALIDATION
    except OSError as exc:
        _error_json("runtime", str(exc))
        return EXIT_RUNTIME
    write_json(Path(args.directory) / "report.json", report)
    print(json.dumps({"criteria": report["criteria"],
                      "failed": report["failed"]}))
    if args.strict and report["failed"]:
        return EXIT_ACCEPTANCE
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
