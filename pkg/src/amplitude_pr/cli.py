"""Command-line entry point: ``amplitude-pr <experiment> [options]``.

Exit status: 0 on success, 1 on a configuration error, 2 on a runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from .harness.config import EXPERIMENTS, ConfigError, build_config
from .harness.experiments import PLOT_AXES, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amplitude-pr",
                                     description="Amplitude phase retrieval experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=_u64, help="master seed (overrides the config)")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--trials", type=int, help="trials per cell (overrides the config)")
        p.add_argument("--quiet", action="store_true", help="no progress output")
        p.add_argument("--plot-data", dest="plot_data",
                       help="write per-cell (x, median, q05, q95) table here")
    return parser


def _load(args):
    doc = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<json>", f"malformed JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        if doc.setdefault("experiment", args.experiment) != args.experiment:
            raise ConfigError("experiment",
                              f"config is for {doc['experiment']!r}, not {args.experiment!r}")
    else:
        doc["experiment"] = args.experiment
    if args.trials is not None and args.trials < 1:
        raise ConfigError("trials", f"must be an integer >= 1, got {args.trials}")
    return build_config(doc, {"seed": args.seed, "trials": args.trials, "out": args.out})


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = _load(args)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def progress(i, n):
        if not args.quiet:
            print(f"\r{cfg.experiment}: {i}/{n}", end="" if i < n else "\n", file=sys.stderr)

    try:
        report = run_experiment(cfg, progress)
        text = report.to_csv()
        if cfg.out:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        if args.plot_data and cfg.experiment in PLOT_AXES:
            from .harness.report import plot_data
            x, y = PLOT_AXES[cfg.experiment]
            with open(args.plot_data, "w", encoding="utf-8", newline="") as fh:
                fh.write(plot_data(report, x, y))
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if not args.quiet and cfg.out:
        print(f"wrote {len(report.rows)} rows to {cfg.out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
