"""Command-line entry points.

Two subcommands:

* pad run --config cfg.txt [--out DIR] plus one flag per config key, so any
  file setting can be overridden on the command line (--seed 7,
  --pad.lambda_amp 5, --sweep "lambda_amp=1,3,5,10", ...).
* pad report --in DIR re-renders results.md from an existing results.csv.

Exit codes: 0 all requested rows completed, 1 some rows failed (completed
rows are still written), 2 startup problems (bad config, unreadable paths).
The PAD_LOG environment variable sets the logging level (DEBUG, INFO, ...).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .experiment import (CONFIG_SCHEMA, build_config, emit_reports,
                         load_corpus, parse_config_text, read_results_csv,
                         render_markdown, run_experiment)

LOG = logging.getLogger("pad.cli")


def _configure_logging() -> None:
    name = os.environ.get("PAD_LOG", "WARNING").strip().upper()
    level = getattr(logging, name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _dest(key: str) -> str:
    return key.replace(".", "__")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pad",
        description="Privacy-aware decoding experiments on a toy retrieval pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write reports")
    run_p.add_argument("--config", metavar="PATH",
                       help="key = value config file; omit to use defaults")
    run_p.add_argument("--out", metavar="DIR", default="results",
                       help="output directory (default: results)")
    for key, (_, help_text) in CONFIG_SCHEMA.items():
        run_p.add_argument(f"--{key}", dest=_dest(key), metavar="VALUE",
                           default=None, help=help_text)

    report_p = sub.add_parser("report", help="re-render results.md from results.csv")
    report_p.add_argument("--in", dest="in_dir", metavar="DIR", required=True,
                          help="directory holding results.csv")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    values: dict[str, str] = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            print(f"pad: error: config file not found: {path}", file=sys.stderr)
            return 2
        try:
            values = parse_config_text(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            print(f"pad: error: {exc}", file=sys.stderr)
            return 2
    for key in CONFIG_SCHEMA:
        override = getattr(args, _dest(key))
        if override is not None:
            values[key] = override

    try:
        cfg = build_config(values)
        corpus = load_corpus(cfg)
    except (ValueError, OSError) as exc:
        print(f"pad: error: {exc}", file=sys.stderr)
        return 2

    LOG.info("corpus: %d documents, %d tokens of vocabulary",
             len(corpus), len(corpus.vocabulary))
    failures: list[tuple[int, str]] = []

    def on_error(index: int, label: str, exc: Exception) -> None:
        failures.append((index, label))
        print(f"pad: row {index} ({label}) failed: {exc}", file=sys.stderr)

    rows = run_experiment(cfg, corpus=corpus, error_handler=on_error)
    if rows:
        written = emit_reports(rows, args.out, cfg)
        for p in written:
            LOG.info("wrote %s", p)
        print(f"wrote {len(rows)} rows to {args.out}")
    if failures:
        print(f"pad: {len(failures)} row(s) failed", file=sys.stderr)
        return 1
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    in_dir = Path(args.in_dir)
    csv_path = in_dir / "results.csv"
    try:
        records = read_results_csv(csv_path)
        (in_dir / "results.md").write_text(render_markdown(records),
                                           encoding="utf-8")
    except (ValueError, OSError) as exc:
        print(f"pad: error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {in_dir / 'results.md'}")
    return 0


def main(argv=None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_report(args)


if __name__ == "__main__":
    raise SystemExit(main())
