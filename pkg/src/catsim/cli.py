"""Command-line entry point: ``catsim run | list-scenarios | selftest``."""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .errors import CatsimError, ConfigError

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catsim", description="Coherent-state qubit and cat-state simulations.")
    p.add_argument("--version", action="version", version=f"catsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a JSON config file")
    run.add_argument("config", help="path to the scenario config (JSON)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--out", default=None, help="write the report here instead of stdout")
    run.add_argument("--figure", default=None, help="also render a matplotlib figure to this path")

    sub.add_parser("list-scenarios", help="list scenario names and default parameters")
    sub.add_parser("selftest", help="run the acceptance suite")
    return p


def cmd_run(args) -> int:
    from .report import emit_report, summary_line
    from .scenarios import parse_config, run_scenario

    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"catsim: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be a 64-bit non-negative integer")
            cfg = dataclasses.replace(cfg, seed=args.seed)
    except ConfigError as exc:
        print(f"catsim: config error in {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_scenario(cfg)
    except CatsimError as exc:
        print(f"catsim: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    data = emit_report(report, args.format)
    out = args.out or cfg.output_path
    if out:
        try:
            Path(out).write_bytes(data)
        except OSError as exc:
            print(f"catsim: cannot write {out}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    if args.figure:
        from .plotting import render_figure

        try:
            render_figure(report, args.figure)
        except OSError as exc:
            print(f"catsim: cannot write figure {args.figure}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    print(summary_line(report), file=sys.stderr)
    return EXIT_OK


def cmd_list() -> int:
    from .scenarios import DEFAULTS, DESCRIPTIONS

    for name, params in DEFAULTS.items():
        print(f"{name:15s} {DESCRIPTIONS[name]}")
        print(f"{'':15s} defaults: {params}")
    return EXIT_OK


def cmd_selftest() -> int:
    from .acceptance import run_all

    results = run_all(lambda c: print(c.line(), flush=True))
    failed = [c.number for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failing: {failed}" if failed else ""))
    return EXIT_TOLERANCE if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "list-scenarios":
        return cmd_list()
    return cmd_selftest()


if __name__ == "__main__":
    sys.exit(main())
