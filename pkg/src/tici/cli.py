"""``tici`` command line: figure-data sweeps, max search and classical checks.

Exit codes: 0 success, 2 configuration error, 3 numerical invariant violated.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .incompat import STATE_MEASURES
from .sweep import (
    ConfigError,
    InvariantViolation,
    emit_figure_data,
    render,
    run_sweep,
    spec_from_table,
    validate_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--counts", type=int, help="counts per setting (enables shot-noise sampling)")
    p.add_argument("--base", type=float, help="logarithm base (default 2)")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--workers", type=int, help="parallel worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tici", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a TOML configuration file")
    p.add_argument("config", help="path to the TOML file")
    _common(p)

    p = sub.add_parser("fig3", help="sweep theta_p for a fixed state axis")
    p.add_argument("--axis", choices=("x", "y", "z"), default="x")
    p.add_argument("--steps", type=int, default=33)
    _common(p)

    p = sub.add_parser("fig4", help="sweep theta_A at a fixed mixing parameter")
    p.add_argument("--p", type=int, choices=(0, 1, 2), default=0)
    p.add_argument("--steps", type=int, default=33)
    p.add_argument("--bloch-factor", type=int, choices=(2, 4), default=4)
    _common(p)

    p = sub.add_parser("max-search", help="maximize over random contexts")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--measure", choices=sorted(STATE_MEASURES), default="bures")
    _common(p)

    p = sub.add_parser("classical-check", help="evaluate random classical joint tables")
    p.add_argument("--tables", type=int, default=1000)
    _common(p)
    return parser


_OVERRIDES = ("counts", "base", "format", "seed", "out", "workers")


def _spec_from_args(args):
    overrides = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k) is not None}
    if args.command == "run":
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        spec = validate_config(text)
        if overrides:
            table = {k: getattr(spec, k) for k in _OVERRIDES if getattr(spec, k) is not None}
            spec = _replace(spec, {**table, **overrides})
        return spec
    table = dict(overrides)
    if args.command == "fig3":
        table.update(axis=args.axis, steps=args.steps)
    elif args.command == "fig4":
        table.update(p=args.p, steps=args.steps, bloch_factor=args.bloch_factor)
    elif args.command == "max-search":
        table.update(samples=args.samples, dim=args.dim, measure=args.measure)
    elif args.command == "classical-check":
        table.update(tables=args.tables)
    return spec_from_table(args.command, table)


def _replace(spec, common):
    # re-validate the overridden common fields through the same path
    checked = spec_from_table("single", common)
    return replace(spec, **{k: getattr(checked, k) for k in _OVERRIDES})


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda m, c, *a, **k: print(f"warning: {m}", file=sys.stderr)
            spec = _spec_from_args(args)
    except ConfigError as exc:
        print(f"tici: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows = run_sweep(spec)
    except InvariantViolation as exc:
        print(f"tici: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConfigError as exc:
        print(f"tici: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if spec.out:
            emit_figure_data(rows, spec.out, spec.format)
        else:
            sys.stdout.write(render(rows, spec.format))
    except OSError as exc:
        print(f"tici: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
