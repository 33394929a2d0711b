"""Command-line front end.

Usage::

    gainbin validate model.json
    gainbin scale model.json                      # scaled gains with flag markers
    gainbin analyze model.json --format csv       # flagged 2x2 pairs, k x k counts
    gainbin bin model.json --include DP-DEBUT-PV:FI-FEED-PV
    gainbin grid --rga-threshold 12 -n 7
    gainbin compare before.json after.json

Exit codes: 0 success, 1 invalid model, 2 I/O or parse error, 3 bad
configuration. Errors go to stderr as a single json line.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import Thresholds, analyze
from .binning import SELECTION_MODES, ConditioningPolicy, build_grid, condition_matrix
from .model_io import ModelFormatError, load_model, save_model, validate_model
from .report import compare_models, mark_matrix, serialize_report
from .scaling import typical_move_scale

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_CONFIG = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, exit_code: int, code: str, message: str):
        super().__init__(message)
        self.exit_code = exit_code
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_CONFIG, "usage", f"{self.prog}: {message}")


def _cell(text: str) -> tuple[str, str]:
    cv, sep, mv = text.partition(":")
    if not sep or not cv or not mv:
        raise argparse.ArgumentTypeError(f"expected CV:MV, got {text!r}")
    return cv, mv


def _add_output(p):
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def _add_thresholds(p):
    p.add_argument("--rga-threshold", type=float, default=12.0)
    p.add_argument("--cn-threshold", type=float, default=59.0)
    p.add_argument("--cn-higher-threshold", type=float, default=100.0)
    p.add_argument("--singular-tol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gainbin", description="Gain-matrix conditioning analysis and RGA bin snapping.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")
    _add_output(p)

    p = sub.add_parser("scale", help="typical-move scaled gains with flag markers")
    p.add_argument("model")
    _add_thresholds(p)
    _add_output(p)

    p = sub.add_parser("analyze", help="flagged 2x2 pairs, collinear pairs and k x k scans")
    p.add_argument("model")
    _add_thresholds(p)
    p.add_argument("--orders", default=None,
                   help="comma-separated k values for the k x k scans (default: all)")
    _add_output(p)

    p = sub.add_parser("bin", help="snap flagged gains to the RGA bin grid")
    p.add_argument("model")
    _add_thresholds(p)
    p.add_argument("--mode", choices=SELECTION_MODES, default="rga_flagged")
    p.add_argument("--include", type=_cell, action="append", default=[], metavar="CV:MV")
    p.add_argument("--exclude", type=_cell, action="append", default=[], metavar="CV:MV")
    p.add_argument("--model-out", metavar="PATH",
                   help="conditioned model file (default: <model>.binned.json beside the input)")
    _add_output(p)

    p = sub.add_parser("grid", help="list bin boundaries for a threshold")
    p.add_argument("--rga-threshold", type=float, default=12.0)
    g = p.add_mutually_exclusive_group()
    g.add_argument("-n", type=int, default=None, help="number of bins")
    g.add_argument("--min-magnitude", type=float, default=None,
                   help="extend the grid down to this scaled magnitude")
    _add_output(p)

    p = sub.add_parser("compare", help="cell-by-cell diff of two models")
    p.add_argument("before")
    p.add_argument("after")
    _add_output(p)
    return parser


def _fmt(args) -> str:
    return "text_table" if args.format == "table" else args.format


def _thresholds(args) -> Thresholds:
    try:
        return Thresholds(args.rga_threshold, args.cn_threshold, args.cn_higher_threshold, args.singular_tol)
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, "bad_threshold", str(exc)) from None


def _load(path):
    try:
        model = load_model(path)
    except FileNotFoundError:
        raise CliError(EXIT_IO, "not_found", f"no such file: {path}") from None
    except OSError as exc:
        raise CliError(EXIT_IO, "io", str(exc)) from None
    except ModelFormatError as exc:
        raise CliError(EXIT_IO, exc.code, f"{path}: {exc}") from None
    return model


def _load_valid(path):
    model = _load(path)
    report = validate_model(model)
    if not report.ok:
        v = report.errors[0]
        raise CliError(EXIT_INVALID, v.code, f"{path}: {v.message}")
    return model


def _emit(text: str, args, stdout):
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(EXIT_IO, "io", str(exc)) from None
    else:
        stdout.write(text)


def _orders(spec, model):
    if spec is None:
        return None
    try:
        ks = tuple(int(x) for x in spec.split(",") if x.strip())
    except ValueError:
        raise CliError(EXIT_CONFIG, "bad_orders", f"--orders must be integers, got {spec!r}") from None
    top = min(model.shape)
    bad = [k for k in ks if not 3 <= k <= top]
    if bad:
        raise CliError(EXIT_CONFIG, "bad_orders", f"--orders values must lie in 3..{top}, got {bad}")
    return ks


def run(argv, stdout=None) -> int:
    """Parse ``argv`` and execute; returns the exit code. Errors raise :class:`CliError`."""
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    fmt = _fmt(args)

    if args.command == "validate":
        report = validate_model(_load(args.model))
        _emit(serialize_report(report, fmt), args, stdout)
        return EXIT_OK if report.ok else EXIT_INVALID

    if args.command == "grid":
        if args.n is not None and args.n < 0:
            raise CliError(EXIT_CONFIG, "bad_n", "-n must be non-negative")
        try:
            if args.min_magnitude is not None:
                grid = build_grid(args.rga_threshold, min_magnitude=args.min_magnitude)
            else:
                grid = build_grid(args.rga_threshold, n=7 if args.n is None else args.n)
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, "bad_grid", str(exc)) from None
        _emit(serialize_report(grid, fmt), args, stdout)
        return EXIT_OK

    if args.command == "compare":
        a, b = _load_valid(args.before), _load_valid(args.after)
        try:
            diff = compare_models(a, b)
        except ValueError as exc:
            raise CliError(EXIT_CONFIG, "mismatched_models", str(exc)) from None
        _emit(serialize_report(diff, fmt), args, stdout)
        return EXIT_OK

    th = _thresholds(args)
    model = _load_valid(args.model)

    if args.command == "scale":
        scaled = typical_move_scale(model)
        summary = analyze(scaled, th, orders=())
        _emit(serialize_report(mark_matrix(scaled, summary.pairs), fmt), args, stdout)
        return EXIT_OK

    if args.command == "analyze":
        summary = analyze(typical_move_scale(model), th, orders=_orders(args.orders, model))
        _emit(serialize_report(summary, fmt), args, stdout)
        return EXIT_OK

    if args.command == "bin":
        try:
            policy = ConditioningPolicy(th, args.mode, frozenset(args.include), frozenset(args.exclude))
            result = condition_matrix(model, policy)
        except (KeyError, ValueError) as exc:
            raise CliError(EXIT_CONFIG, "bad_policy", str(exc).strip("'\"")) from None
        model_out = args.model_out or str(Path(args.model).with_suffix("")) + ".binned.json"
        try:
            save_model(result.to_model(), model_out)
        except OSError as exc:
            raise CliError(EXIT_IO, "io", str(exc)) from None
        _emit(serialize_report(result, fmt), args, stdout)
        return EXIT_OK

    raise CliError(EXIT_CONFIG, "usage", f"unknown command {args.command!r}")  # pragma: no cover


def main(argv=None) -> int:
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except CliError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc), "exit_code": exc.exit_code}) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
