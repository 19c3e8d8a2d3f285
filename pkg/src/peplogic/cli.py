"""Command line: ``peplogic classify|align|emit|stats``."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .blocks import DEFAULT_FRAGMENT_LIMIT
from .classify import LAYERS
from .folmc import DEFAULT_TIMEOUT
from .harness import (
    FORMATS,
    HarnessError,
    align,
    emit_problems,
    emit_targets,
    read_records,
    read_stats,
    run_classify,
)
from .layers import QBF_TIMEOUT, LayerOptions
from .mona import MONA_ENV
from .qbf.external import PREPROCESSOR_ENV, SOLVER_ENV
from .theory import CLASS_LABELS


def _seconds(text):
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _count(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must not be negative")
    return value


def _common(p):
    p.add_argument("inputs", nargs="+", help="SMILES (one per line, optional id) or SDF files")
    p.add_argument("--format", choices=FORMATS, help="input format; guessed from the extension if absent")
    p.add_argument("--skip", type=_count, default=0, help="skip the first N records")


def _limits(p):
    p.add_argument("--timeout-fol", type=_seconds, default=DEFAULT_TIMEOUT, help="seconds per molecule")
    p.add_argument("--timeout-qbf", type=_seconds, default=QBF_TIMEOUT, help="seconds per molecule")
    p.add_argument("--fragment-limit", type=_count, default=DEFAULT_FRAGMENT_LIMIT)
    p.add_argument("--qbf-variable-cap", type=_count, default=None,
                   help="largest quantified variable count handed to the built-in solver")
    p.add_argument("--qbf-solver", default=os.environ.get(SOLVER_ENV),
                   help=f"external QDIMACS solver command (env {SOLVER_ENV})")
    p.add_argument("--qbf-preprocessor", default=os.environ.get(PREPROCESSOR_ENV),
                   help=f"external preprocessor command (env {PREPROCESSOR_ENV})")
    p.add_argument("--mona", default=os.environ.get(MONA_ENV), help=f"MONA binary (env {MONA_ENV})")


def _options(args) -> LayerOptions:
    return LayerOptions(
        fragment_limit=args.fragment_limit,
        fol_timeout=args.timeout_fol,
        qbf_timeout=args.timeout_qbf,
        qbf_variable_cap=args.qbf_variable_cap,
        qbf_solver=args.qbf_solver,
        qbf_preprocessor=args.qbf_preprocessor,
        mona_binary=args.mona,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peplogic", description="Peptide class membership by graph algorithms and logic.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="label every molecule")
    _common(p)
    _limits(p)
    p.add_argument("--layer", choices=LAYERS, default="algorithmic")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--output-format", choices=("tsv", "jsonl"),
                   help="row format; jsonl when the output name ends in .jsonl, else tsv")
    p.add_argument("--no-timing", action="store_true", help="omit the elapsed column")

    p = sub.add_parser("align", help="compare layers on the same molecules")
    _common(p)
    _limits(p)
    p.add_argument("--layer", dest="layers", action="append", choices=LAYERS,
                   help="layer to run; give at least two")
    p.add_argument("--json", help="also write the report as JSON here")

    p = sub.add_parser("emit", help="write QDIMACS or MONA problems")
    _common(p)
    p.add_argument("--target", choices=("qdimacs", "mona"), required=True)
    p.add_argument("--class", dest="label", required=True, help="class label or theory entry")
    p.add_argument("--output", "-o", required=True, help="output directory")
    p.add_argument("--unfolded", action="store_true",
                   help="QDIMACS: keep structure facts as pinned variables")
    p.add_argument("--no-scoping", action="store_true", help="QDIMACS: skip miniscoping")

    p = sub.add_parser("stats", help="label histogram of a classify output")
    p.add_argument("input", help="TSV or JSONL written by classify")
    p.add_argument("--csv", help="write the histogram as CSV here")
    p.add_argument("--overlap-csv", help="write the label overlap matrix as CSV here")
    return parser


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="") if path else sys.stdout


def cmd_classify(args) -> int:
    fmt = args.output_format or ("jsonl" if args.output and args.output.endswith(".jsonl") else "tsv")
    out = _open_out(args.output)
    try:
        run = run_classify(args.inputs, out, args.format, args.layer, _options(args), args.workers,
                           fmt, not args.no_timing, args.skip)
    finally:
        if out is not sys.stdout:
            out.close()
    s = run.summary
    print(f"classified {s.total} molecules, {s.failure_count} failures", file=sys.stderr)
    return 0


def cmd_align(args, parser) -> int:
    layers = list(dict.fromkeys(args.layers or []))
    if len(layers) < 2:
        parser.error("align needs at least two --layer options")
    report = align(read_records(args.inputs, args.format, args.skip), layers, _options(args))
    sys.stdout.write(report.table())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2)
            fh.write("\n")
    return 0


def cmd_emit(args, parser) -> int:
    if args.label not in emit_targets():
        parser.error(f"unknown class {args.label!r}; expected one of: {', '.join(CLASS_LABELS)}")
    written = emit_problems(read_records(args.inputs, args.format, args.skip), args.target, args.label,
                            args.output, fold=not args.unfolded, scoping=not args.no_scoping)
    for rid, path in written:
        print(path if path else f"skipped {rid}: parse failure")
    return 0


def cmd_stats(args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            report = read_stats(fh)
    except OSError as exc:
        raise HarnessError(f"cannot read {args.input}: {exc.strerror}") from None
    sys.stdout.write(report.text())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.histogram_csv())
    if args.overlap_csv:
        with open(args.overlap_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(report.overlap_csv())
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "classify":
            return cmd_classify(args)
        if args.command == "align":
            return cmd_align(args, parser)
        if args.command == "emit":
            return cmd_emit(args, parser)
        return cmd_stats(args)
    except (HarnessError, OSError) as exc:
        print(f"peplogic: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
