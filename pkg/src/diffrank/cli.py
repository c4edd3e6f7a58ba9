"""Command-line interface.

One subcommand per metric; stdout carries a short human summary while
``--output`` writes the machine-readable report (canonical JSON or CSV with
an aggregates sidecar).

Exit codes: 0 success, 1 usage or I/O problem, 2 data or metric error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from ._version import __version__
from .exceptions import DiffRankError, SchemaViolation
from .io.report import MetricsReport, load_report, write_report
from .pipeline import (
    ALGORITHMS,
    loss_report,
    mm_report_from_manifests,
    mm_report_from_values,
    pair_report,
    reps_report,
    single_report,
)

log = logging.getLogger("diffrank")

LOG_LEVEL_ENV = "DIFFRANK_LOG_LEVEL"


class _UsageError(Exception):
    """Flag combinations argparse cannot express; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; this CLI reserves 2
    for data errors, so usage problems exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_output_flags(sub, *, threads: bool = True, strict: bool = False):
    sub.add_argument("--output", metavar="PATH", help="write the machine-readable report here")
    sub.add_argument("--format", choices=("json", "csv"), default="json",
                     help="report format for --output (default: json)")
    if threads:
        sub.add_argument("--threads", type=int, default=None, metavar="N",
                         help="worker threads (default: all cores; results do not depend on it)")
    if strict:
        sub.add_argument("--strict", action="store_true",
                         help="fail on the first degenerate sentence instead of skipping it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="diffrank", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=None,
                        choices=("debug", "info", "warning", "error"),
                        help=f"log verbosity (default: ${LOG_LEVEL_ENV} or warning)")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND",
                                     parser_class=_Parser)

    sub = commands.add_parser("erank",
                              help="per-sentence matrix entropy and effective rank")
    src = sub.add_mutually_exclusive_group(required=True)
    src.add_argument("--reps", metavar="TENSOR", help="one representation tensor file")
    src.add_argument("--manifest", metavar="PATH", help="dump manifest to evaluate")
    _add_output_flags(sub, strict=True)
    sub.set_defaults(handler=_cmd_erank)

    sub = commands.add_parser("diff-erank",
                              help="dataset effective-rank difference between two models")
    sub.add_argument("--untrained", required=True, metavar="MANIFEST")
    sub.add_argument("--trained", required=True, metavar="MANIFEST")
    sub.add_argument("--algorithm", choices=ALGORITHMS, default="a",
                     help="dataset aggregation: exp-of-mean-entropy (a), "
                          "mean-of-eRanks (b), or both (default: a)")
    _add_output_flags(sub, strict=True)
    sub.set_defaults(handler=_cmd_diff_erank)

    sub = commands.add_parser("mm-align",
                              help="modality-alignment scores from five stage eRanks")
    for i in range(1, 6):
        sub.add_argument(f"--e{i}", type=float, default=None, metavar="ERANK")
    sub.add_argument("--manifests", nargs=5, metavar="MANIFEST",
                     help="five stage manifests (post-encoder, post-connector, "
                          "LLM image / text / pair)")
    _add_output_flags(sub, strict=True)
    sub.set_defaults(handler=_cmd_mm_align)

    sub = commands.add_parser("reduced-loss",
                              help="reduced cross-entropy loss between two models")
    sub.add_argument("--untrained", required=True, metavar="MANIFEST")
    sub.add_argument("--trained", required=True, metavar="MANIFEST")
    _add_output_flags(sub)
    sub.set_defaults(handler=_cmd_reduced_loss)

    sub = commands.add_parser("plotdata",
                              help="flatten reports into plot-ready CSV rows")
    sub.add_argument("--reports", nargs="+", required=True, metavar="REPORT")
    sub.add_argument("--output", metavar="PATH", help="CSV destination (default: stdout)")
    sub.set_defaults(handler=_cmd_plotdata)

    return parser


def _emit(report: MetricsReport, args) -> None:
    if args.output:
        write_report(report, args.output, format=args.format)
        log.info("wrote %s report to %s", args.format, args.output)


def _print_model(model) -> None:
    print(f"model {model.model_id} (layer {model.layer}): "
          f"{len(model.records)} sentences, {len(model.skipped)} skipped")
    for row in model.records:
        entropy = "-" if row.entropy is None else f"{row.entropy:.6f}"
        erank = "-" if row.erank is None else f"{row.erank:.6f}"
        loss = "" if row.loss is None else f"  loss={row.loss:.6f}"
        print(f"  {row.sentence_id}  tokens={row.token_count}  "
              f"entropy={entropy}  erank={erank}{loss}")
    if model.mean_entropy is not None:
        print(f"  mean_entropy={model.mean_entropy:.6f}  "
              f"erank_a={model.erank_a:.6f}  erank_b={model.erank_b:.6f}")
    if model.mean_loss is not None:
        print(f"  mean_loss={model.mean_loss:.6f}")


def _cmd_erank(args) -> int:
    if args.reps:
        report = reps_report(args.reps)
    else:
        report = single_report(args.manifest, threads=args.threads, strict=args.strict)
    for model in report.models:
        _print_model(model)
    _emit(report, args)
    return 0


def _cmd_diff_erank(args) -> int:
    report = pair_report(args.untrained, args.trained, algorithm=args.algorithm,
                         threads=args.threads, strict=args.strict)
    for model in report.models:
        _print_model(model)
    pair = report.pair
    if pair.diff_erank_a is not None:
        print(f"diff_erank (a) = {pair.diff_erank_a:.6f}")
    if pair.diff_erank_b is not None:
        print(f"diff_erank (b) = {pair.diff_erank_b:.6f}")
    if pair.reduced_loss is not None:
        print(f"reduced_loss = {pair.reduced_loss:.6f}")
    _emit(report, args)
    return 0


def _cmd_mm_align(args) -> int:
    values = [getattr(args, f"e{i}") for i in range(1, 6)]
    given = [v for v in values if v is not None]
    if args.manifests and given:
        raise _UsageError("pass either --e1..--e5 or --manifests, not both")
    if args.manifests:
        report = mm_report_from_manifests(args.manifests, threads=args.threads,
                                          strict=args.strict)
    elif len(given) == 5:
        report = mm_report_from_values(*values)
    else:
        raise _UsageError("all five of --e1..--e5 are required")
    mm = report.mm
    for i in range(1, 6):
        print(f"erank{i} = {getattr(mm, f'erank{i}'):.6f}")
    print(f"image_reduction_ratio = {mm.reduction_ratio:.6f}")
    print(f"image_text_alignment = {mm.alignment:.6f}")
    _emit(report, args)
    return 0


def _cmd_reduced_loss(args) -> int:
    report = loss_report(args.untrained, args.trained, threads=args.threads)
    for model in report.models:
        print(f"model {model.model_id}: mean_loss={model.mean_loss:.6f}")
    print(f"reduced_loss = {report.pair.reduced_loss:.6f}")
    _emit(report, args)
    return 0


def _plot_rows(paths) -> list[tuple[str, float | None, float | None]]:
    rows = []
    for path in paths:
        doc = load_report(path)
        models = doc.get("models") or []
        pair = doc.get("pair")
        if not models:
            raise SchemaViolation("/models", f"report {path} lists no models")
        if pair is None:
            raise SchemaViolation("/pair", f"report {path} has no pair block to plot")
        label = models[-1]["model_id"]
        diff = pair.get("diff_erank_a")
        if diff is None:
            diff = pair.get("diff_erank_b")
        rows.append((label, diff, pair.get("reduced_loss")))
    rows.sort(key=lambda row: row[0])
    return rows


def _cmd_plotdata(args) -> int:
    rows = _plot_rows(args.reports)

    def render(stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["model_size_label", "diff_erank", "reduced_loss"])
        for label, diff, delta_loss in rows:
            writer.writerow([
                label,
                "" if diff is None else format(diff, ".17g"),
                "" if delta_loss is None else format(delta_loss, ".17g"),
            ])

    if args.output:
        import io as _io

        buffer = _io.StringIO()
        render(buffer)
        from .io.report import _atomic_write_bytes
        from pathlib import Path

        _atomic_write_bytes(buffer.getvalue().encode("utf-8"), Path(args.output))
    else:
        render(sys.stdout)
    return 0


def _configure_logging(level_name: str | None) -> None:
    if level_name is None:
        level_name = os.environ.get(LOG_LEVEL_ENV, "warning")
    level = getattr(logging, level_name.upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.log_level)
    try:
        return args.handler(args)
    except DiffRankError as exc:
        log.debug("data error", exc_info=True)
        print(f"diffrank: error: {exc}", file=sys.stderr)
        return 2
    except _UsageError as exc:
        print(f"diffrank: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"diffrank: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
