"""Command-line driver: instrument, run, compare, report, coverage, trace, hoist.

Exit codes: 0 success or no significant differences, 1 significant value
differences, 2 sequence divergence, 3 usage/parse/semantic/I-O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from driftlens import __version__
from driftlens.errors import DriftlensError
from driftlens.frontend import emit_source, merge_units, parse_file
from driftlens.instrument import (
    InstrumentOptions, emit_instrumented, instrument, read_site_table, sites_from_instrumented,
    split_by_origin, write_site_table,
)
from driftlens.interp.env import PRESETS, FPEnvironment, Mode, RunConfig
from driftlens.interp.hoist import rewrite_hoist_condition
from driftlens.interp.machine import run
from driftlens.runtime import DifferenceReport, SimilarityPolicy, TraceReader
from driftlens.tools import (
    DEFAULT_STRIDE, build_index, coverage, index_path, load_or_build_index, render_report,
    slice_trace, write_index,
)

log = logging.getLogger(__name__)

EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load(paths: list):
    units = [parse_file(p) for p in paths]
    return units[0] if len(units) == 1 else merge_units(units, str(paths[0]))


def _policy(args) -> SimilarityPolicy:
    return SimilarityPolicy(args.rel, args.abs, args.chars)


def _env(args) -> FPEnvironment:
    if args.env and args.env_preset:
        raise ValueError("--env and --env-preset are mutually exclusive")
    if args.env_preset:
        return PRESETS[args.env_preset]
    return FPEnvironment.parse(args.env) if args.env else FPEnvironment()


def _sites(args, unit):
    if args.sites:
        return read_site_table(args.sites)
    return sites_from_instrumented(unit)


def _emit_report(report: DifferenceReport, sites, dest):
    if dest and str(dest).endswith(".json"):
        Path(dest).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
        return
    text = render_report(report, sites)
    if dest:
        Path(dest).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_instrument(args) -> int:
    unit = _load(args.files)
    inst, table = instrument(unit, InstrumentOptions(trace_characters=args.chars))
    if len(args.files) == 1:
        text = emit_instrumented(inst)
        if args.output:
            Path(args.output).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    else:
        if not args.output:
            raise ValueError("-o must name a directory when instrumenting several files")
        out_dir = Path(args.output)
        out_dir.mkdir(parents=True, exist_ok=True)
        for origin, text in split_by_origin(inst).items():
            name = Path(origin).name if origin else "unit.mf"
            (out_dir / name).write_text(text, encoding="utf-8")
    if args.sites:
        write_site_table(table, args.sites)
    print(f"{len(table)} trace sites", file=sys.stderr)
    return 0


def _run(args, mode: Mode, trace) -> int:
    unit = _load(args.files)
    cfg = RunConfig(mode=mode, trace_path=Path(trace) if trace else None, policy=_policy(args),
                    env=_env(args), entry=args.entry, max_records=args.max_records)
    summary = run(unit, cfg)
    for line in summary.output:
        print(line)
    for w in summary.warnings:
        print(f"warning: read before write: {w}", file=sys.stderr)
    if summary.truncated:
        print(f"stopped after {summary.records} records (--max-records)", file=sys.stderr)
    if summary.report is not None:
        r = summary.report
        print(f"identical {r.identical}, similar {r.similar}, different {r.different}",
              file=sys.stderr)
        _emit_report(r, _sites(args, unit), args.report)
    return summary.exit_status


def cmd_run(args) -> int:
    if args.capture and args.compare:
        raise ValueError("--capture and --compare are mutually exclusive")
    if args.capture:
        return _run(args, Mode.CAPTURE, args.capture)
    if args.compare:
        return _run(args, Mode.COMPARE, args.compare)
    return _run(args, Mode.PLAIN, None)


def cmd_compare(args) -> int:
    return _run(args, Mode.COMPARE, args.trace)


def cmd_report(args) -> int:
    data = json.loads(Path(args.report_file).read_text(encoding="utf-8"))
    report = DifferenceReport.from_dict(data)
    sites = read_site_table(args.sites)
    _emit_report(report, sites, args.output)
    return report.exit_status


def cmd_coverage(args) -> int:
    result = coverage(args.traces, read_site_table(args.sites))
    text = result.render()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_trace_index(args) -> int:
    index = build_index(args.trace, args.stride)
    dest = args.output or index_path(args.trace)
    write_index(index, dest)
    print(f"{index.count} records, {len(index.checkpoints)} checkpoints -> {dest}")
    return 0


def cmd_trace_slice(args) -> int:
    index = load_or_build_index(args.trace)
    out = open(args.output, "w", encoding="utf-8", newline="\n") if args.output else sys.stdout
    try:
        for rec in slice_trace(args.trace, index, args.start, args.end):
            out.write(rec.to_line())
    finally:
        if args.output:
            out.close()
    return 0


def cmd_trace_inspect(args) -> int:
    with TraceReader(args.trace) as reader:
        header = reader.header.rstrip("\n")
    index = build_index(args.trace)
    print(header)
    print(f"records: {index.count}")
    for name, (first, last) in sorted(index.spans.items(), key=lambda kv: kv[1][0]):
        print(f"  {name}: seq {first}..{last}")
    busiest = sorted(index.site_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:args.top]
    for site, n in busiest:
        print(f"  site {site}: {n}")
    return 0


def cmd_hoist(args) -> int:
    unit = parse_file(args.file)
    selector = None
    if args.at:
        sub, _, line = args.at.rpartition(":")
        selector = (sub, int(line))
    text = emit_source(rewrite_hoist_condition(unit, selector))
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# -- parser --------------------------------------------------------------------

def _add_policy_flags(p):
    p.add_argument("--rel", type=float, default=1.0e-3,
                   help="relative similarity tolerance (default 0.001)")
    p.add_argument("--abs", type=float, default=1.0e-10,
                   help="absolute similarity tolerance (default 1e-10)")
    p.add_argument("--chars", action="store_true",
                   help="trace and compare CHARACTER values (ignored by default)")


def _add_run_flags(p):
    p.add_argument("files", nargs="+", help="instrumented MiniFort source files")
    _add_policy_flags(p)
    p.add_argument("--env", help="environment as assoc,precision,shortcircuit,uninit "
                                 "(e.g. left,storage,aswritten,space)")
    p.add_argument("--env-preset", choices=sorted(PRESETS), help="named environment")
    p.add_argument("--entry", help="PROGRAM to run when the sources contain several")
    p.add_argument("--sites", help="site table used to annotate the report")
    p.add_argument("--report", help="write the report here (.json for machine-readable)")
    p.add_argument("--max-records", type=int, help="stop after this many trace records")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="driftlens", allow_abbrev=False,
                     description="Relative debugging of MiniFort programs across "
                                 "floating-point environments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("instrument", help="insert trace calls", allow_abbrev=False)
    p.add_argument("files", nargs="+", help="MiniFort source files")
    p.add_argument("-o", "--output", help="output file (directory for several inputs)")
    p.add_argument("--sites", help="write the site table here")
    p.add_argument("--chars", action="store_true", help="also trace CHARACTER assignments")
    p.set_defaults(func=cmd_instrument)

    p = sub.add_parser("run", help="run a program, optionally capturing or comparing a trace",
                       allow_abbrev=False)
    _add_run_flags(p)
    p.add_argument("--capture", help="write the reference trace here")
    p.add_argument("--compare", help="compare against this reference trace")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run against a reference trace (run --compare)",
                       allow_abbrev=False)
    p.add_argument("trace", help="reference trace")
    _add_run_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render a saved JSON report", allow_abbrev=False)
    p.add_argument("report_file", help="report written by run --report x.json")
    p.add_argument("--sites", required=True, help="site table")
    p.add_argument("-o", "--output", help="write the text here instead of stdout")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("coverage", help="site coverage of one or more traces", allow_abbrev=False)
    p.add_argument("traces", nargs="+", help="trace files from the same instrumented program")
    p.add_argument("--sites", required=True, help="site table")
    p.add_argument("-o", "--output", help="write the summary here instead of stdout")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("trace", help="inspect, index or slice trace files", allow_abbrev=False)
    tsub = p.add_subparsers(dest="trace_command", required=True, parser_class=_Parser)
    t = tsub.add_parser("index", help="build the sidecar index", allow_abbrev=False)
    t.add_argument("trace")
    t.add_argument("--stride", type=int, default=DEFAULT_STRIDE,
                   help=f"records between checkpoints (default {DEFAULT_STRIDE})")
    t.add_argument("-o", "--output", help="index path (default <trace>.idx)")
    t.set_defaults(func=cmd_trace_index)
    t = tsub.add_parser("slice", help="print records START..END", allow_abbrev=False)
    t.add_argument("trace")
    t.add_argument("start", type=int)
    t.add_argument("end", type=int)
    t.add_argument("-o", "--output", help="write records here instead of stdout")
    t.set_defaults(func=cmd_trace_slice)
    t = tsub.add_parser("inspect", help="summarise a trace", allow_abbrev=False)
    t.add_argument("trace")
    t.add_argument("--top", type=int, default=10, help="number of busiest sites to list")
    t.set_defaults(func=cmd_trace_inspect)

    p = sub.add_parser("hoist", help="hoist repeated calls out of IF conditions",
                       allow_abbrev=False)
    p.add_argument("file")
    p.add_argument("--at", help="only the IF at SUBPROGRAM:LINE")
    p.add_argument("-o", "--output", help="output file (default stdout)")
    p.set_defaults(func=cmd_hoist)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DriftlensError, OSError, ValueError) as exc:
        print(f"driftlens: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
