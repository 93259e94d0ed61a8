"""Tools for large trace files: indexing, slicing, coverage and report text."""
from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from driftlens.errors import FormatError, RangeError, SiteMismatch, UnknownSite
from driftlens.instrument import SiteTable
from driftlens.runtime import (
    DATA, RETURN, START, DifferenceReport, SequenceDivergence, TraceReader, TraceRecord,
    ValueDifference, parse_record,
)

log = logging.getLogger(__name__)

INDEX_MAGIC = "DRIFTLENS-IDX"
DEFAULT_STRIDE = 4096


# -- index -------------------------------------------------------------------

@dataclass
class TraceIndex:
    count: int
    stride: int
    checkpoints: list  # [(seq, byte offset)] for seq 1, 1+stride, ...
    # filled by a full scan only; a sidecar holds just the checkpoints
    spans: dict = field(default_factory=dict, compare=False)  # subprogram -> [first, last]
    site_counts: dict = field(default_factory=dict, compare=False)  # site id -> occurrences

    def checkpoint_for(self, seq: int) -> tuple:
        return self.checkpoints[(seq - 1) // self.stride]


def build_index(path, stride: int = DEFAULT_STRIDE) -> TraceIndex:
    """Scan a trace once, validating every record, and build its index."""
    if stride < 1:
        raise ValueError("stride must be positive")
    checkpoints = []
    spans = {}
    sites = Counter()
    stack = []
    with TraceReader(path) as reader:
        while True:
            offset = reader.offset
            rec = reader.next_record()
            if rec is None:
                break
            if (rec.seq - 1) % stride == 0:
                checkpoints.append((rec.seq, offset))
            sites[rec.site] += 1
            if rec.kind == START:
                stack.append(rec.descriptor)
            owner = stack[-1] if stack else None
            if owner is not None:
                span = spans.setdefault(owner, [rec.seq, rec.seq])
                span[1] = rec.seq
            if rec.kind == RETURN and stack:
                stack.pop()
        count = reader.seq
    return TraceIndex(count, stride, checkpoints, spans, dict(sites))


def index_path(trace_path) -> Path:
    return Path(str(trace_path) + ".idx")


def write_index(index: TraceIndex, path):
    """Sidecar layout: ``DRIFTLENS-IDX v1 k=<stride>`` then ``<seq> <offset>`` lines."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{INDEX_MAGIC} v1 k={index.stride}\n")
        for seq, offset in index.checkpoints:
            fh.write(f"{seq} {offset}\n")


def _count_from(trace_path, seq: int, offset: int) -> int:
    """Number of records, found by reading on from a known checkpoint."""
    with open(trace_path, "rb") as fh:
        fh.seek(offset)
        last = seq - 1
        for raw in fh:
            if not raw.endswith(b"\n"):
                raise FormatError("truncated trace record", last + 2, None)
            last += 1
    if last < seq:
        raise FormatError("index points past the end of the trace", seq + 1, offset)
    return last


def read_index(path, trace_path=None) -> TraceIndex:
    """Read a sidecar; the record count comes from the trace's tail."""
    trace_path = trace_path or str(path)[:-len(".idx")]
    lines = Path(path).read_text(encoding="ascii").splitlines()
    parts = lines[0].split() if lines else []
    if len(parts) != 3 or parts[0] != INDEX_MAGIC or parts[1] != "v1" \
            or not parts[2].startswith("k="):
        raise FormatError("not a version 1 trace index", 1, 0)
    try:
        stride = int(parts[2][2:])
        checkpoints = [tuple(int(x) for x in line.split(" ")) for line in lines[1:]]
    except ValueError:
        raise FormatError("unreadable trace index") from None
    if stride < 1 or any(len(c) != 2 for c in checkpoints):
        raise FormatError("unreadable trace index")
    for i, (seq, _) in enumerate(checkpoints):
        if seq != 1 + i * stride:
            raise FormatError(f"index checkpoint {seq} out of place", i + 2, None)
    count = _count_from(trace_path, *checkpoints[-1]) if checkpoints else 0
    return TraceIndex(count, stride, checkpoints)


def load_or_build_index(trace_path, stride: int = DEFAULT_STRIDE) -> TraceIndex:
    """Use the sidecar index if it is newer than the trace, otherwise rebuild it."""
    side = index_path(trace_path)
    if side.is_file() and side.stat().st_mtime >= Path(trace_path).stat().st_mtime:
        return read_index(side, trace_path)
    index = build_index(trace_path, stride)
    try:
        write_index(index, side)
    except OSError as exc:
        log.warning("could not write index %s: %s", side, exc)
    return index


def slice_trace(path, index: TraceIndex, from_seq: int, to_seq: int) -> Iterator[TraceRecord]:
    """Yield records ``from_seq..to_seq`` (inclusive) using the index to seek."""
    if not 1 <= from_seq <= to_seq <= index.count:
        raise RangeError(f"slice {from_seq}..{to_seq} outside 1..{index.count}")
    seq, offset = index.checkpoint_for(from_seq)
    with open(path, "rb") as fh:
        fh.seek(offset)
        while seq <= to_seq:
            raw = fh.readline()
            if not raw.endswith(b"\n"):
                raise FormatError("trace ended inside an indexed range", seq + 1, offset)
            rec = parse_record(raw[:-1].decode("utf-8"), seq + 1, offset)
            if rec.seq != seq:
                raise FormatError(f"index out of date: found seq {rec.seq}, expected {seq}",
                                  seq + 1, offset)
            if seq >= from_seq:
                yield rec
            offset += len(raw)
            seq += 1


def record_at(path, index: TraceIndex, seq: int) -> TraceRecord:
    return next(slice_trace(path, index, seq, seq))


# -- coverage ------------------------------------------------------------------

@dataclass
class CoverageReport:
    total: int
    visited: int
    per_subprogram: dict  # name -> (visited, total)
    unvisited: list  # site ids, ascending

    @property
    def percentage(self) -> float:
        return round(100.0 * self.visited / self.total, 1) if self.total else 0.0

    def render(self) -> str:
        lines = [f"coverage: {self.visited}/{self.total} sites ({self.percentage:.1f}%)"]
        for name, (v, t) in sorted(self.per_subprogram.items()):
            lines.append(f"  {name.upper()}: {v}/{t}")
        if self.unvisited:
            lines.append("never visited: " + " ".join(map(str, self.unvisited)))
        return "\n".join(lines) + "\n"


def coverage_from_sites(visited: set, sites: SiteTable) -> CoverageReport:
    unknown = sorted(set(visited) - set(sites.ids()))
    if unknown:
        raise SiteMismatch(f"site ids not in the table: {unknown[:10]}")
    per = {}
    for s in sites:
        v, t = per.get(s.subprogram, (0, 0))
        per[s.subprogram] = (v + (s.id in visited), t + 1)
    unvisited = [i for i in sites.ids() if i not in visited]
    return CoverageReport(len(sites), len(sites) - len(unvisited), per, unvisited)


def coverage(trace_paths: list, sites: SiteTable) -> CoverageReport:
    """Union of sites visited by the given traces, relative to ``sites``."""
    visited = set()
    for path in trace_paths:
        with TraceReader(path) as reader:
            for rec in reader:
                if rec.site not in sites:
                    raise SiteMismatch(f"{path}: record {rec.seq} has unknown site {rec.site}")
                visited.add(rec.site)
    return coverage_from_sites(visited, sites)


# -- report rendering ----------------------------------------------------------

def _site_line(sites: SiteTable, site_id: int) -> str:
    if site_id not in sites:
        raise UnknownSite(f"site {site_id} is not in the site table")
    s = sites[site_id]
    return f"!Site {s.id}: {s.subprogram.upper()} line {s.line} {s.descriptor}"


def _describe(kind: Optional[str], descriptor: Optional[str], value: Optional[str] = None) -> str:
    if kind == START:
        return f"Start sub-program: {descriptor}"
    if kind == RETURN:
        return f"Return from sub-program: {descriptor}"
    if value is not None:
        return f"{descriptor} = {value}"
    return f"Data: {descriptor}"


def _render_divergence(d: SequenceDivergence, sites: SiteTable) -> list:
    exp = d.expected
    if d.kind == START and exp is not None and exp.kind == DATA:
        out = [f"!*** Trace error at start of sub-program: {d.descriptor}",
               f"!Trace file line: {exp.trace_line} {exp.descriptor} = {exp.value}",
               f"!Record seq: {exp.seq}",
               _site_line(sites, exp.site), _site_line(sites, d.site)]
        return out
    out = ["!*** Trace sequence error:"]
    out.append(f"!Sequence number reached: {d.site if d.site is not None else 'end of run'}")
    if exp is None:
        out.append(f"!Trace line: {d.line} end of reference trace")
    else:
        out.append(f"!Trace line: {exp.trace_line} {exp.site} "
                   f"{_describe(exp.kind, exp.descriptor, exp.value)}")
        out.append(_site_line(sites, exp.site))
    if d.site is not None:
        out.append(f"{d.line} {d.site} {_describe(d.kind, d.descriptor)}")
        out.append(_site_line(sites, d.site))
    out.append(f"!Record seq: {d.seq}")
    return out


def render_report(report: DifferenceReport, sites: SiteTable) -> str:
    """Render differences as comment-style blocks, one blank line apart."""
    blocks = []
    for e in report.entries:
        if isinstance(e, ValueDifference):
            blocks.append([
                "!*** Trace value error:",
                f"!Value computed: {e.computed}",
                f"!Trace file line: {e.line} {e.descriptor} = {e.reference}",
                f"!Record seq: {e.seq}",
                _site_line(sites, e.site),
            ])
        else:
            blocks.append(_render_divergence(e, sites))
    text = "".join("\n".join(b) + "\n\n" for b in blocks)
    n = len(report.entries)
    return text + f"{n} difference{'' if n == 1 else 's'}\n"
