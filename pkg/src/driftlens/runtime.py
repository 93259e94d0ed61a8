"""Trace capture and compare sessions.

A capture session writes the reference trace. A compare session reads it
back record by record while the second run executes; each traced value is
classified as identical, similar or different, and for the latter two the
reference value is handed back so the caller can overwrite its own.

Trace file layout (ASCII, LF)::

    DRIFTLENS-TRACE v1 rel=<R> abs=<A> ch=<0|1>
    D <seq> <site> <descriptor> <typecode> <value>
    S <seq> <site> <name>
    R <seq> <site> <name>
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Union

from driftlens.errors import FormatError, ReferenceExhausted, TraceError, UnsupportedVersion

log = logging.getLogger(__name__)

TRACE_MAGIC = "DRIFTLENS-TRACE"
TRACE_VERSION = 1
DATA, START, RETURN = "D", "S", "R"
TYPECODES = ("i4", "r4", "r8", "l4", "ch")
REAL_CODES = ("r4", "r8")

_REAL_RE = re.compile(r"^[+-](\d\.\d{17}E[+-]\d{2,3}|INF|NAN)$")
_INT_RE = re.compile(r"^-?\d+$")
_HEADER_RE = re.compile(r"^DRIFTLENS-TRACE v(\d+) rel=(\S+) abs=(\S+) ch=([01])$")


# -- canonical values --------------------------------------------------------

def format_real(x: float) -> str:
    """Sign, one digit, 17 decimals, signed exponent; exact for doubles."""
    if x != x:
        return "+NAN"
    return f"{x:+.17E}"


def format_header_real(x: float) -> str:
    """Shortest ``d.dddE±xx`` (at least 3 decimals) that reads back exactly."""
    for digits in range(3, 18):
        text = f"{x:.{digits}E}"
        if float(text) == x:
            return text
    return f"{x:.17E}"


def format_value(typecode: str, value) -> str:
    if typecode == "i4":
        return str(int(value))
    if typecode == "l4":
        return "T" if value else "F"
    if typecode in REAL_CODES:
        return format_real(float(value))
    if typecode == "ch":
        return "'" + str(value).replace("'", "''") + "'"
    raise ValueError(f"unknown typecode {typecode!r}")


def parse_value(typecode: str, text: str):
    if typecode == "i4":
        return int(text)
    if typecode == "l4":
        return text == "T"
    if typecode in REAL_CODES:
        return float(text)
    if typecode == "ch":
        return text[1:-1].replace("''", "'")
    raise ValueError(f"unknown typecode {typecode!r}")


def _valid_value(typecode: str, text: str) -> bool:
    if typecode in REAL_CODES:
        return _REAL_RE.match(text) is not None
    if typecode == "i4":
        return _INT_RE.match(text) is not None
    if typecode == "l4":
        return text in ("T", "F")
    if typecode == "ch":
        return (len(text) >= 2 and text[0] == "'" and text[-1] == "'"
                and "'" not in text[1:-1].replace("''", ""))
    return False


# -- records -----------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    seq: int
    kind: str
    site: int
    descriptor: str
    typecode: Optional[str] = None
    value: Optional[str] = None  # canonical text

    def to_line(self) -> str:
        if self.kind == DATA:
            return f"D {self.seq} {self.site} {self.descriptor} {self.typecode} {self.value}\n"
        return f"{self.kind} {self.seq} {self.site} {self.descriptor}\n"

    @property
    def typed_value(self):
        return parse_value(self.typecode, self.value)

    @property
    def trace_line(self) -> int:
        """1-based line number in the trace file (the header is line 1)."""
        return self.seq + 1


def parse_record(text: str, line: int = None, offset: int = None) -> TraceRecord:
    parts = text.split(" ", 5)
    kind = parts[0]
    try:
        if kind == DATA and len(parts) == 6:
            seq, site, desc, tc, value = int(parts[1]), int(parts[2]), parts[3], parts[4], parts[5]
            if tc not in TYPECODES or not _valid_value(tc, value):
                raise ValueError
            if not desc:
                raise ValueError
            return TraceRecord(seq, DATA, site, desc, tc, value)
        if kind in (START, RETURN) and len(parts) == 4 and parts[3] and " " not in parts[3]:
            return TraceRecord(int(parts[1]), kind, int(parts[2]), parts[3])
    except ValueError:
        pass
    raise FormatError(f"malformed trace record {text[:60]!r}", line, offset)


@dataclass(frozen=True)
class SimilarityPolicy:
    rel_tol: float = 1.0e-3
    abs_tol: float = 1.0e-10
    compare_characters: bool = False

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (v >= 0) or math.isinf(v):
                raise ValueError(f"{name} must be a finite non-negative number, got {v!r}")

    def header(self) -> str:
        return (f"{TRACE_MAGIC} v{TRACE_VERSION} rel={format_header_real(self.rel_tol)} "
                f"abs={format_header_real(self.abs_tol)} ch={int(self.compare_characters)}\n")


def parse_header(text: str, offset: int = 0) -> SimilarityPolicy:
    m = _HEADER_RE.match(text)
    if not m:
        if text.startswith(TRACE_MAGIC + " v"):
            ver = text.split()[1][1:] if len(text.split()) > 1 else ""
            if ver.isdigit() and int(ver) != TRACE_VERSION:
                raise UnsupportedVersion(f"trace format version {ver} is not supported", 1, offset)
        raise FormatError("bad trace header", 1, offset)
    if int(m.group(1)) != TRACE_VERSION:
        raise UnsupportedVersion(f"trace format version {m.group(1)} is not supported", 1, offset)
    try:
        return SimilarityPolicy(float(m.group(2)), float(m.group(3)), m.group(4) == "1")
    except ValueError as exc:
        raise FormatError(f"bad trace header: {exc}", 1, offset) from None


# -- outcomes ----------------------------------------------------------------

@dataclass(frozen=True)
class Identical:
    pass


@dataclass(frozen=True)
class Similar:
    reference: object


@dataclass(frozen=True)
class Different:
    computed: object
    reference: object


@dataclass(frozen=True)
class SequenceDivergence:
    """The run reached a different trace point than the reference expects.

    ``expected`` is None when the reference trace ended first; ``site`` is
    None when the run ended while the reference still had records.
    """
    expected: Optional[TraceRecord]
    kind: Optional[str]
    site: Optional[int]
    descriptor: Optional[str]
    seq: int  # position in the reference at which the paths split

    @property
    def line(self) -> int:
        return self.seq + 1


IDENTICAL = Identical()
Outcome = Union[Identical, Similar, Different, SequenceDivergence]


def classify_reals(computed: float, reference: float, policy: SimilarityPolicy) -> str:
    """Return 'identical', 'similar' or 'different' for two reals.

    The comparison is exact on the binary values: similar when
    |c-r| <= rel*max(|c|,|r|) or |c-r| <= abs. NaN and infinities are
    only ever identical to themselves.
    """
    if format_real(computed) == format_real(reference):
        return "identical"
    if not (math.isfinite(computed) and math.isfinite(reference)):
        return "different"
    c, r = Fraction(computed), Fraction(reference)
    diff = abs(c - r)
    if diff <= Fraction(policy.abs_tol) or diff <= Fraction(policy.rel_tol) * max(abs(c), abs(r)):
        return "similar"
    return "different"


def classify(typecode: str, computed_text: str, ref_typecode: str, ref_text: str,
             policy: SimilarityPolicy) -> str:
    if computed_text == ref_text:
        return "identical"
    if typecode in REAL_CODES and ref_typecode in REAL_CODES:
        return classify_reals(float(computed_text), float(ref_text), policy)
    return "different"


# -- report ------------------------------------------------------------------

@dataclass
class ValueDifference:
    seq: int
    site: int
    descriptor: str
    typecode: str
    computed: str
    reference: str

    @property
    def line(self) -> int:
        return self.seq + 1


@dataclass
class DifferenceReport:
    entries: list = field(default_factory=list)
    identical: int = 0
    similar: int = 0
    different: int = 0

    @property
    def divergence(self) -> Optional[SequenceDivergence]:
        if self.entries and isinstance(self.entries[-1], SequenceDivergence):
            return self.entries[-1]
        return None

    @property
    def exit_status(self) -> int:
        if self.divergence is not None:
            return 2
        return 1 if self.different else 0

    def to_dict(self) -> dict:
        entries = []
        for e in self.entries:
            d = asdict(e)
            d["type"] = "divergence" if isinstance(e, SequenceDivergence) else "value"
            entries.append(d)
        return {"identical": self.identical, "similar": self.similar,
                "different": self.different, "entries": entries}

    @classmethod
    def from_dict(cls, data: dict) -> "DifferenceReport":
        entries = []
        for d in data["entries"]:
            d = dict(d)
            kind = d.pop("type")
            if kind == "divergence":
                exp = d.pop("expected")
                entries.append(SequenceDivergence(TraceRecord(**exp) if exp else None, **d))
            else:
                entries.append(ValueDifference(**d))
        return cls(entries, data["identical"], data["similar"], data["different"])


# -- sessions ----------------------------------------------------------------

class CaptureSession:
    """Writes the reference trace. Not shareable between threads."""

    def __init__(self, path, policy: SimilarityPolicy = SimilarityPolicy()):
        self.path = path
        self.policy = policy
        self.seq = 0
        self._fh = open(path, "w", encoding="utf-8", newline="\n")
        self._fh.write(policy.header())

    def record(self, kind: str, site: int, descriptor: str, typecode: str = None,
               value=None) -> Optional[TraceRecord]:
        if self._fh is None:
            raise TraceError("capture session is closed")
        if kind == DATA:
            if typecode == "ch" and not self.policy.compare_characters:
                return None
            rec = TraceRecord(self.seq + 1, DATA, site, descriptor, typecode,
                              format_value(typecode, value))
        elif kind in (START, RETURN):
            rec = TraceRecord(self.seq + 1, kind, site, descriptor)
        else:
            raise ValueError(f"unknown record kind {kind!r}")
        self._fh.write(rec.to_line())
        self.seq += 1
        return rec

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TraceReader:
    """Sequential reader that validates every record as it goes."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "rb")
        raw = self._fh.readline()
        if not raw.endswith(b"\n"):
            self._fh.close()
            raise FormatError("truncated trace header", 1, 0)
        self.header = raw.decode("utf-8")
        try:
            self.policy = parse_header(self.header.rstrip("\n"))
        except FormatError:
            self._fh.close()
            raise
        self.offset = len(raw)
        self.seq = 0

    def next_record(self) -> Optional[TraceRecord]:
        raw = self._fh.readline()
        if not raw:
            return None
        line, offset = self.seq + 2, self.offset
        if not raw.endswith(b"\n"):
            raise FormatError("truncated trace record", line, offset)
        try:
            text = raw[:-1].decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("undecodable trace record", line, offset) from None
        rec = parse_record(text, line, offset)
        if rec.seq != self.seq + 1:
            raise FormatError(f"sequence number {rec.seq}, expected {self.seq + 1}", line, offset)
        self.seq = rec.seq
        self.offset += len(raw)
        return rec

    def expect_record(self) -> TraceRecord:
        rec = self.next_record()
        if rec is None:
            raise ReferenceExhausted(f"reference trace ended after {self.seq} records")
        return rec

    def __iter__(self):
        while True:
            rec = self.next_record()
            if rec is None:
                return
            yield rec

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class CompareSession:
    """Reads the reference trace and classifies each new value against it."""

    def __init__(self, path, policy: SimilarityPolicy = SimilarityPolicy()):
        self.reader = TraceReader(path)
        self.policy = policy
        if self.reader.policy != policy:
            log.warning("trace %s was captured with %s; comparing with %s",
                        path, self.reader.policy, policy)
        self.report = DifferenceReport()
        self.last_record: Optional[TraceRecord] = None
        self.halted = False

    @property
    def next_seq(self) -> int:
        return self.reader.seq + 1

    def compare(self, kind: str, site: int, descriptor: str, typecode: str = None,
                value=None) -> Optional[Outcome]:
        """Classify one traced event; None means the event is not traced."""
        if self.halted:
            raise TraceError("compare session halted after a sequence divergence")
        if kind == DATA and typecode == "ch" and not self.policy.compare_characters:
            return None
        seq = self.next_seq
        try:
            rec = self.reader.expect_record()
        except ReferenceExhausted:
            return self._diverge(SequenceDivergence(None, kind, site, descriptor, seq))
        self.last_record = rec
        if rec.kind != kind or rec.site != site:
            return self._diverge(SequenceDivergence(rec, kind, site, descriptor, seq))
        if kind != DATA:
            return IDENTICAL
        text = format_value(typecode, value)
        verdict = classify(typecode, text, rec.typecode, rec.value, self.policy)
        if verdict == "identical":
            self.report.identical += 1
            return IDENTICAL
        reference = rec.typed_value
        if verdict == "similar":
            self.report.similar += 1
            return Similar(reference)
        self.report.different += 1
        self.report.entries.append(
            ValueDifference(rec.seq, site, rec.descriptor, typecode, text, rec.value))
        return Different(value, reference)

    def _diverge(self, outcome: SequenceDivergence) -> SequenceDivergence:
        self.halted = True
        self.report.entries.append(outcome)
        return outcome

    def end_of_run(self):
        """Note that the run finished; leftover reference records are a divergence."""
        if self.halted:
            return
        rec = self.reader.next_record()
        if rec is not None:
            self._diverge(SequenceDivergence(rec, None, None, None, rec.seq))

    def finalize(self) -> DifferenceReport:
        self.reader.close()
        return self.report

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.reader.close()


def open_capture(path, policy: SimilarityPolicy = SimilarityPolicy()) -> CaptureSession:
    return CaptureSession(path, policy)


def open_compare(path, policy: SimilarityPolicy = SimilarityPolicy()) -> CompareSession:
    return CompareSession(path, policy)
