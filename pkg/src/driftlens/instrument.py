"""Automatic insertion of trace calls.

Every assignment is followed by a call that records the assigned value,
every DO body starts with a call recording the loop variable, and every
subprogram body starts with an entry marker. Each inserted call carries a
unique integer site id; the :class:`SiteTable` maps ids back to source.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from driftlens.errors import AlreadyInstrumented, FormatError
from driftlens.frontend import ast as A
from driftlens.frontend.emitter import emit_expr, emit_items
from driftlens.frontend.parser import string_literal
from driftlens.frontend.semantics import (
    RESERVED_CALLS, TRACE_DATA_CALLS, TRACE_START_CALL, Scope, analyze,
)

SITES_MAGIC = "DRIFTLENS-SITES v1"
ENTRY = "entry"


@dataclass(frozen=True)
class InstrumentOptions:
    trace_characters: bool = False
    trace_call_outputs: bool = True  # record INTENT(OUT/INOUT) actuals after a CALL
    first_id: int = 1


@dataclass(frozen=True)
class Site:
    id: int
    subprogram: str
    line: int
    descriptor: str
    typecode: str  # i4 r4 r8 l4 ch, or 'entry'

    @property
    def is_entry(self) -> bool:
        return self.typecode == ENTRY


@dataclass
class SiteTable:
    sites: dict = field(default_factory=dict)  # id -> Site

    def add(self, site: Site):
        if site.id in self.sites:
            raise ValueError(f"duplicate site id {site.id}")
        self.sites[site.id] = site

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site_id: int) -> bool:
        return site_id in self.sites

    def __getitem__(self, site_id: int) -> Site:
        return self.sites[site_id]

    def __iter__(self):
        return iter(sorted(self.sites.values(), key=lambda s: s.id))

    def ids(self) -> list:
        return sorted(self.sites)


def _int_lit(n: int) -> A.Literal:
    return A.Literal(n, str(n), A.INTEGER)


def is_instrumented(unit: A.SourceUnit) -> bool:
    for sp in unit.subprograms:
        for s in A.walk_stmts(sp.body):
            if isinstance(s, A.Call) and s.name in RESERVED_CALLS:
                return True
    return False


class _Instrumenter:
    def __init__(self, unit: A.SourceUnit, options: InstrumentOptions):
        self.scopes = analyze(unit).scopes
        self.options = options
        self.next_id = options.first_id
        self.table = SiteTable()

    def _site(self, sub: str, line: int, desc: str, tc: str) -> int:
        sid = self.next_id
        self.next_id += 1
        self.table.add(Site(sid, sub, line, desc, tc))
        return sid

    def _data_call(self, scope: Scope, target: A.Expr, line: int) -> Optional[A.Call]:
        sym = scope.symbols[target.name]
        tc = sym.type.typecode
        if tc == "ch" and not self.options.trace_characters:
            return None
        if isinstance(target, A.Name):
            desc = target.display.upper()
        else:
            desc = emit_expr(target)
        sid = self._site(scope.sub.name, line, desc, tc)
        name = f"trace_{tc}_data"
        return A.Call(name, name, [string_literal(desc, line), copy.deepcopy(target),
                                   _int_lit(sid)], line=line)

    def _call_outputs(self, scope: Scope, s: A.Call) -> list:
        callee = self.scopes[s.name]
        out = []
        for dummy, actual in zip(callee.dummies, s.args):
            if dummy.intent not in ("out", "inout") or dummy.is_array:
                continue
            if isinstance(actual, A.Name) or (
                    isinstance(actual, A.Apply) and scope.symbols.get(actual.name) is not None
                    and scope.symbols[actual.name].is_array):
                call = self._data_call(scope, actual, s.line)
                if call is not None:
                    out.append(call)
        return out

    def block(self, scope: Scope, stmts: list) -> list:
        out = []
        is_function = scope.sub.kind == "function"
        for s in stmts:
            out.append(s)
            if isinstance(s, A.Assign):
                if is_function and isinstance(s.target, A.Name) and s.target.name == scope.sub.name:
                    continue
                call = self._data_call(scope, s.target, s.line)
                if call is not None:
                    out.append(call)
            elif isinstance(s, A.Do):
                head = self._data_call(scope, s.var, s.line)
                s.body = [head] + self.block(scope, s.body)
            elif isinstance(s, A.If):
                for br in s.branches:
                    br.body = self.block(scope, br.body)
                if s.else_body is not None:
                    s.else_body = self.block(scope, s.else_body)
            elif isinstance(s, A.Call) and self.options.trace_call_outputs:
                out.extend(self._call_outputs(scope, s))
        return out

    def subprogram(self, sp: A.Subprogram):
        scope = self.scopes[sp.name]
        name = sp.display.upper()
        sid = self._site(sp.name, sp.line, name, ENTRY)
        entry = A.Call(TRACE_START_CALL, TRACE_START_CALL,
                       [string_literal(name, sp.line), _int_lit(sid)], line=sp.line)
        sp.body = [entry] + self.block(scope, sp.body)


def instrument(unit: A.SourceUnit, options: InstrumentOptions = InstrumentOptions()):
    """Return ``(instrumented unit, SiteTable)``; the input is not modified."""
    if is_instrumented(unit):
        raise AlreadyInstrumented("unit already contains trace calls")
    inst = _Instrumenter(unit, options)
    unit = copy.deepcopy(unit)
    for sp in unit.subprograms:
        inst.subprogram(sp)
    return unit, inst.table


def emit_instrumented(unit: A.SourceUnit) -> str:
    return emit_items(unit.items)


def split_by_origin(unit: A.SourceUnit) -> dict:
    """Group a merged unit's items back into per-file text, keyed by origin."""
    groups = {}
    for item in unit.items:
        groups.setdefault(getattr(item, "origin", None), []).append(item)
    return {origin: emit_items(items) for origin, items in groups.items()}


def sites_from_instrumented(unit: A.SourceUnit) -> SiteTable:
    """Rebuild the site table from the trace calls of an instrumented unit."""
    table = SiteTable()
    for sp in unit.subprograms:
        for s in A.walk_stmts(sp.body):
            if not isinstance(s, A.Call):
                continue
            if s.name == TRACE_START_CALL:
                table.add(Site(s.args[1].value, sp.name, sp.line, s.args[0].value, ENTRY))
            elif s.name in TRACE_DATA_CALLS:
                table.add(Site(s.args[2].value, sp.name, s.line, s.args[0].value,
                               TRACE_DATA_CALLS[s.name]))
    return table


def write_site_table(table: SiteTable, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SITES_MAGIC + "\n")
        for s in table:
            fh.write(f"{s.id}\t{s.subprogram}\t{s.line}\t{s.descriptor}\t{s.typecode}\n")


def read_site_table(path) -> SiteTable:
    table = SiteTable()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != SITES_MAGIC:
            raise FormatError(f"not a site table (header {header!r})", 1, 0)
        for lineno, raw in enumerate(fh, start=2):
            parts = raw.rstrip("\n").split("\t")
            if len(parts) != 5:
                raise FormatError("site table record needs 5 fields", lineno, None)
            sid, sub, line, desc, tc = parts
            try:
                table.add(Site(int(sid), sub, int(line), desc, tc))
            except ValueError as exc:
                raise FormatError(str(exc), lineno, None) from None
    return table
