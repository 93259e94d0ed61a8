"""Static semantic analysis: name resolution, typing, intent checks and a
read-before-write dataflow pass.

``analyze`` never mutates its argument. The returned unit is an annotated
deep copy: every expression carries ``.type``, every ``Apply`` carries
``.resolved`` (``element``, ``function`` or ``intrinsic``), and implicit
integer-to-real conversions are explicit :class:`Widen` nodes.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional

from driftlens.errors import SemanticError
from driftlens.frontend import ast as A

INT32_MAX = 2**31 - 1

TRACE_DATA_CALLS = {f"trace_{tc}_data": tc for tc in ("i4", "r4", "r8", "l4", "ch")}
TRACE_START_CALL = "trace_start_sub_program"
RESERVED_CALLS = set(TRACE_DATA_CALLS) | {TRACE_START_CALL}

KEYWORDS = {
    "program", "subroutine", "function", "end", "do", "if", "then", "else", "call",
    "return", "print", "integer", "real", "logical", "character", "double", "precision",
    "parameter", "intent", "enddo", "endif", "elseif", "kind", "len",
}
INTRINSICS = {"abs", "sqrt", "exp", "log", "sin", "cos", "mod", "real", "dble", "int",
              "min", "max"}


@dataclass
class Symbol:
    name: str
    display: str
    type: A.TypeSpec
    bounds: Optional[tuple] = None
    intent: Optional[str] = None
    parameter: bool = False
    init: Optional[A.Expr] = None
    dummy: bool = False
    result: bool = False

    @property
    def is_array(self) -> bool:
        return self.bounds is not None


@dataclass
class Scope:
    sub: A.Subprogram
    symbols: dict = field(default_factory=dict)
    dummies: list = field(default_factory=list)  # Symbol, in parameter order

    def get(self, name: str) -> Optional[Symbol]:
        return self.symbols.get(name)

    @property
    def result(self) -> Optional[Symbol]:
        return self.symbols.get(self.sub.name) if self.sub.kind == "function" else None


@dataclass(frozen=True)
class ReadBeforeWrite:
    subprogram: str
    name: str
    line: int
    reason: str

    def __str__(self) -> str:
        return f"{self.subprogram.upper()}: line {self.line}: '{self.name}' {self.reason}"


@dataclass
class Analysis:
    unit: A.SourceUnit
    scopes: dict
    read_before_write: list

    def scope(self, name: str) -> Scope:
        return self.scopes[name.lower()]


def is_lvalue(e: A.Expr) -> bool:
    return isinstance(e, A.Name) or (isinstance(e, A.Apply) and e.resolved == "element")


def _err(msg, line=None):
    raise SemanticError(msg, line or None)


def _unify(types: list, line) -> A.TypeSpec:
    for t in types:
        if not t.is_numeric:
            _err(f"expected a numeric operand, found {t}", line)
    reals = [t for t in types if t.base == "real"]
    if not reals:
        return A.INTEGER
    return A.REAL8 if any(t.kind == 8 for t in reals) else A.REAL4


def _coerce(e: A.Expr, target: A.TypeSpec) -> A.Expr:
    """Insert a conversion node when ``e`` is numeric of another type."""
    t = e.type
    if t == target or not (t.is_numeric and target.base == "real"):
        return e
    return A.Widen(e, target)


def _assignable(value: A.Expr, target: A.TypeSpec, line, what="assignment") -> A.Expr:
    t = value.type
    if target.base == "character":
        if t.base != "character":
            _err(f"cannot assign {t} to {target} in {what}", line)
        return value
    if t.base == target.base and (t.base != "real" or t.kind == target.kind):
        return value
    if target.base == "real" and t.base in ("integer", "real"):
        return A.Widen(value, target)
    _err(f"cannot assign {t} to {target} in {what}", line)


class _Analyzer:
    def __init__(self, unit: A.SourceUnit):
        self.unit = unit
        self.items = {}
        self.scopes = {}
        self.scope: Optional[Scope] = None
        self.line = None
        self.loop_vars = []

    # -- declarations ------------------------------------------------------

    def collect(self):
        for sp in self.unit.subprograms:
            if sp.name in self.items:
                _err(f"duplicate subprogram name '{sp.display}'", sp.line)
            if sp.name in RESERVED_CALLS or sp.name in KEYWORDS or sp.name in INTRINSICS:
                _err(f"'{sp.display}' is a reserved name", sp.line)
            self.items[sp.name] = sp
        for sp in self.unit.subprograms:
            self.scopes[sp.name] = self._build_scope(sp)

    def _build_scope(self, sp: A.Subprogram) -> Scope:
        scope = Scope(sp)
        params = [p.lower() for p in sp.params]
        if len(set(params)) != len(params):
            _err(f"repeated parameter name in '{sp.display}'", sp.line)
        for d in sp.decls:
            if isinstance(d, A.Comment):
                continue
            for ent in d.entities:
                if ent.name in scope.symbols:
                    _err(f"'{ent.display}' declared twice", d.line)
                if ent.name in KEYWORDS or ent.name in INTRINSICS or ent.name in RESERVED_CALLS:
                    _err(f"'{ent.display}' is a reserved name", d.line)
                if ent.name in self.items and not (sp.kind == "function" and ent.name == sp.name):
                    _err(f"'{ent.display}' clashes with a subprogram name", d.line)
                dummy = ent.name in params
                if dummy and d.intent is None:
                    _err(f"parameter '{ent.display}' needs an explicit INTENT", d.line)
                if not dummy and d.intent is not None:
                    _err(f"INTENT given for '{ent.display}', which is not a parameter", d.line)
                if d.parameter and (dummy or ent.bounds is not None):
                    _err(f"PARAMETER '{ent.display}' must be a local scalar", d.line)
                if d.parameter and ent.init is None:
                    _err(f"PARAMETER '{ent.display}' needs a value", d.line)
                if dummy and ent.init is not None:
                    _err(f"parameter '{ent.display}' cannot be initialised", d.line)
                if d.type.length == "*" and not dummy:
                    _err(f"CHARACTER(*) is only allowed for parameters ('{ent.display}')", d.line)
                result = sp.kind == "function" and ent.name == sp.name
                if result and (ent.bounds is not None or ent.init is not None or d.parameter):
                    _err("function result must be a plain scalar", d.line)
                if result and sp.result_type is not None:
                    _err(f"result type of '{sp.display}' given twice", d.line)
                scope.symbols[ent.name] = Symbol(
                    ent.name, ent.display, d.type, ent.bounds, d.intent, d.parameter,
                    ent.init, dummy, result)
        for p in sp.params:
            if p.lower() not in scope.symbols:
                _err(f"parameter '{p}' of '{sp.display}' is not declared", sp.line)
            scope.dummies.append(scope.symbols[p.lower()])
        if sp.kind == "function" and sp.name not in scope.symbols:
            if sp.result_type is None:
                _err(f"function '{sp.display}' has no result type", sp.line)
            scope.symbols[sp.name] = Symbol(sp.name, sp.display, sp.result_type, result=True)
        return scope

    # -- driver ------------------------------------------------------------

    def run(self):
        self.collect()
        for sp in self.unit.subprograms:
            self.scope = self.scopes[sp.name]
            self.loop_vars = []
            for d in sp.decls:
                if isinstance(d, A.Comment):
                    continue
                self.line = d.line
                for ent in d.entities:
                    sym = self.scope.symbols[ent.name]
                    if ent.bounds is not None:
                        lo, hi = (self._int_expr(b) for b in ent.bounds)
                        ent.bounds = sym.bounds = (lo, hi)
                    if ent.init is not None:
                        init = _assignable(self.expr(ent.init), sym.type, d.line, "initialisation")
                        ent.init = sym.init = init
            self.block(sp.body)

    def _int_expr(self, e: A.Expr) -> A.Expr:
        e = self.expr(e)
        if e.type != A.INTEGER:
            _err(f"expected an INTEGER expression, found {e.type}", self.line)
        return e

    def _logical_expr(self, e: A.Expr) -> A.Expr:
        e = self.expr(e)
        if e.type != A.LOGICAL:
            _err(f"condition must be LOGICAL, found {e.type}", self.line)
        return e

    # -- statements --------------------------------------------------------

    def block(self, stmts: list):
        for s in stmts:
            self.stmt(s)

    def stmt(self, s: A.Stmt):
        if isinstance(s, A.Comment):
            return
        self.line = s.line
        if isinstance(s, A.Assign):
            s.target = self.lvalue(s.target, "assign to")
            s.value = _assignable(self.expr(s.value), s.target.type, s.line)
        elif isinstance(s, A.Do):
            s.var = self.lvalue(s.var, "use as loop variable")
            if s.var.type != A.INTEGER or not isinstance(s.var, A.Name):
                _err("DO variable must be an INTEGER scalar", s.line)
            s.start = self._int_expr(s.start)
            s.stop = self._int_expr(s.stop)
            if s.step is not None:
                s.step = self._int_expr(s.step)
                if isinstance(s.step, A.Literal) and s.step.value == 0:
                    _err("DO step cannot be zero", s.line)
            self.loop_vars.append(s.var.name)
            self.block(s.body)
            self.loop_vars.pop()
        elif isinstance(s, A.If):
            for br in s.branches:
                self.line = br.line
                br.cond = self._logical_expr(br.cond)
                self.block(br.body)
            if s.else_body is not None:
                self.block(s.else_body)
        elif isinstance(s, A.Call):
            self.call(s)
        elif isinstance(s, A.Print):
            s.items = [self.expr(i) for i in s.items]
        elif isinstance(s, A.Return):
            pass
        else:
            raise TypeError(type(s).__name__)

    def lvalue(self, e: A.Expr, what: str) -> A.Expr:
        sym = self.scope.get(e.name)
        if sym is None:
            _err(f"'{e.display}' is not declared", self.line)
        if sym.parameter:
            _err(f"cannot {what} PARAMETER '{e.display}'", self.line)
        if sym.intent == "in":
            _err(f"cannot {what} INTENT(IN) parameter '{e.display}'", self.line)
        if e.name in self.loop_vars:
            _err(f"cannot {what} active DO variable '{e.display}'", self.line)
        if isinstance(e, A.Name):
            if sym.is_array:
                _err(f"whole-array assignment to '{e.display}' is not supported", self.line)
            e.type = sym.type
            return e
        if not sym.is_array:
            _err(f"'{e.display}' is not an array", self.line)
        return self.expr(e)

    def call(self, s: A.Call):
        if s.name in RESERVED_CALLS:
            self.trace_call(s)
            return
        callee = self.items.get(s.name)
        if callee is None:
            _err(f"call to undefined subroutine '{s.display}'", s.line)
        if callee.kind != "subroutine":
            _err(f"'{s.display}' is a {callee.kind}, not a subroutine", s.line)
        s.args = self.actuals(self.scopes[s.name], s.args, s.display)

    def trace_call(self, s: A.Call):
        if s.name == TRACE_START_CALL:
            if (len(s.args) != 2 or not _is_char_lit(s.args[0])
                    or not _is_int_lit(s.args[1])):
                _err(f"malformed {TRACE_START_CALL} call", s.line)
            s.args = [self.expr(a) for a in s.args]
            return
        tc = TRACE_DATA_CALLS[s.name]
        if len(s.args) != 3 or not _is_char_lit(s.args[0]) or not _is_int_lit(s.args[2]):
            _err(f"malformed {s.display} call", s.line)
        target = s.args[1]
        if not isinstance(target, (A.Name, A.Apply)):
            _err(f"{s.display} must trace a variable", s.line)
        target = self.expr(target)
        if not is_lvalue(target) or target.type.typecode != tc:
            _err(f"{s.display} applied to a {target.type} value", s.line)
        s.args = [self.expr(s.args[0]), target, self.expr(s.args[2])]

    def actuals(self, callee: Scope, args: list, display: str) -> list:
        if len(args) != len(callee.dummies):
            _err(f"'{display}' takes {len(callee.dummies)} arguments, got {len(args)}", self.line)
        out = []
        for dummy, actual in zip(callee.dummies, args):
            if dummy.is_array:
                sym = self.scope.get(actual.name) if isinstance(actual, A.Name) else None
                if sym is None or not sym.is_array:
                    _err(f"argument '{dummy.display}' of '{display}' must be an array", self.line)
                if sym.type != dummy.type:
                    _err(f"array argument '{dummy.display}' of '{display}' has type {sym.type}, "
                         f"expected {dummy.type}", self.line)
                if dummy.intent != "in" and sym.intent == "in":
                    _err(f"INTENT(IN) array '{actual.display}' passed to "
                         f"INTENT({dummy.intent.upper()})", self.line)
                actual.type = sym.type
                out.append(actual)
                continue
            a = self.expr(actual)
            if not _same_type(a.type, dummy.type):
                _err(f"argument '{dummy.display}' of '{display}' has type {a.type}, "
                     f"expected {dummy.type}", self.line)
            if dummy.intent in ("out", "inout"):
                if not is_lvalue(a):
                    _err(f"argument '{dummy.display}' of '{display}' is INTENT("
                         f"{dummy.intent.upper()}) and needs a variable", self.line)
                self.lvalue(copy.copy(a) if isinstance(a, A.Name) else a, "pass for writing")
            out.append(a)
        return out

    # -- expressions -------------------------------------------------------

    def expr(self, e: A.Expr) -> A.Expr:
        if isinstance(e, A.Widen):
            return self.expr(e.operand)
        if isinstance(e, A.Literal):
            if e.ltype == A.INTEGER and e.value > INT32_MAX:
                _err(f"integer literal {e.text} out of range", self.line)
            e.type = e.ltype
            return e
        if isinstance(e, A.Name):
            return self.name(e)
        if isinstance(e, A.Apply):
            return self.apply(e)
        if isinstance(e, A.Paren):
            e.inner = self.expr(e.inner)
            e.type = e.inner.type
            return e
        if isinstance(e, A.Unary):
            e.operand = self.expr(e.operand)
            if e.op == ".NOT.":
                if e.operand.type != A.LOGICAL:
                    _err(".NOT. needs a LOGICAL operand", self.line)
            else:
                _unify([e.operand.type], self.line)
            e.type = e.operand.type
            return e
        if isinstance(e, A.Sum):
            e.terms = [(s, self.expr(t)) for s, t in e.terms]
            e.type = _unify([t.type for _, t in e.terms], self.line)
            e.terms = [(s, _coerce(t, e.type)) for s, t in e.terms]
            return e
        if isinstance(e, A.Product):
            e.factors = [self.expr(f) for f in e.factors]
            e.type = _unify([f.type for f in e.factors], self.line)
            e.factors = [_coerce(f, e.type) for f in e.factors]
            return e
        if isinstance(e, A.LogicalChain):
            e.operands = [self.expr(o) for o in e.operands]
            for o in e.operands:
                if o.type != A.LOGICAL:
                    _err(f"{e.op} needs LOGICAL operands, found {o.type}", self.line)
            e.type = A.LOGICAL
            return e
        if isinstance(e, A.Binary):
            return self.binary(e)
        raise TypeError(type(e).__name__)

    def binary(self, e: A.Binary) -> A.Expr:
        e.left = self.expr(e.left)
        e.right = self.expr(e.right)
        lt, rt = e.left.type, e.right.type
        if e.op == "**":
            t = _unify([lt, rt], self.line)
            e.left = _coerce(e.left, t)
            if rt.base == "real":
                e.right = _coerce(e.right, t)
            e.type = t
            return e
        if e.op == "/":
            t = _unify([lt, rt], self.line)
            e.left, e.right = _coerce(e.left, t), _coerce(e.right, t)
            e.type = t
            return e
        # relational
        if lt.base == "character" and rt.base == "character":
            e.type = A.LOGICAL
            return e
        if lt.base == "logical" or rt.base == "logical":
            _err(f"operator {e.op} does not apply to LOGICAL operands", self.line)
        t = _unify([lt, rt], self.line)
        e.left, e.right = _coerce(e.left, t), _coerce(e.right, t)
        e.type = A.LOGICAL
        return e

    def name(self, e: A.Name) -> A.Expr:
        sym = self.scope.get(e.name)
        if sym is None:
            if e.name in self.items:
                _err(f"subprogram '{e.display}' used as a value", self.line)
            _err(f"'{e.display}' is not declared", self.line)
        if sym.is_array:
            _err(f"array '{e.display}' needs an index here", self.line)
        e.type = sym.type
        return e

    def apply(self, e: A.Apply) -> A.Expr:
        sym = self.scope.get(e.name)
        if sym is not None:
            if sym.result:
                _err(f"recursive reference to '{e.display}' is not supported", self.line)
            if not sym.is_array:
                _err(f"'{e.display}' is not an array or function", self.line)
            if len(e.args) != 1:
                _err(f"'{e.display}' takes exactly one index", self.line)
            e.args = [self._int_expr(e.args[0])]
            e.resolved = "element"
            e.type = sym.type
            return e
        callee = self.items.get(e.name)
        if callee is not None:
            if callee.kind != "function":
                _err(f"'{e.display}' is a {callee.kind}, not a function", self.line)
            cscope = self.scopes[e.name]
            e.args = self.actuals(cscope, e.args, e.display)
            e.resolved = "function"
            e.type = cscope.result.type
            return e
        if e.name in INTRINSICS:
            return self.intrinsic(e)
        _err(f"'{e.display}' is not declared", self.line)

    def intrinsic(self, e: A.Apply) -> A.Expr:
        e.resolved = "intrinsic"
        args = [self.expr(a) for a in e.args]
        n = e.name

        def arity(k):
            if len(args) != k:
                _err(f"{n.upper()} takes {k} argument(s)", self.line)

        if n in ("min", "max"):
            if len(args) < 2:
                _err(f"{n.upper()} takes at least 2 arguments", self.line)
            e.type = _unify([a.type for a in args], self.line)
            args = [_coerce(a, e.type) for a in args]
        elif n == "mod":
            arity(2)
            e.type = _unify([a.type for a in args], self.line)
            args = [_coerce(a, e.type) for a in args]
        elif n == "abs":
            arity(1)
            e.type = _unify([args[0].type], self.line)
        elif n in ("sqrt", "exp", "log", "sin", "cos"):
            arity(1)
            if args[0].type.base != "real":
                _err(f"{n.upper()} needs a REAL argument", self.line)
            e.type = args[0].type
        elif n in ("real", "dble", "int"):
            arity(1)
            _unify([args[0].type], self.line)
            e.type = {"real": A.REAL4, "dble": A.REAL8, "int": A.INTEGER}[n]
        e.args = args
        return e


def _same_type(actual: A.TypeSpec, dummy: A.TypeSpec) -> bool:
    if dummy.base == "character":
        return actual.base == "character"
    return actual == dummy


def _is_char_lit(e) -> bool:
    return isinstance(e, A.Literal) and isinstance(e.value, str)


def _is_int_lit(e) -> bool:
    return isinstance(e, A.Literal) and e.ltype == A.INTEGER


# -- read-before-write ------------------------------------------------------

def _is_variable(e) -> bool:
    return isinstance(e, A.Name) or (isinstance(e, A.Apply) and e.resolved == "element")


def _children(e: A.Expr) -> list:
    if isinstance(e, A.Apply):
        return list(e.args)
    if isinstance(e, A.Paren):
        return [e.inner]
    if isinstance(e, (A.Unary, A.Widen)):
        return [e.operand]
    if isinstance(e, A.Binary):
        return [e.left, e.right]
    if isinstance(e, A.Sum):
        return [t for _, t in e.terms]
    if isinstance(e, A.Product):
        return list(e.factors)
    if isinstance(e, A.LogicalChain):
        return list(e.operands)
    return []


class _Dataflow:
    """Definite-assignment analysis over the annotated unit."""

    def __init__(self, analyzer: _Analyzer):
        self.scopes = analyzer.scopes
        self.summaries = {}
        self.in_progress = set()
        self.findings = []

    def summary(self, name: str) -> set:
        """Names of dummies definitely written when ``name`` returns."""
        if name in self.summaries:
            return self.summaries[name]
        if name in self.in_progress:
            return {d.name for d in self.scopes[name].dummies}
        self.in_progress.add(name)
        scope = self.scopes[name]
        flagged = set()
        exits = []
        state = self._initial(scope)
        saved = getattr(self, "cur", None)
        self.cur = (scope, flagged, exits)
        end = self.block(scope.sub.body, state)
        self.cur = saved
        if end is not None:
            exits.append(end)
        done = set.intersection(*exits) if exits else set()
        written = {d.name for d in scope.dummies if ("w", d.name) in done}
        self.in_progress.discard(name)
        self.summaries[name] = written
        res = scope.result
        if res is not None and ("w", res.name) not in done:
            self._flag(scope, flagged, res, scope.sub.end_line,
                       "(the function result) may be returned without being assigned")
        return written

    @staticmethod
    def _initial(scope: Scope) -> set:
        out = set()
        for sym in scope.symbols.values():
            if sym.parameter or sym.init is not None or (sym.dummy and sym.intent != "out"):
                out.add(sym.name)
        return out

    def _flag(self, scope, flagged, sym, line, reason):
        if sym.name in flagged:
            return
        flagged.add(sym.name)
        self.findings.append(ReadBeforeWrite(scope.sub.display, sym.display, line, reason))

    def read(self, e: A.Expr, state: set, line: int):
        scope, flagged, _ = self.cur
        if isinstance(e, A.Apply) and e.resolved == "function":
            self._call_args(self.scopes[e.name], e.args, state, line, e.display)
            return
        if isinstance(e, (A.Name, A.Apply)) and e.name not in state:
            sym = scope.get(e.name)
            if sym is not None:
                self._flag(scope, flagged, sym, line, "is read before any write")
        for child in _children(e):
            self.read(child, state, line)

    def _call_args(self, callee: Scope, args: list, state: set, line: int, display: str):
        """Account for a call's reads and writes of the caller's variables."""
        scope, flagged, _ = self.cur
        written = self.summary(callee.sub.name)
        for dummy, actual in zip(callee.dummies, args):
            if not _is_variable(actual):
                self.read(actual, state, line)
                continue
            if isinstance(actual, A.Apply):
                self.read(actual.args[0], state, line)
            sym = scope.get(actual.name)
            if dummy.intent != "out" and actual.name not in state and sym is not None:
                if dummy.intent == "inout" and dummy.name not in written:
                    reason = (f"is passed uninitialised to INTENT(INOUT) '{dummy.display}' "
                              f"of {display.upper()}, which never assigns it")
                else:
                    reason = "is read before any write"
                self._flag(scope, flagged, sym, line, reason)
        for dummy, actual in zip(callee.dummies, args):
            if dummy.intent != "in" and dummy.name in written and _is_variable(actual):
                state.update((actual.name, ("w", actual.name)))

    def _const(self, e: A.Expr) -> Optional[int]:
        """Value of an integer expression built from literals and PARAMETERs."""
        scope = self.cur[0]
        if isinstance(e, A.Literal) and isinstance(e.value, int) and not isinstance(e.value, bool):
            return e.value
        if isinstance(e, A.Name):
            sym = scope.get(e.name)
            return self._const(sym.init) if sym is not None and sym.parameter else None
        if isinstance(e, A.Paren):
            return self._const(e.inner)
        if isinstance(e, A.Unary) and e.op in "+-":
            v = self._const(e.operand)
            return None if v is None else (-v if e.op == "-" else v)
        if isinstance(e, A.Sum):
            vals = [self._const(t) for _, t in e.terms]
            if None in vals:
                return None
            return sum(-v if sign == "-" else v for (sign, _), v in zip(e.terms, vals))
        if isinstance(e, A.Product):
            out = 1
            for f in e.factors:
                v = self._const(f)
                if v is None:
                    return None
                out *= v
            return out
        return None

    def _runs_at_least_once(self, s: A.Do) -> bool:
        start, stop = self._const(s.start), self._const(s.stop)
        step = 1 if s.step is None else self._const(s.step)
        if None in (start, stop, step) or step == 0:
            return False
        return (stop - start + step) // step >= 1

    def block(self, stmts: list, state: Optional[set]) -> Optional[set]:
        for s in stmts:
            if state is None:
                return None
            state = self.stmt(s, state)
        return state

    def stmt(self, s, state: set) -> Optional[set]:
        _, _, exits = self.cur
        if isinstance(s, A.Comment):
            return state
        if isinstance(s, A.Assign):
            self.read(s.value, state, s.line)
            if isinstance(s.target, A.Apply):
                self.read(s.target.args[0], state, s.line)
            state = set(state)
            state.update((s.target.name, ("w", s.target.name)))
            return state
        if isinstance(s, A.Do):
            for e in (s.start, s.stop, s.step):
                if e is not None:
                    self.read(e, state, s.line)
            inner = set(state) | {s.var.name, ("w", s.var.name)}
            end = self.block(s.body, inner)
            if self._runs_at_least_once(s):
                return end
            return set(state) | {s.var.name, ("w", s.var.name)}
        if isinstance(s, A.If):
            outs = []
            cur = state
            for br in s.branches:
                self.read(br.cond, cur, br.line)
                outs.append(self.block(br.body, set(cur)))
            outs.append(self.block(s.else_body, set(cur)) if s.else_body is not None else set(cur))
            live = [o for o in outs if o is not None]
            return set.intersection(*live) if live else None
        if isinstance(s, A.Call):
            state = set(state)
            if s.name in RESERVED_CALLS:
                for a in s.args:
                    self.read(a, state, s.line)
                return state
            self._call_args(self.scopes[s.name], s.args, state, s.line, s.display)
            return state
        if isinstance(s, A.Print):
            for i in s.items:
                self.read(i, state, s.line)
            return state
        if isinstance(s, A.Return):
            exits.append(set(state))
            return None
        return state


def analyze(unit: A.SourceUnit) -> Analysis:
    """Resolve, type-check and annotate ``unit``; see the module docstring."""
    unit = copy.deepcopy(unit)
    an = _Analyzer(unit)
    an.run()
    flow = _Dataflow(an)
    for sp in unit.subprograms:
        flow.summary(sp.name)
    order = {sp.name: i for i, sp in enumerate(unit.subprograms)}
    findings = sorted(flow.findings, key=lambda f: (order[f.subprogram.lower()], f.line))
    return Analysis(unit, an.scopes, findings)
