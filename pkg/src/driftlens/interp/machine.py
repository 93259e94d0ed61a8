"""Tree-walking interpreter with a configurable floating-point environment.

Trace calls inserted by the instrumenter are executed here: depending on
the run mode they are ignored, written to a capture session, or compared
against a reference trace with the reference value stored back into the
traced variable.
"""
from __future__ import annotations

import math
import random
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from driftlens.errors import RuntimeFault
from driftlens.frontend import ast as A
from driftlens.frontend.semantics import (
    TRACE_DATA_CALLS, TRACE_START_CALL, Analysis, Scope, analyze,
)
from driftlens.interp.env import AssocOrder, FPEnvironment, Mode, Precision, RunConfig, ShortCircuit
from driftlens.interp.numeric import (
    EXT, SPACE_I4, SPACE_R4, SPACE_R8, ext, is_ext, round_real, to_f32, wrap_i32,
)
from driftlens.runtime import (
    DATA, RETURN, START, CaptureSession, CompareSession, DifferenceReport, Different,
    SequenceDivergence, Similar,
)


class Cell:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


class ArrayStore:
    __slots__ = ("lo", "hi", "data")

    def __init__(self, lo: int, hi: int, data: list):
        self.lo, self.hi, self.data = lo, hi, data

    def offset(self, index: int, fault) -> int:
        if not self.lo <= index <= self.hi:
            fault(f"index {index} out of bounds {self.lo}:{self.hi}")
        return index - self.lo


class ElementRef:
    """A single array element bound to a scalar dummy argument."""
    __slots__ = ("store", "pos")

    def __init__(self, store: ArrayStore, pos: int):
        self.store, self.pos = store, pos

    @property
    def value(self):
        return self.store.data[self.pos]

    @value.setter
    def value(self, v):
        self.store.data[self.pos] = v


class Frame:
    __slots__ = ("scope", "vars", "entry")

    def __init__(self, scope: Scope):
        self.scope = scope
        self.vars = {}
        self.entry = None


class _Return(Exception):
    pass


class _Halt(Exception):
    def __init__(self, reason: str):
        self.reason = reason


# -- tracing back ends ---------------------------------------------------------

class _Tracer:
    shadow = None

    def __init__(self, limit: Optional[int] = None):
        self.limit = limit
        self.count = 0

    def _tick(self):
        if self.limit is not None and self.count >= self.limit:
            raise _Halt("limit")
        self.count += 1

    def data(self, site, desc, tc, value):
        return None

    def start(self, site, name):
        pass

    def ret(self, site, name):
        pass


class _CaptureTracer(_Tracer):
    def __init__(self, session: CaptureSession, limit):
        super().__init__(limit)
        self.session = session

    def data(self, site, desc, tc, value):
        if tc == "ch" and not self.session.policy.compare_characters:
            return None
        self._tick()
        self.session.record(DATA, site, desc, tc, value)
        return None

    def start(self, site, name):
        self._tick()
        self.session.record(START, site, name)

    def ret(self, site, name):
        self._tick()
        self.session.record(RETURN, site, name)


class _CompareTracer(_Tracer):
    def __init__(self, session: CompareSession, limit, shadow: Optional[CaptureSession]):
        super().__init__(limit)
        self.session = session
        self.shadow = shadow

    def _check(self, outcome):
        if isinstance(outcome, SequenceDivergence):
            raise _Halt("divergence")

    def data(self, site, desc, tc, value):
        if tc == "ch" and not self.session.policy.compare_characters:
            return None
        self._tick()
        outcome = self.session.compare(DATA, site, desc, tc, value)
        self._check(outcome)
        if isinstance(outcome, (Similar, Different)):
            return outcome.reference
        return None

    def start(self, site, name):
        self._tick()
        self._check(self.session.compare(START, site, name))
        if self.shadow:
            self.shadow.record(START, site, name)

    def ret(self, site, name):
        self._tick()
        self._check(self.session.compare(RETURN, site, name))
        if self.shadow:
            self.shadow.record(RETURN, site, name)


# -- interpreter -----------------------------------------------------------------

class Interpreter:
    def __init__(self, analysis: Analysis, env: FPEnvironment = FPEnvironment(),
                 tracer: Optional[_Tracer] = None):
        self.analysis = analysis
        self.env = env
        self.tracer = tracer
        self.extended = env.precision is Precision.EXTENDED
        self.rng = random.Random(env.uninit_fill.seed)
        self.executed = set()
        self.output = []
        self.line = None
        self.sub = None
        self.program_frame: Optional[Frame] = None
        self._stmt_dispatch = {
            A.Assign: self._assign, A.Do: self._do, A.If: self._if, A.Call: self._call_stmt,
            A.Print: self._print, A.Return: self._return, A.Comment: lambda s, f: None,
        }
        self._expr_dispatch = {
            A.Literal: self._literal, A.Name: self._name, A.Apply: self._apply,
            A.Paren: lambda e, f: self.eval(e.inner, f), A.Widen: self._widen,
            A.Unary: self._unary, A.Binary: self._binary, A.Sum: self._sum,
            A.Product: self._product, A.LogicalChain: self._chain,
        }

    def fault(self, msg: str):
        raise RuntimeFault(msg, self.line, self.sub)

    # -- storage -----------------------------------------------------------

    def fill(self, t: A.TypeSpec, length=None):
        mode = self.env.uninit_fill.mode
        n = length if isinstance(length, int) else 0
        if t.base == "integer":
            return {"zero": 0, "space": SPACE_I4}.get(mode) if mode != "seeded" \
                else wrap_i32(self.rng.getrandbits(32))
        if t.base == "real":
            if mode == "zero":
                return 0.0
            if mode == "space":
                return SPACE_R8 if t.kind == 8 else SPACE_R4
            return round_real(t.kind, self.rng.uniform(-1000.0, 1000.0))
        if t.base == "logical":
            if mode == "seeded":
                return bool(self.rng.getrandbits(1))
            return mode == "space"
        if mode == "seeded":
            return "".join(self.rng.choice(string.ascii_lowercase) for _ in range(n))
        return " " * n

    def convert(self, t: A.TypeSpec, value, current=None):
        """Convert an evaluated value to storage of type ``t``."""
        if t.base == "integer":
            return wrap_i32(value)
        if t.base == "real":
            return round_real(t.kind, value)
        if t.base == "logical":
            return bool(value)
        n = t.length if isinstance(t.length, int) else len(current or "")
        return value[:n].ljust(n)

    def new_frame(self, scope: Scope, bindings: dict) -> Frame:
        frame = Frame(scope)
        for sym in scope.dummies:
            if not sym.is_array:
                frame.vars[sym.name] = bindings[sym.name]
        for d in scope.sub.decls:
            if isinstance(d, A.Comment):
                continue
            for ent in d.entities:
                sym = scope.symbols[ent.name]
                if sym.dummy:
                    continue
                if sym.is_array:
                    lo, hi = (self.eval(b, frame) for b in sym.bounds)
                    size = max(0, hi - lo + 1)
                    frame.vars[sym.name] = ArrayStore(
                        lo, hi, [self.fill(sym.type, sym.type.length) for _ in range(size)])
                elif sym.init is not None:
                    frame.vars[sym.name] = Cell(self.convert(sym.type, self.eval(sym.init, frame)))
                else:
                    frame.vars[sym.name] = Cell(self.fill(sym.type, sym.type.length))
        for sym in scope.dummies:
            if sym.is_array:
                actual = bindings[sym.name]
                lo, hi = (self.eval(b, frame) for b in sym.bounds)
                if hi - lo + 1 > len(actual.data):
                    self.fault(f"array argument '{sym.display}' declared larger than actual")
                frame.vars[sym.name] = ArrayStore(lo, hi, actual.data)
        res = scope.result
        if res is not None and res.name not in frame.vars:
            frame.vars[res.name] = Cell(self.fill(res.type, res.type.length))
        return frame

    def lvalue_ref(self, e: A.Expr, frame: Frame):
        if isinstance(e, A.Name):
            return frame.vars[e.name]
        store = frame.vars[e.name]
        return ElementRef(store, store.offset(self.eval(e.args[0], frame), self.fault))

    # -- calls ---------------------------------------------------------------

    def bind_args(self, callee: Scope, args: list, frame: Frame) -> dict:
        bindings = {}
        for dummy, actual in zip(callee.dummies, args):
            if dummy.is_array:
                bindings[dummy.name] = frame.vars[actual.name]
            elif isinstance(actual, A.Name):
                bindings[dummy.name] = frame.vars[actual.name]
            elif isinstance(actual, A.Apply) and actual.resolved == "element":
                bindings[dummy.name] = self.lvalue_ref(actual, frame)
            else:
                v = self.eval(actual, frame)
                if dummy.type.base == "character":
                    bindings[dummy.name] = Cell(v)
                else:
                    bindings[dummy.name] = Cell(self.convert(dummy.type, v))
        return bindings

    def invoke(self, name: str, bindings: dict) -> Frame:
        scope = self.analysis.scopes[name]
        saved = self.line, self.sub
        self.sub = scope.sub.name
        frame = self.new_frame(scope, bindings)
        if scope.sub.kind == "program":
            self.program_frame = frame
        try:
            self.exec_block(scope.sub.body, frame)
        except _Return:
            pass
        if frame.entry is not None and self.tracer is not None:
            self.tracer.ret(*frame.entry)
        self.line, self.sub = saved
        return frame

    def run_program(self, name: str) -> Frame:
        return self.invoke(name.lower(), {})

    # -- statements ----------------------------------------------------------

    def exec_block(self, stmts: list, frame: Frame):
        dispatch = self._stmt_dispatch
        for s in stmts:
            dispatch[type(s)](s, frame)

    def _assign(self, s: A.Assign, frame: Frame):
        self.line = s.line
        value = self.eval(s.value, frame)
        t = s.target
        if isinstance(t, A.Name):
            cell = frame.vars[t.name]
            cell.value = self.convert(t.type, value, cell.value)
        else:
            store = frame.vars[t.name]
            pos = store.offset(self.eval(t.args[0], frame), self.fault)
            store.data[pos] = self.convert(t.type, value, store.data[pos])

    def _do(self, s: A.Do, frame: Frame):
        self.line = s.line
        start = self.eval(s.start, frame)
        stop = self.eval(s.stop, frame)
        step = self.eval(s.step, frame) if s.step is not None else 1
        if step == 0:
            self.fault("DO step is zero")
        trips = max(0, (stop - start + step) // step)
        cell = frame.vars[s.var.name]
        cell.value = start
        for _ in range(trips):
            self.exec_block(s.body, frame)
            cell.value = wrap_i32(cell.value + step)

    def _if(self, s: A.If, frame: Frame):
        for br in s.branches:
            self.line = br.line
            if self.eval(br.cond, frame):
                self.exec_block(br.body, frame)
                return
        if s.else_body is not None:
            self.exec_block(s.else_body, frame)

    def _call_stmt(self, s: A.Call, frame: Frame):
        self.line = s.line
        if s.name in TRACE_DATA_CALLS:
            self._trace_data(s, frame)
        elif s.name == TRACE_START_CALL:
            site = s.args[1].value
            self.executed.add(site)
            frame.entry = (site, s.args[0].value)
            if self.tracer is not None:
                self.tracer.start(*frame.entry)
        else:
            callee = self.analysis.scopes[s.name]
            self.invoke(s.name, self.bind_args(callee, s.args, frame))

    def _trace_data(self, s: A.Call, frame: Frame):
        site = s.args[2].value
        self.executed.add(site)
        if self.tracer is None:
            return
        desc, target = s.args[0].value, s.args[1]
        tc = TRACE_DATA_CALLS[s.name]
        ref = self.lvalue_ref(target, frame)
        new = self.tracer.data(site, desc, tc, ref.value)
        if new is not None:
            ref.value = self.convert(target.type, new, ref.value)
        if self.tracer.shadow is not None and (tc != "ch" or self.tracer.shadow.policy.compare_characters):
            self.tracer.shadow.record(DATA, site, desc, tc, ref.value)

    def _print(self, s: A.Print, frame: Frame):
        self.line = s.line
        parts = []
        for item in s.items:
            v = self.eval(item, frame)
            t = item.type
            if t.base == "real":
                v = round_real(t.kind, v)
                parts.append(f"{v:.9G}" if t.kind == 4 else f"{v:.17G}")
            elif t.base == "logical":
                parts.append("T" if v else "F")
            else:
                parts.append(str(v))
        self.output.append(" ".join(parts))

    def _return(self, s: A.Return, frame: Frame):
        raise _Return()

    # -- expressions ---------------------------------------------------------

    def eval(self, e: A.Expr, frame: Frame):
        return self._expr_dispatch[type(e)](e, frame)

    def _literal(self, e: A.Literal, frame):
        if e.ltype.base == "real":
            return round_real(e.ltype.kind, e.value)
        return e.value

    def _name(self, e: A.Name, frame: Frame):
        return frame.vars[e.name].value

    def _apply(self, e: A.Apply, frame: Frame):
        if e.resolved == "element":
            store = frame.vars[e.name]
            return store.data[store.offset(self.eval(e.args[0], frame), self.fault)]
        if e.resolved == "function":
            callee = self.analysis.scopes[e.name]
            done = self.invoke(e.name, self.bind_args(callee, e.args, frame))
            return done.vars[e.name].value
        return self._intrinsic(e, frame)

    def _widen(self, e: A.Widen, frame: Frame):
        v = self.eval(e.operand, frame)
        if self.extended:
            return ext(v)
        return round_real(e.type.kind, v)

    def _unary(self, e: A.Unary, frame: Frame):
        v = self.eval(e.operand, frame)
        if e.op == ".NOT.":
            return not v
        if e.op == "+":
            return v
        return wrap_i32(-v) if e.type.base == "integer" else -v

    # arithmetic primitives; ``t`` is the result type

    def add(self, a, b, t):
        if t.base == "integer":
            return wrap_i32(a + b)
        if self.extended:
            return ext(a) + ext(b)
        r = a + b
        return to_f32(r) if t.kind == 4 else r

    def mul(self, a, b, t):
        if t.base == "integer":
            return wrap_i32(a * b)
        if self.extended:
            return ext(a) * ext(b)
        r = a * b
        return to_f32(r) if t.kind == 4 else r

    def div(self, a, b, t):
        if b == 0:
            self.fault("division by zero")
        if t.base == "integer":
            q = abs(a) // abs(b)
            return wrap_i32(q if (a >= 0) == (b >= 0) else -q)
        if self.extended:
            return ext(a) / ext(b)
        r = a / b
        return to_f32(r) if t.kind == 4 else r

    def power(self, a, b, t):
        if t.base == "integer" and isinstance(b, int):
            if b < 0:
                if a == 0:
                    self.fault("zero raised to a negative power")
                if abs(a) == 1:
                    return a if b % 2 else 1
                return 0
            return wrap_i32(pow(a, b, 1 << 32))
        if a == 0 and b < 0:
            self.fault("zero raised to a negative power")
        if a < 0 and not isinstance(b, int) and b != int(b):
            self.fault("negative base raised to a non-integer power")
        if self.extended:
            return ext(a) ** (b if isinstance(b, int) else ext(b))
        try:
            r = float(a) ** b
        except OverflowError:
            r = math.inf if a > 0 or (isinstance(b, int) and b % 2 == 0) else -math.inf
        return to_f32(r) if t.kind == 4 else r

    def fold(self, vals: list, op, t):
        order = self.env.assoc_order
        if order is AssocOrder.LEFT_TO_RIGHT:
            acc = vals[0]
            for v in vals[1:]:
                acc = op(acc, v, t)
            return acc
        if order is AssocOrder.RIGHT_TO_LEFT:
            acc = vals[-1]
            for v in reversed(vals[:-1]):
                acc = op(v, acc, t)
            return acc
        return self._pairwise(vals, op, t)

    def _pairwise(self, vals: list, op, t):
        if len(vals) == 1:
            return vals[0]
        mid = (len(vals) + 1) // 2
        return op(self._pairwise(vals[:mid], op, t), self._pairwise(vals[mid:], op, t), t)

    def _sum(self, e: A.Sum, frame: Frame):
        vals = []
        for sign, term in e.terms:
            v = self.eval(term, frame)
            vals.append(-v if sign == "-" else v)
        return self.fold(vals, self.add, e.type)

    def _product(self, e: A.Product, frame: Frame):
        return self.fold([self.eval(f, frame) for f in e.factors], self.mul, e.type)

    def _binary(self, e: A.Binary, frame: Frame):
        a = self.eval(e.left, frame)
        b = self.eval(e.right, frame)
        op = e.op
        if op == "/":
            return self.div(a, b, e.type)
        if op == "**":
            return self.power(a, b, e.type)
        if isinstance(a, str):
            n = max(len(a), len(b))
            a, b = a.ljust(n), b.ljust(n)
        if op == "==":
            return a == b
        if op == "/=":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        return a >= b

    def _chain(self, e: A.LogicalChain, frame: Frame):
        operands = e.operands
        if self.env.shortcircuit_order is ShortCircuit.REVERSED:
            operands = reversed(operands)
        stop_on = e.op == ".OR."
        for o in operands:
            if bool(self.eval(o, frame)) is stop_on:
                return stop_on
        return not stop_on

    def _intrinsic(self, e: A.Apply, frame: Frame):
        args = [self.eval(a, frame) for a in e.args]
        n, t = e.name, e.type
        if n == "real":
            return round_real(4, args[0])
        if n == "dble":
            return round_real(8, args[0])
        if n == "int":
            x = args[0]
            if isinstance(x, int):
                return x
            if x != x or x in (math.inf, -math.inf):
                self.fault("INT of a non-finite value")
            return wrap_i32(int(x))
        if n in ("min", "max"):
            pick = min if n == "min" else max
            return pick(args)
        if n == "abs":
            x = args[0]
            return wrap_i32(abs(x)) if t.base == "integer" else abs(x)
        if n == "mod":
            a, p = args
            if p == 0:
                self.fault("MOD with zero divisor")
            if t.base == "integer":
                return a - p * int(a / p) if abs(a) < 2**52 else wrap_i32(math.fmod(a, p))
            if self.extended:
                return EXT.fmod(ext(a), ext(p))
            return round_real(t.kind, math.fmod(a, p))
        x = args[0]
        if n == "sqrt" and x < 0:
            self.fault("SQRT of a negative value")
        if n == "log" and x <= 0:
            self.fault("LOG of a non-positive value")
        if self.extended:
            return getattr(EXT, n)(ext(x))
        try:
            r = getattr(math, n)(x)
        except OverflowError:
            r = math.inf
        return round_real(t.kind, r)


# -- driver ----------------------------------------------------------------------

@dataclass
class RunSummary:
    final_state: dict
    records: int
    report: Optional[DifferenceReport]
    executed_sites: set
    exit_status: int
    output: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    truncated: bool = False


def _snapshot(frame: Optional[Frame]) -> dict:
    if frame is None:
        return {}
    out = {}
    for name, v in frame.vars.items():
        out[name] = list(v.data) if isinstance(v, ArrayStore) else v.value
    return out


def entry_program(analysis: Analysis, entry: Optional[str] = None) -> str:
    programs = [sp.name for sp in analysis.unit.subprograms if sp.kind == "program"]
    if entry is not None:
        if entry.lower() not in programs:
            raise ValueError(f"no PROGRAM named {entry!r}")
        return entry.lower()
    if len(programs) != 1:
        raise ValueError(f"expected exactly one PROGRAM, found {len(programs)}")
    return programs[0]


def run(unit, cfg: RunConfig = None) -> RunSummary:
    """Execute ``unit`` (a SourceUnit or an Analysis) under ``cfg``."""
    cfg = cfg or RunConfig()
    analysis = unit if isinstance(unit, Analysis) else analyze(unit)
    entry = entry_program(analysis, cfg.entry)
    capture = compare = shadow = None
    tracer = None
    if cfg.mode is Mode.CAPTURE:
        capture = CaptureSession(cfg.trace_path, cfg.policy)
        tracer = _CaptureTracer(capture, cfg.max_records)
    elif cfg.mode is Mode.COMPARE:
        compare = CompareSession(cfg.trace_path, cfg.policy)
        if cfg.shadow_path is not None:
            shadow = CaptureSession(Path(cfg.shadow_path), cfg.policy)
        tracer = _CompareTracer(compare, cfg.max_records, shadow)
    interp = Interpreter(analysis, cfg.env, tracer)
    truncated = False
    report = None
    try:
        try:
            interp.run_program(entry)
        except _Halt as halt:
            truncated = halt.reason == "limit"
        if compare is not None:
            if not truncated:
                compare.end_of_run()
            report = compare.finalize()
    finally:
        for session in (capture, shadow):
            if session is not None:
                session.close()
        if compare is not None:
            compare.reader.close()
    return RunSummary(
        final_state=_snapshot(interp.program_frame),
        records=tracer.count if tracer is not None else 0,
        report=report,
        executed_sites=set(interp.executed),
        exit_status=report.exit_status if report is not None else 0,
        output=interp.output,
        warnings=list(analysis.read_before_write),
        truncated=truncated,
    )
