"""Hoist a repeated function call out of a logical IF condition.

A condition such as ``(use_package(f)==a) .OR. (use_package(f)==b)`` calls
the function a different number of times depending on which operand the
compiler evaluates first. Assigning the call to a fresh local before the
IF and testing the local instead makes the trace independent of the
short-circuit order.
"""
from __future__ import annotations

import copy
from typing import Optional

from driftlens.errors import NotHoistable
from driftlens.frontend import ast as A
from driftlens.frontend.semantics import analyze


def _strip(e: A.Expr) -> A.Expr:
    while isinstance(e, A.Paren):
        e = e.inner
    return e


def _function_calls(e: A.Expr, functions: set) -> list:
    return [x for x in A.walk_expr(e) if isinstance(x, A.Apply) and x.name in functions]


def _replace(e: A.Expr, call: A.Apply, local: A.Name) -> A.Expr:
    if isinstance(e, A.Apply) and e == call:
        return copy.copy(local)
    for attr in ("inner", "operand", "left", "right"):
        if hasattr(e, attr):
            setattr(e, attr, _replace(getattr(e, attr), call, local))
    if isinstance(e, A.Apply):
        e.args = [_replace(a, call, local) for a in e.args]
    elif isinstance(e, A.Sum):
        e.terms = [(s, _replace(t, call, local)) for s, t in e.terms]
    elif isinstance(e, A.Product):
        e.factors = [_replace(f, call, local) for f in e.factors]
    elif isinstance(e, A.LogicalChain):
        e.operands = [_replace(o, call, local) for o in e.operands]
    return e


class _Hoister:
    def __init__(self, unit: A.SourceUnit, selector: Optional[tuple]):
        self.analysis = analyze(unit)
        self.selector = selector
        self.functions = {}
        for sp in unit.subprograms:
            if sp.kind == "function":
                scope = self.analysis.scopes[sp.name]
                self.functions[sp.name] = scope
        self.found = False

    def _candidate(self, cond: A.Expr, line: int, sub: str) -> Optional[A.Apply]:
        """The call to hoist from ``cond``, or None if there is nothing to do."""
        selected = self.selector is not None
        chain = _strip(cond)
        if not isinstance(chain, A.LogicalChain) or len(chain.operands) < 2:
            return None
        calls = [_function_calls(o, self.functions) for o in chain.operands]
        if not any(calls):
            if selected:
                raise NotHoistable(f"condition at {sub}:{line} contains no function call")
            return None
        first = next(c for c in calls if c)[0]
        if any(len(c) != 1 or c[0] != first for c in calls):
            raise NotHoistable(
                f"operands of the condition at {sub}:{line} do not share one common call")
        callee = self.functions[first.name]
        if any(d.intent != "in" for d in callee.dummies):
            raise NotHoistable(f"'{first.display}' has arguments that are not INTENT(IN)")
        return first

    def _fresh(self, sp: A.Subprogram, base: str) -> str:
        taken = set(self.analysis.scopes[sp.name].symbols) | set(self.functions)
        taken |= {s.name for s in self.analysis.unit.subprograms}
        name, n = base, 0
        while name.lower() in taken:
            n += 1
            name = f"{base}_{n}"
        self.analysis.scopes[sp.name].symbols[name.lower()] = None
        return name

    def block(self, sp: A.Subprogram, stmts: list) -> list:
        out = []
        for s in stmts:
            if isinstance(s, A.Do):
                s.body = self.block(sp, s.body)
            elif isinstance(s, A.If):
                for br in s.branches:
                    br.body = self.block(sp, br.body)
                if s.else_body is not None:
                    s.else_body = self.block(sp, s.else_body)
                head = s.branches[0]
                wanted = self.selector is None or self.selector == (sp.name, s.line)
                call = self._candidate(head.cond, s.line, sp.name) if wanted else None
                if call is not None:
                    self.found = True
                    display = self._fresh(sp, f"i_{call.display}")
                    local = A.Name(display.lower(), display, line=s.line)
                    result = self.functions[call.name].result.type
                    sp.decls.append(A.Decl(result, False, None, [A.Entity(local.name, display)],
                                           line=s.line))
                    out.append(A.Assign(copy.copy(local), copy.deepcopy(call), line=s.line))
                    head.cond = _replace(head.cond, call, local)
            out.append(s)
        return out


def rewrite_hoist_condition(unit: A.SourceUnit, selector: Optional[tuple] = None) -> A.SourceUnit:
    """Return a copy of ``unit`` with repeated condition calls hoisted.

    ``selector`` is ``(subprogram name, line of the IF)``; None rewrites every
    eligible IF. Conditions that are not chains, or have a single operand,
    are left alone.
    """
    unit = copy.deepcopy(unit)
    if selector is not None:
        selector = (selector[0].lower(), selector[1])
    h = _Hoister(unit, selector)
    for sp in unit.subprograms:
        if selector is None or selector[0] == sp.name:
            sp.body = h.block(sp, sp.body)
    return unit
