"""AST node classes for MiniFort.

Locations (``line``/``col``) and analysis annotations are excluded from
equality so that two parses of equivalent text compare equal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class TypeSpec:
    base: str  # integer | real | logical | character
    kind: int = 4
    length: Optional[Union[int, str]] = None  # character only; '*' = assumed

    @property
    def typecode(self) -> str:
        if self.base == "integer":
            return "i4"
        if self.base == "real":
            return "r8" if self.kind == 8 else "r4"
        if self.base == "logical":
            return "l4"
        return "ch"

    @property
    def is_numeric(self) -> bool:
        return self.base in ("integer", "real")

    def __str__(self) -> str:
        if self.base == "real" and self.kind == 8:
            return "REAL(8)"
        if self.base == "character":
            return f"CHARACTER({self.length})" if self.length is not None else "CHARACTER"
        return self.base.upper()


INTEGER = TypeSpec("integer")
REAL4 = TypeSpec("real", 4)
REAL8 = TypeSpec("real", 8)
LOGICAL = TypeSpec("logical")


# -- expressions -----------------------------------------------------------

@dataclass(eq=True)
class Expr:
    pass


@dataclass(eq=True)
class Literal(Expr):
    value: object
    text: str
    ltype: TypeSpec
    line: int = field(default=0, compare=False)
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Name(Expr):
    name: str
    display: str
    line: int = field(default=0, compare=False)
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Apply(Expr):
    """``name(args)``: array element, user function, or intrinsic.

    Which one is decided by analysis and stored in ``resolved``.
    """
    name: str
    display: str
    args: list
    line: int = field(default=0, compare=False)
    type: Optional[TypeSpec] = field(default=None, compare=False)
    resolved: Optional[str] = field(default=None, compare=False)


@dataclass(eq=True)
class Paren(Expr):
    inner: Expr
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Unary(Expr):
    op: str  # '-', '+', '.NOT.'
    operand: Expr
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Binary(Expr):
    op: str  # '/', '**', '==', '/=', '<', '<=', '>', '>='
    left: Expr
    right: Expr
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Sum(Expr):
    """Flat chain of signed terms: ``terms`` is a list of ``(sign, expr)``."""
    terms: list
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Product(Expr):
    factors: list
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class LogicalChain(Expr):
    op: str  # '.AND.' | '.OR.'
    operands: list
    type: Optional[TypeSpec] = field(default=None, compare=False)


@dataclass(eq=True)
class Widen(Expr):
    """Integer to real conversion inserted by analysis; never printed."""
    operand: Expr
    type: Optional[TypeSpec] = None


# -- statements ------------------------------------------------------------

@dataclass(eq=True)
class Stmt:
    pass


@dataclass(eq=True)
class Comment(Stmt):
    text: str
    line: int = field(default=0, compare=False)
    origin: Optional[str] = field(default=None, compare=False)


@dataclass(eq=True)
class Assign(Stmt):
    target: Expr  # Name or single-index Apply
    value: Expr
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


@dataclass(eq=True)
class Do(Stmt):
    var: Name
    start: Expr
    stop: Expr
    step: Optional[Expr]
    body: list
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


@dataclass(eq=True)
class IfBranch:
    cond: Expr
    body: list
    line: int = field(default=0, compare=False)


@dataclass(eq=True)
class If(Stmt):
    branches: list  # IfBranch; first is the IF, rest are ELSE IF
    else_body: Optional[list]
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


@dataclass(eq=True)
class Call(Stmt):
    name: str
    display: str
    args: list
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


@dataclass(eq=True)
class Return(Stmt):
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


@dataclass(eq=True)
class Print(Stmt):
    items: list
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


# -- declarations and units ------------------------------------------------

@dataclass(eq=True)
class Entity:
    name: str
    display: str
    bounds: Optional[tuple] = None  # (lower Expr, upper Expr)
    init: Optional[Expr] = None


@dataclass(eq=True)
class Decl:
    type: TypeSpec
    parameter: bool
    intent: Optional[str]  # 'in' | 'out' | 'inout'
    entities: list
    line: int = field(default=0, compare=False)
    trailing: Optional[str] = None


@dataclass(eq=True)
class Subprogram:
    kind: str  # program | subroutine | function
    name: str
    display: str
    params: list  # display names, in order
    decls: list  # Decl and Comment
    body: list
    result_type: Optional[TypeSpec] = None  # function prefix type, if written
    line: int = field(default=0, compare=False)
    end_line: int = field(default=0, compare=False)
    trailing: Optional[str] = None
    origin: Optional[str] = field(default=None, compare=False)


@dataclass(eq=True)
class SourceUnit:
    path: Optional[str] = field(default=None, compare=False)
    items: list = field(default_factory=list)  # Subprogram and Comment

    @property
    def subprograms(self) -> list:
        return [i for i in self.items if isinstance(i, Subprogram)]

    def find(self, name: str) -> Optional[Subprogram]:
        name = name.lower()
        for item in self.subprograms:
            if item.name == name:
                return item
        return None


def merge_units(units: list, path: Optional[str] = None) -> SourceUnit:
    """Concatenate the items of several units, keeping each item's origin."""
    items = []
    for unit in units:
        for item in unit.items:
            if getattr(item, "origin", None) is None:
                item.origin = unit.path
            items.append(item)
    return SourceUnit(path=path, items=items)


def walk_stmts(stmts: list):
    """Yield every statement in ``stmts``, recursing into blocks."""
    for s in stmts:
        yield s
        if isinstance(s, Do):
            yield from walk_stmts(s.body)
        elif isinstance(s, If):
            for br in s.branches:
                yield from walk_stmts(br.body)
            if s.else_body is not None:
                yield from walk_stmts(s.else_body)


def walk_expr(e: Expr):
    yield e
    if isinstance(e, Apply):
        for a in e.args:
            yield from walk_expr(a)
    elif isinstance(e, (Paren, Widen)):
        yield from walk_expr(e.inner if isinstance(e, Paren) else e.operand)
    elif isinstance(e, Unary):
        yield from walk_expr(e.operand)
    elif isinstance(e, Binary):
        yield from walk_expr(e.left)
        yield from walk_expr(e.right)
    elif isinstance(e, Sum):
        for _, t in e.terms:
            yield from walk_expr(t)
    elif isinstance(e, Product):
        for f in e.factors:
            yield from walk_expr(f)
    elif isinstance(e, LogicalChain):
        for o in e.operands:
            yield from walk_expr(o)


def stmt_exprs(s: Stmt) -> list:
    """Top-level expressions directly owned by a statement (not nested blocks)."""
    if isinstance(s, Assign):
        return [s.target, s.value]
    if isinstance(s, Do):
        return [s.var, s.start, s.stop] + ([s.step] if s.step is not None else [])
    if isinstance(s, If):
        return [br.cond for br in s.branches]
    if isinstance(s, Call):
        return list(s.args)
    if isinstance(s, Print):
        return list(s.items)
    return []
