"""Canonical source generation.

Formatting rules: keywords upper case, names as written, two-space
indentation per block level, arithmetic and relational operators written
tight (``k-1``, ``a==b``), logical operators spaced (``a .OR. b``),
one statement per line.
"""
from __future__ import annotations

from driftlens.frontend import ast as A

INDENT = "  "


def emit_expr(e: A.Expr) -> str:
    if isinstance(e, A.Literal):
        return e.text
    if isinstance(e, A.Name):
        return e.display
    if isinstance(e, A.Apply):
        return f"{e.display}({','.join(emit_expr(a) for a in e.args)})"
    if isinstance(e, A.Paren):
        return f"({emit_expr(e.inner)})"
    if isinstance(e, A.Widen):
        return emit_expr(e.operand)
    if isinstance(e, A.Unary):
        if e.op == ".NOT.":
            return f".NOT. {emit_expr(e.operand)}"
        return f"{e.op}{emit_expr(e.operand)}"
    if isinstance(e, A.Binary):
        return f"{emit_expr(e.left)}{e.op}{emit_expr(e.right)}"
    if isinstance(e, A.Sum):
        parts = []
        for i, (sign, term) in enumerate(e.terms):
            text = emit_expr(term)
            if i == 0:
                parts.append(text if sign == "+" else f"-{text}")
            else:
                parts.append(f"{sign}{text}")
        return "".join(parts)
    if isinstance(e, A.Product):
        return "*".join(emit_expr(f) for f in e.factors)
    if isinstance(e, A.LogicalChain):
        return f" {e.op} ".join(emit_expr(o) for o in e.operands)
    raise TypeError(f"cannot emit {type(e).__name__}")


def _trail(text: str, trailing) -> str:
    return f"{text}  {trailing}" if trailing else text


def _emit_decl(d: A.Decl) -> str:
    head = str(d.type)
    if d.parameter:
        head += ",PARAMETER"
    if d.intent:
        head += f",INTENT({d.intent.upper()})"
    ents = []
    for ent in d.entities:
        text = ent.display
        if ent.bounds is not None:
            lo, hi = ent.bounds
            text += f"({emit_expr(lo)}:{emit_expr(hi)})"
        if ent.init is not None:
            text += f" = {emit_expr(ent.init)}"
        ents.append(text)
    return _trail(f"{head} :: {', '.join(ents)}", d.trailing)


def _emit_block(stmts: list, depth: int, out: list):
    pad = INDENT * depth
    for s in stmts:
        if isinstance(s, A.Comment):
            out.append(pad + s.text)
        elif isinstance(s, A.Assign):
            out.append(pad + _trail(f"{emit_expr(s.target)} = {emit_expr(s.value)}", s.trailing))
        elif isinstance(s, A.Do):
            head = f"DO {s.var.display} = {emit_expr(s.start)},{emit_expr(s.stop)}"
            if s.step is not None:
                head += f",{emit_expr(s.step)}"
            out.append(pad + _trail(head, s.trailing))
            _emit_block(s.body, depth + 1, out)
            out.append(pad + "ENDDO")
        elif isinstance(s, A.If):
            for i, br in enumerate(s.branches):
                kw = "IF" if i == 0 else "ELSE IF"
                line = f"{kw} ({emit_expr(br.cond)}) THEN"
                out.append(pad + (_trail(line, s.trailing) if i == 0 else line))
                _emit_block(br.body, depth + 1, out)
            if s.else_body is not None:
                out.append(pad + "ELSE")
                _emit_block(s.else_body, depth + 1, out)
            out.append(pad + "ENDIF")
        elif isinstance(s, A.Call):
            text = f"CALL {s.display}"
            if s.args:
                text += f"({','.join(emit_expr(a) for a in s.args)})"
            out.append(pad + _trail(text, s.trailing))
        elif isinstance(s, A.Return):
            out.append(pad + _trail("RETURN", s.trailing))
        elif isinstance(s, A.Print):
            text = "PRINT *" + "".join("," + emit_expr(i) for i in s.items)
            out.append(pad + _trail(text, s.trailing))
        else:
            raise TypeError(f"cannot emit {type(s).__name__}")


def emit_subprogram(sp: A.Subprogram, out: list):
    kw = sp.kind.upper()
    head = f"{kw} {sp.display}"
    if sp.result_type is not None:
        head = f"{sp.result_type} {head}"
    if sp.kind != "program":
        head += f"({','.join(sp.params)})"
    out.append(_trail(head, sp.trailing))
    for d in sp.decls:
        if isinstance(d, A.Comment):
            out.append(INDENT + d.text)
        else:
            out.append(INDENT + _emit_decl(d))
    _emit_block(sp.body, 1, out)
    out.append(f"END {kw} {sp.display}")


def emit_items(items: list) -> str:
    out = []
    for item in items:
        if isinstance(item, A.Comment):
            out.append(item.text)
        else:
            emit_subprogram(item, out)
    return "".join(line + "\n" for line in out)


def emit_source(unit: A.SourceUnit) -> str:
    """Render ``unit`` in canonical form; ``emit(parse(emit(u))) == emit(u)``."""
    return emit_items(unit.items)
