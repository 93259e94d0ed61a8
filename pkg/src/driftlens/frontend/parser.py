"""Recursive-descent parser producing a :class:`SourceUnit`.

Parsing works line by line: the token stream is first split at NEWLINE
tokens, comment-only lines become :class:`Comment` statements, and
comments on a statement line become that statement's ``trailing`` text.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from driftlens.errors import ParseError
from driftlens.frontend import ast as A
from driftlens.frontend.lexer import (
    COMMENT, DOTOP, INT, LOGICAL, NAME, NEWLINE, OP, REAL, STRING, Token, tokenize,
)

TYPE_WORDS = {"integer", "real", "logical", "character", "double"}
RELOPS = {"==": "==", "/=": "/=", "<": "<", "<=": "<=", ">": ">", ">=": ">=",
          ".EQ.": "==", ".NE.": "/=", ".LT.": "<", ".LE.": "<=", ".GT.": ">", ".GE.": ">="}
_GLUED_ENDS = {"enddo": "end do", "endif": "end if", "endprogram": "end program",
               "endsubroutine": "end subroutine", "endfunction": "end function",
               "elseif": "else if"}


@dataclass
class _Line:
    tokens: list
    comments: list
    lineno: int

    @property
    def trailing(self) -> Optional[str]:
        return " ".join(self.comments) if self.comments else None

    @property
    def head(self) -> str:
        if not self.tokens or self.tokens[0].kind != NAME:
            return ""
        first = self.tokens[0].lower
        if first in _GLUED_ENDS:
            return _GLUED_ENDS[first]
        if first in ("end", "else") and len(self.tokens) > 1 and self.tokens[1].kind == NAME:
            second = self.tokens[1].lower
            if first == "end" and second in ("do", "if", "program", "subroutine", "function"):
                return f"end {second}"
            if first == "else" and second == "if":
                return "else if"
        return first


def _split_lines(tokens: list) -> list:
    lines, cur, comments = [], [], []
    start = None
    for tok in tokens:
        if tok.kind == NEWLINE:
            if cur or comments:
                lines.append(_Line(cur, comments, start))
            cur, comments, start = [], [], None
            continue
        if start is None:
            start = tok.line
        if tok.kind == COMMENT:
            comments.append(tok.text)
        else:
            cur.append(tok)
    if cur or comments:
        lines.append(_Line(cur, comments, start))
    return lines


class _Cursor:
    """Token cursor over one logical line."""

    def __init__(self, line: _Line):
        self.toks = line.tokens
        self.i = 0
        self.lineno = line.lineno

    def peek(self, k: int = 0) -> Optional[Token]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def at_end(self) -> bool:
        return self.i >= len(self.toks)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            self.fail("unexpected end of statement")
        self.i += 1
        return tok

    def fail(self, msg: str):
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else None
            raise ParseError(msg, last.line if last else self.lineno,
                             (last.col + len(last.text)) if last else None)
        raise ParseError(msg, tok.line, tok.col)

    def is_op(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == OP and tok.text == text

    def is_word(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == NAME and tok.lower == word

    def is_dot(self, word: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == DOTOP and tok.text.upper() == word

    def expect_op(self, text: str) -> Token:
        if not self.is_op(text):
            found = self.peek()
            self.fail(f"expected '{text}'" + (f", found '{found.text}'" if found else ""))
        return self.next()

    def expect_word(self, word: str) -> Token:
        if not self.is_word(word):
            found = self.peek()
            self.fail(f"expected '{word.upper()}'" + (f", found '{found.text}'" if found else ""))
        return self.next()

    def expect_name(self) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != NAME:
            self.fail("expected a name" + (f", found '{tok.text}'" if tok else ""))
        return self.next()

    def expect_end(self):
        if not self.at_end():
            self.fail(f"unexpected '{self.peek().text}'")

    # -- expressions -------------------------------------------------------

    def expr(self) -> A.Expr:
        return self._or()

    def _chain(self, op: str, sub) -> A.Expr:
        first = sub()
        if not self.is_dot(op):
            return first
        operands = []
        _splice_chain(operands, first, op)
        while self.is_dot(op):
            self.next()
            _splice_chain(operands, sub(), op)
        return A.LogicalChain(op, operands)

    def _or(self):
        return self._chain(".OR.", self._and)

    def _and(self):
        return self._chain(".AND.", self._not)

    def _not(self):
        if self.is_dot(".NOT."):
            self.next()
            return A.Unary(".NOT.", self._not())
        return self._rel()

    def _rel(self):
        left = self._add()
        tok = self.peek()
        if tok is not None and tok.kind in (OP, DOTOP) and tok.text.upper() in RELOPS:
            self.next()
            right = self._add()
            nxt = self.peek()
            if nxt is not None and nxt.kind in (OP, DOTOP) and nxt.text.upper() in RELOPS:
                self.fail("relational operators do not chain")
            return A.Binary(RELOPS[tok.text.upper()], left, right)
        return left

    def _add(self):
        sign = None
        if self.is_op("+") or self.is_op("-"):
            sign = self.next().text
        first = self._mul()
        if not (self.is_op("+") or self.is_op("-")):
            return A.Unary(sign, first) if sign else first
        terms = []
        _splice_sum(terms, sign or "+", first)
        while self.is_op("+") or self.is_op("-"):
            s = self.next().text
            _splice_sum(terms, s, self._mul())
        return A.Sum(terms)

    def _mul(self):
        acc = self._pow()
        open_product = False
        while self.is_op("*") or self.is_op("/"):
            op = self.next().text
            rhs = self._pow()
            if op == "*":
                if open_product:
                    _splice_product(acc.factors, rhs)
                else:
                    factors = []
                    _splice_product(factors, acc)
                    _splice_product(factors, rhs)
                    acc = A.Product(factors)
                    open_product = True
            else:
                acc = A.Binary("/", acc, rhs)
                open_product = False
        return acc

    def _pow(self):
        base = self._primary()
        if self.is_op("**"):
            self.next()
            if self.is_op("-") or self.is_op("+"):
                self.fail("signed exponent must be parenthesized")
            return A.Binary("**", base, self._pow())
        return base

    def _primary(self):
        tok = self.peek()
        if tok is None:
            self.fail("expected an expression")
        if tok.kind == INT:
            self.next()
            return A.Literal(int(tok.text), tok.text, A.INTEGER, tok.line)
        if tok.kind == REAL:
            self.next()
            kind = 8 if ("d" in tok.lower) else 4
            value = float(tok.lower.replace("d", "e"))
            return A.Literal(value, tok.text, A.TypeSpec("real", kind), tok.line)
        if tok.kind == LOGICAL:
            self.next()
            value = tok.text.upper() == ".TRUE."
            return A.Literal(value, tok.text.upper(), A.LOGICAL, tok.line)
        if tok.kind == STRING:
            self.next()
            return string_literal(tok.text[1:-1].replace(tok.text[0] * 2, tok.text[0]), tok.line)
        if tok.kind == NAME:
            self.next()
            if self.is_op("("):
                args = self.args()
                return A.Apply(tok.lower, tok.text, args, tok.line)
            return A.Name(tok.lower, tok.text, tok.line)
        if tok.kind == OP and tok.text == "(":
            self.next()
            inner = self.expr()
            self.expect_op(")")
            return A.Paren(inner)
        self.fail(f"unexpected '{tok.text}' in expression")

    def args(self) -> list:
        self.expect_op("(")
        out = []
        if self.is_op(")"):
            self.next()
            return out
        while True:
            out.append(self.expr())
            if self.is_op(","):
                self.next()
                continue
            self.expect_op(")")
            return out


def string_literal(value: str, line: int = 0) -> A.Literal:
    text = "'" + value.replace("'", "''") + "'"
    return A.Literal(value, text, A.TypeSpec("character", 4, len(value)), line)


def _splice_chain(out: list, e: A.Expr, op: str):
    if isinstance(e, A.Paren) and isinstance(e.inner, A.LogicalChain) and e.inner.op == op:
        out.extend(e.inner.operands)
    else:
        out.append(e)


def _splice_sum(out: list, sign: str, e: A.Expr):
    if sign == "+" and isinstance(e, A.Paren) and isinstance(e.inner, A.Sum):
        out.extend(e.inner.terms)
    else:
        out.append((sign, e))


def _splice_product(out: list, e: A.Expr):
    if isinstance(e, A.Paren) and isinstance(e.inner, A.Product):
        out.extend(e.inner.factors)
    else:
        out.append(e)


class Parser:
    def __init__(self, tokens: list, path: Optional[str] = None):
        self.lines = _split_lines(tokens)
        self.pos = 0
        self.path = path

    def _peek(self) -> Optional[_Line]:
        return self.lines[self.pos] if self.pos < len(self.lines) else None

    def _take(self) -> _Line:
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def _comment_stmts(self, line: _Line) -> list:
        return [A.Comment(c, line.lineno, self.path) for c in line.comments]

    def parse_unit(self) -> A.SourceUnit:
        items = []
        while self._peek() is not None:
            line = self._peek()
            if not line.tokens:
                self._take()
                items.extend(self._comment_stmts(line))
                continue
            items.append(self._item())
        return A.SourceUnit(self.path, items)

    def _item(self) -> A.Subprogram:
        line = self._take()
        cur = _Cursor(line)
        result_type = None
        if cur.peek().kind == NAME and cur.peek().lower in TYPE_WORDS:
            result_type = _type_spec(cur)
        kw = cur.expect_name()
        kind = kw.lower
        if kind not in ("program", "subroutine", "function"):
            raise ParseError(f"expected PROGRAM, SUBROUTINE or FUNCTION, found '{kw.text}'",
                             kw.line, kw.col)
        if result_type is not None and kind != "function":
            cur.fail("only functions take a result type")
        name = cur.expect_name()
        params = []
        if kind != "program" and cur.is_op("("):
            cur.next()
            if not cur.is_op(")"):
                while True:
                    params.append(cur.expect_name().text)
                    if cur.is_op(","):
                        cur.next()
                        continue
                    break
            cur.expect_op(")")
        elif kind == "function":
            cur.fail("expected '(' after function name")
        cur.expect_end()

        decls = self._decls()
        body = self._block({f"end {kind}", "end"}, kw)
        end = self._take()
        ecur = _Cursor(end)
        first = ecur.next().lower
        if first == "end" and ecur.is_word(kind):
            ecur.next()
        if not ecur.at_end():
            closing = ecur.expect_name()
            if closing.lower != name.lower:
                raise ParseError(f"END names '{closing.text}', expected '{name.text}'",
                                 closing.line, closing.col)
        ecur.expect_end()
        body.extend(self._comment_stmts(end))  # keep comments trailing the END line
        return A.Subprogram(kind, name.lower, name.text, params, decls, body, result_type,
                            line.lineno, end.lineno, line.trailing, self.path)

    def _decls(self) -> list:
        decls = []
        while True:
            # comment lines belong to the spec part only if a declaration follows
            j = self.pos
            while j < len(self.lines) and not self.lines[j].tokens:
                j += 1
            if j >= len(self.lines) or self.lines[j].head not in TYPE_WORDS:
                return decls
            while self.pos < j:
                decls.extend(self._comment_stmts(self._take()))
            decls.append(self._decl(self._take()))

    def _decl(self, line: _Line) -> A.Decl:
        cur = _Cursor(line)
        tspec = _type_spec(cur)
        parameter, intent = False, None
        while cur.is_op(","):
            cur.next()
            attr = cur.expect_name()
            if attr.lower == "parameter":
                parameter = True
            elif attr.lower == "intent":
                cur.expect_op("(")
                which = cur.expect_name().lower
                if which not in ("in", "out", "inout"):
                    cur.fail("INTENT must be IN, OUT or INOUT")
                intent = which
                cur.expect_op(")")
            else:
                raise ParseError(f"unknown attribute '{attr.text}'", attr.line, attr.col)
        if cur.is_op("::"):
            cur.next()
        elif parameter or intent:
            cur.fail("expected '::'")
        entities = []
        while True:
            name = cur.expect_name()
            bounds = None
            if cur.is_op("("):
                cur.next()
                first = cur.expr()
                if cur.is_op(":"):
                    cur.next()
                    bounds = (first, cur.expr())
                else:
                    bounds = (A.Literal(1, "1", A.INTEGER, name.line), first)
                cur.expect_op(")")
            init = None
            if cur.is_op("="):
                cur.next()
                init = cur.expr()
            entities.append(A.Entity(name.lower, name.text, bounds, init))
            if cur.is_op(","):
                cur.next()
                continue
            break
        cur.expect_end()
        return A.Decl(tspec, parameter, intent, entities, line.lineno, line.trailing)

    def _block(self, terminators: set, opener: Token) -> list:
        stmts = []
        while True:
            line = self._peek()
            if line is None:
                raise ParseError(f"missing END for {opener.text.upper()} opened here",
                                 opener.line, opener.col)
            if not line.tokens:
                self._take()
                stmts.extend(self._comment_stmts(line))
                continue
            if line.head in terminators:
                return stmts
            stmts.append(self._stmt())

    def _stmt(self) -> A.Stmt:
        line = self._take()
        cur = _Cursor(line)
        head = line.head
        if head in TYPE_WORDS:
            cur.fail("declaration after executable statement")
        if head == "do":
            return self._do(line, cur)
        if head == "if":
            return self._if(line, cur)
        if head == "call":
            cur.next()
            name = cur.expect_name()
            args = cur.args() if cur.is_op("(") else []
            cur.expect_end()
            return A.Call(name.lower, name.text, args, line.lineno, line.trailing)
        if head == "return":
            cur.next()
            cur.expect_end()
            return A.Return(line.lineno, line.trailing)
        if head == "print":
            cur.next()
            cur.expect_op("*")
            items = []
            while cur.is_op(","):
                cur.next()
                items.append(cur.expr())
            cur.expect_end()
            return A.Print(items, line.lineno, line.trailing)
        if head.startswith("end") or head.startswith("else"):
            cur.fail(f"unexpected '{' '.join(t.text for t in line.tokens[:2])}'")
        return self._assign(line, cur)

    def _assign(self, line: _Line, cur: _Cursor) -> A.Assign:
        name = cur.expect_name()
        if cur.is_op("("):
            args = cur.args()
            if len(args) != 1:
                raise ParseError("array element takes exactly one index", name.line, name.col)
            target = A.Apply(name.lower, name.text, args, name.line)
        else:
            target = A.Name(name.lower, name.text, name.line)
        cur.expect_op("=")
        value = cur.expr()
        cur.expect_end()
        return A.Assign(target, value, line.lineno, line.trailing)

    def _do(self, line: _Line, cur: _Cursor) -> A.Do:
        opener = cur.next()
        var = cur.expect_name()
        cur.expect_op("=")
        start = cur.expr()
        cur.expect_op(",")
        stop = cur.expr()
        step = None
        if cur.is_op(","):
            cur.next()
            step = cur.expr()
        cur.expect_end()
        body = self._block({"end do"}, opener)
        end = self._take()
        _expect_plain_end(end, 2 if end.tokens[0].lower == "end" else 1)
        body.extend(self._comment_stmts(end))
        return A.Do(A.Name(var.lower, var.text, var.line), start, stop, step, body,
                    line.lineno, line.trailing)

    def _if(self, line: _Line, cur: _Cursor) -> A.If:
        opener = cur.next()
        cond = self._paren_cond(cur)
        cur.expect_word("then")
        cur.expect_end()
        branches = [A.IfBranch(cond, self._block({"else if", "else", "end if"}, opener),
                               line.lineno)]
        else_body = None
        while True:
            nxt = self._take()
            ncur = _Cursor(nxt)
            if nxt.head == "else if":
                ncur.next()
                if ncur.is_word("if"):
                    ncur.next()
                c = self._paren_cond(ncur)
                ncur.expect_word("then")
                ncur.expect_end()
                block = self._comment_stmts(nxt)
                block += self._block({"else if", "else", "end if"}, opener)
                branches.append(A.IfBranch(c, block, nxt.lineno))
            elif nxt.head == "else":
                if else_body is not None:
                    ncur.fail("duplicate ELSE")
                ncur.next()
                ncur.expect_end()
                else_body = self._comment_stmts(nxt) + self._block({"end if"}, opener)
            else:
                _expect_plain_end(nxt, 2 if nxt.tokens[0].lower == "end" else 1)
                last = else_body if else_body is not None else branches[-1].body
                last.extend(self._comment_stmts(nxt))
                return A.If(branches, else_body, line.lineno, line.trailing)

    @staticmethod
    def _paren_cond(cur: _Cursor) -> A.Expr:
        cur.expect_op("(")
        cond = cur.expr()
        cur.expect_op(")")
        return cond


def _expect_plain_end(line: _Line, ntoks: int):
    if len(line.tokens) != ntoks:
        tok = line.tokens[ntoks] if len(line.tokens) > ntoks else line.tokens[-1]
        raise ParseError(f"unexpected '{tok.text}'", tok.line, tok.col)


def _type_spec(cur: _Cursor) -> A.TypeSpec:
    word = cur.expect_name()
    w = word.lower
    if w == "double":
        cur.expect_word("precision")
        return A.REAL8
    if w in ("integer", "logical"):
        if cur.is_op("("):
            cur.next()
            if cur.is_word("kind"):
                cur.next()
                cur.expect_op("=")
            k = cur.next()
            if k.kind != INT or k.text != "4":
                raise ParseError(f"unsupported {w.upper()} kind", k.line, k.col)
            cur.expect_op(")")
        return A.TypeSpec(w)
    if w == "real":
        kind = 4
        if cur.is_op("("):
            cur.next()
            if cur.is_word("kind"):
                cur.next()
                cur.expect_op("=")
            k = cur.next()
            if k.kind != INT or k.text not in ("4", "8"):
                raise ParseError("REAL kind must be 4 or 8", k.line, k.col)
            kind = int(k.text)
            cur.expect_op(")")
        return A.TypeSpec("real", kind)
    if w == "character":
        length = 1
        if cur.is_op("("):
            cur.next()
            if cur.is_word("len"):
                cur.next()
                cur.expect_op("=")
            if cur.is_op("*"):
                cur.next()
                length = "*"
            else:
                k = cur.next()
                if k.kind != INT:
                    raise ParseError("CHARACTER length must be an integer or *", k.line, k.col)
                length = int(k.text)
            cur.expect_op(")")
        return A.TypeSpec("character", 4, length)
    raise ParseError(f"expected a type, found '{word.text}'", word.line, word.col)


def parse(tokens: list, path: Optional[str] = None) -> A.SourceUnit:
    return Parser(tokens, path).parse_unit()


def parse_source(text: str, path: Optional[str] = None) -> A.SourceUnit:
    return parse(tokenize(text), path)


def parse_expr(text: str) -> A.Expr:
    """Parse a single expression (used by tests and the hoist pass)."""
    toks = [t for t in tokenize(text) if t.kind not in (NEWLINE, COMMENT)]
    cur = _Cursor(_Line(toks, [], toks[0].line if toks else 1))
    e = cur.expr()
    cur.expect_end()
    return e


def parse_file(path) -> A.SourceUnit:
    with open(path, encoding="utf-8") as fh:
        return parse_source(fh.read(), str(path))
