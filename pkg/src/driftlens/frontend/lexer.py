"""Tokenizer for free-form MiniFort source."""
from __future__ import annotations

import re
from dataclasses import dataclass

from driftlens.errors import LexError

NAME, INT, REAL, STRING, LOGICAL, DOTOP, OP, NEWLINE, COMMENT = (
    "NAME", "INT", "REAL", "STRING", "LOGICAL", "DOTOP", "OP", "NEWLINE", "COMMENT",
)

DOT_OPERATORS = {
    ".AND.", ".OR.", ".NOT.",
    ".EQ.", ".NE.", ".LT.", ".LE.", ".GT.", ".GE.",
}
DOT_LITERALS = {".TRUE.", ".FALSE."}

_OPS = ("**", "==", "/=", "<=", ">=", "::", "=", "+", "-", "*", "/", "(", ")", ",", ":", "<", ">")
_DOTWORD = re.compile(r"\.([A-Za-z]+)\.")
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(\d+\.\d*|\d+|\.\d+)([eEdD][+-]?\d+)?")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int

    @property
    def lower(self) -> str:
        return self.text.lower()


def _dot_word(src: str, i: int):
    m = _DOTWORD.match(src, i)
    if m:
        word = m.group(0).upper()
        if word in DOT_OPERATORS or word in DOT_LITERALS:
            return m.group(0)
    return None


def tokenize(source: str) -> list:
    """Split ``source`` into tokens.

    Comments are kept as COMMENT tokens. ``&`` at the end of a line joins
    it with the next one, so no NEWLINE is emitted there.
    """
    tokens = []
    i, line, col0 = 0, 1, 0
    n = len(source)
    continued = False
    line_has_content = False

    def emit(kind, text, start):
        tokens.append(Token(kind, text, line, start - col0 + 1))

    while i < n:
        c = source[i]
        if c == "\n":
            if not continued and line_has_content:
                emit(NEWLINE, "\n", i)
            line_has_content = False
            i += 1
            line += 1
            col0 = i
            if continued:
                # skip indentation and an optional leading '&'
                while i < n and source[i] in " \t\r":
                    i += 1
                if i < n and source[i] == "&":
                    i += 1
                continued = False
            continue
        if c in " \t\r":
            i += 1
            continue
        if c == "!":
            j = source.find("\n", i)
            j = n if j < 0 else j
            emit(COMMENT, source[i:j].rstrip(), i)
            line_has_content = True
            i = j
            continue
        if c == "&":
            j = i + 1
            while j < n and source[j] in " \t\r":
                j += 1
            if j < n and source[j] not in "\n!":
                raise LexError("'&' must end a line", line, i - col0 + 1)
            continued = True
            i = j
            continue
        line_has_content = True
        if c in "'\"":
            j = i + 1
            while True:
                if j >= n or source[j] == "\n":
                    raise LexError("unterminated string", line, i - col0 + 1)
                if source[j] == c:
                    if j + 1 < n and source[j + 1] == c:
                        j += 2
                        continue
                    break
                j += 1
            emit(STRING, source[i:j + 1], i)
            i = j + 1
            continue
        if c == "." or c.isdigit():
            word = _dot_word(source, i) if c == "." else None
            if word is not None:
                kind = LOGICAL if word.upper() in DOT_LITERALS else DOTOP
                emit(kind, word, i)
                i += len(word)
                continue
            m = _NUMBER.match(source, i)
            if m:
                text = m.group(0)
                # "1.eq.x": the dot belongs to the operator
                dot = text.find(".")
                if dot >= 0 and _dot_word(source, i + dot) is not None:
                    text = text[:dot]
                if text != m.group(0):
                    kind = INT
                else:
                    kind = REAL if ("." in text or m.group(2)) else INT
                emit(kind, text, i)
                i += len(text)
                continue
        if c.isalpha():
            m = _NAME.match(source, i)
            emit(NAME, m.group(0), i)
            i = m.end()
            continue
        for op in _OPS:
            if source.startswith(op, i):
                emit(OP, op, i)
                i += len(op)
                break
        else:
            raise LexError(f"unexpected character {c!r}", line, i - col0 + 1)
    return tokens
