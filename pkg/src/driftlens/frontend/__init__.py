from driftlens.frontend.ast import SourceUnit, Subprogram, TypeSpec, merge_units
from driftlens.frontend.emitter import emit_expr, emit_source
from driftlens.frontend.lexer import Token, tokenize
from driftlens.frontend.parser import parse, parse_expr, parse_file, parse_source
from driftlens.frontend.semantics import Analysis, ReadBeforeWrite, analyze

__all__ = [
    "Analysis", "ReadBeforeWrite", "SourceUnit", "Subprogram", "Token", "TypeSpec",
    "analyze", "emit_expr", "emit_source", "merge_units", "parse", "parse_expr",
    "parse_file", "parse_source", "tokenize",
]
