import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from driftlens.errors import LexError, ParseError, SemanticError
from driftlens.frontend import (
    analyze, emit_expr, emit_source, parse_expr, parse_source, tokenize,
)
from driftlens.frontend import ast as A

from support import corpus_files, load, program


def kinds(text):
    return [(t.kind, t.text) for t in tokenize(text)]


# -- lexer ---------------------------------------------------------------------

def test_lexer_basic_statement():
    assert kinds("rdt = 1.0 / dtpbl") == [
        ("NAME", "rdt"), ("OP", "="), ("REAL", "1.0"), ("OP", "/"), ("NAME", "dtpbl")]


def test_lexer_continuation_joins_lines():
    toks = kinds("x = a + &\n    & b\n")
    assert ("NEWLINE", "\n") == toks[-1]
    assert [t for t in toks if t[0] == "NEWLINE"] == [("NEWLINE", "\n")]
    assert ("NAME", "b") in toks


def test_lexer_dot_operator_after_integer():
    assert kinds("1.eq.x") == [("INT", "1"), ("DOTOP", ".eq."), ("NAME", "x")]


def test_lexer_exponent_forms():
    assert [k for k, _ in kinds("1.0D0 2E3 3 .5")] == ["REAL", "REAL", "INT", "REAL"]


def test_lexer_rejects_unknown_character():
    with pytest.raises(LexError) as info:
        tokenize("x = 1 @ 2")
    assert info.value.line == 1


def test_lexer_comment_token():
    assert ("COMMENT", "! note") in kinds("x = 1 ! note\n")


# -- expressions -----------------------------------------------------------------

@pytest.mark.parametrize("text,expected,node", [
    ("a+(b+c)", "a+b+c", A.Sum),
    ("a-(b+c)", "a-(b+c)", A.Sum),
    ("a*(b*c)", "a*b*c", A.Product),
    ("a/b/c", "a/b/c", A.Binary),
    ("(a .or. b) .or. c", "a .OR. b .OR. c", A.LogicalChain),
    ("x.and.(y.or.z)", "x .AND. (y .OR. z)", A.LogicalChain),
    ("f(a,b)", "f(a,b)", A.Apply),
    (".not.(a<b)", ".NOT. (a<b)", A.Unary),
    ("k - 1", "k-1", A.Sum),
    ("a .EQ. b", "a==b", A.Binary),
])
def test_expression_shape_and_emission(text, expected, node):
    e = parse_expr(text)
    assert isinstance(e, node)
    assert emit_expr(e) == expected


def test_sum_is_flat_nary():
    e = parse_expr("a + b - c + d")
    assert [s for s, _ in e.terms] == ["+", "+", "-", "+"]


def test_string_literal_quotes_doubled():
    assert emit_expr(parse_expr("'it''s'")) == "'it''s'"


def test_parse_error_has_location():
    with pytest.raises(ParseError) as info:
        parse_source("PROGRAM p\n  x = (1 +\nEND PROGRAM p\n")
    assert info.value.line == 2


def test_mismatched_end_name():
    with pytest.raises(ParseError):
        parse_source("PROGRAM p\nEND PROGRAM q\n")


# -- statements and round trip ----------------------------------------------------

def test_round_trip_corpus():
    for path in corpus_files():
        unit = load(path.name)
        text = emit_source(unit)
        again = parse_source(text)
        assert again == unit, path.name
        assert emit_source(again) == text


def test_canonical_statement_forms():
    unit = program("x = 1\nDO i = 1, n, 2\n  x = x + i\nEND DO\nPRINT *, x",
                   "INTEGER :: x, i\nINTEGER, PARAMETER :: n = 4")
    text = emit_source(unit)
    assert "  DO i = 1,n,2\n" in text
    assert "    x = x+i\n" in text
    assert "  ENDDO\n" in text
    assert "  PRINT *,x\n" in text
    assert "  INTEGER,PARAMETER :: n = 4\n" in text


def test_comments_survive_round_trip():
    src = ("PROGRAM p ! top\n  INTEGER :: i\n  ! own line\n  DO i = 1, 2 ! loop\n"
           "  ENDDO ! end loop\nEND PROGRAM p ! bye\n")
    unit = parse_source(src)
    text = emit_source(unit)
    for c in ("! top", "! own line", "! loop", "! end loop", "! bye"):
        assert c in text
    assert parse_source(text) == unit


_names = st.sampled_from(["a", "b", "c", "x1", "val"])
_leaves = st.one_of(_names, st.integers(0, 999).map(str),
                    st.sampled_from(["1.5", "2.0E-3", "0.25D0", "3.0"]))


def _arith(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*", "/", "**"]), children)
        .map(lambda t: f"{t[0]} {t[1]} {t[2]}"),
        children.map(lambda c: f"({c})"),
        children.map(lambda c: f"(-{c})"),
        st.tuples(_names, children).map(lambda t: f"f({t[1]})"),
    )


arith_exprs = st.recursive(_leaves, _arith, max_leaves=12)


@settings(max_examples=150, deadline=None)
@given(arith_exprs)
def test_expression_round_trip_property(text):
    e = parse_expr(text)
    emitted = emit_expr(e)
    assert parse_expr(emitted) == e
    assert emit_expr(parse_expr(emitted)) == emitted


_conds = st.recursive(
    st.tuples(arith_exprs, st.sampled_from(["<", "==", ">=", "/="]), arith_exprs)
    .map(lambda t: f"{t[0]} {t[1]} {t[2]}"),
    lambda ch: st.one_of(
        st.tuples(ch, st.sampled_from([".AND.", ".OR."]), ch).map(lambda t: " ".join(t)),
        ch.map(lambda c: f"({c})"),
        ch.map(lambda c: f".NOT. ({c})"),
    ),
    max_leaves=6,
)


@settings(max_examples=100, deadline=None)
@given(_conds)
def test_condition_round_trip_property(text):
    e = parse_expr(text)
    assert parse_expr(emit_expr(e)) == e


# -- semantics ---------------------------------------------------------------------

def test_analysis_types_and_widening():
    unit = program("x = i + 1.5\nd = x", "INTEGER :: i\nREAL :: x\nREAL(8) :: d")
    an = analyze(unit)
    body = an.unit.find("testprog").body
    assert body[0].value.type == A.REAL4
    assert isinstance(body[0].value.terms[0][1], A.Widen)
    assert isinstance(body[1].value, A.Widen) and body[1].value.type == A.REAL8


def test_analysis_does_not_mutate_input():
    unit = program("x = i + 1.5", "INTEGER :: i\nREAL :: x")
    before = emit_source(unit)
    analyze(unit)
    assert emit_source(unit) == before
    assert unit.find("testprog").body[0].value.type is None


def test_analysis_is_idempotent():
    unit = load("mixed.mf")
    once = analyze(unit).unit
    assert analyze(once).unit == once


@pytest.mark.parametrize("decls,body", [
    ("INTEGER :: i", "i = 1.5"),
    ("LOGICAL :: l", "l = 1"),
    ("INTEGER :: i", "i = undefined_name"),
    ("INTEGER, PARAMETER :: n = 3", "n = 4"),
    ("INTEGER :: i", "DO i = 1, 3\n  i = 2\nENDDO"),
    ("REAL :: x", "CALL nowhere(x)"),
    ("INTEGER :: i", "IF (i) THEN\nENDIF"),
])
def test_semantic_errors(decls, body):
    with pytest.raises(SemanticError):
        analyze(program(body, decls))


def test_intent_in_cannot_be_assigned():
    src = ("PROGRAM p\n  REAL :: y\n  y = 1.0\n  CALL s(y)\nEND PROGRAM p\n"
           "SUBROUTINE s(x)\n  REAL, INTENT(IN) :: x\n  x = 2.0\nEND SUBROUTINE s\n")
    with pytest.raises(SemanticError):
        analyze(parse_source(src))


def test_read_before_write_on_untouched_inout():
    an = analyze(load("case1.mf"))
    [finding] = an.read_before_write
    assert finding.name == "new_domdesc"
    assert "INTENT(INOUT)" in finding.reason and "WRF_GET_DM_COMMUNICATOR" in finding.reason


def test_read_before_write_sees_both_branches():
    body = ("IF (k > 0) THEN\n  x = 1.0\nELSE\n  y = 2.0\nENDIF\nz = x + y")
    an = analyze(program(body, "INTEGER :: k\nREAL :: x, y, z", ))
    names = {f.name for f in an.read_before_write}
    assert {"x", "y", "k"} <= names


def test_clean_corpus_program_has_no_findings():
    assert analyze(load("accumulate.mf")).read_before_write == []


def test_function_result_never_assigned_is_flagged():
    src = ("PROGRAM p\n  REAL :: y\n  y = f(1.0)\nEND PROGRAM p\n"
           "REAL FUNCTION f(x)\n  REAL, INTENT(IN) :: x\n  REAL :: t\n  t = x\nEND FUNCTION f\n")
    an = analyze(parse_source(src))
    assert any("function result" in f.reason for f in an.read_before_write)
