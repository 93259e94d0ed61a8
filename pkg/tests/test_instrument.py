import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from driftlens.errors import AlreadyInstrumented
from driftlens.frontend import analyze, parse_source
from driftlens.frontend import ast as A
from driftlens.instrument import (
    InstrumentOptions, SiteTable, Site, emit_instrumented, instrument, read_site_table,
    sites_from_instrumented, split_by_origin, write_site_table,
)

from support import FIXTURES, corpus_files, load

# The reference fragment used ids 6914 (entry) and 38749..38752; ids here
# are renumbered from 1 in lexical order.
ORIGINAL_TO_LOCAL = {6914: 1, 38749: 2, 38750: 3, 38751: 4, 38752: 5}


def test_golden_fragment():
    unit, table = instrument(load("acmpbl.mf"))
    text = emit_instrumented(unit)
    assert text == (FIXTURES / "acmpbl.inst.mf").read_text()
    assert "CALL trace_start_sub_program('ACMPBL',1)" in text
    assert "CALL trace_r4_data('RDT',rdt,2)" in text
    assert "CALL trace_i4_data('K',k,3)" in text
    assert "CALL trace_r4_data('sigmaf(k-1)',sigmaf(k-1),4)" in text
    assert "CALL trace_r4_data('sigmaf(kte)',sigmaf(kte),5)" in text
    assert table.ids() == sorted(ORIGINAL_TO_LOCAL.values())


def test_golden_placement():
    unit, _ = instrument(load("acmpbl.mf"))
    body = unit.find("acmpbl").body
    assert body[0].name == "trace_start_sub_program"
    loop = next(s for s in body if isinstance(s, A.Do))
    assert loop.body[0].name == "trace_i4_data"
    assert isinstance(loop.body[1], A.Assign)
    assert loop.body[2].args[0].value == "sigmaf(k-1)"


def _count_expected(unit, options):
    """Independent count: assignments (not char, not function results), loops, subprograms."""
    scopes = analyze(unit).scopes
    total = 0
    for sp in unit.subprograms:
        total += 1
        scope = scopes[sp.name]
        for s in A.walk_stmts(sp.body):
            if isinstance(s, A.Do):
                total += 1
            elif isinstance(s, A.Assign):
                if sp.kind == "function" and getattr(s.target, "name", None) == sp.name:
                    continue
                if scope.symbols[s.target.name].type.base == "character" \
                        and not options.trace_characters:
                    continue
                total += 1
            elif isinstance(s, A.Call) and options.trace_call_outputs:
                callee = scopes[s.name]
                for d, a in zip(callee.dummies, s.args):
                    if d.intent in ("out", "inout") and not d.is_array \
                            and (d.type.base != "character" or options.trace_characters):
                        total += 1
    return total


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
@pytest.mark.parametrize("outputs", [False, True])
def test_site_count_matches_independent_walk(path, outputs):
    unit = load(path.name)
    options = InstrumentOptions(trace_call_outputs=outputs)
    inst, table = instrument(unit, options)
    inserted = [s for sp in inst.subprograms for s in A.walk_stmts(sp.body)
                if isinstance(s, A.Call) and s.name.startswith("trace_")]
    assert len(inserted) == len(table) == _count_expected(unit, options)


def test_empty_body_gets_only_entry_call():
    unit = parse_source("SUBROUTINE nothing()\nEND SUBROUTINE nothing\n")
    inst, table = instrument(unit)
    assert len(table) == 1
    assert [s.name for s in inst.find("nothing").body] == ["trace_start_sub_program"]


def test_character_assignments_follow_option():
    unit = load("mixed.mf")
    _, off = instrument(unit)
    _, on = instrument(unit, InstrumentOptions(trace_characters=True))
    assert not any(s.typecode == "ch" for s in off)
    assert sum(s.typecode == "ch" for s in on) == 2


def test_call_outputs_site_is_the_call_line():
    _, table = instrument(load("case1.mf"))
    site = next(s for s in table if s.descriptor == "NEW_DOMDESC")
    assert site.line == 6 and site.subprogram == "case1"


def test_function_result_not_traced_inside_function():
    _, table = instrument(load("case3.mf"))
    assert not any(s.descriptor == "USE_PACKAGE" and not s.is_entry for s in table)


def test_already_instrumented_is_refused():
    inst, _ = instrument(load("acmpbl.mf"))
    with pytest.raises(AlreadyInstrumented):
        instrument(parse_source(emit_instrumented(inst)))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.stem)
def test_instrumented_output_reparses_and_analyzes(path):
    inst, table = instrument(load(path.name))
    again = parse_source(emit_instrumented(inst))
    analyze(again)
    rebuilt = sites_from_instrumented(again)
    assert rebuilt.ids() == table.ids()
    assert [s.descriptor for s in rebuilt] == [s.descriptor for s in table]


def test_deterministic_numbering():
    unit = load("stats.mf")
    a = emit_instrumented(instrument(unit)[0])
    b = emit_instrumented(instrument(load("stats.mf"))[0])
    assert a == b


def test_first_id_offsets_all_sites():
    _, table = instrument(load("acmpbl.mf"), InstrumentOptions(first_id=6914))
    assert table.ids() == list(range(6914, 6919))


def test_ids_increase_in_source_order():
    _, table = instrument(load("heat.mf"))
    lines = [s.line for s in table]
    assert lines == sorted(lines)


def test_multi_file_ids_continue(tmp_path):
    from driftlens.frontend import merge_units, parse_file
    a = tmp_path / "a.mf"
    b = tmp_path / "b.mf"
    a.write_text("PROGRAM main\n  REAL :: x\n  CALL sub(x)\nEND PROGRAM main\n")
    b.write_text("SUBROUTINE sub(y)\n  REAL, INTENT(OUT) :: y\n  y = 1.0\nEND SUBROUTINE sub\n")
    unit = merge_units([parse_file(a), parse_file(b)])
    inst, table = instrument(unit)
    assert [s.subprogram for s in table] == ["main", "main", "sub", "sub"]
    texts = split_by_origin(inst)
    assert set(texts) == {str(a), str(b)}
    assert "trace_start_sub_program('SUB',3)" in texts[str(b)]


def test_site_table_round_trip(tmp_path):
    _, table = instrument(load("gcd.mf"))
    path = tmp_path / "gcd.sites"
    write_site_table(table, path)
    assert read_site_table(path) == table
    lines = path.read_text().splitlines()
    assert lines[0] == "DRIFTLENS-SITES v1"
    assert len(lines) == len(table) + 1


def test_empty_site_table_is_header_only(tmp_path):
    path = tmp_path / "empty.sites"
    write_site_table(SiteTable(), path)
    assert path.read_text() == "DRIFTLENS-SITES v1\n"
    assert len(read_site_table(path)) == 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 10**6), st.sampled_from(["a", "sub_b"]),
                          st.integers(1, 9999), st.sampled_from(["X", "v(i-1)", "K"]),
                          st.sampled_from(["i4", "r4", "r8", "l4", "ch", "entry"])),
                unique_by=lambda t: t[0], max_size=30))
def test_site_table_codec_property(tmp_path_factory, rows):
    table = SiteTable()
    for row in rows:
        table.add(Site(*row))
    path = tmp_path_factory.mktemp("sites") / "t.sites"
    write_site_table(table, path)
    assert read_site_table(path) == table
