import random

import pytest

from driftlens.errors import FormatError, RangeError, SiteMismatch, UnknownSite
from driftlens.instrument import SiteTable, Site
from driftlens.runtime import (
    DATA, START, RETURN, CaptureSession, DifferenceReport, SequenceDivergence, TraceReader,
    TraceRecord, ValueDifference,
)
from driftlens.tools import (
    build_index, coverage, coverage_from_sites, load_or_build_index, read_index,
    record_at, render_report, slice_trace, write_index, index_path,
)

from support import capture, instrumented


def synthetic(path, n):
    with CaptureSession(path) as cap:
        cap.record(START, 1, "MAIN")
        for i in range(n - 2):
            cap.record(DATA, 2 + i % 5, "X", "r8", i * 0.5)
        cap.record(RETURN, 1, "MAIN")
    return path


def test_three_record_index(tmp_path):
    path = synthetic(tmp_path / "t.trc", 3)
    index = build_index(path)
    assert index.count == 3
    assert len(index.checkpoints) == 1
    assert index.checkpoints[0][0] == 1
    assert index.spans == {"MAIN": [1, 3]}


def test_index_random_access_matches_scan(tmp_path):
    path = synthetic(tmp_path / "t.trc", 5000)
    index = build_index(path, stride=64)
    scan = list(TraceReader(path))
    rng = random.Random(7)
    for seq in rng.sample(range(1, 5001), 50):
        assert record_at(path, index, seq) == scan[seq - 1]


def test_index_counts_sites(tmp_path):
    path = synthetic(tmp_path / "t.trc", 12)
    index = build_index(path)
    assert index.site_counts[1] == 2
    assert sum(index.site_counts.values()) == 12


def test_index_sidecar_round_trip(tmp_path):
    path = synthetic(tmp_path / "t.trc", 300)
    index = build_index(path, stride=50)
    write_index(index, index_path(path))
    assert read_index(index_path(path)) == index
    assert load_or_build_index(path) == index


def test_index_sidecar_layout(tmp_path):
    path = synthetic(tmp_path / "t.trc", 10)
    write_index(build_index(path, stride=4), index_path(path))
    lines = index_path(path).read_text().splitlines()
    assert lines[0] == "DRIFTLENS-IDX v1 k=4"
    assert [int(l.split()[0]) for l in lines[1:]] == [1, 5, 9]
    header_len = len(path.read_bytes().split(b"\n")[0]) + 1
    assert lines[1] == f"1 {header_len}"
    assert read_index(index_path(path)).count == 10


@pytest.mark.parametrize("text", ["", "DRIFTLENS-IDX v2 k=4\n", "DRIFTLENS-IDX v1 k=4\n1 x\n",
                                  "DRIFTLENS-IDX v1 k=4\n2 40\n"])
def test_bad_sidecar(tmp_path, text):
    path = synthetic(tmp_path / "t.trc", 10)
    index_path(path).write_text(text)
    with pytest.raises(FormatError):
        read_index(index_path(path))


def test_corrupted_middle_line_names_line(tmp_path):
    path = synthetic(tmp_path / "t.trc", 100)
    lines = path.read_bytes().split(b"\n")
    lines[50] = lines[50].replace(b" X ", b" X  ")
    path.write_bytes(b"\n".join(lines))
    with pytest.raises(FormatError) as info:
        build_index(path)
    assert info.value.line == 51


def test_slice_whole_and_window(tmp_path):
    path = synthetic(tmp_path / "t.trc", 200)
    index = build_index(path, stride=16)
    scan = list(TraceReader(path))
    assert list(slice_trace(path, index, 1, 200)) == scan
    window = list(slice_trace(path, index, 90, 110))
    assert len(window) == 21 and window == scan[89:110]


@pytest.mark.parametrize("lo,hi", [(0, 3), (5, 4), (1, 201), (201, 201)])
def test_slice_range_errors(tmp_path, lo, hi):
    path = synthetic(tmp_path / "t.trc", 200)
    with pytest.raises(RangeError):
        list(slice_trace(path, build_index(path), lo, hi))


# -- coverage -----------------------------------------------------------------------

def test_branch_coverage(tmp_path):
    unit, table = instrumented("branches.mf")
    assert len(table) == 10
    capture(unit, tmp_path / "l.trc", "left,storage,aswritten,zero")
    capture(unit, tmp_path / "r.trc", "right,storage,aswritten,zero")
    left = coverage([tmp_path / "l.trc"], table)
    right = coverage([tmp_path / "r.trc"], table)
    both = coverage([tmp_path / "l.trc", tmp_path / "r.trc"], table)
    assert (left.visited, left.percentage) == (7, 70.0)
    assert right.percentage == 70.0
    assert both.percentage == 100.0 > max(left.percentage, right.percentage)
    assert both.unvisited == []
    assert set(left.unvisited).isdisjoint(right.unvisited)


def test_coverage_unknown_site(tmp_path):
    path = synthetic(tmp_path / "t.trc", 4)
    table = SiteTable()
    table.add(Site(1, "main", 1, "MAIN", "entry"))
    with pytest.raises(SiteMismatch):
        coverage([path], table)


def test_coverage_per_subprogram():
    table = SiteTable()
    for i, sub in enumerate(["a", "a", "b"], start=1):
        table.add(Site(i, sub, i, "X", "i4"))
    report = coverage_from_sites({1, 3}, table)
    assert report.per_subprogram == {"a": (1, 2), "b": (1, 1)}
    assert report.percentage == round(200 / 3, 1)
    assert "2/3" in report.render()


# -- report rendering -----------------------------------------------------------------

def _table(*rows):
    t = SiteTable()
    for r in rows:
        t.add(Site(*r))
    return t


def test_render_value_error_block():
    report = DifferenceReport([ValueDifference(24467, 24468, "NEW_DOMDESC", "i4",
                                               "148443456", "538976288")], 10, 0, 1)
    table = _table((24468, "med_add_config", 120, "NEW_DOMDESC", "i4"))
    text = render_report(report, table)
    assert text.startswith("!*** Trace value error:\n!Value computed: 148443456\n")
    assert "!Trace file line: 24468 NEW_DOMDESC = 538976288\n!Record seq: 24467\n" in text
    assert text.endswith("1 difference\n")


def test_render_sequence_error_block():
    expected = TraceRecord(44475386, START, 2444, "WRF_PUT_DOM_TI_INTEGER")
    div = SequenceDivergence(expected, START, 2632, "USE_PACKAGE", 44475386)
    table = _table((2444, "wrf_put_dom_ti_integer", 10, "WRF_PUT_DOM_TI_INTEGER", "entry"),
                   (2632, "use_package", 30, "USE_PACKAGE", "entry"))
    text = render_report(DifferenceReport([div]), table)
    lines = text.splitlines()
    assert lines[0] == "!*** Trace sequence error:"
    assert lines[1] == "!Sequence number reached: 2632"
    assert lines[2] == "!Trace line: 44475387 2444 Start sub-program: WRF_PUT_DOM_TI_INTEGER"
    assert "44475387 2632 Start sub-program: USE_PACKAGE" in lines


def test_render_start_of_subprogram_error():
    expected = TraceRecord(9607, DATA, 5, "STOPTIME", "i4", "0")
    div = SequenceDivergence(expected, START, 6, "ESMF_TIMECOPY", 9607)
    table = _table((5, "clock", 3, "STOPTIME", "i4"), (6, "esmf_timecopy", 9, "ESMF_TIMECOPY",
                                                        "entry"))
    text = render_report(DifferenceReport([div]), table)
    assert text.startswith("!*** Trace error at start of sub-program: ESMF_TIMECOPY\n"
                           "!Trace file line: 9608 STOPTIME = 0\n")


def test_render_empty_report():
    assert render_report(DifferenceReport(), SiteTable()) == "0 differences\n"


def test_render_unknown_site():
    report = DifferenceReport([ValueDifference(1, 99, "X", "i4", "1", "2")], 0, 0, 1)
    with pytest.raises(UnknownSite):
        render_report(report, SiteTable())


def test_render_is_deterministic(tmp_path):
    unit, table = instrumented("case3.mf")
    capture(unit, tmp_path / "c.trc")
    from support import compare
    report = compare(unit, tmp_path / "c.trc", "left,storage,reversed,zero").report
    assert render_report(report, table) == render_report(report, table)


@pytest.mark.parametrize("name,ref_env,new_env", [
    ("case1", "left,storage,aswritten,space", "left,storage,aswritten,seeded:1"),
    ("case3", "left,storage,aswritten,zero", "left,storage,reversed,zero"),
])
def test_report_matches_golden(tmp_path, name, ref_env, new_env):
    from support import FIXTURES, compare
    unit, table = instrumented(f"{name}.mf")
    capture(unit, tmp_path / "r.trc", ref_env)
    report = compare(unit, tmp_path / "r.trc", new_env).report
    assert render_report(report, table) == (FIXTURES / f"{name}.report.txt").read_text()
