from fractions import Fraction

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from driftlens.errors import FormatError, TraceError, UnsupportedVersion
from driftlens.runtime import (
    DATA, RETURN, START, CaptureSession, CompareSession, DifferenceReport, Different,
    Identical, SequenceDivergence, Similar, SimilarityPolicy, TraceReader, classify_reals,
    format_header_real, format_real, format_value, parse_header, parse_value,
)

DEFAULT = SimilarityPolicy()


def write_trace(path, records, policy=DEFAULT):
    with CaptureSession(path, policy) as cap:
        for rec in records:
            cap.record(*rec)
    return path


SAMPLE = [
    (START, 1, "MAIN"),
    (DATA, 2, "X", "r4", 1.5),
    (DATA, 3, "N", "i4", 538976288),
    (DATA, 4, "OK", "l4", True),
    (DATA, 5, "D", "r8", 0.1),
    (RETURN, 1, "MAIN"),
]


# -- value formatting ----------------------------------------------------------

def test_format_real_fixed_width():
    assert format_real(1.0) == "+1.00000000000000000E+00"
    assert format_real(-0.125) == "-1.25000000000000000E-01"
    assert format_real(1e22) == "+1.00000000000000000E+22"
    assert format_real(float("nan")) == "+NAN"
    assert format_real(float("-nan")) == "+NAN"
    assert format_real(float("inf")) == "+INF"
    assert format_real(float("-inf")) == "-INF"


@given(st.floats(allow_nan=False))
def test_format_real_round_trips(x):
    assert float(format_real(x)) == x or (x == 0 and float(format_real(x)) == 0)
    assert parse_value("r8", format_real(x)) == x


def test_header_reals_are_short():
    assert format_header_real(1.0e-3) == "1.000E-03"
    assert format_header_real(1.0e-10) == "1.000E-10"
    assert DEFAULT.header() == "DRIFTLENS-TRACE v1 rel=1.000E-03 abs=1.000E-10 ch=0\n"


@given(st.floats(min_value=0, max_value=1e10))
def test_header_policy_round_trip(x):
    policy = SimilarityPolicy(x, x / 7, True)
    assert parse_header(policy.header().rstrip("\n")) == policy


def test_character_values_double_quotes():
    text = format_value("ch", "it's")
    assert text == "'it''s'"
    assert parse_value("ch", text) == "it's"


def test_policy_validation():
    with pytest.raises(ValueError):
        SimilarityPolicy(rel_tol=-1.0)
    with pytest.raises(ValueError):
        SimilarityPolicy(abs_tol=float("nan"))


# -- classifier ----------------------------------------------------------------------

@pytest.mark.parametrize("c,r,expected", [
    (1.0, 1.0, "identical"),
    (1.0, 1.0005, "similar"),
    (1.0, 1.002, "different"),
    (0.0, 5e-11, "similar"),
    (0.0, 2e-10, "different"),
    (float("nan"), float("nan"), "identical"),
    (float("nan"), 1.0, "different"),
    (float("inf"), float("inf"), "identical"),
    (float("inf"), 1e308, "different"),
    (float("inf"), float("-inf"), "different"),
    (0.0, -0.0, "similar"),
])
def test_classify_reals_cases(c, r, expected):
    assert classify_reals(c, r, DEFAULT) == expected


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(finite, finite, st.floats(0, 1), st.floats(0, 1))
def test_classifier_is_symmetric(c, r, rel, abs_):
    policy = SimilarityPolicy(rel, abs_)
    assert classify_reals(c, r, policy) == classify_reals(r, c, policy)


@given(finite, finite, st.floats(0, 0.5), st.floats(0, 0.5))
def test_classifier_monotone_in_tolerance(c, r, rel, abs_):
    tight = classify_reals(c, r, SimilarityPolicy(rel, abs_))
    loose = classify_reals(c, r, SimilarityPolicy(rel * 2, abs_ * 2))
    if tight == "similar":
        assert loose == "similar"


@given(finite)
def test_classifier_reflexive(x):
    assert classify_reals(x, x, DEFAULT) == "identical"


def test_boundary_is_inclusive():
    # |c-r| equal to rel*max(|c|,|r|) exactly in binary
    c, r = 1024.0, 1024.0 - 0.5
    policy = SimilarityPolicy(rel_tol=0.5 / 1024.0, abs_tol=0.0)
    assert Fraction(c) - Fraction(r) == Fraction(policy.rel_tol) * Fraction(c)
    assert classify_reals(c, r, policy) == "similar"


# -- capture / compare ----------------------------------------------------------------

def test_capture_writes_header_and_records(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    lines = path.read_text().splitlines()
    assert lines[0] == "DRIFTLENS-TRACE v1 rel=1.000E-03 abs=1.000E-10 ch=0"
    assert lines[1] == "S 1 1 MAIN"
    assert lines[2] == "D 2 2 X r4 +1.50000000000000000E+00"
    assert lines[3] == "D 3 3 N i4 538976288"
    assert lines[6] == "R 6 1 MAIN"


def test_capture_skips_characters_by_default(tmp_path):
    path = tmp_path / "c.trc"
    with CaptureSession(path) as cap:
        assert cap.record(DATA, 1, "NAME", "ch", "abc") is None
        cap.record(DATA, 2, "N", "i4", 1)
    assert path.read_text().count("\n") == 2


def test_capture_after_close_fails(tmp_path):
    cap = CaptureSession(tmp_path / "x.trc")
    cap.close()
    with pytest.raises(TraceError):
        cap.record(START, 1, "P")


def test_self_compare_is_identical(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    with CompareSession(path) as cmp:
        for rec in SAMPLE:
            assert cmp.compare(*rec) == Identical()
        cmp.end_of_run()
        report = cmp.finalize()
    assert report.entries == [] and report.exit_status == 0
    assert report.identical == 4


def test_compare_outcomes_carry_reference(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    cmp = CompareSession(path)
    cmp.compare(START, 1, "MAIN")
    out = cmp.compare(DATA, 2, "X", "r4", 1.5004)
    assert out == Similar(1.5)
    out = cmp.compare(DATA, 3, "N", "i4", 148443456)
    assert out == Different(148443456, 538976288)
    report = cmp.finalize()
    assert report.similar == 1 and report.different == 1
    [entry] = report.entries
    assert entry.reference == "538976288" and entry.line == 4
    assert report.exit_status == 1


def test_site_mismatch_halts(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    cmp = CompareSession(path)
    cmp.compare(START, 1, "MAIN")
    out = cmp.compare(START, 9, "OTHER")
    assert isinstance(out, SequenceDivergence)
    assert out.expected.site == 2 and out.site == 9 and out.seq == 2
    with pytest.raises(TraceError):
        cmp.compare(DATA, 2, "X", "r4", 1.5)
    assert cmp.finalize().exit_status == 2


def test_reference_exhausted_is_divergence(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE[:1])
    cmp = CompareSession(path)
    cmp.compare(START, 1, "MAIN")
    out = cmp.compare(DATA, 2, "X", "r4", 1.0)
    assert isinstance(out, SequenceDivergence) and out.expected is None


def test_leftover_reference_records_are_divergence(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    cmp = CompareSession(path)
    cmp.compare(START, 1, "MAIN")
    cmp.end_of_run()
    report = cmp.finalize()
    assert report.divergence is not None and report.divergence.site is None


def test_report_json_round_trip(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    cmp = CompareSession(path)
    cmp.compare(START, 1, "MAIN")
    cmp.compare(DATA, 2, "X", "r4", 7.0)
    cmp.compare(START, 5, "ELSEWHERE")
    report = cmp.finalize()
    assert DifferenceReport.from_dict(report.to_dict()) == report


# -- reader validation -------------------------------------------------------------------

def test_corrupted_record_names_line_and_offset(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    data = bytearray(path.read_bytes())
    header_len = data.index(b"\n") + 1
    second = data.index(b"\n", header_len) + 1
    data[second + 2] = ord("x")  # inside the seq number of record 2
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError) as info:
        list(TraceReader(path))
    assert info.value.line == 3
    assert info.value.offset == second
    assert "line 3" in str(info.value)


def test_truncated_final_record(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError):
        list(TraceReader(path))


def test_sequence_gap_detected(tmp_path):
    path = write_trace(tmp_path / "t.trc", SAMPLE)
    text = path.read_text().replace("D 3 3 N", "D 4 3 N")
    path.write_text(text)
    with pytest.raises(FormatError):
        list(TraceReader(path))


def test_unsupported_version(tmp_path):
    path = tmp_path / "v2.trc"
    path.write_text("DRIFTLENS-TRACE v2 rel=1.000E-03 abs=1.000E-10 ch=0\n")
    with pytest.raises(UnsupportedVersion):
        TraceReader(path)


def test_bad_header(tmp_path):
    path = tmp_path / "bad.trc"
    path.write_text("hello\n")
    with pytest.raises(FormatError):
        TraceReader(path)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(
    st.tuples(st.just(DATA), st.integers(1, 999), st.sampled_from(["A", "b(i)"]),
              st.just("r8"), st.floats(width=64)),
    st.tuples(st.just(DATA), st.integers(1, 999), st.just("N"), st.just("i4"),
              st.integers(-2**31, 2**31 - 1)),
    st.tuples(st.just(DATA), st.integers(1, 999), st.just("L"), st.just("l4"), st.booleans()),
    st.tuples(st.sampled_from([START, RETURN]), st.integers(1, 999), st.just("SUB")),
), max_size=40))
def test_capture_compare_self_round_trip(tmp_path_factory, records):
    path = tmp_path_factory.mktemp("rt") / "t.trc"
    write_trace(path, records)
    with CompareSession(path) as cmp:
        for rec in records:
            assert cmp.compare(*rec) == Identical()
        cmp.end_of_run()
        assert cmp.finalize().entries == []
    assert [r.seq for r in TraceReader(path)] == list(range(1, len(records) + 1))
