"""Parsing, serialization round-trips, totals, shares, integer export."""

import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from migharmon.errors import NegativeCount, ParseError, TotalMismatch
from migharmon.ingest import (
    category_shares,
    duration_shares,
    integerize_table,
    largest_remainder_round,
    parse_table,
    serialize_table,
    synthesize_totals,
)
from migharmon.model import (
    INTERNATIONAL,
    INTRASTATE_DISTRICT,
    PART_BINS,
    DurationBin,
    MigrationTable,
    OriginRef,
)

from conftest import build_table, toy_registry

LT1 = DurationBin.UNDER_1
Y14 = DurationBin.Y1_4
NS = DurationBin.NOT_STATED
TOTAL = DurationBin.TOTAL

LONG_HEADER = "decade,destination,origin_kind,origin_name,duration_bin,count\n"


def test_parse_long_layout(registry_toy):
    blob = io.StringIO(
        LONG_HEADER
        + "1991,P,interstate,A,lt1,5\n"
        + "1991,P,intrastate_district,,lt1,9\n"
        + "1991,P,international,,not_stated,2\n"
    )
    table = parse_table(blob, registry_toy)
    assert table.decade == "1991"
    assert table.get("P", OriginRef.interstate("A"), LT1) == 5
    assert table.get("P", INTRASTATE_DISTRICT, LT1) == 9
    assert table.get("P", INTERNATIONAL, NS) == 2


def test_parse_wide_layout(registry_toy):
    blob = io.StringIO(
        "decade,destination,origin_kind,origin_name,lt1,1-4,5-9,10-19,20plus,not_stated,total\n"
        "2001,P,interstate,A,1,2,3,4,5,6,21\n"
    )
    table = parse_table(blob, registry_toy, layout="wide")
    origin = OriginRef.interstate("A")
    assert [table.get("P", origin, b) for b in PART_BINS] == [1, 2, 3, 4, 5, 6]
    assert table.get("P", origin, TOTAL) == 21


def test_parse_resolves_numeric_indices(registry_india):
    blob = io.StringIO(
        LONG_HEADER + "1991,9,interstate,24,lt1,100\n"  # dest JK, origin UP
    )
    table = parse_table(blob, registry_india, index_decade="1991")
    assert table.get("JK", OriginRef.interstate("UP"), LT1) == 100


def test_parse_rejects_bad_header(registry_toy):
    with pytest.raises(ParseError, match="header"):
        parse_table(io.StringIO("a,b,c\n1,2,3\n"), registry_toy)


def test_parse_rejects_mixed_decades(registry_toy):
    blob = io.StringIO(
        LONG_HEADER + "1991,P,interstate,A,lt1,5\n" + "2001,P,interstate,A,1-4,5\n"
    )
    with pytest.raises(ParseError, match="decade"):
        parse_table(blob, registry_toy)


def test_parse_rejects_negative_count(registry_toy):
    blob = io.StringIO(LONG_HEADER + "1991,P,interstate,A,lt1,-3\n")
    with pytest.raises(NegativeCount):
        parse_table(blob, registry_toy)


def test_parse_rejects_self_flow(registry_toy):
    blob = io.StringIO(LONG_HEADER + "1991,P,interstate,P,lt1,3\n")
    with pytest.raises(ParseError, match="equals destination"):
        parse_table(blob, registry_toy)


def test_parse_rejects_duplicate_record(registry_toy):
    blob = io.StringIO(
        LONG_HEADER + "1991,P,interstate,A,lt1,3\n" + "1991,P,interstate,A,lt1,4\n"
    )
    with pytest.raises(ParseError, match="duplicate"):
        parse_table(blob, registry_toy)


def test_parse_rejects_named_pseudo_origin(registry_toy):
    blob = io.StringIO(LONG_HEADER + "1991,P,international,A,lt1,3\n")
    with pytest.raises(ParseError, match="origin_name"):
        parse_table(blob, registry_toy)


def test_round_trip_preserves_cells(registry_toy):
    table = build_table(
        "2001",
        [
            ("P", OriginRef.interstate("A"), {LT1: 5, Y14: 2.5, TOTAL: 7.5}),
            ("P", INTRASTATE_DISTRICT, {LT1: 1}),
            ("Q", INTERNATIONAL, {NS: 0.125}),
            ("Q", OriginRef.interstate("B"), {LT1: 9}),
        ],
    )
    out = io.StringIO()
    serialize_table(table, out)
    parsed = parse_table(io.StringIO(out.getvalue()), registry_toy)
    assert parsed.counts == table.counts
    assert parsed.decade == table.decade


def test_serialize_is_deterministic(registry_toy):
    rows = [
        ("Q", OriginRef.interstate("B"), {LT1: 9}),
        ("P", OriginRef.interstate("A"), {LT1: 5}),
    ]
    one = io.StringIO()
    serialize_table(build_table("1991", rows), one)
    two = io.StringIO()
    serialize_table(build_table("1991", list(reversed(rows))), two)
    assert one.getvalue() == two.getvalue()


def test_synthesize_totals_adds_one_cell_per_row():
    table = build_table(
        "1991",
        [
            ("P", OriginRef.interstate("A"), {LT1: 5, Y14: 3}),
            ("P", INTRASTATE_DISTRICT, {LT1: 2}),
            ("Q", OriginRef.interstate("A"), {NS: 4}),
        ],
    )
    out = synthesize_totals(table)
    assert len(out.counts) == len(table.counts) + 3  # one total per row
    assert out.get("P", OriginRef.interstate("A"), TOTAL) == 8
    assert out.has_totals
    again = synthesize_totals(out)
    assert again.counts == out.counts  # idempotent


def test_synthesize_totals_keeps_declared_within_tolerance():
    table = build_table(
        "1991", [("P", OriginRef.interstate("A"), {LT1: 5, TOTAL: 5.4})]
    )
    out = synthesize_totals(table, tolerance=0.5)
    assert out.get("P", OriginRef.interstate("A"), TOTAL) == 5.4


def test_synthesize_totals_rejects_mismatch():
    table = build_table(
        "1991", [("P", OriginRef.interstate("A"), {LT1: 5, TOTAL: 9})]
    )
    with pytest.raises(TotalMismatch):
        synthesize_totals(table, tolerance=0.5)


def test_category_shares_sum_to_one():
    table = synthesize_totals(
        build_table(
            "1991",
            [
                ("P", OriginRef.interstate("A"), {LT1: 20}),
                ("P", INTRASTATE_DISTRICT, {LT1: 70}),
                ("P", INTERNATIONAL, {LT1: 6}),
            ],
        )
    )
    shares = category_shares(table)
    assert shares["intrastate"] == pytest.approx(70 / 96)
    assert shares["interstate"] == pytest.approx(20 / 96)
    assert shares["international"] == pytest.approx(6 / 96)
    assert sum(shares.values()) == pytest.approx(1.0)


def test_duration_shares_groups_bins():
    table = synthesize_totals(
        build_table(
            "1991",
            [
                (
                    "P",
                    OriginRef.interstate("A"),
                    {
                        DurationBin.UNDER_1: 10,
                        DurationBin.Y1_4: 20,
                        DurationBin.Y5_9: 15,
                        DurationBin.Y10_19: 15,
                        DurationBin.Y20_PLUS: 30,
                        NS: 10,
                    },
                )
            ],
        )
    )
    shares = duration_shares(table)
    assert shares["lt1"] == pytest.approx(0.10)
    assert shares["1_20"] == pytest.approx(0.50)
    assert shares["gt20"] == pytest.approx(0.30)
    assert shares["not_stated"] == pytest.approx(0.10)


def test_largest_remainder_frozen_cases():
    assert largest_remainder_round([1.4, 1.4, 1.2], 4) == [2, 1, 1]
    assert largest_remainder_round([0.5, 0.5], 1) == [1, 0]
    assert largest_remainder_round([2.7, 0.3, 1.0], 4) == [3, 0, 1]


@settings(max_examples=100, deadline=None)
@given(
    values=st.lists(
        st.floats(min_value=0.0, max_value=1e6, allow_nan=False), min_size=1, max_size=40
    )
)
def test_largest_remainder_properties(values):
    target = round(sum(values))
    out = largest_remainder_round(values, target)
    assert sum(out) == target
    assert all(isinstance(v, int) for v in out)
    for got, want in zip(out, values):
        assert abs(got - want) < 1.0 or got in (int(want), int(want) + 1)


def test_integerize_preserves_destination_sums():
    table = build_table(
        "1991",
        [
            ("P", OriginRef.interstate("A"), {LT1: 10.6, Y14: 10.6}),
            ("P", OriginRef.interstate("B"), {LT1: 10.6, NS: 10.2}),
            ("Q", OriginRef.interstate("A"), {LT1: 3.3}),
        ],
    )
    out = integerize_table(synthesize_totals(table))
    assert out.part_inflow("P") == round(10.6 * 3 + 10.2)
    assert out.part_inflow("Q") == 3.0
    for (_, _, b), v in out.sorted_cells():
        assert v == int(v)
    assert out.has_totals
