"""Unclassifiable-origin and unknown-duration redistribution.

Expected values in the oracle tests were computed by hand from the
proportional-allocation rules; the property tests check conservation,
proportionality and idempotence on generated tables.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from migharmon.errors import ConservationError, EmptyDestination, InvalidLambda
from migharmon.ingest import synthesize_totals
from migharmon.model import (
    STATED_BINS,
    UNCLASSIFIABLE,
    DurationBin,
    MigrationTable,
    OriginRef,
)
from migharmon.redistribute import (
    FIXED_WEIGHTS,
    WeightVector,
    build_weight_vector,
    conservation_check,
    redistribute_duration,
    redistribute_unclassifiable,
)

from conftest import build_table

LT1 = DurationBin.UNDER_1
Y14 = DurationBin.Y1_4
Y59 = DurationBin.Y5_9
NS = DurationBin.NOT_STATED

A = OriginRef.interstate("A")
B = OriginRef.interstate("B")


# -- weight vectors ------------------------------------------------------------


def test_fixed_weights_exact():
    assert build_weight_vector(mode="fixed").w == (0.35, 0.30, 0.20, 0.10, 0.05)
    assert FIXED_WEIGHTS == (0.35, 0.30, 0.20, 0.10, 0.05)


def test_exp_weights_frozen_value():
    w = build_weight_vector(0.4, mode="exp").w
    expected = (
        0.38128068322068076,
        0.2555800851289867,
        0.17132045442945498,
        0.11483953489999889,
        0.07697924232087867,
    )
    assert w == pytest.approx(expected, rel=1e-12)


def test_negative_decay_rejected():
    with pytest.raises(InvalidLambda):
        build_weight_vector(-0.1, mode="exp")


def test_weight_vector_invariants_rejected():
    with pytest.raises(ValueError):
        WeightVector(w=(0.5, 0.5, 0.0, 0.0, 0.0), decay=0.0, mode="fixed")  # w5 = 0
    with pytest.raises(ValueError):
        WeightVector(w=(0.1, 0.2, 0.3, 0.2, 0.2), decay=0.0, mode="fixed")  # not mono
    with pytest.raises(ValueError):
        WeightVector(w=(0.4, 0.3, 0.2, 0.1, 0.1), decay=0.0, mode="fixed")  # sum != 1


# -- unclassifiable redistribution (hand oracle) ---------------------------------


def unclassifiable_fixture() -> MigrationTable:
    return synthesize_totals(
        build_table(
            "1991",
            [
                ("D", A, {LT1: 30, Y14: 10}),
                ("D", B, {LT1: 10, Y14: 30}),
                ("D", UNCLASSIFIABLE, {LT1: 8, Y14: 4, Y59: 5}),
            ],
        )
    )


def test_unclassifiable_oracle_values():
    out = redistribute_unclassifiable(unclassifiable_fixture())
    assert out.get("D", A, LT1) == pytest.approx(36.0)
    assert out.get("D", B, LT1) == pytest.approx(12.0)
    assert out.get("D", A, Y14) == pytest.approx(11.0)
    assert out.get("D", B, Y14) == pytest.approx(33.0)
    # bin 5-9 had no classified mass: falls back to row-total shares
    assert out.get("D", A, Y59) == pytest.approx(2.5)
    assert out.get("D", B, Y59) == pytest.approx(2.5)
    assert out.part_inflow("D") == pytest.approx(97.0)
    assert out.get("D", UNCLASSIFIABLE, LT1) == 0.0
    assert out.pair_total("D", UNCLASSIFIABLE) == 0.0


def test_unclassifiable_totals_updated():
    out = redistribute_unclassifiable(unclassifiable_fixture())
    assert out.pair_total("D", A) == pytest.approx(36 + 11 + 2.5)
    assert out.pair_total("D", B) == pytest.approx(12 + 33 + 2.5)


def test_unclassifiable_without_mass_is_identity():
    table = synthesize_totals(
        build_table("1991", [("D", A, {LT1: 30}), ("D", B, {LT1: 10})])
    )
    out = redistribute_unclassifiable(table)
    assert out.counts == table.counts


def test_unclassifiable_empty_destination_raises():
    table = synthesize_totals(
        build_table("1991", [("D", UNCLASSIFIABLE, {LT1: 8})])
    )
    with pytest.raises(EmptyDestination):
        redistribute_unclassifiable(table)


# -- duration redistribution (hand oracle) ---------------------------------------


def test_duration_oracle_values():
    table = synthesize_totals(
        build_table(
            "1991",
            [
                (
                    "D",
                    A,
                    {
                        DurationBin.UNDER_1: 10,
                        DurationBin.Y1_4: 20,
                        DurationBin.Y5_9: 0,
                        DurationBin.Y10_19: 5,
                        DurationBin.Y20_PLUS: 5,
                        NS: 40,
                    },
                )
            ],
        )
    )
    out = redistribute_duration(table, build_weight_vector(mode="fixed"))
    got = [out.get("D", A, b) for b in STATED_BINS]
    assert got == pytest.approx([24.0, 32.0, 8.0, 9.0, 7.0])
    assert out.get("D", A, NS) == 0.0
    assert out.row_part_sum("D", A) == pytest.approx(80.0)


def test_duration_without_mass_is_identity():
    table = synthesize_totals(build_table("1991", [("D", A, {LT1: 10})]))
    out = redistribute_duration(table, build_weight_vector(mode="fixed"))
    assert out.counts == table.counts


# -- property tests ----------------------------------------------------------------

# zero or a realistic head-count magnitude; subnormal floats would only
# exercise float underflow, not the reallocation arithmetic
counts_strategy = st.one_of(
    st.just(0.0),
    st.floats(min_value=1e-3, max_value=1e6, allow_nan=False),
)


@st.composite
def destination_rows(draw):
    """One destination with 2-5 classified origins plus an unclassifiable row."""
    n = draw(st.integers(min_value=2, max_value=5))
    rows = []
    for i in range(n):
        bins = {
            b: draw(counts_strategy) for b in (LT1, Y14, Y59)
        }
        rows.append(("D", OriginRef.interstate(f"O{i}"), bins))
    uncl = {b: draw(counts_strategy) for b in (LT1, Y14, Y59)}
    rows.append(("D", UNCLASSIFIABLE, uncl))
    return rows


@settings(max_examples=60, deadline=None)
@given(rows=destination_rows())
def test_unclassifiable_conserves_and_proportions(rows):
    table = synthesize_totals(build_table("1991", rows))
    classified_mass = sum(
        v
        for (d, o, b), v in table.counts.items()
        if o.kind is not UNCLASSIFIABLE.kind and b is not DurationBin.TOTAL
    )
    uncl_mass = table.row_part_sum("D", UNCLASSIFIABLE)
    if classified_mass <= 0:
        if uncl_mass > 0:
            with pytest.raises(EmptyDestination):
                redistribute_unclassifiable(table)
        else:
            assert redistribute_unclassifiable(table).counts == table.counts
        return
    out = redistribute_unclassifiable(table)

    # conservation per destination
    assert out.part_inflow("D") == pytest.approx(table.part_inflow("D"), rel=1e-9)
    # unclassifiable fully absorbed
    assert out.pair_total("D", UNCLASSIFIABLE) == 0.0
    # per-bin proportionality among positive classified pairs
    for b in (LT1, Y14, Y59):
        origins = [
            o
            for o in table.origins("D")
            if o.kind is not UNCLASSIFIABLE.kind and table.get("D", o, b) > 0
        ]
        for i in range(len(origins)):
            for j in range(i + 1, len(origins)):
                before = table.get("D", origins[i], b) / table.get("D", origins[j], b)
                denom = out.get("D", origins[j], b)
                if denom == 0:
                    continue
                after = out.get("D", origins[i], b) / denom
                assert after == pytest.approx(before, rel=1e-9)
    # idempotence: a second pass changes nothing
    again = redistribute_unclassifiable(out)
    assert again.counts == pytest.approx(out.counts)


@settings(max_examples=60, deadline=None)
@given(
    stated=st.lists(counts_strategy, min_size=5, max_size=5),
    ns=counts_strategy,
    decay=st.floats(min_value=0.0, max_value=2.0, allow_nan=False),
    mode=st.sampled_from(["fixed", "exp"]),
)
def test_duration_conserves_rows(stated, ns, decay, mode):
    bins = dict(zip(STATED_BINS, stated))
    bins[NS] = ns
    table = synthesize_totals(build_table("1991", [("D", A, bins)]))
    weights = build_weight_vector(decay, mode)
    out = redistribute_duration(table, weights)
    assert out.row_part_sum("D", A) == pytest.approx(
        table.row_part_sum("D", A), rel=1e-9
    )
    assert out.get("D", A, NS) == 0.0
    for b, w in zip(STATED_BINS, weights.w):
        assert out.get("D", A, b) == pytest.approx(
            table.get("D", A, b) + w * ns, rel=1e-9, abs=1e-9
        )


# -- conservation check API ---------------------------------------------------------


def test_conservation_check_passes_identity():
    table = synthesize_totals(build_table("1991", [("D", A, {LT1: 5})]))
    result = conservation_check(table, table, level="per-destination")
    assert result.passed
    result.raise_if_failed()


def test_conservation_check_detects_loss():
    before = synthesize_totals(build_table("1991", [("D", A, {LT1: 100})]))
    after = synthesize_totals(build_table("1991", [("D", A, {LT1: 90})]))
    result = conservation_check(before, after, level="grand")
    assert not result.passed
    with pytest.raises(ConservationError):
        result.raise_if_failed()
