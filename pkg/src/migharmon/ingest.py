"""Parse census-style migration tables into the canonical model and back.

Canonical layout (UTF-8 CSV, header row)::

    decade,destination,origin_kind,origin_name,duration_bin,count

with origin_kind in {interstate, intrastate_district, intrastate_other,
international, unclassifiable}, origin_name empty unless interstate, and
duration_bin in {lt1, 1-4, 5-9, 10-19, 20plus, not_stated, total}. A "wide"
layout (one row per destination/origin, one column per bin) is accepted as a
secondary input format because published source sheets are wide.

Names and indices are canonicalized against the entity registry at parse
time, so downstream code only ever sees canonical ids.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import IO, Iterable

from .errors import NegativeCount, ParseError, PreconditionError, TotalMismatch
from .model import (
    BIN_TOKENS,
    PART_BINS,
    STATED_BINS,
    TOKEN_TO_BIN,
    CellKey,
    DurationBin,
    MigrationTable,
    OriginKind,
    OriginRef,
    cell_sort_key,
)
from .registry import EntityRegistry

LONG_HEADER = ["decade", "destination", "origin_kind", "origin_name", "duration_bin", "count"]
WIDE_HEADER = ["decade", "destination", "origin_kind", "origin_name"] + [
    BIN_TOKENS[b] for b in PART_BINS
]

_KIND_TOKENS = {k.value: k for k in OriginKind}


def _open(source: str | Path | IO[str]):
    if hasattr(source, "read"):
        return source, False
    return open(source, "r", encoding="utf-8", newline=""), True


def _resolve_place(
    token: str, registry: EntityRegistry, index_decade: str | None, lineno: int
) -> str:
    if index_decade is not None:
        try:
            index = int(token)
        except ValueError:
            raise ParseError(lineno, f"expected numeric index, got {token!r}") from None
        return registry.resolve_index(index, index_decade)
    return registry.canonicalize(token)


def _parse_count(token: str, lineno: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(lineno, f"bad count {token!r}") from None
    if math.isnan(value) or math.isinf(value):
        raise ParseError(lineno, f"non-finite count {token!r}")
    if value < 0:
        raise NegativeCount(lineno, value)
    return value


def _make_origin(
    kind_token: str,
    name_token: str,
    destination: str,
    registry: EntityRegistry,
    index_decade: str | None,
    lineno: int,
) -> OriginRef:
    kind = _KIND_TOKENS.get(kind_token)
    if kind is None:
        raise ParseError(lineno, f"unknown origin kind {kind_token!r}")
    if kind is OriginKind.INTERSTATE:
        if not name_token:
            raise ParseError(lineno, "interstate row lacks origin_name")
        state = _resolve_place(name_token, registry, index_decade, lineno)
        if state == destination:
            raise ParseError(lineno, f"interstate origin equals destination {state!r}")
        return OriginRef.interstate(state)
    if name_token:
        raise ParseError(lineno, f"{kind_token} row must leave origin_name empty")
    return OriginRef(kind)


def parse_table(
    source: str | Path | IO[str],
    registry: EntityRegistry,
    decade: str | None = None,
    layout: str = "long",
    index_decade: str | None = None,
) -> MigrationTable:
    """Parse a canonical (or wide) CSV into a structurally valid table.

    ``decade`` pins the expected decade label; otherwise it is inferred and
    required to be unique. With ``index_decade`` set, destination and origin
    fields are numeric indices resolved through that decade's index map.
    """
    if layout not in ("long", "wide"):
        raise ValueError(f"unknown layout {layout!r}")
    stream, owned = _open(source)
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
        expected = LONG_HEADER if layout == "long" else WIDE_HEADER
        if header is None or [h.strip() for h in header[: len(expected)]] != expected:
            raise ParseError(1, f"expected header {','.join(expected)}")
        counts: dict[CellKey, float] = {}
        seen_decade = decade
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(expected):
                raise ParseError(lineno, f"expected {len(expected)} fields, got {len(row)}")
            row = [c.strip() for c in row]
            row_decade = row[0]
            if seen_decade is None:
                seen_decade = row_decade
            elif row_decade != seen_decade:
                raise ParseError(
                    lineno, f"decade {row_decade!r} differs from {seen_decade!r}"
                )
            destination = _resolve_place(row[1], registry, index_decade, lineno)
            origin = _make_origin(row[2], row[3], destination, registry, index_decade, lineno)
            if layout == "long":
                bin_ = TOKEN_TO_BIN.get(row[4])
                if bin_ is None:
                    raise ParseError(lineno, f"unknown duration bin {row[4]!r}")
                items = [(bin_, _parse_count(row[5], lineno))]
            else:
                items = [
                    (b, _parse_count(row[4 + i], lineno))
                    for i, b in enumerate(PART_BINS)
                ]
                if len(row) > 4 + len(PART_BINS) and row[4 + len(PART_BINS)]:
                    items.append(
                        (DurationBin.TOTAL, _parse_count(row[4 + len(PART_BINS)], lineno))
                    )
            for bin_, value in items:
                key = (destination, origin, bin_)
                if key in counts:
                    raise ParseError(lineno, f"duplicate record for {key!r}")
                counts[key] = value
        if seen_decade is None:
            raise ParseError(1, "empty table")
        table = MigrationTable(decade=seen_decade, counts=counts)
        for dest in table.destinations:
            if table.part_inflow(dest) <= 0 and table.inflow(dest) <= 0:
                raise ParseError(1, f"destination {dest!r} has no positive inflow")
        return table
    finally:
        if owned:
            stream.close()


def _format_count(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _place_label(token: str, registry: EntityRegistry | None) -> str:
    if registry is None:
        return token
    return registry.name_of(token)


def serialize_table(
    table: MigrationTable,
    stream: IO[str],
    registry: EntityRegistry | None = None,
) -> None:
    """Write the canonical long CSV, rows in deterministic order.

    Counts round-trip at full precision; with a registry, entity tokens are
    written as canonical names (the form `parse_table` accepts).
    """
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(LONG_HEADER)
    for (dest, origin, bin_), value in table.sorted_cells():
        name = _place_label(origin.state, registry) if origin.state else ""
        writer.writerow(
            [
                table.decade,
                _place_label(dest, registry),
                origin.kind.value,
                name,
                BIN_TOKENS[bin_],
                _format_count(value),
            ]
        )


def synthesize_totals(table: MigrationTable, tolerance: float = 0.0) -> MigrationTable:
    """Add a TOTAL cell to every row, or verify one that is already present.

    Declared totals deviating from the recomputed part sum by more than
    ``tolerance`` (absolute) raise TotalMismatch; within tolerance the
    declared value is kept rather than overwritten. Idempotent.
    """
    counts = dict(table.counts)
    rows = sorted(
        {(d, o) for d, o, _ in table.counts}, key=lambda r: (r[0], r[1].sort_key)
    )
    for dest, origin in rows:
        computed = table.row_part_sum(dest, origin)
        key = (dest, origin, DurationBin.TOTAL)
        if key in counts:
            declared = counts[key]
            if abs(declared - computed) > tolerance:
                raise TotalMismatch(dest, origin, declared, computed)
        else:
            counts[key] = computed
    return table.with_counts(counts)


def require_totals(table: MigrationTable) -> None:
    if not table.has_totals:
        raise PreconditionError(
            f"table {table.decade!r} lacks TOTAL cells; run synthesize_totals first"
        )


def category_shares(table: MigrationTable) -> dict[str, float]:
    """Share of total migrants per origin category; values sum to 1."""
    require_totals(table)
    sums = {"intrastate": 0.0, "interstate": 0.0, "international": 0.0, "unclassifiable": 0.0}
    for (dest, origin, bin_), value in table.sorted_cells():
        if bin_ is not DurationBin.TOTAL:
            continue
        if origin.kind in (OriginKind.INTRASTATE_DISTRICT, OriginKind.INTRASTATE_OTHER):
            sums["intrastate"] += value
        elif origin.kind is OriginKind.INTERSTATE:
            sums["interstate"] += value
        elif origin.kind is OriginKind.INTERNATIONAL:
            sums["international"] += value
        else:
            sums["unclassifiable"] += value
    grand = sum(sums.values())
    if grand <= 0:
        raise PreconditionError("table has no migrants")
    return {k: v / grand for k, v in sums.items()}


DURATION_GROUPS = ("lt1", "1_20", "gt20", "not_stated")


def duration_shares(table: MigrationTable) -> dict[str, float]:
    """Share per duration group: <1yr, 1-20yr (bins 2-4), >20yr, not stated."""
    require_totals(table)
    sums = dict.fromkeys(DURATION_GROUPS, 0.0)
    for (_, _, bin_), value in table.sorted_cells():
        if bin_ is DurationBin.UNDER_1:
            sums["lt1"] += value
        elif bin_ in (DurationBin.Y1_4, DurationBin.Y5_9, DurationBin.Y10_19):
            sums["1_20"] += value
        elif bin_ is DurationBin.Y20_PLUS:
            sums["gt20"] += value
        elif bin_ is DurationBin.NOT_STATED:
            sums["not_stated"] += value
    grand = sum(sums.values())
    if grand <= 0:
        raise PreconditionError("table has no migrants")
    return {k: v / grand for k, v in sums.items()}


# -- integer export ---------------------------------------------------------------


def largest_remainder_round(values: Iterable[float], target: int) -> list[int]:
    """Integerize non-negative values so they sum exactly to ``target``.

    Floors every value, then hands the remaining units to the largest
    fractional parts (ties broken by position, so the result is
    deterministic).
    """
    values = list(values)
    floors = [math.floor(v) for v in values]
    deficit = target - sum(floors)
    if deficit < 0 or deficit > len(values):
        raise ValueError(
            f"target {target} unreachable from values summing to {sum(values)!r}"
        )
    order = sorted(range(len(values)), key=lambda i: (floors[i] - values[i], i))
    for i in order[:deficit]:
        floors[i] += 1
    return floors


def integerize_table(table: MigrationTable) -> MigrationTable:
    """Largest-remainder rounding per destination; TOTAL cells recomputed.

    Each destination's part cells are rounded so their sum equals the
    destination's (nearest-integer) total inflow exactly, preserving column
    sums through export.
    """
    counts: dict[CellKey, float] = {}
    for dest in table.destinations:
        part_keys = [
            key
            for key, _ in table.sorted_cells()
            if key[0] == dest and key[2] is not DurationBin.TOTAL
        ]
        part_values = [table.counts[k] for k in part_keys]
        target = round(sum(part_values))
        rounded = largest_remainder_round(part_values, target)
        for key, value in zip(part_keys, rounded):
            counts[key] = float(value)
        for origin in table.origins(dest):
            total_key = (dest, origin, DurationBin.TOTAL)
            if total_key in table.counts:
                counts[total_key] = float(
                    sum(
                        counts.get((dest, origin, b), 0.0)
                        for b in PART_BINS
                    )
                )
    return table.with_counts(counts)
