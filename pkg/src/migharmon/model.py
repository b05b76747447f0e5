"""Core in-memory model for one decade of origin-destination migration stocks.

A :class:`MigrationTable` maps ``(destination, origin, bin)`` cells to
non-negative real counts. Destinations are canonical entity tokens; origins
are :class:`OriginRef` values that distinguish interstate flows (carrying the
origin entity) from the aggregate pseudo-origins (intrastate, international,
unclassifiable). Counts are kept as floats because redistribution produces
fractional values mid-pipeline; integerization happens only at export.

Tables are treated as immutable: every transformation returns a new table.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator


class DurationBin(enum.IntEnum):
    """Duration-of-stay bins; 1..5 are the stated bins, in order."""

    UNDER_1 = 1
    Y1_4 = 2
    Y5_9 = 3
    Y10_19 = 4
    Y20_PLUS = 5
    NOT_STATED = 6
    TOTAL = 7


STATED_BINS: tuple[DurationBin, ...] = (
    DurationBin.UNDER_1,
    DurationBin.Y1_4,
    DurationBin.Y5_9,
    DurationBin.Y10_19,
    DurationBin.Y20_PLUS,
)

#: Stated bins plus NOT_STATED: the independently stored parts of a row.
PART_BINS: tuple[DurationBin, ...] = STATED_BINS + (DurationBin.NOT_STATED,)

BIN_TOKENS: dict[DurationBin, str] = {
    DurationBin.UNDER_1: "lt1",
    DurationBin.Y1_4: "1-4",
    DurationBin.Y5_9: "5-9",
    DurationBin.Y10_19: "10-19",
    DurationBin.Y20_PLUS: "20plus",
    DurationBin.NOT_STATED: "not_stated",
    DurationBin.TOTAL: "total",
}

TOKEN_TO_BIN: dict[str, DurationBin] = {v: k for k, v in BIN_TOKENS.items()}


class OriginKind(enum.Enum):
    INTERSTATE = "interstate"
    INTRASTATE_DISTRICT = "intrastate_district"
    INTRASTATE_OTHER = "intrastate_other"
    INTERNATIONAL = "international"
    UNCLASSIFIABLE = "unclassifiable"


#: Category label used in share reports, per origin kind.
CATEGORY_OF_KIND: dict[OriginKind, str] = {
    OriginKind.INTERSTATE: "interstate",
    OriginKind.INTRASTATE_DISTRICT: "intrastate",
    OriginKind.INTRASTATE_OTHER: "intrastate",
    OriginKind.INTERNATIONAL: "international",
    OriginKind.UNCLASSIFIABLE: "unclassifiable",
}


@dataclass(frozen=True)
class OriginRef:
    """A place-of-last-residence reference.

    Only interstate origins carry an entity token; the other kinds are
    single aggregate pseudo-origins per destination.
    """

    kind: OriginKind
    state: str | None = None

    def __post_init__(self):
        if self.kind is OriginKind.INTERSTATE:
            if not self.state:
                raise ValueError("interstate origin requires a state token")
        elif self.state is not None:
            raise ValueError(f"{self.kind.value} origin must not carry a state")

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.kind.value, self.state or "")

    @staticmethod
    def interstate(state: str) -> "OriginRef":
        return OriginRef(OriginKind.INTERSTATE, state)


INTRASTATE_DISTRICT = OriginRef(OriginKind.INTRASTATE_DISTRICT)
INTRASTATE_OTHER = OriginRef(OriginKind.INTRASTATE_OTHER)
INTERNATIONAL = OriginRef(OriginKind.INTERNATIONAL)
UNCLASSIFIABLE = OriginRef(OriginKind.UNCLASSIFIABLE)

CellKey = tuple[str, OriginRef, DurationBin]


def cell_sort_key(key: CellKey) -> tuple:
    dest, origin, bin_ = key
    return (dest, origin.sort_key, int(bin_))


@dataclass(frozen=True)
class MigrationTable:
    """One decade's flows: count per (destination, origin, duration bin)."""

    decade: str
    counts: dict[CellKey, float] = field(default_factory=dict)

    # -- basic accessors -----------------------------------------------------

    def get(self, destination: str, origin: OriginRef, bin_: DurationBin) -> float:
        return self.counts.get((destination, origin, bin_), 0.0)

    @property
    def destinations(self) -> tuple[str, ...]:
        return tuple(sorted({dest for dest, _, _ in self.counts}))

    def origins(self, destination: str) -> tuple[OriginRef, ...]:
        seen = {o for d, o, _ in self.counts if d == destination}
        return tuple(sorted(seen, key=lambda o: o.sort_key))

    def interstate_origins(self) -> tuple[str, ...]:
        states = {
            o.state for _, o, _ in self.counts if o.kind is OriginKind.INTERSTATE
        }
        return tuple(sorted(states))

    def sorted_cells(self) -> Iterator[tuple[CellKey, float]]:
        for key in sorted(self.counts, key=cell_sort_key):
            yield key, self.counts[key]

    @property
    def has_totals(self) -> bool:
        """True when every (destination, origin) row carries a TOTAL cell."""
        rows = {(d, o) for d, o, _ in self.counts}
        with_total = {(d, o) for d, o, b in self.counts if b is DurationBin.TOTAL}
        return rows == with_total

    # -- aggregates ----------------------------------------------------------

    def pair_total(self, destination: str, origin: OriginRef) -> float:
        """Total count of a row: the TOTAL cell if stored, else the part sum."""
        key = (destination, origin, DurationBin.TOTAL)
        if key in self.counts:
            return self.counts[key]
        return self.row_part_sum(destination, origin)

    def row_part_sum(self, destination: str, origin: OriginRef) -> float:
        return sum(self.get(destination, origin, b) for b in PART_BINS)

    def inflow(
        self,
        destination: str,
        kinds: Iterable[OriginKind] | None = None,
        bin_: DurationBin = DurationBin.TOTAL,
    ) -> float:
        """Sum over origin rows of one destination, in canonical origin order."""
        wanted = None if kinds is None else set(kinds)
        total = 0.0
        for origin in self.origins(destination):
            if wanted is not None and origin.kind not in wanted:
                continue
            if bin_ is DurationBin.TOTAL:
                total += self.pair_total(destination, origin)
            else:
                total += self.get(destination, origin, bin_)
        return total

    def outflow(self, state: str, bin_: DurationBin = DurationBin.TOTAL) -> float:
        """Interstate out-migrants of one origin entity across destinations."""
        origin = OriginRef.interstate(state)
        total = 0.0
        for dest in self.destinations:
            if bin_ is DurationBin.TOTAL:
                if any((dest, origin, b) in self.counts for b in DurationBin):
                    total += self.pair_total(dest, origin)
            else:
                total += self.get(dest, origin, bin_)
        return total

    def grand_total(self, kinds: Iterable[OriginKind] | None = None) -> float:
        return sum(self.inflow(dest, kinds=kinds) for dest in self.destinations)

    def part_grand_total(self) -> float:
        """Grand total over the stored parts (stated bins + not-stated)."""
        total = 0.0
        for key in sorted(self.counts, key=cell_sort_key):
            if key[2] is not DurationBin.TOTAL:
                total += self.counts[key]
        return total

    def part_inflow(self, destination: str) -> float:
        total = 0.0
        for key in sorted(self.counts, key=cell_sort_key):
            if key[0] == destination and key[2] is not DurationBin.TOTAL:
                total += self.counts[key]
        return total

    # -- construction --------------------------------------------------------

    def with_counts(self, counts: dict[CellKey, float]) -> "MigrationTable":
        return replace(self, counts=counts)

    def validate(self) -> None:
        """Check structural invariants; raises ValueError on violation."""
        for (dest, origin, _), value in self.counts.items():
            if value < 0:
                raise ValueError(f"negative count at {(dest, origin)!r}")
            if origin.kind is OriginKind.INTERSTATE and origin.state == dest:
                raise ValueError(f"diagonal interstate flow at {dest!r}")
