"""Conservation-preserving reallocation of unknown-mass rows.

Two independent corrections:

* unclassifiable-origin mass is folded back into the classified origin rows
  of the same destination, proportionally to their observed flows, so that
  per-destination inflow totals are unchanged;
* duration-not-stated mass is split across the five stated bins of the same
  row with a front-loaded weight vector (recent bins absorb more), keeping
  every row total unchanged.

Both operations are pure and idempotent: a second pass moves zero mass.
Per-destination sums are accumulated in canonical origin order so results do
not depend on any execution schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConservationError, EmptyDestination, InvalidLambda
from .model import (
    PART_BINS,
    STATED_BINS,
    CellKey,
    DurationBin,
    MigrationTable,
    OriginKind,
    OriginRef,
)

#: Front-loaded duration weights used when no explicit decay is requested:
#: w1+w2+w3 > 0.8, monotone nonincreasing, long-duration tail kept positive.
FIXED_WEIGHTS: tuple[float, ...] = (0.35, 0.30, 0.20, 0.10, 0.05)

WEIGHT_MODES = ("fixed", "exp")


@dataclass(frozen=True)
class WeightVector:
    """Redistribution weights over the five stated duration bins."""

    w: tuple[float, float, float, float, float]
    decay: float
    mode: str

    def __post_init__(self):
        if len(self.w) != len(STATED_BINS):
            raise ValueError("weight vector must cover the five stated bins")
        if abs(math.fsum(self.w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {math.fsum(self.w)!r}")
        if any(a < b - 1e-15 for a, b in zip(self.w, self.w[1:])):
            raise ValueError("weights must be monotone nonincreasing")
        if self.w[-1] <= 0:
            raise ValueError("long-duration tail weight must stay positive")


def build_weight_vector(decay: float = 0.4, mode: str = "fixed") -> WeightVector:
    """Build the bin-weight vector.

    ``fixed`` returns the front-loaded default (ignoring ``decay``); ``exp``
    normalizes exp(-decay*(b-1)) over the stated bins, which is uniform at
    decay 0.
    """
    if decay < 0:
        raise InvalidLambda(decay)
    if mode == "fixed":
        return WeightVector(w=FIXED_WEIGHTS, decay=decay, mode=mode)
    if mode == "exp":
        raw = [math.exp(-decay * (int(b) - 1)) for b in STATED_BINS]
        norm = math.fsum(raw)
        return WeightVector(w=tuple(v / norm for v in raw), decay=decay, mode=mode)
    raise ValueError(f"unknown weight mode {mode!r}")


def _classified(table: MigrationTable, dest: str) -> list[OriginRef]:
    return [o for o in table.origins(dest) if o.kind is not OriginKind.UNCLASSIFIABLE]


def redistribute_unclassifiable(table: MigrationTable) -> MigrationTable:
    """Fold unclassifiable-origin mass into the classified rows, per bin.

    Each duration bin of the unclassifiable row is spread proportionally to
    the same bin's classified distribution at that destination; a bin with no
    classified mass falls back to the row-total distribution. Unclassifiable
    rows are zeroed; per-destination inflow totals are unchanged.
    """
    counts = dict(table.counts)
    unc = OriginRef(OriginKind.UNCLASSIFIABLE)
    for dest in table.destinations:
        u_parts = {b: table.get(dest, unc, b) for b in PART_BINS}
        u_total = sum(u_parts[b] for b in PART_BINS)
        if u_total == 0.0:
            continue
        classified = _classified(table, dest)
        row_totals = {o: table.pair_total(dest, o) for o in classified}
        denom_total = sum(row_totals[o] for o in classified)
        if denom_total <= 0.0:
            raise EmptyDestination(dest)
        touched: set[OriginRef] = set()
        for b in PART_BINS:
            u_b = u_parts[b]
            if u_b == 0.0:
                continue
            denom_b = sum(table.get(dest, o, b) for o in classified)
            if denom_b > 0.0:
                for o in classified:
                    m = table.get(dest, o, b)
                    if m > 0.0:
                        counts[(dest, o, b)] = m + u_b * (m / denom_b)
                        touched.add(o)
            else:
                for o in classified:
                    share = row_totals[o] / denom_total
                    if share > 0.0:
                        counts[(dest, o, b)] = table.get(dest, o, b) + u_b * share
                        touched.add(o)
        for b in PART_BINS + (DurationBin.TOTAL,):
            key = (dest, unc, b)
            if key in counts:
                counts[key] = 0.0
        for o in sorted(touched, key=lambda o: o.sort_key):
            if (dest, o, DurationBin.TOTAL) in counts:
                counts[(dest, o, DurationBin.TOTAL)] = sum(
                    counts.get((dest, o, b), 0.0) for b in PART_BINS
                )
    return table.with_counts(counts)


def redistribute_duration(table: MigrationTable, weights: WeightVector) -> MigrationTable:
    """Move each row's not-stated mass into its stated bins per the weights.

    Applied independently per (destination, origin) row, which sums back to
    the per-destination statement while also preserving the origin marginal.
    Row totals are untouched: the stated bins gain exactly what not-stated
    loses.
    """
    counts = dict(table.counts)
    for dest in table.destinations:
        for origin in table.origins(dest):
            ns = table.get(dest, origin, DurationBin.NOT_STATED)
            if ns == 0.0:
                continue
            for b, w in zip(STATED_BINS, weights.w):
                counts[(dest, origin, b)] = table.get(dest, origin, b) + w * ns
            counts[(dest, origin, DurationBin.NOT_STATED)] = 0.0
    return table.with_counts(counts)


@dataclass(frozen=True)
class ConservationResult:
    level: str
    passed: bool
    grand_residual: float
    residuals: dict[str, float]  # per destination (relative), empty for grand

    def raise_if_failed(self) -> None:
        if not self.passed:
            worst = max(self.residuals.values(), default=self.grand_residual)
            raise ConservationError(
                f"conservation violated at level {self.level!r}: worst relative "
                f"residual {worst!r}"
            )


def _relative(after: float, before: float) -> float:
    return abs(after - before) / max(1.0, abs(before))


def conservation_check(
    before: MigrationTable,
    after: MigrationTable,
    level: str = "grand",
    relative_tolerance: float = 1e-6,
) -> ConservationResult:
    """Compare migrant totals before/after a transformation.

    Totals are summed over the part bins (stated + not stated), the ground
    truth that TOTAL cells mirror. ``level`` is "grand" or "per-destination";
    use a zero tolerance for post-rounding exports.
    """
    if level not in ("grand", "per-destination"):
        raise ValueError(f"unknown level {level!r}")
    grand_residual = _relative(after.part_grand_total(), before.part_grand_total())
    residuals: dict[str, float] = {}
    passed = grand_residual <= relative_tolerance
    if level == "per-destination":
        for dest in sorted(set(before.destinations) | set(after.destinations)):
            residuals[dest] = _relative(after.part_inflow(dest), before.part_inflow(dest))
            if residuals[dest] > relative_tolerance:
                passed = False
    return ConservationResult(
        level=level, passed=passed, grand_residual=grand_residual, residuals=residuals
    )
