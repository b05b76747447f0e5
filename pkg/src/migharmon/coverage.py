"""Impute a destination wholly absent from the earliest decade.

The missing in-flow column is backcast from the next decade's column using
per-origin transfer ratios: for each origin the ratio of its total
interstate out-flow between consecutive decades is computed twice (early and
late pair) and the geometric mean of the two is used as the smoothed
backward ratio. Out-flow sums range over the common destination set of all
three decades, excluding the missing destination, so numerator and
denominator are always comparable.

Ratios are interstate-only: pseudo-origin rows (intrastate, international)
are never used and never imputed.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO

from .errors import AlreadyPresent, PreconditionError
from .model import (
    PART_BINS,
    STATED_BINS,
    CellKey,
    DurationBin,
    MigrationTable,
    OriginKind,
    OriginRef,
)
from .registry import EntityRegistry

logger = logging.getLogger(__name__)

DEFAULT_CLAMP = (0.1, 10.0)


@dataclass(frozen=True)
class TransferRatio:
    origin: str
    r_early: float
    r_late: float
    smoothed: float
    clamped: bool = False


@dataclass(frozen=True)
class TransferRatioSet:
    """Per-origin smoothed backward ratios for one missing destination."""

    target_decade: str
    missing_destination: str
    ratios: dict[str, TransferRatio]
    excluded: dict[str, str] = field(default_factory=dict)  # origin -> reason

    def sorted_ratios(self) -> list[TransferRatio]:
        return [self.ratios[o] for o in sorted(self.ratios)]


def _interstate_outflow(table: MigrationTable, state: str, dests: list[str]) -> float:
    origin = OriginRef.interstate(state)
    return sum(table.pair_total(dest, origin) for dest in dests)


def compute_transfer_ratios(
    f_t0: MigrationTable,
    f_t1: MigrationTable,
    f_t2: MigrationTable,
    missing: str,
    registry: EntityRegistry | None = None,
    clamp: tuple[float, float] = DEFAULT_CLAMP,
) -> TransferRatioSet:
    """Per-origin early/late out-migration ratios and their geometric mean.

    Origins missing from a decade (or, with a registry, not valid in all
    three decades) are excluded with a logged reason, as are origins with a
    zero out-flow sum in any reference decade: the missing destination simply
    receives zero from them. Smoothed ratios are clamped into ``clamp`` to
    guard against degenerate denominators.
    """
    if missing in f_t0.destinations:
        raise AlreadyPresent(missing)
    if missing not in f_t1.destinations:
        raise PreconditionError(
            f"destination {missing!r} absent from decade {f_t1.decade!r}; nothing to backcast"
        )
    if missing not in f_t2.destinations:
        logger.warning(
            "destination %r also absent from decade %r", missing, f_t2.decade
        )
    lo, hi = clamp
    if not (0 < lo <= hi):
        raise PreconditionError(f"bad clamp bounds {clamp!r}")

    common_dests = sorted(
        (set(f_t0.destinations) & set(f_t1.destinations) & set(f_t2.destinations))
        - {missing}
    )
    tables = (f_t0, f_t1, f_t2)
    universe = sorted(
        set(f_t0.interstate_origins())
        | set(f_t1.interstate_origins())
        | set(f_t2.interstate_origins())
    )
    ratios: dict[str, TransferRatio] = {}
    excluded: dict[str, str] = {}
    for origin in universe:
        missing_from = [t.decade for t in tables if origin not in t.interstate_origins()]
        if missing_from:
            excluded[origin] = f"missing from decade {missing_from[0]}"
            logger.warning("origin %r excluded: %s", origin, excluded[origin])
            continue
        if registry is not None:
            entity = registry.entity(origin)
            invalid = [t.decade for t in tables if t.decade not in entity.valid_decades]
            if invalid:
                excluded[origin] = f"not valid in decade {invalid[0]}"
                logger.warning("origin %r excluded: %s", origin, excluded[origin])
                continue
        s0, s1, s2 = (_interstate_outflow(t, origin, common_dests) for t in tables)
        zero_in = [t.decade for t, s in zip(tables, (s0, s1, s2)) if s == 0.0]
        if zero_in:
            excluded[origin] = f"zero out-flow in decade {zero_in[0]}"
            logger.warning(
                "origin %r excluded (%s); %r receives zero from it",
                origin,
                excluded[origin],
                missing,
            )
            continue
        r_early = s0 / s1
        r_late = s1 / s2
        smoothed = math.sqrt(r_early * r_late)
        clamped = False
        if smoothed < lo or smoothed > hi:
            logger.warning(
                "smoothed ratio %.4g for origin %r clamped into [%g, %g]",
                smoothed,
                origin,
                lo,
                hi,
            )
            smoothed = min(max(smoothed, lo), hi)
            clamped = True
        ratios[origin] = TransferRatio(
            origin=origin,
            r_early=r_early,
            r_late=r_late,
            smoothed=smoothed,
            clamped=clamped,
        )
    return TransferRatioSet(
        target_decade=f_t0.decade,
        missing_destination=missing,
        ratios=ratios,
        excluded=excluded,
    )


def _carryover_flows(
    f_t0: MigrationTable,
    f_t1: MigrationTable,
    ratios: TransferRatioSet,
    missing: str,
    registry: EntityRegistry | None,
) -> dict[str, list[OriginRef]]:
    """Origin rows of t1 whose flows into the missing destination are carried
    to a valid parent origin (states that did not exist in t0)."""
    carried: dict[str, list[OriginRef]] = {}
    for state in f_t1.interstate_origins():
        if state in ratios.ratios:
            continue
        ref = OriginRef.interstate(state)
        if f_t1.pair_total(missing, ref) == 0.0:
            continue
        if registry is None:
            logger.warning(
                "origin %r has t1 flow into %r but no ratio; skipped", state, missing
            )
            continue
        entity = registry.entity(state)
        if f_t0.decade in entity.valid_decades or entity.parent_id is None:
            logger.warning(
                "origin %r has t1 flow into %r but no ratio or parent; skipped",
                state,
                missing,
            )
            continue
        if entity.parent_id not in ratios.ratios:
            logger.warning(
                "origin %r: parent %r has no ratio; skipped", state, entity.parent_id
            )
            continue
        carried.setdefault(entity.parent_id, []).append(ref)
    return carried


def _bin_shares(parts: dict[DurationBin, float]) -> dict[DurationBin, float] | None:
    total = sum(parts[b] for b in PART_BINS)
    if total <= 0.0:
        return None
    return {b: parts[b] / total for b in PART_BINS}


def impute_missing_destination(
    f_t0: MigrationTable,
    f_t1: MigrationTable,
    ratios: TransferRatioSet,
    missing: str,
    registry: EntityRegistry | None = None,
    ratio_kind: str = "smoothed",
) -> MigrationTable:
    """Extend f_t0 with the missing destination column backcast from f_t1.

    Each origin's imputed total is its t1 flow into the missing destination
    times its backward ratio; the total is split into duration bins
    proportionally to the origin's t1 row distribution, falling back to the
    destination's aggregate t1 distribution when the row has no stated-bin
    mass. Nothing outside the new column is touched. ``ratio_kind`` selects
    ``smoothed`` (default) or the single early ratio ``r_early`` (baseline).
    """
    if missing in f_t0.destinations:
        raise AlreadyPresent(missing)
    if ratios.missing_destination != missing:
        raise PreconditionError(
            f"ratio set targets {ratios.missing_destination!r}, not {missing!r}"
        )
    if ratio_kind not in ("smoothed", "r_early"):
        raise ValueError(f"unknown ratio kind {ratio_kind!r}")

    aggregate_parts = {
        b: sum(
            f_t1.get(missing, OriginRef.interstate(s), b)
            for s in f_t1.interstate_origins()
        )
        for b in PART_BINS
    }
    aggregate_shares = _bin_shares(aggregate_parts)
    carried = _carryover_flows(f_t0, f_t1, ratios, missing, registry)

    counts: dict[CellKey, float] = dict(f_t0.counts)
    for ratio in ratios.sorted_ratios():
        if ratio.origin == missing:
            continue
        origin_ref = OriginRef.interstate(ratio.origin)
        rows = [origin_ref] + carried.get(ratio.origin, [])
        base = sum(f_t1.pair_total(missing, ref) for ref in rows)
        factor = ratio.smoothed if ratio_kind == "smoothed" else ratio.r_early
        imputed_total = base * factor
        counts[(missing, origin_ref, DurationBin.TOTAL)] = imputed_total
        if imputed_total <= 0.0:
            continue
        parts = {
            b: sum(f_t1.get(missing, ref, b) for ref in rows) for b in PART_BINS
        }
        stated_mass = sum(parts[b] for b in STATED_BINS)
        shares = _bin_shares(parts) if stated_mass > 0.0 else aggregate_shares
        if shares is None:
            shares = {b: 1.0 / len(STATED_BINS) for b in STATED_BINS}
            shares[DurationBin.NOT_STATED] = 0.0
        for b in PART_BINS:
            if shares[b] > 0.0:
                counts[(missing, origin_ref, b)] = imputed_total * shares[b]
    return f_t0.with_counts(counts)


@dataclass(frozen=True)
class ImputationReport:
    missing_destination: str
    shares_by_decade: dict[str, float]  # interstate inflow share of the destination
    imputed_counts: dict[str, float]  # per-origin imputed totals
    density_vectors: dict[str, tuple[float, ...]]  # sorted per-origin inflows


def interstate_inflow_share(table: MigrationTable, destination: str) -> float:
    """Destination's share of the decade's total interstate in-migrants."""
    total = sum(
        table.inflow(d, kinds=(OriginKind.INTERSTATE,)) for d in table.destinations
    )
    if total <= 0.0:
        return 0.0
    return table.inflow(destination, kinds=(OriginKind.INTERSTATE,)) / total


def _density_vector(table: MigrationTable, destination: str) -> tuple[float, ...]:
    values = [
        table.pair_total(destination, OriginRef.interstate(s))
        for s in table.interstate_origins()
        if any(
            (destination, OriginRef.interstate(s), b) in table.counts
            for b in DurationBin
        )
    ]
    return tuple(sorted(values))


def imputation_report(
    before: MigrationTable,
    after: MigrationTable,
    missing: str,
    reference_tables: tuple[MigrationTable, ...] = (),
) -> ImputationReport:
    """Summarize an imputation: shares per decade, per-origin imputed counts,
    and the sorted per-origin vectors used for distribution plots."""
    if missing in before.destinations:
        raise PreconditionError(f"{missing!r} was already covered before imputation")
    imputed = {
        origin.state: after.pair_total(missing, origin)
        for d, origin, _ in after.counts
        if d == missing and origin.kind is OriginKind.INTERSTATE
    }
    shares = {after.decade: interstate_inflow_share(after, missing)}
    density = {after.decade: _density_vector(after, missing)}
    for table in reference_tables:
        shares[table.decade] = interstate_inflow_share(table, missing)
        density[table.decade] = _density_vector(table, missing)
    return ImputationReport(
        missing_destination=missing,
        shares_by_decade=dict(sorted(shares.items())),
        imputed_counts=dict(sorted(imputed.items())),
        density_vectors=dict(sorted(density.items())),
    )


def write_ratio_report(
    ratios: TransferRatioSet,
    report: ImputationReport,
    stream: IO[str],
    registry: EntityRegistry | None = None,
) -> None:
    """CSV of per-origin ratios and imputed counts, plus a summary row."""

    def label(token: str) -> str:
        return registry.name_of(token) if registry is not None else token

    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["origin", "r_early", "r_late", "smoothed", "imputed_count"])
    total = 0.0
    for ratio in ratios.sorted_ratios():
        count = report.imputed_counts.get(ratio.origin, 0.0)
        total += count
        writer.writerow(
            [
                label(ratio.origin),
                repr(ratio.r_early),
                repr(ratio.r_late),
                repr(ratio.smoothed),
                repr(count),
            ]
        )
    for origin, reason in sorted(ratios.excluded.items()):
        writer.writerow([label(origin), "", "", f"excluded: {reason}", "0"])
    share = report.shares_by_decade.get(ratios.target_decade, 0.0)
    writer.writerow(["__summary__", "", "", f"share={share!r}", repr(total)])
