"""Distribution summaries of interstate migration tables.

Statistics are computed over per-destination interstate in-flows (one value
per destination) plus the single largest per-origin out-flow. Quartiles use
linear interpolation, matching ``numpy.percentile`` defaults; the standard
deviation is the sample one (ddof=1), defined as 0.0 for a single value.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields
from typing import IO, Iterable

import numpy as np

from .errors import AxisMismatch
from .model import MigrationTable, OriginKind

_STAT_FIELDS = (
    "total",
    "mean",
    "std",
    "min_inflow",
    "max_inflow",
    "max_outflow",
    "q1",
    "q2",
    "q3",
)


@dataclass(frozen=True)
class DistributionSummary:
    decade: str
    n: int
    total: float
    mean: float
    std: float
    min_inflow: float
    max_inflow: float
    max_outflow: float
    q1: float
    q2: float
    q3: float

    def scaled(self, factor: float) -> dict[str, float]:
        """Statistics divided by ``factor`` (e.g. 1e6 for reporting in millions)."""
        return {name: getattr(self, name) / factor for name in _STAT_FIELDS}

    def as_dict(self) -> dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def inflow_vector(table: MigrationTable) -> dict[str, float]:
    """Interstate in-flow per destination, all destinations included."""
    return {
        dest: table.inflow(dest, kinds=(OriginKind.INTERSTATE,))
        for dest in table.destinations
    }


def outflow_vector(table: MigrationTable) -> dict[str, float]:
    """Interstate out-flow per origin state."""
    return {state: table.outflow(state) for state in table.interstate_origins()}


def summarize_distribution(table: MigrationTable) -> DistributionSummary:
    inflows = np.array(list(inflow_vector(table).values()), dtype=float)
    if inflows.size == 0:
        raise AxisMismatch("table has no destinations to summarize")
    outflows = outflow_vector(table)
    q1, q2, q3 = np.percentile(inflows, [25.0, 50.0, 75.0])
    std = float(np.std(inflows, ddof=1)) if inflows.size > 1 else 0.0
    return DistributionSummary(
        decade=table.decade,
        n=int(inflows.size),
        total=float(inflows.sum()),
        mean=float(inflows.mean()),
        std=std,
        min_inflow=float(inflows.min()),
        max_inflow=float(inflows.max()),
        max_outflow=max(outflows.values()) if outflows else 0.0,
        q1=float(q1),
        q2=float(q2),
        q3=float(q3),
    )


def compare_summaries(
    before: DistributionSummary, after: DistributionSummary
) -> dict[str, tuple[float, float, float]]:
    """Per-statistic (before, after, delta) triples.

    Both summaries must cover the same destination axis; comparing tables
    with different destination counts mixes incomparable populations.
    """
    if before.n != after.n:
        raise AxisMismatch(
            f"destination axes differ: {before.n} vs {after.n} destinations"
        )
    return {
        name: (
            getattr(before, name),
            getattr(after, name),
            getattr(after, name) - getattr(before, name),
        )
        for name in _STAT_FIELDS
    }


def write_summary(summaries: Iterable[DistributionSummary], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    names = [f.name for f in fields(DistributionSummary)]
    writer.writerow(names)
    for summary in summaries:
        row = summary.as_dict()
        writer.writerow(
            [row["decade"], row["n"]] + [repr(row[name]) for name in _STAT_FIELDS]
        )


def export_plot_data(tables: Iterable[MigrationTable], stream: IO[str]) -> None:
    """Long-format CSV of per-entity in/out flows, one row per decade/entity."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["decade", "entity", "interstate_inflow", "interstate_outflow"])
    for table in tables:
        inflows = inflow_vector(table)
        outflows = outflow_vector(table)
        for entity in sorted(set(inflows) | set(outflows)):
            writer.writerow(
                [
                    table.decade,
                    entity,
                    repr(inflows.get(entity, 0.0)),
                    repr(outflows.get(entity, 0.0)),
                ]
            )
