"""Shared fixtures: hand-built tables, a toy registry, and real-data discovery.

Real census tables are optional. Point MIGHARMON_DATA at a directory holding
canonical long-format tables named 1991.csv, 2001.csv and 2011.csv to enable
the reproduction tests; without it those tests skip and the synthetic
fallbacks still run.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

from migharmon.ingest import parse_table, synthesize_totals
from migharmon.model import DurationBin, MigrationTable, OriginRef
from migharmon.registry import Entity, EntityRegistry, IndexMap, default_registry

REAL_DATA_ENV = "MIGHARMON_DATA"
DECADES = ("1991", "2001", "2011")

A = OriginRef.interstate("A")
B = OriginRef.interstate("B")


def build_table(decade: str, rows) -> MigrationTable:
    """rows: iterable of (dest, origin_ref, {DurationBin: count})."""
    counts = {}
    for dest, origin, bins in rows:
        for b, v in bins.items():
            counts[(dest, origin, b)] = float(v)
    return MigrationTable(decade=decade, counts=counts)


def toy_registry(ids=("A", "B", "C", "P", "Q", "X"), decades=DECADES) -> EntityRegistry:
    entities = [
        Entity(
            canonical_id=i,
            canonical_name=f"State {i}",
            aliases=frozenset(),
            valid_decades=frozenset(decades),
        )
        for i in ids
    ]
    return EntityRegistry(entities)


@pytest.fixture
def registry_toy() -> EntityRegistry:
    return toy_registry()


@pytest.fixture(scope="session")
def registry_india() -> EntityRegistry:
    return default_registry()


# -- the frozen three-decade example used across coverage tests ----------------

LT1 = DurationBin.UNDER_1
Y14 = DurationBin.Y1_4
Y59 = DurationBin.Y5_9
NS = DurationBin.NOT_STATED


def tiny_t0() -> MigrationTable:
    return build_table(
        "1991",
        [
            ("P", A, {LT1: 60}),
            ("Q", A, {LT1: 40}),
            ("P", B, {LT1: 30}),
            ("Q", B, {LT1: 20}),
        ],
    )


def tiny_t1() -> MigrationTable:
    return build_table(
        "2001",
        [
            ("P", A, {LT1: 50}),
            ("Q", A, {LT1: 30}),
            ("X", A, {LT1: 12, Y14: 6, Y59: 6}),
            ("P", B, {LT1: 40}),
            ("Q", B, {LT1: 24}),
            ("X", B, {NS: 8}),
        ],
    )


def tiny_t2() -> MigrationTable:
    return build_table(
        "2011",
        [
            ("P", A, {LT1: 40}),
            ("Q", A, {LT1: 24}),
            ("X", A, {LT1: 10}),
            ("P", B, {LT1: 60}),
            ("Q", B, {LT1: 40}),
            ("X", B, {LT1: 5}),
        ],
    )


@pytest.fixture
def tiny_decades() -> tuple[MigrationTable, MigrationTable, MigrationTable]:
    return tiny_t0(), tiny_t1(), tiny_t2()


@pytest.fixture
def tiny_tables() -> dict[str, MigrationTable]:
    return {"1991": tiny_t0(), "2001": tiny_t1(), "2011": tiny_t2()}


# -- optional real data ---------------------------------------------------------


def real_data_dir() -> Path | None:
    raw = os.environ.get(REAL_DATA_ENV)
    if not raw:
        return None
    path = Path(raw)
    if all((path / f"{d}.csv").is_file() for d in DECADES):
        return path
    return None


requires_real_data = pytest.mark.skipif(
    real_data_dir() is None,
    reason=f"set {REAL_DATA_ENV} to a directory with 1991.csv/2001.csv/2011.csv",
)


@pytest.fixture(scope="session")
def real_tables(registry_india) -> dict[str, MigrationTable]:
    directory = real_data_dir()
    if directory is None:
        pytest.skip(f"{REAL_DATA_ENV} not set")
    return {
        d: synthesize_totals(
            parse_table(directory / f"{d}.csv", registry_india, decade=d),
            tolerance=1.0,
        )
        for d in DECADES
    }
