"""Synthetic three-decade migration corpora with known ground truth.

The generator draws a base interstate flow matrix, evolves it across decades
with per-origin growth (optionally noisy), splits every flow into duration
bins along a decaying profile, and then injects the three defects the
harmonization pipeline is built to repair:

  a. the full in-flow column of one destination is removed from the earliest
     decade,
  b. a fraction of every classified row is moved into the unclassifiable
     origin row of its destination,
  c. a fraction of every stated duration bin is moved into the not-stated bin
     of its row.

With zero transition noise and defect rates applied uniformly, the pipeline
recovers the truth exactly (up to float arithmetic), which the test suite
exploits. A truth sidecar is kept alongside the biased tables so recovery
can be scored.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InvalidSpec
from .ingest import integerize_table, parse_table, serialize_table, synthesize_totals
from .model import (
    PART_BINS,
    STATED_BINS,
    INTERNATIONAL,
    INTRASTATE_DISTRICT,
    INTRASTATE_OTHER,
    UNCLASSIFIABLE,
    CellKey,
    DurationBin,
    MigrationTable,
    OriginKind,
    OriginRef,
)
from .redistribute import WEIGHT_MODES, build_weight_vector
from .registry import Entity, EntityRegistry, IndexMap

MAX_UNCLASSIFIABLE_RATE = 0.05
MAX_NOT_STATED_RATE = 0.20


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic corpus. Frozen so a spec hashes stably."""

    seed: int = 0
    n_entities: int = 12
    decades: tuple[str, str, str] = ("1991", "2001", "2011")
    base_scale: float = 20_000.0
    spread: float = 0.8
    growth_range: tuple[float, float] = (0.8, 1.6)
    noise_sigma: float = 0.0
    unclassifiable_rate: float = 0.02
    not_stated_rate: float = 0.10
    bin_decay: float = 0.4
    weight_mode: str = "fixed"
    intrastate_factor: float = 3.0
    international_factor: float = 0.02
    mask_earliest: bool = True
    masked_destination: str | None = None
    n_blocks: int = 0
    block_boost: float = 8.0
    integer_counts: bool = True

    def validate(self) -> None:
        if self.n_entities < 4:
            raise InvalidSpec("need at least 4 entities")
        if len(self.decades) != 3 or len(set(self.decades)) != 3:
            raise InvalidSpec("decades must be 3 distinct labels")
        if self.base_scale <= 0:
            raise InvalidSpec("base_scale must be positive")
        if self.spread < 0 or self.noise_sigma < 0:
            raise InvalidSpec("spread and noise_sigma must be nonnegative")
        lo, hi = self.growth_range
        if not (0 < lo <= hi):
            raise InvalidSpec(f"bad growth range {self.growth_range!r}")
        if not (0 <= self.unclassifiable_rate <= MAX_UNCLASSIFIABLE_RATE):
            raise InvalidSpec(
                f"unclassifiable_rate must lie in [0, {MAX_UNCLASSIFIABLE_RATE}]"
            )
        if not (0 <= self.not_stated_rate <= MAX_NOT_STATED_RATE):
            raise InvalidSpec(
                f"not_stated_rate must lie in [0, {MAX_NOT_STATED_RATE}]"
            )
        if self.weight_mode not in WEIGHT_MODES:
            raise InvalidSpec(f"unknown weight mode {self.weight_mode!r}")
        if self.intrastate_factor < 0 or self.international_factor < 0:
            raise InvalidSpec("pseudo-origin factors must be nonnegative")
        if self.n_blocks < 0 or self.n_blocks > self.n_entities:
            raise InvalidSpec("n_blocks must lie in [0, n_entities]")
        if self.n_blocks == 1:
            raise InvalidSpec("planted structure needs at least 2 blocks")
        if self.n_blocks and self.block_boost <= 0:
            raise InvalidSpec("block_boost must be positive")
        if self.masked_destination is not None:
            if self.masked_destination not in entity_ids(self.n_entities):
                raise InvalidSpec(
                    f"masked_destination {self.masked_destination!r} not generated"
                )
            if not self.mask_earliest:
                raise InvalidSpec("masked_destination given but masking disabled")


def entity_ids(n: int) -> list[str]:
    return [f"S{i:02d}" for i in range(1, n + 1)]


@dataclass(frozen=True)
class SynthResult:
    spec: SynthSpec
    registry: EntityRegistry
    truth: dict[str, MigrationTable]
    observed: dict[str, MigrationTable]
    masked_destination: str | None
    planted_blocks: dict[str, int] | None = None

    @property
    def earliest(self) -> str:
        return self.spec.decades[0]


def _make_registry(spec: SynthSpec, rng: np.random.Generator) -> EntityRegistry:
    ids = entity_ids(spec.n_entities)
    decades = frozenset(spec.decades)
    entities = [
        Entity(
            canonical_id=eid,
            canonical_name=f"State {eid[1:]}",
            aliases=frozenset(),
            valid_decades=decades,
        )
        for eid in ids
    ]
    maps = [IndexMap(spec.decades[0], list(enumerate(ids, start=1)))]
    perm = [ids[int(k)] for k in rng.permutation(spec.n_entities)]
    for decade in spec.decades[1:]:
        maps.append(IndexMap(decade, list(enumerate(perm, start=1))))
    return EntityRegistry(entities, maps)


def _planted_blocks(ids: list[str], n_blocks: int) -> dict[str, int]:
    chunk = math.ceil(len(ids) / n_blocks)
    return {eid: i // chunk for i, eid in enumerate(ids)}


def _split_bins(
    counts: dict[CellKey, float],
    dest: str,
    origin: OriginRef,
    total: float,
    weights: tuple[float, ...],
) -> None:
    for b, w in zip(STATED_BINS, weights):
        counts[(dest, origin, b)] = total * w
    counts[(dest, origin, DurationBin.NOT_STATED)] = 0.0
    counts[(dest, origin, DurationBin.TOTAL)] = total


def _row_totals(
    spec: SynthSpec, rng: np.random.Generator, blocks: dict[str, int] | None
) -> dict[str, dict[tuple[str, OriginRef], float]]:
    """Pair totals per decade: interstate matrix evolved with per-origin
    growth, plus pseudo-origin rows tied to each destination's in-flow."""
    ids = entity_ids(spec.n_entities)
    mu = math.log(spec.base_scale)
    base: dict[tuple[str, str], float] = {}
    for origin in ids:
        for dest in ids:
            if origin == dest:
                continue
            flow = float(rng.lognormal(mean=mu, sigma=spec.spread))
            if blocks is not None and blocks[origin] == blocks[dest]:
                flow *= spec.block_boost
            base[(dest, origin)] = flow
    lo, hi = spec.growth_range
    growth = {origin: float(rng.uniform(lo, hi)) for origin in ids}

    per_decade: dict[str, dict[tuple[str, OriginRef], float]] = {}
    current = dict(base)
    for step, decade in enumerate(spec.decades):
        if step > 0:
            evolved = {}
            for (dest, origin), flow in current.items():
                flow = flow * growth[origin]
                if spec.noise_sigma > 0:
                    flow *= math.exp(float(rng.normal(0.0, spec.noise_sigma)))
                evolved[(dest, origin)] = flow
            current = evolved
        rows: dict[tuple[str, OriginRef], float] = {
            (dest, OriginRef.interstate(origin)): flow
            for (dest, origin), flow in current.items()
        }
        for dest in ids:
            inflow = sum(current[(dest, o)] for o in ids if o != dest)
            intra = inflow * spec.intrastate_factor
            rows[(dest, INTRASTATE_DISTRICT)] = intra * 0.6
            rows[(dest, INTRASTATE_OTHER)] = intra * 0.4
            rows[(dest, INTERNATIONAL)] = inflow * spec.international_factor
        per_decade[decade] = rows
    return per_decade


def _inject_bias(
    spec: SynthSpec, counts: dict[CellKey, float]
) -> dict[CellKey, float]:
    """Move mass into unclassifiable rows and not-stated bins, rate-uniformly."""
    biased = dict(counts)
    if spec.unclassifiable_rate > 0:
        dests = sorted({dest for dest, _, _ in biased})
        for dest in dests:
            pooled = {b: 0.0 for b in PART_BINS}
            for (d, origin, b) in list(biased):
                if d != dest or origin.kind is OriginKind.UNCLASSIFIABLE:
                    continue
                if b not in PART_BINS:
                    continue
                moved = biased[(d, origin, b)] * spec.unclassifiable_rate
                biased[(d, origin, b)] -= moved
                total_key = (d, origin, DurationBin.TOTAL)
                if total_key in biased:
                    biased[total_key] -= moved
                pooled[b] += moved
            for b in PART_BINS:
                biased[(dest, UNCLASSIFIABLE, b)] = pooled[b]
            biased[(dest, UNCLASSIFIABLE, DurationBin.TOTAL)] = sum(pooled.values())
    if spec.not_stated_rate > 0:
        rows = sorted(
            {(dest, origin) for dest, origin, _ in biased},
            key=lambda r: (r[0], r[1].sort_key),
        )
        for dest, origin in rows:
            shifted = 0.0
            for b in STATED_BINS:
                key = (dest, origin, b)
                if key not in biased:
                    continue
                moved = biased[key] * spec.not_stated_rate
                biased[key] -= moved
                shifted += moved
            if shifted > 0:
                ns_key = (dest, origin, DurationBin.NOT_STATED)
                biased[ns_key] = biased.get(ns_key, 0.0) + shifted
    return biased


def generate(spec: SynthSpec) -> SynthResult:
    """Build truth and observed tables for every decade listed in ``spec``."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    registry = _make_registry(spec, rng)
    ids = entity_ids(spec.n_entities)
    blocks = _planted_blocks(ids, spec.n_blocks) if spec.n_blocks else None
    weights = build_weight_vector(spec.bin_decay, spec.weight_mode).w
    per_decade = _row_totals(spec, rng, blocks)

    masked: str | None = None
    if spec.mask_earliest:
        if spec.masked_destination is not None:
            masked = spec.masked_destination
        else:
            masked = ids[int(rng.integers(spec.n_entities))]

    truth: dict[str, MigrationTable] = {}
    observed: dict[str, MigrationTable] = {}
    for decade, rows in per_decade.items():
        counts: dict[CellKey, float] = {}
        for (dest, origin), total in sorted(
            rows.items(), key=lambda r: (r[0][0], r[0][1].sort_key)
        ):
            _split_bins(counts, dest, origin, total, weights)
        truth_table = MigrationTable(decade=decade, counts=counts)
        if spec.integer_counts:
            truth_table = integerize_table(truth_table)
        truth[decade] = truth_table

        biased = _inject_bias(spec, counts)
        if masked is not None and decade == spec.decades[0]:
            biased = {k: v for k, v in biased.items() if k[0] != masked}
        observed_table = synthesize_totals(
            MigrationTable(decade=decade, counts=biased), tolerance=1e-6
        )
        if spec.integer_counts:
            observed_table = integerize_table(observed_table)
        observed[decade] = observed_table

    return SynthResult(
        spec=spec,
        registry=registry,
        truth=truth,
        observed=observed,
        masked_destination=masked,
        planted_blocks=blocks,
    )


@dataclass(frozen=True)
class ErrorMetrics:
    n: int
    mape: float
    max_relative: float


def _metrics(pairs: list[tuple[float, float]], floor: float = 1.0) -> ErrorMetrics:
    if not pairs:
        return ErrorMetrics(n=0, mape=0.0, max_relative=0.0)
    rel = [abs(est - true) / max(floor, abs(true)) for true, est in pairs]
    return ErrorMetrics(n=len(pairs), mape=sum(rel) / len(rel), max_relative=max(rel))


def score_recovery(
    result: SynthResult,
    harmonized: Mapping[str, MigrationTable],
    floor: float = 1.0,
) -> dict[str, ErrorMetrics]:
    """Error of harmonized tables against the truth sidecar.

    ``imputed`` covers the masked destination's backcast in-flow column
    (pair totals per interstate origin), ``bins`` every part-bin cell of
    every decade, ``totals`` every row's pair total. Relative errors use
    ``max(floor, truth)`` denominators so near-zero truth cells do not
    blow up the score.
    """
    scores: dict[str, list[tuple[float, float]]] = {
        "imputed": [],
        "bins": [],
        "totals": [],
    }
    if result.masked_destination is not None:
        decade = result.earliest
        truth_t0 = result.truth[decade]
        est_t0 = harmonized.get(decade)
        if est_t0 is not None:
            for state in truth_t0.interstate_origins():
                if state == result.masked_destination:
                    continue
                origin = OriginRef.interstate(state)
                scores["imputed"].append(
                    (
                        truth_t0.pair_total(result.masked_destination, origin),
                        est_t0.pair_total(result.masked_destination, origin),
                    )
                )
    for decade, truth_table in result.truth.items():
        est = harmonized.get(decade)
        if est is None:
            continue
        masked_here = (
            result.masked_destination if decade == result.earliest else None
        )
        seen_rows = set()
        for (dest, origin, b), _ in truth_table.sorted_cells():
            if origin.kind is OriginKind.UNCLASSIFIABLE:
                continue
            if dest == masked_here and origin.kind is not OriginKind.INTERSTATE:
                # only the interstate in-flow column is backcast, so the
                # masked destination's pseudo-origin rows have no estimate
                continue
            if b in PART_BINS:
                scores["bins"].append(
                    (truth_table.get(dest, origin, b), est.get(dest, origin, b))
                )
            if (dest, origin) not in seen_rows:
                seen_rows.add((dest, origin))
                scores["totals"].append(
                    (truth_table.pair_total(dest, origin), est.pair_total(dest, origin))
                )
    return {name: _metrics(pairs, floor=floor) for name, pairs in scores.items()}


def write_synth(result: SynthResult, directory: Path) -> dict[str, Path]:
    """Persist a synthetic corpus: observed and truth tables, registry files,
    and a metadata JSON echoing the generator settings. Returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for decade, table in result.observed.items():
        path = directory / f"observed_{decade}.csv"
        with path.open("w", encoding="utf-8") as stream:
            serialize_table(table, stream)
        paths[f"observed_{decade}"] = path
    for decade, table in result.truth.items():
        path = directory / f"truth_{decade}.csv"
        with path.open("w", encoding="utf-8") as stream:
            serialize_table(table, stream)
        paths[f"truth_{decade}"] = path

    entities_path = directory / "entities.csv"
    with entities_path.open("w", encoding="utf-8") as stream:
        stream.write("canonical_id,canonical_name,alias,valid_decades,parent_id\n")
        for eid in result.registry.entity_ids:
            entity = result.registry.entity(eid)
            decades = ";".join(sorted(entity.valid_decades))
            parent = entity.parent_id or ""
            stream.write(
                f"{entity.canonical_id},{entity.canonical_name},,{decades},{parent}\n"
            )
    paths["entities"] = entities_path

    index_path = directory / "index_maps.csv"
    with index_path.open("w", encoding="utf-8") as stream:
        stream.write("decade,index,canonical_id\n")
        for decade in result.spec.decades:
            for idx, cid in result.registry.index_map(decade).pairs():
                stream.write(f"{decade},{idx},{cid}\n")
    paths["index_maps"] = index_path

    meta = {
        "spec": asdict(result.spec),
        "masked_destination": result.masked_destination,
        "planted_blocks": result.planted_blocks,
    }
    meta_path = directory / "meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    paths["meta"] = meta_path
    return paths


def load_synth(directory: Path) -> SynthResult:
    from .registry import load_registry

    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    raw_spec = meta["spec"]
    raw_spec["decades"] = tuple(raw_spec["decades"])
    raw_spec["growth_range"] = tuple(raw_spec["growth_range"])
    spec = SynthSpec(**raw_spec)
    registry = load_registry(
        directory / "entities.csv", [directory / "index_maps.csv"]
    )
    truth: dict[str, MigrationTable] = {}
    observed: dict[str, MigrationTable] = {}
    for decade in spec.decades:
        with (directory / f"truth_{decade}.csv").open(encoding="utf-8") as stream:
            truth[decade] = parse_table(stream, registry, decade=decade)
        with (directory / f"observed_{decade}.csv").open(encoding="utf-8") as stream:
            observed[decade] = parse_table(stream, registry, decade=decade)
    return SynthResult(
        spec=spec,
        registry=registry,
        truth=truth,
        observed=observed,
        masked_destination=meta["masked_destination"],
        planted_blocks=meta["planted_blocks"],
    )
