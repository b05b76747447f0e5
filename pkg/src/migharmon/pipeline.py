"""End-to-end harmonization: normalize, impute, redistribute, export.

Stage order is fixed: totals are synthesized for every decade, the earliest
decade's missing destination (if any) is backcast from the two later
decades, unclassifiable origins are reclassified, not-stated durations are
spread, conservation is checked per destination, and only then is anything
written. A manifest records the configuration, conservation residuals,
community structure and a checksum of every output file, so two runs on the
same inputs can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

from .coverage import (
    compute_transfer_ratios,
    imputation_report,
    impute_missing_destination,
    write_ratio_report,
)
from .diagnostics import export_plot_data, summarize_distribution, write_summary
from .errors import PreconditionError
from .ingest import integerize_table, serialize_table, synthesize_totals
from .model import MigrationTable
from .network import (
    build_network,
    community_count_mode,
    detect_communities,
    export_edge_list,
    network_metrics,
)
from .redistribute import (
    build_weight_vector,
    conservation_check,
    redistribute_duration,
    redistribute_unclassifiable,
)
from .registry import EntityRegistry

DEFAULT_CLAMP = (0.1, 10.0)


@dataclass(frozen=True)
class PipelineConfig:
    decades: tuple[str, ...] = ("1991", "2001", "2011")
    missing_destination: str | None = None  # None = auto-detect, "" = skip
    ratio_kind: str = "smoothed"
    clamp: tuple[float, float] = DEFAULT_CLAMP
    weight_mode: str = "fixed"
    weight_decay: float = 0.4
    conservation_tolerance: float = 1e-6
    integer_output: bool = True
    community_seed: int = 0
    community_sweep: int = 50
    total_tolerance: float = 1e-6

    def sha256(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class PipelineResult:
    config: PipelineConfig
    harmonized: dict[str, MigrationTable]
    manifest: dict
    out_dir: Path | None = None
    written: dict[str, Path] = field(default_factory=dict)


def detect_missing_destination(
    tables: Mapping[str, MigrationTable], decades: tuple[str, ...]
) -> str | None:
    """The destination covered in both later decades but absent from the
    earliest; None when coverage is already complete."""
    earliest, middle, late = (tables[d] for d in decades)
    gaps = (set(middle.destinations) & set(late.destinations)) - set(
        earliest.destinations
    )
    if not gaps:
        return None
    if len(gaps) > 1:
        raise PreconditionError(
            f"multiple uncovered destinations {sorted(gaps)}; pick one explicitly"
        )
    return gaps.pop()


def _file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(
    tables: Mapping[str, MigrationTable],
    registry: EntityRegistry,
    config: PipelineConfig = PipelineConfig(),
    out_dir: str | Path | None = None,
) -> PipelineResult:
    """Harmonize one table per decade and, when ``out_dir`` is given, export
    tables, reports, edge lists and the run manifest there.

    Raises ConservationError before writing anything if a redistribution
    stage loses or invents migrant mass beyond the configured tolerance.
    """
    missing_decades = [d for d in config.decades if d not in tables]
    if missing_decades:
        raise PreconditionError(f"no table for decades {missing_decades}")

    staged = {
        d: synthesize_totals(tables[d], tolerance=config.total_tolerance)
        for d in config.decades
    }

    # Coverage imputation on the earliest decade.
    imputation_info = None
    ratio_set = None
    report = None
    missing = config.missing_destination
    if missing is None:
        missing = detect_missing_destination(staged, config.decades)
    if missing:
        earliest, middle, late = (staged[d] for d in config.decades)
        ratio_set = compute_transfer_ratios(
            earliest, middle, late, missing, registry=registry, clamp=config.clamp
        )
        imputed = impute_missing_destination(
            earliest,
            middle,
            ratio_set,
            missing,
            registry=registry,
            ratio_kind=config.ratio_kind,
        )
        imputed = synthesize_totals(imputed, tolerance=config.total_tolerance)
        report = imputation_report(
            earliest, imputed, missing, reference_tables=(middle, late)
        )
        staged[config.decades[0]] = imputed
        imputation_info = {
            "destination": missing,
            "n_origins": len(ratio_set.ratios),
            "n_excluded": len(ratio_set.excluded),
            "shares_by_decade": report.shares_by_decade,
            "imputed_total": sum(report.imputed_counts.values()),
        }

    before_summaries = {d: summarize_distribution(staged[d]) for d in config.decades}

    weights = build_weight_vector(config.weight_decay, config.weight_mode)
    conservation: dict[str, dict[str, float]] = {}
    harmonized: dict[str, MigrationTable] = {}
    for decade in config.decades:
        table = staged[decade]
        reclassified = redistribute_unclassifiable(table)
        check_u = conservation_check(
            table,
            reclassified,
            level="per-destination",
            relative_tolerance=config.conservation_tolerance,
        )
        check_u.raise_if_failed()
        spread = redistribute_duration(reclassified, weights)
        check_d = conservation_check(
            reclassified,
            spread,
            level="per-destination",
            relative_tolerance=config.conservation_tolerance,
        )
        check_d.raise_if_failed()
        conservation[decade] = {
            "unclassifiable_grand": check_u.grand_residual,
            "duration_grand": check_d.grand_residual,
            "unclassifiable_worst": max(check_u.residuals.values(), default=0.0),
            "duration_worst": max(check_d.residuals.values(), default=0.0),
        }
        harmonized[decade] = spread

    after_summaries = {d: summarize_distribution(harmonized[d]) for d in config.decades}

    exported = {
        d: integerize_table(t) if config.integer_output else t
        for d, t in harmonized.items()
    }
    networks = {d: build_network(exported[d]) for d in config.decades}
    partitions = {
        d: detect_communities(networks[d], seed=config.community_seed)
        for d in config.decades
    }
    communities = {}
    for decade in config.decades:
        mode, histogram = community_count_mode(
            networks[decade], seeds=range(config.community_sweep)
        )
        communities[decade] = {
            "mode": mode,
            "histogram": {str(k): v for k, v in histogram.items()},
            "seed_partition": partitions[decade].n_communities,
        }

    manifest: dict = {
        "config": asdict(config),
        "config_sha256": config.sha256(),
        "decades": list(config.decades),
        "imputation": imputation_info,
        "conservation": conservation,
        "communities": communities,
        "network_metrics": {
            d: asdict(network_metrics(networks[d])) for d in config.decades
        },
        "outputs": {},
    }

    result = PipelineResult(config=config, harmonized=exported, manifest=manifest)
    if out_dir is None:
        return result

    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    for decade in config.decades:
        path = out_path / f"harmonized_{decade}.csv"
        with path.open("w", encoding="utf-8") as stream:
            serialize_table(exported[decade], stream)
        written[path.name] = path
    summary_before = out_path / "summary_before.csv"
    with summary_before.open("w", encoding="utf-8") as stream:
        write_summary((before_summaries[d] for d in config.decades), stream)
    written[summary_before.name] = summary_before
    summary_after = out_path / "summary_after.csv"
    with summary_after.open("w", encoding="utf-8") as stream:
        write_summary((after_summaries[d] for d in config.decades), stream)
    written[summary_after.name] = summary_after
    if ratio_set is not None and report is not None:
        ratio_path = out_path / f"imputation_{config.decades[0]}.csv"
        with ratio_path.open("w", encoding="utf-8") as stream:
            write_ratio_report(ratio_set, report, stream)
        written[ratio_path.name] = ratio_path
    for decade in config.decades:
        edge_path = out_path / f"edges_{decade}.csv"
        with edge_path.open("w", encoding="utf-8") as stream:
            export_edge_list(networks[decade], stream, partition=partitions[decade])
        written[edge_path.name] = edge_path
    plot_path = out_path / "plot_data.csv"
    with plot_path.open("w", encoding="utf-8") as stream:
        export_plot_data((exported[d] for d in config.decades), stream)
    written[plot_path.name] = plot_path

    manifest["outputs"] = {
        name: _file_sha256(path) for name, path in sorted(written.items())
    }
    manifest_path = out_path / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    written[manifest_path.name] = manifest_path

    result.out_dir = out_path
    result.written = written
    return result
