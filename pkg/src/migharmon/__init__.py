"""Harmonization of multi-decade origin-destination migration tables.

The library normalizes entity nomenclature across census rounds, backcasts
a destination column missing from the earliest round, redistributes
unclassifiable-origin and unknown-duration migrant mass under conservation
constraints, and derives distribution summaries and weighted migration
networks from the harmonized tables.
"""

from .coverage import (
    TransferRatio,
    TransferRatioSet,
    compute_transfer_ratios,
    imputation_report,
    impute_missing_destination,
)
from .diagnostics import (
    DistributionSummary,
    compare_summaries,
    summarize_distribution,
)
from .errors import (
    ConservationError,
    HarmonizationError,
    ParseFailure,
    PreconditionError,
    RegistryError,
)
from .ingest import (
    category_shares,
    duration_shares,
    integerize_table,
    largest_remainder_round,
    parse_table,
    serialize_table,
    synthesize_totals,
)
from .model import (
    CellKey,
    DurationBin,
    MigrationTable,
    OriginKind,
    OriginRef,
)
from .network import (
    MigrationNetwork,
    Partition,
    build_network,
    community_count_mode,
    compare_partitions,
    detect_communities,
    network_metrics,
)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .redistribute import (
    WeightVector,
    build_weight_vector,
    conservation_check,
    redistribute_duration,
    redistribute_unclassifiable,
)
from .registry import (
    Entity,
    EntityRegistry,
    IndexMap,
    default_registry,
    load_registry,
    normalize_name,
    remap_indices,
)
from .synth import ErrorMetrics, SynthResult, SynthSpec, generate, score_recovery

__version__ = "0.1.0"

__all__ = [
    "CellKey",
    "ConservationError",
    "DistributionSummary",
    "DurationBin",
    "Entity",
    "EntityRegistry",
    "ErrorMetrics",
    "HarmonizationError",
    "IndexMap",
    "MigrationNetwork",
    "MigrationTable",
    "OriginKind",
    "OriginRef",
    "ParseFailure",
    "Partition",
    "PipelineConfig",
    "PipelineResult",
    "PreconditionError",
    "RegistryError",
    "SynthResult",
    "SynthSpec",
    "TransferRatio",
    "TransferRatioSet",
    "WeightVector",
    "build_network",
    "build_weight_vector",
    "category_shares",
    "community_count_mode",
    "compare_partitions",
    "compare_summaries",
    "compute_transfer_ratios",
    "conservation_check",
    "default_registry",
    "detect_communities",
    "duration_shares",
    "generate",
    "imputation_report",
    "impute_missing_destination",
    "integerize_table",
    "largest_remainder_round",
    "load_registry",
    "network_metrics",
    "normalize_name",
    "parse_table",
    "redistribute_duration",
    "redistribute_unclassifiable",
    "remap_indices",
    "run_pipeline",
    "score_recovery",
    "serialize_table",
    "summarize_distribution",
    "synthesize_totals",
]
