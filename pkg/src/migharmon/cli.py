"""Command line front end.

Subcommands mirror the pipeline stages so each can be run and inspected in
isolation: ``normalize`` canonicalizes names and totals, ``impute-coverage``
backcasts a missing destination column, ``redistribute`` reassigns
unclassifiable and not-stated mass, ``report`` and ``network`` summarize
tables, ``synth`` builds test corpora and ``pipeline`` runs everything and
writes a manifest. Exit codes: 0 success, 2 malformed input, 3 unresolved
entity, 4 violated precondition, 5 conservation failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, fields
from pathlib import Path

from .coverage import (
    compute_transfer_ratios,
    imputation_report,
    impute_missing_destination,
    write_ratio_report,
)
from .diagnostics import summarize_distribution, write_summary
from .errors import HarmonizationError, ParseError, PreconditionError
from .ingest import category_shares, duration_shares, parse_table, serialize_table, synthesize_totals
from .network import (
    build_network,
    community_count_mode,
    detect_communities,
    export_edge_list,
    network_metrics,
)
from .pipeline import PipelineConfig, detect_missing_destination, run_pipeline
from .redistribute import build_weight_vector, redistribute_duration, redistribute_unclassifiable
from .registry import EntityRegistry, default_registry, load_registry
from .synth import SynthSpec, generate, write_synth

logger = logging.getLogger(__name__)


def _add_registry_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--entities",
        type=Path,
        default=None,
        help="entity alias table (default: packaged registry)",
    )
    parser.add_argument(
        "--index-maps",
        type=Path,
        action="append",
        default=None,
        help="index map CSV, repeatable",
    )


def _registry(args: argparse.Namespace) -> EntityRegistry:
    if args.entities is not None:
        return load_registry(args.entities, args.index_maps or [])
    if args.index_maps:
        raise PreconditionError("--index-maps requires --entities")
    return default_registry()


def _out_stream(path: Path | None):
    if path is None:
        return sys.stdout, False
    return path.open("w", encoding="utf-8"), True


def _write(path: Path | None, render) -> None:
    stream, owned = _out_stream(path)
    try:
        render(stream)
    finally:
        if owned:
            stream.close()


# -- subcommand handlers -------------------------------------------------------


def _cmd_normalize(args: argparse.Namespace) -> int:
    registry = _registry(args)
    table = parse_table(
        args.input,
        registry,
        decade=args.decade,
        layout=args.layout,
        index_decade=args.indices,
    )
    table = synthesize_totals(table, tolerance=args.tolerance)
    label_registry = registry if args.names else None
    _write(args.output, lambda s: serialize_table(table, s, registry=label_registry))
    return 0


def _cmd_impute_coverage(args: argparse.Namespace) -> int:
    registry = _registry(args)
    t0, t1, t2 = (
        synthesize_totals(parse_table(p, registry), tolerance=args.tolerance)
        for p in (args.t0, args.t1, args.t2)
    )
    missing = args.missing
    if missing is None:
        missing = detect_missing_destination(
            {t.decade: t for t in (t0, t1, t2)}, (t0.decade, t1.decade, t2.decade)
        )
        if missing is None:
            raise PreconditionError("no uncovered destination found; use --missing")
    else:
        missing = registry.canonicalize(missing)
    ratios = compute_transfer_ratios(
        t0, t1, t2, missing, registry=registry, clamp=(args.clamp_lo, args.clamp_hi)
    )
    imputed = impute_missing_destination(
        t0, t1, ratios, missing, registry=registry, ratio_kind=args.ratio_kind
    )
    imputed = synthesize_totals(imputed, tolerance=args.tolerance)
    _write(args.output, lambda s: serialize_table(imputed, s))
    if args.report is not None:
        report = imputation_report(t0, imputed, missing, reference_tables=(t1, t2))
        _write(args.report, lambda s: write_ratio_report(ratios, report, s, registry))
    return 0


def _cmd_redistribute(args: argparse.Namespace) -> int:
    registry = _registry(args)
    table = synthesize_totals(
        parse_table(args.input, registry, decade=args.decade), tolerance=args.tolerance
    )
    if args.stage in ("unclassifiable", "both"):
        table = redistribute_unclassifiable(table)
    if args.stage in ("duration", "both"):
        weights = build_weight_vector(args.decay, args.weight_mode)
        table = redistribute_duration(table, weights)
    _write(args.output, lambda s: serialize_table(table, s))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    registry = _registry(args)
    tables = [
        synthesize_totals(parse_table(p, registry), tolerance=args.tolerance)
        for p in args.inputs
    ]
    if args.shares:
        payload = {
            t.decade: {
                "category": category_shares(t),
                "duration": duration_shares(t),
            }
            for t in tables
        }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0
    summaries = [summarize_distribution(t) for t in tables]
    _write(args.output, lambda s: write_summary(summaries, s))
    return 0


def _cmd_network(args: argparse.Namespace) -> int:
    registry = _registry(args)
    table = synthesize_totals(
        parse_table(args.input, registry), tolerance=args.tolerance
    )
    net = build_network(table, min_weight=args.min_weight)
    partition = detect_communities(net, seed=args.seed)
    mode, histogram = community_count_mode(net, seeds=range(args.sweep))
    if args.output is not None:
        _write(args.output, lambda s: export_edge_list(net, s, partition=partition))
    payload = {
        "metrics": asdict(network_metrics(net)),
        "communities": {
            "seed": args.seed,
            "count": partition.n_communities,
            "mode_over_sweep": mode,
            "histogram": {str(k): v for k, v in histogram.items()},
            "members": partition.communities(),
        },
    }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = SynthSpec(
        seed=args.seed,
        n_entities=args.entities_count,
        decades=tuple(args.decades),
        base_scale=args.base_scale,
        spread=args.spread,
        growth_range=(args.growth_lo, args.growth_hi),
        noise_sigma=args.noise,
        unclassifiable_rate=args.unclassifiable_rate,
        not_stated_rate=args.not_stated_rate,
        bin_decay=args.bin_decay,
        weight_mode=args.weight_mode,
        intrastate_factor=args.intrastate_factor,
        international_factor=args.international_factor,
        mask_earliest=not args.no_mask,
        masked_destination=args.masked,
        n_blocks=args.blocks,
        block_boost=args.block_boost,
        integer_counts=not args.float_counts,
    )
    result = generate(spec)
    paths = write_synth(result, args.out_dir)
    print(
        json.dumps(
            {
                "out_dir": str(args.out_dir),
                "masked_destination": result.masked_destination,
                "files": sorted(p.name for p in paths.values()),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


_CONFIG_COERCERS = {
    "decades": lambda v: tuple(part.strip() for part in v.split(",") if part.strip()),
    "missing_destination": lambda v: v,
    "ratio_kind": lambda v: v,
    "clamp": lambda v: tuple(float(p) for p in v.split(",")),
    "weight_mode": lambda v: v,
    "weight_decay": float,
    "conservation_tolerance": float,
    "integer_output": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
    "community_seed": int,
    "community_sweep": int,
    "total_tolerance": float,
}


def parse_config_file(path: Path) -> dict:
    """Flat key=value settings; '#' starts a comment, blank lines ignored."""
    values: dict = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        coerce = _CONFIG_COERCERS.get(key)
        if coerce is None:
            raise ParseError(lineno, f"unknown setting {key!r}")
        try:
            values[key] = coerce(value.strip())
        except ValueError:
            raise ParseError(lineno, f"bad value for {key}: {value.strip()!r}") from None
    return values


def _build_pipeline_config(args: argparse.Namespace) -> PipelineConfig:
    settings = {f.name: getattr(PipelineConfig(), f.name) for f in fields(PipelineConfig)}
    if args.config is not None:
        settings.update(parse_config_file(args.config))
    overrides = {
        "missing_destination": args.missing,
        "ratio_kind": args.ratio_kind,
        "weight_mode": args.weight_mode,
        "weight_decay": args.decay,
        "conservation_tolerance": args.tolerance,
        "community_seed": args.seed,
        "community_sweep": args.sweep,
    }
    if args.clamp_lo is not None or args.clamp_hi is not None:
        lo, hi = settings["clamp"]
        overrides["clamp"] = (
            lo if args.clamp_lo is None else args.clamp_lo,
            hi if args.clamp_hi is None else args.clamp_hi,
        )
    if args.float_output:
        overrides["integer_output"] = False
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return PipelineConfig(**settings)


def _cmd_pipeline(args: argparse.Namespace) -> int:
    registry = _registry(args)
    tables = {}
    for item in args.input:
        decade, _, path = item.partition("=")
        if not path:
            raise PreconditionError(
                f"--input expects decade=path, got {item!r}"
            )
        tables[decade] = parse_table(Path(path), registry, decade=decade)
    config = _build_pipeline_config(args)
    if set(config.decades) - set(tables):
        config_decades = tuple(sorted(tables))
        if len(config_decades) != 3:
            raise PreconditionError("pipeline needs exactly three decade tables")
        config = PipelineConfig(**{**asdict(config), "decades": config_decades})
    result = run_pipeline(tables, registry, config, out_dir=args.out_dir)
    summary = {
        "out_dir": str(args.out_dir),
        "imputation": result.manifest["imputation"],
        "communities": {
            d: c["mode"] for d, c in result.manifest["communities"].items()
        },
        "outputs": sorted(result.manifest["outputs"]),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


# -- parser wiring ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="migharmon",
        description="Harmonize multi-decade origin-destination migration tables.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normalize", help="canonicalize names, indices and totals")
    _add_registry_options(p)
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.add_argument("--decade", default=None, help="expected decade label")
    p.add_argument("--layout", choices=("long", "wide"), default="long")
    p.add_argument(
        "--indices",
        default=None,
        metavar="DECADE",
        help="place tokens are numeric indices of this decade's scheme",
    )
    p.add_argument("--names", action="store_true", help="write display names, not ids")
    p.add_argument("--tolerance", type=float, default=0.0, help="declared-total slack")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("impute-coverage", help="backcast a missing destination column")
    _add_registry_options(p)
    p.add_argument("--t0", type=Path, required=True, help="earliest decade table")
    p.add_argument("--t1", type=Path, required=True, help="middle decade table")
    p.add_argument("--t2", type=Path, required=True, help="latest decade table")
    p.add_argument("--missing", default=None, help="destination to impute (default: detect)")
    p.add_argument("--ratio-kind", choices=("smoothed", "r_early"), default="smoothed")
    p.add_argument("--clamp-lo", type=float, default=0.1)
    p.add_argument("--clamp-hi", type=float, default=10.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.add_argument("--report", type=Path, default=None, help="ratio report CSV")
    p.set_defaults(func=_cmd_impute_coverage)

    p = sub.add_parser("redistribute", help="reassign unclassifiable or not-stated mass")
    _add_registry_options(p)
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None)
    p.add_argument("--decade", default=None)
    p.add_argument(
        "--stage", choices=("unclassifiable", "duration", "both"), default="both"
    )
    p.add_argument("--weight-mode", choices=("fixed", "exp"), default="fixed")
    p.add_argument("--decay", type=float, default=0.4)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=_cmd_redistribute)

    p = sub.add_parser("report", help="distribution summaries and shares")
    _add_registry_options(p)
    p.add_argument("inputs", type=Path, nargs="+")
    p.add_argument("-o", "--output", type=Path, default=None)
    p.add_argument("--shares", action="store_true", help="print share JSON instead")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("network", help="edge list, metrics and communities")
    _add_registry_options(p)
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--output", type=Path, default=None, help="edge list CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweep", type=int, default=50, help="seeds for the count mode")
    p.add_argument("--min-weight", type=float, default=0.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.set_defaults(func=_cmd_network)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--entities-count", type=int, default=12)
    p.add_argument("--decades", nargs=3, default=["1991", "2001", "2011"])
    p.add_argument("--base-scale", type=float, default=20_000.0)
    p.add_argument("--spread", type=float, default=0.8)
    p.add_argument("--growth-lo", type=float, default=0.8)
    p.add_argument("--growth-hi", type=float, default=1.6)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--unclassifiable-rate", type=float, default=0.02)
    p.add_argument("--not-stated-rate", type=float, default=0.10)
    p.add_argument("--bin-decay", type=float, default=0.4)
    p.add_argument("--weight-mode", choices=("fixed", "exp"), default="fixed")
    p.add_argument("--intrastate-factor", type=float, default=3.0)
    p.add_argument("--international-factor", type=float, default=0.02)
    p.add_argument("--no-mask", action="store_true", help="keep full coverage")
    p.add_argument("--masked", default=None, help="destination to mask")
    p.add_argument("--blocks", type=int, default=0, help="planted community count")
    p.add_argument("--block-boost", type=float, default=8.0)
    p.add_argument("--float-counts", action="store_true")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("pipeline", help="run all stages and write a manifest")
    _add_registry_options(p)
    p.add_argument(
        "--input",
        action="append",
        required=True,
        metavar="DECADE=PATH",
        help="decade table, give three times",
    )
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--config", type=Path, default=None, help="key=value settings file")
    p.add_argument("--missing", default=None, help="destination to impute ('' skips)")
    p.add_argument("--ratio-kind", choices=("smoothed", "r_early"), default=None)
    p.add_argument("--weight-mode", choices=("fixed", "exp"), default=None)
    p.add_argument("--decay", type=float, default=None)
    p.add_argument("--clamp-lo", type=float, default=None)
    p.add_argument("--clamp-hi", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sweep", type=int, default=None)
    p.add_argument("--float-output", action="store_true")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except HarmonizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
