"""Command-line interface.

Subcommands: ingest, detect, metrics, compare, synth, export-graphs.
Exit codes: 0 success, 2 input error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .errors import InputDataError, InvariantViolation, PhishclustError
from .ingest import FixtureEnrichmentClient, enrich, load_dataset, save_dataset
from .pipeline import (
    ALL_ARTIFACTS,
    LAYER_CHOICES,
    SCOPE_CHOICES,
    PipelineConfig,
    compare_layers,
    run_pipeline,
    write_comparison_csv,
)
from .synth import generate, spec_from_json

log = logging.getLogger("phishclust")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3


def _add_io_args(parser: argparse.ArgumentParser, *, needs_out_dir: bool = True) -> None:
    parser.add_argument("--input", required=True, type=Path, help="dataset JSONL file")
    if needs_out_dir:
        parser.add_argument("--out", required=True, type=Path, help="output directory")


def _add_pipeline_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--layers", choices=LAYER_CHOICES, default="both")
    parser.add_argument("--contextual-scope", choices=SCOPE_CHOICES, default="global")
    parser.add_argument("--fixtures", type=Path, default=None,
                        help="enrichment fixture directory")
    parser.add_argument("--error-dict", type=Path, default=None,
                        help="error-page phrase file (default: bundled dictionary)")
    parser.add_argument("--error-token-threshold", type=float, default=0.5)
    parser.add_argument("--drop-all-error-text", action="store_true",
                        help="drop records whose page texts are all error pages")
    parser.add_argument("--ocr-sim-threshold", type=float, default=0.8)
    parser.add_argument("--keep-short-tokens", action="store_true",
                        help="keep 1-character word tokens in text vectors")
    parser.add_argument("--delta", type=float, default=0.6,
                        help="textual similarity threshold")
    parser.add_argument("--delta-ip", type=int, default=3,
                        help="shared-IP count above which an edge gains 2")
    parser.add_argument("--delta-time", type=float, default=72.0,
                        help="submission-time threshold in hours")
    parser.add_argument("--signals", type=str, default="",
                        help="comma list of active signals (default: all)")
    parser.add_argument("--resolution", type=float, default=1.0)
    parser.add_argument("--community-seed", type=int, default=0)
    parser.add_argument("--zero-weight-eps", type=float, default=0.01)
    parser.add_argument("--cut-distance", type=float, default=0.5)
    parser.add_argument("--linkage", choices=("average", "complete", "single"),
                        default="average")
    parser.add_argument("--structural-threshold", type=float, default=0.2)
    parser.add_argument("--coherence-eps", type=float, default=1e-3)
    parser.add_argument("--cohmap-threshold", type=float, default=500.0)
    parser.add_argument("--emit-svg", action="store_true",
                        help="also render the coherence map as SVG")
    parser.add_argument("--export-dot", type=Path, default=None,
                        help="directory for DOT graph exports")
    parser.add_argument("--export-graphml", type=Path, default=None,
                        help="directory for GraphML graph exports")


def _config_from_args(args: argparse.Namespace, out_dir: Path,
                      artifacts: tuple[str, ...] = ALL_ARTIFACTS) -> PipelineConfig:
    signals = tuple(s for s in args.signals.split(",") if s.strip()) if args.signals else ()
    return PipelineConfig(
        input_path=args.input,
        out_dir=out_dir,
        layers=args.layers,
        contextual_scope=args.contextual_scope,
        fixtures_dir=args.fixtures,
        error_dict_path=args.error_dict,
        error_token_threshold=args.error_token_threshold,
        drop_all_error_text=args.drop_all_error_text,
        ocr_sim_threshold=args.ocr_sim_threshold,
        drop_short_tokens=not args.keep_short_tokens,
        delta=args.delta,
        delta_ip=args.delta_ip,
        delta_time_hours=args.delta_time,
        signals=signals,
        resolution=args.resolution,
        community_seed=args.community_seed,
        zero_weight_eps=args.zero_weight_eps,
        cut_distance=args.cut_distance,
        linkage=args.linkage,
        structural_threshold=args.structural_threshold,
        coherence_eps=args.coherence_eps,
        cohmap_threshold=args.cohmap_threshold,
        emit_svg=args.emit_svg,
        export_dot=args.export_dot,
        export_graphml=args.export_graphml,
        artifacts=artifacts,
    )


def _cmd_ingest(args: argparse.Namespace) -> int:
    records = load_dataset(args.input)
    if args.fixtures is not None:
        client = FixtureEnrichmentClient(args.fixtures)
        records = enrich(records, client)
        if client.misses:
            log.warning("no enrichment data for %d record(s)", client.misses)
    save_dataset(records, args.out)
    print(f"wrote {len(records)} record(s) to {args.out}")
    return EXIT_OK


def _cmd_detect(args: argparse.Namespace) -> int:
    config = _config_from_args(args, args.out)
    artifacts = run_pipeline(config)
    print(
        f"{len(artifacts.records)} URL(s) -> {len(artifacts.campaigns)} campaign(s); "
        f"outputs in {artifacts.out_dir}"
    )
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    config = _config_from_args(args, args.out, artifacts=("sigs", "cohmap", "manifest"))
    artifacts = run_pipeline(config)
    above = (
        f"{artifacts.cohmap.fraction_above_threshold:.1%} of pairs above "
        f"{artifacts.cohmap.report_threshold}"
        if artifacts.cohmap is not None
        else "coherence map skipped (fewer than 2 campaigns)"
    )
    print(f"metrics for {len(artifacts.campaigns)} campaign(s) in {artifacts.out_dir}; {above}")
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    base = _config_from_args(args, out_dir, artifacts=())
    structural_run = run_pipeline(replace(base, layers="structural"))
    combined_run = run_pipeline(replace(base, layers="both", artifacts=("manifest",)))
    table = compare_layers(structural_run.campaigns, combined_run.campaigns)
    path = out_dir / "comparison.csv"
    write_comparison_csv(table, path)
    reduction, pct = table.reductions[0]
    print(
        f"structural {table.structural.total} -> combined {table.combined.total} "
        f"campaigns (reduction {reduction}, {pct}%); table in {path}"
    )
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = spec_from_json(args.spec)
    records, truth = generate(spec)
    save_dataset(records, args.out)
    Path(args.truth).write_text(
        json.dumps(truth, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(records)} record(s) to {args.out} and truth to {args.truth}")
    return EXIT_OK


def _cmd_export_graphs(args: argparse.Namespace) -> int:
    if args.export_dot is None and args.export_graphml is None:
        raise InputDataError("export-graphs needs --export-dot and/or --export-graphml")
    out_dir = args.export_dot or args.export_graphml
    config = _config_from_args(args, Path(out_dir), artifacts=("graphs",))
    artifacts = run_pipeline(config)
    print(f"exported {len(artifacts.graphs)} graph(s)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phishclust",
        description="Detect phishing campaigns by clustering enriched URL records.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate, enrich, and rewrite a dataset")
    p.add_argument("--input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path, help="output JSONL file")
    p.add_argument("--fixtures", type=Path, default=None)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("detect", help="run the full pipeline and write artifacts")
    _add_io_args(p)
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("metrics", help="run the pipeline, write sigs.csv and cohmap.csv")
    _add_io_args(p)
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("compare", help="structural-only vs combined comparison table")
    _add_io_args(p)
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic dataset with ground truth")
    p.add_argument("--spec", required=True, type=Path, help="JSON spec file")
    p.add_argument("--out", required=True, type=Path, help="dataset JSONL to write")
    p.add_argument("--truth", required=True, type=Path, help="ground-truth JSON to write")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("export-graphs", help="export weighted URL graphs as DOT/GraphML")
    p.add_argument("--input", required=True, type=Path)
    _add_pipeline_args(p)
    p.set_defaults(func=_cmd_export_graphs)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InvariantViolation as exc:
        stage = getattr(exc, "stage", None)
        log.error("invariant violation%s: %s", f" in stage {stage}" if stage else "", exc)
        return EXIT_INVARIANT
    except (InputDataError, OSError) as exc:
        stage = getattr(exc, "stage", None)
        log.error("input error%s: %s", f" in stage {stage}" if stage else "", exc)
        return EXIT_INPUT
    except PhishclustError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
