"""Pipeline composition and all file outputs.

`run_pipeline` executes ingest -> structural layer -> graph projection ->
edge weighting -> community detection -> global component indexing ->
component clustering -> layer composition -> metrics, and writes the run
artifacts (campaigns.json, sigs.csv, cohmap.csv, comparison.csv, graph
exports, run-manifest.json).
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import timedelta
from pathlib import Path
from typing import Mapping, Sequence

from . import __version__
from .campaign import (
    ComponentIndex,
    assemble_campaigns,
    build_component_index,
    cluster_components,
    fit_component_tfidf,
)
from .community import LabeledUrlGraph, detect_components, label_graph
from .errors import DatasetMismatch, InputDataError, InvariantViolation, PhishclustError
from .ingest import FixtureEnrichmentClient, enrich, load_dataset
from .metrics import (
    CoherenceMap,
    SignalStrengthTable,
    attach_signal_strengths,
    coherence_map,
)
from .records import ALL_SIGNALS, Campaign, EnrichedUrlRecord, SignalId, parse_signal
from .structural import compose_layers, structural_campaigns, structural_clusters
from .textsim import (
    ErrorPageDictionary,
    TfidfModel,
    fit_tfidf,
    is_error_page,
    load_error_dictionary,
    merge_ocr,
)
from .urlgraph import build_bipartite, export_graphs, project_url_graphs
from .weighting import WeightingConfig, build_stage1_corpus, weigh_graph

log = logging.getLogger(__name__)

LAYER_CHOICES = ("structural", "contextual", "both")
SCOPE_CHOICES = ("global", "per-structural-cluster")
ALL_ARTIFACTS = ("campaigns", "sigs", "cohmap", "comparison", "manifest", "graphs")


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of one run; the manifest records all analytic fields."""

    input_path: Path
    out_dir: Path
    layers: str = "both"
    contextual_scope: str = "global"
    # ingest
    fixtures_dir: Path | None = None
    error_dict_path: Path | None = None
    error_token_threshold: float = 0.5
    drop_all_error_text: bool = False
    # text handling
    ocr_sim_threshold: float = 0.8
    drop_short_tokens: bool = True
    # edge weighting
    delta: float = 0.6
    delta_ip: int = 3
    delta_time_hours: float = 72.0
    signals: tuple[str, ...] = ()
    # community detection
    resolution: float = 1.0
    community_seed: int = 0
    zero_weight_eps: float = 0.01
    # component clustering
    cut_distance: float = 0.5
    linkage: str = "average"
    # structural layer
    structural_threshold: float = 0.2
    # metrics
    coherence_eps: float = 1e-3
    cohmap_threshold: float = 500.0
    emit_svg: bool = False
    # graph exports
    export_dot: Path | None = None
    export_graphml: Path | None = None
    # which files to write
    artifacts: tuple[str, ...] = ALL_ARTIFACTS

    def __post_init__(self):
        if self.layers not in LAYER_CHOICES:
            raise InputDataError(f"layers must be one of {LAYER_CHOICES}, got {self.layers!r}")
        if self.contextual_scope not in SCOPE_CHOICES:
            raise InputDataError(
                f"contextual scope must be one of {SCOPE_CHOICES}, got {self.contextual_scope!r}"
            )

    def active_signals(self) -> frozenset[SignalId]:
        if not self.signals:
            return ALL_SIGNALS
        return frozenset(parse_signal(name) for name in self.signals)

    def weighting_config(self, error_dict: ErrorPageDictionary) -> WeightingConfig:
        return WeightingConfig(
            delta=self.delta,
            delta_ip=self.delta_ip,
            delta_time=timedelta(hours=self.delta_time_hours),
            active_signals=self.active_signals(),
            error_dict=error_dict,
            ocr_sim_threshold=self.ocr_sim_threshold,
        )


@dataclass
class RunArtifacts:
    """Everything a run produced, in memory plus the written paths."""

    out_dir: Path
    records: list[EnrichedUrlRecord]
    campaigns: list[Campaign]
    structural_groups: list[frozenset[str]]
    contextual_campaigns: list[Campaign]
    graphs: list  # WeightedUrlGraph, weighted
    labeled_graphs: list[LabeledUrlGraph]
    index: ComponentIndex | None
    comp_lbls: list[int]
    stage2_model: TfidfModel | None
    sigs_table: SignalStrengthTable | None
    cohmap: CoherenceMap | None
    comparison: "ComparisonTable | None"
    paths: dict[str, Path] = field(default_factory=dict)


@contextmanager
def _stage(name: str):
    """Attach the failing stage's name to propagated pipeline errors."""
    try:
        yield
    except PhishclustError as exc:
        if not getattr(exc, "stage", None):
            exc.stage = name
        raise


def _all_texts_error(
    record: EnrichedUrlRecord, dictionary: ErrorPageDictionary, ocr_threshold: float
) -> bool:
    """True when the record carried page text but all of it is error pages."""
    if record.html_text is None and record.ocr_text_own is None and record.ocr_text_pt is None:
        return False
    html_bad = record.html_text is None or is_error_page(record.html_text, dictionary)
    merged = merge_ocr(record.ocr_text_own, record.ocr_text_pt, ocr_threshold)
    ocr_bad = merged is None or is_error_page(merged, dictionary)
    return html_bad and ocr_bad


def _offset_graph_ids(graphs: Sequence, base: int) -> list:
    if base == 0:
        return list(graphs)
    return [replace(g, graph_id=g.graph_id + base) for g in graphs]


def _stage1(
    records: Sequence[EnrichedUrlRecord],
    wcfg: WeightingConfig,
    config: PipelineConfig,
    graph_id_base: int = 0,
) -> list[LabeledUrlGraph]:
    """Project, weigh, and community-detect the URL graphs of one scope."""
    by_url = {r.url: r for r in records}
    graphs = _offset_graph_ids(project_url_graphs(build_bipartite(records)), graph_id_base)
    model = fit_tfidf(
        build_stage1_corpus(records, wcfg), drop_short_tokens=config.drop_short_tokens
    )
    labeled = []
    for graph in graphs:
        weighted = weigh_graph(graph, by_url, wcfg, model)
        components = detect_components(
            weighted,
            config.community_seed,
            resolution=config.resolution,
            zero_weight_eps=config.zero_weight_eps,
        )
        labeled.append(label_graph(weighted, components))
    return labeled


def run_pipeline(config: PipelineConfig) -> RunArtifacts:
    with _stage("ingest"):
        records = load_dataset(config.input_path)
        if config.fixtures_dir is not None:
            client = FixtureEnrichmentClient(Path(config.fixtures_dir))
            records = enrich(records, client)
            if client.misses:
                log.warning("enrichment data missing for %d record(s)", client.misses)
        error_dict = load_error_dictionary(
            config.error_dict_path, config.error_token_threshold
        )
        if config.drop_all_error_text:
            kept = [
                r for r in records
                if not _all_texts_error(r, error_dict, config.ocr_sim_threshold)
            ]
            if len(kept) != len(records):
                log.warning("dropped %d all-error-text record(s)", len(records) - len(kept))
            records = kept
    if not records:
        log.warning("input dataset is empty; writing empty outputs")

    wcfg = config.weighting_config(error_dict)
    run_structural = config.layers in ("structural", "both")
    run_contextual = config.layers in ("contextual", "both") and records

    structural_groups: list[frozenset[str]] = []
    if run_structural:
        with _stage("structural"):
            structural_groups = structural_clusters(records, config.structural_threshold)

    labeled_graphs: list[LabeledUrlGraph] = []
    graph_blocks: list[set[int]] = []
    index: ComponentIndex | None = None
    comp_lbls: list[int] = []
    stage2_model: TfidfModel | None = None
    contextual: list[Campaign] = []
    scoped = config.contextual_scope == "per-structural-cluster" and run_structural
    if run_contextual:
        with _stage("url-graphs"):
            if scoped:
                by_url = {r.url: r for r in records}
                base = 0
                for group in structural_groups:
                    subset = [by_url[url] for url in sorted(group)]
                    part = _stage1(subset, wcfg, config, graph_id_base=base)
                    labeled_graphs.extend(part)
                    graph_blocks.append({lg.graph.graph_id for lg in part})
                    base += len(part)
            else:
                labeled_graphs = _stage1(records, wcfg, config)
        with _stage("component-index"):
            index = build_component_index(
                labeled_graphs, records, error_dict, config.ocr_sim_threshold
            )
            stage2_model = fit_component_tfidf(index)
        with _stage("component-clustering"):
            if scoped:
                comp_lbls = _cluster_per_scope(index, graph_blocks, config)
            else:
                comp_lbls = cluster_components(
                    index,
                    config.cut_distance,
                    linkage_method=config.linkage,
                    model=stage2_model,
                )
            contextual = assemble_campaigns(index, comp_lbls)

    with _stage("compose"):
        if config.layers == "both":
            campaigns = (
                compose_layers(structural_groups, contextual) if records else []
            )
        elif config.layers == "contextual":
            campaigns = contextual
        else:
            campaigns = structural_campaigns(structural_groups)
        _check_partition(campaigns, records)

    sigs_table = None
    graphs = [lg.graph for lg in labeled_graphs]
    if run_contextual:
        with _stage("metrics"):
            campaigns, sigs_table = attach_signal_strengths(
                campaigns, graphs, wcfg.active_signals
            )
    cohmap = None
    if run_contextual and len(campaigns) >= 2 and stage2_model is not None:
        with _stage("metrics"):
            cohmap = coherence_map(
                campaigns,
                stage2_model,
                eps=config.coherence_eps,
                report_threshold=config.cohmap_threshold,
            )
    elif run_contextual:
        log.warning("fewer than 2 campaigns; skipping the coherence map")

    comparison = None
    if config.layers == "both":
        comparison = compare_layers(structural_campaigns(structural_groups), campaigns)

    artifacts = RunArtifacts(
        out_dir=Path(config.out_dir),
        records=list(records),
        campaigns=campaigns,
        structural_groups=structural_groups,
        contextual_campaigns=contextual,
        graphs=graphs,
        labeled_graphs=labeled_graphs,
        index=index,
        comp_lbls=comp_lbls,
        stage2_model=stage2_model,
        sigs_table=sigs_table,
        cohmap=cohmap,
        comparison=comparison,
    )
    with _stage("write"):
        _write_artifacts(config, artifacts)
    return artifacts


def _cluster_per_scope(
    index: ComponentIndex,
    graph_blocks: Sequence[set[int]],
    config: PipelineConfig,
) -> list[int]:
    """Cluster components separately inside each structural cluster.

    `graph_blocks` lists the graph ids produced for each structural cluster;
    sub-cluster labels are offset so the combined labels stay dense.
    """
    labels = [0] * len(index)
    offset = 0
    for block in graph_blocks:
        gids = [
            gid for gid in range(len(index))
            if index.gid_to_component[gid][0] in block
        ]
        if not gids:
            continue
        sub_labels = cluster_components(
            _subindex(index, gids),
            config.cut_distance,
            linkage_method=config.linkage,
        )
        for gid, lbl in zip(gids, sub_labels):
            labels[gid] = offset + lbl
        offset += max(sub_labels) + 1
    return labels


def _subindex(index: ComponentIndex, gids: Sequence[int]) -> ComponentIndex:
    remap = {gid: i for i, gid in enumerate(gids)}
    return ComponentIndex(
        long_docs={remap[gid]: index.long_docs[gid] for gid in gids},
        gid_for_communities={},
        gid_to_component={remap[gid]: index.gid_to_component[gid] for gid in gids},
        components=tuple(
            replace(index.components[gid], gid=remap[gid]) for gid in gids
        ),
    )


def _check_partition(campaigns: Sequence[Campaign], records: Sequence[EnrichedUrlRecord]):
    expected = {r.url for r in records}
    seen: set[str] = set()
    total = 0
    for campaign in campaigns:
        seen.update(campaign.urls)
        total += len(campaign.urls)
    if seen != expected or total != len(expected):
        raise InvariantViolation(
            f"campaigns do not partition the URL set "
            f"({total} memberships over {len(seen)} URLs, expected {len(expected)})"
        )


# ---------------------------------------------------------------------------
# Layer comparison
# ---------------------------------------------------------------------------

_BUCKETS = ("2", "3", "4", "5", ">5")


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    total: int
    single_url: int
    buckets: tuple[int, ...]  # campaigns with 2, 3, 4, 5, >5 URLs

    @property
    def multi_total(self) -> int:
        return sum(self.buckets)


@dataclass(frozen=True)
class ComparisonTable:
    """Structural-vs-combined campaign counts with a reduction row."""

    structural: ComparisonRow
    combined: ComparisonRow
    reductions: tuple[tuple[int, int], ...]  # (count, pct) per column

    @staticmethod
    def columns() -> tuple[str, ...]:
        return ("campaigns", "single_url") + tuple(
            f"{b}_urls" for b in _BUCKETS
        ) + ("multi_total",)


def _count_row(label: str, campaigns: Sequence[Campaign]) -> ComparisonRow:
    sizes = [len(c.urls) for c in campaigns]
    buckets = (
        sum(1 for s in sizes if s == 2),
        sum(1 for s in sizes if s == 3),
        sum(1 for s in sizes if s == 4),
        sum(1 for s in sizes if s == 5),
        sum(1 for s in sizes if s > 5),
    )
    return ComparisonRow(
        label=label,
        total=len(sizes),
        single_url=sum(1 for s in sizes if s == 1),
        buckets=buckets,
    )


def _reduction(a: int, b: int) -> tuple[int, int]:
    pct = round(100.0 * (a - b) / a) if a else 0
    return (a - b, pct)


def compare_layers(
    structural: Sequence[Campaign], combined: Sequence[Campaign]
) -> ComparisonTable:
    """Tabulate campaign counts by size for both layers plus the reduction
    (count and 100*(a-b)/a percentage) per column."""
    urls_a = set().union(*(c.urls for c in structural)) if structural else set()
    urls_b = set().union(*(c.urls for c in combined)) if combined else set()
    if urls_a != urls_b:
        raise DatasetMismatch(
            f"runs cover different URL sets ({len(urls_a)} vs {len(urls_b)} URLs)"
        )
    row_a = _count_row("structural", structural)
    row_b = _count_row("combined", combined)
    values_a = (row_a.total, row_a.single_url, *row_a.buckets, row_a.multi_total)
    values_b = (row_b.total, row_b.single_url, *row_b.buckets, row_b.multi_total)
    reductions = tuple(_reduction(a, b) for a, b in zip(values_a, values_b))
    return ComparisonTable(structural=row_a, combined=row_b, reductions=reductions)


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def _campaign_json(campaign: Campaign) -> dict:
    return {
        "campaign_id": campaign.campaign_id,
        "urls": sorted(campaign.urls),
        "components": [
            {
                "graph_id": c.graph_id,
                "label": c.label,
                "gid": c.gid,
                "urls": sorted(c.urls),
            }
            for c in campaign.components
        ],
        "sigs": {sig.value: value for sig, value in campaign.sigs.items()},
        "avg_sigs": campaign.avg_sigs,
        "lineage": {
            "structural_cluster_ids": list(campaign.lineage.structural_cluster_ids),
            "contextual_campaign_ids": list(campaign.lineage.contextual_campaign_ids),
        },
    }


def write_campaigns_json(campaigns: Sequence[Campaign], path: Path) -> None:
    payload = {"campaigns": [_campaign_json(c) for c in campaigns]}
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_sigs_csv(table: SignalStrengthTable | None, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["campaign_id", "signal", "sigs", "avg"])
        if table is None:
            return
        for campaign_id in sorted(table.per_campaign):
            avg = table.averages[campaign_id]
            for sig in table.signals:
                writer.writerow(
                    [
                        campaign_id,
                        sig.value,
                        f"{table.per_campaign[campaign_id][sig]:.6f}",
                        f"{avg:.6f}",
                    ]
                )


def write_cohmap_csv(cohmap: CoherenceMap | None, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        if cohmap is None:
            writer.writerow(["campaign_id"])
            return
        writer.writerow(["campaign_id"] + [str(i) for i in cohmap.campaign_ids])
        for campaign_id, row in zip(cohmap.campaign_ids, cohmap.scores):
            writer.writerow(
                [str(campaign_id)]
                + ["" if value is None else f"{value:.6f}" for value in row]
            )


def write_cohmap_svg(cohmap: CoherenceMap, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    n = len(cohmap.campaign_ids)
    grid = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if cohmap.scores[i][j] is not None:
                grid[i][j] = cohmap.scores[i][j]
    fig, ax = plt.subplots(figsize=(max(4, n * 0.5), max(3.2, n * 0.4)))
    image = ax.imshow(grid, cmap="viridis")
    ax.set_xticks(range(n), [str(i) for i in cohmap.campaign_ids])
    ax.set_yticks(range(n), [str(i) for i in cohmap.campaign_ids])
    ax.set_xlabel("campaign")
    ax.set_ylabel("campaign")
    fig.colorbar(image, ax=ax, label="coherence score")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_comparison_csv(table: ComparisonTable | None, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["type"] + list(ComparisonTable.columns()))
        if table is None:
            return
        for row in (table.structural, table.combined):
            writer.writerow(
                [row.label, row.total, row.single_url, *row.buckets, row.multi_total]
            )
        writer.writerow(
            ["reduction"] + [f"{count} ({pct}%)" for count, pct in table.reductions]
        )


def _manifest_parameters(config: PipelineConfig) -> dict:
    return {
        "layers": config.layers,
        "contextual_scope": config.contextual_scope,
        "error_token_threshold": config.error_token_threshold,
        "drop_all_error_text": config.drop_all_error_text,
        "ocr_sim_threshold": config.ocr_sim_threshold,
        "drop_short_tokens": config.drop_short_tokens,
        "delta": config.delta,
        "delta_ip": config.delta_ip,
        "delta_time_hours": config.delta_time_hours,
        "signals": sorted(s.value for s in config.active_signals()),
        "resolution": config.resolution,
        "community_seed": config.community_seed,
        "zero_weight_eps": config.zero_weight_eps,
        "cut_distance": config.cut_distance,
        "linkage": config.linkage,
        "structural_threshold": config.structural_threshold,
        "coherence_eps": config.coherence_eps,
        "cohmap_threshold": config.cohmap_threshold,
    }


def write_manifest(config: PipelineConfig, path: Path) -> None:
    digest = hashlib.sha256(Path(config.input_path).read_bytes()).hexdigest()
    manifest = {
        "version": __version__,
        "input": {"path": str(config.input_path), "sha256": digest},
        "parameters": _manifest_parameters(config),
    }
    path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_artifacts(config: PipelineConfig, artifacts: RunArtifacts) -> None:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wanted = set(config.artifacts)
    paths = artifacts.paths
    if "campaigns" in wanted:
        paths["campaigns"] = out_dir / "campaigns.json"
        write_campaigns_json(artifacts.campaigns, paths["campaigns"])
    if "sigs" in wanted:
        paths["sigs"] = out_dir / "sigs.csv"
        write_sigs_csv(artifacts.sigs_table, paths["sigs"])
    if "cohmap" in wanted:
        paths["cohmap"] = out_dir / "cohmap.csv"
        write_cohmap_csv(artifacts.cohmap, paths["cohmap"])
        if config.emit_svg and artifacts.cohmap is not None:
            paths["cohmap_svg"] = out_dir / "cohmap.svg"
            write_cohmap_svg(artifacts.cohmap, paths["cohmap_svg"])
    if "comparison" in wanted and artifacts.comparison is not None:
        paths["comparison"] = out_dir / "comparison.csv"
        write_comparison_csv(artifacts.comparison, paths["comparison"])
    if "manifest" in wanted:
        paths["manifest"] = out_dir / "run-manifest.json"
        write_manifest(config, paths["manifest"])
    if "graphs" in wanted:
        labels_by_graph = {
            lg.graph.graph_id: lg.labels for lg in artifacts.labeled_graphs
        }
        if config.export_dot is not None:
            export_graphs(artifacts.graphs, config.export_dot, "dot", labels_by_graph)
            paths["dot_dir"] = Path(config.export_dot)
        if config.export_graphml is not None:
            export_graphs(
                artifacts.graphs, config.export_graphml, "graphml", labels_by_graph
            )
            paths["graphml_dir"] = Path(config.export_graphml)
