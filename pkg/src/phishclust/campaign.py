"""Stage 2: global component indexing with LongDocs, hierarchical clustering
of components by document similarity, and campaign assembly.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage

from .community import LabeledUrlGraph
from .errors import InputDataError, InvariantViolation, UnknownLabel
from .records import Campaign, CampaignComponent, CampaignLineage, EnrichedUrlRecord
from .textsim import ErrorPageDictionary, TfidfModel, cosine_similarity, fit_tfidf, long_doc_text
from .unionfind import DisjointSet

LINKAGE_METHODS = ("average", "complete", "single")


@dataclass(frozen=True)
class ComponentIndex:
    """Globally indexed campaign components and their LongDocs.

    `gid_to_component` and `gid_for_communities` are mutually inverse over
    all components, and gids are dense 0..total-1 in (graph, label) order.
    `components` holds the finalized component objects in gid order.
    """

    long_docs: Mapping[int, str]
    gid_for_communities: Mapping[int, Mapping[int, int]]
    gid_to_component: Mapping[int, tuple[int, int]]
    components: tuple[CampaignComponent, ...]

    def __len__(self) -> int:
        return len(self.components)


def component_long_doc(
    component: CampaignComponent,
    records_by_url: Mapping[str, EnrichedUrlRecord],
    dictionary: ErrorPageDictionary,
    sim_threshold: float = 0.8,
) -> str:
    """Space-joined page texts of the component's URLs, in sorted URL order.

    Each URL contributes its HTML text, or the merged OCR fallback when the
    HTML is missing or an error page.
    """
    texts = []
    for url in sorted(component.urls):
        text = long_doc_text(records_by_url[url], dictionary, sim_threshold)
        if text:
            texts.append(text)
    return " ".join(texts)


def build_component_index(
    labeled_graphs: Sequence[LabeledUrlGraph],
    records: Sequence[EnrichedUrlRecord] | Mapping[str, EnrichedUrlRecord],
    dictionary: ErrorPageDictionary,
    sim_threshold: float = 0.8,
) -> ComponentIndex:
    """Assign dense global ids to every component and extract its LongDoc.

    Graphs are visited in graph_id order and components in label order, so
    the numbering is reproducible.
    """
    if isinstance(records, Mapping):
        by_url = records
    else:
        by_url = {record.url: record for record in records}
    gid = 0
    long_docs: dict[int, str] = {}
    gid_for_communities: dict[int, dict[int, int]] = {}
    gid_to_component: dict[int, tuple[int, int]] = {}
    finalized: list[CampaignComponent] = []
    for labeled in sorted(labeled_graphs, key=lambda lg: lg.graph.graph_id):
        graph_id = labeled.graph.graph_id
        label_to_gid: dict[int, int] = {}
        for component in sorted(labeled.components, key=lambda c: c.label):
            doc = component_long_doc(component, by_url, dictionary, sim_threshold)
            long_docs[gid] = doc
            label_to_gid[component.label] = gid
            gid_to_component[gid] = (graph_id, component.label)
            finalized.append(replace(component, gid=gid, long_doc=doc))
            gid += 1
        gid_for_communities[graph_id] = label_to_gid
    return ComponentIndex(
        long_docs=long_docs,
        gid_for_communities=gid_for_communities,
        gid_to_component=gid_to_component,
        components=tuple(finalized),
    )


def fit_component_tfidf(index: ComponentIndex) -> TfidfModel:
    """The stage-2 TF-IDF model over all component LongDocs."""
    docs = [(str(gid), index.long_docs[gid]) for gid in range(len(index))]
    return fit_tfidf(docs)


def component_distances(index: ComponentIndex, model: TfidfModel) -> np.ndarray:
    """Condensed cosine-distance matrix over components in gid order.

    Components without any text vectorize to zero, which makes their
    distance to everything (including each other) exactly 1.
    """
    n = len(index)
    vectors = [model.vectorize(index.long_docs[gid]) for gid in range(n)]
    condensed = np.empty(n * (n - 1) // 2, dtype=float)
    pos = 0
    for i in range(n):
        for j in range(i + 1, n):
            condensed[pos] = 1.0 - cosine_similarity(vectors[i], vectors[j])
            pos += 1
    return condensed


def cluster_components(
    index: ComponentIndex,
    cut_distance: float,
    *,
    linkage_method: str = "average",
    model: TfidfModel | None = None,
) -> list[int]:
    """Agglomerative clustering of components over LongDoc cosine distance.

    The dendrogram is cut strictly below `cut_distance` (a cut of 0 keeps
    every component alone). Labels are dense, ordered by first occurrence
    in gid order.
    """
    if linkage_method not in LINKAGE_METHODS:
        raise InputDataError(
            f"linkage must be one of {LINKAGE_METHODS}, got {linkage_method!r}"
        )
    n = len(index)
    if n == 0:
        return []
    if n == 1:
        return [0]
    if model is None:
        model = fit_component_tfidf(index)
    merges = linkage(component_distances(index, model), method=linkage_method)
    clusters = DisjointSet(range(n))
    members: list[list[int]] = [[i] for i in range(n)]
    for row in merges:
        a, b, height = int(row[0]), int(row[1]), float(row[2])
        if height < cut_distance:
            clusters.union(members[a][0], members[b][0])
        members.append(members[a] + members[b])
    labels: list[int] = []
    seen: dict[int, int] = {}
    for gid in range(n):
        root = clusters.find(gid)
        if root not in seen:
            seen[root] = len(seen)
        labels.append(seen[root])
    return labels


def components_for_campaign(
    index: ComponentIndex, comp_lbls: Sequence[int], lbl: int
) -> list[CampaignComponent]:
    """The components whose cluster label is `lbl`, in gid order."""
    gids = [gid for gid, label in enumerate(comp_lbls) if label == lbl]
    if not gids:
        raise UnknownLabel(f"label {lbl} does not occur in comp_lbls")
    out = []
    for gid in gids:
        graph_id, label = index.gid_to_component[gid]
        component = index.components[gid]
        if (component.graph_id, component.label) != (graph_id, label):
            raise InvariantViolation(f"component index is inconsistent at gid {gid}")
        out.append(component)
    return out


def assemble_campaigns(index: ComponentIndex, comp_lbls: Sequence[int]) -> list[Campaign]:
    """One campaign per distinct cluster label; campaigns partition the
    component set, and their URL sets partition the clustered URLs."""
    if len(comp_lbls) != len(index):
        raise InvariantViolation(
            f"{len(comp_lbls)} labels for {len(index)} components"
        )
    campaigns = []
    for lbl in sorted(set(comp_lbls)):
        components = components_for_campaign(index, comp_lbls, lbl)
        urls = frozenset(url for c in components for url in c.urls)
        campaigns.append(
            Campaign(
                campaign_id=lbl,
                components=tuple(components),
                urls=urls,
                lineage=CampaignLineage(contextual_campaign_ids=(lbl,)),
            )
        )
    return campaigns
