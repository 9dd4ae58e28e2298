"""Campaign quality metrics: per-signal strength tables and pairwise
coherence scores/maps.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import TooFewCampaigns
from .records import Campaign, SignalId, WeightedUrlGraph
from .textsim import TfidfModel, cosine_similarity

DEFAULT_COHERENCE_EPS = 1e-3


# ---------------------------------------------------------------------------
# Signal strength
# ---------------------------------------------------------------------------

def graph_signal_strength(graph: WeightedUrlGraph, sig: SignalId) -> float:
    """Fraction of the graph's edges the signal contributed to; 0 for
    edgeless graphs."""
    if not graph.edges:
        return 0.0
    contributed = sum(1 for edge in graph.edges if sig in graph.contributions[edge])
    return contributed / len(graph.edges)


def build_theta_cache(
    graphs: Iterable[WeightedUrlGraph], signals: Iterable[SignalId]
) -> dict[tuple[int, SignalId], float]:
    signals = sorted(signals, key=lambda s: s.value)
    return {
        (graph.graph_id, sig): graph_signal_strength(graph, sig)
        for graph in graphs
        for sig in signals
    }


def campaign_signal_strength(
    campaign: Campaign,
    sig: SignalId,
    theta_cache: Mapping[tuple[int, SignalId], float],
) -> float:
    """Average, over the campaign's components, of the strength the signal
    shows in each component's source graph."""
    if not campaign.components:
        return 0.0
    total = sum(
        theta_cache[(component.graph_id, sig)] for component in campaign.components
    )
    return total / len(campaign.components)


@dataclass(frozen=True)
class SignalStrengthTable:
    """Per-campaign signal strengths, their averages, and the per-graph
    contribution-ratio cache they were computed from."""

    signals: tuple[SignalId, ...]
    per_campaign: Mapping[int, Mapping[SignalId, float]]
    averages: Mapping[int, float]
    theta: Mapping[tuple[int, SignalId], float]


def attach_signal_strengths(
    campaigns: Sequence[Campaign],
    graphs: Sequence[WeightedUrlGraph],
    signals: Iterable[SignalId],
) -> tuple[list[Campaign], SignalStrengthTable]:
    """Compute every campaign's signal strengths and return updated
    campaigns alongside the full table."""
    ordered = tuple(sorted(signals, key=lambda s: s.value))
    theta = build_theta_cache(graphs, ordered)
    per_campaign: dict[int, dict[SignalId, float]] = {}
    averages: dict[int, float] = {}
    updated = []
    for campaign in campaigns:
        sigs = {
            sig: campaign_signal_strength(campaign, sig, theta) for sig in ordered
        }
        avg = sum(sigs.values()) / len(sigs) if sigs else 0.0
        per_campaign[campaign.campaign_id] = sigs
        averages[campaign.campaign_id] = avg
        updated.append(replace(campaign, sigs=sigs, avg_sigs=avg))
    table = SignalStrengthTable(
        signals=ordered, per_campaign=per_campaign, averages=averages, theta=theta
    )
    return updated, table


# ---------------------------------------------------------------------------
# Coherence
# ---------------------------------------------------------------------------

def intra_campaign_sim(campaign: Campaign, model: TfidfModel) -> float:
    """Average pairwise cosine over the campaign's component documents.

    A single-component campaign has no pairs and is defined as perfectly
    self-coherent (1.0).
    """
    components = campaign.components
    if len(components) <= 1:
        return 1.0
    vectors = [model.vectorize(c.long_doc) for c in components]
    total = 0.0
    pairs = 0
    for i in range(len(vectors)):
        for j in range(i + 1, len(vectors)):
            total += cosine_similarity(vectors[i], vectors[j])
            pairs += 1
    return total / pairs


def inter_campaign_sim(c_i: Campaign, c_j: Campaign, model: TfidfModel) -> float:
    """Cosine of the two campaigns' concatenated component documents."""
    doc_i = " ".join(c.long_doc for c in c_i.components if c.long_doc)
    doc_j = " ".join(c.long_doc for c in c_j.components if c.long_doc)
    return cosine_similarity(model.vectorize(doc_i), model.vectorize(doc_j))


def coherence_from_similarities(
    intra_i: float, intra_j: float, inter: float, eps: float = DEFAULT_COHERENCE_EPS
) -> float:
    """Mean intra-campaign similarity over the inter-campaign similarity,
    with the denominator floored at `eps`."""
    return ((intra_i + intra_j) / 2.0) / max(inter, eps)


def coherence_score(
    c_i: Campaign,
    c_j: Campaign,
    model: TfidfModel,
    eps: float = DEFAULT_COHERENCE_EPS,
) -> float:
    """Distinguishability of two campaigns; values below 1 are poor."""
    return coherence_from_similarities(
        intra_campaign_sim(c_i, model),
        intra_campaign_sim(c_j, model),
        inter_campaign_sim(c_i, c_j, model),
        eps,
    )


@dataclass(frozen=True)
class CoherenceMap:
    """Symmetric matrix of pairwise coherence scores (diagonal is None)."""

    campaign_ids: tuple[int, ...]
    scores: tuple[tuple[float | None, ...], ...]
    report_threshold: float
    fraction_above_threshold: float
    poor_pairs: tuple[tuple[int, int], ...]

    def score(self, id_i: int, id_j: int) -> float | None:
        i = self.campaign_ids.index(id_i)
        j = self.campaign_ids.index(id_j)
        return self.scores[i][j]


def coherence_map(
    campaigns: Sequence[Campaign],
    model: TfidfModel,
    *,
    eps: float = DEFAULT_COHERENCE_EPS,
    report_threshold: float = 500.0,
) -> CoherenceMap:
    """Coherence scores for every campaign pair, plus the fraction of pairs
    above the reporting threshold and the poorly distinguished pairs."""
    if len(campaigns) < 2:
        raise TooFewCampaigns(
            f"coherence map needs at least 2 campaigns, got {len(campaigns)}"
        )
    ordered = sorted(campaigns, key=lambda c: c.campaign_id)
    ids = tuple(c.campaign_id for c in ordered)
    intra = [intra_campaign_sim(c, model) for c in ordered]
    n = len(ordered)
    matrix: list[list[float | None]] = [[None] * n for _ in range(n)]
    above = 0
    pairs = 0
    poor = []
    for i in range(n):
        for j in range(i + 1, n):
            inter = inter_campaign_sim(ordered[i], ordered[j], model)
            score = coherence_from_similarities(intra[i], intra[j], inter, eps)
            matrix[i][j] = matrix[j][i] = score
            pairs += 1
            if score > report_threshold:
                above += 1
            if score < 1.0:
                poor.append((ids[i], ids[j]))
    return CoherenceMap(
        campaign_ids=ids,
        scores=tuple(tuple(row) for row in matrix),
        report_threshold=report_threshold,
        fraction_above_threshold=above / pairs if pairs else 0.0,
        poor_pairs=tuple(poor),
    )
