"""The structural layer: DOM tag-vector clustering by proportional distance,
and its composition with contextual campaigns.
"""
from __future__ import annotations

from typing import Mapping, Sequence

from .errors import CoverageMismatch, InputDataError
from .records import Campaign, CampaignLineage, EnrichedUrlRecord
from .unionfind import DisjointSet


def proportional_distance(a: Mapping[str, int], b: Mapping[str, int]) -> float:
    """Sum of absolute tag-count differences over the total tag count of
    both pages; 0 when both are empty."""
    total = sum(a.values()) + sum(b.values())
    if total == 0:
        return 0.0
    diff = sum(abs(a.get(tag, 0) - b.get(tag, 0)) for tag in set(a) | set(b))
    return diff / total


def structural_clusters(
    records: Sequence[EnrichedUrlRecord], threshold: float
) -> list[frozenset[str]]:
    """Group URLs whose tag vectors sit closer than the threshold.

    Similarity is transitive: clusters are the connected components of the
    pairwise-similarity graph. URLs with no tag counts stay singletons.
    Clusters come out ordered by descending size, then smallest URL.
    """
    if not 0.0 < threshold < 1.0:
        raise InputDataError(f"structural threshold must be in (0, 1), got {threshold}")
    clusters = DisjointSet(record.url for record in records)
    tagged = sorted(
        (record for record in records if record.tag_counts), key=lambda r: r.url
    )
    for i, a in enumerate(tagged):
        for b in tagged[i + 1:]:
            if proportional_distance(a.tag_counts, b.tag_counts) < threshold:
                clusters.union(a.url, b.url)
    groups = [frozenset(members) for members in clusters.groups().values()]
    groups.sort(key=lambda urls: (-len(urls), min(urls)))
    return groups


def structural_campaigns(clusters: Sequence[frozenset[str]]) -> list[Campaign]:
    """Wrap structural clusters as campaigns (no components, no signals)."""
    return [
        Campaign(
            campaign_id=i,
            components=(),
            urls=urls,
            lineage=CampaignLineage(structural_cluster_ids=(i,)),
        )
        for i, urls in enumerate(clusters)
    ]


def compose_layers(
    structural: Sequence[frozenset[str]], contextual: Sequence[Campaign]
) -> list[Campaign]:
    """Merge structural clusters that share a contextual campaign.

    Union-find over structural clusters: every contextual campaign welds
    together all structural clusters its URLs touch. Because merging is the
    only operation, the output never has more campaigns than the structural
    layer. Each final campaign carries the ids of the structural clusters
    and contextual campaigns it absorbed.
    """
    structural_urls = set().union(*structural) if structural else set()
    contextual_urls = set().union(*(c.urls for c in contextual)) if contextual else set()
    if structural_urls != contextual_urls:
        raise CoverageMismatch(
            "structural and contextual layers cover different URL sets "
            f"({len(structural_urls)} vs {len(contextual_urls)} URLs)"
        )

    cluster_of: dict[str, int] = {}
    for cluster_id, urls in enumerate(structural):
        for url in urls:
            cluster_of[url] = cluster_id
    merged = DisjointSet(range(len(structural)))
    for campaign in contextual:
        touched = sorted({cluster_of[url] for url in campaign.urls})
        for other in touched[1:]:
            merged.union(touched[0], other)

    groups = sorted(merged.groups().values(), key=lambda ids: min(ids))
    campaigns = []
    entries = []
    for cluster_ids in groups:
        id_set = set(cluster_ids)
        urls = frozenset(url for cid in cluster_ids for url in structural[cid])
        member_campaigns = [c for c in contextual if cluster_of[next(iter(c.urls))] in id_set]
        components = tuple(
            component for c in member_campaigns for component in c.components
        )
        lineage = CampaignLineage(
            structural_cluster_ids=tuple(sorted(cluster_ids)),
            contextual_campaign_ids=tuple(sorted(c.campaign_id for c in member_campaigns)),
        )
        entries.append((urls, components, lineage))
    entries.sort(key=lambda item: (-len(item[0]), min(item[0])))
    for campaign_id, (urls, components, lineage) in enumerate(entries):
        campaigns.append(
            Campaign(
                campaign_id=campaign_id,
                components=components,
                urls=urls,
                lineage=lineage,
            )
        )
    return campaigns
