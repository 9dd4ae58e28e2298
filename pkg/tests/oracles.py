"""Independent reference implementations used only to check the library.

Everything here is deliberately written from scratch (plain dicts and
loops, no phishclust imports) so tests compare two separate derivations.
"""
from __future__ import annotations

import math
from itertools import combinations
from typing import Iterable, Mapping, Sequence


# ---------------------------------------------------------------------------
# TF-IDF arithmetic (smoothed idf, raw counts, L2 norm)
# ---------------------------------------------------------------------------

def tfidf_weights(tokens: Sequence[str], doc_freq: Mapping[str, int], num_docs: int) -> dict[str, float]:
    counts: dict[str, int] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    return {
        t: c * (math.log((1 + num_docs) / (1 + doc_freq.get(t, 0))) + 1.0)
        for t, c in counts.items()
    }


def cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    dot = sum(v * b.get(t, 0.0) for t, v in a.items())
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def corpus_doc_freq(token_docs: Sequence[Sequence[str]]) -> dict[str, int]:
    df: dict[str, int] = {}
    for tokens in token_docs:
        for t in set(tokens):
            df[t] = df.get(t, 0) + 1
    return df


# ---------------------------------------------------------------------------
# Set partitions and weighted modularity
# ---------------------------------------------------------------------------

def set_partitions(items: Sequence) -> Iterable[list[list]]:
    """All partitions of a sequence (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1:]
        yield [[first]] + partial


def modularity_oracle(
    nodes: Sequence[str],
    edge_weights: Mapping[tuple[str, str], float],
    partition: Sequence[Iterable[str]],
    resolution: float = 1.0,
) -> float:
    """Direct double-sum modularity of a node partition (no self-loops)."""
    community = {}
    for label, part in enumerate(partition):
        for node in part:
            community[node] = label
    degree = {n: 0.0 for n in nodes}
    m = 0.0
    for (a, b), w in edge_weights.items():
        degree[a] += w
        degree[b] += w
        m += w
    if m == 0.0:
        return 0.0
    q = 0.0
    for (a, b), w in edge_weights.items():
        if community[a] == community[b]:
            q += w / m  # both (a,b) and (b,a) directions of 2*w_ab/(2m)
    for a in nodes:
        for b in nodes:
            if community[a] == community[b]:
                q -= resolution * degree[a] * degree[b] / (4.0 * m * m)
    return q


def best_partition_modularity(
    nodes: Sequence[str],
    edge_weights: Mapping[tuple[str, str], float],
    resolution: float = 1.0,
) -> tuple[float, list[list[str]]]:
    best_q = -math.inf
    best = []
    for partition in set_partitions(list(nodes)):
        q = modularity_oracle(nodes, edge_weights, partition, resolution)
        if q > best_q:
            best_q, best = q, partition
    return best_q, best


# ---------------------------------------------------------------------------
# Brute-force agglomerative clustering over a precomputed distance matrix
# ---------------------------------------------------------------------------

def agglomerate(
    distances: Mapping[tuple[int, int], float],
    n: int,
    cut: float,
    method: str = "average",
) -> list[int]:
    """Merge the closest cluster pair until the best merge reaches the cut.

    Cluster distance is the average (or max/min) of member pair distances.
    Returns dense labels ordered by first occurrence.
    """

    def pair_distance(ca: list[int], cb: list[int]) -> float:
        values = [
            distances[(min(i, j), max(i, j))] for i in ca for j in cb
        ]
        if method == "average":
            return sum(values) / len(values)
        if method == "complete":
            return max(values)
        return min(values)

    clusters: list[list[int]] = [[i] for i in range(n)]
    while len(clusters) > 1:
        best = None
        best_d = math.inf
        for a, b in combinations(range(len(clusters)), 2):
            d = pair_distance(clusters[a], clusters[b])
            if d < best_d - 1e-15:
                best_d, best = d, (a, b)
        if best is None or best_d >= cut:
            break
        a, b = best
        merged = clusters[a] + clusters[b]
        clusters = [c for i, c in enumerate(clusters) if i not in (a, b)]
        clusters.append(merged)
    labels = [0] * n
    assignment = {}
    for cluster in clusters:
        for idx in cluster:
            assignment[idx] = min(cluster)
    seen: dict[int, int] = {}
    for i in range(n):
        root = assignment[i]
        if root not in seen:
            seen[root] = len(seen)
        labels[i] = seen[root]
    return labels
