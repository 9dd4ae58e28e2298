"""URL-IP bipartite graph construction, projection to URL graphs, and
DOT/GraphML export of (weighted, optionally labeled) URL graphs.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .records import EnrichedUrlRecord, WeightedUrlGraph, make_edge
from .unionfind import DisjointSet

_IPV4_RE = re.compile(r"^\d{1,3}(\.\d{1,3}){3}$")


def canonical_ip(ip: str) -> str:
    """Canonical string form of an IP: IPv4 octets lose leading zeros,
    anything else (IPv6, opaque values) is lowercased."""
    ip = ip.strip()
    if _IPV4_RE.match(ip):
        return ".".join(str(int(octet)) for octet in ip.split("."))
    return ip.lower()


@dataclass(frozen=True)
class BipartiteGraph:
    """URL nodes, IP nodes, and url->ip membership edges."""

    url_nodes: tuple[str, ...]
    ip_nodes: tuple[str, ...]
    memberships: Mapping[str, frozenset[str]]

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [
            (url, ip)
            for url in self.url_nodes
            for ip in sorted(self.memberships[url])
        ]


def build_bipartite(records: Sequence[EnrichedUrlRecord]) -> BipartiteGraph:
    """One node per URL and per distinct IP; an edge wherever a record lists
    the IP. URLs without IPs become isolated URL nodes."""
    memberships = {
        record.url: frozenset(canonical_ip(ip) for ip in record.ips)
        for record in records
    }
    ips = sorted({ip for member_ips in memberships.values() for ip in member_ips})
    return BipartiteGraph(
        url_nodes=tuple(sorted(memberships)),
        ip_nodes=tuple(ips),
        memberships=memberships,
    )


def project_url_graphs(bipartite: BipartiteGraph) -> list[WeightedUrlGraph]:
    """Link URLs that share at least one IP and split into connected
    components, one zero-weight graph per component.

    Graph ids are assigned by descending node count, ties broken by the
    lexicographically smallest member URL.
    """
    by_ip: dict[str, list[str]] = {}
    for url in bipartite.url_nodes:
        for ip in bipartite.memberships[url]:
            by_ip.setdefault(ip, []).append(url)

    edges: set[tuple[str, str]] = set()
    components = DisjointSet(bipartite.url_nodes)
    for ip in sorted(by_ip):
        bucket = sorted(by_ip[ip])
        for a, b in combinations(bucket, 2):
            edges.add(make_edge(a, b))
            components.union(a, b)

    graphs = []
    for members in components.groups().values():
        nodes = frozenset(members)
        component_edges = tuple(sorted(e for e in edges if e[0] in nodes))
        graphs.append((nodes, component_edges))
    graphs.sort(key=lambda item: (-len(item[0]), min(item[0])))
    return [
        WeightedUrlGraph(
            graph_id=graph_id,
            nodes=nodes,
            edges=component_edges,
            weights={e: 0 for e in component_edges},
            contributions={e: frozenset() for e in component_edges},
        )
        for graph_id, (nodes, component_edges) in enumerate(graphs)
    ]


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _edge_attrs(graph: WeightedUrlGraph, edge) -> dict:
    signals = ",".join(sorted(s.value for s in graph.contributions[edge]))
    return {"weight": graph.weights[edge], "signals": signals}


def graph_to_dot(graph: WeightedUrlGraph, labels: Mapping[str, int] | None = None) -> str:
    """Render one URL graph as an undirected DOT document."""
    lines = [f"graph g{graph.graph_id} {{"]
    for url in sorted(graph.nodes):
        attrs = [f'url="{url}"']
        if labels is not None:
            attrs.append(f'component={labels[url]}')
        lines.append(f'  "{url}" [{", ".join(attrs)}];')
    for edge in graph.edges:
        attrs = _edge_attrs(graph, edge)
        lines.append(
            f'  "{edge[0]}" -- "{edge[1]}" '
            f'[weight={attrs["weight"]}, signals="{attrs["signals"]}"];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_graphml(graph: WeightedUrlGraph, labels: Mapping[str, int] | None = None) -> str:
    import networkx as nx

    g = nx.Graph()
    for url in sorted(graph.nodes):
        attrs = {"url": url}
        if labels is not None:
            attrs["component"] = int(labels[url])
        g.add_node(url, **attrs)
    for edge in graph.edges:
        g.add_edge(*edge, **_edge_attrs(graph, edge))
    return "\n".join(nx.generate_graphml(g, named_key_ids=True)) + "\n"


def export_graphs(
    graphs: Iterable[WeightedUrlGraph],
    out_dir: str | Path,
    fmt: str,
    labels_by_graph: Mapping[int, Mapping[str, int]] | None = None,
) -> list[Path]:
    """Write one DOT or GraphML file per graph; returns the written paths."""
    if fmt not in ("dot", "graphml"):
        raise ValueError(f"unknown graph export format {fmt!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    render = graph_to_dot if fmt == "dot" else graph_to_graphml
    written = []
    for graph in graphs:
        labels = (labels_by_graph or {}).get(graph.graph_id)
        path = out_dir / f"graph_{graph.graph_id:04d}.{fmt}"
        path.write_text(render(graph, labels), encoding="utf-8")
        written.append(path)
    return written
