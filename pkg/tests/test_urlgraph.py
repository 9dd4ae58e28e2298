import random
import string
from itertools import combinations

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishclust.urlgraph import (
    build_bipartite,
    canonical_ip,
    export_graphs,
    graph_to_dot,
    graph_to_graphml,
    project_url_graphs,
)

from conftest import make_record


def _project(records):
    return project_url_graphs(build_bipartite(records))


def test_canonical_ip():
    assert canonical_ip("010.001.1.1") == "10.1.1.1"
    assert canonical_ip("168.10.10.2") == "168.10.10.2"
    assert canonical_ip("2001:DB8::A") == "2001:db8::a"
    assert canonical_ip(" 8.8.8.8 ") == "8.8.8.8"


def test_bipartite_table1(table1_records):
    bipartite = build_bipartite(table1_records)
    assert set(bipartite.edges) == {
        ("aws-amazon.net.au", "198.111.0.59"),
        ("s286.paypal-login.net", "168.10.10.2"),
        ("s8790.paypal-login.net", "168.10.10.2"),
    }


def test_bipartite_degree_and_empty():
    record = make_record("x.com", ips={"1.1.1.1", "2.2.2.2", "3.3.3.3"})
    bipartite = build_bipartite([record])
    assert len(bipartite.memberships["x.com"]) == 3
    empty = build_bipartite([])
    assert empty.url_nodes == () and empty.ip_nodes == ()


def test_project_table1(table1_records):
    graphs = _project(table1_records)
    assert len(graphs) == 2
    assert graphs[0].nodes == frozenset({"s286.paypal-login.net", "s8790.paypal-login.net"})
    assert graphs[0].edges == (("s286.paypal-login.net", "s8790.paypal-login.net"),)
    assert graphs[1].nodes == frozenset({"aws-amazon.net.au"})
    assert graphs[1].edges == ()
    assert all(w == 0 for g in graphs for w in g.weights.values())


def test_project_shared_ip_triangle():
    records = [make_record(f"u{i}.com", ips={"9.9.9.9"}) for i in range(3)]
    [graph] = _project(records)
    assert graph.num_edges == 3


def test_project_star_is_one_component():
    u1 = make_record("u1.com", ips={"1.1.1.1", "2.2.2.2"})
    u2 = make_record("u2.com", ips={"1.1.1.1"})
    u3 = make_record("u3.com", ips={"2.2.2.2"})
    [graph] = _project([u1, u2, u3])
    assert graph.nodes == frozenset({"u1.com", "u2.com", "u3.com"})
    assert graph.edges == (("u1.com", "u2.com"), ("u1.com", "u3.com"))


def test_isolated_urls_become_singletons():
    records = [make_record("a.com"), make_record("b.com", ips={"1.1.1.1"})]
    graphs = _project(records)
    assert [sorted(g.nodes) for g in graphs] == [["a.com"], ["b.com"]]


def test_graph_id_ordering_size_then_url():
    records = [
        make_record("z1.com", ips={"1.1.1.1"}),
        make_record("z2.com", ips={"1.1.1.1"}),
        make_record("a1.com", ips={"2.2.2.2"}),
        make_record("a2.com", ips={"2.2.2.2"}),
        make_record("m.com", ips={"3.3.3.3"}),
    ]
    graphs = _project(records)
    assert [min(g.nodes) for g in graphs] == ["a1.com", "z1.com", "m.com"]
    assert [g.graph_id for g in graphs] == [0, 1, 2]


def _random_records(rng, n_urls, n_ips):
    records = []
    for i in range(n_urls):
        ips = {
            f"10.0.0.{rng.randrange(n_ips)}" for _ in range(rng.randrange(3))
        }
        records.append(make_record(f"u{i}.com", ips=ips))
    return records


def test_projection_matches_brute_force_and_is_order_invariant():
    rng = random.Random(7)
    for _ in range(60):
        records = _random_records(rng, rng.randrange(1, 9), rng.randrange(1, 5))
        graphs = _project(records)
        expected_edges = {
            (min(a.url, b.url), max(a.url, b.url))
            for a, b in combinations(records, 2)
            if a.ips & b.ips
        }
        produced = {e for g in graphs for e in g.edges}
        assert produced == expected_edges
        # node-disjoint graphs covering every url
        all_nodes = [u for g in graphs for u in g.nodes]
        assert len(all_nodes) == len(set(all_nodes)) == len(records)
        # record order never matters
        shuffled = records[:]
        rng.shuffle(shuffled)
        again = {e for g in _project(shuffled) for e in g.edges}
        assert again == produced


@settings(max_examples=100)
@given(st.lists(st.sets(st.sampled_from(["a", "b", "c", "d"]), max_size=3),
                min_size=1, max_size=6))
def test_every_edge_is_witnessed(ip_sets):
    records = [
        make_record(f"u{i}.com", ips={f"10.0.0.{ord(c) - 97}" for c in ips})
        for i, ips in enumerate(ip_sets)
    ]
    by_url = {r.url: r for r in records}
    for graph in _project(records):
        for a, b in graph.edges:
            assert by_url[a].ips & by_url[b].ips


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_dot_export_contains_nodes_edges_and_labels(table1_records):
    graphs = _project(table1_records)
    dot = graph_to_dot(graphs[0], labels={"s286.paypal-login.net": 0,
                                          "s8790.paypal-login.net": 0})
    assert '"s286.paypal-login.net"' in dot
    assert "--" in dot and "component=0" in dot and "weight=0" in dot


def test_graphml_export_parses_back(table1_records):
    graphs = _project(table1_records)
    text = graph_to_graphml(graphs[0])
    parsed = nx.parse_graphml(text)
    assert set(parsed.nodes) == set(graphs[0].nodes)
    assert parsed.number_of_edges() == graphs[0].num_edges


def test_export_graphs_writes_files(tmp_path, table1_records):
    graphs = _project(table1_records)
    dot_paths = export_graphs(graphs, tmp_path / "dot", "dot")
    xml_paths = export_graphs(graphs, tmp_path / "gml", "graphml")
    assert [p.name for p in dot_paths] == ["graph_0000.dot", "graph_0001.dot"]
    assert all(p.exists() for p in dot_paths + xml_paths)
    with pytest.raises(ValueError):
        export_graphs(graphs, tmp_path, "gexf")
