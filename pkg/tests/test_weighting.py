import random
from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phishclust.errors import InputDataError
from phishclust.records import ALL_SIGNALS, SignalId
from phishclust.textsim import cosine_similarity, fit_tfidf
from phishclust.urlgraph import build_bipartite, project_url_graphs
from phishclust.weighting import (
    WeightingConfig,
    build_stage1_corpus,
    signal_contribution,
    vectorize_record,
    weigh_graph,
)

from conftest import TS, make_record

# Frozen from an independent hand computation over the 9-document stage-1
# corpus of the three example records (url/html/ocr docs per record):
# the url-token cosine of the paypal pair lands just under 0.6, the html
# cosine far under, so neither contributes at delta = 0.6.
TABLE1_URL_COSINE = 0.5999374482869262
TABLE1_HTML_COSINE = 0.16257570006425126


def _stage1_model(records, cfg):
    return fit_tfidf(build_stage1_corpus(records, cfg))


def test_config_validation():
    with pytest.raises(InputDataError):
        WeightingConfig(delta=0.0)
    with pytest.raises(InputDataError):
        WeightingConfig(delta_ip=0)
    with pytest.raises(InputDataError):
        WeightingConfig(delta_time=timedelta(0))
    with pytest.raises(InputDataError):
        WeightingConfig(active_signals=frozenset())


def test_ip_count_two_tier_rule():
    cfg = WeightingConfig(delta_ip=3)
    model = _stage1_model([make_record("a.com"), make_record("b.com")], cfg)
    a5 = make_record("a.com", ips={f"10.0.0.{i}" for i in range(5)})
    b5 = make_record("b.com", ips={f"10.0.0.{i}" for i in range(5)})
    assert signal_contribution(SignalId.IP_COUNT, a5, b5, cfg, model) == 2  # n=5 > 3
    a1 = make_record("a.com", ips={"10.0.0.1"})
    b1 = make_record("b.com", ips={"10.0.0.1", "10.0.0.2"})
    assert signal_contribution(SignalId.IP_COUNT, a1, b1, cfg, model) == 1  # n=1
    a3 = make_record("a.com", ips={"10.0.0.1", "10.0.0.2", "10.0.0.3"})
    b3 = make_record("b.com", ips={"10.0.0.1", "10.0.0.2", "10.0.0.3"})
    assert signal_contribution(SignalId.IP_COUNT, a3, b3, cfg, model) == 1  # n = delta_ip


def test_target_equality_rule():
    cfg = WeightingConfig()
    model = _stage1_model([make_record("a.com"), make_record("b.com")], cfg)
    paypal = make_record("a.com", target="Paypal")
    paypal2 = make_record("b.com", target="Paypal")
    other = make_record("b.com", target="Other")
    assert signal_contribution(SignalId.TARGET, paypal, paypal2, cfg, model) == 1
    assert signal_contribution(SignalId.TARGET, paypal, other, cfg, model) == 0
    upper = make_record("b.com", target="PAYPAL")
    assert signal_contribution(SignalId.TARGET, paypal, upper, cfg, model) == 1


def test_absent_values_never_match():
    cfg = WeightingConfig()
    model = _stage1_model([make_record("a.com"), make_record("b.com")], cfg)
    a = make_record("a.com")
    b = make_record("b.com", dns="ns1.x.net", target="Paypal")
    for sig in (SignalId.DNS, SignalId.REVERSE_DNS, SignalId.GEO_IP,
                SignalId.COUNTRY_CODE, SignalId.TARGET):
        assert signal_contribution(sig, a, b, cfg, model) == 0


def test_submission_time_threshold():
    model = _stage1_model([make_record("a.com"), make_record("b.com")],
                          WeightingConfig())
    a = make_record("a.com", submission_time=TS.replace(hour=10))
    b = make_record("b.com", submission_time=TS.replace(hour=10, minute=30))
    hour = WeightingConfig(delta_time=timedelta(hours=1))
    ten_min = WeightingConfig(delta_time=timedelta(minutes=10))
    assert signal_contribution(SignalId.SUBMISSION_TIME, a, b, hour, model) == 1
    assert signal_contribution(SignalId.SUBMISSION_TIME, a, b, ten_min, model) == 0


def test_absent_text_contributes_zero():
    cfg = WeightingConfig()
    a = make_record("a.com", html_text="paypal login")
    b = make_record("b.com")
    model = _stage1_model([a, b], cfg)
    assert signal_contribution(SignalId.HTML_TEXT, a, b, cfg, model) == 0
    assert signal_contribution(SignalId.OCR_TEXT, a, b, cfg, model) == 0


def test_error_page_html_is_treated_as_absent():
    cfg = WeightingConfig()
    a = make_record("a.com", html_text="404 not found")
    b = make_record("b.com", html_text="404 not found")
    model = _stage1_model([a, b], cfg)
    assert signal_contribution(SignalId.HTML_TEXT, a, b, cfg, model) == 0


def test_weigh_graph_table1_edge(table1_records):
    cfg = WeightingConfig(
        delta=0.6,
        delta_ip=3,
        active_signals=frozenset({
            SignalId.IP_COUNT, SignalId.TARGET, SignalId.URL_TOKEN, SignalId.HTML_TEXT,
        }),
    )
    model = _stage1_model(table1_records, cfg)
    u1, u2 = table1_records[0], table1_records[1]
    va, vb = vectorize_record(u1, cfg, model), vectorize_record(u2, cfg, model)
    assert cosine_similarity(va.url, vb.url) == pytest.approx(TABLE1_URL_COSINE, abs=1e-12)
    assert cosine_similarity(va.html, vb.html) == pytest.approx(TABLE1_HTML_COSINE, abs=1e-12)

    [paypal_graph, singleton] = project_url_graphs(build_bipartite(table1_records))
    weighted = weigh_graph(paypal_graph, table1_records, cfg, model)
    edge = weighted.edges[0]
    assert weighted.weights[edge] == 2
    assert weighted.contributions[edge] == frozenset({SignalId.IP_COUNT, SignalId.TARGET})
    assert weigh_graph(singleton, table1_records, cfg, model).edges == ()


def test_ip_count_only_weights(table1_records):
    cfg = WeightingConfig(active_signals=frozenset({SignalId.IP_COUNT}))
    model = _stage1_model(table1_records, cfg)
    graphs = project_url_graphs(build_bipartite(table1_records))
    for graph in graphs:
        weighted = weigh_graph(graph, table1_records, cfg, model)
        for edge in weighted.edges:
            assert weighted.weights[edge] in (1, 2)


# ---------------------------------------------------------------------------
# randomized properties
# ---------------------------------------------------------------------------

_VOCAB = ["paypal", "login", "secure", "update", "verify", "bank", "mail", "cloud"]


def _random_record(rng, url):
    return make_record(
        url,
        ips={f"10.0.0.{rng.randrange(4)}" for _ in range(rng.randrange(1, 4))},
        dns=rng.choice([None, "ns1.a.net", "ns2.b.net"]),
        reverse_dns=rng.choice([None, "rev.a.net"]),
        geoip=rng.choice([None, "osaka", "lyon"]),
        country_code=rng.choice([None, "US", "AU"]),
        target=rng.choice([None, "Paypal", "Other"]),
        html_text=rng.choice([None, " ".join(rng.choices(_VOCAB, k=5))]),
        ocr_text_own=rng.choice([None, " ".join(rng.choices(_VOCAB, k=4))]),
        submission_time=TS + timedelta(hours=rng.randrange(0, 200)),
    )


def test_contribution_symmetry_randomized():
    rng = random.Random(11)
    cfg = WeightingConfig()
    for _ in range(100):
        a, b = _random_record(rng, "a.com"), _random_record(rng, "b.com")
        model = _stage1_model([a, b], cfg)
        for sig in ALL_SIGNALS:
            assert signal_contribution(sig, a, b, cfg, model) == \
                signal_contribution(sig, b, a, cfg, model)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(min_value=0.05, max_value=0.95))
def test_weight_bounds_and_signal_monotonicity(seed, delta):
    rng = random.Random(seed)
    records = [_random_record(rng, f"u{i}.com") for i in range(rng.randrange(2, 6))]
    signals = sorted(ALL_SIGNALS, key=lambda s: s.value)
    k = rng.randrange(1, len(signals))
    smaller = frozenset(rng.sample(signals, k))
    larger = smaller | {rng.choice(signals)}
    cfg_small = WeightingConfig(delta=delta, active_signals=smaller)
    cfg_large = WeightingConfig(delta=delta, active_signals=larger)
    model = _stage1_model(records, cfg_small)
    for graph in project_url_graphs(build_bipartite(records)):
        small = weigh_graph(graph, records, cfg_small, model)
        large = weigh_graph(graph, records, cfg_large, model)
        for edge in graph.edges:
            bound = len(smaller) + (1 if SignalId.IP_COUNT in smaller else 0)
            assert 0 <= small.weights[edge] <= bound
            assert large.weights[edge] >= small.weights[edge]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000),
       st.floats(min_value=0.05, max_value=0.9),
       st.floats(min_value=0.01, max_value=0.1))
def test_raising_delta_never_increases_textual_contribution(seed, delta, bump):
    rng = random.Random(seed)
    a, b = _random_record(rng, "a.com"), _random_record(rng, "b.com")
    low = WeightingConfig(delta=delta)
    high = WeightingConfig(delta=min(1.0, delta + bump))
    model = _stage1_model([a, b], low)
    for sig in (SignalId.URL_TOKEN, SignalId.HTML_TEXT, SignalId.OCR_TEXT):
        assert signal_contribution(sig, a, b, high, model) <= \
            signal_contribution(sig, a, b, low, model)
