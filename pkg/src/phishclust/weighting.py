"""Stage 1 edge weighting: evaluate every active signal on every edge of a
URL graph and accumulate integer weights plus a per-signal contribution
ledger.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import timedelta
from typing import Mapping, Sequence

from .errors import InputDataError
from .records import ALL_SIGNALS, EnrichedUrlRecord, SignalId, WeightedUrlGraph
from .textsim import (
    ErrorPageDictionary,
    TfidfModel,
    TfidfVector,
    cosine_similarity,
    is_error_page,
    load_error_dictionary,
    merge_ocr,
)

VALUE_SIGNAL_FIELDS: dict[SignalId, str] = {
    SignalId.DNS: "dns",
    SignalId.REVERSE_DNS: "reverse_dns",
    SignalId.GEO_IP: "geoip",
    SignalId.COUNTRY_CODE: "country_code",
    SignalId.TARGET: "target",
}


@dataclass(frozen=True)
class WeightingConfig:
    """Thresholds and the active signal set for edge weighting.

    `delta` gates textual cosine similarities, `delta_ip` splits the
    shared-IP count into the +1/+2 tiers, and `delta_time` bounds the
    submission-time difference. The error dictionary and OCR merge threshold
    control how per-URL text documents are derived.
    """

    delta: float = 0.6
    delta_ip: int = 3
    delta_time: timedelta = timedelta(hours=72)
    active_signals: frozenset[SignalId] = ALL_SIGNALS
    error_dict: ErrorPageDictionary = field(default_factory=load_error_dictionary)
    ocr_sim_threshold: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise InputDataError(f"delta must be in (0, 1], got {self.delta}")
        if self.delta_ip < 1:
            raise InputDataError(f"delta_ip must be >= 1, got {self.delta_ip}")
        if self.delta_time <= timedelta(0):
            raise InputDataError(f"delta_time must be positive, got {self.delta_time}")
        if not self.active_signals:
            raise InputDataError("active_signals must not be empty")
        object.__setattr__(self, "active_signals", frozenset(self.active_signals))


def html_doc(record: EnrichedUrlRecord, cfg: WeightingConfig) -> str:
    """Error-filtered page text: empty when absent or an error page."""
    if record.html_text is None or is_error_page(record.html_text, cfg.error_dict):
        return ""
    return record.html_text


def ocr_doc(record: EnrichedUrlRecord, cfg: WeightingConfig) -> str:
    merged = merge_ocr(record.ocr_text_own, record.ocr_text_pt, cfg.ocr_sim_threshold)
    return merged if merged is not None else ""


def url_token_doc(record: EnrichedUrlRecord) -> str:
    return " ".join(record.url_tokens)


def build_stage1_corpus(
    records: Sequence[EnrichedUrlRecord], cfg: WeightingConfig
) -> list[tuple[str, str]]:
    """Per-URL documents for the shared stage-1 TF-IDF space.

    Every record contributes three documents (URL tokens, filtered HTML,
    merged OCR), empty ones included, so document frequencies cover the
    whole run.
    """
    corpus = []
    for record in records:
        corpus.append((record.url + "#url", url_token_doc(record)))
        corpus.append((record.url + "#html", html_doc(record, cfg)))
        corpus.append((record.url + "#ocr", ocr_doc(record, cfg)))
    return corpus


@dataclass(frozen=True)
class UrlVectors:
    """Cached per-URL vectors for the three textual signals."""

    url: TfidfVector
    html: TfidfVector
    ocr: TfidfVector


def vectorize_record(
    record: EnrichedUrlRecord, cfg: WeightingConfig, model: TfidfModel
) -> UrlVectors:
    return UrlVectors(
        url=model.vectorize(url_token_doc(record)),
        html=model.vectorize(html_doc(record, cfg)),
        ocr=model.vectorize(ocr_doc(record, cfg)),
    )


def _textual_contribution(
    sig: SignalId, va: UrlVectors, vb: UrlVectors, delta: float
) -> int:
    pair = {
        SignalId.URL_TOKEN: (va.url, vb.url),
        SignalId.HTML_TEXT: (va.html, vb.html),
        SignalId.OCR_TEXT: (va.ocr, vb.ocr),
    }[sig]
    return 1 if cosine_similarity(*pair) >= delta else 0


def signal_contribution(
    sig: SignalId,
    u_a: EnrichedUrlRecord,
    u_b: EnrichedUrlRecord,
    cfg: WeightingConfig,
    tfidf: TfidfModel,
    vectors: Mapping[str, UrlVectors] | None = None,
) -> int:
    """Weight increment one signal adds to the edge between two URLs.

    Textual signals add 1 when the cosine of their vectors reaches `delta`;
    comparable-value signals add 1 on (case-insensitive) equality; the
    shared-IP count adds 1, or 2 above `delta_ip`; submission times add 1
    when closer than `delta_time`. Absent values never match.
    """
    if sig is SignalId.IP_COUNT:
        n = len(u_a.ips & u_b.ips)
        if n == 0:
            return 0
        return 2 if n > cfg.delta_ip else 1
    if sig is SignalId.SUBMISSION_TIME:
        return 1 if abs(u_a.submission_time - u_b.submission_time) < cfg.delta_time else 0
    if sig in VALUE_SIGNAL_FIELDS:
        a = getattr(u_a, VALUE_SIGNAL_FIELDS[sig])
        b = getattr(u_b, VALUE_SIGNAL_FIELDS[sig])
        if a is None or b is None:
            return 0
        return 1 if a.lower() == b.lower() else 0
    if vectors is not None:
        va, vb = vectors[u_a.url], vectors[u_b.url]
    else:
        va = vectorize_record(u_a, cfg, tfidf)
        vb = vectorize_record(u_b, cfg, tfidf)
    return _textual_contribution(sig, va, vb, cfg.delta)


def weigh_graph(
    graph: WeightedUrlGraph,
    records: Sequence[EnrichedUrlRecord] | Mapping[str, EnrichedUrlRecord],
    cfg: WeightingConfig,
    tfidf: TfidfModel,
) -> WeightedUrlGraph:
    """Evaluate all active signals on every edge of one graph.

    Each edge weight is the sum of the per-signal increments, and the
    contribution ledger records every signal with a non-zero increment.
    """
    if isinstance(records, Mapping):
        by_url = records
    else:
        by_url = {record.url: record for record in records}
    vectors = {
        url: vectorize_record(by_url[url], cfg, tfidf) for url in sorted(graph.nodes)
    }
    weights: dict = {}
    contributions: dict = {}
    for edge in graph.edges:
        u_a, u_b = by_url[edge[0]], by_url[edge[1]]
        total = 0
        contributing = set()
        for sig in sorted(cfg.active_signals, key=lambda s: s.value):
            increment = signal_contribution(sig, u_a, u_b, cfg, tfidf, vectors)
            if increment:
                total += increment
                contributing.add(sig)
        weights[edge] = total
        contributions[edge] = frozenset(contributing)
    return WeightedUrlGraph(
        graph_id=graph.graph_id,
        nodes=graph.nodes,
        edges=graph.edges,
        weights=weights,
        contributions=contributions,
    )
