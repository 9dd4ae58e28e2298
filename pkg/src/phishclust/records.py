"""Domain types shared across the pipeline.

All types are immutable after construction and safe to share read-only
across parallel workers.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum, unique
from typing import Mapping

from .errors import InvariantViolation, MissingRequiredField


@unique
class SignalId(str, Enum):
    """Per-URL attributes that can vouch for the similarity of two URLs.

    The string values are the names used in CLI flags and CSV output.
    """

    URL_TOKEN = "url"
    HTML_TEXT = "html"
    OCR_TEXT = "ocr"
    IP_COUNT = "ip_count"
    DNS = "dns"
    REVERSE_DNS = "reversedns"
    GEO_IP = "geoip"
    COUNTRY_CODE = "countrycode"
    TARGET = "target"
    SUBMISSION_TIME = "submission_time"

    def __str__(self) -> str:
        return self.value


ALL_SIGNALS: frozenset[SignalId] = frozenset(SignalId)

TEXTUAL_SIGNALS: frozenset[SignalId] = frozenset(
    {SignalId.URL_TOKEN, SignalId.HTML_TEXT, SignalId.OCR_TEXT}
)


def parse_signal(name: str) -> SignalId:
    """Resolve a signal name as used on the command line."""
    try:
        return SignalId(name.strip().lower())
    except ValueError:
        valid = ", ".join(s.value for s in SignalId)
        raise ValueError(f"unknown signal {name!r}; expected one of: {valid}") from None


@dataclass(frozen=True)
class EnrichedUrlRecord:
    """One phishing URL instance plus every signal value known for it.

    `url` is the unique key. `ips` may be empty, in which case the URL joins
    no URL graph and ends up a singleton component. `submission_time` is
    required, normalized to UTC at second precision.
    """

    url: str
    submission_time: datetime
    url_tokens: tuple[str, ...] = ()
    ips: frozenset[str] = frozenset()
    dns: str | None = None
    reverse_dns: str | None = None
    geoip: str | None = None
    country_code: str | None = None
    target: str | None = None
    html_text: str | None = None
    ocr_text_own: str | None = None
    ocr_text_pt: str | None = None
    tag_counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.url:
            raise MissingRequiredField("record is missing a url")
        if not isinstance(self.submission_time, datetime):
            raise MissingRequiredField(f"record {self.url!r} has no submission_time")
        ts = self.submission_time
        if ts.tzinfo is None:
            ts = ts.replace(tzinfo=timezone.utc)
        ts = ts.astimezone(timezone.utc).replace(microsecond=0)
        object.__setattr__(self, "submission_time", ts)
        object.__setattr__(self, "url_tokens", tuple(self.url_tokens))
        object.__setattr__(self, "ips", frozenset(self.ips))
        object.__setattr__(self, "tag_counts", dict(self.tag_counts))
        for tag, count in self.tag_counts.items():
            if count < 0:
                raise InvariantViolation(
                    f"record {self.url!r}: tag count for {tag!r} is negative"
                )


Edge = tuple[str, str]


def make_edge(a: str, b: str) -> Edge:
    """Canonical unordered edge key; self-loops are rejected."""
    if a == b:
        raise InvariantViolation(f"self-loop on {a!r}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class WeightedUrlGraph:
    """A connected URL graph whose edges carry signal-contribution weights.

    Freshly projected graphs have all weights 0 and empty contribution sets;
    the weighting stage replaces them. Edges are stored as canonical sorted
    pairs, and the edge tuple itself is sorted for reproducible iteration.
    """

    graph_id: int
    nodes: frozenset[str]
    edges: tuple[Edge, ...]
    weights: Mapping[Edge, int]
    contributions: Mapping[Edge, frozenset[SignalId]]

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        for a, b in self.edges:
            if a == b:
                raise InvariantViolation(f"graph {self.graph_id}: self-loop on {a!r}")
            if a not in self.nodes or b not in self.nodes:
                raise InvariantViolation(
                    f"graph {self.graph_id}: edge ({a!r}, {b!r}) leaves the node set"
                )
            if (a, b) != make_edge(a, b):
                raise InvariantViolation(
                    f"graph {self.graph_id}: edge ({a!r}, {b!r}) is not canonical"
                )
        if set(self.weights) != set(self.edges) or set(self.contributions) != set(self.edges):
            raise InvariantViolation(
                f"graph {self.graph_id}: weights/contributions do not cover the edge set"
            )

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class CampaignComponent:
    """One community inside one URL graph; the atomic unit of stage 2.

    `gid` and `long_doc` are unset (-1 / "") until global indexing runs.
    """

    graph_id: int
    label: int
    urls: frozenset[str]
    gid: int = -1
    long_doc: str = ""

    def __post_init__(self):
        object.__setattr__(self, "urls", frozenset(self.urls))
        if not self.urls:
            raise InvariantViolation(
                f"component ({self.graph_id}, {self.label}) has no member URLs"
            )


@dataclass(frozen=True)
class CampaignLineage:
    """Which structural clusters and contextual campaigns fed a campaign."""

    structural_cluster_ids: tuple[int, ...] = ()
    contextual_campaign_ids: tuple[int, ...] = ()


@dataclass(frozen=True)
class Campaign:
    """A cluster of components representing one coordinated operation."""

    campaign_id: int
    components: tuple[CampaignComponent, ...]
    urls: frozenset[str]
    sigs: Mapping[SignalId, float] = field(default_factory=dict)
    avg_sigs: float = 0.0
    lineage: CampaignLineage = field(default_factory=CampaignLineage)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "urls", frozenset(self.urls))

    @property
    def size(self) -> int:
        return len(self.urls)
