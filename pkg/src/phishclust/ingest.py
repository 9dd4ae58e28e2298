"""Loading, validation, serialization, and enrichment of URL records.

Datasets are JSON-lines files, one record object per line, with field names
exactly matching EnrichedUrlRecord and ISO-8601 timestamps.
"""
from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .errors import (
    DuplicateUrl,
    EnrichmentUnavailable,
    MissingRequiredField,
    ParseError,
)
from .records import EnrichedUrlRecord
from .textsim import (  # noqa: F401  (re-exported: the error-page filter is part of ingest's surface)
    ErrorPageDictionary,
    is_error_page,
    load_error_dictionary,
    tokenize_url,
)
from .urlgraph import canonical_ip

log = logging.getLogger(__name__)

# Fields an enrichment client may fill in when a record lacks them.
ENRICHABLE_FIELDS = (
    "ips",
    "dns",
    "reverse_dns",
    "geoip",
    "country_code",
    "target",
    "html_text",
    "ocr_text_own",
    "ocr_text_pt",
    "tag_counts",
)


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def record_from_json_dict(data: Mapping, *, line_number: int | None = None) -> EnrichedUrlRecord:
    """Build a validated record from a parsed JSON object."""
    if not isinstance(data, Mapping):
        raise ParseError("record is not a JSON object", line_number)
    url = data.get("url")
    if not url or not isinstance(url, str):
        raise MissingRequiredField("record is missing a url", line_number)
    raw_ts = data.get("submission_time")
    if not raw_ts:
        raise MissingRequiredField(f"record {url!r} has no submission_time", line_number)
    try:
        ts = parse_timestamp(raw_ts)
    except ValueError as exc:
        raise ParseError(f"record {url!r}: bad submission_time: {exc}", line_number) from None
    tokens = data.get("url_tokens")
    if tokens is None:
        tokens = tokenize_url(url)
    tag_counts = data.get("tag_counts") or {}
    try:
        return EnrichedUrlRecord(
            url=url,
            submission_time=ts,
            url_tokens=tuple(tokens),
            ips=frozenset(canonical_ip(ip) for ip in data.get("ips") or ()),
            dns=data.get("dns"),
            reverse_dns=data.get("reverse_dns"),
            geoip=data.get("geoip"),
            country_code=data.get("country_code"),
            target=data.get("target"),
            html_text=data.get("html_text"),
            ocr_text_own=data.get("ocr_text_own"),
            ocr_text_pt=data.get("ocr_text_pt"),
            tag_counts={str(k): int(v) for k, v in tag_counts.items()},
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"record {url!r}: {exc}", line_number) from None


def record_to_json_dict(record: EnrichedUrlRecord) -> dict:
    """Serialize a record to a JSON-ready dict; absent fields are omitted."""
    out: dict = {
        "url": record.url,
        "submission_time": format_timestamp(record.submission_time),
        "url_tokens": list(record.url_tokens),
        "ips": sorted(record.ips),
    }
    for name in ("dns", "reverse_dns", "geoip", "country_code", "target",
                 "html_text", "ocr_text_own", "ocr_text_pt"):
        value = getattr(record, name)
        if value is not None:
            out[name] = value
    if record.tag_counts:
        out["tag_counts"] = {k: record.tag_counts[k] for k in sorted(record.tag_counts)}
    return out


def load_dataset(path: str | Path, format: str = "jsonl") -> list[EnrichedUrlRecord]:
    """Load and validate a dataset; duplicate URLs are an error."""
    if format != "jsonl":
        raise ParseError(f"unsupported dataset format {format!r}")
    records: list[EnrichedUrlRecord] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_number) from None
            record = record_from_json_dict(data, line_number=line_number)
            if record.url in seen:
                raise DuplicateUrl(f"line {line_number}: duplicate url {record.url!r}")
            seen.add(record.url)
            records.append(record)
    return records


def save_dataset(records: Iterable[EnrichedUrlRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record_to_json_dict(record), sort_keys=True))
            handle.write("\n")


# ---------------------------------------------------------------------------
# Enrichment
# ---------------------------------------------------------------------------

class EnrichmentClient(Protocol):
    """Source of third-party signal data for URLs.

    Implementations must be idempotent and tolerate concurrent lookups.
    `capabilities` names the record fields the client can populate.
    """

    capabilities: frozenset[str]

    def lookup(self, url: str) -> Mapping | None:
        """Signal fields for a URL, or None when the client has nothing."""
        ...


def fixture_key(url: str) -> str:
    """Filename stem for a URL's fixture: sha256 of the UTF-8 URL."""
    return hashlib.sha256(url.encode("utf-8")).hexdigest()


@dataclass
class FixtureEnrichmentClient:
    """Enrichment backed by a directory of per-URL JSON files.

    Each fixture lives at `<root>/<sha256(url)>.json` and holds a JSON object
    with any subset of the enrichable record fields. Lookup misses are
    counted, not raised.
    """

    root: Path
    capabilities: frozenset[str] = frozenset(ENRICHABLE_FIELDS)
    misses: int = 0

    def __post_init__(self):
        self.root = Path(self.root)
        if not self.root.is_dir():
            raise EnrichmentUnavailable(f"fixture directory {self.root} does not exist")

    def lookup(self, url: str) -> Mapping | None:
        path = self.root / f"{fixture_key(url)}.json"
        if not path.is_file():
            self.misses += 1
            return None
        return json.loads(path.read_text(encoding="utf-8"))


def write_fixture(root: str | Path, url: str, fields: Mapping) -> Path:
    """Store enrichment data for a URL in a fixture directory."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    path = root / f"{fixture_key(url)}.json"
    path.write_text(json.dumps(dict(fields), sort_keys=True), encoding="utf-8")
    return path


def _is_absent(record: EnrichedUrlRecord, name: str) -> bool:
    value = getattr(record, name)
    if name == "ips":
        return not value
    if name == "tag_counts":
        return not value
    return value is None


def enrich(
    records: list[EnrichedUrlRecord], client: EnrichmentClient
) -> list[EnrichedUrlRecord]:
    """Fill absent signal fields from the client; present values always win.

    Records the client cannot serve pass through unchanged (with a warning
    counted by the client where it supports that).
    """
    enriched: list[EnrichedUrlRecord] = []
    for record in records:
        try:
            data = client.lookup(record.url)
        except EnrichmentUnavailable as exc:
            log.warning("enrichment unavailable for %s: %s", record.url, exc)
            enriched.append(record)
            continue
        if data is None:
            log.debug("no enrichment data for %s", record.url)
            enriched.append(record)
            continue
        updates = {}
        for name in ENRICHABLE_FIELDS:
            if name not in client.capabilities or name not in data:
                continue
            if not _is_absent(record, name):
                continue
            value = data[name]
            if name == "ips":
                value = frozenset(canonical_ip(ip) for ip in value)
            elif name == "tag_counts":
                value = {str(k): int(v) for k, v in value.items()}
            updates[name] = value
        enriched.append(replace(record, **updates) if updates else record)
    return enriched
