"""Synthetic datasets with planted ground-truth campaigns.

Each planted campaign gets its own URL token template, page-text template,
DOM tag profile, IP pools, and consistent value signals; per-URL noise and
optional IP-disjoint subgroups make recovery non-trivial. A fixed seed
reproduces the dataset byte for byte.
"""
from __future__ import annotations

import json
import random
import string
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping

from .errors import InvalidSpec
from .records import EnrichedUrlRecord
from .textsim import tokenize_url

_TAG_POOL = (
    "div", "span", "a", "p", "img", "form", "input", "table", "tr", "td",
    "ul", "li", "h1", "h2", "h3", "iframe", "script", "link", "meta",
    "button", "select", "option", "label", "nav", "footer", "header",
    "section", "article", "aside", "video", "audio", "canvas", "svg",
    "strong", "em", "small", "blockquote", "fieldset", "legend", "textarea",
)
_TAGS_PER_CAMPAIGN = 4

_TARGETS = (
    "PayBuddy", "MegaBank", "CloudMail", "FastShip", "StreamFlix",
    "CryptoVault", "TaxPortal", "WebWallet", "SecureDocs", "ParcelTrack",
)
_COUNTRIES = ("US", "AU", "DE", "BR", "JP", "IN", "GB", "CA", "FR", "NL")
_CITIES = (
    "amsterdam", "osaka", "toronto", "lagos", "seattle", "porto",
    "helsinki", "brisbane", "jakarta", "lyon",
)
_TLDS = ("com", "net", "org", "info")

_EPOCH = datetime(2023, 8, 15, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a synthetic dataset.

    `ip_disjoint_subgroups` is the number of extra IP pools per campaign:
    0 keeps each campaign on one shared pool, 1 splits it into two pools
    whose URLs share no IPs (so only stage-2 text evidence can reunite them).
    """

    num_campaigns: int
    urls_per_campaign: tuple[int, int] = (5, 10)
    ip_pool_per_campaign: int = 4
    template_vocab_size: int = 12
    noise_rate: float = 0.1
    time_window_hours: float = 48.0
    ip_disjoint_subgroups: int = 0
    noise_vocab_size: int = 40
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "urls_per_campaign", tuple(self.urls_per_campaign))
        lo, hi = self.urls_per_campaign
        checks = [
            (self.num_campaigns >= 1, "num_campaigns must be >= 1"),
            (1 <= lo <= hi, "urls_per_campaign must be a (low, high) range with 1 <= low <= high"),
            (1 <= self.ip_pool_per_campaign <= 200, "ip_pool_per_campaign must be in 1..200"),
            (self.template_vocab_size >= 3, "template_vocab_size must be >= 3"),
            (0.0 <= self.noise_rate < 1.0, "noise_rate must be in [0, 1)"),
            (self.time_window_hours > 0, "time_window_hours must be positive"),
            (self.ip_disjoint_subgroups >= 0, "ip_disjoint_subgroups must be >= 0"),
            (self.noise_vocab_size >= 1, "noise_vocab_size must be >= 1"),
            (self.num_campaigns * (1 + self.ip_disjoint_subgroups) < 65000,
             "too many campaign subgroups for the IP address scheme"),
        ]
        for ok, message in checks:
            if not ok:
                raise InvalidSpec(message)


def spec_from_json(source: str | Path | Mapping) -> SynthSpec:
    """Build a SynthSpec from a JSON file or an already-parsed mapping."""
    if isinstance(source, Mapping):
        data = dict(source)
    else:
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise InvalidSpec("synthetic spec must be a JSON object")
    known = set(SynthSpec.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise InvalidSpec(f"unknown spec fields: {sorted(unknown)}")
    if "urls_per_campaign" in data:
        data["urls_per_campaign"] = tuple(data["urls_per_campaign"])
    try:
        return SynthSpec(**data)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from None


def _fresh_word(rng: random.Random, used: set[str]) -> str:
    while True:
        word = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(5, 9)))
        if word not in used:
            used.add(word)
            return word


def _campaign_tags(k: int) -> tuple[str, ...]:
    start = k * _TAGS_PER_CAMPAIGN
    if start + _TAGS_PER_CAMPAIGN <= len(_TAG_POOL):
        return _TAG_POOL[start:start + _TAGS_PER_CAMPAIGN]
    return tuple(f"x-{k}-{j}" for j in range(_TAGS_PER_CAMPAIGN))


def _noisy(tokens: list[str], rng: random.Random, rate: float, noise_vocab: list[str]) -> str:
    out = [rng.choice(noise_vocab) if rng.random() < rate else t for t in tokens]
    return " ".join(out)


def generate(spec: SynthSpec) -> tuple[list[EnrichedUrlRecord], dict[str, int]]:
    """Records plus a url -> campaign-id ground-truth map."""
    rng = random.Random(spec.seed)
    used_words: set[str] = set()
    noise_vocab = [_fresh_word(rng, used_words) for _ in range(spec.noise_vocab_size)]
    num_groups = 1 + spec.ip_disjoint_subgroups

    records: list[EnrichedUrlRecord] = []
    truth: dict[str, int] = {}
    for k in range(spec.num_campaigns):
        vocab = [_fresh_word(rng, used_words) for _ in range(spec.template_vocab_size)]
        tld = rng.choice(_TLDS)
        domain = f"{vocab[0]}-{vocab[1]}.{tld}"
        phrase = [rng.choice(vocab) for _ in range(12)]
        target = _TARGETS[k % len(_TARGETS)] + ("" if k < len(_TARGETS) else f"-{k}")
        country = _COUNTRIES[k % len(_COUNTRIES)]
        city = rng.choice(_CITIES)
        dns = f"ns1.{vocab[2]}.{tld}"
        reverse_dns = f"{vocab[2]}.hosting.{tld}"
        tags = _campaign_tags(k)
        tag_profile = {tag: rng.randint(3, 12) for tag in tags}
        pools = [
            [
                f"10.{(k * num_groups + g) // 256}.{(k * num_groups + g) % 256}.{i}"
                for i in range(1, spec.ip_pool_per_campaign + 1)
            ]
            for g in range(num_groups)
        ]
        window_start = _EPOCH + timedelta(hours=k * spec.time_window_hours / 2.0)
        n_urls = rng.randint(*spec.urls_per_campaign)
        for i in range(n_urls):
            group = (i * num_groups) // n_urls
            prefix = f"s{rng.randint(100, 99999)}"
            path_word = (
                rng.choice(noise_vocab) if rng.random() < spec.noise_rate else vocab[3 % len(vocab)]
            )
            url = f"{prefix}.{domain}/{path_word}"
            while url in truth:
                prefix = f"s{rng.randint(100, 99999)}"
                url = f"{prefix}.{domain}/{path_word}"
            pool = pools[group]
            ips = rng.sample(pool, k=min(len(pool), rng.randint(1, 2)))
            html_text = _noisy(phrase, rng, spec.noise_rate, noise_vocab)
            ocr_own = (
                _noisy(phrase, rng, spec.noise_rate, noise_vocab)
                if rng.random() < 0.5
                else None
            )
            tag_counts = dict(tag_profile)
            if rng.random() < 0.5:
                bump = rng.choice(tags)
                tag_counts[bump] = max(1, tag_counts[bump] + rng.choice((-1, 1)))
            submission = window_start + timedelta(
                seconds=rng.random() * spec.time_window_hours * 3600.0
            )
            records.append(
                EnrichedUrlRecord(
                    url=url,
                    submission_time=submission,
                    url_tokens=tuple(tokenize_url(url)),
                    ips=frozenset(ips),
                    dns=dns,
                    reverse_dns=reverse_dns,
                    geoip=city,
                    country_code=country,
                    target=target,
                    html_text=html_text,
                    ocr_text_own=ocr_own,
                    tag_counts=tag_counts,
                )
            )
            truth[url] = k
    return records, truth
