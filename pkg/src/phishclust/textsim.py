"""Text processing: URL tokenization, TF-IDF, cosine similarity, OCR merging,
error-page detection, and per-URL document extraction.
"""
from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DimensionMismatch, EmptyCorpus, InputDataError
from .records import EnrichedUrlRecord

# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

URL_DELIMITERS = ".?-/_=&:~%#@"

_URL_SPLIT_RE = re.compile("[" + re.escape(URL_DELIMITERS) + "]")
_SCHEME_TOKENS = ("http", "https", "www")

# Runs of letters/digits; underscore is treated as punctuation.
_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize_url(url: str, *, drop_scheme_tokens: bool = True) -> list[str]:
    """Split a URL into lowercase tokens on the delimiter set.

    Empty tokens are dropped and order is preserved. Leading scheme tokens
    (http/https/www) are removed unless `drop_scheme_tokens` is off.
    """
    tokens = [t for t in _URL_SPLIT_RE.split(url.lower()) if t]
    if drop_scheme_tokens:
        while tokens and tokens[0] in _SCHEME_TOKENS:
            tokens.pop(0)
    return tokens


def word_tokens(text: str, *, drop_short_tokens: bool = True) -> list[str]:
    """Lowercase word tokens split on whitespace and punctuation.

    Tokens of length 1 are dropped unless they are digits.
    """
    tokens = _WORD_RE.findall(text.lower())
    if drop_short_tokens:
        tokens = [t for t in tokens if len(t) > 1 or t.isdigit()]
    return tokens


# ---------------------------------------------------------------------------
# TF-IDF model and vectors
# ---------------------------------------------------------------------------

_model_ids = itertools.count(1)


@dataclass(frozen=True)
class TfidfVector:
    """Sparse L2-normalized tf-idf vector tied to the model that produced it."""

    model_uid: int
    weights: Mapping[int, float]

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.weights.values()))


@dataclass(frozen=True)
class TfidfModel:
    """Corpus vocabulary and document frequencies shared by all comparisons.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1; vectors use raw term counts,
    weighted by idf and L2-normalized. Out-of-vocabulary tokens are dropped.
    """

    vocabulary: Mapping[str, int]
    doc_freq: Mapping[str, int]
    num_docs: int
    drop_short_tokens: bool = True
    model_uid: int = field(default_factory=lambda: next(_model_ids), compare=False)

    def idf(self, token: str) -> float:
        df = self.doc_freq.get(token, 0)
        return math.log((1 + self.num_docs) / (1 + df)) + 1.0

    def vectorize_tokens(self, tokens: Iterable[str]) -> TfidfVector:
        counts = Counter(t for t in tokens if t in self.vocabulary)
        raw = {self.vocabulary[t]: c * self.idf(t) for t, c in counts.items()}
        norm = math.sqrt(sum(v * v for v in raw.values()))
        if norm > 0:
            raw = {k: v / norm for k, v in raw.items()}
        return TfidfVector(self.model_uid, raw)

    def vectorize(self, text: str) -> TfidfVector:
        return self.vectorize_tokens(
            word_tokens(text, drop_short_tokens=self.drop_short_tokens)
        )


def fit_tfidf(
    docs: Sequence[tuple[str, str]], *, drop_short_tokens: bool = True
) -> TfidfModel:
    """Fit a TF-IDF model over (doc_id, text) pairs.

    Zero-length documents are allowed and simply vectorize to zero vectors.
    """
    if not docs:
        raise EmptyCorpus("cannot fit a tf-idf model on an empty corpus")
    doc_freq: Counter[str] = Counter()
    for _, text in docs:
        doc_freq.update(set(word_tokens(text, drop_short_tokens=drop_short_tokens)))
    vocabulary = {t: i for i, t in enumerate(sorted(doc_freq))}
    return TfidfModel(
        vocabulary=vocabulary,
        doc_freq=dict(doc_freq),
        num_docs=len(docs),
        drop_short_tokens=drop_short_tokens,
    )


def cosine_similarity(a: TfidfVector, b: TfidfVector) -> float:
    """Cosine of two vectors from the same model; 0.0 if either norm is 0."""
    if a.model_uid != b.model_uid:
        raise DimensionMismatch("vectors come from different tf-idf models")
    # Sorted intersection keeps the summation order independent of the
    # argument order, so the result is exactly symmetric.
    dot = sum(a.weights[k] * b.weights[k] for k in sorted(a.weights.keys() & b.weights.keys()))
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / (na * nb)))


def _count_cosine(tokens_a: Sequence[str], tokens_b: Sequence[str]) -> float:
    """Cosine of plain term-count vectors (no corpus weighting)."""
    ca, cb = Counter(tokens_a), Counter(tokens_b)
    dot = sum(v * cb.get(t, 0) for t, v in ca.items())
    na = math.sqrt(sum(v * v for v in ca.values()))
    nb = math.sqrt(sum(v * v for v in cb.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


# ---------------------------------------------------------------------------
# Error-page filtering
# ---------------------------------------------------------------------------

_DEFAULT_DICT_RESOURCE = "error_pages.txt"


@dataclass(frozen=True)
class ErrorPageDictionary:
    """Phrases commonly seen on error pages, plus a token-overlap threshold."""

    phrases: frozenset[str]
    token_fraction_threshold: float = 0.5

    def __post_init__(self):
        object.__setattr__(
            self, "phrases", frozenset(p.lower() for p in self.phrases if p.strip())
        )
        if not self.phrases:
            raise InputDataError("error-page dictionary has no phrases")
        if not 0.0 < self.token_fraction_threshold <= 1.0:
            raise InputDataError(
                f"token_fraction_threshold must be in (0, 1], "
                f"got {self.token_fraction_threshold}"
            )
        tokens = set()
        for phrase in self.phrases:
            tokens.update(word_tokens(phrase))
        object.__setattr__(self, "_tokens", frozenset(tokens))

    @property
    def tokens(self) -> frozenset[str]:
        return self._tokens  # type: ignore[attr-defined]


def load_error_dictionary(
    path: str | Path | None = None, token_fraction_threshold: float = 0.5
) -> ErrorPageDictionary:
    """Load an error-page dictionary file (one phrase per line, # comments).

    Without a path, the dictionary shipped with the package is used.
    """
    if path is None:
        text = (
            resources.files("phishclust.data")
            .joinpath(_DEFAULT_DICT_RESOURCE)
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    phrases = {
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    }
    return ErrorPageDictionary(frozenset(phrases), token_fraction_threshold)


def is_error_page(text: str, dictionary: ErrorPageDictionary) -> bool:
    """True when the text looks like an error page rather than real content.

    Fires when any full dictionary phrase occurs in the lowercased text, or
    when the fraction of text tokens found in the dictionary's token set
    reaches the threshold. Text with no usable tokens counts as an error.
    """
    lowered = text.lower()
    tokens = word_tokens(lowered)
    if not tokens:
        return True
    if any(phrase in lowered for phrase in dictionary.phrases):
        return True
    hits = sum(1 for t in tokens if t in dictionary.tokens)
    return hits / len(tokens) >= dictionary.token_fraction_threshold


# ---------------------------------------------------------------------------
# OCR merging and per-URL document extraction
# ---------------------------------------------------------------------------

def merge_ocr(
    ocr_own: str | None, ocr_pt: str | None, sim_threshold: float = 0.8
) -> str | None:
    """Merge the two OCR transcripts of one page.

    Identical texts keep the first; similar texts (token cosine at or above
    the threshold) keep the longer; dissimilar texts are concatenated so no
    tokens are lost.
    """
    if not 0.0 < sim_threshold < 1.0:
        raise InputDataError(f"sim_threshold must be in (0, 1), got {sim_threshold}")
    if ocr_own is None and ocr_pt is None:
        return None
    if ocr_pt is None:
        return ocr_own
    if ocr_own is None:
        return ocr_pt
    if ocr_own == ocr_pt:
        return ocr_own
    similarity = _count_cosine(word_tokens(ocr_own), word_tokens(ocr_pt))
    if similarity >= sim_threshold:
        return ocr_own if len(ocr_own) >= len(ocr_pt) else ocr_pt
    return ocr_own + " " + ocr_pt


def long_doc_text(
    record: EnrichedUrlRecord,
    dictionary: ErrorPageDictionary,
    sim_threshold: float = 0.8,
) -> str:
    """The best available page text for one URL.

    HTML text wins when present and not an error page; otherwise the merged
    OCR transcripts stand in; otherwise the empty string.
    """
    if record.html_text is not None and not is_error_page(record.html_text, dictionary):
        return record.html_text
    merged = merge_ocr(record.ocr_text_own, record.ocr_text_pt, sim_threshold)
    return merged if merged is not None else ""
