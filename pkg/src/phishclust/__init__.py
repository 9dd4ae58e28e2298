"""Phishing campaign detection over enriched URL records.

A structural DOM-tag layer groups pages by layout; a contextual layer builds
weighted URL graphs from shared infrastructure and multi-dimensional signals,
detects communities, and clusters them into campaigns by page-text
similarity. The two layers compose into the final campaign set.
"""

__version__ = "0.1.0"

from .records import (  # noqa: F401
    ALL_SIGNALS,
    Campaign,
    CampaignComponent,
    CampaignLineage,
    EnrichedUrlRecord,
    SignalId,
    WeightedUrlGraph,
)
