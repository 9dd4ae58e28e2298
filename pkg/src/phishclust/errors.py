"""Exception hierarchy shared across the pipeline.

Problems with input data or configuration exit the CLI with code 2;
violated internal invariants (bugs) exit with code 3.
"""


class PhishclustError(Exception):
    """Base class for all library errors."""


class InputDataError(PhishclustError):
    """The input data or configuration cannot be used."""


class InvariantViolation(PhishclustError):
    """An internal consistency guarantee was broken; indicates a bug."""


class ParseError(InputDataError):
    """A record could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class MissingRequiredField(ParseError):
    """A record lacks `url` or `submission_time`."""


class DuplicateUrl(InputDataError):
    """Two records in one dataset share a URL key."""


class EnrichmentUnavailable(PhishclustError):
    """The enrichment client cannot serve data; callers pass records through."""


class EmptyCorpus(InputDataError):
    """A term-weighting model was requested for an empty document list."""


class DimensionMismatch(InvariantViolation):
    """Vectors from different term-weighting models were compared."""


class PartitionViolation(InvariantViolation):
    """Proposed components overlap or fail to cover the graph's nodes."""


class UnknownLabel(InvariantViolation):
    """A cluster label does not occur in the component label list."""


class CoverageMismatch(InvariantViolation):
    """Two layer outputs do not cover the same URL set."""


class DatasetMismatch(InputDataError):
    """Two runs being compared were produced from different URL sets."""


class TooFewCampaigns(InputDataError):
    """Pairwise campaign metrics need at least two campaigns."""


class InvalidSpec(InputDataError):
    """A synthetic dataset specification is out of range."""
