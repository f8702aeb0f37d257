"""Exception hierarchy shared across the package."""


class InquestError(Exception):
    """Base class for all package-specific errors."""


class CorpusError(InquestError):
    """Malformed corpus file or record."""


class IntegrityError(CorpusError):
    """Referential integrity violation (dangling ids across corpus files)."""


class ConfigurationError(InquestError):
    """Gateway or pipeline misconfiguration."""


class TransportError(InquestError):
    """HTTP endpoint unreachable after exhausting retries."""


class ReplayMissError(InquestError):
    """Replay-mode request whose cache key has no stored response."""

    def __init__(self, key: str):
        super().__init__(f"no replayed response for cache key {key}")
        self.key = key


class ParseError(InquestError):
    """Completion text did not contain the expected structure."""


class ClassificationError(InquestError):
    """Validity classification failed after retry."""


class PredictionError(InquestError):
    """Salience prediction failed for one question after retry."""


class PartialResultError(InquestError):
    """Generation returned fewer items than requested; carries what parsed."""

    def __init__(self, message: str, records):
        super().__init__(message)
        self.records = list(records)


class DegenerateDataError(InquestError):
    """Metric undefined on this input (e.g. zero expected disagreement)."""


class UndefinedCorrelationError(DegenerateDataError):
    """Correlation undefined: a rank vector has zero variance / all ties."""
