"""Exception types shared across the pipeline."""


class SiteDetectError(Exception):
    """Base class for all pipeline errors."""


# --- discovery / sampling ---

class SiteUnreachable(SiteDetectError):
    """DNS or transport failure while probing a site's host."""


class SitemapParseError(SiteDetectError):
    """Sitemap bytes are not parseable XML."""


class RecursionLimit(SiteDetectError):
    """Sitemap index recursion exceeded the configured depth."""


class IndexUnavailable(SiteDetectError):
    """CDX index endpoint returned a non-200 response."""


class NoCandidates(SiteDetectError):
    """Neither sitemap nor CDX produced any candidate URLs."""


# --- fetching ---

class FetchError(SiteDetectError):
    """Base class for fetch failures."""


class FetchTimeout(FetchError):
    pass


class FetchTransport(FetchError):
    """TLS, DNS, or connection-level failure."""


class RobotsDenied(FetchError):
    pass


class TooManyRedirects(FetchError):
    pass


class SnapshotMissing(FetchError):
    """Archive has no capture for the requested (url, timestamp)."""


# --- extraction ---

class EncodingError(SiteDetectError):
    """Page bytes could not be decoded with any detected charset."""


# --- scoring ---

class ScorerRejected(SiteDetectError):
    """Scoring service returned a non-retryable 4xx for a batch."""

    def __init__(self, batch_start, message=""):
        super().__init__(message or f"batch starting at index {batch_start} rejected")
        self.batch_start = batch_start


class ScorerUnavailable(SiteDetectError):
    """Retries exhausted against the scoring service."""


class ProtocolError(SiteDetectError):
    """Scoring service response violated the wire contract."""


# --- classification ---

class EmptyScores(SiteDetectError):
    pass


class DegenerateTraining(SiteDetectError):
    """Training set contains only one class."""


class InvalidFeature(SiteDetectError):
    """NaN or malformed value in a feature vector."""


class LeakageError(SiteDetectError):
    """Train and test sets share site ids."""


class ModelFormatError(SiteDetectError):
    """Model file is corrupt or violates model invariants."""


# --- reporting ---

class EmptyGroup(SiteDetectError):
    """A rank test group is empty."""


class ConfigError(SiteDetectError):
    """Run configuration or manifest is invalid."""
