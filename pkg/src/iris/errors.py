"""Exception types shared across the pipeline."""


class IrisError(Exception):
    """Base class for all errors raised by this package."""


class DatasetFormatError(IrisError):
    """A dataset file or record violates the expected layout."""


class ConfigError(IrisError):
    """Run configuration is missing or inconsistent."""


class ProviderError(IrisError):
    """A provider call failed after retries.

    Carries the content digest of the failing request so the offending
    call can be located in logs or in the cache directory.
    """

    def __init__(self, message: str, digest: str | None = None):
        self.digest = digest
        if digest:
            message = f"{message} [request digest {digest}]"
        super().__init__(message)


class ResponseParseError(IrisError):
    """An LLM response could not be parsed; carries the raw text."""

    def __init__(self, message: str, raw_response: str):
        self.raw_response = raw_response
        super().__init__(message)


class EmptyBucketError(IrisError):
    """A stance-document bucket ended up empty after similarity filtering."""


class StageDependencyError(IrisError):
    """A pipeline stage was invoked before the stages it depends on."""


class StaleArtifactError(IrisError):
    """On-disk stage artifacts no longer match their recorded digests."""
