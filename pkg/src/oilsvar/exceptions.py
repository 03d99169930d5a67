"""Exception hierarchy shared across the package.

Every error raised on purpose by this package derives from :class:`OilSvarError`,
so callers (and the CLI) can catch one base type. Names mirror the condition
they report rather than the module that raises them.
"""

from __future__ import annotations


class OilSvarError(Exception):
    """Base class for all errors raised by oilsvar."""


# ---------------------------------------------------------------------------
# time-series containers and transforms


class NonPositiveValueError(OilSvarError, ValueError):
    """A log transform was asked of a series with values <= 0."""


class EmptyWindowError(OilSvarError, ValueError):
    """A demeaning window is empty or lies outside the series range."""


class NoOverlapError(OilSvarError, ValueError):
    """Series passed to align() share no common month."""


class NoCompleteQuarterError(OilSvarError, ValueError):
    """A monthly series covers no complete calendar quarter."""


class TooShortError(OilSvarError, ValueError):
    """A series is too short for the requested operation."""


# ---------------------------------------------------------------------------
# estimation and identification


class TooFewObservationsError(OilSvarError, ValueError):
    """Not enough rows to estimate the requested regression."""


class SingularDesignError(OilSvarError, ValueError):
    """The regressor cross-product is numerically singular."""


class NotPositiveDefiniteError(OilSvarError, ValueError):
    """A matrix that must be symmetric positive definite is not."""


class ZeroImpactError(OilSvarError, ValueError):
    """Sign normalization hit an exactly-zero impact entry, so the
    orientation of that shock column is undefined."""


class UnstableModelError(OilSvarError, ValueError):
    """An operation that requires a covariance-stationary model was called
    on a fit with spectral radius >= 1."""


# ---------------------------------------------------------------------------
# bootstrap


class BlockTooLongError(OilSvarError, ValueError):
    """Requested block length exceeds the available sample."""


class ReplicationFailureError(OilSvarError, RuntimeError):
    """More than the tolerated share of bootstrap replications failed."""

    def __init__(self, failures: int, replications: int):
        self.failures = failures
        self.replications = replications
        super().__init__(
            f"{failures} of {replications} bootstrap replications failed "
            "after redraws"
        )


# ---------------------------------------------------------------------------
# ingestion


class IngestError(OilSvarError):
    """Base class for data-acquisition errors."""


class HttpError(IngestError):
    """A provider returned a non-success HTTP status."""

    def __init__(self, url: str, status: int, body: bytes | str = b""):
        self.url = url
        self.status = status
        excerpt = body.decode("utf-8", "replace") if isinstance(body, bytes) else body
        self.body_excerpt = excerpt[:200]
        super().__init__(f"HTTP {status} from {url}: {self.body_excerpt}")


class ParseError(IngestError, ValueError):
    """A provider response could not be parsed into monthly observations."""


class GapError(IngestError, ValueError):
    """A series has a missing month in its interior."""

    def __init__(self, message: str, missing: str | None = None):
        self.missing = missing
        super().__init__(message)


class MissingApiKeyError(IngestError, KeyError):
    """The environment variable holding a provider API key is not set."""

    def __init__(self, env_var: str):
        self.env_var = env_var
        super().__init__(f"API key environment variable {env_var} is not set")

    def __str__(self) -> str:  # KeyError quotes its arg by default
        return f"API key environment variable {self.env_var} is not set"


class CacheMissError(IngestError):
    """Offline mode was requested but the cache has no usable copy."""


class ConfigError(OilSvarError, ValueError):
    """A run configuration file or flag set is invalid."""
