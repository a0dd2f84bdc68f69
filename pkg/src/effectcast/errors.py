"""Exception hierarchy shared across the pipeline.

Every operational failure raises an :class:`EffectcastError` subclass so
callers (notably the experiment runner's per-cell error isolation) can
distinguish pipeline conditions from programming errors. Domain-type
invariant violations at construction time raise plain ``ValueError``.
"""

from __future__ import annotations


class EffectcastError(Exception):
    """Base class for pipeline errors."""

    #: Whether retrying the same call may succeed (transient condition).
    retryable = False


class GeometryError(EffectcastError):
    """Invalid geometry: degenerate box, out-of-canvas region, short polygon."""


class UnsupportedResizeError(EffectcastError):
    """Mask reduction was asked to upscale; only downscaling is supported."""


class SchemaError(EffectcastError):
    """An input file is missing a required column or top-level structure."""


class RecordError(EffectcastError):
    """A single row/record of an input file failed validation."""


class MissingFrameError(EffectcastError):
    """A frame image file expected on disk was not found."""

    def __init__(self, expected_path):
        super().__init__(f"frame file not found: {expected_path}")
        self.expected_path = expected_path


class EmptyMaskError(EffectcastError):
    """No region survived score filtering and the fallback policy is 'error'."""


class InsufficientExemplarsError(EffectcastError):
    """Fewer exemplar pairs available than the few-shot prompt requires."""


class EmptyCompletionError(EffectcastError):
    """The completion client returned only whitespace."""


class CompletionTransportError(EffectcastError):
    """The completion client could not reach its service."""

    retryable = True


class BackendUnavailableError(EffectcastError):
    """The inpainting backend could not be reached or refused the call."""

    retryable = True


class MalformedRequestError(EffectcastError):
    """An inpainting request violates the backend contract (non-retryable)."""


class MalformedResponseError(EffectcastError):
    """The inpainting backend returned a response of the wrong shape."""


class ConfigError(EffectcastError):
    """A run configuration or one of its referenced inputs failed to load."""
