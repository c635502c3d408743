"""Exception types shared across the engine.

Every error raised on purpose derives from EngineError so callers (CLI,
service) can map engine failures to exit codes / HTTP statuses in one place.
"""
from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine errors."""


class EmptyDocument(EngineError):
    """Ingestion received empty (or whitespace-only) input."""


class SpanOutOfBounds(EngineError):
    """A character span does not fit inside the document text."""


class OverlapError(EngineError):
    """Spans that must be disjoint overlap."""


class InvalidConfig(EngineError):
    """A configuration value violates its invariants."""


class InsufficientCorpus(EngineError):
    """Too few documents to perform the requested split."""


class UnknownLabel(EngineError):
    """A tag string is malformed or outside the configured label inventory."""


class DetectorUnavailable(EngineError):
    """A detector backend (e.g. the model endpoint) cannot be reached.

    Non-fatal by design: remaining detectors still run.
    """


class ProtocolViolation(EngineError):
    """The inference endpoint answered outside the wire-protocol contract."""


class NotFound(EngineError):
    """Unknown document, project, or suggestion id."""


class OverlapConflict(EngineError):
    """A manual span overlaps an already accepted suggestion."""


class VersionConflict(EngineError):
    """A mutation was based on a stale project version token."""


class IntegrityError(EngineError):
    """A persisted project file is corrupt (checksum or schema mismatch)."""


class MissingReplacement(EngineError):
    """A span scheduled for rendering has no replacement-map entry."""


class ValidationError(EngineError):
    """Malformed input data (file schema, request payload, decision value)."""
