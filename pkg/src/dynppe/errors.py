"""Exception hierarchy shared by every module."""

from __future__ import annotations


class DynPPEError(Exception):
    """Base class for all package errors."""


class InvalidEventError(DynPPEError, ValueError):
    """Self-loop, negative id or unknown operation in an edge event."""


class SequencingError(DynPPEError):
    """Snapshot deltas applied out of order."""


class EventParseError(DynPPEError):
    def __init__(self, message: str, line: int | None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class GraphIntegrityError(DynPPEError):
    """Adjacency bookkeeping is inconsistent (raised by the audit)."""


class DegenerateNodeError(DynPPEError):
    """Push or adjustment would divide by a zero degree."""


class BudgetExceededError(DynPPEError):
    """Push work passed the configured ceiling."""


class ConfigError(DynPPEError, ValueError):
    """Invalid run parameters."""


class NoEdgesError(DynPPEError):
    """An operation needs at least one edge in the graph."""


class UnsupportedTopologyError(DynPPEError):
    """Oracle asked about a graph it cannot solve (isolated source)."""


class OracleTooLargeError(DynPPEError):
    """Graph exceeds the oracle's node cap."""


class UnsupportedEventError(DynPPEError):
    """Event type the method cannot consume (deletions for COMMUTE)."""


class SourceError(DynPPEError):
    """Wraps a per-source failure with the offending source id."""

    def __init__(self, source: int, cause: Exception):
        self.source = source
        self.cause = cause
        super().__init__(f"source {source}: {cause}")
