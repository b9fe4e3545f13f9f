"""Incremental personalized-PageRank embeddings for a tracked node subset."""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED, backend_name
from .graph import ApplyResult, EdgeEvent, GraphState, Op, SnapshotDelta, parse_events, read_event_file
from .hashing import HashConfig, h_index, h_sign, hash32, project
from .pipeline import RunConfig, adaptive_epsilon, initialize, process_snapshot, run
from .ppr import (
    PprState,
    PushParams,
    adjust_for_event,
    estimate_nnz,
    forward_push,
    push,
    residual_l1,
    update_batch,
)

__all__ = [
    "ApplyResult",
    "EdgeEvent",
    "GraphState",
    "HashConfig",
    "NUMBA_ENABLED",
    "Op",
    "PprState",
    "PushParams",
    "RunConfig",
    "SnapshotDelta",
    "adaptive_epsilon",
    "adjust_for_event",
    "backend_name",
    "estimate_nnz",
    "forward_push",
    "h_index",
    "h_sign",
    "hash32",
    "initialize",
    "parse_events",
    "process_snapshot",
    "project",
    "push",
    "read_event_file",
    "residual_l1",
    "run",
    "update_batch",
]
