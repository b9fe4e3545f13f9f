"""COMMUTE baseline: per inserted edge, blend the two endpoint vectors.

For an insertion ``(u, v)`` with post-insertion degrees ``d(u), d(v)``::

    w_u <- d(u)/(d(u)+1) * w_u + 1/d(u) * w_v
    w_v <- d(v)/(d(v)+1) * w_v + 1/d(v) * w_u     # uses the new w_u

New nodes start from N(0, 0.1 I) or U(-0.5, 0.5)/dim.  Only insertions are
defined; a deletion aborts the run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DynPPEError, UnsupportedEventError
from .graph import ApplyResult, EdgeEvent, GraphState, Op
from .pipeline import EmbeddingHistory


class InitMode(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"


GAUSSIAN_VARIANCE = 0.1


@dataclass
class CommuteState:
    dim: int = 128
    init_mode: InitMode = InitMode.GAUSSIAN
    rng_seed: int = 0
    vectors: dict[int, np.ndarray] = field(default_factory=dict)


def commute_init(state: CommuteState, node: int) -> np.ndarray:
    """Draw the starting vector of ``node``; depends only on (seed, node, dim)."""
    if node in state.vectors:
        raise DynPPEError(f"node {node} already has a vector")
    rng = np.random.default_rng([state.rng_seed & (2**64 - 1), int(node)])
    if state.init_mode is InitMode.GAUSSIAN:
        w = rng.normal(0.0, np.sqrt(GAUSSIAN_VARIANCE), state.dim)
    else:
        w = rng.uniform(-0.5, 0.5, state.dim) / state.dim
    state.vectors[node] = w
    return w


def commute_apply_event(state: CommuteState, e: EdgeEvent, g: GraphState) -> None:
    """Blend the endpoint vectors of an insertion already applied to ``g``."""
    if e.op is not Op.INSERT:
        raise UnsupportedEventError("COMMUTE consumes insertions only")
    for node in (e.u, e.v):
        if node not in state.vectors:
            commute_init(state, node)
    du, dv = g.degree(e.u), g.degree(e.v)
    if du < 1 or dv < 1:
        raise DynPPEError(f"edge ({e.u}, {e.v}) is not in the graph")
    wu, wv = state.vectors[e.u], state.vectors[e.v]
    wu = du / (du + 1) * wu + wv / du
    wv = dv / (dv + 1) * wv + wu / dv
    state.vectors[e.u] = wu
    state.vectors[e.v] = wv


def commute_run(
    segments: Sequence[Sequence[EdgeEvent]],
    subset: Iterable[int],
    dim: int = 128,
    init_mode: InitMode = InitMode.GAUSSIAN,
    seed: int = 0,
) -> dict[int, EmbeddingHistory]:
    """Histories of ``subset`` sampled after segment 0 and after each delta.

    Subset nodes get their starting vector up front, so they appear in the
    snapshot-0 sample even before their first edge.
    """
    if any(e.op is Op.DELETE for seg in segments for e in seg):
        raise UnsupportedEventError("COMMUTE consumes insertions only; stream has deletions")
    state = CommuteState(dim, init_mode, seed)
    nodes = sorted({int(s) for s in subset})
    for s in nodes:
        commute_init(state, s)
    g = GraphState()
    hist = {s: EmbeddingHistory(s) for s in nodes}
    for t, seg in enumerate(segments or [[]]):
        for e in seg:
            if g.apply_event(e) is ApplyResult.APPLIED:
                commute_apply_event(state, e, g)
        for s in nodes:
            hist[s].append(t, state.vectors[s].copy(), True)
    return hist
