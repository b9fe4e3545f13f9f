"""Per-source approximate personalized PageRank with dynamic corrections.

A :class:`PprState` keeps the estimate ``p`` and the signed residual ``r``
as dense float64 arrays indexed by node id; zero entries count as absent,
and magnitudes below ``1e-15`` are flushed to zero so round-off never
leaves permanent nonzeros behind.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import BudgetExceededError, ConfigError, DegenerateNodeError
from .graph import EdgeEvent, EventLog, GraphState, Op, SnapshotDelta

DEFAULT_WORK_BUDGET = 10**10


@dataclass(frozen=True)
class PushParams:
    alpha: float = 0.15
    beta: float = 0.0
    epsilon_t: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if not self.epsilon_t > 0.0:
            raise ConfigError(f"epsilon_t must be positive, got {self.epsilon_t}")


class PushReport(NamedTuple):
    pushes: int
    work: int
    completed: bool


class PprState:
    """Estimate and residual of one source node."""

    __slots__ = ("source", "p", "r", "work_counter", "pushes", "initialized", "last_epsilon")

    def __init__(self, source: int, size: int = 0):
        self.source = int(source)
        size = max(int(size), self.source + 1)
        self.p = np.zeros(size, dtype=np.float64)
        self.r = np.zeros(size, dtype=np.float64)
        self.work_counter = 0
        self.pushes = 0
        self.initialized = False
        self.last_epsilon: float | None = None

    @classmethod
    def fresh(cls, source: int, size: int = 0) -> "PprState":
        """``p = 0``, ``r = 1_s``."""
        state = cls(source, size)
        state.r[state.source] = 1.0
        state.initialized = True
        return state

    @property
    def estimate(self) -> dict[int, float]:
        nz = np.flatnonzero(self.p)
        return dict(zip(nz.tolist(), self.p[nz].tolist()))

    @property
    def residual(self) -> dict[int, float]:
        nz = np.flatnonzero(self.r)
        return dict(zip(nz.tolist(), self.r[nz].tolist()))

    def ensure_size(self, n: int) -> None:
        if n > self.p.shape[0]:
            self.p = _grow(self.p, n)
            self.r = _grow(self.r, n)

    def set_entries(self, p: dict[int, float] | None = None, r: dict[int, float] | None = None):
        """Overwrite estimate/residual from sparse maps (tests and tooling)."""
        keys = list((p or {}).keys()) + list((r or {}).keys())
        self.ensure_size(max(keys, default=-1) + 1)
        if p is not None:
            self.p[:] = 0.0
            for k, x in p.items():
                self.p[k] = x
        if r is not None:
            self.r[:] = 0.0
            for k, x in r.items():
                self.r[k] = x
        self.initialized = True

    def copy(self) -> "PprState":
        out = PprState(self.source, self.p.shape[0])
        out.p[:] = self.p
        out.r[:] = self.r
        out.work_counter = self.work_counter
        out.pushes = self.pushes
        out.initialized = self.initialized
        out.last_epsilon = self.last_epsilon
        return out

    def dump(self) -> str:
        """``node<TAB>p<TAB>r`` per nonzero node, sorted by id, repr precision."""
        nz = np.flatnonzero((self.p != 0.0) | (self.r != 0.0))
        p, r = self.p[nz].tolist(), self.r[nz].tolist()
        return "".join(f"{u}\t{a!r}\t{b!r}\n" for u, a, b in zip(nz.tolist(), p, r))


def residual_l1(state: PprState) -> float:
    return float(np.abs(state.r).sum())


def estimate_nnz(state: PprState) -> int:
    return int(np.count_nonzero(state.p))


def push(state: PprState, u: int, g: GraphState, params: PushParams) -> None:
    """One PUSH at ``u``: keep ``alpha`` of the residual, spread the rest."""
    du = g.degree(u)
    if du == 0:
        raise DegenerateNodeError(f"cannot push from node {u} with degree 0")
    state.ensure_size(g.num_slots)
    alpha, beta = params.alpha, params.beta
    ru = state.r[u]
    state.p[u] = _flush(state.p[u] + alpha * ru)
    share = (1.0 - alpha) * ru * (1.0 - beta) / du
    for v in g.neighbors(u).tolist():
        state.r[v] = _flush(state.r[v] + share)
    state.r[u] = _flush((1.0 - alpha) * ru * beta)
    state.work_counter += du
    state.pushes += 1


def forward_push(
    state: PprState,
    g: GraphState,
    params: PushParams,
    *,
    max_pushes: int | None = None,
    budget: int = DEFAULT_WORK_BUDGET,
) -> PushReport:
    """Push until every ``|r(u)| <= epsilon_t * d(u)`` on nodes with edges.

    Positive residuals are drained first, then negative ones, each from a
    FIFO frontier.  Degree-0 nodes are never pushed and keep their residual.
    ``max_pushes`` stops early (the state stays valid and resumable).
    """
    state.ensure_size(g.num_slots)
    offset, deg, nbr = g.kernel_view()
    n = min(state.p.shape[0], deg.shape[0])
    inq = np.zeros(n, dtype=np.bool_)
    queue = np.zeros(max(n, 1), dtype=np.int64)
    pushes, work, status = kernels.forward_push_kernel(
        offset, deg, nbr, state.p, state.r, inq, queue,
        float(params.epsilon_t), float(params.alpha), float(params.beta),
        int(state.work_counter), int(budget), -1 if max_pushes is None else int(max_pushes),
    )
    state.work_counter = int(work)
    state.pushes += int(pushes)
    state.last_epsilon = params.epsilon_t
    if status == kernels.OVER_BUDGET:
        raise BudgetExceededError(f"push work {work} exceeded budget {budget}")
    return PushReport(int(pushes), int(work), status == kernels.DONE)


def adjust_for_event(state: PprState, e: EdgeEvent, g: GraphState, alpha: float) -> None:
    """Correct ``p``/``r`` for one event already applied to ``g``."""
    log = EventLog()
    log.append(e, g.degree(e.u), g.degree(e.v))
    adjust_logged(state, log, alpha)


def adjust_logged(state: PprState, log: EventLog, alpha: float) -> None:
    """Replay :func:`adjust_for_event` over a recorded batch, in order."""
    if len(log) == 0:
        return
    us, vs, ins, dus, dvs = log.arrays()
    state.ensure_size(int(max(us.max(), vs.max())) + 1)
    bad = kernels.adjust_kernel(state.p, state.r, us, vs, ins, dus, dvs, float(alpha))
    if bad >= 0:
        raise DegenerateNodeError(
            f"insertion ({us[bad]}, {vs[bad]}) gives an endpoint its first edge "
            "while its estimate is nonzero"
        )


def refresh(state: PprState, log: EventLog, g: GraphState, params: PushParams) -> PushReport:
    """Adjust for an already-applied batch, then push to ``epsilon_t``."""
    adjust_logged(state, log, params.alpha)
    return forward_push(state, g, params)


def update_batch(state: PprState, d: SnapshotDelta, g: GraphState, params: PushParams) -> PushReport:
    """Apply ``d`` to ``g`` event by event, correcting ``state`` after each,
    then push on the new snapshot."""
    log = EventLog()
    g.apply_delta(d, log)
    return refresh(state, log, g, params)


def fresh_push(source: int, g: GraphState, params: PushParams, **kw) -> PprState:
    state = PprState.fresh(source, g.num_slots)
    forward_push(state, g, params, **kw)
    return state


def _flush(x: float) -> float:
    return 0.0 if abs(x) < kernels.DROP_BELOW else x


def _grow(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(max(n, 2 * a.shape[0]), dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


__all__ = [
    "EdgeEvent",
    "Op",
    "PprState",
    "PushParams",
    "PushReport",
    "adjust_for_event",
    "adjust_logged",
    "estimate_nnz",
    "forward_push",
    "fresh_push",
    "push",
    "refresh",
    "residual_l1",
    "update_batch",
]
