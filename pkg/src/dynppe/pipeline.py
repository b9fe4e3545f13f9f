"""Subset tracking driver: one PPR state per tracked node, one embedding
per node per snapshot.

Each snapshot runs in two phases.  The graph is mutated once, recording
post-event degrees, and then every tracked source is refreshed
independently (thread pool; the kernels release the GIL).  Results are
gathered in node id order, so output does not depend on worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DynPPEError, NoEdgesError, SourceError
from .graph import EdgeEvent, EventLog, GraphState, SnapshotDelta
from .hashing import HashConfig, HashTables
from .ppr import DEFAULT_WORK_BUDGET, PprState, PushParams, adjust_logged, forward_push, refresh

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.15
    epsilon: float = 0.1
    dim: int = 128
    beta: float = 0.0
    seed: int = 0
    parallelism: int = 1
    work_budget: int = DEFAULT_WORK_BUDGET

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.epsilon <= 2.0:
            raise ConfigError(f"epsilon must lie in (0, 2], got {self.epsilon}")
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if not 0.0 <= self.beta < 1.0:
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if self.parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {self.parallelism}")

    @property
    def hash_config(self) -> HashConfig:
        return HashConfig.from_seed(self.seed, self.dim)

    def params(self, epsilon_t: float) -> PushParams:
        return PushParams(self.alpha, self.beta, epsilon_t)


@dataclass
class EmbeddingHistory:
    """Per-snapshot embeddings of one node; pending snapshots hold zeros."""

    node: int
    snapshots: list[int] = field(default_factory=list)
    vectors: list[np.ndarray] = field(default_factory=list)
    initialized: list[bool] = field(default_factory=list)

    def append(self, snapshot: int, w: np.ndarray, initialized: bool) -> None:
        if self.snapshots and snapshot <= self.snapshots[-1]:
            raise DynPPEError(f"history of {self.node}: snapshot {snapshot} out of order")
        self.snapshots.append(snapshot)
        self.vectors.append(w)
        self.initialized.append(initialized)

    def matrix(self) -> np.ndarray:
        return np.vstack(self.vectors) if self.vectors else np.empty((0, 0))

    def __len__(self) -> int:
        return len(self.snapshots)


@dataclass
class TrackedNode:
    node: int
    ppr: PprState | None
    history: EmbeddingHistory

    @property
    def initialized(self) -> bool:
        return self.ppr is not None and self.ppr.initialized


@dataclass
class PipelineState:
    graph: GraphState
    cfg: RunConfig
    tracked: dict[int, TrackedNode]
    tables: HashTables
    snapshot: int = 0
    epsilon_log: dict[int, float | None] = field(default_factory=dict)
    work_log: dict[int, int] = field(default_factory=dict)
    degree_sums: dict[int, int] = field(default_factory=dict)


def adaptive_epsilon(cfg: RunConfig, m_t: int) -> float:
    """``epsilon / m_t`` with ``m_t`` the degree sum."""
    if m_t < 1:
        raise NoEdgesError("degree sum is 0; no precision can be derived")
    return cfg.epsilon / m_t


def initialize(g0: GraphState, subset: Iterable[int], cfg: RunConfig) -> PipelineState:
    nodes = sorted({int(s) for s in subset})
    if not nodes:
        raise ConfigError("tracked subset is empty")
    ps = PipelineState(
        graph=g0,
        cfg=cfg,
        tracked={s: TrackedNode(s, None, EmbeddingHistory(s)) for s in nodes},
        tables=HashTables(cfg.hash_config),
        snapshot=g0.snapshot_index,
    )
    eps = adaptive_epsilon(cfg, g0.degree_sum) if g0.degree_sum else None
    ps.epsilon_log[ps.snapshot] = eps
    ps.degree_sums[ps.snapshot] = g0.degree_sum
    _run_phase(ps, EventLog(), eps)
    return ps


def process_snapshot(ps: PipelineState, d: SnapshotDelta) -> dict[int, np.ndarray]:
    g = ps.graph
    events = EventLog()
    g.apply_delta(d, events)
    ps.snapshot = g.snapshot_index
    eps = adaptive_epsilon(ps.cfg, g.degree_sum) if g.degree_sum else None
    ps.epsilon_log[ps.snapshot] = eps
    ps.degree_sums[ps.snapshot] = g.degree_sum
    return _run_phase(ps, events, eps)


def _run_phase(ps: PipelineState, events: EventLog, eps: float | None) -> dict[int, np.ndarray]:
    g = ps.graph
    ps.tables.ensure(g.num_slots)
    n_t = max(g.active_nodes, 1)
    params = ps.cfg.params(eps) if eps is not None else None
    budget = ps.cfg.work_budget

    def job(node: int):
        tn = ps.tracked[node]
        try:
            before = tn.ppr.work_counter if tn.ppr is not None else 0
            if tn.ppr is None:
                if g.degree(node) < 1:
                    return None, 0
                tn.ppr = PprState.fresh(node, g.num_slots)
                before = 0
                forward_push(tn.ppr, g, params, budget=budget)
            elif params is not None:
                refresh(tn.ppr, events, g, params)
            else:
                adjust_logged(tn.ppr, events, ps.cfg.alpha)
            return ps.tables.project(tn.ppr.p, n_t), tn.ppr.work_counter - before
        except DynPPEError as exc:
            raise SourceError(node, exc) from exc

    nodes = list(ps.tracked)
    if ps.cfg.parallelism > 1 and len(nodes) > 1:
        with ThreadPoolExecutor(max_workers=ps.cfg.parallelism) as pool:
            results = list(pool.map(job, nodes))
    else:
        results = [job(s) for s in nodes]

    out: dict[int, np.ndarray] = {}
    work = 0
    for node, (w, spent) in zip(nodes, results):
        tn = ps.tracked[node]
        work += spent
        if w is None:
            tn.history.append(ps.snapshot, np.zeros(ps.cfg.dim), False)
        else:
            tn.history.append(ps.snapshot, w, True)
            out[node] = w
    ps.work_log[ps.snapshot] = work
    log.debug("snapshot %d: m=%d eps_t=%s work=%d", ps.snapshot, g.degree_sum, eps, work)
    return out


def run(
    segments: Sequence[Sequence[EdgeEvent]], subset: Iterable[int], cfg: RunConfig
) -> dict[int, EmbeddingHistory]:
    """Segment 0 builds ``G^0``; each later segment is one snapshot delta."""
    ps = run_state(segments, subset, cfg)
    return {s: tn.history for s, tn in ps.tracked.items()}


def run_state(segments: Sequence[Sequence[EdgeEvent]], subset: Iterable[int], cfg: RunConfig) -> PipelineState:
    g = GraphState()
    if segments:
        g.apply_events(segments[0])
    ps = initialize(g, subset, cfg)
    for t, seg in enumerate(segments[1:], start=1):
        process_snapshot(ps, SnapshotDelta(list(seg), t))
    return ps
