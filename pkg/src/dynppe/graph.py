"""Dynamic undirected simple graph driven by edge events.

Adjacency lives in a growable slab: every node owns a contiguous slice
``nbr[offset[u] : offset[u] + degree[u]]`` with spare capacity behind it.
The slab is what the push kernels read, so there is no second copy of the
graph to keep in sync.  Membership tests go through a set of packed edge
keys.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EventParseError, GraphIntegrityError, InvalidEventError, SequencingError

_KEY_SHIFT = 32
_MIN_SLOT = 4


class Op(enum.Enum):
    INSERT = "+"
    DELETE = "-"


class ApplyResult(enum.Enum):
    APPLIED = "applied"
    IGNORED_DUPLICATE = "ignored_duplicate"
    IGNORED_MISSING = "ignored_missing"


@dataclass(frozen=True, slots=True)
class EdgeEvent:
    u: int
    v: int
    op: Op
    timestamp: int = 0

    def __post_init__(self):
        if not isinstance(self.op, Op):
            raise InvalidEventError(f"unknown edge operation {self.op!r}")
        if self.u < 0 or self.v < 0:
            raise InvalidEventError(f"node ids must be non-negative, got ({self.u}, {self.v})")
        if self.u == self.v:
            raise InvalidEventError(f"self-loop on node {self.u} rejected")

    def inverted(self) -> "EdgeEvent":
        op = Op.DELETE if self.op is Op.INSERT else Op.INSERT
        return EdgeEvent(self.u, self.v, op, self.timestamp)


@dataclass(slots=True)
class SnapshotDelta:
    """Ordered batch of edge events turning snapshot ``t - 1`` into ``t``."""

    events: list[EdgeEvent]
    snapshot_index: int

    def __post_init__(self):
        ts = [e.timestamp for e in self.events]
        if any(b < a for a, b in zip(ts, ts[1:])):
            raise SequencingError(f"events of snapshot {self.snapshot_index} are not time-ordered")

    def __len__(self) -> int:
        return len(self.events)

    def inverse(self, snapshot_index: int | None = None) -> "SnapshotDelta":
        """Undo batch: inverted events in reverse order.

        Timestamps are mirrored so the batch stays time-ordered.
        """
        top = self.events[-1].timestamp if self.events else 0
        bottom = self.events[0].timestamp if self.events else 0
        events = [
            EdgeEvent(e.u, e.v, e.inverted().op, top + bottom - e.timestamp)
            for e in reversed(self.events)
        ]
        index = self.snapshot_index + 1 if snapshot_index is None else snapshot_index
        return SnapshotDelta(events, index)


class ApplyCounts(NamedTuple):
    applied: int
    ignored: int


@dataclass
class EventLog:
    """Applied events with the post-event endpoint degrees.

    The per-source estimate adjustment needs ``d(u)`` right after each
    event.  The graph is mutated once per snapshot, so those degrees are
    recorded here and replayed for every tracked source.
    """

    u: list[int] = field(default_factory=list)
    v: list[int] = field(default_factory=list)
    insert: list[bool] = field(default_factory=list)
    deg_u: list[int] = field(default_factory=list)
    deg_v: list[int] = field(default_factory=list)
    _cache: tuple | None = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.u)

    def append(self, e: EdgeEvent, deg_u: int, deg_v: int) -> None:
        self.u.append(e.u)
        self.v.append(e.v)
        self.insert.append(e.op is Op.INSERT)
        self.deg_u.append(deg_u)
        self.deg_v.append(deg_v)

    def arrays(self) -> tuple[np.ndarray, ...]:
        """Column arrays for the kernels, rebuilt only after an append."""
        if self._cache is None or self._cache[0].shape[0] != len(self.u):
            self._cache = (
                np.asarray(self.u, dtype=np.int64),
                np.asarray(self.v, dtype=np.int64),
                np.asarray(self.insert, dtype=np.bool_),
                np.asarray(self.deg_u, dtype=np.int64),
                np.asarray(self.deg_v, dtype=np.int64),
            )
        return self._cache

    def touched(self) -> set[int]:
        return set(self.u) | set(self.v)


class GraphState:
    """Current adjacency, degrees and degree sum of the evolving graph.

    Node ids index the arrays directly, so they should be dense.  Nodes
    are discovered from events; a node that lost all its edges stays known
    with degree 0.
    """

    def __init__(self, node_capacity: int = 16):
        node_capacity = max(int(node_capacity), 1)
        self._offset = np.zeros(node_capacity, dtype=np.int64)
        self._cap = np.zeros(node_capacity, dtype=np.int64)
        self._deg = np.zeros(node_capacity, dtype=np.int64)
        self._known = np.zeros(node_capacity, dtype=np.bool_)
        self._nbr = np.zeros(_MIN_SLOT * node_capacity, dtype=np.int64)
        self._used = 0
        self._edges: set[int] = set()
        self.degree_sum = 0
        self.snapshot_index = 0
        self.active_nodes = 0

    # ---- queries ---------------------------------------------------------

    @property
    def num_slots(self) -> int:
        """Length of the per-node arrays (largest known id + 1, or more)."""
        return self._deg.shape[0]

    @property
    def num_edges(self) -> int:
        return len(self._edges)

    def degree(self, u: int) -> int:
        if 0 <= u < self._deg.shape[0]:
            return int(self._deg[u])
        return 0

    def neighbors(self, u: int) -> np.ndarray:
        if not 0 <= u < self._deg.shape[0]:
            return np.empty(0, dtype=np.int64)
        start = self._offset[u]
        return self._nbr[start : start + self._deg[u]].copy()

    def has_edge(self, u: int, v: int) -> bool:
        return _key(u, v) in self._edges

    def nodes(self) -> np.ndarray:
        """Every node ever touched by an event, in id order."""
        return np.flatnonzero(self._known)

    def active(self) -> np.ndarray:
        """Nodes with degree >= 1, in id order."""
        return np.flatnonzero(self._deg > 0)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Undirected edges as ``(min, max)`` pairs, sorted."""
        mask = (1 << _KEY_SHIFT) - 1
        for k in sorted(self._edges):
            yield k >> _KEY_SHIFT, k & mask

    def adjacency(self) -> dict[int, set[int]]:
        return {int(u): set(self.neighbors(u).tolist()) for u in self.nodes()}

    def kernel_view(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(offset, degree, nbr)`` arrays read by the push kernels."""
        return self._offset, self._deg, self._nbr

    def degrees(self) -> np.ndarray:
        return self._deg.copy()

    # ---- mutation --------------------------------------------------------

    def apply_event(self, e: EdgeEvent) -> ApplyResult:
        u, v = e.u, e.v
        key = _key(u, v)
        self._reserve(max(u, v) + 1)
        self._known[u] = self._known[v] = True
        if e.op is Op.INSERT:
            if key in self._edges:
                return ApplyResult.IGNORED_DUPLICATE
            self._edges.add(key)
            self._push_nbr(u, v)
            self._push_nbr(v, u)
            self.degree_sum += 2
        elif e.op is Op.DELETE:
            if key not in self._edges:
                return ApplyResult.IGNORED_MISSING
            self._edges.remove(key)
            self._drop_nbr(u, v)
            self._drop_nbr(v, u)
            self.degree_sum -= 2
        else:  # pragma: no cover - EdgeEvent validates op
            raise InvalidEventError(f"unknown edge operation {e.op!r}")
        return ApplyResult.APPLIED

    def apply_delta(self, d: SnapshotDelta, log: EventLog | None = None) -> ApplyCounts:
        if d.snapshot_index != self.snapshot_index + 1:
            raise SequencingError(
                f"delta {d.snapshot_index} cannot follow snapshot {self.snapshot_index}"
            )
        applied = self.apply_events(d.events, log)
        self.snapshot_index = d.snapshot_index
        return ApplyCounts(applied, len(d.events) - applied)

    def apply_events(self, events: Iterable[EdgeEvent], log: EventLog | None = None) -> int:
        """Apply events without advancing the snapshot index (used for ``G^0``)."""
        applied = 0
        for e in events:
            if self.apply_event(e) is ApplyResult.APPLIED:
                applied += 1
                if log is not None:
                    log.append(e, int(self._deg[e.u]), int(self._deg[e.v]))
        return applied

    # ---- integrity -------------------------------------------------------

    def audit(self) -> None:
        """Full scan of the symmetry and degree bookkeeping invariants."""
        total = 0
        active = 0
        seen: set[int] = set()
        for u in range(self._deg.shape[0]):
            d = int(self._deg[u])
            if d < 0 or d > self._cap[u]:
                raise GraphIntegrityError(f"node {u}: degree {d} outside slot capacity")
            nbrs = self.neighbors(u)
            if len(set(nbrs.tolist())) != d:
                raise GraphIntegrityError(f"node {u}: duplicate neighbours")
            for v in nbrs.tolist():
                if v == u:
                    raise GraphIntegrityError(f"node {u}: self-loop stored")
                if u not in set(self.neighbors(v).tolist()):
                    raise GraphIntegrityError(f"edge {u}-{v} stored on one side only")
                seen.add(_key(u, v))
            total += d
            active += d > 0
        if total != self.degree_sum:
            raise GraphIntegrityError(f"degree_sum {self.degree_sum} != sum of degrees {total}")
        if seen != self._edges:
            raise GraphIntegrityError("edge key set disagrees with adjacency")
        if active != self.active_nodes:
            raise GraphIntegrityError(f"active node count {self.active_nodes} != {active}")

    def digest(self) -> str:
        """SHA-256 over the logical graph content (edges, known nodes, index)."""
        h = hashlib.sha256()
        h.update(np.asarray(sorted(self._edges), dtype=np.uint64).tobytes())
        h.update(self.nodes().astype(np.int64).tobytes())
        h.update(str(self.snapshot_index).encode())
        return h.hexdigest()

    def copy(self) -> "GraphState":
        g = GraphState.__new__(GraphState)
        g._offset = self._offset.copy()
        g._cap = self._cap.copy()
        g._deg = self._deg.copy()
        g._known = self._known.copy()
        g._nbr = self._nbr.copy()
        g._used = self._used
        g._edges = set(self._edges)
        g.degree_sum = self.degree_sum
        g.snapshot_index = self.snapshot_index
        g.active_nodes = self.active_nodes
        return g

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]], node_capacity: int = 16) -> "GraphState":
        g = cls(node_capacity)
        g.apply_events(EdgeEvent(int(u), int(v), Op.INSERT) for u, v in edges)
        return g

    # ---- slab management -------------------------------------------------

    def _reserve(self, n: int) -> None:
        size = self._deg.shape[0]
        if n <= size:
            return
        new = max(n, 2 * size)
        self._offset = _grow(self._offset, new)
        self._cap = _grow(self._cap, new)
        self._deg = _grow(self._deg, new)
        self._known = _grow(self._known, new)

    def _alloc(self, size: int) -> int:
        start = self._used
        need = start + size
        if need > self._nbr.shape[0]:
            self._nbr = _grow(self._nbr, max(need, 2 * self._nbr.shape[0]))
        self._used = need
        return start

    def _push_nbr(self, u: int, v: int) -> None:
        d = int(self._deg[u])
        if d == self._cap[u]:
            new_cap = max(_MIN_SLOT, 2 * d)
            start = self._alloc(new_cap)
            old = int(self._offset[u])
            self._nbr[start : start + d] = self._nbr[old : old + d]
            self._offset[u] = start
            self._cap[u] = new_cap
        self._nbr[self._offset[u] + d] = v
        self._deg[u] = d + 1
        if d == 0:
            self.active_nodes += 1

    def _drop_nbr(self, u: int, v: int) -> None:
        start = int(self._offset[u])
        d = int(self._deg[u])
        pos = start + int(np.flatnonzero(self._nbr[start : start + d] == v)[0])
        last = start + d - 1
        self._nbr[pos] = self._nbr[last]
        self._deg[u] = d - 1
        if d == 1:
            self.active_nodes -= 1


def _key(u: int, v: int) -> int:
    if u > v:
        u, v = v, u
    return (u << _KEY_SHIFT) | v


def _grow(a: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=a.dtype)
    out[: a.shape[0]] = a
    return out


# ---- event file ----------------------------------------------------------

SNAPSHOT_MARKER = "#snapshot"


def parse_events(
    lines: Iterable[str], snapshot_every: int | None = None
) -> list[list[EdgeEvent]]:
    """Split an edge-event file into segments.

    Segment 0 builds the initial graph; every later segment is one snapshot
    delta.  Boundaries come from ``#snapshot`` lines, or from chunking every
    ``snapshot_every`` events, never both.
    """
    if snapshot_every is not None and snapshot_every < 1:
        raise EventParseError("snapshot interval must be positive", line=None)
    segments: list[list[EdgeEvent]] = [[]]
    last_ts: int | None = None
    closed_at_end = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(SNAPSHOT_MARKER):
            if snapshot_every is not None:
                raise EventParseError(
                    "snapshot markers and a fixed snapshot interval are mutually exclusive",
                    line=lineno,
                )
            segments.append([])
            closed_at_end = True
            continue
        if line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise EventParseError(f"expected 4 tab-separated fields, got {len(parts)}", line=lineno)
        try:
            ts, u, v = int(parts[0]), int(parts[2]), int(parts[3])
            op = Op(parts[1].strip())
            event = EdgeEvent(u, v, op, ts)
        except (ValueError, InvalidEventError) as exc:
            raise EventParseError(str(exc), line=lineno) from None
        if last_ts is not None and ts < last_ts:
            raise EventParseError(f"timestamp {ts} goes backwards (previous {last_ts})", line=lineno)
        last_ts = ts
        if snapshot_every is not None and len(segments[-1]) == snapshot_every:
            segments.append([])
        segments[-1].append(event)
        closed_at_end = False
    if closed_at_end and len(segments) > 1:
        # the final marker closes the last delta; it does not open an empty one
        segments.pop()
    return segments


def read_event_file(path, snapshot_every: int | None = None) -> list[list[EdgeEvent]]:
    with open(path, encoding="utf-8") as fh:
        return parse_events(fh, snapshot_every)


def format_events(segments: Sequence[Sequence[EdgeEvent]]) -> str:
    """Inverse of :func:`parse_events` for marker-delimited files."""
    out = []
    for i, seg in enumerate(segments):
        for e in seg:
            out.append(f"{e.timestamp}\t{e.op.value}\t{e.u}\t{e.v}")
        if i < len(segments) - 1 or len(segments) > 1:
            out.append(SNAPSHOT_MARKER)
    return "\n".join(out) + "\n"


def deltas_from_segments(segments: Sequence[Sequence[EdgeEvent]]) -> list[SnapshotDelta]:
    return [SnapshotDelta(list(seg), i) for i, seg in enumerate(segments) if i > 0]
