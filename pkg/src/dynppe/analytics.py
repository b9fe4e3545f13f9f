"""Embedding movement and z-score change ranking across snapshots."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class MovementRecord:
    node: int
    snapshot_from: int
    snapshot_to: int
    distance: float
    degree_delta: int | None


@dataclass(frozen=True)
class ZScoreRecord:
    node: int
    snapshot: int
    zscore: float
    movement: float = 0.0
    degree_delta: int | None = None


def movement(a: np.ndarray, b: np.ndarray) -> float:
    """``1 - cos(a, b)``; 0 when either vector is all zeros."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0 or np.array_equal(a, b):
        return 0.0
    cos = float(np.dot(a, b) / (na * nb))
    return 1.0 - min(1.0, max(-1.0, cos))


def zscores(movements: Mapping[int, float]) -> dict[int, float]:
    """Standardise movements within one snapshot (population sigma).

    A group with zero spread maps to all zeros.
    """
    if not movements:
        return {}
    nodes = list(movements)
    x = np.array([movements[u] for u in nodes], dtype=np.float64)
    # the float mean of equal values can miss them by an ulp
    if x.min() == x.max():
        return dict.fromkeys(nodes, 0.0)
    mu = x.mean()
    sigma = np.sqrt(((x - mu) ** 2).mean())
    if sigma == 0.0:
        return dict.fromkeys(nodes, 0.0)
    return dict(zip(nodes, ((x - mu) / sigma).tolist()))


def movement_records(
    histories: Mapping[int, Sequence[np.ndarray]],
    snapshots: Sequence[int],
    degrees: Mapping[int, Mapping[int, int]] | None = None,
) -> list[MovementRecord]:
    """Movement of every node between each pair of consecutive snapshots.

    ``histories[node][k]`` is the vector at ``snapshots[k]``.  ``degrees``
    maps snapshot -> node -> degree; when absent, degree deltas are ``None``.
    """
    out = []
    for k in range(1, len(snapshots)):
        s0, s1 = snapshots[k - 1], snapshots[k]
        for node in sorted(histories):
            vecs = histories[node]
            dd = None
            if degrees is not None:
                dd = degrees[s1].get(node, 0) - degrees[s0].get(node, 0)
            out.append(MovementRecord(node, s0, s1, movement(vecs[k - 1], vecs[k]), dd))
    return out


def score_records(records: Iterable[MovementRecord]) -> list[ZScoreRecord]:
    """Z-scores per target snapshot over every node moving into it."""
    groups: dict[int, list[MovementRecord]] = {}
    for rec in records:
        groups.setdefault(rec.snapshot_to, []).append(rec)
    out = []
    for snap in sorted(groups):
        recs = groups[snap]
        z = zscores({r.node: r.distance for r in recs})
        out.extend(ZScoreRecord(r.node, snap, z[r.node], r.distance, r.degree_delta) for r in recs)
    return out


def rank_changes(records: Iterable[ZScoreRecord], min_degree_delta: int | None = 10) -> list[ZScoreRecord]:
    """Keep ``degree_delta > min_degree_delta``; order by snapshot, then
    z-score descending, then node id.

    ``min_degree_delta=None`` disables the filter.
    """
    kept = [
        r for r in records
        if min_degree_delta is None or (r.degree_delta is not None and r.degree_delta > min_degree_delta)
    ]
    return sorted(kept, key=lambda r: (r.snapshot, -r.zscore, r.node))


def format_report(ranked: Iterable[ZScoreRecord]) -> str:
    lines = ["snapshot\tnode\tzscore\tmovement\tdegree_delta"]
    for r in ranked:
        dd = "NA" if r.degree_delta is None else str(r.degree_delta)
        lines.append(f"{r.snapshot}\t{r.node}\t{r.zscore:.6f}\t{r.movement:.9g}\t{dd}")
    return "\n".join(lines) + "\n"
