"""Brute-force personalized PageRank for checking the push engine.

Everything here is power iteration on a scipy sparse adjacency matrix built
straight from the edge set; it shares no code with the push kernels.
The row-vector fixed point ``pi = alpha*1_s + (1-alpha) * pi D^-1 A`` is
evaluated entrywise as ``pi(u) <- alpha*[u=s] + (1-alpha) * sum_{v~u} pi(v)/d(v)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DynPPEError, OracleTooLargeError, UnsupportedTopologyError
from .graph import GraphState

DEFAULT_TOL = 1e-12
MAX_ITER = 10**6
ALL_PAIRS_CAP = 200
SINGLE_SOURCE_CAP = 2000


@dataclass
class ExactPpv:
    values: np.ndarray
    source: int
    tolerance: float
    iterations: int = 0

    def l1_error(self, p: np.ndarray) -> float:
        return float(np.abs(_pad(p, self.values.shape[0]) - self.values).sum())

    def entry_errors(self, p: np.ndarray) -> np.ndarray:
        return np.abs(_pad(p, self.values.shape[0]) - self.values)


def _pad(p: np.ndarray, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] >= n:
        if np.any(p[n:]):
            raise ValueError("estimate has mass outside the graph's node range")
        return p[:n]
    out = np.zeros(n)
    out[: p.shape[0]] = p
    return out


def _span(g: GraphState) -> int:
    """Number of ids up to the largest node ever seen."""
    nodes = g.nodes()
    return int(nodes[-1]) + 1 if nodes.size else 0


def _walk_matrix(g: GraphState, n: int) -> sp.csr_matrix:
    """``M[u, v] = 1/d(v)`` for every edge; ``(M @ x)(u) = sum_{v~u} x(v)/d(v)``."""
    edges = np.asarray(list(g.edges()), dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    deg = np.bincount(rows, minlength=n).astype(np.float64)
    data = 1.0 / deg[cols] if cols.size else np.empty(0)
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


def _iterate(M: sp.csr_matrix, start: np.ndarray, alpha: float, tol: float) -> tuple[np.ndarray, int]:
    """Fixed point of ``X = alpha*start + (1-alpha) M X`` column-wise.

    ``M`` does not expand the l1 norm, so once a step moves a column by
    ``c`` the column sits within ``c (1-alpha)/alpha`` of the fixed point;
    iteration stops when that bound drops to ``tol``.
    """
    X = alpha * start
    slack = (1.0 - alpha) / alpha
    for it in range(1, MAX_ITER + 1):
        nxt = alpha * start + (1.0 - alpha) * (M @ X)
        change = np.abs(nxt - X).sum(axis=0).max() if X.size else 0.0
        X = nxt
        if change * slack <= tol:
            return X, it
    raise DynPPEError(f"power iteration did not reach tolerance {tol} in {MAX_ITER} steps")


def exact_ppr(
    g: GraphState, s: int, alpha: float, tol: float = DEFAULT_TOL, cap: int = SINGLE_SOURCE_CAP
) -> ExactPpv:
    if g.degree(s) < 1:
        raise UnsupportedTopologyError(f"source {s} has no edges")
    n = _span(g)
    if g.active_nodes > cap:
        raise OracleTooLargeError(f"{g.active_nodes} nodes exceed the single-source cap {cap}")
    if alpha == 1.0:
        values = np.zeros(n)
        values[s] = 1.0
        return ExactPpv(values, s, tol, 0)
    M = _walk_matrix(g, n)
    e = np.zeros((n, 1))
    e[s, 0] = 1.0
    X, it = _iterate(M, e, alpha, tol)
    return ExactPpv(X[:, 0], s, tol, it)


def exact_ppr_many(g: GraphState, sources, alpha: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Columns are ``pi_s`` for each source, iterated jointly."""
    sources = list(sources)
    for s in sources:
        if g.degree(s) < 1:
            raise UnsupportedTopologyError(f"source {s} has no edges")
    n = _span(g)
    M = _walk_matrix(g, n)
    E = np.zeros((n, len(sources)))
    E[sources, np.arange(len(sources))] = 1.0
    X, _ = _iterate(M, E, alpha, tol)
    return X


def all_pairs(g: GraphState, alpha: float, tol: float = DEFAULT_TOL, n: int | None = None,
              cap: int = ALL_PAIRS_CAP) -> np.ndarray:
    """``P[v, u] = pi_v(u)`` for every node id below ``n``.

    A degree-0 node has no walk, so its row is the fixed point ``alpha * 1_v``.
    """
    known = _span(g)
    n = known if n is None else max(n, known)
    if known > cap:
        raise OracleTooLargeError(f"{known} nodes exceed the all-pairs cap {cap}")
    M = _walk_matrix(g, n)
    X, _ = _iterate(M, np.eye(n), alpha, tol)
    return X.T


def check_invariant(g: GraphState, s: int, p, r, alpha: float, tol: float = DEFAULT_TOL,
                    cap: int = ALL_PAIRS_CAP) -> float:
    """``max_u |pi_s(u) - p(u) - sum_v r(v) pi_v(u)|``."""
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    tops = [_span(g), s + 1]
    for x in (p, r):
        nz = np.flatnonzero(x)
        tops.append(int(nz[-1]) + 1 if nz.size else 0)
    n = max(tops)
    P = all_pairs(g, alpha, tol, n, cap)
    lhs = P[s]
    rhs = _pad(p, n) + _pad(r, n) @ P
    return float(np.abs(lhs - rhs).max())


def check_symmetry(g: GraphState, alpha: float, tol: float = DEFAULT_TOL, cap: int = ALL_PAIRS_CAP) -> float:
    """``max |d(u) pi_u(v) - d(v) pi_v(u)|`` over nodes with edges."""
    nodes = g.active()
    if nodes.size == 0:
        return 0.0
    P = all_pairs(g, alpha, tol, cap=cap)[np.ix_(nodes, nodes)]
    d = np.array([g.degree(u) for u in nodes], dtype=np.float64)
    D = d[:, None] * P
    return float(np.abs(D - D.T).max())


def check_mass_bound(g: GraphState, t: int, alpha: float, tol: float = DEFAULT_TOL,
                     cap: int = ALL_PAIRS_CAP) -> float:
    """``sum_x pi_x(t) / d(t)`` over nodes with edges (at most 1)."""
    if g.degree(t) < 1:
        raise UnsupportedTopologyError(f"target {t} has no edges")
    nodes = g.active()
    P = all_pairs(g, alpha, tol, cap=cap)
    return float(P[nodes, t].sum() / g.degree(t))
