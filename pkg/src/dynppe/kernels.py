"""Hot loops: forward push, per-event adjustment, hashing, projection.

Every kernel takes plain numpy arrays so the same source compiles under
numba or runs interpreted.  Projection and hash-table construction also
have vectorised numpy versions that the interpreted path uses instead.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import NUMBA_ENABLED, jit

# forward_push_kernel status codes
DONE = 0
INTERRUPTED = 1
OVER_BUDGET = 2

DROP_BELOW = 1e-15

_M32 = 0xFFFFFFFF
_C1 = 0xCC9E2D51
_C2 = 0x1B873593


@jit
def forward_push_kernel(
    offset, deg, nbr, p, r, inq, queue, eps, alpha, beta, work, budget, max_pushes
):
    """Positive FIFO phase to completion, then the negative phase.

    Returns ``(pushes, work, status)``.  ``work`` accumulates the degree of
    every pushed node.  With ``max_pushes >= 0`` the loop stops before the
    push that would exceed it and reports ``INTERRUPTED``; a later call
    rescans residuals, so stopping and resuming is safe.
    """
    n = min(p.shape[0], deg.shape[0])
    pushes = 0
    for phase in range(2):
        sign = 1.0 if phase == 0 else -1.0
        head = 0
        tail = 0
        count = 0
        for u in range(n):
            du = deg[u]
            if du > 0 and sign * r[u] > eps * du:
                queue[tail] = u
                tail += 1
                if tail == n:
                    tail = 0
                count += 1
                inq[u] = True
        while count > 0:
            if max_pushes >= 0 and pushes >= max_pushes:
                for _ in range(count):
                    inq[queue[head]] = False
                    head += 1
                    if head == n:
                        head = 0
                return pushes, work, INTERRUPTED
            u = queue[head]
            head += 1
            if head == n:
                head = 0
            count -= 1
            inq[u] = False
            du = deg[u]
            ru = r[u]
            if not sign * ru > eps * du:
                continue
            p[u] += alpha * ru
            if abs(p[u]) < DROP_BELOW:
                p[u] = 0.0
            share = (1.0 - alpha) * ru * (1.0 - beta) / du
            start = offset[u]
            for j in range(start, start + du):
                v = nbr[j]
                rv = r[v] + share
                if abs(rv) < DROP_BELOW:
                    rv = 0.0
                r[v] = rv
                if not inq[v] and sign * rv > eps * deg[v]:
                    queue[tail] = v
                    tail += 1
                    if tail == n:
                        tail = 0
                    count += 1
                    inq[v] = True
            ru = (1.0 - alpha) * ru * beta
            if abs(ru) < DROP_BELOW:
                ru = 0.0
            r[u] = ru
            if not inq[u] and sign * ru > eps * du:
                queue[tail] = u
                tail += 1
                if tail == n:
                    tail = 0
                count += 1
                inq[u] = True
            pushes += 1
            work += du
            if work > budget:
                return pushes, work, OVER_BUDGET
    return pushes, work, DONE


@jit
def adjust_kernel(p, r, us, vs, inserts, deg_us, deg_vs, alpha):
    """Replay estimate/residual corrections for a batch of applied events.

    Each event is corrected for the ordered pair (u, v) and then (v, u),
    using the endpoint degree recorded right after the event.  Returns -1
    on success, otherwise the index of the event whose insertion
    denominator ``d - 1`` is zero while the estimate there is nonzero.
    """
    for i in range(us.shape[0]):
        for half in range(2):
            if half == 0:
                a = us[i]
                b = vs[i]
                da = deg_us[i]
            else:
                a = vs[i]
                b = us[i]
                da = deg_vs[i]
            pa = p[a]
            if pa == 0.0:
                continue
            if inserts[i]:
                if da == 1:
                    return i
                dp = pa / (da - 1)
            else:
                dp = -pa / (da + 1)
            pa = pa + dp
            if abs(pa) < DROP_BELOW:
                pa = 0.0
            p[a] = pa
            ra = r[a] - dp / alpha
            if abs(ra) < DROP_BELOW:
                ra = 0.0
            r[a] = ra
            rb = r[b] + dp / alpha - dp
            if abs(rb) < DROP_BELOW:
                rb = 0.0
            r[b] = rb
    return -1


@jit
def murmur3_u64(key, seed):
    """MurmurHash3 x86_32 of ``key`` as 8 little-endian bytes."""
    h = seed & _M32
    block = key & _M32
    for _ in range(2):
        k = (block * _C1) & _M32
        k = ((k << 15) | (k >> 17)) & _M32
        k = (k * _C2) & _M32
        h ^= k
        h = ((h << 13) | (h >> 19)) & _M32
        h = (h * 5 + 0xE6546B64) & _M32
        block = (key >> 32) & _M32
    h ^= 8
    h ^= h >> 16
    h = (h * 0x85EBCA6B) & _M32
    h ^= h >> 13
    h = (h * 0xC2B2AE35) & _M32
    h ^= h >> 16
    return h


@jit
def _hash_tables_loop(start, stop, seed_index, seed_sign, dim):
    idx = np.empty(stop - start, dtype=np.int64)
    sgn = np.empty(stop - start, dtype=np.float64)
    for i in range(start, stop):
        idx[i - start] = murmur3_u64(i, seed_index) % dim
        sgn[i - start] = 1.0 if murmur3_u64(i, seed_sign) & 1 == 0 else -1.0
    return idx, sgn


def _rotl_np(x, r):
    return ((x << np.uint64(r)) | (x >> np.uint64(32 - r))) & np.uint64(_M32)


def murmur3_u64_np(keys: np.ndarray, seed: int) -> np.ndarray:
    """Vectorised :func:`murmur3_u64` over an array of keys."""
    m = np.uint64(_M32)
    keys = np.asarray(keys).astype(np.uint64)
    h = np.full(keys.shape, seed & _M32, dtype=np.uint64)
    for block in (keys & m, (keys >> np.uint64(32)) & m):
        k = (block * np.uint64(_C1)) & m
        k = _rotl_np(k, 15)
        k = (k * np.uint64(_C2)) & m
        h ^= k
        h = _rotl_np(h, 13)
        h = (h * np.uint64(5) + np.uint64(0xE6546B64)) & m
    h ^= np.uint64(8)
    h ^= h >> np.uint64(16)
    h = (h * np.uint64(0x85EBCA6B)) & m
    h ^= h >> np.uint64(13)
    h = (h * np.uint64(0xC2B2AE35)) & m
    h ^= h >> np.uint64(16)
    return h


def _hash_tables_np(start, stop, seed_index, seed_sign, dim):
    keys = np.arange(start, stop, dtype=np.uint64)
    idx = (murmur3_u64_np(keys, seed_index) % np.uint64(dim)).astype(np.int64)
    low = murmur3_u64_np(keys, seed_sign) & np.uint64(1)
    sgn = np.where(low == 0, 1.0, -1.0)
    return idx, sgn


def hash_tables(start: int, stop: int, seed_index: int, seed_sign: int, dim: int):
    """Bucket index and sign for node ids in ``[start, stop)``."""
    if NUMBA_ENABLED:
        return _hash_tables_loop(start, stop, seed_index, seed_sign, dim)
    return _hash_tables_np(start, stop, seed_index, seed_sign, dim)


@jit
def _project_loop(p, n_nodes, idx, sgn, dim):
    w = np.zeros(dim, dtype=np.float64)
    for i in range(p.shape[0]):
        # ln(x n) > 0 exactly when x n > 1; skip the log for the rest
        y = p[i] * n_nodes
        if y > 1.0:
            w[idx[i]] += sgn[i] * math.log(y)
    return w


def _project_np(p, n_nodes, idx, sgn, dim):
    w = np.zeros(dim, dtype=np.float64)
    y = p * n_nodes
    hit = np.flatnonzero(y > 1.0)
    np.add.at(w, idx[hit], sgn[hit] * np.log(y[hit]))
    return w


def project_dense(p: np.ndarray, n_nodes: int, idx: np.ndarray, sgn: np.ndarray, dim: int):
    """Hash-kernel projection of a dense estimate array (ids ``0..len(p)``)."""
    m = p.shape[0]
    if NUMBA_ENABLED:
        return _project_loop(p, float(n_nodes), idx[:m], sgn[:m], dim)
    return _project_np(p, float(n_nodes), idx[:m], sgn[:m], dim)
