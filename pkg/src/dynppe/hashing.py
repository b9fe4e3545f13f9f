"""Hash-kernel projection of a PPR vector into ``dim`` dimensions.

``hash32(seed, i)`` is MurmurHash3 (x86, 32-bit) applied to the node id
encoded as 8 little-endian bytes:

    h = seed
    for each 4-byte block k (low word first):
        k *= 0xcc9e2d51; k = rotl32(k, 15); k *= 0x1b873593
        h ^= k; h = rotl32(h, 13); h = h * 5 + 0xe6546b64
    h ^= 8
    h ^= h >> 16; h *= 0x85ebca6b; h ^= h >> 13; h *= 0xc2b2ae35; h ^= h >> 16

with all arithmetic mod 2**32.  The bucket of node ``i`` is
``hash32(seed_index, i) mod dim``; its sign is ``+1`` when the lowest bit of
``hash32(seed_sign, i)`` is 0 and ``-1`` otherwise.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .errors import ConfigError

_M32 = 0xFFFFFFFF


@dataclass(frozen=True)
class HashConfig:
    dim: int = 128
    seed_index: int = 0x5EED0001
    seed_sign: int = 0x5EED0002

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        for name in ("seed_index", "seed_sign"):
            val = getattr(self, name)
            if not 0 <= val <= _M32:
                raise ConfigError(f"{name} must be a 32-bit unsigned integer, got {val}")
        if self.seed_index == self.seed_sign:
            raise ConfigError("index and sign seeds must differ")

    @classmethod
    def from_seed(cls, seed: int, dim: int = 128) -> "HashConfig":
        """Two distinct 32-bit seeds derived from one user seed."""
        base = seed & _M32
        return cls(dim, base, (base + 1) & _M32)


def hash32(seed: int, i: int) -> int:
    return int(kernels.murmur3_u64(int(i), int(seed)))


def h_index(cfg: HashConfig, i: int) -> int:
    return hash32(cfg.seed_index, i) % cfg.dim


def h_sign(cfg: HashConfig, i: int) -> int:
    return 1 if hash32(cfg.seed_sign, i) & 1 == 0 else -1


class HashTables:
    """Bucket/sign lookup for node ids ``0..size``, grown on demand."""

    def __init__(self, cfg: HashConfig):
        self.cfg = cfg
        self.index = np.empty(0, dtype=np.int64)
        self.sign = np.empty(0, dtype=np.float64)
        self._lock = threading.Lock()

    def ensure(self, size: int) -> None:
        with self._lock:
            have = self.index.shape[0]
            if size <= have:
                return
            size = max(size, 2 * have)
            idx, sgn = kernels.hash_tables(
                have, size, self.cfg.seed_index, self.cfg.seed_sign, self.cfg.dim
            )
            self.index = np.concatenate([self.index, idx])
            self.sign = np.concatenate([self.sign, sgn])

    def project(self, p: np.ndarray, n_nodes: int) -> np.ndarray:
        self.ensure(p.shape[0])
        return kernels.project_dense(p, n_nodes, self.index, self.sign, self.cfg.dim)


def project(p: Mapping[int, float] | np.ndarray, n: int, cfg: HashConfig) -> np.ndarray:
    """``w[h_index(i)] += h_sign(i) * max(ln(p(i) * n), 0)`` over ``p(i) > 0``.

    Non-positive entries contribute nothing.  Accumulation runs in ascending
    node id order for either input form.
    """
    if n < 1:
        raise ConfigError(f"node count must be >= 1, got {n}")
    if isinstance(p, np.ndarray):
        return HashTables(cfg).project(np.asarray(p, dtype=np.float64), n)
    w = np.zeros(cfg.dim, dtype=np.float64)
    for i in sorted(p):
        x = p[i]
        if x > 0.0:
            val = math.log(x * n)
            if val > 0.0:
                w[h_index(cfg, i)] += h_sign(cfg, i) * val
    return w


def transformed(p: Mapping[int, float], n: int) -> dict[int, float]:
    """The sign-free magnitudes ``max(ln(p(i) n), 0)`` that get hashed."""
    out = {}
    for i, x in p.items():
        if x > 0.0:
            val = math.log(x * n)
            if val > 0.0:
                out[i] = val
    return out


def hash_vector(x: Mapping[int, float], cfg: HashConfig) -> np.ndarray:
    """Plain hash kernel ``H(x)[j] = sum_{h_index(i)=j} h_sign(i) x_i``."""
    w = np.zeros(cfg.dim, dtype=np.float64)
    for i in sorted(x):
        w[h_index(cfg, i)] += h_sign(cfg, i) * x[i]
    return w
