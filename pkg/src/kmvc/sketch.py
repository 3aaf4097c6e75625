"""k-minimum-values (KMV) sketch: the k least distinct hash keys of a stream."""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import codec
from .errors import ConfigMismatchError
from .hashing import DEFAULT_CONFIG, KEY_SPACE, HashConfig, hash_item, is_valid_key

DEFAULT_LG_K = 12


@dataclass(frozen=True)
class EstimateResult:
    estimate: float
    is_exact: bool


class KMVSketch:
    """Keeps the ``k`` least distinct 63-bit keys seen so far.

    Single-item updates go through a max-heap of the retained keys plus a
    membership set, so each update is O(log k). :meth:`update_hashes` takes
    a whole array of precomputed keys at once. The ascending key array is
    materialized lazily and cached until the next mutation.

    Estimation uses ``(k - 1) / v`` with ``v`` the k-th smallest key as a
    fraction of the key space; before the first eviction the count is exact.
    """

    def __init__(self, k: int = 1 << DEFAULT_LG_K, config: HashConfig = DEFAULT_CONFIG):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = int(k)
        self.config = config
        self._heap: list[int] = []  # negated keys: heap[0] is -max
        self._members: set[int] = set()
        self._evicted = False
        self._sorted: np.ndarray | None = None

    @classmethod
    def from_keys(
        cls,
        keys: Iterable[int] | np.ndarray,
        k: int = 1 << DEFAULT_LG_K,
        config: HashConfig = DEFAULT_CONFIG,
        evicted: bool = False,
    ) -> "KMVSketch":
        sk = cls(k, config)
        arr = np.unique(codec.as_key_array(keys if isinstance(keys, np.ndarray) else list(keys)))
        if arr.size and (arr[0] == 0 or arr[-1] >= KEY_SPACE):
            raise ValueError("keys must lie in [1, 2**63 - 1]")
        sk._install(arr, evicted or arr.size > k)
        return sk

    @classmethod
    def from_bytes(
        cls, blob: bytes, k: int = 1 << DEFAULT_LG_K, config: HashConfig = DEFAULT_CONFIG
    ) -> "KMVSketch":
        """Load a blob of either version.

        The wire format stores no k, so the caller supplies it. A full blob
        (count == k) is taken to be in estimation mode.
        """
        keys = codec.decode_any(blob)
        if keys.size > k:
            raise ConfigMismatchError(f"blob holds {keys.size} keys, more than k={k}")
        sk = cls(k, config)
        sk._install(keys, keys.size == k)
        return sk

    def _install(self, ascending: np.ndarray, evicted: bool) -> None:
        ascending = ascending[: self.k]
        self._sorted = ascending
        self._sorted.flags.writeable = False
        values = ascending.tolist()
        self._members = set(values)
        self._heap = [-v for v in reversed(values)]  # descending negatives form a valid min-heap
        self._evicted = self._evicted or evicted

    # -- updates ---------------------------------------------------------

    def update(self, item: bytes | str) -> "KMVSketch":
        self.update_hash(hash_item(item, self.config))
        return self

    def update_hash(self, key: int) -> "KMVSketch":
        if not is_valid_key(key):
            raise ValueError(f"key {key} outside [1, 2**63 - 1]")
        if key in self._members:
            return self
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, -key)
            self._members.add(key)
        elif key < -self._heap[0]:
            evicted = -heapq.heapreplace(self._heap, -key)
            self._members.discard(evicted)
            self._members.add(key)
            self._evicted = True
        else:
            self._evicted = True
            return self
        self._sorted = None
        return self

    def update_many(self, items: Iterable[bytes | str]) -> "KMVSketch":
        for item in items:
            self.update_hash(hash_item(item, self.config))
        return self

    def update_hashes(self, keys: np.ndarray) -> "KMVSketch":
        """Bulk update from an array of precomputed keys."""
        keys = codec.as_key_array(keys)
        if keys.size == 0:
            return self
        if keys.min() == 0 or keys.max() >= KEY_SPACE:
            raise ValueError("keys must lie in [1, 2**63 - 1]")
        current = self.keys
        evicted = self._evicted
        if current.size == self.k:
            kth = current[-1]
            evicted = evicted or bool((keys > kth).any())
            keys = keys[keys < kth]
            if keys.size == 0:
                self._evicted = evicted
                return self
        merged = np.union1d(current, keys)
        self._install(merged, evicted or merged.size > self.k)
        return self

    # -- queries ---------------------------------------------------------

    @property
    def keys(self) -> np.ndarray:
        """Retained keys, ascending, as a read-only uint64 array."""
        if self._sorted is None:
            arr = np.array(sorted(self._members), dtype=np.uint64)
            arr.flags.writeable = False
            self._sorted = arr
        return self._sorted

    @property
    def is_exact(self) -> bool:
        return not self._evicted

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, key: object) -> bool:
        return key in self._members

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, KMVSketch):
            return NotImplemented
        return (
            self.k == other.k
            and self.config == other.config
            and np.array_equal(self.keys, other.keys)
        )

    def __repr__(self) -> str:
        return f"KMVSketch(k={self.k}, retained={len(self)}, exact={self.is_exact})"

    def estimate(self) -> EstimateResult:
        if self.is_exact:
            return EstimateResult(float(len(self)), True)
        kth = int(self.keys[self.k - 1])
        return EstimateResult((self.k - 1) / (kth / KEY_SPACE), False)

    def merge(self, other: "KMVSketch") -> "KMVSketch":
        """New sketch holding the k least keys of the union of both inputs."""
        if self.k != other.k:
            raise ConfigMismatchError(f"k differs: {self.k} vs {other.k}")
        if self.config != other.config:
            raise ConfigMismatchError("hash configurations differ")
        union = np.union1d(self.keys, other.keys)
        out = KMVSketch(self.k, self.config)
        out._install(union, self._evicted or other._evicted or union.size > self.k)
        return out

    def trim(self) -> "KMVSketch":
        # The k-least invariant is kept eagerly, so this is already a KMV sketch.
        return self

    def copy(self) -> "KMVSketch":
        out = KMVSketch(self.k, self.config)
        out._install(self.keys, self._evicted)
        return out

    # -- serialization ---------------------------------------------------

    def to_bytes(self, compressed: bool = True) -> bytes:
        keys = self.keys
        return codec.encode(keys) if compressed else codec.encode_uncompressed(keys)


def merge_all(sketches: Iterable[KMVSketch]) -> KMVSketch:
    it = iter(sketches)
    try:
        out = next(it)
    except StopIteration:
        raise ValueError("merge_all needs at least one sketch") from None
    for sk in it:
        out = out.merge(sk)
    return out
