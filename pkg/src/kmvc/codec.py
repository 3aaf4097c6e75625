"""Lossless serialization of a sorted key set.

Keys ``h[0] < h[1] < ... < h[c-1]`` are turned into successive differences
(``d[0] = h[0]``, ``d[j] = h[j] - h[j-1]``). The OR of all differences gives
the smallest number of leading zeros ``m`` shared by every difference, and
each difference is then written with its low ``x = 64 - m`` bits only, eight
values per ``x``-byte group.

Wire format (little-endian)::

    0..3   magic b"KMVC"
    4      version (1 = compressed, 2 = raw 8-byte keys)
    5      hash bits (63)
    6..9   key count, uint32
    10     m (1..63; 0 for an empty or raw blob)
    11..15 reserved, zero
    16..   payload: ceil(count / 8) * (64 - m) bytes, or count * 8 for raw
"""

from __future__ import annotations

import heapq
import struct
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .errors import (
    BadMagicError,
    BadVersionError,
    CorruptError,
    EmptyInputError,
    NotSortedError,
    OutOfRangeError,
    TruncatedError,
)
from .hashing import HASH_BITS

MAGIC = b"KMVC"
VERSION_COMPRESSED = 1
VERSION_RAW = 2
HEADER_SIZE = 16
_HEADER = struct.Struct("<4sBBIB5s")
_RESERVED = bytes(5)
_SLACK = 16


@dataclass(frozen=True)
class BlobHeader:
    version: int
    hash_bits: int
    count: int
    m: int

    @property
    def x(self) -> int:
        """Bits stored per key (compressed blobs only)."""
        return 64 - self.m if self.count else 0

    @property
    def payload_size(self) -> int:
        if self.version == VERSION_RAW:
            return 8 * self.count
        return compressed_payload_size(self.count, self.m)


def compressed_payload_size(count: int, m: int) -> int:
    if count == 0:
        return 0
    return -(-count // 8) * (64 - m)


def encoded_size(count: int, m: int) -> int:
    """Total bytes of a compressed blob with ``count`` keys and ``m`` leading zeros."""
    return HEADER_SIZE + compressed_payload_size(count, m)


def as_key_array(keys: Sequence[int] | np.ndarray) -> np.ndarray:
    """Coerce ``keys`` to a contiguous uint64 array without validating order."""
    if isinstance(keys, np.ndarray):
        if keys.dtype == np.uint64:
            return np.ascontiguousarray(keys)
        if keys.dtype.kind == "i":
            if keys.size and keys.min() < 0:
                raise OutOfRangeError("negative key")
            return keys.astype(np.uint64)
        if keys.dtype.kind != "u":
            raise OutOfRangeError(f"keys must be integers, got dtype {keys.dtype}")
        return keys.astype(np.uint64)
    try:
        return np.array(keys, dtype=np.uint64)
    except (OverflowError, ValueError, TypeError) as exc:
        raise OutOfRangeError(f"key not representable as unsigned 64-bit: {exc}") from None


def _raise_for(status: int, index: int) -> None:
    if status == _kernels.NOT_SORTED:
        raise NotSortedError(f"keys not strictly ascending at index {index}")
    if status == _kernels.OUT_OF_RANGE:
        raise OutOfRangeError(f"key at index {index} outside [1, 2**63 - 1]")
    if status == _kernels.CORRUPT_ZERO_DELTA:
        raise CorruptError(f"zero difference at key {index}: keys not increasing")
    if status == _kernels.CORRUPT_OVERFLOW:
        raise CorruptError(f"key {index} reconstructs to >= 2**63")


def compute_deltas(keys: Sequence[int] | np.ndarray) -> np.ndarray:
    arr = as_key_array(keys)
    deltas = np.empty_like(arr)
    _, status, index = _kernels.delta_scan(arr, deltas)
    _raise_for(status, index)
    return deltas


def min_leading_zeros(deltas: Sequence[int] | np.ndarray) -> int:
    """Leading zeros (64-bit width) of the OR of all differences."""
    arr = as_key_array(deltas)
    if arr.size == 0:
        raise EmptyInputError("no differences")
    return 64 - int(np.bitwise_or.reduce(arr)).bit_length()


def _header(version: int, count: int, m: int) -> bytes:
    return _HEADER.pack(MAGIC, version, HASH_BITS, count, m, _RESERVED)


def encode(keys: Sequence[int] | np.ndarray) -> bytes:
    """Compress a strictly ascending key set (two passes: scan, then pack)."""
    arr = as_key_array(keys)
    count = arr.shape[0]
    if count == 0:
        return _header(VERSION_COMPRESSED, 0, 0)
    deltas = np.empty_like(arr)
    acc, status, index = _kernels.delta_scan(arr, deltas)
    _raise_for(status, index)
    x = int(acc).bit_length()
    out = np.empty(-(-count // 8) * x, dtype=np.uint8)
    _kernels.pack(deltas, x, out)
    return _header(VERSION_COMPRESSED, count, 64 - x) + out.tobytes()


def encode_uncompressed(keys: Sequence[int] | np.ndarray) -> bytes:
    """Baseline format: header plus ``count`` little-endian 8-byte keys."""
    arr = as_key_array(keys)
    status, index = _kernels.validate_keys(arr)
    _raise_for(status, index)
    return _header(VERSION_RAW, arr.shape[0], 0) + arr.astype("<u8", copy=False).tobytes()


def read_header(blob: bytes) -> BlobHeader:
    """Parse and check the fixed 16-byte header (payload length not checked)."""
    if len(blob) < HEADER_SIZE:
        if blob[:4] != MAGIC[: len(blob[:4])]:
            raise BadMagicError("bad magic")
        raise TruncatedError(f"blob has {len(blob)} bytes, header needs {HEADER_SIZE}")
    magic, version, hash_bits, count, m, reserved = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version not in (VERSION_COMPRESSED, VERSION_RAW):
        raise BadVersionError(f"unsupported version {version}")
    if hash_bits != HASH_BITS:
        raise CorruptError(f"hash_bits={hash_bits}, expected {HASH_BITS}")
    if reserved != _RESERVED:
        raise CorruptError("reserved header bytes are not zero")
    if version == VERSION_RAW or count == 0:
        if m != 0:
            raise CorruptError(f"m={m} must be 0 for this blob")
    elif not 1 <= m <= 63:
        raise CorruptError(f"m={m} outside 1..63")
    return BlobHeader(version, hash_bits, count, m)


def _payload(blob: bytes, header: BlobHeader) -> memoryview:
    need = header.payload_size
    have = len(blob) - HEADER_SIZE
    if have < need:
        raise TruncatedError(f"payload has {have} bytes, expected {need}")
    if have > need:
        raise CorruptError(f"{have - need} trailing bytes after payload")
    return memoryview(blob)[HEADER_SIZE:]


def decode(blob: bytes) -> np.ndarray:
    """Exact inverse of :func:`encode`."""
    header = read_header(blob)
    if header.version != VERSION_COMPRESSED:
        raise BadVersionError(f"expected compressed blob (version 1), got {header.version}")
    payload = _payload(blob, header)
    keys = np.empty(header.count, dtype=np.uint64)
    if header.count == 0:
        return keys
    buf = np.zeros(len(payload) + _SLACK, dtype=np.uint8)
    buf[: len(payload)] = np.frombuffer(payload, dtype=np.uint8)
    status, index = _kernels.unpack_keys(buf, header.x, header.count, keys)
    _raise_for(status, index)
    return keys


def decode_uncompressed(blob: bytes) -> np.ndarray:
    header = read_header(blob)
    if header.version != VERSION_RAW:
        raise BadVersionError(f"expected raw blob (version 2), got {header.version}")
    payload = _payload(blob, header)
    keys = np.frombuffer(payload, dtype="<u8").astype(np.uint64)
    status, index = _kernels.validate_keys(keys)
    if status == _kernels.NOT_SORTED:
        raise CorruptError(f"raw keys not strictly ascending at index {index}")
    if status == _kernels.OUT_OF_RANGE:
        raise CorruptError(f"raw key at index {index} outside [1, 2**63 - 1]")
    return keys


def decode_any(blob: bytes) -> np.ndarray:
    """Decode either blob version."""
    if read_header(blob).version == VERSION_RAW:
        return decode_uncompressed(blob)
    return decode(blob)


class KeyStream:
    """Lazy ascending enumeration of the keys in a compressed blob.

    Decodes one 8-key group at a time and tracks how many blob bytes have
    been touched in :attr:`bytes_consumed` (header included).
    """

    def __init__(self, blob: bytes):
        self.header = read_header(blob)
        if self.header.version != VERSION_COMPRESSED:
            raise BadVersionError(f"expected compressed blob (version 1), got {self.header.version}")
        self._blob = memoryview(blob)
        self._x = self.header.x
        self._mask = (1 << self._x) - 1
        self._pos = HEADER_SIZE
        self._remaining = self.header.count
        self._index = 0
        self._prev = 0
        self._group: list[int] = []
        self._cursor = 0
        self.bytes_consumed = HEADER_SIZE

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        if self._cursor == len(self._group):
            if not self._remaining:
                raise StopIteration
            self._load_group()
        key = self._group[self._cursor]
        self._cursor += 1
        return key

    def _load_group(self) -> None:
        x = self._x
        end = self._pos + x
        if end > len(self._blob):
            raise TruncatedError(f"payload ends before group starting at key {self._index}")
        word = int.from_bytes(self._blob[self._pos : end], "little")
        self._pos = end
        self.bytes_consumed += x
        take = min(8, self._remaining)
        group = []
        prev = self._prev
        mask = self._mask
        for j in range(take):
            d = (word >> (j * x)) & mask
            if d == 0:
                raise CorruptError(f"zero difference at key {self._index + j}: keys not increasing")
            prev += d
            if prev >> HASH_BITS:
                raise CorruptError(f"key {self._index + j} reconstructs to >= 2**63")
            group.append(prev)
        if self._remaining == take and end != len(self._blob):
            raise CorruptError("trailing bytes after payload")
        self._prev = prev
        self._remaining -= take
        self._index += take
        self._group = group
        self._cursor = 0


class RawKeyStream:
    """Lazy enumeration of a raw (version 2) blob, 8 bytes per key."""

    def __init__(self, blob: bytes):
        self.header = read_header(blob)
        if self.header.version != VERSION_RAW:
            raise BadVersionError(f"expected raw blob (version 2), got {self.header.version}")
        self._blob = memoryview(blob)
        self._pos = HEADER_SIZE
        self._remaining = self.header.count
        self._prev = 0
        self.bytes_consumed = HEADER_SIZE

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        if not self._remaining:
            raise StopIteration
        end = self._pos + 8
        if end > len(self._blob):
            raise TruncatedError("raw payload ends early")
        key = int.from_bytes(self._blob[self._pos : end], "little")
        if not self._prev < key < 1 << HASH_BITS:
            raise CorruptError(f"raw key {key} breaks ordering or range")
        self._pos = end
        self._prev = key
        self._remaining -= 1
        self.bytes_consumed += 8
        return key


def open_stream(blob: bytes) -> KeyStream | RawKeyStream:
    if read_header(blob).version == VERSION_RAW:
        return RawKeyStream(blob)
    return KeyStream(blob)


@dataclass
class MergeResult:
    keys: np.ndarray
    bytes_read: list[int]
    bytes_total: list[int]

    @property
    def fraction_read(self) -> float:
        total = sum(self.bytes_total)
        return sum(self.bytes_read) / total if total else 1.0


def merge_streams(streams: Iterable[Iterator[int]], k: int) -> list[int]:
    """k least distinct keys across ascending iterators, reading no further than needed."""
    streams = list(streams)
    heap = []
    for i, stream in enumerate(streams):
        head = next(stream, None)
        if head is not None:
            heap.append((head, i))
    heapq.heapify(heap)
    out: list[int] = []
    while heap:
        key, i = heap[0]
        if not out or key != out[-1]:
            out.append(key)
            if len(out) == k:
                break
        nxt = next(streams[i], None)
        if nxt is None:
            heapq.heappop(heap)
        else:
            heapq.heapreplace(heap, (nxt, i))
    return out


def merge_blobs(blobs: Sequence[bytes], k: int, early_stop: bool = True) -> MergeResult:
    """k least keys of the union of several blobs (either version).

    With ``early_stop`` each blob is decoded lazily and abandoned once none
    of its remaining keys can rank among the k least of the union; otherwise
    every blob is decoded in full. Both paths return identical keys.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    totals = [len(b) for b in blobs]
    if early_stop:
        streams = [open_stream(b) for b in blobs]
        keys = as_key_array(merge_streams(streams, k))
        return MergeResult(keys, [s.bytes_consumed for s in streams], totals)
    decoded = [decode_any(b) for b in blobs]
    if decoded:
        keys = np.unique(np.concatenate(decoded))[:k]
    else:
        keys = np.empty(0, dtype=np.uint64)
    return MergeResult(keys, totals, totals)
