"""Compiled inner loops for the codec: delta scan, fixed-width pack and unpack."""

from __future__ import annotations

import numpy as np
from numba import njit

_TOP = np.uint64(1 << 63)
_ZERO = np.uint64(0)
_BYTE = np.uint64(0xFF)

# status codes returned by the kernels
OK = 0
NOT_SORTED = 1
OUT_OF_RANGE = 2
CORRUPT_ZERO_DELTA = 3
CORRUPT_OVERFLOW = 4


@njit(cache=True, nogil=True)
def delta_scan(keys, deltas):
    """Fill ``deltas`` with successive differences and OR them together.

    Returns ``(or_all, status, index)``; ``index`` is the first offending
    position when ``status != OK``.
    """
    prev = _ZERO
    acc = _ZERO
    for i in range(keys.shape[0]):
        v = keys[i]
        if v == _ZERO or v >= _TOP:
            return acc, OUT_OF_RANGE, i
        if v <= prev:
            return acc, NOT_SORTED, i
        d = v - prev
        deltas[i] = d
        acc |= d
        prev = v
    return acc, OK, -1


@njit(cache=True, nogil=True)
def validate_keys(keys):
    prev = _ZERO
    for i in range(keys.shape[0]):
        v = keys[i]
        if v == _ZERO or v >= _TOP:
            return OUT_OF_RANGE, i
        if v <= prev:
            return NOT_SORTED, i
        prev = v
    return OK, -1


@njit(cache=True, nogil=True)
def pack(deltas, x, out):
    """Write groups of 8 ``x``-bit values as ``x`` little-endian bytes each.

    Bits are appended LSB-first; the final group is zero-padded to 8 values.
    ``out`` must hold ``ceil(len(deltas) / 8) * x`` bytes. Returns bytes written.
    """
    n = deltas.shape[0]
    total = ((n + 7) // 8) * 8
    acc = _ZERO
    nbits = 0
    pos = 0
    for i in range(total):
        v = deltas[i] if i < n else _ZERO
        acc |= v << np.uint64(nbits)
        if nbits + x >= 64:
            for b in range(8):
                out[pos] = np.uint8((acc >> np.uint64(8 * b)) & _BYTE)
                pos += 1
            used = 64 - nbits
            acc = v >> np.uint64(used) if used < 64 else _ZERO
            nbits = nbits + x - 64
        else:
            nbits += x
    while nbits > 0:
        out[pos] = np.uint8(acc & _BYTE)
        acc >>= np.uint64(8)
        pos += 1
        nbits -= 8
    return pos


@njit(cache=True, nogil=True)
def unpack_keys(buf, x, count, keys):
    """Decode ``count`` deltas of ``x`` bits from ``buf`` and prefix-sum them.

    ``buf`` must carry at least 9 bytes of zero slack past the payload.
    Returns ``(status, index)`` like :func:`delta_scan`.
    """
    mask = (np.uint64(1) << np.uint64(x)) - np.uint64(1)
    prev = _ZERO
    for i in range(count):
        bitpos = i * x
        byte = bitpos >> 3
        shift = bitpos & 7
        word = _ZERO
        for b in range(8):
            word |= np.uint64(buf[byte + b]) << np.uint64(8 * b)
        v = word >> np.uint64(shift)
        if shift + x > 64:
            v |= np.uint64(buf[byte + 8]) << np.uint64(64 - shift)
        v &= mask
        if v == _ZERO:
            return CORRUPT_ZERO_DELTA, i
        prev += v
        if prev >= _TOP:
            return CORRUPT_OVERFLOW, i
        keys[i] = prev
    return OK, -1
