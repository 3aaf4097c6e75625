"""63-bit hashing of input items and synthetic unique key streams.

Keys live in ``[1, 2**63 - 1]``: the top bit of every 64-bit word is zero and
zero itself is never produced (a masked digest of 0 is remapped to 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import mmh3
import numpy as np

HASH_BITS = 63
KEY_SPACE = 1 << HASH_BITS
KEY_MASK = KEY_SPACE - 1
DEFAULT_SEED = 9001

# floor(2**64 / golden ratio); odd, so multiplication mod 2**63 is a bijection
FIBONACCI_MULTIPLIER = 11400714819323198485

_M63 = np.uint64(KEY_MASK)
_FIB = np.uint64(FIBONACCI_MULTIPLIER)
# Odd multipliers from the splitmix64 finalizer; each round is invertible mod 2**63.
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)


@dataclass(frozen=True)
class HashConfig:
    seed: int = DEFAULT_SEED
    bits: int = HASH_BITS

    def __post_init__(self) -> None:
        if self.bits != HASH_BITS:
            raise ValueError(f"only {HASH_BITS}-bit hashing is supported, got bits={self.bits}")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def murmur_seed(self) -> int:
        # mmh3 takes a 32-bit seed; fold the two halves together.
        return (self.seed ^ (self.seed >> 32)) & 0xFFFFFFFF


DEFAULT_CONFIG = HashConfig()


def is_valid_key(value: int) -> bool:
    return 0 < value < KEY_SPACE


def hash_item(item: bytes | str, cfg: HashConfig = DEFAULT_CONFIG) -> int:
    """Hash ``item`` to a key in ``[1, 2**63 - 1]``.

    Uses the first 64-bit half of MurmurHash3 x64/128. ``str`` items are
    hashed as their UTF-8 bytes.
    """
    if isinstance(item, str):
        item = item.encode("utf-8")
    key = mmh3.hash64(item, cfg.murmur_seed, signed=False)[0] & KEY_MASK
    return key or 1


def _mix63(x: np.ndarray) -> np.ndarray:
    """In-place invertible scramble of 63-bit words."""
    x ^= x >> _S30
    x *= _MIX_A
    x &= _M63
    x ^= x >> _S27
    x *= _MIX_B
    x &= _M63
    x ^= x >> _S31
    return x


def fibonacci_keys(start: int, stop: int, trial_seed: int) -> np.ndarray:
    """Keys for stream positions ``start <= i < stop`` of one trial.

    Item ``i`` is the Fibonacci-hashed counter ``(i + 1) * FIBONACCI_MULTIPLIER``
    XOR the trial seed, reduced to 63 bits and passed through an invertible
    mixer. Every step is a bijection on 63-bit words, so positions never
    collide; only the 0 -> 1 remap can (probability ~n**2 / 2**126).
    """
    i = np.arange(start + 1, stop + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        i *= _FIB
        i ^= np.uint64(trial_seed & KEY_MASK)
        i &= _M63
        _mix63(i)
    i[i == 0] = 1
    return i


def synthetic_stream(n: int, trial_seed: int) -> np.ndarray:
    """All ``n`` distinct keys of one synthetic trial, in stream order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return fibonacci_keys(0, n, trial_seed)


def synthetic_chunks(n: int, trial_seed: int, chunk: int = 1 << 20) -> Iterator[np.ndarray]:
    """Same keys as :func:`synthetic_stream`, produced ``chunk`` at a time."""
    if n < 1:
        raise ValueError("n must be >= 1")
    for start in range(0, n, chunk):
        yield fibonacci_keys(start, min(n, start + chunk), trial_seed)


def trial_seed(base_seed: int, *labels: int) -> int:
    """Derive an independent 64-bit trial seed from a base seed and labels."""
    ss = np.random.SeedSequence([base_seed & 0xFFFFFFFFFFFFFFFF, *labels])
    return int(ss.generate_state(1, np.uint64)[0])
