"""Quick self-checks of the codec, sketch and entropy code against independent oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import codec, entropy
from .hashing import synthetic_stream, trial_seed
from .sketch import KMVSketch


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def reference_pack(values: list[int], x: int) -> bytes:
    """Bit-at-a-time packer: value bits LSB-first, groups of 8 padded with zeros."""
    padded = list(values) + [0] * (-len(values) % 8)
    bits = []
    for v in padded:
        bits.extend((v >> b) & 1 for b in range(x))
    out = bytearray()
    for i in range(0, len(bits), 8):
        out.append(sum(bit << j for j, bit in enumerate(bits[i : i + 8])))
    return bytes(out)


def _random_key_sets(rng: np.random.Generator, count: int):
    for _ in range(count):
        size = int(rng.choice([0, 1, 7, 8, 9, 63, 64, 65, 1000]))
        span = int(rng.integers(size + 1, 1 << 63, dtype=np.uint64)) if size else 1
        keys = np.unique(rng.integers(1, span + 1, size=size, dtype=np.uint64))
        yield keys


def check_codec(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    for keys in _random_key_sets(rng, 300):
        blob = codec.encode(keys)
        if not np.array_equal(codec.decode(blob), keys):
            return CheckResult("codec", False, f"round trip failed for {keys.size} keys")
        if list(codec.open_stream(blob)) != keys.tolist():
            return CheckResult("codec", False, "streaming decode differs from batch decode")
        if keys.size:
            d = [int(keys[0])] + np.diff(keys).tolist()
            x = max(v.bit_length() for v in d)
            if blob[codec.HEADER_SIZE :] != reference_pack(d, x):
                return CheckResult("codec", False, f"payload differs from reference packer (x={x})")
    return CheckResult("codec", True, "300 random key sets round-trip and match the reference packer")


def check_sketch(seed: int) -> CheckResult:
    keys = synthetic_stream(50_000, trial_seed(seed, 1))
    k = 512
    sk = KMVSketch(k).update_hashes(keys)
    if not np.array_equal(sk.keys, np.sort(keys)[:k]):
        return CheckResult("sketch", False, "bulk update disagrees with full sort")
    half = keys.size // 2
    a = KMVSketch(k).update_hashes(keys[:half])
    b = KMVSketch(k)
    for key in keys[half:].tolist():
        b.update_hash(key)
    if a.merge(b) != sk:
        return CheckResult("sketch", False, "merge of halves differs from whole-stream sketch")
    return CheckResult("sketch", True, "k least keys and merge agree with a full sort")


def check_entropy(seed: int) -> CheckResult:
    worst = 0.0
    for s in range(2, 13):
        for n in range(1, min(s, 6) + 1):
            for k in range(1, n + 1):
                gap = abs(entropy.hkn_exact(s, n, k).nats - entropy.hkn_bruteforce(s, n, k).nats)
                worst = max(worst, gap)
    if worst > 1e-9:
        return CheckResult("entropy", False, f"summation vs enumeration gap {worst:.3g} nats")
    lc = entropy.log_choose(10**5, 300)
    ref = math.log(math.comb(10**5, 300))
    if abs(lc - ref) > 1e-10 * ref:
        return CheckResult("entropy", False, "log_choose disagrees with big-integer value")
    rep = entropy.empirical_hkn(1 << 14, 32, 4, samples=20_000, seed=seed, exact_tail=True)
    exact = entropy.hkn_exact(1 << 14, 32, 4).bits_per_key
    if abs(rep.mean_bits_per_key - exact) > 4 * rep.stderr_bits_per_key:
        return CheckResult("entropy", False, "sampler mean is off the exact value")
    return CheckResult("entropy", True, f"exact sums match enumeration (max gap {worst:.2g} nats)")


SUITES: dict[str, Callable[[int], CheckResult]] = {
    "codec": check_codec,
    "sketch": check_sketch,
    "entropy": check_entropy,
}


def run_all(seed: int, names: list[str] | None = None) -> list[CheckResult]:
    results = []
    for name in names or list(SUITES):
        try:
            results.append(SUITES[name](seed))
        except Exception as exc:  # a crashing suite is a failed suite
            results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
    return results
