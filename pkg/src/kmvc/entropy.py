"""Entropy of KMV key sets: closed-form approximations, exact sums and a sampler.

Notation: ``s`` is the size of the key space (``2**63`` for stored keys),
``n`` the number of distinct items hashed, ``k`` the number of least keys
kept. All entropies are computed in nats; :class:`EntropyEstimate` carries
the conversions to bits and bytes.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, OverflowGuardError

LN2 = math.log(2.0)

# Largest key space the exact sums will enumerate.
ENUMERATION_LIMIT = 1 << 24
# Largest C(s, n) the subset brute force will walk.
BRUTE_FORCE_LIMIT = 2_000_000
DEFAULT_SAMPLES = 5000

# Below this many terms the sampler evaluates the tail product term by term.
_DIRECT_TAIL_TERMS = 512
# Stirling series is used only when both arguments of a log-gamma
# difference are at least this large.
_STIRLING_MIN = 50.0


@dataclass(frozen=True)
class EntropyEstimate:
    nats: float
    bits: float
    bits_per_key: float
    bytes: float

    @classmethod
    def from_nats(cls, nats: float, keys: int = 1) -> "EntropyEstimate":
        bits = nats / LN2
        return cls(nats=nats, bits=bits, bits_per_key=bits / keys, bytes=bits / 8)


@dataclass(frozen=True)
class EmpiricalEntropyReport:
    samples: int
    mean_bits_per_key: float
    std_bits_per_key: float
    approx_bits_per_key: float
    diff: float
    resampled: int = 0

    @property
    def stderr_bits_per_key(self) -> float:
        return self.std_bits_per_key / math.sqrt(self.samples)


# -- log-gamma helpers ----------------------------------------------------


def _stirling_tail(z):
    # ln z! - (z ln z - z + 0.5 ln(2 pi z)), truncated after the z**-7 term
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z


def log_falling(x, b):
    """``ln(x (x-1) ... (x-b+1)) = ln x! - ln (x-b)!``, vectorized and cancellation-free.

    ``x`` may be as large as ``2**64``; the Stirling difference is written so
    that no term of size ``x ln x`` is ever formed.
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    y = x - b
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log1p(-b / x)
        big = b * np.log(x) - y * r - b - 0.5 * r + _stirling_tail(x) - _stirling_tail(y)
        small = gammaln(x + 1.0) - gammaln(y + 1.0)
    out = np.where((y >= _STIRLING_MIN) & (x >= _STIRLING_MIN), big, small)
    out = np.where(b == 0, 0.0, out)
    return out if out.ndim else float(out)


def log_choose(a, b):
    """``ln C(a, b)`` for ``0 <= b <= a`` (scalars or arrays)."""
    if np.isscalar(a) and np.isscalar(b):
        if not 0 <= b <= a:
            raise DomainError(f"log_choose needs 0 <= b <= a, got a={a}, b={b}")
        b = min(b, a - b)
        return log_falling(float(a), float(b)) - math.lgamma(b + 1)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if np.any(b < 0) or np.any(b > a):
        raise DomainError("log_choose needs 0 <= b <= a")
    b = np.minimum(b, a - b)
    return log_falling(a, b) - gammaln(b + 1.0)


# -- parameter checks -----------------------------------------------------


def _check_sn(s: int, n: int) -> None:
    if s < 1 or n < 1:
        raise DomainError(f"need s >= 1 and n >= 1, got s={s}, n={n}")
    if n > s:
        raise DomainError(f"n={n} exceeds key space s={s}")


def _check_snk(s: int, n: int, k: int) -> None:
    _check_sn(s, n)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")


def _check_enumerable(s: int) -> None:
    if s > ENUMERATION_LIMIT:
        raise OverflowGuardError(f"s={s} exceeds enumeration limit {ENUMERATION_LIMIT}")


# -- single value / successive difference ----------------------------------


def h_uniform(s: int) -> EntropyEstimate:
    if s < 1:
        raise DomainError("s must be >= 1")
    return EntropyEstimate.from_nats(math.log(s))


def hbs_approx(s: int, n: int) -> EntropyEstimate:
    """Entropy of a Beta(1, n) draw discretized onto ``s`` bins (large-``s`` form).

    Error is ``O(n ln n / s)``.
    """
    _check_sn(s, n)
    return EntropyEstimate.from_nats(math.log(s) - math.log(n) + (n - 1) / n)


def hbs_probabilities(s: int, n: int) -> np.ndarray:
    """Bin masses ``F((i+1)/s) - F(i/s)`` with ``F(x) = 1 - (1 - x)**n``."""
    _check_sn(s, n)
    _check_enumerable(s)
    i = np.arange(s, dtype=np.float64)
    log_tail = n * np.log1p(-i / s)  # ln (1 - i/s)^n
    with np.errstate(divide="ignore"):
        step = n * np.log1p(-1.0 / (s - i))  # ln of the ratio of successive tails
    return np.exp(log_tail) * -np.expm1(step)


def hbs_exact(s: int, n: int) -> EntropyEstimate:
    q = hbs_probabilities(s, n)
    q = q[q > 0]
    return EntropyEstimate.from_nats(float(-np.sum(q * np.log(q))))


# -- k least of n ---------------------------------------------------------


def hkn_approx(s: int, n: int, k: int) -> EntropyEstimate:
    """``k (ln s - ln(n + 1) + 1)`` nats for the k least of n keys drawn from s.

    Per-key error is ``O(max(n ln n / s, ln k / k))``.
    """
    _check_snk(s, n, k)
    per_key = math.log(s) - math.log(n + 1) + 1.0
    return EntropyEstimate.from_nats(k * per_key, keys=k)


def kth_least_distribution(s: int, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Support ``j`` and pmf of the k-th least element of a random n-subset of ``[1, s]``.

    ``p_j = C(j-1, k-1) C(s-j, n-k) / C(s, n)`` for ``k <= j <= s-n+k``.
    """
    _check_snk(s, n, k)
    _check_enumerable(s)
    j = np.arange(k, s - n + k + 1, dtype=np.float64)
    log_p = log_choose(j - 1, k - 1) + log_choose(s - j, n - k) - log_choose(s, n)
    return j, np.exp(log_p)


def hkn_exact(s: int, n: int, k: int) -> EntropyEstimate:
    """Exact entropy of the k-least subset, ``-sum_j p_j ln(p_j p_k)``.

    ``p_k = 1 / C(j-1, k-1)`` is the probability of one particular k-subset
    given its largest element is ``j``, so ``-ln(p_j p_k)`` reduces to
    ``ln C(s, n) - ln C(s-j, n-k)``.
    """
    j, p = kth_least_distribution(s, n, k)
    surprisal = log_choose(s, n) - log_choose(s - j, n - k)
    return EntropyEstimate.from_nats(float(np.dot(p, surprisal)), keys=k)


def hkn_bruteforce(s: int, n: int, k: int) -> EntropyEstimate:
    """Entropy by walking every n-subset of ``[1, s]`` (tiny parameters only)."""
    _check_snk(s, n, k)
    total = math.comb(s, n)
    if total > BRUTE_FORCE_LIMIT:
        raise OverflowGuardError(f"C({s}, {n}) = {total} subsets exceeds {BRUTE_FORCE_LIMIT}")
    counts = Counter(c[:k] for c in itertools.combinations(range(1, s + 1), n))
    h = -math.fsum(c / total * math.log(c / total) for c in counts.values())
    return EntropyEstimate.from_nats(h, keys=k)


# -- leading zeros --------------------------------------------------------


def predicted_min_leading_zeros(n: float) -> float:
    """High-probability lower bound on leading zeros of every difference: log2 n - log2 ln n - 2.

    Counted within the key width (63 bits for stored keys).
    """
    if n < 3:
        raise DomainError("prediction needs n >= 3")
    return math.log2(n) - math.log2(math.log(n)) - 2.0


# -- empirical entropy ----------------------------------------------------


def _sample_kth_fraction(rng: np.random.Generator, n: int, k: int, size: int) -> np.ndarray:
    # k-th smallest of n iid U(0,1) is Beta(k, n - k + 1)
    return rng.beta(k, n - k + 1, size=size)


def empirical_hkn(
    s: int,
    n: int,
    k: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int | np.random.SeedSequence | None = None,
    exact_tail: bool = False,
) -> EmpiricalEntropyReport:
    """Monte Carlo estimate of the k-least entropy from sampled k-th order statistics.

    Each sample draws ``j`` (the k-th least of n uniform keys on ``[1, s]``)
    and evaluates ``-ln(p_j p_k)``. By default the surprisal uses the closed
    form::

        sum_{i<n} ln(s-i) - sum_{i<k} ln(n-i) - (n-k) ln s - (n-k) ln(1 - t - (n-k-1)/s)

    with ``t = j/s``, which overstates the exact value by about
    ``(n-k)(n-k-1) / (2(s-j))`` nats; negligible for 64-bit key spaces.
    ``exact_tail=True`` evaluates ``ln C(s, n) - ln C(s-j, n-k)`` instead.
    """
    _check_snk(s, n, k)
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    m = n - k
    # sum_{i<n} ln(s-i) - sum_{i<k} ln(n-i) - (n-k) ln s
    constant = k * math.log(s) + _sum_log1p_ratio(n, s) - log_falling(float(n), float(k))

    u = _sample_kth_fraction(rng, n, k, samples)
    resampled = 0
    while True:
        if s <= 1 << 53:
            j = np.clip(np.floor(u * s) + 1.0, k, s)
            t = j / s
        else:
            # key-space discretization is below double resolution here
            j = None
            t = u
        arg = 1.0 - t - (m - 1) / s if m > 0 else np.ones_like(t)
        bad = arg <= 0
        if not bad.any():
            break
        resampled += int(bad.sum())
        u[bad] = _sample_kth_fraction(rng, n, k, int(bad.sum()))

    if m == 0:
        values = np.full(samples, constant)
    elif exact_tail:
        rest = (s - j) if j is not None else s * (1.0 - t)
        values = constant - _tail_log_falling(rest, m, s)
    else:
        values = constant - m * np.log1p(-t - (m - 1) / s)

    per_key = values / (k * LN2)
    mean = float(per_key.mean())
    std = float(per_key.std(ddof=1)) if samples > 1 else 0.0
    approx = hkn_approx(s, n, k).bits_per_key
    return EmpiricalEntropyReport(samples, mean, std, approx, mean - approx, resampled)


def _sum_log1p_ratio(count: int, s: int) -> float:
    """``sum_{i<count} ln(1 - i/s)``."""
    if count <= 1 << 22:
        return math.fsum(np.log1p(-np.arange(count, dtype=np.float64) / s))
    return float(log_falling(float(s), float(count)) - count * math.log(s))


def _tail_log_falling(rest, m: int, s: int):
    """``sum_{i<m} ln(rest - i) - m ln s`` for an array of ``rest`` values."""
    rest = np.asarray(rest, dtype=np.float64)
    if m <= _DIRECT_TAIL_TERMS:
        i = np.arange(m, dtype=np.float64)
        return np.log1p(-(s - rest[:, None] + i) / s).sum(axis=1)
    return log_falling(rest, float(m)) - m * math.log(s)
