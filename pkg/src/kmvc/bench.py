"""Size, ratio and timing measurements over synthetic streams, written as CSV."""

from __future__ import annotations

import csv
import importlib
import statistics
import time
from collections import defaultdict
from dataclasses import astuple, dataclass, field, fields
from typing import Callable, Iterable, Iterator, TextIO

import numpy as np

from . import codec
from .entropy import hkn_approx
from .hashing import KEY_SPACE, synthetic_chunks, trial_seed
from .sketch import DEFAULT_LG_K, KMVSketch

METHODS = ("ours", "raw", "deflate", "block")
DEFAULT_METHODS = ("ours", "raw", "deflate")
DEFAULT_TRIALS = 256
DEFAULT_TIMING_REPEATS = 100


@dataclass(frozen=True)
class Adapter:
    """A general-purpose byte compressor applied to the raw blob."""

    name: str
    compress: Callable[[bytes], bytes]
    decompress: Callable[[bytes], bytes]


def _load_adapter(method: str) -> Adapter | None:
    module_name = {"deflate": "zlib", "block": "bz2"}[method]
    try:
        mod = importlib.import_module(module_name)
    except ImportError:
        return None
    return Adapter(module_name, mod.compress, mod.decompress)


def available_adapters(methods: Iterable[str]) -> tuple[dict[str, Adapter], list[str]]:
    """Split requested generic methods into usable adapters and skipped names."""
    found, skipped = {}, []
    for method in methods:
        if method in ("ours", "raw"):
            continue
        adapter = _load_adapter(method)
        if adapter is None:
            skipped.append(method)
        else:
            found[method] = adapter
    return found, skipped


@dataclass
class BenchConfig:
    lg_k: int = DEFAULT_LG_K
    n_grid: list[int] = field(default_factory=lambda: [1 << e for e in range(13, 24)])
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    methods: tuple[str, ...] = DEFAULT_METHODS
    timing_repeats: int = DEFAULT_TIMING_REPEATS

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.n_grid or min(self.n_grid) < 1:
            raise ValueError("every n in the grid must be >= 1")
        if not 0 <= self.lg_k <= 26:
            raise ValueError(f"lg_k must be in [0, 26], got {self.lg_k}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")
        if self.timing_repeats < 1:
            raise ValueError("timing_repeats must be >= 1")

    @property
    def k(self) -> int:
        return 1 << self.lg_k


@dataclass(frozen=True)
class BenchRecord:
    n: int
    trial: int
    method: str
    size_bytes: int
    serialize_ns: int
    deserialize_ns: int
    entropy_bound_bytes: float
    estimate: float


COLUMNS = tuple(f.name for f in fields(BenchRecord))


def entropy_bound_bytes(n: int, k: int) -> float:
    """Entropy of the retained key set in bytes plus the 16-byte header."""
    return hkn_approx(KEY_SPACE, n, min(k, n)).bytes + codec.HEADER_SIZE


def build_sketch(n: int, k: int, seed: int) -> KMVSketch:
    sk = KMVSketch(k)
    for chunk in synthetic_chunks(n, seed):
        sk.update_hashes(chunk)
    return sk


def median_ns(fn: Callable[[], object], repeats: int) -> int:
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        samples.append(time.perf_counter_ns() - t0)
    return int(statistics.median(samples))


def measure(
    sketch: KMVSketch,
    method: str,
    adapter: Adapter | None = None,
    repeats: int = DEFAULT_TIMING_REPEATS,
) -> tuple[int, int, int]:
    """``(size_bytes, serialize_ns, deserialize_ns)`` for one method.

    Raises ``AssertionError`` if the method fails to round-trip.
    """
    keys = sketch.keys
    if method == "ours":
        ser = lambda: codec.encode(keys)  # noqa: E731
        de = codec.decode
    elif method == "raw":
        ser = lambda: codec.encode_uncompressed(keys)  # noqa: E731
        de = codec.decode_uncompressed
    else:
        if adapter is None:
            raise ValueError(f"method {method!r} needs an adapter")
        ser = lambda: adapter.compress(codec.encode_uncompressed(keys))  # noqa: E731
        de = lambda b: codec.decode_uncompressed(adapter.decompress(b))  # noqa: E731
    blob = ser()
    assert np.array_equal(de(blob), keys), f"{method} failed to round-trip"
    return len(blob), median_ns(ser, repeats), median_ns(lambda: de(blob), repeats)


def run_bench(cfg: BenchConfig, adapters: dict[str, Adapter] | None = None) -> Iterator[BenchRecord]:
    """One record per (n, trial, method); sizes are deterministic in ``cfg.seed``."""
    if adapters is None:
        adapters, _ = available_adapters(cfg.methods)
    methods = [m for m in cfg.methods if m in ("ours", "raw") or m in adapters]
    for n in cfg.n_grid:
        bound = entropy_bound_bytes(n, cfg.k)
        for trial in range(cfg.trials):
            sk = build_sketch(n, cfg.k, trial_seed(cfg.seed, n, trial))
            est = sk.estimate().estimate
            for method in methods:
                size, ser_ns, de_ns = measure(sk, method, adapters.get(method), cfg.timing_repeats)
                yield BenchRecord(n, trial, method, size, ser_ns, de_ns, bound, est)


def write_csv(records: Iterable[BenchRecord], out: TextIO, notes: Iterable[str] = ()) -> int:
    """Write ``#`` note lines, the header, then one row per record. Returns row count."""
    for note in notes:
        out.write(f"# {note}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    count = 0
    for rec in records:
        w.writerow(astuple(rec))
        count += 1
    return count


def read_csv(src: TextIO) -> list[BenchRecord]:
    rows = csv.DictReader(line for line in src if not line.startswith("#"))
    if rows.fieldnames is not None and tuple(rows.fieldnames) != COLUMNS:
        raise ValueError(f"unexpected CSV columns {rows.fieldnames}")
    return [
        BenchRecord(
            n=int(r["n"]),
            trial=int(r["trial"]),
            method=r["method"],
            size_bytes=int(r["size_bytes"]),
            serialize_ns=int(r["serialize_ns"]),
            deserialize_ns=int(r["deserialize_ns"]),
            entropy_bound_bytes=float(r["entropy_bound_bytes"]),
            estimate=float(r["estimate"]),
        )
        for r in rows
    ]


@dataclass(frozen=True)
class Summary:
    n: int
    method: str
    trials: int
    mean_size: float
    mean_entropy_ratio: float
    mean_raw_ratio: float
    median_serialize_ns: float


def summarize(records: Iterable[BenchRecord]) -> list[Summary]:
    """Per (n, method) means; ratios are taken against the raw size of the same trial."""
    records = list(records)
    raw = {(r.n, r.trial): r.size_bytes for r in records if r.method == "raw"}
    groups: dict[tuple[int, str], list[BenchRecord]] = defaultdict(list)
    for r in records:
        groups[(r.n, r.method)].append(r)
    out = []
    for (n, method), rs in sorted(groups.items()):
        raw_ratios = [r.size_bytes / raw[(n, r.trial)] for r in rs if (n, r.trial) in raw]
        out.append(
            Summary(
                n=n,
                method=method,
                trials=len(rs),
                mean_size=statistics.fmean(r.size_bytes for r in rs),
                mean_entropy_ratio=statistics.fmean(r.size_bytes / r.entropy_bound_bytes for r in rs),
                mean_raw_ratio=statistics.fmean(raw_ratios) if raw_ratios else float("nan"),
                median_serialize_ns=statistics.median(r.serialize_ns for r in rs),
            )
        )
    return out
