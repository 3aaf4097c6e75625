"""``kmvc`` command-line tool.

Exit codes: 0 success, 1 validation failure, 2 usage, 3 I/O,
4 format or corruption, 5 configuration mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import re
import sys
import tempfile
from typing import Iterator, Sequence

from . import bench, codec, entropy
from .errors import CodecError, ConfigMismatchError, DomainError, OverflowGuardError
from .hashing import DEFAULT_SEED, HashConfig
from .sketch import DEFAULT_LG_K, KMVSketch
from .validate import SUITES, run_all

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_CONFIG = 5

MAX_LG_K = 26


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


# -- argument types -------------------------------------------------------


def _lg_k(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_LG_K:
        raise argparse.ArgumentTypeError(f"lg-k must be in [0, {MAX_LG_K}]")
    return value


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


_POWER = re.compile(r"^\s*(\d+)\s*(?:\^|\*\*)\s*(\d+)\s*$")


def parse_count(text: str) -> int:
    """Integer with optional power syntax: ``4096``, ``2^63``, ``2**12``, ``1e6``."""
    m = _POWER.match(text)
    if m:
        return int(m.group(1)) ** int(m.group(2))
    try:
        return int(text, 0)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        return int(value)


def parse_grid(text: str) -> list[int]:
    """``pow2:13..23`` or a comma list of counts."""
    if text.startswith("pow2:"):
        lo, sep, hi = text[5:].partition("..")
        if not sep:
            raise argparse.ArgumentTypeError("expected pow2:LO..HI")
        return [1 << e for e in range(int(lo), int(hi) + 1)]
    grid = [parse_count(part) for part in text.split(",") if part.strip()]
    if not grid:
        raise argparse.ArgumentTypeError("empty grid")
    return grid


def parse_methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    unknown = set(methods) - set(bench.METHODS)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown methods: {', '.join(sorted(unknown))}")
    return methods


def _default_seed() -> int:
    env = os.environ.get("KMVC_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return _u64(env)
    except (ValueError, argparse.ArgumentTypeError):
        raise UsageError(f"KMVC_SEED is not an unsigned 64-bit integer: {env!r}") from None


# -- I/O helpers ----------------------------------------------------------


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as f:
        return f.read()


def write_atomic(path: str, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename over ``path``."""
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".kmvc-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def iter_column(raw: bytes, column: str, header: bool = True) -> Iterator[bytes]:
    """Cell values of one CSV column as the original bytes."""
    text = raw.decode("utf-8", errors="surrogateescape")
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        first = next(reader, None)
        if first is None:
            return
        if header:
            if column in first:
                idx = first.index(column)
            elif column.isdigit():
                idx = int(column)
            else:
                raise ParseError(f"column {column!r} not in header {first}")
            rows = reader
        else:
            if not column.isdigit():
                raise UsageError("--no-header needs a numeric --column")
            idx = int(column)
            rows = _chain([first], reader)
        for line_no, row in enumerate(rows, start=2 if header else 1):
            if not row:
                continue
            if idx >= len(row):
                raise ParseError(f"row {line_no} has no column {idx}")
            yield row[idx].encode("utf-8", errors="surrogateescape")
    except csv.Error as exc:
        raise ParseError(f"bad CSV: {exc}") from None


def _chain(head, tail):
    yield from head
    yield from tail


# -- commands -------------------------------------------------------------


def cmd_build(args: argparse.Namespace) -> int:
    data = _read_bytes(args.input)
    sk = KMVSketch(1 << args.lg_k, HashConfig(seed=args.seed))
    sk.update_many(iter_column(data, args.column, header=not args.no_header))
    blob = sk.to_bytes(compressed=not args.raw)
    write_atomic(args.out, blob)
    est = sk.estimate()
    print(
        f"keys={len(sk)} estimate={est.estimate:.6g} is_exact={est.is_exact} bytes={len(blob)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_compress(args: argparse.Namespace) -> int:
    keys = codec.decode_any(_read_bytes(args.input))
    write_atomic(args.out, codec.encode(keys))
    return EXIT_OK


def cmd_decompress(args: argparse.Namespace) -> int:
    keys = codec.decode_any(_read_bytes(args.input))
    write_atomic(args.out, codec.encode_uncompressed(keys))
    return EXIT_OK


def cmd_merge(args: argparse.Namespace) -> int:
    k = 1 << args.lg_k
    blobs = [_read_bytes(p) for p in args.inputs]
    for path, blob in zip(args.inputs, blobs):
        count = codec.read_header(blob).count
        if count > k:
            raise ConfigMismatchError(f"{path} holds {count} keys, more than k={k}")
    result = codec.merge_blobs(blobs, k, early_stop=args.early_stop)
    write_atomic(args.out, codec.encode(result.keys))
    print(
        f"keys={result.keys.size} read={sum(result.bytes_read)}/{sum(result.bytes_total)} bytes",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    k = 1 << args.lg_k
    sk = KMVSketch.from_bytes(_read_bytes(args.input), k)
    est = sk.estimate()
    print(f"estimate={est.estimate:.17g}")
    print(f"is_exact={str(est.is_exact).lower()}")
    print(f"k={k}")
    print(f"count={len(sk)}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = bench.BenchConfig(
        lg_k=args.lg_k,
        n_grid=args.n_grid,
        trials=args.trials,
        seed=args.seed,
        methods=args.methods,
        timing_repeats=args.timing_repeats,
    )
    adapters, skipped = bench.available_adapters(cfg.methods)
    notes = [f"method {m} skipped: compressor unavailable" for m in skipped]
    for note in notes:
        print(note, file=sys.stderr)
    buf = io.StringIO()
    bench.write_csv(bench.run_bench(cfg, adapters), buf, notes)
    write_atomic(args.out, buf.getvalue().encode("utf-8"))
    return EXIT_OK


def cmd_entropy(args: argparse.Namespace) -> int:
    s, n, k = args.s, args.n, args.k
    hkn = entropy.hkn_approx(s, n, k)
    hbs = entropy.hbs_approx(s, n)
    rows = [
        ("hkn_approx_nats", hkn.nats),
        ("hkn_approx_bits_per_key", hkn.bits_per_key),
        ("hkn_approx_bytes", hkn.bytes),
        ("hkn_approx_bytes_with_header", hkn.bytes + codec.HEADER_SIZE),
        ("hbs_approx_nats", hbs.nats),
        ("hbs_approx_bits", hbs.bits),
    ]
    if n >= 3:
        rows.append(("predicted_min_leading_zeros", entropy.predicted_min_leading_zeros(n)))
    if s <= entropy.ENUMERATION_LIMIT:
        exact = entropy.hkn_exact(s, n, k)
        hbs_exact = entropy.hbs_exact(s, n)
        rows += [
            ("hkn_exact_nats", exact.nats),
            ("hkn_gap_bits_per_key", hkn.bits_per_key - exact.bits_per_key),
            ("hbs_exact_nats", hbs_exact.nats),
            ("hbs_gap_nats", hbs.nats - hbs_exact.nats),
        ]
    for name, value in rows:
        print(f"{name}={value:.10g}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    results = run_all(args.seed, args.suite)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK_FAILED


# -- parser ---------------------------------------------------------------


def build_parser(default_seed: int) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kmvc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, lg_k=True):
        if lg_k:
            sp.add_argument("--lg-k", type=_lg_k, default=DEFAULT_LG_K, help="log2 of k (default 12)")
        if seed:
            sp.add_argument(
                "--seed", type=_u64, default=default_seed, help="u64 seed (env KMVC_SEED sets the default)"
            )

    sp = sub.add_parser("build", help="sketch the distinct values of a CSV column")
    sp.add_argument("input", help="CSV file, or - for stdin")
    sp.add_argument("--column", default="0", help="column name or 0-based index")
    sp.add_argument("--no-header", action="store_true", help="first row is data")
    sp.add_argument("--raw", action="store_true", help="write the uncompressed format")
    sp.add_argument("--out", required=True)
    common(sp)
    sp.set_defaults(func=cmd_build)

    for name, func, text in (
        ("compress", cmd_compress, "convert a blob to the compressed format"),
        ("decompress", cmd_decompress, "convert a blob to the raw format"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("input")
        sp.add_argument("--out", required=True)
        sp.set_defaults(func=func)

    sp = sub.add_parser("merge", help="k least keys of the union of several blobs")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--out", required=True)
    sp.add_argument(
        "--early-stop",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="decode inputs lazily and stop once the result is settled (default on)",
    )
    common(sp, seed=False)
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("estimate", help="print the distinct-count estimate of a blob")
    sp.add_argument("input")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("bench", help="size and timing measurements over synthetic streams")
    common(sp)
    sp.add_argument("--trials", type=_positive, default=bench.DEFAULT_TRIALS)
    sp.add_argument("--n-grid", type=parse_grid, default=parse_grid("pow2:13..23"))
    sp.add_argument("--methods", type=parse_methods, default=bench.DEFAULT_METHODS)
    sp.add_argument("--timing-repeats", type=_positive, default=bench.DEFAULT_TIMING_REPEATS)
    sp.add_argument("--format", choices=["csv"], default="csv")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("entropy", help="entropy formulas for a key space s, n items, k kept")
    sp.add_argument("--s", type=parse_count, default=1 << 63)
    sp.add_argument("--n", type=parse_count, required=True)
    sp.add_argument("--k", type=parse_count, default=None, help="default min(4096, n)")
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("validate", help="run oracle self-checks")
    sp.add_argument("--suite", action="append", choices=sorted(SUITES))
    common(sp, lg_k=False)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(_default_seed())
    except UsageError as exc:
        print(f"kmvc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "k", 0) is None:
        args.k = min(1 << DEFAULT_LG_K, args.n)
    try:
        return args.func(args)
    except (UsageError, DomainError, OverflowGuardError) as exc:
        code, msg = EXIT_USAGE, exc
    except OSError as exc:
        code, msg = EXIT_IO, exc
    except ConfigMismatchError as exc:
        code, msg = EXIT_CONFIG, exc
    except (CodecError, ParseError) as exc:
        code, msg = EXIT_FORMAT, exc
    print(f"kmvc: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
