import io

import numpy as np
import pytest

from kmvc import bench, codec
from kmvc.entropy import hkn_approx


def small_cfg(**kw):
    base = dict(lg_k=8, n_grid=[100, 600, 5000], trials=3, seed=11, methods=bench.METHODS, timing_repeats=3)
    base.update(kw)
    return bench.BenchConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        bench.BenchConfig(trials=0)
    with pytest.raises(ValueError):
        bench.BenchConfig(n_grid=[0])
    with pytest.raises(ValueError):
        bench.BenchConfig(methods=("ours", "lz4"))
    cfg = bench.BenchConfig()
    assert cfg.k == 4096 and cfg.trials == 256
    assert cfg.n_grid[0] == 2**13 and cfg.n_grid[-1] == 2**23


def test_records_cover_grid_and_methods():
    cfg = small_cfg()
    recs = list(bench.run_bench(cfg))
    assert len(recs) == len(cfg.n_grid) * cfg.trials * len(bench.METHODS)
    for r in recs:
        assert r.size_bytes >= 16
        assert r.entropy_bound_bytes > 0
        assert r.serialize_ns > 0 and r.deserialize_ns > 0


def test_entropy_bound_column():
    assert bench.entropy_bound_bytes(5000, 256) == pytest.approx(hkn_approx(2**63, 5000, 256).bytes + 16)
    # below k every key is kept
    assert bench.entropy_bound_bytes(100, 256) == pytest.approx(hkn_approx(2**63, 100, 100).bytes + 16)


def test_sizes_are_deterministic():
    a = [(r.n, r.trial, r.method, r.size_bytes, r.estimate) for r in bench.run_bench(small_cfg())]
    b = [(r.n, r.trial, r.method, r.size_bytes, r.estimate) for r in bench.run_bench(small_cfg())]
    assert a == b
    c = [(r.n, r.trial, r.method, r.size_bytes) for r in bench.run_bench(small_cfg(seed=12))]
    assert [x[3] for x in a if x[2] == "ours"] != [x[3] for x in c if x[2] == "ours"]


def test_ours_beats_raw_in_estimation_mode():
    recs = list(bench.run_bench(small_cfg(n_grid=[1000, 5000], methods=("ours", "raw"))))
    raw = {(r.n, r.trial): r.size_bytes for r in recs if r.method == "raw"}
    for r in recs:
        if r.method == "ours":
            assert r.size_bytes < raw[(r.n, r.trial)]


def test_csv_round_trip():
    recs = list(bench.run_bench(small_cfg(trials=2)))
    buf = io.StringIO()
    rows = bench.write_csv(recs, buf, notes=["method block skipped: test"])
    text = buf.getvalue()
    assert text.startswith("# method block skipped: test\n")
    assert text.splitlines()[1] == ",".join(bench.COLUMNS)
    assert rows == len(recs)
    assert bench.read_csv(io.StringIO(text)) == recs


def test_read_csv_rejects_other_schema():
    with pytest.raises(ValueError):
        bench.read_csv(io.StringIO("a,b\n1,2\n"))


def test_adapters_round_trip():
    adapters, skipped = bench.available_adapters(bench.METHODS)
    assert set(adapters) | set(skipped) == {"deflate", "block"}
    keys = np.arange(1, 500, 3, dtype=np.uint64)
    raw = codec.encode_uncompressed(keys)
    for adapter in adapters.values():
        assert adapter.decompress(adapter.compress(raw)) == raw


def test_missing_adapter_is_skipped(monkeypatch):
    monkeypatch.setattr(bench, "_load_adapter", lambda method: None)
    adapters, skipped = bench.available_adapters(("ours", "deflate", "block"))
    assert adapters == {} and skipped == ["deflate", "block"]
    recs = list(bench.run_bench(small_cfg(trials=1, n_grid=[300], methods=("ours", "deflate")), adapters))
    assert [r.method for r in recs] == ["ours"]


def test_generic_compressors_inflate_small_sketches():
    recs = list(bench.run_bench(small_cfg(lg_k=12, n_grid=[271], trials=4)))
    by = {}
    for r in recs:
        by.setdefault(r.method, []).append(r.size_bytes)
    raw = np.mean(by["raw"])
    assert np.mean(by["ours"]) < raw
    assert np.mean(by["block"]) > raw


def test_summarize():
    recs = list(bench.run_bench(small_cfg(methods=("ours", "raw"))))
    summary = {(s.n, s.method): s for s in bench.summarize(recs)}
    assert summary[(5000, "raw")].mean_raw_ratio == 1.0
    assert summary[(5000, "ours")].mean_raw_ratio < 1.0
    assert summary[(5000, "ours")].trials == 3
