"""Benchmark harness: generation, measurement, and the scaling checks."""

import json

import pytest

from topocsg.bench import (
    BenchConfig,
    BenchError,
    BenchResult,
    BenchRow,
    check_scaling,
    generate_scene_text,
    run_bench,
)
from topocsg.scene import loads_scene


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs, fragment",
        [
            (dict(sizes=()), "positive"),
            (dict(sizes=(10, 0)), "positive"),
            (dict(sizes=(10, 10)), "strictly increasing"),
            (dict(sizes=(20, 10)), "strictly increasing"),
            (dict(repetitions=2), "at least 3"),
            (dict(edge_range=(0.0, 1.0)), "edge range"),
            (dict(edge_range=(2.0, 1.0)), "edge range"),
            (dict(edge_range=(1.0, 80.0)), "too large"),
            (dict(jobs=0), "jobs"),
        ],
    )
    def test_rejects(self, kwargs, fragment):
        with pytest.raises(BenchError, match=fragment):
            BenchConfig(**kwargs)

    def test_defaults(self):
        config = BenchConfig()
        assert config.sizes == (100, 250, 500, 1000)
        assert config.seed == 7 and config.repetitions == 3


class TestGeneration:
    def test_same_seed_same_text(self):
        config = BenchConfig(sizes=(16,), seed=11)
        assert generate_scene_text(16, config) == generate_scene_text(16, config)
        other = generate_scene_text(16, BenchConfig(sizes=(16,), seed=12))
        assert other != generate_scene_text(16, config)

    def test_generated_scene_is_valid_and_clear_of_the_boundary(self):
        config = BenchConfig(sizes=(40,), seed=5)
        text = generate_scene_text(40, config)
        scene = loads_scene(text)
        assert len(scene.objects) == 40
        assert [o.id for o in scene.objects[:2]] == ["box0000", "box0001"]
        assert all(o.classes == ("Box",) for o in scene.objects)

        margin = 4 * (config.universe_extent / 2**10)
        lo_e, hi_e = config.edge_range
        for raw in json.loads(text)["objects"]:
            lo = raw["geometry"]["min"]
            hi = raw["geometry"]["max"]
            for a, b in zip(lo, hi):
                assert margin <= a < b <= config.universe_extent - margin
                # rounding moves a face by < 1e-6, allow that much
                assert lo_e - 1e-5 <= b - a <= hi_e + 1e-5


class TestRunBench:
    def test_small_run_counts_and_cache(self):
        config = BenchConfig(sizes=(8, 16, 32), seed=3)
        result = run_bench(config)
        assert [r.n for r in result.rows] == [8, 16, 32]
        for row in result.rows:
            expected = row.n * (row.n - 1) // 2
            assert row.pairs == expected
            assert row.relate_calls == expected
            assert row.median_ms > 0
        assert set(result.cached_ms) == {8, 16, 32}
        assert all(v > 0 for v in result.cached_ms.values())
        assert set(result.answer_rows) == {8, 16, 32}

        csv = result.to_csv()
        lines = csv.splitlines()
        assert lines[0] == "n,pairs,median_ms,relate_calls"
        assert lines[2].startswith("16,120,")
        assert len(lines[2].split(",")[2].split(".")[1]) == 3  # %.3f medians

    def test_progress_callback(self):
        seen = []
        run_bench(BenchConfig(sizes=(8,), seed=3), progress=seen.append)
        assert any("n=8" in line for line in seen)


def _result(medians, sizes=(8, 16, 32), cached=None):
    config = BenchConfig(sizes=sizes, seed=3)
    rows = [
        BenchRow(n, n * (n - 1) // 2, m, n * (n - 1) // 2)
        for n, m in zip(sizes, medians)
    ]
    cached_ms = {sizes[-1]: cached} if cached is not None else {}
    return BenchResult(config, rows, cached_ms, {})


class TestScalingChecks:
    def test_passes_in_band(self):
        report = check_scaling(_result([1.0, 4.0, 16.0], cached=1.0))
        assert report.passed
        assert any("quadratic predicts 4" in line for line in report.lines)
        assert any("16.0x faster" in line for line in report.lines)

    def test_flags_out_of_band_ratio(self):
        report = check_scaling(_result([1.0, 4.0, 40.0], cached=1.0))
        assert not report.passed
        assert any(line.startswith("[FAIL] time ratio") for line in report.lines)

    def test_flags_slow_cache(self):
        report = check_scaling(_result([1.0, 4.0, 16.0], cached=8.0))
        assert not report.passed
        assert any("cached re-run" in line and "FAIL" in line
                   for line in report.lines)

    def test_needs_three_sizes(self):
        config = BenchConfig(sizes=(8, 16), seed=3)
        result = BenchResult(config, [
            BenchRow(8, 28, 1.0, 28), BenchRow(16, 120, 4.0, 120)
        ], {16: 0.5}, {})
        with pytest.raises(BenchError, match="three sizes"):
            check_scaling(result)

    def test_needs_doubled_last_size(self):
        with pytest.raises(BenchError, match="double"):
            check_scaling(_result([1.0, 4.0, 9.0], sizes=(8, 16, 24), cached=1.0))

    def test_needs_cached_timing(self):
        with pytest.raises(BenchError, match="cached"):
            check_scaling(_result([1.0, 4.0, 16.0]))
