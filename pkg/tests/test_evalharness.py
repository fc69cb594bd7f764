import math

import pytest

from vlncm.evalharness import (
    EpisodeResult,
    UndefinedMetricError,
    compute_spl,
    judge_success,
    run_suite,
    summarize,
    write_report,
)
from vlncm.worldgen import generate_batch


def result(ep="e1", label="full", success=False, path=10.0, shortest=10.0,
           collisions=0, dist=5.0, stopped=False):
    return EpisodeResult(
        episode_id=ep, config_label=label, success=success, path_length=path,
        shortest_path_length=shortest, collisions=collisions, steps=10,
        final_distance_to_goal=dist, stopped=stopped,
    )


class TestJudgeSuccess:
    def test_stopped_inside_radius(self):
        assert judge_success((1.0, 1.2), (1.0, 2.0), stopped=True)

    def test_exact_boundary_counts(self):
        assert judge_success((0.0, 0.0), (3.0, 0.0), stopped=True)

    def test_budget_exhaustion_is_never_success(self):
        assert not judge_success((1.0, 1.0), (1.0, 1.0), stopped=False)

    def test_outside_radius(self):
        assert not judge_success((0.0, 0.0), (0.0, 3.01), stopped=True)


class TestSpl:
    def test_half(self):
        r = [result(success=True, shortest=10.0, path=20.0)]
        assert compute_spl(r) == pytest.approx(0.5, abs=1e-12)

    def test_optimal_path(self):
        r = [result(success=True, shortest=10.0, path=10.0)]
        assert compute_spl(r) == pytest.approx(1.0, abs=1e-12)

    def test_mixed(self):
        r = [
            result(ep="a", success=True, shortest=10.0, path=20.0),
            result(ep="b", success=False, shortest=10.0, path=5.0),
        ]
        assert compute_spl(r) == pytest.approx(0.25, abs=1e-12)

    def test_zero_path_success_counts_one(self):
        r = [result(success=True, shortest=2.0, path=0.0)]
        assert compute_spl(r) == pytest.approx(1.0, abs=1e-12)

    def test_short_path_does_not_exceed_one(self):
        r = [result(success=True, shortest=10.0, path=3.0)]
        assert compute_spl(r) == pytest.approx(1.0, abs=1e-12)

    def test_empty_is_error(self):
        with pytest.raises(UndefinedMetricError):
            compute_spl([])

    def test_spl_bounded_by_sr(self):
        rs = [
            result(ep="a", success=True, shortest=5.0, path=9.0),
            result(ep="b", success=True, shortest=5.0, path=5.0),
            result(ep="c", success=False),
            result(ep="d", success=False),
        ]
        s = summarize(rs, "cfg")
        assert 0.0 <= s.spl <= s.sr <= 1.0


class TestCollisionRate:
    def test_mean_of_counts(self):
        rs = [result(ep=str(i), collisions=c) for i, c in enumerate((0, 3, 9))]
        assert summarize(rs, "x").collision_rate == pytest.approx(4.0)


def fake_runner(final_dist=1.0, stopped=True, collisions=0, raise_for=()):
    def runner(episode, floorplan, rng):
        if episode.id in raise_for:
            raise RuntimeError("synthetic crash")
        return EpisodeResult(
            episode_id=episode.id, config_label="lbl", success=False,
            path_length=episode.shortest_path_length + rng.random(),
            shortest_path_length=episode.shortest_path_length,
            collisions=collisions, steps=3,
            final_distance_to_goal=final_dist, stopped=stopped,
        )

    return runner


class TestRunSuite:
    @pytest.fixture(scope="class")
    def world(self):
        fps, eps = generate_batch(13, 2)
        return {f.id: f for f in fps}, eps

    def test_judges_success_centrally(self, world):
        fpd, eps = world
        summaries, results = run_suite(eps, fpd, [("lbl", fake_runner(final_dist=1.0))], seed=1)
        assert summaries[0].sr == 1.0
        summaries, _ = run_suite(eps, fpd, [("lbl", fake_runner(final_dist=9.0))], seed=1)
        assert summaries[0].sr == 0.0
        summaries, _ = run_suite(eps, fpd, [("lbl", fake_runner(final_dist=1.0, stopped=False))], seed=1)
        assert summaries[0].sr == 0.0

    def test_parallelism_invariance(self, world):
        fpd, eps = world
        cfg = [("lbl", fake_runner())]
        s1, r1 = run_suite(eps, fpd, cfg, seed=9, parallelism=1)
        s8, r8 = run_suite(eps, fpd, cfg, seed=9, parallelism=8)
        assert s1 == s8
        assert r1 == r8

    def test_failure_isolation(self, world):
        fpd, eps = world
        bad = eps[0].id
        summaries, results = run_suite(eps, fpd, [("lbl", fake_runner(raise_for={bad}))], seed=1)
        failed = [r for r in results if r.episode_id == bad]
        assert len(failed) == 1
        assert failed[0].failure_reason.startswith("error:")
        ok = [r for r in results if r.episode_id != bad]
        assert all(r.failure_reason is None for r in ok)
        assert summaries[0].n_episodes == len(eps)

    def test_config_bookkeeping(self, world):
        fpd, eps = world
        configs = [(lbl, fake_runner()) for lbl in ("a", "b", "c", "d")]
        summaries, results = run_suite(eps, fpd, configs, seed=2)
        assert [s.config_label for s in summaries] == ["a", "b", "c", "d"]
        assert all(s.n_episodes == len(eps) for s in summaries)
        assert len(results) == 4 * len(eps)

    def test_empty_inputs_rejected(self, world):
        fpd, eps = world
        with pytest.raises(ValueError):
            run_suite([], fpd, [("a", fake_runner())])
        with pytest.raises(ValueError):
            run_suite(eps, fpd, [])


class TestWriteReport:
    def test_files_and_contents(self, tmp_path):
        rs = [
            result(ep="a", label="full", success=True, shortest=4.0, path=8.0, stopped=True, dist=1.0),
            result(ep="b", label="full", success=False),
        ]
        summaries = [summarize(rs, "full")]
        files = write_report(summaries, rs, tmp_path)
        csv = (tmp_path / "results.csv").read_text().splitlines()
        assert csv[0] == "config,sr,spl,collision_rate,n_episodes"
        assert csv[1] == "full,0.5000,0.2500,0.0000,2"
        assert (tmp_path / "episodes.jsonl").read_text().count("\n") == 2
        assert "Model" in (tmp_path / "report.txt").read_text()
        assert len(files) == 3

    def test_rerun_is_byte_identical(self, tmp_path):
        rs = [result(ep="a", label="x", success=True, stopped=True, dist=0.5)]
        summaries = [summarize(rs, "x")]
        write_report(summaries, rs, tmp_path / "r1")
        write_report(summaries, rs, tmp_path / "r2")
        for name in ("results.csv", "episodes.jsonl", "report.txt"):
            assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()

    def test_empty_refused_without_partial_files(self, tmp_path):
        out = tmp_path / "empty"
        with pytest.raises(ValueError):
            write_report([], [], out)
        assert not out.exists()
