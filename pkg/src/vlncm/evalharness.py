"""Metrics and the multi-episode evaluation suite.

Success rate counts episodes where the agent issued stop within the
success radius of the goal; SPL weights each success by
``shortest / max(taken, shortest)``; collision rate is the mean number of
blocked forward attempts per episode. The suite runner evaluates every
(config, episode) pair, optionally in parallel, with per-episode RNGs
derived from (seed, config label, episode id) so scheduling cannot perturb
results.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .rng import derive_rng

DEFAULT_SUCCESS_RADIUS = 3.0


@dataclass(frozen=True)
class EpisodeResult:
    episode_id: str
    config_label: str
    success: bool
    path_length: float
    shortest_path_length: float
    collisions: int
    steps: int
    final_distance_to_goal: float
    stopped: bool
    failure_reason: str | None = None
    trajectory: tuple = field(default=(), compare=False)

    def to_dict(self) -> dict:
        d = {
            "episode_id": self.episode_id,
            "config_label": self.config_label,
            "success": self.success,
            "path_length": round(self.path_length, 4),
            "shortest_path_length": round(self.shortest_path_length, 4),
            "collisions": self.collisions,
            "steps": self.steps,
            "final_distance_to_goal": round(self.final_distance_to_goal, 4),
            "stopped": self.stopped,
            "failure_reason": self.failure_reason,
        }
        if self.trajectory:
            d["trajectory"] = list(self.trajectory)
        return d


@dataclass(frozen=True)
class MetricsSummary:
    config_label: str
    sr: float
    spl: float
    collision_rate: float
    n_episodes: int


class UndefinedMetricError(ValueError):
    """Metric requested over an empty result set."""


def judge_success(final_position, goal, stopped: bool, success_radius: float = DEFAULT_SUCCESS_RADIUS) -> bool:
    """Stopped within the radius. Budget exhaustion is never a success."""
    if success_radius <= 0:
        raise ValueError("success_radius must be positive")
    if not stopped:
        return False
    d = math.hypot(float(final_position[0]) - float(goal[0]), float(final_position[1]) - float(goal[1]))
    return d <= success_radius


def compute_spl(results) -> float:
    """Mean of success * shortest / max(taken, shortest) over episodes."""
    results = list(results)
    if not results:
        raise UndefinedMetricError("SPL over zero episodes is undefined")
    total = 0.0
    for r in results:
        if r.shortest_path_length <= 0:
            raise ValueError(f"episode {r.episode_id} has non-positive shortest path")
        if r.success:
            total += r.shortest_path_length / max(r.path_length, r.shortest_path_length)
    return total / len(results)


def summarize(results, config_label: str) -> MetricsSummary:
    results = list(results)
    if not results:
        raise UndefinedMetricError(f"no results for config {config_label!r}")
    sr = sum(1 for r in results if r.success) / len(results)
    return MetricsSummary(
        config_label=config_label,
        sr=sr,
        spl=compute_spl(results),
        collision_rate=sum(r.collisions for r in results) / len(results),
        n_episodes=len(results),
    )


def _failure_result(episode, label, reason) -> EpisodeResult:
    sx, sy = episode.start.x, episode.start.y
    return EpisodeResult(
        episode_id=episode.id,
        config_label=label,
        success=False,
        path_length=0.0,
        shortest_path_length=episode.shortest_path_length,
        collisions=0,
        steps=0,
        final_distance_to_goal=math.hypot(sx - episode.goal[0], sy - episode.goal[1]),
        stopped=False,
        failure_reason=reason,
    )


def run_suite(
    episodes,
    floorplans_by_id,
    configs,
    seed: int = 0,
    parallelism: int = 1,
    success_radius: float = DEFAULT_SUCCESS_RADIUS,
):
    """Evaluate every (config, episode) pair and aggregate per config.

    ``configs`` is a list of ``(label, runner)`` where
    ``runner(episode, floorplan, rng) -> EpisodeResult``. A runner that
    raises is recorded as a failed episode; the suite continues. Returns
    ``(summaries, results)`` with results sorted by (label order, episode
    id) independent of scheduling.
    """
    episodes = list(episodes)
    configs = list(configs)
    if not episodes:
        raise ValueError("episode list must be non-empty")
    if not configs:
        raise ValueError("need at least one agent config")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def run_one(label, runner, episode):
        fp = floorplans_by_id[episode.floorplan_id]
        rng = derive_rng(seed, label, episode.id)
        try:
            result = runner(episode, fp, rng)
        except Exception as exc:  # noqa: BLE001 - failure isolation per episode
            return _failure_result(episode, label, f"error: {exc}")
        # Same rule as judge_success, applied to the recorded goal distance.
        success = result.stopped and result.final_distance_to_goal <= success_radius
        return replace(result, config_label=label, success=success)

    tasks = [(label, runner, ep) for label, runner in configs for ep in episodes]
    if parallelism == 1:
        results = [run_one(*t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(lambda t: run_one(*t), tasks))

    label_order = {label: i for i, (label, _) in enumerate(configs)}
    results.sort(key=lambda r: (label_order[r.config_label], r.episode_id))
    summaries = [
        summarize([r for r in results if r.config_label == label], label)
        for label, _ in configs
    ]
    return summaries, results


def write_report(summaries, results, out_dir) -> list:
    """Write the results table (CSV), per-episode details (JSONL) and a
    plain-text summary table. Deterministic bytes for identical inputs."""
    summaries = list(summaries)
    results = list(results)
    if not summaries or not results:
        raise ValueError("refusing to write an empty report")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    csv_path = out / "results.csv"
    lines = ["config,sr,spl,collision_rate,n_episodes"]
    for s in summaries:
        lines.append(f"{s.config_label},{s.sr:.4f},{s.spl:.4f},{s.collision_rate:.4f},{s.n_episodes}")
    csv_path.write_text("\n".join(lines) + "\n")

    detail_path = out / "episodes.jsonl"
    with detail_path.open("w") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")

    txt_path = out / "report.txt"
    w = max(len(s.config_label) for s in summaries)
    w = max(w, len("Model"))
    rows = [f"{'Model':<{w}}  {'SR':>6}  {'SPL':>6}  {'Collision':>9}  {'N':>4}"]
    rows.append("-" * len(rows[0]))
    for s in summaries:
        rows.append(
            f"{s.config_label:<{w}}  {s.sr:>6.2f}  {s.spl:>6.2f}  {s.collision_rate:>9.2f}  {s.n_episodes:>4}"
        )
    txt_path.write_text("\n".join(rows) + "\n")

    return [csv_path, detail_path, txt_path]
