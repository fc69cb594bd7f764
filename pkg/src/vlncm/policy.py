"""The navigation agent: view selection by image-text similarity, rule-based
progress monitoring, collision-aware waypoint planning, low-level action
decomposition, plus the baseline agents and ablation variants.

Each planning cycle the agent renders the 12-view panorama, scores every
view against the current attention spot, lets the progress monitor decide
whether the spot was passed, picks the best view's center as the movement
heading, reads a collision-free distance out of the occupancy mask, and
executes the resulting turn/forward actions.
"""

from __future__ import annotations

import base64
import json
import math
import os
from dataclasses import dataclass, replace

import numpy as np
import requests

from . import geometry as geo
from .evalharness import EpisodeResult
from .language import ParserError, normalize_phrase, parse_instruction, whole_instruction_sequence
from .perception import (
    MASK_RANGE,
    OccupancyMask,
    angle_bin_of,
    depth_to_occupancy,
    max_free_distance,
)
from .world import (
    AGENT_RADIUS,
    DEFAULT_RAYS_PER_VIEW,
    NUM_VIEWS,
    STEP_DISTANCE,
    TURN_DEGREES,
    Episode,
    Floorplan,
    Pose,
    render_depth_panorama,
    sight_occluded,
    step_forward,
    view_center,
    view_index_of,
)

FORWARD = "forward"
TURN_LEFT = "turn_left"
TURN_RIGHT = "turn_right"
STOP = "stop"

SCORE_FLOOR = 0.05

SCORER_URL_ENV = "VLNCM_SCORER_URL"


class ScorerError(RuntimeError):
    """A similarity scorer failed on some view; the episode fails cleanly."""


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    view_index: int
    spot: str


@dataclass(frozen=True)
class Observation:
    """Everything a scorer may look at for one agent state."""

    floorplan: Floorplan
    pose: Pose
    panorama: object  # DepthPanorama


def _labels_match(spot: str, label: str) -> bool:
    s, l = normalize_phrase(spot), normalize_phrase(label)
    return bool(s) and bool(l) and (s == l or l in s or s in l)


def _arcs_overlap(center_a: float, half_a: float, lo_b: float, hi_b: float) -> bool:
    """Does the arc center_a +/- half_a intersect the arc [lo_b, hi_b)?"""
    gap = abs(geo.signed_delta(center_a, (lo_b + hi_b) / 2.0))
    return gap <= half_a + (hi_b - lo_b) / 2.0


class MockSimilarityScorer:
    """Deterministic stand-in for an image-text similarity service.

    A view scores above the floor only when the spot's landmark is visible
    in it un-occluded; the score grows as the landmark gets closer and more
    centered: ``clamp(1/(1+d), 0.05, 1) * (1 - |offset|/15 * 0.25)``. The
    landmark's angular extent (disc of its radius) decides which views
    contain it, so a landmark straddling a view boundary scores in both
    neighbors.
    """

    def score_view(self, obs: Observation, view_index: int, spot: str) -> float:
        lo = view_index * 30.0
        hi = lo + 30.0
        best = SCORE_FLOOR
        for lm in obs.floorplan.landmarks:
            if not _labels_match(spot, lm.label):
                continue
            d = math.hypot(lm.x - obs.pose.x, lm.y - obs.pose.y)
            if d < 1e-9:
                half = 180.0
                brg = 0.0
            else:
                half = 180.0 if d <= lm.radius else math.degrees(math.asin(lm.radius / d))
                brg = geo.bearing_deg((obs.pose.x, obs.pose.y), (lm.x, lm.y))
            if not _arcs_overlap(brg, half, lo, hi):
                continue
            if sight_occluded(obs.floorplan, (obs.pose.x, obs.pose.y), (lm.x, lm.y)):
                continue
            offset = abs(geo.signed_delta(brg, view_center(view_index)))
            score = max(SCORE_FLOOR, min(1.0, 1.0 / (1.0 + d))) * (1.0 - offset / 15.0 * 0.25)
            best = max(best, min(1.0, max(SCORE_FLOOR, score)))
        return best


class RemoteSimilarityScorer:
    """Client for an image-text similarity endpoint.

    Sends ``{"image": <base64 view descriptor>, "text": spot}`` per view and
    expects ``{"score": <0..1>}``. Endpoint from ``VLNCM_SCORER_URL``.
    """

    def __init__(self, url: str | None = None, timeout_s: float = 20.0):
        self.url = url or os.environ.get(SCORER_URL_ENV)
        if not self.url:
            raise ScorerError(f"remote scorer needs {SCORER_URL_ENV} set")
        self.timeout_s = timeout_s

    def score_view(self, obs: Observation, view_index: int, spot: str) -> float:
        descriptor = {
            "view_index": view_index,
            "depths": [round(float(d), 4) for d in obs.panorama.views[view_index]],
        }
        payload = {
            "image": base64.b64encode(json.dumps(descriptor).encode("utf-8")).decode("ascii"),
            "text": spot,
        }
        try:
            resp = requests.post(self.url, json=payload, timeout=self.timeout_s)
            resp.raise_for_status()
            value = float(resp.json()["score"])
        except Exception as exc:  # noqa: BLE001
            raise ScorerError(f"remote scorer failed on view {view_index}: {exc}") from exc
        return min(1.0, max(0.0, value))


def score_views(scorer, observation: Observation, spot: str) -> list:
    """One SimilarityScore per panorama view, in view order."""
    scores = []
    for i in range(NUM_VIEWS):
        try:
            value = float(scorer.score_view(observation, i, spot))
        except ScorerError:
            raise
        except Exception as exc:  # noqa: BLE001
            raise ScorerError(f"scorer failed on view {i}: {exc}") from exc
        if not (0.0 <= value <= 1.0) or not math.isfinite(value):
            raise ScorerError(f"scorer returned out-of-range value {value} on view {i}")
        scores.append(SimilarityScore(value=value, view_index=i, spot=spot))
    return scores


def select_view(scores, current_heading: float) -> int:
    """Argmax view; ties broken by least turn from the heading, then index."""
    if len(scores) != NUM_VIEWS:
        raise ValueError(f"need {NUM_VIEWS} scores, got {len(scores)}")
    best = max(s.value for s in scores)
    candidates = [s.view_index for s in scores if s.value == best]
    return min(
        candidates,
        key=lambda i: (abs(geo.signed_delta(view_center(i), current_heading)), i),
    )


@dataclass(frozen=True)
class ProgressState:
    """Where the agent is within its attention-spot sequence."""

    spots: object  # AttentionSpotSequence
    current_index: int = 0
    history: tuple = ()
    consecutive_decreases: int = 0

    @property
    def current_spot(self) -> str:
        return self.spots.spots[self.current_index]

    @property
    def on_last_spot(self) -> bool:
        return self.current_index == len(self.spots.spots) - 1


CONTINUE = "continue"
ADVANCE = "advance"
FINISH = "finish"


def update_progress(state: ProgressState, step_max_similarity: float, threshold: int = 2):
    """Advance the spot pointer after `threshold` consecutive strict drops.

    Appends the step similarity to the history; a strict decrease bumps the
    counter, anything else resets it. Reaching the threshold advances to
    the next spot (resetting history) or finishes on the last one.
    """
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    v = float(step_max_similarity)
    if state.history and v < state.history[-1]:
        decreases = state.consecutive_decreases + 1
    else:
        decreases = 0
    if decreases >= threshold:
        if state.on_last_spot:
            return replace(state, history=state.history + (v,), consecutive_decreases=decreases), FINISH
        return (
            replace(
                state,
                current_index=state.current_index + 1,
                history=(),
                consecutive_decreases=0,
            ),
            ADVANCE,
        )
    return replace(state, history=state.history + (v,), consecutive_decreases=decreases), CONTINUE


@dataclass(frozen=True)
class Waypoint:
    heading: float  # absolute degrees
    distance: float  # meters, multiple of 0.25 in [0, 3.0]


def plan_waypoint(view_index: int, mask: OccupancyMask, scores) -> Waypoint:
    """Pick a movement heading and a collision-free distance.

    Tries the selected view's center first; if the mask blocks it at the
    first cell, falls back through the remaining views in descending score
    order (ties to lower index). If every view is blocked, returns the
    selected view's heading with distance 0 (rotation-only step).
    """
    order = [view_index] + [
        s.view_index
        for s in sorted(scores, key=lambda s: (-s.value, s.view_index))
        if s.view_index != view_index
    ]
    for v in order:
        heading = view_center(v)
        dist = max_free_distance(mask, heading)
        if dist > 0.0:
            return Waypoint(heading=heading, distance=dist)
    return Waypoint(heading=view_center(view_index), distance=0.0)


def decompose(waypoint: Waypoint, current_heading: float) -> list:
    """Lower a waypoint to turn/forward actions.

    Turn count is the signed heading difference rounded to whole 15-degree
    turns (shorter direction, exact half-turn goes right), leaving at most
    7.5 degrees of residual heading error; then one forward per 0.25 m.
    """
    delta = geo.signed_delta(waypoint.heading, current_heading)
    n_turns = round(delta / TURN_DEGREES)
    actions = [TURN_RIGHT if n_turns > 0 else TURN_LEFT] * abs(int(n_turns))
    n_forward = int(round(waypoint.distance / STEP_DISTANCE))
    actions.extend([FORWARD] * n_forward)
    return actions


@dataclass(frozen=True)
class AgentConfig:
    use_omp: bool = True
    use_asp: bool = True
    progress_threshold: int = 2
    step_budget: int = 200
    max_spots: int = 8
    rays_per_view: int = DEFAULT_RAYS_PER_VIEW
    omp_margin: float = AGENT_RADIUS
    record_trajectory: bool = False


@dataclass
class _Exec:
    pose: Pose
    steps: int = 0
    collisions: int = 0
    path_length: float = 0.0
    stopped: bool = False

    def budget_left(self, budget: int) -> int:
        return budget - self.steps


def _execute(floorplan: Floorplan, state: _Exec, actions, budget: int, halt_on_collision: bool) -> None:
    """Run low-level actions in place, respecting the step budget.

    A collided forward still consumes a step; with ``halt_on_collision``
    the rest of the current plan is abandoned so the agent replans.
    """
    for act in actions:
        if state.steps >= budget or state.stopped:
            return
        state.steps += 1
        if act == STOP:
            state.stopped = True
        elif act == TURN_LEFT:
            state.pose = state.pose.turned(-TURN_DEGREES)
        elif act == TURN_RIGHT:
            state.pose = state.pose.turned(TURN_DEGREES)
        elif act == FORWARD:
            new_pose, collided = step_forward(floorplan, state.pose)
            if collided:
                state.collisions += 1
                if halt_on_collision:
                    return
            else:
                state.path_length += STEP_DISTANCE
                state.pose = new_pose
        else:
            raise ValueError(f"unknown action {act!r}")


def _result_from_exec(episode: Episode, label: str, st: _Exec, failure=None, trajectory=()) -> EpisodeResult:
    return EpisodeResult(
        episode_id=episode.id,
        config_label=label,
        success=False,  # judged by the harness against its success radius
        path_length=st.path_length,
        shortest_path_length=episode.shortest_path_length,
        collisions=st.collisions,
        steps=st.steps,
        final_distance_to_goal=math.hypot(st.pose.x - episode.goal[0], st.pose.y - episode.goal[1]),
        stopped=st.stopped,
        failure_reason=failure,
        trajectory=tuple(trajectory),
    )


def _pose_key(pose: Pose) -> tuple:
    return (round(pose.x, 3), round(pose.y, 3))


def _blocked_mask(mask: OccupancyMask, blocked_views) -> OccupancyMask:
    """Fold collision feedback into the depth-derived mask.

    Views whose forward step just collided from this exact position get
    their heading bin marked occupied, so replanning falls back to another
    view instead of repeating a blocked action forever.
    """
    if not blocked_views:
        return mask
    cells = np.array(mask.cells)
    for v in blocked_views:
        cells[angle_bin_of(view_center(v)), :] = False
    return OccupancyMask(cells)


def run_agent(
    episode: Episode,
    floorplan: Floorplan,
    parser,
    scorer,
    config: AgentConfig = AgentConfig(),
    label: str = "full",
) -> EpisodeResult:
    """Run the full pipeline on one episode.

    Hard parser/scorer failures produce a failed result with a zero-length
    path instead of raising. The loop is bounded by the step budget both in
    executed actions and planning iterations, so it always terminates.
    """
    st = _Exec(pose=episode.start)
    try:
        if config.use_asp:
            spots = parse_instruction(parser, episode.instruction, config.max_spots)
        else:
            spots = whole_instruction_sequence(episode.instruction)
    except (ParserError, ValueError) as exc:
        return _result_from_exec(episode, label, st, failure=f"parser: {exc}")

    progress = ProgressState(spots=spots)
    trajectory = []
    collided_here = {}  # pose key -> set of view indices that collided there

    def spot_similarity():
        pan = render_depth_panorama(floorplan, st.pose, config.rays_per_view)
        obs = Observation(floorplan=floorplan, pose=st.pose, panorama=pan)
        return pan, obs, score_views(scorer, obs, progress.current_spot)

    try:
        # Baseline sample so the very first move can register a decrease.
        _, _, scores = spot_similarity()
        progress, _ = update_progress(progress, max(s.value for s in scores), config.progress_threshold)

        for _ in range(config.step_budget):
            if st.steps >= config.step_budget or st.stopped:
                break
            panorama, obs, scores = spot_similarity()
            mask = None
            if config.use_omp:
                mask = _blocked_mask(
                    depth_to_occupancy(panorama, margin=config.omp_margin),
                    collided_here.get(_pose_key(st.pose), ()),
                )

            view = select_view(scores, st.pose.heading)
            if config.use_omp:
                waypoint = plan_waypoint(view, mask, scores)
            else:
                waypoint = Waypoint(heading=view_center(view), distance=MASK_RANGE)
            chosen_view = view_index_of(waypoint.heading)
            actions = decompose(waypoint, st.pose.heading)
            if not actions:
                st.steps += 1  # nothing to do this cycle; spend a step to stay bounded
                continue

            plan_pose_key = _pose_key(st.pose)
            decision = CONTINUE
            for act in actions:
                if st.steps >= config.step_budget:
                    break
                st.steps += 1
                if act == TURN_LEFT:
                    st.pose = st.pose.turned(-TURN_DEGREES)
                elif act == TURN_RIGHT:
                    st.pose = st.pose.turned(TURN_DEGREES)
                elif act == FORWARD:
                    new_pose, collided = step_forward(floorplan, st.pose)
                    if collided:
                        st.collisions += 1
                        collided_here.setdefault(plan_pose_key, set()).add(chosen_view)
                        break  # plan invalidated; replan from here
                    st.path_length += STEP_DISTANCE
                    st.pose = new_pose
                # The monitor watches the similarity signal step by step.
                _, _, step_scores = spot_similarity()
                progress, decision = update_progress(
                    progress, max(s.value for s in step_scores), config.progress_threshold
                )
                if decision != CONTINUE:
                    break

            if config.record_trajectory:
                trajectory.append(_traj_record(st, view, waypoint, decision, len(trajectory)))

            if decision == FINISH:
                if st.steps < config.step_budget:
                    st.steps += 1
                    st.stopped = True
                break
            # ADVANCE replans against the new spot on the next cycle.
    except ScorerError as exc:
        return _result_from_exec(
            episode, label, _Exec(pose=episode.start, steps=st.steps), failure=f"scorer: {exc}"
        )

    return _result_from_exec(episode, label, st, trajectory=trajectory)


def _traj_record(st: _Exec, view, waypoint, decision, index) -> dict:
    rec = {
        "cycle": index,
        "pose": {"x": round(st.pose.x, 4), "y": round(st.pose.y, 4), "heading": round(st.pose.heading, 4)},
        "decision": decision,
        "steps": st.steps,
        "collisions": st.collisions,
    }
    if view is not None:
        rec["view"] = view
    if waypoint is not None:
        rec["waypoint"] = {"heading": waypoint.heading, "distance": waypoint.distance}
    return rec


# --- Baselines -----------------------------------------------------------

_RANDOM_ACTIONS = (FORWARD, TURN_LEFT, TURN_RIGHT, STOP)
_RANDOM_WEIGHTS = (0.68, 0.15, 0.15, 0.02)

HANDCRAFTED_FORWARD_COUNT = 37


def random_action(rng) -> str:
    """One action from the fixed 68/15/15/2 action distribution."""
    r = rng.random()
    acc = 0.0
    for act, w in zip(_RANDOM_ACTIONS, _RANDOM_WEIGHTS):
        acc += w
        if r < acc:
            return act
    return _RANDOM_ACTIONS[-1]


def run_random_agent(episode: Episode, floorplan: Floorplan, rng, step_budget: int = 200,
                     label: str = "random") -> EpisodeResult:
    st = _Exec(pose=episode.start)
    while st.steps < step_budget and not st.stopped:
        _execute(floorplan, st, [random_action(rng)], step_budget, halt_on_collision=False)
    return _result_from_exec(episode, label, st)


def handcrafted_actions(rng, start_heading: float) -> list:
    """Turn to a random 15-degree heading, go forward 37 times, stop."""
    target = rng.randrange(24) * TURN_DEGREES
    actions = decompose(Waypoint(heading=target, distance=0.0), start_heading)
    actions.extend([FORWARD] * HANDCRAFTED_FORWARD_COUNT)
    actions.append(STOP)
    return actions


def run_handcrafted_agent(episode: Episode, floorplan: Floorplan, rng, step_budget: int = 200,
                          label: str = "handcrafted") -> EpisodeResult:
    st = _Exec(pose=episode.start)
    actions = handcrafted_actions(rng, episode.start.heading)
    _execute(floorplan, st, actions, step_budget, halt_on_collision=False)
    return _result_from_exec(episode, label, st)


def ablation_variant(use_omp: bool = True, use_asp: bool = True, **overrides) -> AgentConfig:
    """Config for an ablated pipeline; both flags off combines the two."""
    return AgentConfig(use_omp=use_omp, use_asp=use_asp, **overrides)


def make_pipeline_runner(parser, scorer, config: AgentConfig, label: str):
    """Suite-compatible runner for the (possibly ablated) pipeline."""

    def runner(episode, floorplan, rng):
        del rng  # the pipeline is deterministic
        return run_agent(episode, floorplan, parser, scorer, config, label=label)

    return runner


def make_random_runner(step_budget: int = 200, label: str = "random"):
    def runner(episode, floorplan, rng):
        return run_random_agent(episode, floorplan, rng, step_budget, label=label)

    return runner


def make_handcrafted_runner(step_budget: int = 200, label: str = "handcrafted"):
    def runner(episode, floorplan, rng):
        return run_handcrafted_agent(episode, floorplan, rng, step_budget, label=label)

    return runner
