"""Continuous 2-D world: floorplans, depth panoramas, motion and visibility.

The environment is a set of wall segments enclosing free space. An agent is
a disc of radius ``AGENT_RADIUS`` with a compass heading; it senses the
world through horizontal depth scans grouped into 12 views of 30 degrees
each, and moves with unit forward steps and 15-degree turns (VLN-CE style
low-level actions).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo

AGENT_RADIUS = 0.1
D_MAX = 10.0
STEP_DISTANCE = 0.25
TURN_DEGREES = 15.0
NUM_VIEWS = 12
VIEW_SPAN_DEG = 30.0
DEFAULT_RAYS_PER_VIEW = 10


class InvalidOriginError(ValueError):
    """Raycast/pose query from outside the floorplan or on a wall."""


@dataclass(frozen=True)
class Pose:
    """Agent state: position in meters, compass heading in degrees."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose ({self.x}, {self.y}, {self.heading})")
        object.__setattr__(self, "heading", geo.normalize_heading(self.heading))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def moved(self, distance: float) -> "Pose":
        u = geo.heading_unit(self.heading)
        return Pose(self.x + distance * u[0], self.y + distance * u[1], self.heading)

    def turned(self, delta_deg: float) -> "Pose":
        return Pose(self.x, self.y, self.heading + delta_deg)


@dataclass(frozen=True)
class Landmark:
    label: str
    x: float
    y: float
    radius: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


class Floorplan:
    """Immutable wall-segment world with labeled landmarks.

    ``bounds`` is the axis-aligned envelope (xmin, ymin, xmax, ymax);
    ``walls`` is an (N, 4) float array of segments.
    """

    def __init__(self, id: str, bounds, walls, landmarks=()):
        self.id = str(id)
        self.bounds = tuple(float(v) for v in bounds)
        self.walls = np.asarray(walls, dtype=float).reshape(-1, 4).copy()
        self.walls.setflags(write=False)
        self.landmarks = tuple(landmarks)
        self._validate()

    def _validate(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError(f"degenerate bounds {self.bounds}")
        if len(self.walls) < 4:
            raise ValueError("floorplan needs at least 4 wall segments (closed boundary)")
        for lm in self.landmarks:
            if not lm.label.strip():
                raise ValueError("landmark label must be non-empty")
            if not (xmin <= lm.x <= xmax and ymin <= lm.y <= ymax):
                raise ValueError(f"landmark {lm.label!r} outside bounds")
            if lm.radius <= 0:
                raise ValueError(f"landmark {lm.label!r} needs positive radius")

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.bounds
        return xmin < x < xmax and ymin < y < ymax

    def wall_clearance(self, x: float, y: float) -> float:
        return geo.point_to_walls_distance((x, y), self.walls)

    def is_interior(self, x: float, y: float) -> bool:
        """Crossing-parity test: inside the enclosed region, not just bounds.

        The probe angle is chosen off-axis so it cannot pass through wall
        vertices of axis-aligned floorplans.
        """
        if not self.contains(x, y):
            return False
        d = geo.ray_fan((x, y), np.array([50.123]), self.walls, max_range=np.inf)
        if not np.isfinite(d[0]):
            return False
        # Count crossings along that same probe direction.
        rad = math.radians(50.123)
        dx, dy = math.sin(rad), math.cos(rad)
        ax, ay = self.walls[:, 0], self.walls[:, 1]
        sx, sy = self.walls[:, 2] - ax, self.walls[:, 3] - ay
        qx, qy = ax - x, ay - y
        denom = dx * sy - dy * sx
        safe = np.abs(denom) > 1e-12
        denom = np.where(safe, denom, 1.0)
        t = (qx * sy - qy * sx) / denom
        s = (qx * dy - qy * dx) / denom
        crossings = int((safe & (t > 0) & (s >= 0) & (s < 1)).sum())
        return crossings % 2 == 1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "bounds": [round(v, 4) for v in self.bounds],
            "walls": [[round(v, 4) for v in row] for row in self.walls.tolist()],
            "landmarks": [
                {"label": lm.label, "x": round(lm.x, 4), "y": round(lm.y, 4), "radius": round(lm.radius, 4)}
                for lm in self.landmarks
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Floorplan":
        landmarks = [Landmark(d["label"], d["x"], d["y"], d["radius"]) for d in data.get("landmarks", [])]
        return cls(data["id"], data["bounds"], data["walls"], landmarks)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "Floorplan":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _require_valid_origin(floorplan: Floorplan, x: float, y: float) -> None:
    if not floorplan.contains(x, y):
        raise InvalidOriginError(f"origin ({x:.3f}, {y:.3f}) outside bounds {floorplan.bounds}")
    if floorplan.wall_clearance(x, y) <= 1e-9:
        raise InvalidOriginError(f"origin ({x:.3f}, {y:.3f}) lies on a wall")


def raycast(floorplan: Floorplan, origin, angle_deg: float) -> float:
    """Distance to the nearest wall along a compass angle, clamped to D_MAX."""
    _require_valid_origin(floorplan, float(origin[0]), float(origin[1]))
    d = geo.ray_fan(origin, np.array([float(angle_deg)]), floorplan.walls, max_range=D_MAX)
    return float(d[0])


@dataclass(frozen=True)
class DepthPanorama:
    """12 views of R rays each; absolute-north aligned (view i spans
    [i*30, (i+1)*30) degrees regardless of agent heading)."""

    depths: np.ndarray  # (12, R)

    @property
    def rays_per_view(self) -> int:
        return self.depths.shape[1]

    @property
    def views(self):
        return [self.depths[i] for i in range(NUM_VIEWS)]


def panorama_ray_angles(rays_per_view: int) -> np.ndarray:
    """Absolute angles of every panorama ray, view-major order."""
    step = VIEW_SPAN_DEG / rays_per_view
    j = (np.arange(rays_per_view) + 0.5) * step
    i = np.arange(NUM_VIEWS) * VIEW_SPAN_DEG
    return (i[:, None] + j[None, :]).reshape(-1)


def render_depth_panorama(
    floorplan: Floorplan, pose: Pose, rays_per_view: int = DEFAULT_RAYS_PER_VIEW
) -> DepthPanorama:
    """Scan the world with 12*R rays from the agent position.

    View i, ray j is cast at absolute angle ``i*30 + (j+0.5)*30/R``; the
    agent heading does not rotate the panorama.
    """
    if rays_per_view < 1:
        raise ValueError("rays_per_view must be >= 1")
    _require_valid_origin(floorplan, pose.x, pose.y)
    angles = panorama_ray_angles(rays_per_view)
    depths = geo.ray_fan(pose.position, angles, floorplan.walls, max_range=D_MAX)
    return DepthPanorama(depths.reshape(NUM_VIEWS, rays_per_view))


def step_forward(floorplan: Floorplan, pose: Pose, distance: float = STEP_DISTANCE):
    """Attempt one forward step with swept collision checking.

    The move succeeds only when the swept center-line from the current to
    the target position keeps at least ``AGENT_RADIUS`` from every wall;
    otherwise the agent stays in place and the step reports a collision.
    There is no wall sliding.
    """
    target = pose.moved(distance)
    clearance = geo.segment_to_walls_distance(
        (pose.x, pose.y), (target.x, target.y), floorplan.walls
    )
    if clearance >= AGENT_RADIUS - 1e-12:
        return target, False
    return pose, True


def turn(pose: Pose, direction: str) -> Pose:
    """Rotate in place by 15 degrees; ``left`` is counterclockwise."""
    if direction == "left":
        return pose.turned(-TURN_DEGREES)
    if direction == "right":
        return pose.turned(TURN_DEGREES)
    raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")


def sight_occluded(floorplan: Floorplan, origin, target) -> bool:
    """True when a wall blocks the straight sight line origin -> target."""
    return geo.segment_crosses_walls(origin, target, floorplan.walls)


@dataclass(frozen=True)
class VisibleLandmark:
    label: str
    bearing: float  # degrees relative to agent heading, (-180, 180]
    distance: float
    occluded: bool


def view_index_of(angle_deg: float) -> int:
    return int(geo.normalize_heading(angle_deg) // VIEW_SPAN_DEG) % NUM_VIEWS


def view_center(view_index: int) -> float:
    return view_index * VIEW_SPAN_DEG + VIEW_SPAN_DEG / 2.0


def visible_landmarks(floorplan: Floorplan, pose: Pose, view_index: int) -> list:
    """Landmarks whose absolute bearing falls in the view's 30-degree span.

    Occlusion is a wall-crossing test on the sight line to the landmark
    center. Sorted nearest first.
    """
    if not 0 <= view_index < NUM_VIEWS:
        raise ValueError(f"view_index must be 0..11, got {view_index}")
    found = []
    for lm in floorplan.landmarks:
        dist = float(np.hypot(lm.x - pose.x, lm.y - pose.y))
        if dist < 1e-9:
            continue
        brg_abs = geo.bearing_deg((pose.x, pose.y), (lm.x, lm.y))
        if view_index_of(brg_abs) != view_index:
            continue
        occ = sight_occluded(floorplan, (pose.x, pose.y), (lm.x, lm.y))
        found.append(
            VisibleLandmark(
                label=lm.label,
                bearing=geo.signed_delta(brg_abs, pose.heading),
                distance=dist,
                occluded=occ,
            )
        )
    found.sort(key=lambda v: v.distance)
    return found


@dataclass(frozen=True)
class Episode:
    id: str
    floorplan_id: str
    start: Pose
    goal: tuple
    instruction: str
    shortest_path_length: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "floorplan_id": self.floorplan_id,
            "start": {"x": round(self.start.x, 4), "y": round(self.start.y, 4), "heading": round(self.start.heading, 4)},
            "goal": {"x": round(self.goal[0], 4), "y": round(self.goal[1], 4)},
            "instruction": self.instruction,
            "shortest_path_length": round(self.shortest_path_length, 4),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Episode":
        return cls(
            id=d["id"],
            floorplan_id=d["floorplan_id"],
            start=Pose(d["start"]["x"], d["start"]["y"], d["start"]["heading"]),
            goal=(d["goal"]["x"], d["goal"]["y"]),
            instruction=d["instruction"],
            shortest_path_length=d["shortest_path_length"],
        )


def save_episodes(episodes, path) -> None:
    data = [ep.to_dict() for ep in episodes]
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def load_episodes(path) -> list:
    return [Episode.from_dict(d) for d in json.loads(Path(path).read_text())]
