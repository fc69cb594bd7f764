"""Seeded procedural floorplans and episodes.

Worlds are chains of rectangular rooms joined by axis-aligned corridors.
Landmarks are laid out as breadcrumbs along the ground-truth route: one
just before each corridor mouth, one just after it, and a final one at the
goal room center. Episode instructions are templated from that landmark
sequence ("walk past the <L1>, then ... then go to the <Ln> and stop"), so
the offline template parser can invert them exactly.

Everything is a pure function of (seed, spec): identical inputs produce
byte-identical floorplan and episode files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .planning import shortest_path
from .rng import derive_rng
from .world import Episode, Floorplan, Landmark, Pose

_COLORS = (
    "red", "blue", "green", "yellow", "purple", "orange",
    "teal", "amber", "silver", "crimson",
)
_OBJECTS = (
    "chair", "lamp", "table", "door", "sofa", "plant",
    "shelf", "mirror", "vase", "piano", "bench", "cabinet",
)
DEFAULT_VOCABULARY = tuple(f"{c} {o}" for c in _COLORS for o in _OBJECTS)

_MIN_JAMB = 0.6  # shortest wall piece a doorway may leave behind


class GenerationError(ValueError):
    """The requested world parameters cannot produce a valid floorplan."""


@dataclass(frozen=True)
class GenerationSpec:
    rooms: int = 2
    corridor_width: float = 1.6
    room_side: tuple = (4.4, 6.0)  # min/max room side length
    corridor_length: tuple = (1.6, 2.4)
    landmark_radius: float = 0.45
    episodes_per_world: int = 5
    vocabulary: tuple = field(default=DEFAULT_VOCABULARY)

    def validate(self) -> None:
        if not 2 <= self.rooms <= 8:
            raise GenerationError(f"rooms must be in [2, 8], got {self.rooms}")
        if self.corridor_width < 1.0:
            raise GenerationError("corridor width must be >= 1.0 m")
        if self.room_side[0] < self.corridor_width + 2 * _MIN_JAMB + 0.4:
            raise GenerationError("rooms too small to fit a doorway with jambs")
        if self.episodes_per_world < 1:
            raise GenerationError("episodes_per_world must be >= 1")
        needed = 2 * (self.rooms - 1) + 1
        if len(self.vocabulary) < needed:
            raise GenerationError(f"vocabulary too small: need {needed} labels")


def _room_chain(rng, spec: GenerationSpec):
    """Room rectangles (x0, y0, x1, y1) and corridor records."""
    rooms = []
    w = rng.uniform(*spec.room_side)
    h = rng.uniform(*spec.room_side)
    rooms.append((0.0, 0.0, round(w, 2), round(h, 2)))

    corridors = []  # (x_start, x_end, cy)
    min_overlap = spec.corridor_width + 2 * _MIN_JAMB
    for _ in range(spec.rooms - 1):
        px0, py0, px1, py1 = rooms[-1]
        length = rng.uniform(*spec.corridor_length)
        w = rng.uniform(*spec.room_side)
        h = rng.uniform(*spec.room_side)
        # y-offset range keeping >= min_overlap of shared wall with the
        # previous room, so the doorway always fits with full jambs.
        lo = py0 + min_overlap - h
        hi = py1 - min_overlap
        y0 = rng.uniform(lo, hi)
        x0 = px1 + length
        room = (round(x0, 2), round(y0, 2), round(x0 + w, 2), round(y0 + h, 2))
        overlap_lo = max(py0, room[1])
        overlap_hi = min(py1, room[3])
        cy = round((overlap_lo + overlap_hi) / 2.0, 2)
        corridors.append((px1, room[0], cy))
        rooms.append(room)
    return rooms, corridors


def _walls(rooms, corridors, corridor_width):
    half = corridor_width / 2.0
    walls = []
    n = len(rooms)
    for i, (x0, y0, x1, y1) in enumerate(rooms):
        walls.append((x0, y0, x1, y0))  # bottom
        walls.append((x0, y1, x1, y1))  # top
        if i == 0:
            walls.append((x0, y0, x0, y1))  # closed left side
        else:
            cy = corridors[i - 1][2]
            walls.append((x0, y0, x0, cy - half))
            walls.append((x0, cy + half, x0, y1))
        if i == n - 1:
            walls.append((x1, y0, x1, y1))  # closed right side
        else:
            cy = corridors[i][2]
            walls.append((x1, y0, x1, cy - half))
            walls.append((x1, cy + half, x1, y1))
    for (xs, xe, cy) in corridors:
        walls.append((xs, cy - half, xe, cy - half))
        walls.append((xs, cy + half, xe, cy + half))
    return [(round(a, 2), round(b, 2), round(c, 2), round(d, 2)) for a, b, c, d in walls]


def _route_landmarks(rng, rooms, corridors, spec: GenerationSpec):
    """Breadcrumb landmarks in route order, final one at the goal.

    One landmark sits at each corridor midpoint and the last one near the
    far wall of the goal room. Near-wall placement matters: the occupancy
    mask truncates strides around such landmarks asymmetrically, which is
    what lets the progress monitor observe consecutive similarity drops
    instead of a symmetric back-and-forth.
    """
    labels = rng.sample(list(spec.vocabulary), len(corridors) + 1)
    marks = []
    for li, (xs, xe, cy) in enumerate(corridors):
        marks.append(Landmark(labels[li], round((xs + xe) / 2.0, 2), cy, spec.landmark_radius))
    gx0, gy0, gx1, gy1 = rooms[-1]
    goal = (round(gx1 - 1.0, 2), round((gy0 + gy1) / 2.0, 2))
    marks.append(Landmark(labels[-1], goal[0], goal[1], spec.landmark_radius))
    return marks, goal


def make_instruction(labels) -> str:
    """Route landmarks to text; inverted exactly by the template parser."""
    labels = list(labels)
    if not labels:
        raise ValueError("need at least one landmark label")
    if len(labels) == 1:
        return f"go to the {labels[0]} and stop."
    head = ", then ".join(f"walk past the {l}" for l in labels[:-1])
    return f"{head}, then go to the {labels[-1]} and stop."


def generate_world(seed: int, spec: GenerationSpec = GenerationSpec(), world_index: int = 0):
    """Build one floorplan plus its episodes, deterministically.

    Returns ``(floorplan, episodes)``. The rng is derived from
    (seed, world_index) only, so repeated calls are byte-identical.
    """
    spec.validate()
    rng = derive_rng(seed, "world", str(world_index))

    rooms, corridors = _room_chain(rng, spec)
    walls = _walls(rooms, corridors, spec.corridor_width)
    landmarks, goal = _route_landmarks(rng, rooms, corridors, spec)

    xs = [r[0] for r in rooms] + [r[2] for r in rooms]
    ys = [r[1] for r in rooms] + [r[3] for r in rooms]
    bounds = (min(xs), min(ys), max(xs), max(ys))

    fp_id = f"world-{seed}-{world_index:02d}"
    floorplan = Floorplan(fp_id, bounds, walls, landmarks)

    first = landmarks[0]
    if math.hypot(first.x - goal[0], first.y - goal[1]) <= 3.5:
        raise GenerationError("first landmark too close to the goal")

    rx0, ry0, rx1, ry1 = rooms[0]
    instruction = make_instruction([lm.label for lm in landmarks])
    episodes = []
    for k in range(spec.episodes_per_world):
        ep_rng = derive_rng(seed, "episode", str(world_index), str(k))
        for _ in range(1000):
            sx = ep_rng.uniform(rx0 + 0.8, rx1 - 0.8)
            sy = ep_rng.uniform(ry0 + 0.8, ry1 - 0.8)
            if floorplan.wall_clearance(sx, sy) < 0.5:
                continue
            if math.hypot(sx - goal[0], sy - goal[1]) <= 4.0:
                continue
            break
        else:
            raise GenerationError(f"no valid start pose in {fp_id}")
        heading = ep_rng.randrange(24) * 15.0
        start = Pose(round(sx, 2), round(sy, 2), heading)
        spl_len = shortest_path(floorplan, (start.x, start.y), goal)
        episodes.append(
            Episode(
                id=f"{fp_id}-ep{k:02d}",
                floorplan_id=fp_id,
                start=start,
                goal=goal,
                instruction=instruction,
                shortest_path_length=round(spl_len, 4),
            )
        )
    return floorplan, episodes


def generate_batch(seed: int, worlds: int, spec: GenerationSpec = GenerationSpec()):
    """Generate several worlds; returns (floorplans, all_episodes)."""
    if worlds < 1:
        raise GenerationError("worlds must be >= 1")
    floorplans = []
    episodes = []
    for i in range(worlds):
        fp, eps = generate_world(seed, spec, world_index=i)
        floorplans.append(fp)
        episodes.extend(eps)
    return floorplans, episodes
