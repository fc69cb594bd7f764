import numpy as np
import pytest

from vlncm.world import Floorplan, Landmark


def box_walls(xmin, ymin, xmax, ymax):
    return [
        (xmin, ymin, xmax, ymin),
        (xmax, ymin, xmax, ymax),
        (xmax, ymax, xmin, ymax),
        (xmin, ymax, xmin, ymin),
    ]


@pytest.fixture
def square_room():
    """4x4 m room centered at the origin."""
    return Floorplan("square", (-2, -2, 2, 2), box_walls(-2, -2, 2, 2))


@pytest.fixture
def big_room():
    """20x20 m open room for free-space motion tests."""
    return Floorplan("big", (-10, -10, 10, 10), box_walls(-10, -10, 10, 10))


@pytest.fixture
def corridor_room():
    """1 m wide, 8 m long east-west corridor."""
    return Floorplan("corridor", (0, 0, 8, 1), box_walls(0, 0, 8, 1))


def room_with_landmarks(landmarks, half=5.0):
    return Floorplan(
        "lmroom",
        (-half, -half, half, half),
        box_walls(-half, -half, half, half),
        [Landmark(*lm) for lm in landmarks],
    )


def brute_force_raycast(walls, origin, angle_deg, d_max=10.0):
    """Independent oracle: shapely line intersection instead of our math."""
    import math

    from shapely.geometry import LineString, Point

    ox, oy = origin
    rad = math.radians(angle_deg)
    ray = LineString([(ox, oy), (ox + 2 * d_max * math.sin(rad), oy + 2 * d_max * math.cos(rad))])
    start = Point(ox, oy)
    best = d_max
    for w in walls:
        seg = LineString([(w[0], w[1]), (w[2], w[3])])
        hit = ray.intersection(seg)
        if hit.is_empty:
            continue
        pts = [hit] if hit.geom_type == "Point" else list(getattr(hit, "geoms", []))
        for p in pts:
            if p.geom_type == "Point":
                best = min(best, start.distance(p))
            else:  # collinear overlap: nearest point of the overlapping piece
                best = min(best, start.distance(p))
    return best
