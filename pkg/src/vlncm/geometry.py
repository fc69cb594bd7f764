"""Planar geometry kernels for the simulator.

Compass convention throughout the project: headings are degrees in
[0, 360), 0 points along +y and angles increase clockwise, so the unit
direction for heading ``h`` is ``(sin h, cos h)``.

Walls are line segments stored as float arrays of shape (N, 4) with rows
``(x1, y1, x2, y2)``. All kernels are vectorized over rays, points or
segments so callers can sweep whole panoramas or grids in one call.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = 1e-12


def normalize_heading(deg: float) -> float:
    """Map an angle in degrees onto [0, 360)."""
    h = math.fmod(float(deg), 360.0)
    if h < 0.0:
        h += 360.0
    return 0.0 if h == 360.0 else h


def signed_delta(target: float, current: float) -> float:
    """Smallest signed rotation (degrees) from ``current`` to ``target``.

    Result lies in (-180, 180]; an exact half-turn comes out as +180 so a
    deterministic clockwise turn is preferred.
    """
    d = math.fmod(float(target) - float(current), 360.0)
    if d > 180.0:
        d -= 360.0
    elif d <= -180.0:
        d += 360.0
    return d


def heading_unit(deg: float) -> np.ndarray:
    r = math.radians(deg)
    return np.array([math.sin(r), math.cos(r)])


def bearing_deg(origin, target) -> float:
    """Compass bearing of ``target`` as seen from ``origin``."""
    dx = float(target[0]) - float(origin[0])
    dy = float(target[1]) - float(origin[1])
    return normalize_heading(math.degrees(math.atan2(dx, dy)))


def ray_fan(origin, angles_deg, walls: np.ndarray, max_range: float) -> np.ndarray:
    """Cast rays at several compass angles, returning hit distances.

    Rays that miss every wall report ``max_range``; hits beyond it are
    clamped. ``angles_deg`` may be a scalar or 1-D array.
    """
    angles = np.atleast_1d(np.asarray(angles_deg, dtype=float))
    rad = np.radians(angles)
    dirs = np.stack([np.sin(rad), np.cos(rad)], axis=1)  # (M, 2)

    if walls.size == 0:
        return np.full(angles.shape, float(max_range))

    ox, oy = float(origin[0]), float(origin[1])
    ax, ay = walls[:, 0], walls[:, 1]
    sx, sy = walls[:, 2] - ax, walls[:, 3] - ay  # segment vectors (N,)
    qx, qy = ax - ox, ay - oy  # origin -> segment start (N,)

    # Solve origin + t*dir == A + s*(B-A) componentwise via 2-D cross products.
    dx = dirs[:, 0][:, None]  # (M, 1)
    dy = dirs[:, 1][:, None]
    denom = dx * sy[None, :] - dy * sx[None, :]  # (M, N)
    safe = np.abs(denom) > _EPS
    denom = np.where(safe, denom, 1.0)

    t = (qx[None, :] * sy[None, :] - qy[None, :] * sx[None, :]) / denom
    s = (qx[None, :] * dy - qy[None, :] * dx) / denom

    hit = safe & (t > _EPS) & (s >= -_EPS) & (s <= 1.0 + _EPS)
    t = np.where(hit, t, np.inf)
    depths = np.minimum(t.min(axis=1), float(max_range))
    return depths


def points_to_walls_distance(points: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Distance from each point (K, 2) to the nearest wall segment."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if walls.size == 0:
        return np.full(pts.shape[0], np.inf)
    a = walls[:, 0:2][None, :, :]  # (1, N, 2)
    b = walls[:, 2:4][None, :, :]
    p = pts[:, None, :]  # (K, 1, 2)
    ab = b - a
    ab_len2 = np.maximum((ab * ab).sum(axis=2), _EPS)
    u = ((p - a) * ab).sum(axis=2) / ab_len2
    u = np.clip(u, 0.0, 1.0)
    closest = a + u[:, :, None] * ab
    d = np.linalg.norm(p - closest, axis=2)
    return d.min(axis=1)


def point_to_walls_distance(point, walls: np.ndarray) -> float:
    return float(points_to_walls_distance(np.asarray(point, dtype=float)[None, :], walls)[0])


def _cross(ox, oy, ax, ay, bx, by):
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def segments_to_walls_distance(segs: np.ndarray, walls: np.ndarray) -> np.ndarray:
    """Min distance from each query segment (M, 4) to the wall set.

    Crossing segments report 0. Otherwise the min over the four
    endpoint-to-segment distances, which is exact for non-intersecting
    segment pairs.
    """
    segs = np.atleast_2d(np.asarray(segs, dtype=float))
    m = segs.shape[0]
    if walls.size == 0:
        return np.full(m, np.inf)

    p1 = segs[:, 0:2]
    p2 = segs[:, 2:4]
    w1 = walls[:, 0:2]
    w2 = walls[:, 2:4]

    # Orientation tests for proper intersection, broadcast (M, N).
    d1 = _cross(p1[:, None, 0], p1[:, None, 1], p2[:, None, 0], p2[:, None, 1], w1[None, :, 0], w1[None, :, 1])
    d2 = _cross(p1[:, None, 0], p1[:, None, 1], p2[:, None, 0], p2[:, None, 1], w2[None, :, 0], w2[None, :, 1])
    d3 = _cross(w1[None, :, 0], w1[None, :, 1], w2[None, :, 0], w2[None, :, 1], p1[:, None, 0], p1[:, None, 1])
    d4 = _cross(w1[None, :, 0], w1[None, :, 1], w2[None, :, 0], w2[None, :, 1], p2[:, None, 0], p2[:, None, 1])
    crossing = ((d1 * d2) < 0) & ((d3 * d4) < 0)

    def point_seg(p, a, b):
        ab = b - a
        ab_len2 = np.maximum((ab * ab).sum(axis=-1), _EPS)
        u = ((p - a) * ab).sum(axis=-1) / ab_len2
        u = np.clip(u, 0.0, 1.0)
        closest = a + u[..., None] * ab
        return np.linalg.norm(p - closest, axis=-1)

    dist = np.minimum(
        np.minimum(
            point_seg(p1[:, None, :], w1[None, :, :], w2[None, :, :]),
            point_seg(p2[:, None, :], w1[None, :, :], w2[None, :, :]),
        ),
        np.minimum(
            point_seg(w1[None, :, :], p1[:, None, :], p2[:, None, :]),
            point_seg(w2[None, :, :], p1[:, None, :], p2[:, None, :]),
        ),
    )
    dist = np.where(crossing, 0.0, dist)
    return dist.min(axis=1)


def segment_to_walls_distance(p, q, walls: np.ndarray) -> float:
    seg = np.array([[p[0], p[1], q[0], q[1]]], dtype=float)
    return float(segments_to_walls_distance(seg, walls)[0])


def segment_crosses_walls(p, q, walls: np.ndarray) -> bool:
    """True when the open segment p->q properly crosses or touches a wall.

    Endpoints sitting exactly on a wall count as a crossing; used for
    line-of-sight occlusion tests.
    """
    if walls.size == 0:
        return False
    seg = np.array([p[0], p[1], q[0], q[1]], dtype=float)
    px, py = seg[0], seg[1]
    dx, dy = seg[2] - seg[0], seg[3] - seg[1]

    ax, ay = walls[:, 0], walls[:, 1]
    sx, sy = walls[:, 2] - ax, walls[:, 3] - ay
    qx, qy = ax - px, ay - py

    denom = dx * sy - dy * sx
    safe = np.abs(denom) > _EPS
    denom = np.where(safe, denom, 1.0)
    t = (qx * sy - qy * sx) / denom
    s = (qx * dy - qy * dx) / denom
    hit = safe & (t > 1e-9) & (t < 1.0 - 1e-9) & (s >= -_EPS) & (s <= 1.0 + _EPS)
    return bool(hit.any())
