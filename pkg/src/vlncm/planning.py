"""Grid shortest paths with agent clearance.

8-connected A* over a regular lattice with an octile-distance heuristic.
Lattice nodes are traversable when they keep the agent radius away from
every wall; diagonal moves additionally require both adjacent orthogonal
nodes free so the path cannot cut corners.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from . import geometry as geo
from .world import AGENT_RADIUS, Floorplan

GRID_RESOLUTION = 0.1

_SQRT2 = math.sqrt(2.0)


class NoPathError(RuntimeError):
    """Start and goal are not connected at the required clearance."""


def _octile(dr: int, dc: int) -> float:
    dr, dc = abs(dr), abs(dc)
    return (max(dr, dc) - min(dr, dc)) + _SQRT2 * min(dr, dc)


def _build_grid(floorplan: Floorplan, resolution: float, clearance: float):
    xmin, ymin, xmax, ymax = floorplan.bounds
    xs = np.arange(xmin, xmax + resolution / 2, resolution)
    ys = np.arange(ymin, ymax + resolution / 2, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    dist = geo.points_to_walls_distance(pts, floorplan.walls).reshape(len(xs), len(ys))
    inside = (
        (gx > xmin) & (gx < xmax) & (gy > ymin) & (gy < ymax)
    )
    free = inside & (dist >= clearance)
    return xs, ys, free


def _snap(xs, ys, free, point, max_snap):
    """Index of the nearest free node within max_snap of the point."""
    px, py = float(point[0]), float(point[1])
    i0 = int(np.clip(round((px - xs[0]) / (xs[1] - xs[0])), 0, len(xs) - 1))
    j0 = int(np.clip(round((py - ys[0]) / (ys[1] - ys[0])), 0, len(ys) - 1))
    reach = int(math.ceil(max_snap / (xs[1] - xs[0]))) + 1
    best = None
    best_d = np.inf
    for di in range(-reach, reach + 1):
        for dj in range(-reach, reach + 1):
            i, j = i0 + di, j0 + dj
            if 0 <= i < len(xs) and 0 <= j < len(ys) and free[i, j]:
                d = math.hypot(xs[i] - px, ys[j] - py)
                if d < best_d:
                    best, best_d = (i, j), d
    if best is None or best_d > max_snap:
        return None, np.inf
    return best, best_d


_MOVES = [
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2),
]


def shortest_path(
    floorplan: Floorplan,
    start,
    goal,
    resolution: float = GRID_RESOLUTION,
    clearance: float = AGENT_RADIUS,
) -> float:
    """Length in meters of the shortest clearance-respecting path.

    Raises NoPathError when the goal is unreachable (or either endpoint
    cannot be snapped onto a free lattice node nearby).
    """
    xs, ys, free = _build_grid(floorplan, resolution, clearance)
    max_snap = 4.0 * resolution
    s_node, s_off = _snap(xs, ys, free, start, max_snap)
    g_node, g_off = _snap(xs, ys, free, goal, max_snap)
    if s_node is None:
        raise NoPathError(f"start {tuple(start)} not in free space")
    if g_node is None:
        raise NoPathError(f"goal {tuple(goal)} not in free space")
    if s_node == g_node:
        return float(s_off + g_off)

    ni, nj = free.shape
    g_cost = {s_node: 0.0}
    counter = 0
    h0 = _octile(g_node[0] - s_node[0], g_node[1] - s_node[1]) * resolution
    frontier = [(h0, counter, s_node)]
    closed = set()

    while frontier:
        f, _, node = heapq.heappop(frontier)
        if node in closed:
            continue
        if node == g_node:
            return float(g_cost[node] + s_off + g_off)
        closed.add(node)
        i, j = node
        base = g_cost[node]
        for di, dj, step in _MOVES:
            a, b = i + di, j + dj
            if not (0 <= a < ni and 0 <= b < nj) or not free[a, b]:
                continue
            if di != 0 and dj != 0 and not (free[i + di, j] and free[i, j + dj]):
                continue  # no corner cutting
            nxt = (a, b)
            cost = base + step * resolution
            if cost < g_cost.get(nxt, np.inf):
                g_cost[nxt] = cost
                counter += 1
                h = _octile(g_node[0] - a, g_node[1] - b) * resolution
                heapq.heappush(frontier, (cost + h, counter, nxt))

    raise NoPathError(f"no path from {tuple(start)} to {tuple(goal)}")
