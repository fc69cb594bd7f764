"""Occupancy masks from depth panoramas, ground-truth oracles, and the
training-data emitter for an externally trained occupancy predictor.

A mask is a polar boolean grid around the agent: 120 angle bins of 3
degrees covering the full circle, 12 distance bins of 0.25 m covering
3.0 m (12 forward steps). ``True`` means free. Every mask satisfies the
shadowing property: within an angle bin the free cells form a prefix of
the distance axis.

Two ground-truth semantics are provided:

* ``oracle_occupancy`` measures radial headroom along each bin-center ray
  (cell free when the ray travels ``k * 0.25 + agent_radius + margin``
  before hitting a wall). This is exactly the quantity the depth-based
  estimator approximates, so it is the reference for estimator soundness
  and for emitted training data.
* ``swept_oracle_occupancy`` certifies actual movement: cell (a, k) is
  free when sweeping the agent disc along the bin-center direction out to
  ``k * 0.25`` keeps ``agent_radius + margin`` of wall clearance. With
  ``margin = agent_radius`` this makes any heading within the bin safe to
  execute, which the waypoint-safety tests rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import geometry as geo
from .rng import derive_rng
from .world import (
    AGENT_RADIUS,
    DEFAULT_RAYS_PER_VIEW,
    Floorplan,
    DepthPanorama,
    Pose,
    panorama_ray_angles,
    render_depth_panorama,
)

NUM_ANGLE_BINS = 120
NUM_DISTANCE_BINS = 12
BIN_WIDTH_DEG = 3.0
BIN_DEPTH = 0.25
MASK_RANGE = NUM_DISTANCE_BINS * BIN_DEPTH  # 3.0 m


@dataclass(frozen=True)
class OccupancyMask:
    """120 x 12 polar grid, True = free."""

    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != (NUM_ANGLE_BINS, NUM_DISTANCE_BINS):
            raise ValueError(f"mask must be {NUM_ANGLE_BINS}x{NUM_DISTANCE_BINS}, got {cells.shape}")
        cells = cells.copy()
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    def free_prefix(self, angle_bin: int) -> int:
        """Number of consecutive free cells from the agent outward."""
        row = self.cells[angle_bin]
        blocked = np.flatnonzero(~row)
        return int(blocked[0]) if blocked.size else NUM_DISTANCE_BINS

    def satisfies_shadowing(self) -> bool:
        prefix = np.cumprod(self.cells, axis=1).astype(bool)
        return bool((self.cells == prefix).all())

    def to_strings(self) -> list:
        return ["".join("1" if c else "0" for c in row) for row in self.cells]

    @classmethod
    def from_strings(cls, rows) -> "OccupancyMask":
        cells = np.array([[ch == "1" for ch in row] for row in rows], dtype=bool)
        return cls(cells)

    @classmethod
    def from_clear_depths(cls, clear_depths) -> "OccupancyMask":
        """Threshold per-bin clear depth into shadowed distance bins."""
        clear = np.asarray(clear_depths, dtype=float).reshape(NUM_ANGLE_BINS, 1)
        k = (np.arange(NUM_DISTANCE_BINS) + 1) * BIN_DEPTH
        return cls(k[None, :] <= clear)


def bin_center_angles() -> np.ndarray:
    return (np.arange(NUM_ANGLE_BINS) + 0.5) * BIN_WIDTH_DEG


def angle_bin_of(angle_deg: float) -> int:
    return int(geo.normalize_heading(angle_deg) // BIN_WIDTH_DEG) % NUM_ANGLE_BINS


def depth_to_occupancy(panorama: DepthPanorama, margin: float = 0.0) -> OccupancyMask:
    """Estimate the occupancy mask from a depth panorama.

    Per angle bin the clear depth is the minimum over the rays whose angle
    falls in that bin (one ray per bin at the default 10 rays per view);
    cell (a, k) is free when ``k * 0.25 <= d_min(a) - margin``. Bins that
    receive no ray (possible below 10 rays per view) borrow the angularly
    nearest ray.
    """
    angles = panorama_ray_angles(panorama.rays_per_view)
    depths = panorama.depths.reshape(-1)
    bins = (angles // BIN_WIDTH_DEG).astype(int) % NUM_ANGLE_BINS

    d_min = np.full(NUM_ANGLE_BINS, np.inf)
    np.minimum.at(d_min, bins, depths)

    empty = ~np.isfinite(d_min)
    if empty.any():
        centers = bin_center_angles()
        for a in np.flatnonzero(empty):
            delta = np.abs((angles - centers[a] + 180.0) % 360.0 - 180.0)
            d_min[a] = depths[int(np.argmin(delta))]

    return OccupancyMask.from_clear_depths(d_min - margin)


def oracle_occupancy(floorplan: Floorplan, pose: Pose, margin: float = 0.0) -> OccupancyMask:
    """Ground-truth radial mask from floorplan geometry.

    Casts one ray per bin center; cell (a, k) is free when the point at
    distance ``k * 0.25`` along that ray still has ``agent_radius + margin``
    of headroom before the wall the ray runs into.
    """
    from .world import D_MAX, _require_valid_origin

    _require_valid_origin(floorplan, pose.x, pose.y)
    depths = geo.ray_fan(pose.position, bin_center_angles(), floorplan.walls, max_range=D_MAX)
    return OccupancyMask.from_clear_depths(depths - AGENT_RADIUS - margin)


def swept_oracle_occupancy(floorplan: Floorplan, pose: Pose, margin: float = 0.0) -> OccupancyMask:
    """Movement-safety mask: cell (a, k) is free when sweeping the agent
    along the bin-center direction out to ``k * 0.25`` keeps
    ``agent_radius + margin`` clearance from every wall."""
    from .world import _require_valid_origin

    _require_valid_origin(floorplan, pose.x, pose.y)
    centers = np.radians(bin_center_angles())
    units = np.stack([np.sin(centers), np.cos(centers)], axis=1)  # (120, 2)
    reach = (np.arange(NUM_DISTANCE_BINS) + 1) * BIN_DEPTH  # (12,)
    ends = pose.position[None, None, :] + reach[None, :, None] * units[:, None, :]
    segs = np.concatenate(
        [
            np.broadcast_to(pose.position, ends.shape).reshape(-1, 2),
            ends.reshape(-1, 2),
        ],
        axis=1,
    )
    dist = geo.segments_to_walls_distance(segs, floorplan.walls)
    free = (dist >= AGENT_RADIUS + margin - 1e-12).reshape(NUM_ANGLE_BINS, NUM_DISTANCE_BINS)
    free = np.cumprod(free, axis=1).astype(bool)  # enforce shadowing explicitly
    return OccupancyMask(free)


def max_free_distance(mask: OccupancyMask, heading_deg: float) -> float:
    """How far the agent may move along a heading before a blocked cell.

    The heading maps to angle bin ``floor(heading / 3) mod 120``; the
    result is the free-prefix length times 0.25 m, at most 3.0 m.
    """
    return mask.free_prefix(angle_bin_of(heading_deg)) * BIN_DEPTH


@dataclass(frozen=True)
class OmpSample:
    panorama: DepthPanorama
    mask: OccupancyMask
    pose: Pose
    floorplan_id: str


def sample_free_pose(floorplan: Floorplan, rng, min_clearance: float = AGENT_RADIUS) -> Pose:
    """Uniform rejection sample over interior free space."""
    xmin, ymin, xmax, ymax = floorplan.bounds
    for _ in range(20000):
        x = rng.uniform(xmin, xmax)
        y = rng.uniform(ymin, ymax)
        if not floorplan.is_interior(x, y):
            continue
        if floorplan.wall_clearance(x, y) < min_clearance:
            continue
        return Pose(x, y, rng.uniform(0.0, 360.0))
    raise RuntimeError(f"could not sample a free pose in {floorplan.id}")


def _sample_record(floorplan: Floorplan, pose: Pose, rays_per_view: int) -> dict:
    pan = render_depth_panorama(floorplan, pose, rays_per_view)
    mask = oracle_occupancy(floorplan, pose)
    return {
        "floorplan_id": floorplan.id,
        "pose": {"x": round(pose.x, 6), "y": round(pose.y, 6), "heading": round(pose.heading, 6)},
        "depth": [[round(float(d), 6) for d in view] for view in pan.views],
        "mask": mask.to_strings(),
    }


def emit_omp_dataset(
    floorplans,
    samples_per_world: int,
    seed: int,
    path,
    rays_per_view: int = DEFAULT_RAYS_PER_VIEW,
) -> int:
    """Write panorama/oracle-mask training pairs as JSON lines.

    Poses are rejection-sampled uniformly over free space, deterministically
    from (seed, floorplan id, sample index). Returns the record count.
    """
    floorplans = list(floorplans)
    if not floorplans:
        raise ValueError("need at least one floorplan")
    if samples_per_world < 1:
        raise ValueError("samples_per_world must be >= 1")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w") as fh:
        for fp in floorplans:
            for k in range(samples_per_world):
                rng = derive_rng(seed, "omp", fp.id, str(k))
                pose = sample_free_pose(fp, rng)
                fh.write(json.dumps(_sample_record(fp, pose, rays_per_view), sort_keys=True) + "\n")
                count += 1
    return count


def load_omp_dataset(path):
    """Yield raw dataset records (dicts) from a JSONL file."""
    with Path(path).open() as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def verify_omp_dataset(path, floorplans_by_id) -> int:
    """Recompute the oracle mask for every record; raise on any mismatch.

    Returns the number of verified records.
    """
    n = 0
    for rec in load_omp_dataset(path):
        fp = floorplans_by_id[rec["floorplan_id"]]
        pose = Pose(rec["pose"]["x"], rec["pose"]["y"], rec["pose"]["heading"])
        expect = oracle_occupancy(fp, pose).to_strings()
        if rec["mask"] != expect:
            raise ValueError(f"mask mismatch for {rec['floorplan_id']} record {n}")
        n += 1
    return n
