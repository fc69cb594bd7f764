import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import box_walls
from vlncm.perception import (
    BIN_DEPTH,
    MASK_RANGE,
    NUM_ANGLE_BINS,
    NUM_DISTANCE_BINS,
    OccupancyMask,
    angle_bin_of,
    bin_center_angles,
    depth_to_occupancy,
    emit_omp_dataset,
    load_omp_dataset,
    max_free_distance,
    oracle_occupancy,
    sample_free_pose,
    swept_oracle_occupancy,
    verify_omp_dataset,
)
from vlncm.rng import derive_rng
from vlncm.world import AGENT_RADIUS, D_MAX, DepthPanorama, Floorplan, Pose, raycast, render_depth_panorama
from vlncm.worldgen import generate_world


def flat_panorama(depth, rays_per_view=10):
    return DepthPanorama(np.full((12, rays_per_view), float(depth)))


class TestDepthToOccupancy:
    def test_open_field_all_free(self):
        mask = depth_to_occupancy(flat_panorama(D_MAX))
        assert mask.cells.all()

    def test_short_ray_blocks_whole_bin(self):
        depths = np.full((12, 10), D_MAX)
        depths[0, 0] = 0.1  # ray at 1.5 degrees -> angle bin 0
        mask = depth_to_occupancy(DepthPanorama(depths))
        assert not mask.cells[0].any()
        assert mask.cells[1:].all()

    def test_square_room_forward_bin(self, square_room):
        # centered in the 4x4 room: along the +y bin the wall is ~2.0 m out,
        # so 8 quarter-meter cells are free and the rest occupied.
        pan = render_depth_panorama(square_room, Pose(0, 0, 0))
        d_min = raycast(square_room, (0, 0), 1.5)
        mask = depth_to_occupancy(pan)
        expect_free = int(d_min // BIN_DEPTH)
        assert expect_free == 8
        row = mask.cells[0]
        assert row[:expect_free].all()
        assert not row[expect_free:].any()

    def test_margin_shrinks_free_space(self):
        pan = flat_panorama(1.0)
        k0 = depth_to_occupancy(pan, margin=0.0).free_prefix(0)
        k1 = depth_to_occupancy(pan, margin=AGENT_RADIUS).free_prefix(0)
        assert k0 == 4 and k1 == 3

    def test_sparse_rays_use_nearest_neighbor(self):
        # 3 rays/view leaves most 3-degree bins empty; they borrow depth.
        depths = np.full((12, 3), 5.0)
        mask = depth_to_occupancy(DepthPanorama(depths))
        assert mask.cells.all() == (5.0 >= MASK_RANGE)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.05, 10.0), min_size=120, max_size=120))
    def test_shadowing_property(self, ray_depths):
        depths = np.array(ray_depths).reshape(12, 10)
        mask = depth_to_occupancy(DepthPanorama(depths))
        assert mask.satisfies_shadowing()


class TestOracle:
    def test_open_room_all_free(self):
        fp = Floorplan("ten", (-5, -5, 5, 5), box_walls(-5, -5, 5, 5))
        mask = oracle_occupancy(fp, Pose(0, 0, 0))
        assert int(mask.cells.sum()) == NUM_ANGLE_BINS * NUM_DISTANCE_BINS

    def test_wall_one_meter_ahead(self):
        # agent 1 m from the north wall: the forward bin keeps clearance up
        # to k*0.25 <= 1.0 - agent_radius, i.e. 3 cells free.
        fp = Floorplan("ten", (-5, -5, 5, 5), box_walls(-5, -5, 5, 5))
        pose = Pose(0, 4, 0)
        mask = oracle_occupancy(fp, pose)
        row = mask.cells[0]  # bin centered 1.5 deg off +y
        # brute-force point sampling of the same rule
        ang = math.radians(1.5)
        expected = []
        for k in range(1, 13):
            px, py = pose.x + k * 0.25 * math.sin(ang), pose.y + k * 0.25 * math.cos(ang)
            headroom = raycast(fp, (pose.x, pose.y), 1.5) - k * 0.25
            expected.append(headroom >= AGENT_RADIUS)
        assert list(row) == expected
        assert row[:3].all() and not row[3:].any()

    def test_rear_wall(self):
        fp = Floorplan("ten", (-5, -5, 5, 5), box_walls(-5, -5, 5, 5))
        mask = oracle_occupancy(fp, Pose(0, -4.7, 0))
        rear = mask.cells[angle_bin_of(180.0)]
        fwd = mask.cells[angle_bin_of(0.0)]
        assert not rear.any()  # wall 0.3 m behind
        assert fwd.all()

    def test_matches_estimator_at_default_rays(self, square_room):
        rng = derive_rng(3, "poses")
        for _ in range(50):
            pose = sample_free_pose(square_room, rng)
            pan = render_depth_panorama(square_room, pose, rays_per_view=10)
            est = depth_to_occupancy(pan, margin=AGENT_RADIUS)
            orc = oracle_occupancy(square_room, pose)
            assert np.array_equal(est.cells, orc.cells)


class TestSweptOracle:
    def test_is_no_more_permissive_than_radial(self):
        fp, _ = generate_world(11)
        rng = derive_rng(11, "swept")
        for _ in range(25):
            pose = sample_free_pose(fp, rng)
            radial = oracle_occupancy(fp, pose)
            swept = swept_oracle_occupancy(fp, pose)
            assert not (swept.cells & ~radial.cells).any()
            assert swept.satisfies_shadowing()

    def test_blocks_lateral_hazard(self):
        # Wall parallel to the movement direction, 0.15 m to the side:
        # radial rays fly past it but sweeping a 0.1 m disc with a 0.1 m
        # margin must flag the cells.
        walls = box_walls(-5, -5, 5, 5) + [(0.15, 0.0, 0.15, 4.0)]
        fp = Floorplan("lat", (-5, -5, 5, 5), walls)
        pose = Pose(0, 0.5, 0)
        swept = swept_oracle_occupancy(fp, pose, margin=AGENT_RADIUS)
        radial = oracle_occupancy(fp, pose)
        fwd = angle_bin_of(0.0)
        assert radial.cells[fwd].all()
        assert not swept.cells[fwd].any()


class TestMaxFreeDistance:
    def test_fully_free(self):
        mask = OccupancyMask(np.ones((120, 12), bool))
        for h in (0, 15, 90, 359.9):
            assert max_free_distance(mask, h) == MASK_RANGE

    def test_prefix_of_four(self):
        cells = np.ones((120, 12), bool)
        cells[10, 4:] = False
        mask = OccupancyMask(cells)
        assert max_free_distance(mask, 31.0) == pytest.approx(1.0)

    def test_first_cell_blocked(self):
        cells = np.ones((120, 12), bool)
        cells[0, :] = False
        mask = OccupancyMask(cells)
        assert max_free_distance(mask, 1.0) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 119), st.integers(0, 11), st.floats(0, 360, exclude_max=True))
    def test_monotone_under_occupancy(self, a, k, heading):
        rng_cells = np.ones((120, 12), bool)
        rng_cells[a, k:] = False
        base = OccupancyMask(rng_cells)
        more = np.array(rng_cells)
        more[(a + 7) % 120, 5:] = False
        assert max_free_distance(OccupancyMask(more), heading) <= max_free_distance(base, heading)


class TestDataset:
    def test_counts_and_determinism(self, tmp_path):
        fps = [generate_world(s)[0] for s in (1, 2, 3)]
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        n1 = emit_omp_dataset(fps, 10, seed=5, path=p1)
        n2 = emit_omp_dataset(fps, 10, seed=5, path=p2)
        assert n1 == n2 == 30
        assert p1.read_bytes() == p2.read_bytes()

    def test_records_verify_against_oracle(self, tmp_path):
        fp, _ = generate_world(4)
        path = tmp_path / "omp.jsonl"
        n = emit_omp_dataset([fp], 20, seed=9, path=path)
        assert verify_omp_dataset(path, {fp.id: fp}) == n

    def test_record_shape(self, tmp_path):
        fp, _ = generate_world(4)
        path = tmp_path / "omp.jsonl"
        emit_omp_dataset([fp], 3, seed=9, path=path)
        rec = next(load_omp_dataset(path))
        assert rec["floorplan_id"] == fp.id
        assert len(rec["depth"]) == 12 and len(rec["depth"][0]) == 10
        assert len(rec["mask"]) == 120 and all(len(row) == 12 for row in rec["mask"])
        assert set("".join(rec["mask"])) <= {"0", "1"}

    def test_different_seed_changes_file(self, tmp_path):
        fp, _ = generate_world(4)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        emit_omp_dataset([fp], 5, seed=1, path=p1)
        emit_omp_dataset([fp], 5, seed=2, path=p2)
        assert p1.read_bytes() != p2.read_bytes()

    def test_sampled_poses_are_interior(self):
        fp, _ = generate_world(6)
        rng = derive_rng(0, "interior")
        for _ in range(50):
            pose = sample_free_pose(fp, rng)
            assert fp.is_interior(pose.x, pose.y)
            assert fp.wall_clearance(pose.x, pose.y) >= AGENT_RADIUS
