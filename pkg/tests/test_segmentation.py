"""Tests for the structural classification rules and outlier removal."""

import logging

import numpy as np
import pytest

from planaris import (
    Plane,
    PlanarPrimitive,
    PointCloud,
    RansacConfig,
    SceneSegmentation,
    SegmentationConfig,
    absorb_unassigned,
    detect_planes,
    remove_outliers,
    segment_scene,
)
from planaris.segmentation import (
    extract_non_structured,
    horizontal_indices,
    select_ceiling_floor,
    select_slanted,
    select_walls,
)


def _tilted_prim(tilt_deg, indices, d=0.0):
    t = np.radians(tilt_deg)
    n = np.array([np.sin(t), 0.0, np.cos(t)])
    return PlanarPrimitive(plane=Plane(n[0], n[1], n[2], d),
                           indices=np.asarray(indices), mean_normal=n)


def _horiz_scene(probe_frac, probe_count=30, h=3.0, probe_extent=0.5):
    """Large floor and ceiling slabs plus a small probe plane at a chosen
    fraction of the ceiling height."""
    rng = np.random.default_rng(0)

    def patch(n, z, ext):
        xy = rng.uniform(0.0, ext, size=(n, 2))
        return np.column_stack([xy, np.full(n, z)])

    pts = np.vstack([
        patch(1000, 0.0, 4.0),
        patch(1000, h, 4.0),
        patch(probe_count, probe_frac * h, probe_extent),
    ])
    cloud = PointCloud(pts)
    prims = [
        PlanarPrimitive(Plane(0, 0, 1, 0.0), np.arange(1000), np.array([0, 0, 1.0])),
        PlanarPrimitive(Plane(0, 0, 1, -h), np.arange(1000, 2000), np.array([0, 0, -1.0])),
        PlanarPrimitive(Plane(0, 0, 1, -probe_frac * h),
                        np.arange(2000, 2000 + probe_count), np.array([0, 0, -1.0])),
    ]
    return cloud, prims


class TestHorizontalTest:
    def test_flip_at_horizontal_angle(self):
        cfg = SegmentationConfig()
        prims = [_tilted_prim(19.0, [0]), _tilted_prim(21.0, [1])]
        assert horizontal_indices(prims, cfg) == [0]

    def test_exact_zero_tilt(self):
        cfg = SegmentationConfig()
        assert horizontal_indices([_tilted_prim(0.0, [0])], cfg) == [0]

    def test_downward_normal_counts(self):
        cfg = SegmentationConfig()
        prim = _tilted_prim(179.0, [0])     # 1 degree off straight down
        assert horizontal_indices([prim], cfg) == [0]


class TestWallTest:
    def _wall_points(self, height, n=100):
        return np.column_stack([np.zeros(n), np.linspace(0, 2, n),
                                np.linspace(0, height, n)])

    def test_flip_at_wall_angle(self):
        cfg = SegmentationConfig()
        cloud = PointCloud(self._wall_points(2.5))
        steep = _tilted_prim(86.0, np.arange(100))
        shallow = _tilted_prim(84.0, np.arange(100))
        assert select_walls([steep], cloud, cfg) == [0]
        assert select_walls([shallow], cloud, cfg) == []

    def test_flip_at_min_height(self):
        cfg = SegmentationConfig()
        tall = PointCloud(self._wall_points(1.6))
        short = PointCloud(self._wall_points(1.4))
        prim = _tilted_prim(90.0, np.arange(100))
        assert select_walls([prim], tall, cfg) == [0]
        assert select_walls([prim], short, cfg) == []


class TestCeilingFloorSelection:
    def test_seeds_are_extremes(self):
        cloud, prims = _horiz_scene(0.5, probe_count=10)
        ceiling, floor = select_ceiling_floor(prims, [0, 1, 2], cloud,
                                              SegmentationConfig())
        assert 1 in ceiling and 0 in floor

    @pytest.mark.parametrize("frac,expected_in_ceiling", [(0.71, True), (0.69, False)])
    def test_ceiling_fraction_flip(self, frac, expected_in_ceiling):
        cloud, prims = _horiz_scene(frac)
        ceiling, floor = select_ceiling_floor(prims, [0, 1, 2], cloud,
                                              SegmentationConfig())
        assert (2 in ceiling) is expected_in_ceiling
        assert 2 not in floor

    @pytest.mark.parametrize("frac,expected_in_floor", [(0.09, True), (0.11, False)])
    def test_floor_depth_flip(self, frac, expected_in_floor):
        cloud, prims = _horiz_scene(frac)
        ceiling, floor = select_ceiling_floor(prims, [0, 1, 2], cloud,
                                              SegmentationConfig())
        assert (2 in floor) is expected_in_floor
        assert 2 not in ceiling

    @pytest.mark.parametrize("frac,goes_to_ceiling", [(0.6, True), (0.4, False)])
    def test_multistory_admission(self, frac, goes_to_ceiling):
        # a mid-height slab with substantial support joins the nearer set
        cloud, prims = _horiz_scene(frac, probe_count=200)
        ceiling, floor = select_ceiling_floor(prims, [0, 1, 2], cloud,
                                              SegmentationConfig())
        assert (2 in ceiling) is goes_to_ceiling
        assert (2 in floor) is (not goes_to_ceiling)

    def test_small_midplane_stays_out(self):
        cloud, prims = _horiz_scene(0.5, probe_count=30)
        ceiling, floor = select_ceiling_floor(prims, [0, 1, 2], cloud,
                                              SegmentationConfig())
        assert 2 not in ceiling and 2 not in floor

    def test_single_horizontal_is_floor(self, caplog):
        cloud, prims = _horiz_scene(0.5)
        with caplog.at_level(logging.WARNING):
            ceiling, floor = select_ceiling_floor(prims[:1], [0], cloud,
                                                  SegmentationConfig())
        assert ceiling == [] and floor == [0]
        assert any("single horizontal" in r.message for r in caplog.records)

    def test_empty_horizontal(self):
        cloud, prims = _horiz_scene(0.5)
        assert select_ceiling_floor(prims, [], cloud, SegmentationConfig()) == ([], [])


class TestSlantedSelection:
    def _scene(self, z_lo, z_hi):
        wall = np.column_stack([np.zeros(60), np.linspace(0, 2, 60),
                                np.linspace(0, 3, 60)])
        cand = np.column_stack([np.linspace(0, 2, 60), np.linspace(0, 2, 60),
                                np.linspace(z_lo, z_hi, 60)])
        cloud = PointCloud(np.vstack([wall, cand]))
        prims = [_tilted_prim(90.0, np.arange(60)),
                 _tilted_prim(45.0, np.arange(60, 120))]
        return cloud, prims

    def test_reaching_top_band_selected(self):
        cloud, prims = self._scene(1.5, 3.0)
        out = select_slanted(prims, cloud, SegmentationConfig(), exclude={0})
        assert out == [1]

    def test_low_plane_rejected(self):
        cloud, prims = self._scene(0.0, 1.8)    # band starts at 2.1
        out = select_slanted(prims, cloud, SegmentationConfig(), exclude={0})
        assert out == []

    def test_angle_window(self):
        cloud, _ = self._scene(1.5, 3.0)
        nearly_flat = _tilted_prim(10.0, np.arange(60, 120))
        nearly_wall = _tilted_prim(88.0, np.arange(60, 120))
        cfg = SegmentationConfig()
        assert select_slanted([_tilted_prim(90.0, np.arange(60)), nearly_flat],
                              cloud, cfg, exclude={0}) == []
        assert select_slanted([_tilted_prim(90.0, np.arange(60)), nearly_wall],
                              cloud, cfg, exclude={0}) == []

    def test_exclusion_respected(self):
        cloud, prims = self._scene(1.5, 3.0)
        out = select_slanted(prims, cloud, SegmentationConfig(), exclude={0, 1})
        assert out == []


class TestExtractNonStructured:
    def test_complement_of_structured(self, rng):
        cloud = PointCloud(rng.uniform(size=(100, 3)))
        prims = [_tilted_prim(0.0, np.arange(0, 40)),
                 _tilted_prim(90.0, np.arange(40, 70)),
                 _tilted_prim(50.0, np.arange(70, 80))]
        rest, idx = extract_non_structured(cloud, prims, structured=[0, 1])
        assert np.array_equal(idx, np.arange(70, 100))
        assert np.allclose(rest.points, cloud.points[70:])

    def test_no_structured_returns_everything(self, rng):
        cloud = PointCloud(rng.uniform(size=(20, 3)))
        rest, idx = extract_non_structured(cloud, [], [])
        assert len(rest) == 20 and len(idx) == 20


class TestRemoveOutliers:
    def test_far_point_dropped(self, rng):
        cluster = rng.uniform(size=(500, 3))
        pts = np.vstack([cluster, [[0.5, 0.5, 9.0]]])
        out = remove_outliers(PointCloud(pts), k=20, std_ratio=2.0)
        assert not np.any(np.all(np.isclose(out.points, [0.5, 0.5, 9.0]), axis=1))
        assert len(out) >= 490

    def test_matches_bruteforce_rule(self, rng):
        pts = rng.uniform(size=(100, 3))
        out = remove_outliers(PointCloud(pts), k=5, std_ratio=1.0)
        d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
        mean_d = np.sort(d, axis=1)[:, 1:6].mean(axis=1)
        keep = mean_d <= mean_d.mean() + 1.0 * mean_d.std()
        assert np.allclose(out.points, pts[keep])

    def test_too_few_points_raises(self, rng):
        with pytest.raises(ValueError):
            remove_outliers(PointCloud(rng.uniform(size=(10, 3))), k=20)


class TestSegmentationConfig:
    @pytest.mark.parametrize("kwargs", [
        {"horizontal_angle_deg": 0.0},
        {"horizontal_angle_deg": 86.0},            # exceeds wall angle
        {"wall_angle_deg": 91.0},
        {"min_wall_height": 0.0},
        {"ceiling_frac": 0.0},
        {"floor_frac": 1.5},
        {"multistory_frac": -0.2},
        {"slanted_band_frac": 0.0},
    ])
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SegmentationConfig(**kwargs)


@pytest.fixture(scope="module")
def room_detection(single_room_scene):
    cloud = single_room_scene.cloud
    cfg = RansacConfig(seed=0)
    prims = absorb_unassigned(cloud, detect_planes(cloud, cfg), cfg.epsilon)
    return cloud, prims


class TestSegmentScene:
    def test_room_partition(self, room_detection):
        cloud, prims = room_detection
        seg = segment_scene(cloud, prims)
        assert seg.counts() == {"ceiling": 1, "floor": 1, "walls": 4, "slanted": 0}
        assert len(seg.structured()) == 6

    def test_non_structured_is_residue(self, room_detection):
        cloud, prims = room_detection
        seg = segment_scene(cloud, prims)
        claimed = sum(p.num_points for p in seg.structured())
        assert claimed + len(seg.non_structured_indices) == len(cloud)
        # the synthetic room is all structure; residue is a sliver at most
        assert len(seg.non_structured_indices) < 0.01 * len(cloud)

    def test_structured_order(self):
        seg = SceneSegmentation(
            ceiling=[_tilted_prim(0.0, [0])],
            floor=[_tilted_prim(0.0, [1])],
            walls=[_tilted_prim(90.0, [2])],
            slanted=[_tilted_prim(45.0, [3])],
        )
        idx = [int(p.indices[0]) for p in seg.structured()]
        assert idx == [0, 1, 3, 2]
