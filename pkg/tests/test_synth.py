"""Tests for the synthetic scene generator and its ground-truth bookkeeping."""

import json
from collections import Counter

import numpy as np
import pytest

from planaris import Box, SceneSpec, generate_scene, PRESETS
from planaris.synth import (
    STRUCTURED_KINDS,
    alcove_clip_fixture,
    apartment_spec,
    hallway_spec,
    shed_roof_spec,
    single_room_spec,
    two_room_l_spec,
)


class TestBox:
    def test_footprint_area(self):
        assert Box(0, 0, 0, 4, 3, 2.8).footprint_area() == pytest.approx(12.0)

    def test_overlaps(self):
        a = Box(0, 0, 0, 4, 3, 2.8)
        assert a.overlaps(Box(3, 2, 0, 6, 5, 2.8))
        assert not a.overlaps(Box(4, 0, 0, 8, 3, 2.8))      # share a face only
        assert not a.overlaps(Box(5, 0, 0, 8, 3, 2.8))

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Box(0, 0, 0, 0, 3, 2.8)


class TestSceneSpec:
    def test_overlapping_rooms_rejected(self):
        with pytest.raises(ValueError):
            SceneSpec(rooms=(Box(0, 0, 0, 4, 3, 2.8), Box(2, 0, 0, 6, 3, 2.8)))

    def test_no_rooms_rejected(self):
        with pytest.raises(ValueError):
            SceneSpec(rooms=())

    def test_pitched_roof_single_room_only(self):
        with pytest.raises(ValueError):
            SceneSpec(rooms=(Box(0, 0, 0, 4, 3, 2.8), Box(5, 0, 0, 9, 3, 2.8)),
                      roof_pitch_deg=20.0)

    def test_negative_density_rejected(self):
        with pytest.raises(ValueError):
            SceneSpec(rooms=(Box(0, 0, 0, 4, 3, 2.8),), density=-5)

    def test_json_round_trip(self, tmp_path):
        spec = hallway_spec()
        path = tmp_path / "spec.json"
        spec.to_json(path)
        loaded = SceneSpec.from_json(path)
        assert loaded == spec
        assert json.loads(path.read_text())["density"] == spec.density


class TestSingleRoom:
    def test_six_surfaces(self, single_room_scene):
        kinds = Counter(s.kind for s in single_room_scene.surfaces)
        assert kinds == {"wall": 4, "floor": 1, "ceiling": 1}

    def test_point_budget_per_surface(self, single_room_scene):
        scene = single_room_scene
        for i, s in enumerate(scene.surfaces):
            want = round(s.area * scene.spec.density)
            assert len(scene.surface_points(i)) == want
        assert len(scene.cloud) == 63200

    def test_points_near_truth_planes(self, single_room_scene):
        # sigma = 5 mm; all samples stay within 6 sigma of their plane
        scene = single_room_scene
        for i, s in enumerate(scene.surfaces):
            d = np.abs(s.plane.signed_distance(scene.surface_points(i)))
            assert d.max() < 6 * scene.spec.sigma

    def test_normals_exact_inward(self, single_room_scene):
        scene = single_room_scene
        for i, s in enumerate(scene.surfaces):
            nrm = scene.cloud.normals[scene.labels == i]
            assert np.allclose(nrm, s.plane.normal, atol=1e-12)

    def test_inward_orientation(self, single_room_scene):
        # every surface normal points toward the room center
        scene = single_room_scene
        center = np.array([2.0, 1.5, 1.4])
        for i, s in enumerate(scene.surfaces):
            assert s.plane.signed_distance(center) > 0

    def test_determinism(self):
        a = generate_scene(single_room_spec())
        b = generate_scene(single_room_spec())
        assert np.array_equal(a.cloud.points, b.cloud.points)
        spec = single_room_spec()
        c = generate_scene(SceneSpec(**{**spec.__dict__, "seed": 1}))
        assert not np.array_equal(a.cloud.points, c.cloud.points)


class TestTwoRoomL:
    def test_surface_decomposition(self):
        scene = generate_scene(two_room_l_spec())
        kinds = Counter(s.kind for s in scene.surfaces)
        # the partition between the rooms is emitted once, so 8 walls
        assert kinds == {"wall": 8, "floor": 2, "ceiling": 2}

    def test_room_areas(self):
        scene = generate_scene(two_room_l_spec())
        assert sum(scene.room_areas) == pytest.approx(33.0)

    def test_shared_wall_emitted_once(self):
        scene = generate_scene(two_room_l_spec())
        # walls lying on the y=4 partition plane
        shared = [s for s in scene.surfaces
                  if s.kind == "wall" and abs(abs(s.plane.b) - 1.0) < 1e-9
                  and abs(abs(s.plane.d) - 4.0) < 1e-9]
        spans = sorted(tuple(np.round([s.corners[:, 0].min(),
                                       s.corners[:, 0].max()], 9))
                       for s in shared)
        assert spans == [(0.0, 3.0), (3.0, 6.0)]


class TestHallway:
    def test_corner_gap_shortens_east_wall(self):
        scene = generate_scene(hallway_spec())
        east = [s for s in scene.surfaces
                if s.room == 0 and abs(s.plane.a + 1.0) < 1e-9
                and abs(s.plane.d - 4.0) < 1e-9]
        assert len(east) == 1
        assert east[0].corners[:, 1].min() == pytest.approx(0.2)

    def test_rooms_offset_in_y(self):
        spec = hallway_spec()
        assert spec.rooms[1].y0 == pytest.approx(spec.rooms[0].y0 + 0.3)

    def test_noise_free(self):
        assert hallway_spec().sigma == 0.0


class TestShedRoof:
    def test_roof_surface(self):
        scene = generate_scene(shed_roof_spec())
        kinds = Counter(s.kind for s in scene.surfaces)
        assert kinds == {"wall": 4, "floor": 1, "roof": 1}
        ri = scene.surfaces_of_kind("roof")[0]
        roof = scene.surfaces[ri]
        pitch = np.radians(20.0)
        want = np.array([0.0, np.sin(pitch), -np.cos(pitch)])
        assert np.allclose(roof.plane.normal, want, atol=1e-12)

    def test_gable_walls_are_trapezoids(self):
        scene = generate_scene(shed_roof_spec())
        trapez = [s for s in scene.surfaces if s.kind == "wall"
                  and len(np.unique(np.round(s.corners[:, 2], 9))) > 2]
        assert len(trapez) == 2

    def test_roof_mesh_reports_slanted(self):
        scene = generate_scene(shed_roof_spec())
        ri = scene.surfaces_of_kind("roof")[0]
        assert scene.surfaces[ri].planar_mesh().kind == "slanted"

    def test_roof_points_on_plane(self):
        scene = generate_scene(shed_roof_spec())
        ri = scene.surfaces_of_kind("roof")[0]
        d = scene.surfaces[ri].plane.signed_distance(scene.surface_points(ri))
        assert np.abs(d).max() < 6 * scene.spec.sigma


class TestMultistory:
    def test_slab_between_stories(self):
        spec = SceneSpec(rooms=(Box(0, 0, 0, 4, 3, 2.8), Box(0, 0, 2.8, 4, 3, 5.6)))
        scene = generate_scene(spec)
        kinds = Counter(s.kind for s in scene.surfaces)
        # coplanar walls of the stacked stories merge full height, and the
        # coincident ceiling/floor pair becomes a single slab
        assert kinds == {"wall": 4, "floor": 1, "slab": 1, "ceiling": 1}
        si = scene.surfaces_of_kind("slab")[0]
        assert scene.surfaces[si].corners[:, 2].max() == pytest.approx(2.8)
        assert scene.surfaces[si].planar_mesh().kind == "ceiling"


class TestApartment:
    def test_scale_and_composition(self):
        scene = generate_scene(apartment_spec())
        assert len(scene.cloud) == 500501
        kinds = Counter(s.kind for s in scene.surfaces)
        assert kinds == {"wall": 15, "object": 10, "floor": 5, "ceiling": 5}
        assert int((scene.labels == -1).sum()) == 500

    def test_structured_mask_partition(self):
        scene = generate_scene(apartment_spec())
        mask = scene.structured_mask()
        obj = sum(int((scene.labels == i).sum())
                  for i, s in enumerate(scene.surfaces) if s.kind == "object")
        stray = int((scene.labels == -1).sum())
        assert mask.sum() + obj + stray == len(scene.cloud)
        assert "object" not in STRUCTURED_KINDS

    def test_object_surface_has_no_structural_mesh(self):
        scene = generate_scene(apartment_spec())
        oi = scene.surfaces_of_kind("object")[0]
        with pytest.raises(ValueError):
            scene.surfaces[oi].planar_mesh()


class TestStrayNoise:
    def test_labels_and_bounds(self):
        spec = SceneSpec(rooms=(Box(0, 0, 0, 4, 3, 2.8),), density=200,
                         stray_noise=150, seed=3)
        scene = generate_scene(spec)
        stray = scene.cloud.points[scene.labels == -1]
        assert len(stray) == 150
        assert stray.min() >= -1e-9
        assert np.all(stray <= [4, 3, 2.8])
        assert not scene.structured_mask()[scene.labels == -1].any()


class TestPresetsAndTruth:
    def test_preset_names(self):
        assert set(PRESETS) == {"single-room", "two-room-l", "hallway",
                                "shed-roof", "apartment"}
        for factory in PRESETS.values():
            assert isinstance(factory(), SceneSpec)

    def test_truth_json(self, tmp_path, single_room_scene):
        path = tmp_path / "truth.json"
        single_room_scene.truth_json(path)
        data = json.loads(path.read_text())
        assert len(data["surfaces"]) == 6
        assert data["room_areas"] == [pytest.approx(12.0)]
        first = data["surfaces"][0]
        assert set(first) >= {"name", "kind", "plane", "corners", "area"}

    def test_alcove_fixture_counts(self):
        fix = alcove_clip_fixture(seed=0)
        assert len(fix.cloud) == 6000 + 60 + 40 + 40
        assert fix.main_area == pytest.approx(12.0)
        assert fix.alcove_area == pytest.approx(0.4)
        assert len(fix.walls) == 7
