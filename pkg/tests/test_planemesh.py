"""Tests for rectangle fitting to planar primitives."""

import numpy as np
import pytest

from planaris import (
    Plane,
    PlanarMesh,
    PlanarPrimitive,
    PointCloud,
    build_primitive_mesh,
)


def _wall_prim(tilt_from_vertical_deg=0.0, nx=40, nz=30):
    """Wall slab on x=1 with a controllable tilt about the y axis."""
    ys = np.linspace(0.0, 2.0, nx)
    zs = np.linspace(0.0, 2.8, nz)
    gy, gz = np.meshgrid(ys, zs)
    pts = np.column_stack([np.full(gy.size, 1.0), gy.ravel(), gz.ravel()])
    t = np.radians(tilt_from_vertical_deg)
    n = np.array([np.cos(t), 0.0, np.sin(t)])
    # shear the points so they genuinely lie on the tilted plane
    pts[:, 0] = 1.0 - np.tan(t) * (pts[:, 2] - 1.4)
    plane = Plane.from_normal_point(n, np.array([1.0, 1.0, 1.4]))
    prim = PlanarPrimitive(plane=plane, indices=np.arange(len(pts)), mean_normal=n)
    return prim, PointCloud(pts)


class TestPlanarMesh:
    def test_quad_triangulation(self):
        corners = np.array([[0, 0, 0], [2, 0, 0], [2, 1, 0], [0, 1, 0.0]])
        pm = PlanarMesh(corners, Plane(0, 0, 1, 0.0), "floor")
        mesh = pm.triangle_mesh()
        assert len(mesh.faces) == 2
        assert pm.area() == pytest.approx(2.0)

    def test_footprint(self):
        corners = np.array([[0, 0, 2.8], [2, 0, 2.8], [2, 1, 2.8], [0, 1, 2.8]])
        pm = PlanarMesh(corners, Plane(0, 0, 1, -2.8), "ceiling")
        assert pm.footprint().shape == (4, 2)
        assert np.allclose(pm.footprint()[2], [2, 1])

    def test_too_few_corners(self):
        with pytest.raises(ValueError):
            PlanarMesh(np.zeros((2, 3)), Plane(0, 0, 1, 0.0), "floor")


class TestBuildPrimitiveMesh:
    def test_rectangle_covers_members(self):
        prim, cloud = _wall_prim()
        pm = build_primitive_mesh(prim, cloud, "wall")
        assert pm.corners.shape == (4, 3)
        # all member points inside the rectangle's in-plane bounds
        u = pm.corners[1] - pm.corners[0]
        v = pm.corners[3] - pm.corners[0]
        rel = cloud.points - pm.corners[0]
        tu = rel @ (u / np.linalg.norm(u) ** 2)
        tv = rel @ (v / np.linalg.norm(v) ** 2)
        assert np.all((tu > -1e-9) & (tu < 1 + 1e-9))
        assert np.all((tv > -1e-9) & (tv < 1 + 1e-9))
        assert pm.kind == "wall"

    def test_axis_snap_within_tolerance(self):
        prim, cloud = _wall_prim(tilt_from_vertical_deg=3.0)
        pm = build_primitive_mesh(prim, cloud, "wall", axis_tol_deg=5.0)
        assert np.allclose(np.abs(pm.plane.normal), [1, 0, 0], atol=1e-12)

    def test_no_snap_beyond_tolerance(self):
        prim, cloud = _wall_prim(tilt_from_vertical_deg=7.0)
        pm = build_primitive_mesh(prim, cloud, "wall", axis_tol_deg=5.0)
        assert abs(pm.plane.normal[2]) > 0.05

    def test_snap_offset_refit_through_centroid(self):
        prim, cloud = _wall_prim(tilt_from_vertical_deg=2.0)
        pm = build_primitive_mesh(prim, cloud, "wall", axis_tol_deg=5.0)
        centroid = cloud.points.mean(axis=0)
        assert abs(pm.plane.signed_distance(centroid)) < 1e-9

    def test_wall_side_edges_vertical(self):
        prim, cloud = _wall_prim()
        pm = build_primitive_mesh(prim, cloud, "wall")
        # corners run min/min, max/min, max/max, min/max in (u, v) with v
        # vertical, so edges 0-3 and 1-2 are the vertical sides
        for a, b in ((0, 3), (1, 2)):
            edge = pm.corners[b] - pm.corners[a]
            edge /= np.linalg.norm(edge)
            assert abs(abs(edge[2]) - 1.0) < 1e-12

    def test_wall_top_bottom_horizontal(self):
        prim, cloud = _wall_prim()
        pm = build_primitive_mesh(prim, cloud, "wall")
        for a, b in ((0, 1), (3, 2)):
            edge = pm.corners[b] - pm.corners[a]
            assert abs(edge[2]) < 1e-12

    def test_floor_rectangle_extents(self):
        rng = np.random.default_rng(0)
        xy = rng.uniform([0, 0], [4, 3], size=(2000, 2))
        pts = np.column_stack([xy, np.zeros(2000)])
        prim = PlanarPrimitive(Plane(0, 0, 1, 0.0), np.arange(2000),
                               np.array([0, 0, 1.0]))
        pm = build_primitive_mesh(prim, PointCloud(pts), "floor")
        ext = pm.footprint().max(axis=0) - pm.footprint().min(axis=0)
        assert np.allclose(np.sort(ext), np.sort(xy.max(axis=0) - xy.min(axis=0)),
                           atol=1e-9)

    def test_degenerate_extent_raises(self):
        pts = np.column_stack([np.linspace(0, 1, 50), np.zeros(50), np.zeros(50)])
        prim = PlanarPrimitive(Plane(0, 0, 1, 0.0), np.arange(50),
                               np.array([0, 0, 1.0]))
        with pytest.raises(ValueError):
            build_primitive_mesh(prim, PointCloud(pts), "floor")

    def test_too_few_points_raises(self):
        pts = np.array([[0, 0, 0], [1, 0, 0.0]])
        prim = PlanarPrimitive(Plane(0, 0, 1, 0.0), np.arange(2),
                               np.array([0, 0, 1.0]))
        with pytest.raises(ValueError):
            build_primitive_mesh(prim, PointCloud(pts), "floor")

    def test_source_tag_carried(self):
        prim, cloud = _wall_prim()
        pm = build_primitive_mesh(prim, cloud, "wall", source=7)
        assert pm.source == 7
