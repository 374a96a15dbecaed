"""Rectangle mesh estimation for planar primitives."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Plane, PointCloud, TriangleMesh, axis_angle_between, plane_basis
from .ransac import PlanarPrimitive

_MIN_EXTENT = 1e-3


@dataclass
class PlanarMesh:
    """A planar polygon (rectangle for freshly built primitives) with its
    supporting plane.  `kind` is one of wall / ceiling / floor / slanted;
    `source` indexes the originating primitive."""

    corners: np.ndarray
    plane: Plane
    kind: str
    source: int = -1

    def __post_init__(self):
        self.corners = np.ascontiguousarray(self.corners, dtype=np.float64).reshape(-1, 3)
        if len(self.corners) < 3:
            raise ValueError("planar mesh needs at least 3 corners")

    def triangle_mesh(self) -> TriangleMesh:
        k = len(self.corners)
        faces = [(0, i, i + 1) for i in range(1, k - 1)]
        return TriangleMesh(self.corners.copy(), np.array(faces, dtype=np.int64))

    def area(self) -> float:
        return self.triangle_mesh().area()

    def footprint(self) -> np.ndarray:
        """Corner projection onto the xy plane, (K, 2)."""
        return self.corners[:, :2].copy()


def build_primitive_mesh(prim: PlanarPrimitive, cloud: PointCloud, kind: str,
                         axis_tol_deg: float = 5.0, source: int = -1) -> PlanarMesh:
    """Fit a rectangle to a primitive's member points.

    When the plane normal is within axis_tol_deg of a coordinate axis the
    plane is snapped onto that axis (offset refit through the member
    centroid), which keeps walls of noisy axis-aligned scenes exactly
    axis-parallel.  The rectangle spans the min/max member coordinates in an
    orthonormal in-plane frame whose v direction is vertical for walls, so
    wall rectangles keep horizontal top and bottom edges.
    """
    pts = prim.points(cloud)
    if len(pts) < 3:
        raise ValueError("primitive has too few points for a mesh")
    plane = prim.plane
    n = plane.normal
    axis = int(np.argmax(np.abs(n)))
    if axis_angle_between(n, np.eye(3)[axis]) <= axis_tol_deg:
        snapped = np.sign(n[axis]) * np.eye(3)[axis]
        plane = Plane.from_normal_point(snapped, pts.mean(axis=0))

    u, v = plane_basis(plane.normal)
    origin = plane.project(pts.mean(axis=0))
    tu = (pts - origin) @ u
    tv = (pts - origin) @ v
    if tu.max() - tu.min() < _MIN_EXTENT or tv.max() - tv.min() < _MIN_EXTENT:
        raise ValueError("degenerate primitive: in-plane extent below 1 mm")
    corners = np.array([
        origin + tu.min() * u + tv.min() * v,
        origin + tu.max() * u + tv.min() * v,
        origin + tu.max() * u + tv.max() * v,
        origin + tu.min() * u + tv.max() * v,
    ])
    return PlanarMesh(corners=corners, plane=plane, kind=kind, source=source)
