"""Support-driven clipping of slab rectangles by adjacent wall planes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .core import Plane, PointCloud, TriangleMesh, plane_basis
from .planemesh import PlanarMesh
from .polygons import (points_in_polygon, polygon_area, polygon_bounds,
                       split_polygon_by_line, triangulate_polygon)

logger = logging.getLogger(__name__)

# Side classification tolerance for vertices against a cut plane, in meters.
SIDE_EPS = 1e-7


@dataclass
class ClipConfig:
    """th_clip is the minimum enclosed point count (strict) for a fragment
    to survive; 0 disables filtering entirely."""

    th_clip: int = 50

    def __post_init__(self):
        if self.th_clip < 0:
            raise ValueError("th_clip must be non-negative")


@dataclass
class MeshFragment:
    """A polygonal piece of a slab plane, stored in in-plane coordinates."""

    plane: Plane
    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray
    loop2d: np.ndarray
    support: int = 0

    @property
    def polygon(self) -> np.ndarray:
        """World-space vertex loop, (K, 3)."""
        return (self.origin
                + np.multiply.outer(self.loop2d[:, 0], self.u)
                + np.multiply.outer(self.loop2d[:, 1], self.v))

    def area(self) -> float:
        return abs(polygon_area(self.loop2d))

    def to_mesh(self) -> TriangleMesh:
        tris = triangulate_polygon(self.loop2d)
        verts = self.polygon
        keep = []
        for t in tris:
            p = self.loop2d[t]
            if abs(polygon_area(p)) > 1e-12:
                keep.append(t)
        return TriangleMesh(verts, np.array(keep, dtype=np.int64).reshape(-1, 3))


def fragment_from_planar_mesh(mesh: PlanarMesh) -> MeshFragment:
    """Wrap a planar mesh polygon as the root fragment for clipping."""
    u, v = plane_basis(mesh.plane.normal)
    origin = mesh.plane.project(mesh.corners.mean(axis=0))
    rel = mesh.corners - origin
    loop2d = np.column_stack([rel @ u, rel @ v])
    return MeshFragment(plane=mesh.plane, origin=origin, u=u, v=v, loop2d=loop2d)


def project_to_frame(frag: MeshFragment, points: np.ndarray) -> np.ndarray:
    """In-plane (u, v) coordinates of 3D points (drops the normal component)."""
    rel = np.asarray(points, dtype=np.float64) - frag.origin
    return np.column_stack([rel @ frag.u, rel @ frag.v])


def clip_polygon_by_plane(frag: MeshFragment, cutter: Plane
                          ) -> tuple[MeshFragment | None, MeshFragment | None]:
    """Split a fragment by a plane; returns (positive side, negative side).

    The cut happens along the cutter's trace in the fragment plane.  A
    fragment entirely on one side (within SIDE_EPS) comes back whole on that
    side; a fragment coplanar with the cutter counts as positive.
    """
    n = cutter.normal
    a2 = float(n @ frag.u)
    b2 = float(n @ frag.v)
    c2 = float(n @ frag.origin + cutter.d)
    if np.hypot(a2, b2) < 1e-12:
        # cutter parallel to the fragment plane: nothing to split
        return (frag, None) if c2 >= 0 else (None, frag)
    pos, neg = split_polygon_by_line(frag.loop2d, (a2, b2, c2), eps=SIDE_EPS)
    mk = lambda loop: None if loop is None else replace(frag, loop2d=loop, support=0)
    return mk(pos), mk(neg)


def count_support(frag: MeshFragment, points2d: np.ndarray, eps: float = 1e-9) -> int:
    """Number of projected points inside the fragment polygon (boundary included)."""
    if len(points2d) == 0:
        return 0
    lo, hi = polygon_bounds(frag.loop2d)
    box = ((points2d[:, 0] >= lo[0] - eps) & (points2d[:, 0] <= hi[0] + eps)
           & (points2d[:, 1] >= lo[1] - eps) & (points2d[:, 1] <= hi[1] + eps))
    if not box.any():
        return 0
    return int(points_in_polygon(points2d[box], frag.loop2d, eps=eps).sum())


def clip_structural_plane(slab: PlanarMesh, cloud: PointCloud,
                          walls: list[PlanarMesh], graph,
                          config: ClipConfig | None = None) -> list[MeshFragment]:
    """Clip a slab rectangle by its adjacent walls, keeping supported pieces.

    `cloud` is the slab primitive's own point cloud; `graph` is the slab
    adjacency (node 0 = slab, node i+1 = walls[i]).  Fragments are split by
    each adjacent wall plane in turn and a piece survives only while more
    than th_clip of the slab's points project inside it.  With th_clip = 0
    every piece survives and the fragments tile the input rectangle exactly.
    """
    cfg = config or ClipConfig()
    root = fragment_from_planar_mesh(slab)
    points2d = project_to_frame(root, cloud.points)

    def admit(frag: MeshFragment) -> MeshFragment | None:
        support = count_support(frag, points2d)
        if cfg.th_clip <= 0 or support > cfg.th_clip:
            return replace(frag, support=support)
        return None

    fragments = [replace(root, support=count_support(root, points2d))]
    for node in graph.neighbors(0):
        wall = walls[node - 1]
        survivors: list[MeshFragment] = []
        for frag in fragments:
            for part in clip_polygon_by_plane(frag, wall.plane):
                if part is None:
                    continue
                kept = admit(part)
                if kept is not None:
                    survivors.append(kept)
        fragments = survivors
        if not fragments:
            logger.warning("slab clipped away entirely (th_clip=%d)", cfg.th_clip)
            break
    return fragments
