"""Adjacency graphs between structural planar meshes."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import normalize
from .planemesh import PlanarMesh
from .polygons import point_segment_distance_2d, segment_polygon_distance_2d
from .vertex_translation import intersection_direction, plane_intersection_point

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdjacencyGraph:
    """Undirected graph over mesh indices."""

    num_nodes: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        for a, b in self.edges:
            if not (0 <= a < self.num_nodes and 0 <= b < self.num_nodes) or a == b:
                raise ValueError(f"invalid edge ({a}, {b})")

    @staticmethod
    def from_pairs(num_nodes: int, pairs) -> "AdjacencyGraph":
        return AdjacencyGraph(num_nodes, frozenset(tuple(sorted(p)) for p in pairs))

    def has_edge(self, a: int, b: int) -> bool:
        return tuple(sorted((a, b))) in self.edges

    def neighbors(self, i: int) -> list[int]:
        out = [b if a == i else a for a, b in self.edges if i in (a, b)]
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))

    def to_dot(self, labels: dict[int, str] | None = None) -> str:
        lines = ["graph adjacency {"]
        for i in range(self.num_nodes):
            name = labels.get(i, str(i)) if labels else str(i)
            lines.append(f'  n{i} [label="{name}"];')
        for a, b in sorted(self.edges):
            lines.append(f"  n{a} -- n{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def _line_footprint_distance(mesh: PlanarMesh, x0: np.ndarray, u: np.ndarray) -> float:
    """Ground-plan distance from a wall-pair intersection line to a wall.

    The wall projects to a segment and the (near-vertical) line to a point
    or a line in plan view; using the whole segment instead of the corner
    set keeps T junctions adjacent, where the line meets a long wall far
    from its corners.
    """
    a, b = _wall_footprint_segment(mesh)
    p0, uxy = x0[:2], u[:2]
    if np.linalg.norm(uxy) < 1e-9:
        return float(point_segment_distance_2d(p0, a, b)[0])
    n = normalize(np.array([-uxy[1], uxy[0]]))
    da, db = float((a - p0) @ n), float((b - p0) @ n)
    if da * db <= 0:
        return 0.0
    return min(abs(da), abs(db))


def build_wall_adjacency(walls: list[PlanarMesh], th_sep: float = 0.5,
                         th_parallel: float = 0.001) -> AdjacencyGraph:
    """Connect wall pairs whose intersection line runs close to both rectangles.

    A pair is adjacent when the planes are non-parallel (cross-product
    component above th_parallel) and the infinite intersection line passes
    within th_sep of each rectangle's ground-plan segment.  This mirrors the
    vertex translation displacement bound, so the graph only contains pairs
    the translation step would actually merge.
    """
    pairs = []
    for i in range(len(walls)):
        for j in range(i + 1, len(walls)):
            direction = intersection_direction(walls[i].plane.normal, walls[j].plane.normal)
            if np.abs(direction).max() < th_parallel:
                continue
            try:
                x0 = plane_intersection_point(walls[i].plane, walls[j].plane)
            except ValueError:
                logger.warning("walls %d/%d: degenerate intersection, skipped", i, j)
                continue
            u = normalize(direction)
            if (_line_footprint_distance(walls[i], x0, u) <= th_sep
                    and _line_footprint_distance(walls[j], x0, u) <= th_sep):
                pairs.append((i, j))
    return AdjacencyGraph.from_pairs(len(walls), pairs)


def _wall_footprint_segment(wall: PlanarMesh) -> tuple[np.ndarray, np.ndarray]:
    pts = wall.footprint()
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    a, b = np.unravel_index(np.argmax(d), d.shape)
    return pts[a], pts[b]


def build_ceiling_adjacency(slab: PlanarMesh, walls: list[PlanarMesh],
                            th_sep: float = 0.5) -> AdjacencyGraph:
    """Graph linking a horizontal slab (node 0) to nearby walls (node i+1).

    A wall is adjacent when its ground-plan segment comes within th_sep of
    the slab's footprint polygon, i.e. the footprint dilated by th_sep
    contains part of the wall.
    """
    footprint = slab.footprint()
    pairs = []
    for i, wall in enumerate(walls):
        a, b = _wall_footprint_segment(wall)
        if segment_polygon_distance_2d(a, b, footprint) <= th_sep:
            pairs.append((0, i + 1))
    return AdjacencyGraph.from_pairs(len(walls) + 1, pairs)
