"""Wall corner closure: translate rectangle edges onto wall-pair intersection lines."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .core import Plane, normalize
from .planemesh import PlanarMesh

logger = logging.getLogger(__name__)


@dataclass
class VTransConfig:
    th_parallel: float = 0.001
    th_sep: float = 0.5

    def __post_init__(self):
        if self.th_parallel <= 0 or self.th_sep <= 0:
            raise ValueError("thresholds must be positive")


def intersection_direction(n1, n2) -> np.ndarray:
    """Unnormalized direction of the intersection line of two planes."""
    return np.cross(np.asarray(n1, dtype=np.float64), np.asarray(n2, dtype=np.float64))


def planes_parallel(p1: Plane, p2: Plane, th_parallel: float = 0.001) -> bool:
    """Parallel test on the raw cross-product components."""
    return bool(np.abs(intersection_direction(p1.normal, p2.normal)).max() < th_parallel)


def plane_intersection_point(p1: Plane, p2: Plane) -> np.ndarray:
    """One point on the intersection line of two planes, taken on z = 0.

    Solves [z_axis; n1; n2] X = (0, -d1, -d2).  Raises when the system is
    singular, which happens for parallel planes or for pairs whose
    intersection line is horizontal (never crosses z = 0 transversally).
    """
    A = np.array([[0.0, 0.0, 1.0], p1.normal, p2.normal])
    B = np.array([0.0, -p1.d, -p2.d])
    if abs(np.linalg.det(A)) <= 1e-9:
        raise ValueError("planes have no unique intersection point on z=0")
    return np.linalg.solve(A, B)


def _point_line_distance(p: np.ndarray, x0: np.ndarray, u: np.ndarray) -> float:
    w = p - x0
    return float(np.linalg.norm(w - (w @ u) * u))


def _side_edges(corners: np.ndarray) -> list[tuple[int, int]]:
    # rectangle corner order is (umin,vmin),(umax,vmin),(umax,vmax),(umin,vmax)
    return [(0, 3), (1, 2)]


def translate_wall_vertices(walls: list[PlanarMesh], graph, cfg: VTransConfig | None = None
                            ) -> list[PlanarMesh]:
    """Move wall rectangle edges onto their neighbors' intersection lines.

    For each wall and each adjacent wall the side edge nearest to the pair's
    intersection line is projected onto that line; each vertex lands at its
    orthogonal projection, so rectangles only stretch or shrink along their
    horizontal direction and never leave their own plane.  A vertex farther
    than th_sep from its target keeps its position (the pair is considered
    separated on purpose).

    Edge choice and targets are computed from the input corners, and when
    several intersection lines claim the same side edge the moves apply in
    order of increasing displacement.  A line the edge already sits on is a
    no-op and cannot undo a genuine gap-closing move toward a farther line.
    """
    cfg = cfg or VTransConfig()
    for w in walls:
        if len(w.corners) != 4:
            raise ValueError("vertex translation expects 4-corner wall rectangles")
    out = [w.corners.copy() for w in walls]
    for i, wall in enumerate(walls):
        corners = out[i]
        moves: list[tuple[float, list[tuple[int, np.ndarray]]]] = []
        for j in sorted(graph.neighbors(i)):
            if j == i or not (0 <= j < len(walls)):
                continue
            other = walls[j]
            direction = intersection_direction(wall.plane.normal, other.plane.normal)
            if np.abs(direction).max() < cfg.th_parallel:
                continue
            try:
                x0 = plane_intersection_point(wall.plane, other.plane)
            except ValueError:
                logger.warning("walls %d/%d: no usable intersection line", i, j)
                continue
            u = normalize(direction)
            edges = _side_edges(corners)
            dists = [
                _point_line_distance(0.5 * (corners[a] + corners[b]), x0, u)
                for a, b in edges
            ]
            a, b = edges[int(np.argmin(dists))]
            targets: list[tuple[int, np.ndarray]] = []
            displacement = 0.0
            for vi in (a, b):
                v = corners[vi]
                target = x0 + ((v - x0) @ u) * u
                dist = float(np.linalg.norm(target - v))
                if dist > cfg.th_sep:
                    continue
                targets.append((vi, target))
                displacement = max(displacement, dist)
            if targets:
                moves.append((displacement, targets))
        moves.sort(key=lambda m: m[0])
        for _, targets in moves:
            for vi, target in targets:
                corners[vi] = target
    return [replace(w, corners=c) for w, c in zip(walls, out)]
