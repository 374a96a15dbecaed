"""Gravity and axis alignment from detected planar primitives."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import (Plane, PointCloud, TriangleMesh, Z_AXIS, is_rotation,
                   rotation_about_z, rotation_between)
from .ransac import PlanarPrimitive

logger = logging.getLogger(__name__)


@dataclass
class AlignmentResult:
    """Outcome of the vertical alignment step."""

    rotation: np.ndarray
    chosen: int                # index of the supporting primitive
    num_upward: int
    num_downward: int

    def report(self) -> dict:
        angle = float(np.degrees(np.arccos(np.clip((np.trace(self.rotation) - 1) / 2, -1, 1))))
        return {
            "chosen_plane": self.chosen,
            "num_upward": self.num_upward,
            "num_downward": self.num_downward,
            "rotation_angle_deg": angle,
        }


def compute_z_rotation(primitives: list[PlanarPrimitive], c_min: float = 0.6) -> AlignmentResult:
    """Rotation making the dominant horizontal surface perpendicular to z.

    Primitives whose unit plane normal has |c| >= c_min are split into an
    upward and a downward list by the sign of their mean member-normal z
    component.  The best-supported primitive of the more populous list is
    selected and the rotation maps its upright direction onto +z (the normal
    itself for the upward list, its negation for the downward list).  Ties
    go to the upward list: upward-facing support is typically a floor and
    reliably horizontal, while the downward candidate may be a pitched roof.
    """
    ups: list[int] = []
    downs: list[int] = []
    for i, prim in enumerate(primitives):
        if abs(prim.plane.c) < c_min:
            continue
        (ups if prim.mean_normal[2] > 0 else downs).append(i)
    if not ups and not downs:
        raise ValueError(f"no primitive with |c| >= {c_min}: scene lacks horizontal support")

    pool = ups if len(ups) >= len(downs) else downs
    chosen = max(pool, key=lambda i: primitives[i].num_points)
    direction = primitives[chosen].plane.normal
    if pool is downs:
        direction = -direction
    R = rotation_between(direction, Z_AXIS)
    return AlignmentResult(rotation=R, chosen=chosen,
                           num_upward=len(ups), num_downward=len(downs))


def compute_xy_rotation(walls: list[PlanarPrimitive], bin_deg: float = 1.0,
                        refine_window_deg: float = 2.0) -> np.ndarray:
    """Rotation about z snapping the dominant wall direction onto the x axis.

    Wall-normal azimuths are folded modulo 90 degrees so perpendicular wall
    families reinforce one bin.  The support-weighted histogram picks the
    dominant bin and a weighted mean of the residuals inside a small window
    refines it below bin resolution.  Without walls this is the identity.
    """
    if not walls:
        logger.warning("no wall primitives: horizontal alignment left as identity")
        return np.eye(3)
    az = np.array([np.degrees(np.arctan2(p.plane.b, p.plane.a)) % 90.0 for p in walls])
    weights = np.array([p.num_points for p in walls], dtype=np.float64)

    nbins = int(round(90.0 / bin_deg))
    hist = np.zeros(nbins)
    bins = np.minimum((az / bin_deg).astype(int), nbins - 1)
    np.add.at(hist, bins, weights)
    center = (int(np.argmax(hist)) + 0.5) * bin_deg

    residual = (az - center + 45.0) % 90.0 - 45.0
    near = np.abs(residual) <= refine_window_deg
    if near.any():
        center += float(np.average(residual[near], weights=weights[near]))
    center %= 90.0

    angle = -center if center <= 45.0 else 90.0 - center
    return rotation_about_z(np.radians(angle))


def apply_rotation(obj, R: np.ndarray):
    """Rotate a cloud, mesh, plane, primitive, or a sequence of them.

    Returns a new object of the same type; R must be a proper rotation.
    """
    R = np.asarray(R, dtype=np.float64)
    if not is_rotation(R, tol=1e-8):
        raise ValueError("apply_rotation requires an orthonormal, det=+1 matrix")
    if isinstance(obj, PointCloud):
        normals = None if obj.normals is None else obj.normals @ R.T
        return PointCloud(obj.points @ R.T, normals)
    if isinstance(obj, TriangleMesh):
        return TriangleMesh(obj.vertices @ R.T, obj.faces.copy())
    if isinstance(obj, Plane):
        n = R @ obj.normal
        return Plane(n[0], n[1], n[2], obj.d)
    if isinstance(obj, PlanarPrimitive):
        return PlanarPrimitive(plane=apply_rotation(obj.plane, R),
                               indices=obj.indices.copy(),
                               mean_normal=R @ obj.mean_normal)
    if isinstance(obj, (list, tuple)):
        return type(obj)(apply_rotation(o, R) for o in obj)
    raise TypeError(f"cannot rotate object of type {type(obj).__name__}")
