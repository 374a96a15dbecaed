"""Structured / non-structured scene partition from planar primitives.

Classification is angle- and height-based: near-horizontal primitives become
ceiling or floor candidates, near-vertical primitives of sufficient height
become walls, tilted planes reaching the upper part of the scene become
slanted ceilings, and everything else stays non-structured.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .core import PointCloud, Z_AXIS, axis_angle_between
from .ransac import PlanarPrimitive

logger = logging.getLogger(__name__)


@dataclass
class SegmentationConfig:
    horizontal_angle_deg: float = 20.0
    wall_angle_deg: float = 85.0
    min_wall_height: float = 1.5
    ceiling_frac: float = 0.7
    floor_frac: float = 0.9
    multistory_frac: float = 0.10
    slanted_band_frac: float = 0.7
    outlier_k: int = 20
    outlier_std_ratio: float = 2.0

    def __post_init__(self):
        if not 0 < self.horizontal_angle_deg < self.wall_angle_deg < 90:
            raise ValueError("need 0 < horizontal angle < wall angle < 90")
        if self.min_wall_height <= 0:
            raise ValueError("min_wall_height must be positive")
        for name in ("ceiling_frac", "floor_frac", "multistory_frac", "slanted_band_frac"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in (0, 1]")


@dataclass
class SceneSegmentation:
    """Disjoint partition of the scene's primitives and points."""

    ceiling: list[PlanarPrimitive] = field(default_factory=list)
    floor: list[PlanarPrimitive] = field(default_factory=list)
    walls: list[PlanarPrimitive] = field(default_factory=list)
    slanted: list[PlanarPrimitive] = field(default_factory=list)
    non_structured: PointCloud | None = None
    non_structured_indices: np.ndarray | None = None
    params: SegmentationConfig = field(default_factory=SegmentationConfig)

    def structured(self) -> list[PlanarPrimitive]:
        return list(self.ceiling) + list(self.floor) + list(self.slanted) + list(self.walls)

    def counts(self) -> dict:
        return {
            "ceiling": len(self.ceiling),
            "floor": len(self.floor),
            "walls": len(self.walls),
            "slanted": len(self.slanted),
        }


def _tilt_deg(prim: PlanarPrimitive) -> float:
    return axis_angle_between(prim.plane.normal, Z_AXIS)


def horizontal_indices(primitives: list[PlanarPrimitive], cfg: SegmentationConfig) -> list[int]:
    """Indices of primitives whose normal is within the horizontal angle of z."""
    return [i for i, p in enumerate(primitives) if _tilt_deg(p) < cfg.horizontal_angle_deg]


def _elevations(primitives, indices, cloud: PointCloud, datum: float) -> np.ndarray:
    return np.array([cloud.points[primitives[i].indices, 2].mean() - datum for i in indices])


def select_ceiling_floor(primitives: list[PlanarPrimitive], horizontal: list[int],
                         cloud: PointCloud, cfg: SegmentationConfig) -> tuple[list[int], list[int]]:
    """Pick ceiling and floor primitive indices from the horizontal set.

    Seeds are the highest and lowest of the large horizontal planes (ranked
    by point count times horizontal bounding-box area).  Further planes are
    admitted to the ceiling when their elevation reaches ceiling_frac of the
    seed elevation, and to the floor when their depth below the ceiling seed
    reaches floor_frac of the seed floor's depth.  Remaining horizontal
    planes carrying at least multistory_frac of the largest one's points
    (intermediate slabs of multi-story scenes) are admitted to whichever
    set matches their elevation.
    """
    if not horizontal:
        return [], []
    datum = float(cloud.points[:, 2].min())
    elev = _elevations(primitives, horizontal, cloud, datum)
    scores = []
    for i in horizontal:
        pts = cloud.points[primitives[i].indices]
        extent = pts[:, :2].max(axis=0) - pts[:, :2].min(axis=0)
        scores.append(primitives[i].num_points * float(extent[0] * extent[1]))
    scores = np.array(scores)

    large = scores >= 0.5 * scores.max()
    seed_c = int(np.flatnonzero(large)[np.argmax(elev[large])])
    seed_f = int(np.flatnonzero(large)[np.argmin(elev[large])])
    if seed_c == seed_f:
        logger.warning("single horizontal plane: classified as floor, no ceiling")
        return [], [horizontal[seed_f]]

    h_ceiling = elev[seed_c]
    seed_depth = h_ceiling - elev[seed_f]
    ceiling: list[int] = []
    floor: list[int] = []
    for k, i in enumerate(horizontal):
        is_c = elev[k] >= cfg.ceiling_frac * h_ceiling
        is_f = (h_ceiling - elev[k]) >= cfg.floor_frac * seed_depth
        if is_c and is_f:
            # degenerate geometry; attach to the nearer seed
            is_c = abs(elev[k] - h_ceiling) <= abs(elev[k] - elev[seed_f])
            is_f = not is_c
        if is_c:
            ceiling.append(i)
        elif is_f:
            floor.append(i)

    biggest = max(primitives[i].num_points for i in horizontal)
    mid = 0.5 * (h_ceiling + elev[seed_f])
    for k, i in enumerate(horizontal):
        if i in ceiling or i in floor:
            continue
        if primitives[i].num_points >= cfg.multistory_frac * biggest:
            (ceiling if elev[k] >= mid else floor).append(i)
    return ceiling, floor


def select_walls(primitives: list[PlanarPrimitive], cloud: PointCloud,
                 cfg: SegmentationConfig) -> list[int]:
    """Near-vertical primitives tall enough to be walls."""
    out = []
    for i, p in enumerate(primitives):
        if _tilt_deg(p) <= cfg.wall_angle_deg:
            continue
        z = cloud.points[p.indices, 2]
        if float(z.max() - z.min()) > cfg.min_wall_height:
            out.append(i)
    return out


def select_slanted(primitives: list[PlanarPrimitive], cloud: PointCloud,
                   cfg: SegmentationConfig, exclude: set[int]) -> list[int]:
    """Tilted planes reaching the ceiling band, kept as slanted ceilings.

    Candidates fail the horizontal test but stay below the wall angle; they
    qualify when their members reach the top (1 - slanted_band_frac) share
    of the scene height.
    """
    z = cloud.points[:, 2]
    datum, top = float(z.min()), float(z.max())
    band = datum + cfg.slanted_band_frac * (top - datum)
    out = []
    for i, p in enumerate(primitives):
        if i in exclude:
            continue
        tilt = _tilt_deg(p)
        if not (cfg.horizontal_angle_deg <= tilt < cfg.wall_angle_deg):
            continue
        if float(cloud.points[p.indices, 2].max()) >= band:
            out.append(i)
    return out


def extract_non_structured(cloud: PointCloud, primitives: list[PlanarPrimitive],
                           structured: list[int]) -> tuple[PointCloud, np.ndarray]:
    """Complement of the structured membership: every point index not claimed
    by a structured primitive, including members of non-structured primitives."""
    mask = np.ones(len(cloud), dtype=bool)
    for i in structured:
        mask[primitives[i].indices] = False
    idx = np.flatnonzero(mask)
    return cloud.select(idx), idx


def remove_outliers(cloud: PointCloud, k: int = 20, std_ratio: float = 2.0) -> PointCloud:
    """Statistical outlier removal on mean k-neighbor distance.

    Points whose mean distance to their k nearest neighbors exceeds the
    population mean by more than std_ratio standard deviations are dropped.
    """
    if len(cloud) <= k:
        raise ValueError(f"outlier removal needs more than k={k} points, got {len(cloud)}")
    tree = cKDTree(cloud.points)
    dist, _ = tree.query(cloud.points, k=k + 1, workers=-1)
    mean_d = dist[:, 1:].mean(axis=1)
    keep = mean_d <= mean_d.mean() + std_ratio * mean_d.std()
    return cloud.select(np.flatnonzero(keep))


def segment_scene(cloud: PointCloud, primitives: list[PlanarPrimitive],
                  cfg: SegmentationConfig | None = None) -> SceneSegmentation:
    """Full structural partition of a detected-primitive scene."""
    cfg = cfg or SegmentationConfig()
    horiz = horizontal_indices(primitives, cfg)
    ceiling, floor = select_ceiling_floor(primitives, horiz, cloud, cfg)
    walls = select_walls(primitives, cloud, cfg)
    exclude = set(horiz) | set(walls)
    slanted = select_slanted(primitives, cloud, cfg, exclude)
    structured = ceiling + floor + walls + slanted
    non_structured, ns_idx = extract_non_structured(cloud, primitives, structured)
    logger.info("segmentation: %d ceiling, %d floor, %d wall, %d slanted, %d loose points",
                len(ceiling), len(floor), len(walls), len(slanted), len(ns_idx))
    return SceneSegmentation(
        ceiling=[primitives[i] for i in ceiling],
        floor=[primitives[i] for i in floor],
        walls=[primitives[i] for i in walls],
        slanted=[primitives[i] for i in slanted],
        non_structured=non_structured,
        non_structured_indices=ns_idx,
        params=cfg,
    )
