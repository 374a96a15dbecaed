"""Planar primitive extraction: normal estimation and sequential RANSAC."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import Plane, PointCloud

logger = logging.getLogger(__name__)


@dataclass
class PlanarPrimitive:
    """A detected plane with its member point indices.

    `mean_normal` is the normalized mean of the members' point normals and
    fixes the plane's orientation (the plane normal agrees with it in sign).
    """

    plane: Plane
    indices: np.ndarray
    mean_normal: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        self.mean_normal = np.asarray(self.mean_normal, dtype=np.float64).reshape(3)

    @property
    def num_points(self) -> int:
        return int(self.indices.size)

    def points(self, cloud: PointCloud) -> np.ndarray:
        return cloud.points[self.indices]


@dataclass
class RansacConfig:
    """Detection parameters.

    min_support of None resolves to 0.5% of the cloud (never below 3).
    score_subsample caps how many points score each candidate plane; the
    winning candidate is always re-evaluated against the full cloud.
    """

    epsilon: float = 0.02
    normal_threshold_deg: float = 25.0
    min_support: int | None = None
    max_planes: int = 64
    candidates: int = 1000
    score_subsample: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.normal_threshold_deg <= 90:
            raise ValueError("normal_threshold_deg must be in (0, 90]")
        if self.min_support is not None and self.min_support < 3:
            raise ValueError("min_support must be at least 3")
        if self.max_planes < 1 or self.candidates < 1:
            raise ValueError("max_planes and candidates must be positive")

    def resolve_min_support(self, num_points: int) -> int:
        if self.min_support is not None:
            return self.min_support
        return max(3, int(round(0.005 * num_points)))


def estimate_normals(cloud: PointCloud, k: int = 16, with_confidence: bool = False):
    """Per-point normals from k-nearest-neighbor covariance eigenvectors.

    Normals are oriented away from the cloud centroid so that one consistent
    sign convention holds scene-wide.  With `with_confidence` a float array is
    returned alongside; it is 0 where the neighborhood was degenerate
    (rank < 2) and 1 elsewhere.
    """
    if len(cloud) < 3:
        raise ValueError("need at least 3 points to estimate normals")
    k = min(k, len(cloud))
    pts = cloud.points
    tree = cKDTree(pts)
    _, nbr = tree.query(pts, k=k, workers=-1)
    neigh = pts[nbr]                      # (N, k, 3)
    centered = neigh - neigh.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    eigvals, eigvecs = np.linalg.eigh(cov)
    normals = eigvecs[:, :, 0]

    centroid = pts.mean(axis=0)
    flip = np.einsum("ij,ij->i", normals, pts - centroid) < 0
    normals[flip] = -normals[flip]

    scale = np.maximum(eigvals[:, 2], 1e-300)
    confidence = (eigvals[:, 1] / scale > 1e-9).astype(np.float64)
    if (confidence == 0).any():
        logger.warning("%d degenerate normal neighborhoods", int((confidence == 0).sum()))

    out = PointCloud(pts.copy(), normals)
    return (out, confidence) if with_confidence else out


def refit_plane(points: np.ndarray, orient=None) -> Plane:
    """Total-least-squares plane through a point set.

    The fitted plane passes through the centroid; its normal is the smallest
    singular direction of the centered coordinates.  Collinear or coincident
    input raises ValueError.  `orient` optionally fixes the normal sign.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 3:
        raise ValueError("refit_plane needs an (N>=3, 3) point array")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(s[0], 1.0)
    if s[1] <= 1e-10 * scale:
        raise ValueError("degenerate point set: points are collinear or coincident")
    normal = vt[2]
    if orient is not None and float(normal @ np.asarray(orient, dtype=np.float64)) < 0:
        normal = -normal
    return Plane.from_normal_point(normal, centroid)


def inlier_mask(points: np.ndarray, normals: np.ndarray, plane: Plane,
                epsilon: float, normal_threshold_deg: float) -> np.ndarray:
    """Distance and (sign-agnostic) normal-angle membership test."""
    dist_ok = np.abs(plane.signed_distance(points)) <= epsilon
    cos_thr = np.cos(np.radians(normal_threshold_deg))
    angle_ok = np.abs(normals @ plane.normal) >= cos_thr
    return dist_ok & angle_ok


def _plane_candidates(pts: np.ndarray, rng: np.random.Generator,
                      pool: np.ndarray, count: int):
    """Sample candidate planes from random point triples; returns unit
    normals (C, 3) and offsets (C,)."""
    tri = rng.choice(pool, size=(count, 3))
    p0, p1, p2 = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    length = np.linalg.norm(n, axis=1)
    ok = length > 1e-12
    n[ok] /= length[ok, None]
    n[~ok] = 0.0
    d = -np.einsum("ij,ij->i", n, p0)
    return n, d


def detect_planes(cloud: PointCloud, config: RansacConfig | None = None) -> list[PlanarPrimitive]:
    """Greedy sequential RANSAC plane extraction.

    Each round scores `candidates` random triple planes (on a capped
    subsample when the cloud is large), keeps the best-supported one,
    refines it with two refit/reselect passes and removes its inliers.
    Extraction stops when the best candidate's support drops below
    min_support.  Returned primitives have disjoint member sets and every
    member satisfies both the epsilon and normal-angle constraints against
    the returned (refit) plane.
    """
    cfg = config or RansacConfig()
    if not cloud.has_normals:
        raise ValueError("detect_planes requires per-point normals")
    pts, nrm = cloud.points, cloud.normals
    rng = np.random.default_rng(cfg.seed)
    min_support = cfg.resolve_min_support(len(cloud))
    cos_thr = np.cos(np.radians(cfg.normal_threshold_deg))

    remaining = np.arange(len(cloud))
    primitives: list[PlanarPrimitive] = []
    while remaining.size >= 3 and len(primitives) < cfg.max_planes:
        if remaining.size > cfg.score_subsample:
            score_idx = rng.choice(remaining, size=cfg.score_subsample, replace=False)
        else:
            score_idx = remaining
        S, Sn = pts[score_idx], nrm[score_idx]

        cand_n, cand_d = _plane_candidates(pts, rng, remaining, cfg.candidates)
        best_count, best_ci = -1, -1
        for lo in range(0, cfg.candidates, 128):
            hi = min(lo + 128, cfg.candidates)
            dist = S @ cand_n[lo:hi].T + cand_d[lo:hi]
            ang = np.abs(Sn @ cand_n[lo:hi].T) >= cos_thr
            counts = ((np.abs(dist) <= cfg.epsilon) & ang).sum(axis=0)
            ci = int(np.argmax(counts))
            if counts[ci] > best_count:
                best_count, best_ci = int(counts[ci]), lo + ci
        if best_count < 3 or np.linalg.norm(cand_n[best_ci]) < 0.5:
            break

        plane = Plane(cand_n[best_ci, 0], cand_n[best_ci, 1], cand_n[best_ci, 2],
                      cand_d[best_ci])
        rp, rn = pts[remaining], nrm[remaining]
        mask = np.zeros(remaining.size, dtype=bool)
        for _ in range(2):
            mask = inlier_mask(rp, rn, plane, cfg.epsilon, cfg.normal_threshold_deg)
            if mask.sum() < 3:
                break
            try:
                plane = refit_plane(rp[mask])
            except ValueError:
                break
        # final membership against the refit plane keeps the contract exact
        mask = inlier_mask(rp, rn, plane, cfg.epsilon, cfg.normal_threshold_deg)
        support = int(mask.sum())
        if support < min_support:
            break

        member_idx = remaining[mask]
        mean_n = nrm[member_idx].mean(axis=0)
        length = np.linalg.norm(mean_n)
        mean_n = plane.normal if length < 1e-12 else mean_n / length
        if float(plane.normal @ mean_n) < 0:
            plane = plane.flipped()
        primitives.append(PlanarPrimitive(plane=plane, indices=member_idx, mean_normal=mean_n))
        remaining = remaining[~mask]
        logger.debug("plane %d: support %d, %d points left",
                     len(primitives) - 1, support, remaining.size)
    return primitives


def absorb_unassigned(cloud: PointCloud, primitives: list[PlanarPrimitive],
                      epsilon: float) -> list[PlanarPrimitive]:
    """Attach leftover points to the nearest detected plane within epsilon.

    Plane membership near creases is ambiguous: points whose estimated
    normals blend two surfaces fail the normal-angle test during detection
    even though they clearly belong to one of the planes.  This pass assigns
    each unassigned point to its closest plane by unsigned distance, keeping
    the distance invariant intact while leaving plane parameters untouched.
    """
    if not primitives:
        return primitives
    assigned = np.zeros(len(cloud), dtype=bool)
    for prim in primitives:
        assigned[prim.indices] = True
    free = np.flatnonzero(~assigned)
    if free.size == 0:
        return primitives
    dists = np.column_stack([np.abs(p.plane.signed_distance(cloud.points[free]))
                             for p in primitives])
    nearest = np.argmin(dists, axis=1)
    close = dists[np.arange(free.size), nearest] <= epsilon
    out = []
    for pi, prim in enumerate(primitives):
        extra = free[close & (nearest == pi)]
        if extra.size:
            idx = np.sort(np.concatenate([prim.indices, extra]))
            out.append(PlanarPrimitive(plane=prim.plane, indices=idx,
                                       mean_normal=prim.mean_normal))
        else:
            out.append(prim)
    return out
