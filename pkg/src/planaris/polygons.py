"""2D polygon helpers: areas, membership tests, line splits, triangulation.

Polygons are (K, 2) float arrays holding an ordered vertex loop without a
repeated closing vertex.
"""
from __future__ import annotations

import numpy as np

# Vertices closer than this to a cut line are treated as lying on it.
ON_LINE_EPS = 1e-7


def polygon_area(loop: np.ndarray) -> float:
    """Signed shoelace area; positive for counter-clockwise loops."""
    p = np.asarray(loop, dtype=np.float64)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_bounds(loop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(loop, dtype=np.float64)
    return p.min(axis=0), p.max(axis=0)


def points_in_polygon(points: np.ndarray, loop: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Boolean mask of points inside a simple polygon; boundary counts as inside.

    Crossing-number parity with an explicit on-segment test so that support
    counting never drops points that sit exactly on a cut line shared by two
    fragments.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    p = np.asarray(loop, dtype=np.float64)
    q = np.roll(p, -1, axis=0)
    px, py = pts[:, 0][:, None], pts[:, 1][:, None]
    x1, y1 = p[:, 0][None, :], p[:, 1][None, :]
    x2, y2 = q[:, 0][None, :], q[:, 1][None, :]

    straddles = (y1 > py) != (y2 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
    inside = (straddles & (px < x_cross)).sum(axis=1) % 2 == 1

    ex, ey = x2 - x1, y2 - y1
    seg_len2 = ex * ex + ey * ey
    cross = (px - x1) * ey - (py - y1) * ex
    dot = (px - x1) * ex + (py - y1) * ey
    seg_len = np.sqrt(np.maximum(seg_len2, 1e-300))
    on_edge = (np.abs(cross) <= eps * seg_len) & (dot >= -eps * seg_len) & (dot <= seg_len2 + eps * seg_len)
    return inside | on_edge.any(axis=1)


def split_polygon_by_line(
    loop: np.ndarray, line: tuple[float, float, float], eps: float = ON_LINE_EPS
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Split a polygon by the line a*x + b*y + c = 0.

    Returns (positive_side, negative_side); either may be None when the
    polygon does not reach that side.  A polygon lying entirely on the line
    comes back unchanged on the positive side.  Vertices within `eps` of the
    line are shared by both outputs, so the two pieces tile the input
    exactly.
    """
    p = np.asarray(loop, dtype=np.float64)
    a, b, c = line
    scale = float(np.hypot(a, b))
    if scale < 1e-12:
        raise ValueError("degenerate split line")
    d = (p[:, 0] * a + p[:, 1] * b + c) / scale
    side = np.zeros(len(p), dtype=np.int8)
    side[d > eps] = 1
    side[d < -eps] = -1

    if not (side == -1).any():
        return p, None
    if not (side == 1).any():
        return None, p

    pos: list[np.ndarray] = []
    neg: list[np.ndarray] = []
    n = len(p)
    for i in range(n):
        j = (i + 1) % n
        if side[i] >= 0:
            pos.append(p[i])
        if side[i] <= 0:
            neg.append(p[i])
        if side[i] * side[j] < 0:
            t = d[i] / (d[i] - d[j])
            q = p[i] + t * (p[j] - p[i])
            pos.append(q)
            neg.append(q)

    def _clean(vertices: list[np.ndarray]) -> np.ndarray | None:
        if len(vertices) < 3:
            return None
        arr = np.array(vertices)
        keep = np.linalg.norm(arr - np.roll(arr, 1, axis=0), axis=1) > 1e-12
        arr = arr[keep]
        if len(arr) < 3 or abs(polygon_area(arr)) < 1e-12:
            return None
        return arr

    return _clean(pos), _clean(neg)


def triangulate_polygon(loop: np.ndarray) -> np.ndarray:
    """Ear-clipping triangulation; returns (K-2, 3) indices into the loop.

    Handles simple polygons of either orientation, including the concave
    fragments a clipping sequence can leave behind.
    """
    p = np.asarray(loop, dtype=np.float64)
    n = len(p)
    if n < 3:
        raise ValueError("need at least 3 vertices to triangulate")
    orient = 1.0 if polygon_area(p) >= 0 else -1.0
    idx = list(range(n))
    tris: list[tuple[int, int, int]] = []

    def _is_ear(i0: int, i1: int, i2: int) -> bool:
        a, b, c = p[i0], p[i1], p[i2]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if orient * cross <= 1e-14:
            return False
        others = [k for k in idx if k not in (i0, i1, i2)]
        if not others:
            return True
        pts = p[others]
        # barycentric containment, strict interior only
        v0, v1 = c - a, b - a
        v2 = pts - a
        den = v0[0] * v1[1] - v1[0] * v0[1]
        if abs(den) < 1e-300:
            return True
        u = (v2[:, 0] * v1[1] - v1[0] * v2[:, 1]) / den
        w = (v0[0] * v2[:, 1] - v2[:, 0] * v0[1]) / den
        return not ((u > 1e-12) & (w > 1e-12) & (u + w < 1.0 - 1e-12)).any()

    guard = 0
    while len(idx) > 3 and guard < 4 * n * n:
        guard += 1
        clipped = False
        for k in range(len(idx)):
            i0, i1, i2 = idx[k - 1], idx[k], idx[(k + 1) % len(idx)]
            if _is_ear(i0, i1, i2):
                tris.append((i0, i1, i2))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            # numerically stuck (collinear runs); fall back to a fan
            break
    if len(idx) >= 3:
        for k in range(1, len(idx) - 1):
            tris.append((idx[0], idx[k], idx[k + 1]))
    return np.array(tris, dtype=np.int64)


def point_segment_distance_2d(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points (N, 2) to segment a-b."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    if denom < 1e-300:
        return np.linalg.norm(pts - a, axis=1)
    t = np.clip((pts - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(pts - (a + np.multiply.outer(t, ab)), axis=1)


def segment_segment_distance_2d(p1, p2, q1, q2) -> float:
    """Minimum distance between 2D segments p1-p2 and q1-q2."""
    p1, p2, q1, q2 = (np.asarray(v, dtype=np.float64) for v in (p1, p2, q1, q2))
    d1, d2 = p2 - p1, q2 - q1
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(denom) > 1e-12:
        r = q1 - p1
        t = (r[0] * d2[1] - r[1] * d2[0]) / denom
        s = (r[0] * d1[1] - r[1] * d1[0]) / denom
        if 0.0 <= t <= 1.0 and 0.0 <= s <= 1.0:
            return 0.0
    return float(
        min(
            point_segment_distance_2d(p1[None], q1, q2)[0],
            point_segment_distance_2d(p2[None], q1, q2)[0],
            point_segment_distance_2d(q1[None], p1, p2)[0],
            point_segment_distance_2d(q2[None], p1, p2)[0],
        )
    )


def segment_polygon_distance_2d(a, b, loop: np.ndarray) -> float:
    """Minimum distance between segment a-b and a polygon (boundary or interior)."""
    p = np.asarray(loop, dtype=np.float64)
    if points_in_polygon(np.array([a, b]), p).any():
        return 0.0
    best = np.inf
    for i in range(len(p)):
        best = min(best, segment_segment_distance_2d(a, b, p[i], p[(i + 1) % len(p)]))
        if best == 0.0:
            break
    return float(best)
