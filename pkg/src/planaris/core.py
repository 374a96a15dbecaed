"""Shared geometric types: planes, point clouds, triangle meshes, rotations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])

_DEGENERATE_AREA = 1e-12


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (3,):
        raise ValueError(f"expected 3-vector, got shape {a.shape}")
    return a


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v scaled to unit length; raises on (near-)zero input."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise ValueError("cannot normalize zero-length vector")
    return v / n


@dataclass(frozen=True)
class Plane:
    """Infinite plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c).

    Coefficients are renormalized on construction so that the signed
    distance of a point is simply a*x + b*y + c*z + d.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        n = float(np.sqrt(self.a * self.a + self.b * self.b + self.c * self.c))
        if n < 1e-12:
            raise ValueError("plane normal must be non-zero")
        if not np.isfinite([self.a, self.b, self.c, self.d]).all():
            raise ValueError("plane coefficients must be finite")
        object.__setattr__(self, "a", float(self.a) / n)
        object.__setattr__(self, "b", float(self.b) / n)
        object.__setattr__(self, "c", float(self.c) / n)
        object.__setattr__(self, "d", float(self.d) / n)

    @classmethod
    def from_normal_point(cls, normal, point) -> "Plane":
        n = normalize(_vec3(normal))
        p = _vec3(point)
        return cls(n[0], n[1], n[2], -float(n @ p))

    @classmethod
    def from_array(cls, arr) -> "Plane":
        a = np.asarray(arr, dtype=np.float64).reshape(4)
        return cls(a[0], a[1], a[2], a[3])

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def signed_distance(self, points) -> np.ndarray | float:
        """Signed distance of one point (3,) or many points (N, 3)."""
        p = np.asarray(points, dtype=np.float64)
        out = p @ self.normal + self.d
        return float(out) if p.ndim == 1 else out

    def flipped(self) -> "Plane":
        return Plane(-self.a, -self.b, -self.c, -self.d)

    def project(self, points) -> np.ndarray:
        """Orthogonal projection of one or many points onto the plane."""
        p = np.asarray(points, dtype=np.float64)
        return p - np.multiply.outer(p @ self.normal + self.d, self.normal)


def plane_point_distance(point, plane: Plane) -> float:
    """Signed point-plane distance; sign follows the plane normal."""
    return float(plane.signed_distance(_vec3(point)))


@dataclass
class PointCloud:
    """Point set with optional per-point unit normals, both float64 (N, 3)."""

    points: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must be (N, 3), got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise ValueError("points contain NaN or infinite coordinates")
        if self.normals is not None:
            self.normals = np.ascontiguousarray(self.normals, dtype=np.float64)
            if self.normals.shape != self.points.shape:
                raise ValueError("normals must match points shape")
            norms = np.linalg.norm(self.normals, axis=1)
            if not np.isfinite(norms).all() or (norms < 1e-12).any():
                raise ValueError("normals must be finite and non-zero")
            self.normals = self.normals / norms[:, None]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def select(self, indices) -> "PointCloud":
        idx = np.asarray(indices)
        normals = self.normals[idx] if self.normals is not None else None
        return PointCloud(self.points[idx].copy(), None if normals is None else normals.copy())


@dataclass
class TriangleMesh:
    """Indexed triangle mesh. Faces are (F, 3) vertex indices."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.isfinite(self.vertices).all():
            raise ValueError("mesh vertices contain NaN or infinite coordinates")
        if len(self.faces):
            if self.faces.min() < 0 or self.faces.max() >= len(self.vertices):
                raise ValueError("face indices out of range")
            if (self.face_areas() <= _DEGENERATE_AREA).any():
                raise ValueError("mesh contains degenerate (zero-area) faces")

    def __len__(self) -> int:
        return self.faces.shape[0]

    def triangles(self) -> np.ndarray:
        """Triangle corner coordinates, shape (F, 3, 3)."""
        return self.vertices[self.faces]

    def face_normals(self) -> np.ndarray:
        t = self.triangles()
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        return n / np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)

    def face_areas(self) -> np.ndarray:
        t = self.triangles()
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)

    def area(self) -> float:
        return float(self.face_areas().sum()) if len(self.faces) else 0.0

    @classmethod
    def concatenate(cls, meshes) -> "TriangleMesh":
        meshes = list(meshes)
        if not meshes:
            return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
        verts, faces, offset = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            faces.append(m.faces + offset)
            offset += len(m.vertices)
        return cls(np.vstack(verts), np.vstack(faces))


def rotation_about_axis(axis, angle: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation of `angle` radians about `axis`."""
    u = normalize(_vec3(axis))
    c, s = np.cos(angle), np.sin(angle)
    skew = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return c * np.eye(3) + s * skew + (1.0 - c) * np.outer(u, u)


def rotation_about_z(angle: float) -> np.ndarray:
    return rotation_about_axis(Z_AXIS, angle)


def rotation_between(src, dst) -> np.ndarray:
    """Minimal rotation mapping unit vector src onto unit vector dst.

    The antiparallel case has no unique minimal rotation; there the axis is
    chosen as normalize(src x e) where e is the coordinate axis least aligned
    with src, which keeps the result deterministic.
    """
    s = normalize(_vec3(src))
    t = normalize(_vec3(dst))
    c = float(s @ t)
    if c > 1.0 - 1e-12:
        return np.eye(3)
    if c < -1.0 + 1e-12:
        e = np.eye(3)[int(np.argmin(np.abs(s)))]
        axis = normalize(np.cross(s, e))
        return rotation_about_axis(axis, np.pi)
    axis = np.cross(s, t)
    angle = np.arctan2(np.linalg.norm(axis), c)
    return rotation_about_axis(axis, angle)


def is_rotation(R: np.ndarray, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        return False
    return (np.abs(R.T @ R - np.eye(3)).max() < tol) and abs(np.linalg.det(R) - 1.0) < tol


def angle_between(u, v, degrees: bool = True) -> float:
    """Unsigned angle between two vectors, in [0, 180]."""
    a = normalize(_vec3(u))
    b = normalize(_vec3(v))
    ang = np.arccos(np.clip(a @ b, -1.0, 1.0))
    return float(np.degrees(ang)) if degrees else float(ang)


def axis_angle_between(u, v) -> float:
    """Sign-agnostic angle (degrees, in [0, 90]) between two directions."""
    a = normalize(_vec3(u))
    b = normalize(_vec3(v))
    return float(np.degrees(np.arccos(np.clip(abs(a @ b), 0.0, 1.0))))


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane frame (u, v) with u x v = normal.

    For walls and tilted planes u is horizontal (z x n) and v points along
    the steepest in-plane ascent, so wall rectangles keep vertical side
    edges.  Near-horizontal normals fall back to projecting the x axis.
    """
    n = normalize(_vec3(normal))
    if abs(n[2]) < 0.9:
        u = normalize(np.cross(Z_AXIS, n))
    else:
        u = normalize(X_AXIS - n * n[0])
    v = np.cross(n, u)
    return u, v
