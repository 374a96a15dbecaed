"""Deterministic synthetic indoor scenes with per-point ground-truth labels."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Plane, PointCloud, normalize
from .planemesh import PlanarMesh

STRUCTURED_KINDS = {"wall", "ceiling", "floor", "roof", "slab"}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by its min and max corners."""

    x0: float
    y0: float
    z0: float
    x1: float
    y1: float
    z1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1 and self.z0 < self.z1):
            raise ValueError("box must have positive extent on every axis")

    @property
    def mins(self) -> np.ndarray:
        return np.array([self.x0, self.y0, self.z0])

    @property
    def maxs(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.z1])

    def footprint_area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def overlaps(self, other: "Box") -> bool:
        return bool(
            self.x0 < other.x1 and other.x0 < self.x1
            and self.y0 < other.y1 and other.y0 < self.y1
            and self.z0 < other.z1 and other.z0 < self.z1
        )


@dataclass
class SceneSpec:
    """Declarative scene description consumed by generate_scene."""

    rooms: list[Box]
    density: float = 1000.0
    sigma: float = 0.0
    seed: int = 0
    stories: int = 1
    roof_pitch_deg: float = 0.0
    corner_gap: float = 0.0
    objects: list[Box] = field(default_factory=list)
    stray_noise: int = 0

    def __post_init__(self):
        if not self.rooms:
            raise ValueError("scene needs at least one room")
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.sigma < 0 or self.stray_noise < 0 or self.corner_gap < 0:
            raise ValueError("sigma, stray_noise and corner_gap must be non-negative")
        if self.stories < 1:
            raise ValueError("stories must be at least 1")
        if self.roof_pitch_deg and (len(self.rooms) > 1 or self.stories > 1):
            raise ValueError("pitched roofs are only supported for single-room scenes")
        if not 0 <= self.roof_pitch_deg < 85:
            raise ValueError("roof pitch must be in [0, 85) degrees")
        for i, a in enumerate(self.rooms):
            for b in self.rooms[i + 1:]:
                if a.overlaps(b):
                    raise ValueError("rooms must not overlap")

    @classmethod
    def from_json(cls, path) -> "SceneSpec":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        rooms = [Box(*r) for r in raw.pop("rooms")]
        objects = [Box(*b) for b in raw.pop("objects", [])]
        return cls(rooms=rooms, objects=objects, **raw)

    def to_json(self, path) -> None:
        data = {
            "rooms": [[b.x0, b.y0, b.z0, b.x1, b.y1, b.z1] for b in self.rooms],
            "density": self.density,
            "sigma": self.sigma,
            "seed": self.seed,
            "stories": self.stories,
            "roof_pitch_deg": self.roof_pitch_deg,
            "corner_gap": self.corner_gap,
            "objects": [[b.x0, b.y0, b.z0, b.x1, b.y1, b.z1] for b in self.objects],
            "stray_noise": self.stray_noise,
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


@dataclass
class SurfaceTruth:
    """One ground-truth planar surface: a quad with an inward-facing plane."""

    name: str
    kind: str
    plane: Plane
    corners: np.ndarray
    area: float
    room: int

    def planar_mesh(self, source: int = -1) -> PlanarMesh:
        kind = {"roof": "slanted", "slab": "ceiling"}.get(self.kind, self.kind)
        if kind == "object":
            raise ValueError("object surfaces have no structural mesh")
        return PlanarMesh(corners=self.corners.copy(), plane=self.plane,
                          kind=kind, source=source)


@dataclass
class SyntheticScene:
    cloud: PointCloud
    labels: np.ndarray
    surfaces: list[SurfaceTruth]
    room_areas: list[float]
    spec: SceneSpec

    def surface_points(self, i: int) -> np.ndarray:
        return self.cloud.points[self.labels == i]

    def surfaces_of_kind(self, *kinds: str) -> list[int]:
        return [i for i, s in enumerate(self.surfaces) if s.kind in kinds]

    def planar_meshes(self, *kinds: str) -> list[PlanarMesh]:
        idx = self.surfaces_of_kind(*kinds) if kinds else range(len(self.surfaces))
        return [self.surfaces[i].planar_mesh(source=i) for i in idx]

    def structured_mask(self) -> np.ndarray:
        """Per-point ground truth: True where the point samples a structural surface."""
        kinds = np.array([s.kind in STRUCTURED_KINDS for s in self.surfaces])
        out = np.zeros(len(self.cloud), dtype=bool)
        ok = self.labels >= 0
        out[ok] = kinds[self.labels[ok]]
        return out

    def truth_json(self, path) -> None:
        data = {
            "room_areas": self.room_areas,
            "surfaces": [
                {"name": s.name, "kind": s.kind, "room": s.room, "area": s.area,
                 "plane": list(s.plane.as_array()), "corners": s.corners.tolist()}
                for s in self.surfaces
            ],
        }
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _quad_area(corners: np.ndarray) -> float:
    a1 = 0.5 * np.linalg.norm(np.cross(corners[1] - corners[0], corners[2] - corners[0]))
    a2 = 0.5 * np.linalg.norm(np.cross(corners[2] - corners[0], corners[3] - corners[0]))
    return float(a1 + a2)


def _sample_quad(corners: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    tris = np.array([[corners[0], corners[1], corners[2]],
                     [corners[0], corners[2], corners[3]]])
    areas = np.array([
        0.5 * np.linalg.norm(np.cross(t[1] - t[0], t[2] - t[0])) for t in tris
    ])
    n1 = int(round(n * areas[0] / areas.sum()))
    out = []
    for t, cnt in zip(tris, (n1, n - n1)):
        if cnt <= 0:
            continue
        r1, r2 = rng.random(cnt), rng.random(cnt)
        flip = r1 + r2 > 1.0
        r1[flip], r2[flip] = 1.0 - r1[flip], 1.0 - r2[flip]
        out.append(t[0] + np.multiply.outer(r1, t[1] - t[0]) + np.multiply.outer(r2, t[2] - t[0]))
    return np.vstack(out) if out else np.zeros((0, 3))


@dataclass
class _AxisWall:
    axis: int          # 0: plane x = offset, 1: plane y = offset
    offset: float
    span: tuple[float, float]
    zrange: tuple[float, float]
    sign: float        # inward normal direction along `axis`
    room: int


def _wall_quad(w: _AxisWall) -> np.ndarray:
    (a0, a1), (b0, b1) = w.span, w.zrange
    if w.axis == 0:
        return np.array([[w.offset, a0, b0], [w.offset, a1, b0],
                         [w.offset, a1, b1], [w.offset, a0, b1]])
    return np.array([[a0, w.offset, b0], [a1, w.offset, b0],
                     [a1, w.offset, b1], [a0, w.offset, b1]])


def _merge_axis_walls(walls: list[_AxisWall]) -> list[_AxisWall]:
    """Deduplicate coplanar overlapping wall rectangles.

    Coplanar walls are decomposed into elementary span intervals; an
    interval covered by two rooms is a shared partition and is emitted once.
    Intervals with identical coverage are merged back together.
    """
    groups: dict[tuple[int, float], list[_AxisWall]] = {}
    for w in walls:
        groups.setdefault((w.axis, round(w.offset, 9)), []).append(w)
    out: list[_AxisWall] = []
    for members in groups.values():
        if len(members) == 1:
            out.append(members[0])
            continue
        cuts = sorted({e for w in members for e in w.span})
        runs: list[tuple[float, float, tuple[int, ...]]] = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo < 1e-9:
                continue
            cover = tuple(sorted(
                k for k, w in enumerate(members)
                if w.span[0] <= lo + 1e-9 and hi - 1e-9 <= w.span[1]
            ))
            if not cover:
                continue
            if runs and runs[-1][2] == cover and abs(runs[-1][1] - lo) < 1e-9:
                runs[-1] = (runs[-1][0], hi, cover)
            else:
                runs.append((lo, hi, cover))
        for lo, hi, cover in runs:
            owner = members[cover[0]]
            zr = owner.zrange
            for k in cover[1:]:
                zr = (max(zr[0], members[k].zrange[0]), min(zr[1], members[k].zrange[1]))
            out.append(_AxisWall(axis=owner.axis, offset=owner.offset, span=(lo, hi),
                                 zrange=zr, sign=owner.sign, room=owner.room))
    return out


def _room_surfaces(spec: SceneSpec) -> list[SurfaceTruth]:
    rooms: list[tuple[Box, int]] = []
    for story in range(spec.stories):
        for ri, room in enumerate(spec.rooms):
            dz = story * (room.z1 - room.z0)
            rooms.append((Box(room.x0, room.y0, room.z0 + dz,
                              room.x1, room.y1, room.z1 + dz), ri))

    walls: list[_AxisWall] = []
    slabs: list[tuple[Box, int, str]] = []  # (box, room, floor|ceiling)
    for idx, (room, _) in enumerate(rooms):
        east_span = (room.y0, room.y1)
        if idx == 0 and spec.corner_gap > 0:
            east_span = (room.y0 + spec.corner_gap, room.y1)
        walls += [
            _AxisWall(0, room.x0, (room.y0, room.y1), (room.z0, room.z1), +1.0, idx),
            _AxisWall(0, room.x1, east_span, (room.z0, room.z1), -1.0, idx),
            _AxisWall(1, room.y0, (room.x0, room.x1), (room.z0, room.z1), +1.0, idx),
            _AxisWall(1, room.y1, (room.x0, room.x1), (room.z0, room.z1), -1.0, idx),
        ]
        slabs.append((room, idx, "floor"))
        if not spec.roof_pitch_deg:
            slabs.append((room, idx, "ceiling"))

    surfaces: list[SurfaceTruth] = []

    # stacked-story slabs coincide pairwise; emit those once as mid slabs
    used = [False] * len(slabs)
    for i, (box_i, room_i, kind_i) in enumerate(slabs):
        if used[i]:
            continue
        z_i = box_i.z0 if kind_i == "floor" else box_i.z1
        partner = None
        for j in range(i + 1, len(slabs)):
            box_j, _, kind_j = slabs[j]
            if used[j] or kind_j == kind_i:
                continue
            z_j = box_j.z0 if kind_j == "floor" else box_j.z1
            same_rect = (abs(z_i - z_j) < 1e-9
                         and abs(box_i.x0 - box_j.x0) < 1e-9 and abs(box_i.x1 - box_j.x1) < 1e-9
                         and abs(box_i.y0 - box_j.y0) < 1e-9 and abs(box_i.y1 - box_j.y1) < 1e-9)
            if same_rect:
                partner = j
                break
        corners = np.array([
            [box_i.x0, box_i.y0, z_i], [box_i.x1, box_i.y0, z_i],
            [box_i.x1, box_i.y1, z_i], [box_i.x0, box_i.y1, z_i],
        ])
        if partner is not None:
            used[i] = used[partner] = True
            kind, normal = "slab", np.array([0.0, 0.0, 1.0])
        else:
            used[i] = True
            kind = kind_i
            normal = np.array([0.0, 0.0, 1.0 if kind_i == "floor" else -1.0])
        surfaces.append(SurfaceTruth(
            name=f"{kind}_{room_i}_{z_i:g}", kind=kind,
            plane=Plane.from_normal_point(normal, corners[0]),
            corners=corners, area=_quad_area(corners), room=room_i,
        ))

    for w in _merge_axis_walls(walls):
        corners = _wall_quad(w)
        normal = np.zeros(3)
        normal[w.axis] = w.sign
        surfaces.append(SurfaceTruth(
            name=f"wall_{'xy'[w.axis]}{w.offset:g}_{w.span[0]:g}", kind="wall",
            plane=Plane.from_normal_point(normal, corners[0]),
            corners=corners, area=_quad_area(corners), room=w.room,
        ))

    if spec.roof_pitch_deg:
        surfaces = _apply_shed_roof(spec, surfaces)
    return surfaces


def _apply_shed_roof(spec: SceneSpec, surfaces: list[SurfaceTruth]) -> list[SurfaceTruth]:
    """Replace the flat ceiling by a single pitched roof plane rising along +y;
    side walls become trapezoids, the high wall grows to the roofline."""
    room = spec.rooms[0]
    rise = np.tan(np.radians(spec.roof_pitch_deg)) * (room.y1 - room.y0)
    z_high = room.z1 + rise
    out: list[SurfaceTruth] = []
    for s in surfaces:
        if s.kind == "ceiling":
            continue
        c = s.corners.copy()
        if s.kind == "wall":
            # raise every top corner to the roofline above its y position
            top = c[:, 2] > room.z1 - 1e-9
            c[top, 2] = room.z1 + np.tan(np.radians(spec.roof_pitch_deg)) * (c[top, 1] - room.y0)
            s = SurfaceTruth(name=s.name, kind="wall", plane=s.plane, corners=c,
                             area=_quad_area(c), room=s.room)
        out.append(s)
    roof = np.array([
        [room.x0, room.y0, room.z1], [room.x1, room.y0, room.z1],
        [room.x1, room.y1, z_high], [room.x0, room.y1, z_high],
    ])
    inward = normalize(np.array([0.0, rise / (room.y1 - room.y0), -1.0]))
    out.append(SurfaceTruth(
        name="roof", kind="roof",
        plane=Plane.from_normal_point(inward, roof[0]),
        corners=roof, area=_quad_area(roof), room=0,
    ))
    return out


def _object_surfaces(spec: SceneSpec) -> list[SurfaceTruth]:
    out = []
    for oi, box in enumerate(spec.objects):
        quads = [
            np.array([[box.x0, box.y0, box.z0], [box.x1, box.y0, box.z0],
                      [box.x1, box.y0, box.z1], [box.x0, box.y0, box.z1]]),
            np.array([[box.x0, box.y1, box.z0], [box.x1, box.y1, box.z0],
                      [box.x1, box.y1, box.z1], [box.x0, box.y1, box.z1]]),
            np.array([[box.x0, box.y0, box.z0], [box.x0, box.y1, box.z0],
                      [box.x0, box.y1, box.z1], [box.x0, box.y0, box.z1]]),
            np.array([[box.x1, box.y0, box.z0], [box.x1, box.y1, box.z0],
                      [box.x1, box.y1, box.z1], [box.x1, box.y0, box.z1]]),
            np.array([[box.x0, box.y0, box.z1], [box.x1, box.y0, box.z1],
                      [box.x1, box.y1, box.z1], [box.x0, box.y1, box.z1]]),
        ]
        normals = [(0, -1, 0), (0, 1, 0), (-1, 0, 0), (1, 0, 0), (0, 0, 1)]
        for qi, (quad, nrm) in enumerate(zip(quads, normals)):
            out.append(SurfaceTruth(
                name=f"object_{oi}_{qi}", kind="object",
                plane=Plane.from_normal_point(np.array(nrm, dtype=float), quad[0]),
                corners=quad, area=_quad_area(quad), room=-1,
            ))
    return out


def generate_scene(spec: SceneSpec) -> SyntheticScene:
    """Sample a labeled point cloud from the scene's ground-truth surfaces.

    Each surface gets round(area * density) points, uniform over the quad,
    with isotropic Gaussian noise of spec.sigma and exact inward normals.
    Shared partitions between touching rooms are emitted and sampled once.
    """
    rng = np.random.default_rng(spec.seed)
    surfaces = _room_surfaces(spec) + _object_surfaces(spec)

    pts_parts, nrm_parts, label_parts = [], [], []
    for si, surf in enumerate(surfaces):
        n = int(round(surf.area * spec.density))
        if n == 0:
            continue
        pts = _sample_quad(surf.corners, n, rng)
        if spec.sigma > 0:
            pts = pts + rng.normal(0.0, spec.sigma, pts.shape)
        pts_parts.append(pts)
        nrm_parts.append(np.tile(surf.plane.normal, (len(pts), 1)))
        label_parts.append(np.full(len(pts), si, dtype=np.int64))

    if spec.stray_noise:
        lo = np.min([s.corners.min(axis=0) for s in surfaces], axis=0)
        hi = np.max([s.corners.max(axis=0) for s in surfaces], axis=0)
        pts = lo + rng.random((spec.stray_noise, 3)) * (hi - lo)
        dirs = rng.normal(size=(spec.stray_noise, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts_parts.append(pts)
        nrm_parts.append(dirs)
        label_parts.append(np.full(spec.stray_noise, -1, dtype=np.int64))

    cloud = PointCloud(np.vstack(pts_parts), np.vstack(nrm_parts))
    labels = np.concatenate(label_parts)
    room_areas = [b.footprint_area() for b in spec.rooms] * spec.stories
    return SyntheticScene(cloud=cloud, labels=labels, surfaces=surfaces,
                          room_areas=room_areas, spec=spec)


# ---------------------------------------------------------------------------
# ready-made scene specs used by the CLI presets and the test suite

def single_room_spec(width: float = 4.0, depth: float = 3.0, height: float = 2.8,
                     density: float = 1000.0, sigma: float = 0.005, seed: int = 0) -> SceneSpec:
    return SceneSpec(rooms=[Box(0, 0, 0, width, depth, height)],
                     density=density, sigma=sigma, seed=seed)


def two_room_l_spec(density: float = 700.0, sigma: float = 0.003, seed: int = 0) -> SceneSpec:
    """Two rooms in an L: a 6x4 room and a 3x3 room joined across a shared
    partition, so the ceiling is one L-shaped plane."""
    return SceneSpec(
        rooms=[Box(0, 0, 0, 6, 4, 2.8), Box(0, 4, 0, 3, 7, 2.8)],
        density=density, sigma=sigma, seed=seed,
    )


def hallway_spec(gap: float = 0.8, corner_gap: float = 0.2, density: float = 600.0,
                 sigma: float = 0.0, seed: int = 0) -> SceneSpec:
    """Two rooms separated by an open hallway of width `gap`; room 0's east
    wall additionally starts `corner_gap` above the south wall.

    Room 1 sits 0.3 m off in y so no wall plane continues across the gap;
    room 0's north wall then ends a full `gap` short of room 1's west plane.
    """
    return SceneSpec(
        rooms=[Box(0, 0, 0, 4, 3, 2.8),
               Box(4 + gap, 0.3, 0, 8 + gap, 3.3, 2.8)],
        density=density, sigma=sigma, seed=seed, corner_gap=corner_gap,
    )


def shed_roof_spec(pitch_deg: float = 20.0, density: float = 800.0,
                   sigma: float = 0.004, seed: int = 0) -> SceneSpec:
    return SceneSpec(rooms=[Box(0, 0, 0, 4, 3, 2.5)], density=density,
                     sigma=sigma, seed=seed, roof_pitch_deg=pitch_deg)


def apartment_spec(target_points: int = 500_000, sigma: float = 0.005,
                   seed: int = 0) -> SceneSpec:
    """Five-room single-story apartment sized so the sampled cloud reaches
    roughly target_points."""
    rooms = [
        Box(0, 0, 0, 5, 4, 2.8),
        Box(5, 0, 0, 10, 4, 2.8),
        Box(0, 4, 0, 5, 8, 2.8),
        Box(5, 4, 0, 10, 8, 2.8),
        Box(0, 8, 0, 10, 12, 2.8),
    ]
    objects = [Box(1, 1, 0, 2, 1.8, 0.9), Box(6, 5, 0, 7.2, 6.2, 1.1)]
    probe = generate_scene(SceneSpec(rooms=rooms, objects=objects, density=100.0, seed=seed))
    area = sum(s.area for s in probe.surfaces)
    return SceneSpec(rooms=rooms, objects=objects, sigma=sigma, seed=seed,
                     density=target_points / area, stray_noise=500)


PRESETS = {
    "single-room": single_room_spec,
    "two-room-l": two_room_l_spec,
    "hallway": hallway_spec,
    "shed-roof": shed_roof_spec,
    "apartment": apartment_spec,
}


@dataclass
class ClipFixture:
    """Hand-built slab + walls + supporting cloud for clipping experiments."""

    slab: PlanarMesh
    walls: list[PlanarMesh]
    cloud: PointCloud
    main_area: float
    alcove_area: float
    noise_strip_area: float


def alcove_clip_fixture(seed: int = 0) -> ClipFixture:
    """A 4x3 ceiling with a 0.4 m deep alcove behind the north wall.

    The alcove ceiling (1.0 x 0.4 m) carries exactly 60 points; two off-room
    strips flanking it carry 40 planted noise points each, so clip-threshold
    sweeps can distinguish genuine from spurious fragments.
    """
    rng = np.random.default_rng(seed)
    z = 2.8
    main = rng.random((6000, 2)) * [4.0, 3.0]
    alcove = np.column_stack([1.5 + rng.random(60) * 1.0, 3.0 + rng.random(60) * 0.4])
    noise_w = np.column_stack([0.1 + rng.random(40) * 1.3, 3.05 + rng.random(40) * 0.3])
    noise_e = np.column_stack([2.6 + rng.random(40) * 1.3, 3.05 + rng.random(40) * 0.3])
    xy = np.vstack([main, alcove, noise_w, noise_e])
    pts = np.column_stack([xy, np.full(len(xy), z)])
    cloud = PointCloud(pts, np.tile([0.0, 0.0, -1.0], (len(pts), 1)))

    slab = PlanarMesh(
        corners=np.array([[0, 0, z], [4, 0, z], [4, 3.4, z], [0, 3.4, z]], dtype=float),
        plane=Plane(0, 0, -1, z), kind="ceiling", source=0,
    )

    def wall(x0, y0, x1, y1, normal) -> PlanarMesh:
        corners = np.array([[x0, y0, 0.0], [x1, y1, 0.0], [x1, y1, z], [x0, y0, z]])
        return PlanarMesh(corners=corners, kind="wall", source=-1,
                          plane=Plane.from_normal_point(np.array(normal, dtype=float),
                                                        corners[0]))

    walls = [
        wall(0, 0, 4, 0, (0, 1, 0)),        # south
        wall(0, 0, 0, 3, (1, 0, 0)),        # west
        wall(4, 0, 4, 3, (-1, 0, 0)),       # east
        wall(0, 3, 4, 3, (0, -1, 0)),       # north, with the alcove opening
        wall(1.5, 3, 1.5, 3.4, (1, 0, 0)),  # alcove west cheek
        wall(2.5, 3, 2.5, 3.4, (-1, 0, 0)),  # alcove east cheek
        wall(1.5, 3.4, 2.5, 3.4, (0, -1, 0)),  # alcove back
    ]
    return ClipFixture(slab=slab, walls=walls, cloud=cloud,
                       main_area=12.0, alcove_area=0.4, noise_strip_area=1.2)
