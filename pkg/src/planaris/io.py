"""Readers and writers for PLY / OBJ / VG files plus mesh surface sampling."""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .core import Plane, PointCloud, TriangleMesh
from .ransac import PlanarPrimitive, refit_plane

logger = logging.getLogger(__name__)


class PlyParseError(ValueError):
    pass


class VgParseError(ValueError):
    pass


_PLY_DTYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class _PlyElement:
    name: str
    count: int
    # ("scalar", name, dtype) or ("list", name, count_dtype, item_dtype)
    properties: list[tuple]

    @property
    def has_list(self) -> bool:
        return any(p[0] == "list" for p in self.properties)


def _parse_ply_header(data: bytes, path) -> tuple[str, list[_PlyElement], int]:
    if not data.startswith(b"ply"):
        raise PlyParseError(f"{path}: not a PLY file (missing magic)")
    tail = data.find(b"end_header")
    if tail < 0:
        raise PlyParseError(f"{path}: missing end_header")
    body_offset = data.find(b"\n", tail) + 1
    try:
        header = data[:tail].decode("ascii")
    except UnicodeDecodeError as exc:
        raise PlyParseError(f"{path}: non-ascii header: {exc}") from None

    fmt = None
    elements: list[_PlyElement] = []
    for lineno, raw in enumerate(header.splitlines(), start=1):
        tokens = raw.strip().split()
        if not tokens or tokens[0] in ("ply", "comment", "obj_info"):
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] not in ("ascii", "binary_little_endian"):
                raise PlyParseError(f"{path}:{lineno}: unsupported format {raw!r}")
            fmt = tokens[1]
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"{path}:{lineno}: malformed element line {raw!r}")
            try:
                elements.append(_PlyElement(tokens[1], int(tokens[2]), []))
            except ValueError:
                raise PlyParseError(f"{path}:{lineno}: bad element count {raw!r}") from None
        elif tokens[0] == "property":
            if not elements:
                raise PlyParseError(f"{path}:{lineno}: property before any element")
            if tokens[1] == "list":
                if len(tokens) != 5 or tokens[2] not in _PLY_DTYPES or tokens[3] not in _PLY_DTYPES:
                    raise PlyParseError(f"{path}:{lineno}: malformed list property {raw!r}")
                elements[-1].properties.append(
                    ("list", tokens[4], _PLY_DTYPES[tokens[2]], _PLY_DTYPES[tokens[3]])
                )
            else:
                if len(tokens) != 3 or tokens[1] not in _PLY_DTYPES:
                    raise PlyParseError(f"{path}:{lineno}: malformed property {raw!r}")
                elements[-1].properties.append(("scalar", tokens[2], _PLY_DTYPES[tokens[1]]))
        else:
            raise PlyParseError(f"{path}:{lineno}: unrecognized header line {raw!r}")
    if fmt is None:
        raise PlyParseError(f"{path}: header missing format line")
    return fmt, elements, body_offset


def _element_dtype(elem: _PlyElement) -> np.dtype:
    return np.dtype([(name, "<" + code) for _, name, code in elem.properties])


def _read_ply_elements(data: bytes, path, wanted: set[str]) -> dict[str, object]:
    """Read requested elements; scalar elements come back as structured arrays,
    list elements as a list of per-row index arrays."""
    fmt, elements, offset = _parse_ply_header(data, path)
    out: dict[str, object] = {}
    if fmt == "ascii":
        lines = data[offset:].split(b"\n")
        cursor = 0
        for elem in elements:
            if cursor + elem.count > len(lines):
                raise PlyParseError(f"{path}: truncated ascii body in element {elem.name}")
            if elem.name in wanted:
                rows = lines[cursor : cursor + elem.count]
                if elem.has_list:
                    parsed = []
                    for i, row in enumerate(rows):
                        toks = row.split()
                        if not toks:
                            raise PlyParseError(f"{path}: empty row {i} in element {elem.name}")
                        try:
                            n = int(toks[0])
                            parsed.append(np.array(toks[1 : 1 + n], dtype=np.int64))
                        except (ValueError, IndexError):
                            raise PlyParseError(
                                f"{path}: bad list row {i} in element {elem.name}"
                            ) from None
                    out[elem.name] = parsed
                else:
                    try:
                        arr = np.loadtxt([r for r in rows], dtype=np.float64, ndmin=2)
                    except ValueError as exc:
                        raise PlyParseError(f"{path}: bad ascii data in {elem.name}: {exc}") from None
                    if arr.shape != (elem.count, len(elem.properties)):
                        raise PlyParseError(
                            f"{path}: element {elem.name} expected shape "
                            f"({elem.count}, {len(elem.properties)}), got {arr.shape}"
                        )
                    out[elem.name] = (arr, [p[1] for p in elem.properties])
            cursor += elem.count
            if wanted.issubset(out.keys()):
                break
    else:
        pos = offset
        for elem in elements:
            if elem.has_list:
                rows = []
                for _ in range(elem.count):
                    row_indices = None
                    for prop in elem.properties:
                        if prop[0] == "list":
                            cdt = np.dtype("<" + prop[2])
                            if pos + cdt.itemsize > len(data):
                                raise PlyParseError(f"{path}: truncated element {elem.name}")
                            n = int(np.frombuffer(data, cdt, 1, pos)[0])
                            pos += cdt.itemsize
                            idt = np.dtype("<" + prop[3])
                            row = np.frombuffer(data, idt, n, pos).astype(np.int64)
                            pos += n * idt.itemsize
                            if prop[1] in ("vertex_indices", "vertex_index"):
                                row_indices = row
                        else:
                            pos += np.dtype("<" + prop[2]).itemsize
                    rows.append(row_indices if row_indices is not None else np.zeros(0, np.int64))
                if elem.name in wanted:
                    out[elem.name] = rows
            else:
                dt = _element_dtype(elem)
                nbytes = dt.itemsize * elem.count
                if pos + nbytes > len(data):
                    raise PlyParseError(f"{path}: truncated element {elem.name}")
                if elem.name in wanted:
                    raw = np.frombuffer(data, dt, elem.count, pos)
                    cols = np.column_stack([raw[p[1]].astype(np.float64) for p in elem.properties])
                    out[elem.name] = (cols, [p[1] for p in elem.properties])
                pos += nbytes
            if wanted.issubset(out.keys()):
                break
    missing = wanted - out.keys()
    if missing:
        raise PlyParseError(f"{path}: missing element(s) {sorted(missing)}")
    return out


def load_point_cloud(path) -> PointCloud:
    """Load a PLY point cloud; picks up nx/ny/nz normals when present."""
    path = Path(path)
    data = path.read_bytes()
    arr, names = _read_ply_elements(data, path, {"vertex"})["vertex"]
    for req in ("x", "y", "z"):
        if req not in names:
            raise PlyParseError(f"{path}: vertex element lacks property {req!r}")
    cols = {n: arr[:, i] for i, n in enumerate(names)}
    points = np.column_stack([cols["x"], cols["y"], cols["z"]])
    if not np.isfinite(points).all():
        raise ValueError(f"{path}: point coordinates contain NaN/inf")
    normals = None
    if all(k in cols for k in ("nx", "ny", "nz")):
        normals = np.column_stack([cols["nx"], cols["ny"], cols["nz"]])
    return PointCloud(points, normals)


def _format_float_rows(arr: np.ndarray) -> list[str]:
    return [" ".join(f"{v:.9g}" for v in row) for row in arr]


def save_point_cloud(cloud: PointCloud, path, binary: bool = False) -> None:
    path = Path(path)
    props = ["x", "y", "z"] + (["nx", "ny", "nz"] if cloud.has_normals else [])
    cols = cloud.points if not cloud.has_normals else np.hstack([cloud.points, cloud.normals])
    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {len(cloud)}"]
    header += [f"property double {p}" for p in props]
    header.append("end_header")
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(np.ascontiguousarray(cols, dtype="<f8").tobytes())
        else:
            fh.write(("\n".join(_format_float_rows(cols)) + "\n").encode("ascii"))


def _load_ply_mesh(path) -> TriangleMesh:
    data = Path(path).read_bytes()
    got = _read_ply_elements(data, path, {"vertex", "face"})
    varr, names = got["vertex"]
    idx = [names.index(k) for k in ("x", "y", "z")]
    vertices = varr[:, idx]
    faces = []
    for row in got["face"]:
        if len(row) < 3:
            raise PlyParseError(f"{path}: face with fewer than 3 vertices")
        for k in range(1, len(row) - 1):
            faces.append((row[0], row[k], row[k + 1]))
    return TriangleMesh(vertices, np.array(faces, dtype=np.int64).reshape(-1, 3))


def _save_ply_mesh(mesh: TriangleMesh, path, binary: bool = False) -> None:
    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {len(mesh.vertices)}",
              "property double x", "property double y", "property double z",
              f"element face {len(mesh.faces)}",
              "property list uchar int vertex_indices", "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
            for row in mesh.faces:
                fh.write(np.uint8(3).tobytes())
                fh.write(row.astype("<i4").tobytes())
        else:
            rows = _format_float_rows(mesh.vertices)
            rows += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
            fh.write(("\n".join(rows) + "\n").encode("ascii"))


def _load_obj(path) -> TriangleMesh:
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            if tokens[0] == "v":
                if len(tokens) < 4:
                    raise ValueError(f"{path}:{lineno}: malformed vertex line")
                vertices.append([float(t) for t in tokens[1:4]])
            elif tokens[0] == "f":
                idx = []
                for tok in tokens[1:]:
                    i = int(tok.split("/")[0])
                    if i < 0:
                        raise ValueError(f"{path}:{lineno}: negative OBJ indices unsupported")
                    idx.append(i - 1)
                if len(idx) < 3:
                    raise ValueError(f"{path}:{lineno}: face with fewer than 3 vertices")
                for k in range(1, len(idx) - 1):
                    faces.append((idx[0], idx[k], idx[k + 1]))
    return TriangleMesh(np.array(vertices, dtype=np.float64).reshape(-1, 3),
                        np.array(faces, dtype=np.int64).reshape(-1, 3))


def _save_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "wb") as fh:
        for row in mesh.vertices:
            fh.write(f"v {row[0]:.9g} {row[1]:.9g} {row[2]:.9g}\n".encode("ascii"))
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n".encode("ascii"))


def load_mesh(path) -> TriangleMesh:
    """Load a triangle mesh; format chosen by extension (.ply or .obj)."""
    path = Path(path)
    if path.suffix.lower() == ".obj":
        return _load_obj(path)
    if path.suffix.lower() == ".ply":
        return _load_ply_mesh(path)
    raise ValueError(f"unsupported mesh format: {path.suffix!r}")


def save_mesh(mesh: TriangleMesh, path, binary: bool = False) -> None:
    path = Path(path)
    if path.suffix.lower() == ".obj":
        _save_obj(mesh, path)
    elif path.suffix.lower() == ".ply":
        _save_ply_mesh(mesh, path, binary=binary)
    else:
        raise ValueError(f"unsupported mesh format: {path.suffix!r}")


def load_vg(path) -> tuple[PointCloud, list[PlanarPrimitive]]:
    """Load a vertex-group file: a point cloud plus indexed planar groups.

    The format is line-oriented ``key: value`` ASCII.  Recognized keys are
    num_points, num_colors, num_normals, num_groups, group_type,
    num_group_parameters, group_parameters, group_label, group_color,
    group_num_point and num_children; anything else is skipped with a
    warning.  Groups without plane parameters get a least-squares refit.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    pos = 0

    def _next_kv() -> tuple[str, str] | None:
        nonlocal pos
        while pos < len(lines):
            line = lines[pos].strip()
            pos += 1
            if not line:
                continue
            if ":" not in line:
                raise VgParseError(f"{path}:{pos}: expected 'key: value', got {line!r}")
            key, _, value = line.partition(":")
            return key.strip(), value.strip()
        return None

    def _read_floats(n: int) -> np.ndarray:
        nonlocal pos
        vals: list[float] = []
        while len(vals) < n:
            if pos >= len(lines):
                raise VgParseError(f"{path}: truncated file, expected {n} values")
            try:
                vals.extend(float(t) for t in lines[pos].split())
            except ValueError:
                raise VgParseError(f"{path}:{pos + 1}: bad numeric data") from None
            pos += 1
        if len(vals) != n:
            raise VgParseError(f"{path}:{pos}: expected {n} values, got {len(vals)}")
        return np.array(vals, dtype=np.float64)

    points = normals = None
    groups: list[dict] = []
    num_groups = 0
    while True:
        kv = _next_kv()
        if kv is None:
            break
        key, value = kv
        if key == "num_points":
            points = _read_floats(3 * int(value)).reshape(-1, 3)
        elif key == "num_colors":
            _read_floats(3 * int(value))
        elif key == "num_normals":
            normals = _read_floats(3 * int(value)).reshape(-1, 3)
        elif key == "num_groups":
            num_groups = int(value)
            for gi in range(num_groups):
                groups.append(_read_group(path, gi, _next_kv, _read_floats))
        else:
            logger.warning("%s: skipping unknown key %r", path, key)
    if points is None:
        raise VgParseError(f"{path}: missing num_points block")
    cloud = PointCloud(points, normals)

    seen = np.zeros(len(cloud), dtype=bool)
    primitives = []
    for gi, g in enumerate(groups):
        idx = g["indices"]
        if idx.size and (idx.min() < 0 or idx.max() >= len(cloud)):
            raise VgParseError(f"{path}: group {gi} has point indices out of range")
        if seen[idx].any():
            raise VgParseError(f"{path}: group {gi} overlaps a previous group")
        seen[idx] = True
        if g["plane"] is not None:
            plane = Plane.from_array(g["plane"])
        else:
            plane = refit_plane(cloud.points[idx])
        if cloud.has_normals and idx.size:
            mean_n = cloud.normals[idx].mean(axis=0)
        else:
            mean_n = plane.normal
        nl = np.linalg.norm(mean_n)
        mean_n = plane.normal if nl < 1e-12 else mean_n / nl
        if float(plane.normal @ mean_n) < 0:
            plane = plane.flipped()
        primitives.append(PlanarPrimitive(plane=plane, indices=idx, mean_normal=mean_n))
    return cloud, primitives


def _read_group(path, gi: int, next_kv, read_floats) -> dict:
    plane = None
    n_params = 4
    indices = None
    while indices is None:
        kv = next_kv()
        if kv is None:
            raise VgParseError(f"{path}: truncated group {gi}")
        key, value = kv
        if key == "group_type":
            pass
        elif key == "num_group_parameters":
            n_params = int(value)
        elif key == "group_parameters":
            vals = [float(t) for t in value.split()]
            if n_params and len(vals) != n_params:
                raise VgParseError(f"{path}: group {gi} expected {n_params} parameters")
            if len(vals) == 4:
                plane = np.array(vals)
        elif key in ("group_label", "group_color"):
            pass
        elif key == "group_num_point":
            indices = read_floats(int(value)).astype(np.int64)
        else:
            logger.warning("%s: group %d: skipping unknown key %r", path, gi, key)
    kv = next_kv()
    if kv is not None:
        key, value = kv
        if key != "num_children":
            raise VgParseError(f"{path}: group {gi}: expected num_children, got {key!r}")
        if int(value) != 0:
            raise VgParseError(f"{path}: group {gi}: child groups unsupported")
    return {"plane": plane, "indices": indices}


def save_vg(path, cloud: PointCloud, primitives: list[PlanarPrimitive]) -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        def w(text: str) -> None:
            fh.write((text + "\n").encode("ascii"))

        w(f"num_points: {len(cloud)}")
        for row in _format_float_rows(cloud.points):
            w(row)
        w("num_colors: 0")
        if cloud.has_normals:
            w(f"num_normals: {len(cloud)}")
            for row in _format_float_rows(cloud.normals):
                w(row)
        w(f"num_groups: {len(primitives)}")
        for gi, prim in enumerate(primitives):
            p = prim.plane
            w("group_type: 0")
            w("num_group_parameters: 4")
            w(f"group_parameters: {p.a:.9g} {p.b:.9g} {p.c:.9g} {p.d:.9g}")
            w(f"group_label: plane_{gi}")
            w("group_color: 0.5 0.5 0.5")
            w(f"group_num_point: {prim.num_points}")
            w(" ".join(str(int(i)) for i in prim.indices))
            w("num_children: 0")


def sample_mesh(mesh: TriangleMesh, n: int, seed: int = 0) -> PointCloud:
    """Poisson-disk sample `n` points from a mesh surface.

    Oversamples 3n points area-uniformly, then runs weighted sample
    elimination down to n so the survivors are evenly spaced.  Deterministic
    for a fixed seed; sample normals are taken from their source faces.
    """
    if n < 1:
        raise ValueError("sample count must be positive")
    total_area = mesh.area()
    if total_area <= 0.0:
        raise ValueError("cannot sample a mesh with zero surface area")
    rng = np.random.default_rng(seed)
    m = 3 * n

    areas = mesh.face_areas()
    cum = np.cumsum(areas)
    face_idx = np.searchsorted(cum, rng.random(m) * cum[-1])
    face_idx = np.minimum(face_idx, len(areas) - 1)
    tri = mesh.triangles()[face_idx]
    r1, r2 = rng.random(m), rng.random(m)
    flip = r1 + r2 > 1.0
    r1[flip], r2[flip] = 1.0 - r1[flip], 1.0 - r2[flip]
    samples = tri[:, 0] + r1[:, None] * (tri[:, 1] - tri[:, 0]) + r2[:, None] * (tri[:, 2] - tri[:, 0])
    normals = mesh.face_normals()[face_idx]

    if n >= m:
        return PointCloud(samples, normals)

    # weighted sample elimination: repeatedly drop the most crowded sample
    r_max = float(np.sqrt(total_area / (2.0 * np.sqrt(3.0) * n)))
    radius = 2.0 * r_max
    tree = cKDTree(samples)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if len(pairs):
        d = np.linalg.norm(samples[pairs[:, 0]] - samples[pairs[:, 1]], axis=1)
        terms = (1.0 - d / radius) ** 8
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
        contrib = np.concatenate([terms, terms])
        order = np.argsort(src, kind="stable")
        src, dst, contrib = src[order], dst[order], contrib[order]
        indptr = np.searchsorted(src, np.arange(m + 1))
    else:
        dst = np.zeros(0, dtype=np.int64)
        contrib = np.zeros(0)
        indptr = np.zeros(m + 1, dtype=np.int64)

    weights = np.zeros(m)
    np.add.at(weights, dst, contrib)

    heap = [(-weights[i], i) for i in range(m)]
    heapq.heapify(heap)
    alive = np.ones(m, dtype=bool)
    remaining = m
    while remaining > n and heap:
        negw, i = heapq.heappop(heap)
        if not alive[i] or -negw != weights[i]:
            continue
        alive[i] = False
        remaining -= 1
        for k in range(indptr[i], indptr[i + 1]):
            j = dst[k]
            if alive[j]:
                weights[j] -= contrib[k]
                heapq.heappush(heap, (-weights[j], j))
    return PointCloud(samples[alive], normals[alive])
