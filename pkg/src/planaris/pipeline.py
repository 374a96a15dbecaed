"""End-to-end reconstruction pipeline: cloud in, simplified planar model out."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adjacency import AdjacencyGraph, build_ceiling_adjacency, build_wall_adjacency
from .alignment import apply_rotation, compute_xy_rotation, compute_z_rotation
from .core import PointCloud, TriangleMesh
from .io import load_point_cloud, load_vg, save_mesh, save_point_cloud, save_vg
from .mesh_clipping import ClipConfig, MeshFragment, clip_structural_plane
from .metrics import EvalReport, point_mesh_rmse, write_report
from .planemesh import PlanarMesh, build_primitive_mesh
from .ransac import PlanarPrimitive, RansacConfig, absorb_unassigned, detect_planes, estimate_normals
from .segmentation import SceneSegmentation, SegmentationConfig, remove_outliers, segment_scene, select_walls
from .vertex_translation import VTransConfig, translate_wall_vertices

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; .stage names the stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    ransac: RansacConfig = field(default_factory=RansacConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    vtrans: VTransConfig = field(default_factory=VTransConfig)
    clip: ClipConfig = field(default_factory=ClipConfig)
    axis_tol_deg: float = 5.0
    align_c_min: float = 0.6
    skip_alignment: bool = False
    normals_k: int = 16
    threads: int = 1
    use_cache: bool = False
    dump_adjacency: bool = False

    def __post_init__(self):
        if self.normals_k < 3:
            raise ValueError("normals_k must be at least 3")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not 0 < self.align_c_min <= 1:
            raise ValueError("align_c_min must be in (0, 1]")
        if self.axis_tol_deg < 0:
            raise ValueError("axis_tol_deg must be non-negative")

    @classmethod
    def from_json(cls, path) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        kwargs = dict(raw)
        sections = {"ransac": RansacConfig, "segmentation": SegmentationConfig,
                    "vtrans": VTransConfig, "clip": ClipConfig}
        for name, sub_cls in sections.items():
            if name in kwargs:
                kwargs[name] = sub_cls(**kwargs[name])
        unknown = set(kwargs) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class PipelineResult:
    rotation: np.ndarray
    primitives: list[PlanarPrimitive]
    segmentation: SceneSegmentation
    wall_meshes: list[PlanarMesh]
    slab_meshes: list[PlanarMesh]
    slab_fragments: list[list[MeshFragment]]
    wall_graph: AdjacencyGraph
    structured_mesh: TriangleMesh | None
    non_structured: PointCloud | None
    report: EvalReport
    artifacts: dict[str, Path]


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    logger.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, str(exc)) from exc
    finally:
        timings[name] = round(time.perf_counter() - t0, 6)


def _detection_digest(path: Path, cfg: PipelineConfig) -> str:
    h = hashlib.sha256(path.read_bytes())
    key = dict(dataclasses.asdict(cfg.ransac), normals_k=cfg.normals_k)
    h.update(json.dumps(key, sort_keys=True).encode())
    return h.hexdigest()[:16]


def _build_class_meshes(prims: list[PlanarPrimitive], cloud: PointCloud, kind: str,
                        axis_tol_deg: float) -> list[tuple[PlanarMesh, PlanarPrimitive]]:
    out = []
    for i, prim in enumerate(prims):
        try:
            out.append((build_primitive_mesh(prim, cloud, kind, axis_tol_deg, source=i), prim))
        except ValueError as exc:
            logger.warning("dropping degenerate %s primitive: %s", kind, exc)
    return out


def run_pipeline(input_path, output_dir, config: PipelineConfig | None = None) -> PipelineResult:
    """Run the full reconstruction on a .ply or .vg input.

    Artifacts (primitives.vg, structured.obj, non_structured.ply,
    report.json) are written into output_dir; on a stage failure every
    artifact already written is renamed to <name>.partial before the
    StageError propagates.
    """
    cfg = config or PipelineConfig()
    in_path = Path(input_path)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    written: list[Path] = []

    def emit(name: str, writer) -> Path:
        path = out_dir / name
        writer(path)
        written.append(path)
        return path

    try:
        with _stage("load", timings):
            suffix = in_path.suffix.lower()
            primitives: list[PlanarPrimitive] | None = None
            if suffix == ".vg":
                cloud, primitives = load_vg(in_path)
            elif suffix == ".ply":
                cloud = load_point_cloud(in_path)
            else:
                raise ValueError(f"unsupported input format: {suffix!r}")
            logger.info("loaded %d points from %s", len(cloud), in_path)

        with _stage("normals", timings):
            if cloud.normals is None:
                cloud = estimate_normals(cloud, k=cfg.normals_k)

        with _stage("detect", timings):
            if primitives is None:
                cache_file = None
                if cfg.use_cache:
                    cache_dir = out_dir / "cache"
                    cache_dir.mkdir(exist_ok=True)
                    cache_file = cache_dir / f"{_detection_digest(in_path, cfg)}.vg"
                if cache_file is not None and cache_file.exists():
                    _, primitives = load_vg(cache_file)
                    logger.info("detection cache hit: %s", cache_file.name)
                else:
                    primitives = detect_planes(cloud, cfg.ransac)
                    primitives = absorb_unassigned(cloud, primitives, cfg.ransac.epsilon)
                    if cache_file is not None:
                        save_vg(cache_file, cloud, primitives)
            if not primitives:
                raise ValueError("no planar primitives found")

        with _stage("align", timings):
            alignment_info: dict | None = None
            rotation = np.eye(3)
            if not cfg.skip_alignment:
                try:
                    zres = compute_z_rotation(primitives, cfg.align_c_min)
                    rotation = zres.rotation
                    alignment_info = zres.report()
                except ValueError as exc:
                    logger.warning("vertical alignment skipped: %s", exc)
                cloud = apply_rotation(cloud, rotation)
                primitives = apply_rotation(primitives, rotation)
                prelim = select_walls(primitives, cloud, cfg.segmentation)
                r_xy = compute_xy_rotation([primitives[i] for i in prelim])
                cloud = apply_rotation(cloud, r_xy)
                primitives = apply_rotation(primitives, r_xy)
                rotation = r_xy @ rotation
                xy_angle = float(np.degrees(np.arctan2(r_xy[1, 0], r_xy[0, 0])))
                alignment_info = dict(alignment_info or {}, xy_angle_deg=xy_angle)

        with _stage("segment", timings):
            seg = segment_scene(cloud, primitives, cfg.segmentation)

        with _stage("mesh", timings):
            wall_pairs = _build_class_meshes(seg.walls, cloud, "wall", cfg.axis_tol_deg)
            slab_pairs = (_build_class_meshes(seg.ceiling, cloud, "ceiling", cfg.axis_tol_deg)
                          + _build_class_meshes(seg.floor, cloud, "floor", cfg.axis_tol_deg)
                          + _build_class_meshes(seg.slanted, cloud, "slanted", cfg.axis_tol_deg))

        with _stage("adjacency", timings):
            wall_meshes = [m for m, _ in wall_pairs]
            wall_graph = build_wall_adjacency(wall_meshes, th_sep=cfg.vtrans.th_sep,
                                              th_parallel=cfg.vtrans.th_parallel)

        with _stage("vtrans", timings):
            wall_meshes = translate_wall_vertices(wall_meshes, wall_graph, cfg.vtrans)

        with _stage("clip", timings):
            def clip_one(pair: tuple[PlanarMesh, PlanarPrimitive]) -> list[MeshFragment]:
                mesh, prim = pair
                graph = build_ceiling_adjacency(mesh, wall_meshes, th_sep=cfg.vtrans.th_sep)
                return clip_structural_plane(mesh, cloud.select(prim.indices),
                                             wall_meshes, graph, cfg.clip)

            if cfg.threads > 1 and len(slab_pairs) > 1:
                with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                    slab_fragments = list(pool.map(clip_one, slab_pairs))
            else:
                slab_fragments = [clip_one(p) for p in slab_pairs]

        with _stage("assemble", timings):
            parts: list[TriangleMesh] = [m.triangle_mesh() for m in wall_meshes]
            for frags in slab_fragments:
                parts.extend(f.to_mesh() for f in frags)
            parts = [p for p in parts if len(p.faces)]
            structured_mesh = TriangleMesh.concatenate(parts) if parts else None

        with _stage("filter", timings):
            non_structured = seg.non_structured
            if non_structured is not None and len(non_structured) > cfg.segmentation.outlier_k:
                non_structured = remove_outliers(non_structured,
                                                 k=cfg.segmentation.outlier_k,
                                                 std_ratio=cfg.segmentation.outlier_std_ratio)

        with _stage("metrics", timings):
            rmse = None
            if structured_mesh is not None:
                member = np.concatenate([p.indices for _, p in wall_pairs + slab_pairs]) \
                    if (wall_pairs or slab_pairs) else np.zeros(0, dtype=np.int64)
                if len(member):
                    rmse = point_mesh_rmse(cloud.select(np.unique(member)), structured_mesh)
            kinds = ["ceiling", "floor", "slanted"]
            frag_counts = {k: 0 for k in kinds}
            for (mesh, _), frags in zip(slab_pairs, slab_fragments):
                frag_counts[mesh.kind] += len(frags)
            report = EvalReport(
                num_points=len(cloud),
                num_primitives=len(primitives),
                num_structured=len(seg.structured()),
                num_faces=len(structured_mesh.faces) if structured_mesh is not None else 0,
                rmse=rmse,
                class_counts=seg.counts(),
                fragment_counts=frag_counts,
                timings_s=timings,
                alignment=alignment_info,
                config=cfg.to_dict(),
            )

        artifacts: dict[str, Path] = {}
        with _stage("write", timings):
            artifacts["primitives"] = emit(
                "primitives.vg", lambda p: save_vg(p, cloud, primitives))
            if structured_mesh is not None:
                artifacts["structured"] = emit(
                    "structured.obj", lambda p: save_mesh(structured_mesh, p))
            if non_structured is not None and len(non_structured):
                artifacts["non_structured"] = emit(
                    "non_structured.ply",
                    lambda p: save_point_cloud(non_structured, p, binary=True))
            if cfg.dump_adjacency:
                artifacts["adjacency"] = emit(
                    "wall_adjacency.dot",
                    lambda p: p.write_text(wall_graph.to_dot(), encoding="utf-8"))
            report.timings_s = dict(timings)
            artifacts["report"] = emit("report.json", lambda p: write_report(report, p))
    except StageError:
        for path in written:
            if path.exists():
                path.rename(path.with_name(path.name + ".partial"))
        raise

    # the persisted report cannot time its own write; the in-memory one can
    report.timings_s = dict(timings)
    return PipelineResult(
        rotation=rotation, primitives=primitives, segmentation=seg,
        wall_meshes=wall_meshes, slab_meshes=[m for m, _ in slab_pairs],
        slab_fragments=slab_fragments, wall_graph=wall_graph,
        structured_mesh=structured_mesh, non_structured=non_structured,
        report=report, artifacts=artifacts,
    )
