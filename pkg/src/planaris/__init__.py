"""Structure-aware planar simplification of indoor point clouds."""

from .adjacency import AdjacencyGraph, build_ceiling_adjacency, build_wall_adjacency
from .alignment import (AlignmentResult, apply_rotation, compute_xy_rotation,
                        compute_z_rotation)
from .core import (Plane, PointCloud, TriangleMesh, angle_between,
                   axis_angle_between, is_rotation, normalize, plane_basis,
                   plane_point_distance, rotation_about_axis, rotation_about_z,
                   rotation_between)
from .io import (load_mesh, load_point_cloud, load_vg, PlyParseError,
                 sample_mesh, save_mesh, save_point_cloud, save_vg, VgParseError)
from .mesh_clipping import ClipConfig, MeshFragment, clip_structural_plane
from .metrics import (closest_point_on_triangle, count_faces, EvalReport,
                      point_mesh_distances, point_mesh_rmse, TriangleBvh,
                      write_report)
from .pipeline import PipelineConfig, PipelineResult, run_pipeline, StageError
from .planemesh import PlanarMesh, build_primitive_mesh
from .ransac import (absorb_unassigned, detect_planes, estimate_normals,
                     inlier_mask, PlanarPrimitive, RansacConfig, refit_plane)
from .segmentation import (remove_outliers, SceneSegmentation,
                           segment_scene, SegmentationConfig)
from .synth import (alcove_clip_fixture, Box, generate_scene, PRESETS,
                    SceneSpec, SurfaceTruth, SyntheticScene)
from .vertex_translation import translate_wall_vertices, VTransConfig

__version__ = "0.1.0"

__all__ = [
    "AdjacencyGraph", "AlignmentResult", "Box", "ClipConfig", "EvalReport",
    "MeshFragment", "PipelineConfig", "PipelineResult", "PlanarMesh",
    "PlanarPrimitive", "Plane", "PlyParseError", "PointCloud", "PRESETS",
    "RansacConfig", "SceneSegmentation", "SceneSpec", "SegmentationConfig",
    "StageError", "SurfaceTruth", "SyntheticScene", "TriangleBvh",
    "TriangleMesh", "VTransConfig", "VgParseError", "absorb_unassigned",
    "alcove_clip_fixture", "angle_between", "apply_rotation",
    "axis_angle_between", "build_ceiling_adjacency", "build_primitive_mesh",
    "build_wall_adjacency", "clip_structural_plane", "closest_point_on_triangle",
    "compute_xy_rotation", "count_faces",
    "compute_z_rotation", "detect_planes", "estimate_normals", "generate_scene",
    "inlier_mask", "is_rotation",
    "load_mesh", "load_point_cloud", "load_vg", "normalize", "plane_basis",
    "plane_point_distance", "point_mesh_distances", "point_mesh_rmse",
    "refit_plane", "remove_outliers", "rotation_about_axis", "rotation_about_z",
    "rotation_between", "run_pipeline", "sample_mesh", "save_mesh",
    "save_point_cloud", "save_vg", "segment_scene", "translate_wall_vertices",
    "write_report",
]
