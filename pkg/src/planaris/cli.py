"""Command line front end: run, synth, eval and sample subcommands."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .io import load_mesh, load_point_cloud, sample_mesh, save_point_cloud
from .metrics import point_mesh_rmse, write_report
from .pipeline import PipelineConfig, StageError, run_pipeline
from .synth import PRESETS, SceneSpec, generate_scene

logger = logging.getLogger(__name__)

# flag destination -> config field, per config section
_RANSAC_FLAGS = {
    "epsilon": "epsilon",
    "normal_threshold": "normal_threshold_deg",
    "min_support": "min_support",
    "max_planes": "max_planes",
    "candidates": "candidates",
    "seed": "seed",
}
_SEG_FLAGS = {
    "horizontal_angle": "horizontal_angle_deg",
    "wall_angle": "wall_angle_deg",
    "min_wall_height": "min_wall_height",
    "ceiling_frac": "ceiling_frac",
    "floor_frac": "floor_frac",
    "multistory_frac": "multistory_frac",
    "slanted_band_frac": "slanted_band_frac",
    "outlier_k": "outlier_k",
    "outlier_std_ratio": "outlier_std_ratio",
}
_VTRANS_FLAGS = {"th_parallel": "th_parallel", "th_sep": "th_sep"}
_CLIP_FLAGS = {"th_clip": "th_clip"}
_TOP_FLAGS = {
    "align_c_min": "align_c_min",
    "axis_tol": "axis_tol_deg",
    "normals_k": "normals_k",
    "threads": "threads",
    "skip_alignment": "skip_alignment",
    "cache": "use_cache",
    "dump_adjacency": "dump_adjacency",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="planaris",
        description="Structure-aware planar simplification of indoor point clouds.")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full reconstruction pipeline")
    run.add_argument("--input", required=True, help="input cloud (.ply) or grouped cloud (.vg)")
    run.add_argument("--output", default="output", help="artifact directory")
    run.add_argument("--config", default=None, help="JSON pipeline config")
    run.add_argument("--report", default=None,
                     help="extra report copy, .json or .csv by extension")
    run.add_argument("--skip-alignment", action="store_true", default=None,
                     help="keep the input orientation")
    run.add_argument("--cache", action="store_true", default=None,
                     help="cache plane detection keyed on input and settings")
    run.add_argument("--dump-adjacency", action="store_true", default=None,
                     help="also write the wall adjacency graph as DOT")
    run.add_argument("--seed", type=int, default=None, help="detection random seed")
    run.add_argument("--threads", type=int, default=None, help="clipping worker threads")
    det = run.add_argument_group("plane detection")
    det.add_argument("--epsilon", type=float, default=None,
                     help="inlier distance for plane membership (m)")
    det.add_argument("--normal-threshold", type=float, default=None,
                     help="max angle between point and plane normal (deg)")
    det.add_argument("--min-support", type=int, default=None,
                     help="minimum points per plane (default 0.5%% of the cloud)")
    det.add_argument("--max-planes", type=int, default=None)
    det.add_argument("--candidates", type=int, default=None,
                     help="random plane candidates per detection round")
    det.add_argument("--normals-k", type=int, default=None,
                     help="neighborhood size for normal estimation")
    seg = run.add_argument_group("structural segmentation")
    seg.add_argument("--horizontal-angle", type=float, default=None,
                     help="max normal tilt for a horizontal surface (deg)")
    seg.add_argument("--wall-angle", type=float, default=None,
                     help="min normal tilt for a wall (deg)")
    seg.add_argument("--min-wall-height", type=float, default=None,
                     help="min vertical extent of a wall (m)")
    seg.add_argument("--ceiling-frac", type=float, default=None,
                     help="elevation fraction of the ceiling seed for ceiling membership")
    seg.add_argument("--floor-frac", type=float, default=None,
                     help="depth fraction of the floor seed for floor membership")
    seg.add_argument("--multistory-frac", type=float, default=None,
                     help="support fraction admitting extra horizontal slabs")
    seg.add_argument("--slanted-band-frac", type=float, default=None,
                     help="height band a slanted surface must reach")
    seg.add_argument("--outlier-k", type=int, default=None)
    seg.add_argument("--outlier-std-ratio", type=float, default=None)
    ref = run.add_argument_group("model refinement")
    ref.add_argument("--align-c-min", type=float, default=None,
                     help="min |normal z| for vertical alignment candidates")
    ref.add_argument("--axis-tol", type=float, default=None,
                     help="snap-to-axis tolerance for fitted rectangles (deg)")
    ref.add_argument("--th-parallel", type=float, default=None,
                     help="cross product bound treating two planes as parallel")
    ref.add_argument("--th-sep", type=float, default=None,
                     help="max separation for adjacency and corner movement (m)")
    ref.add_argument("--th-clip", type=int, default=None,
                     help="points required to keep a clipped piece; 0 disables clipping")

    synth = sub.add_parser("synth", help="generate a synthetic labeled scene")
    src = synth.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--spec", help="scene spec JSON")
    synth.add_argument("--out", required=True, help="output cloud (.ply)")
    synth.add_argument("--truth", default=None, help="optional ground-truth JSON")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--density", type=float, default=None, help="points per square meter")
    synth.add_argument("--sigma", type=float, default=None, help="surface noise (m)")
    synth.add_argument("--binary", action="store_true", help="write binary PLY")

    ev = sub.add_parser("eval", help="point-to-mesh RMSE between a cloud and a mesh")
    ev.add_argument("--cloud", required=True)
    ev.add_argument("--mesh", required=True)
    ev.add_argument("--method", choices=["bvh", "brute"], default="bvh")
    ev.add_argument("--report", default=None, help=".json or .csv output")

    samp = sub.add_parser("sample", help="evenly sample points from a mesh surface")
    samp.add_argument("--mesh", required=True)
    samp.add_argument("--count", type=int, required=True)
    samp.add_argument("--seed", type=int, default=0)
    samp.add_argument("--out", required=True, help="output cloud (.ply)")
    samp.add_argument("--binary", action="store_true")
    return parser


def _overridden(args, flags: dict[str, str]) -> dict:
    out = {}
    for dest, name in flags.items():
        value = getattr(args, dest)
        if value is not None:
            out[name] = value
    return out


def config_from_args(args) -> PipelineConfig:
    """Layer settings: built-in defaults, then config file, then explicit flags."""
    cfg = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    sections = {
        "ransac": _overridden(args, _RANSAC_FLAGS),
        "segmentation": _overridden(args, _SEG_FLAGS),
        "vtrans": _overridden(args, _VTRANS_FLAGS),
        "clip": _overridden(args, _CLIP_FLAGS),
    }
    updates: dict = {}
    for name, over in sections.items():
        if over:
            updates[name] = dataclasses.replace(getattr(cfg, name), **over)
    updates.update(_overridden(args, _TOP_FLAGS))
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_run(args) -> int:
    in_path = Path(args.input)
    if not in_path.exists():
        print(f"planaris: input not found: {in_path}", file=sys.stderr)
        return 2
    cfg = config_from_args(args)
    result = run_pipeline(in_path, args.output, cfg)
    if args.report:
        write_report(result.report, args.report)
    rmse = result.report.rmse
    rmse_txt = f"{rmse:.6f}" if rmse is not None else "n/a"
    print(f"planes: {result.report.num_primitives}  "
          f"structured: {result.report.num_structured}  "
          f"faces: {result.report.num_faces}  rmse: {rmse_txt}")
    for name, path in sorted(result.artifacts.items()):
        print(f"  {name}: {path}")
    return 0


def _cmd_synth(args) -> int:
    if args.preset:
        spec = PRESETS[args.preset]()
    else:
        spec_path = Path(args.spec)
        if not spec_path.exists():
            print(f"planaris: spec not found: {spec_path}", file=sys.stderr)
            return 2
        spec = SceneSpec.from_json(spec_path)
    over = {k: getattr(args, k) for k in ("seed", "density", "sigma")
            if getattr(args, k) is not None}
    if over:
        spec = dataclasses.replace(spec, **over)
    scene = generate_scene(spec)
    save_point_cloud(scene.cloud, args.out, binary=args.binary)
    if args.truth:
        scene.truth_json(args.truth)
    print(f"wrote {len(scene.cloud)} points over {len(scene.surfaces)} surfaces to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    for name in ("cloud", "mesh"):
        if not Path(getattr(args, name)).exists():
            print(f"planaris: {name} not found: {getattr(args, name)}", file=sys.stderr)
            return 2
    cloud = load_point_cloud(args.cloud)
    mesh = load_mesh(args.mesh)
    rmse = point_mesh_rmse(cloud, mesh, method=args.method)
    print(f"rmse: {rmse:.6f}")
    if args.report:
        write_report({"rmse": rmse, "num_points": len(cloud),
                      "num_faces": len(mesh.faces)}, args.report)
    return 0


def _cmd_sample(args) -> int:
    mesh_path = Path(args.mesh)
    if not mesh_path.exists():
        print(f"planaris: mesh not found: {mesh_path}", file=sys.stderr)
        return 2
    cloud = sample_mesh(load_mesh(mesh_path), args.count, seed=args.seed)
    save_point_cloud(cloud, args.out, binary=args.binary)
    print(f"wrote {len(cloud)} points to {args.out}")
    return 0


_COMMANDS = {"run": _cmd_run, "synth": _cmd_synth, "eval": _cmd_eval, "sample": _cmd_sample}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except StageError as exc:
        print(f"planaris: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"planaris: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
