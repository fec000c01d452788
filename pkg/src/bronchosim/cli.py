"""Command-line front end.

Subcommands: generate, skeletonize, render, noise-fit, evaluate-pose,
evaluate-depth, plan, validate. Exit codes: 0 success, 1 validation
error, 2 runtime failure. BRONCHOSIM_THREADS overrides the worker count.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

log = logging.getLogger("bronchosim")


def _apply_thread_override():
    n = os.environ.get("BRONCHOSIM_THREADS")
    if n:
        import numba
        numba.set_num_threads(max(1, int(n)))


def _load_config(args):
    from .config import PipelineConfig
    if args.config:
        cfg = PipelineConfig.load(args.config)
    else:
        cfg = PipelineConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output:
        cfg.output_root = args.output
    if getattr(args, "stages", None):
        cfg.stages = tuple(args.stages.split(","))
    if getattr(args, "phantom", None):
        cfg.input.kind = "phantom"
        cfg.input.phantom = args.phantom
    if getattr(args, "mask", None):
        cfg.input.kind = "mask"
        cfg.input.path = args.mask
    if getattr(args, "mesh", None):
        cfg.input.kind = "mesh"
        cfg.input.path = args.mesh
    if getattr(args, "max_frames", None):
        cfg.max_frames = args.max_frames
    if getattr(args, "max_sequences", None):
        cfg.max_sequences = args.max_sequences
    return cfg


def cmd_generate(args) -> int:
    from .pipeline import run_pipeline
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    print(json.dumps({k: report[k] for k in ("seed", "stages", "total_seconds")
                      if k in report}, indent=2, default=str))
    return 0


def cmd_skeletonize(args) -> int:
    args.stages = "reconstruct,skeletonize"
    return cmd_generate(args)


def cmd_render(args) -> int:
    cfg = _load_config(args)
    stages = set(cfg.stages) | {"render"}
    cfg.stages = tuple(stages)
    from .pipeline import run_pipeline
    report = run_pipeline(cfg)
    print(json.dumps(report["stages"].get("render", {}), indent=2))
    return 0


def cmd_noise_fit(args) -> int:
    from .dataset.formats import read_png
    from .noise import estimate_psd
    from .render.scene import srgb_decode
    frames_dir = Path(args.frames)
    paths = sorted(frames_dir.glob("*.png"))
    if not paths:
        raise ValueError(f"no PNG frames in {frames_dir}")
    images = [srgb_decode(read_png(p).astype(np.float64) / 255.0) for p in paths]
    spec = estimate_psd(images, sigma_spatial=args.sigma_spatial,
                        sigma_range=args.sigma_range)
    spec.save(args.out)
    print(f"spectrum from {len(images)} frame(s) -> {args.out}")
    return 0


def _pose_set_from_trajectory(path):
    from .metrics import PoseSet
    from .render.camera import quat_to_matrix
    doc = json.loads(Path(path).read_text())
    R = []
    t = []
    ids = []
    for rec in doc:
        q = np.asarray(rec["pose"]["quaternion_wxyz"], dtype=float)
        R.append(quat_to_matrix(q / np.linalg.norm(q)))
        t.append(rec["pose"]["translation_xyz"])
        ids.append(rec["frame_id"])
    return PoseSet(np.array(R), np.array(t), np.array(ids))


def cmd_evaluate_pose(args) -> int:
    from .metrics import pose_metrics, write_pose_report
    pred = _pose_set_from_trajectory(args.pred)
    gt = _pose_set_from_trajectory(args.gt)
    m = pose_metrics(pred, gt, windowed=args.window)
    paths = write_pose_report(m, args.out)
    print(json.dumps(m.to_dict(), indent=2))
    print(f"report -> {paths['table']}")
    return 0


def cmd_evaluate_depth(args) -> int:
    from .dataset.formats import read_pfm
    from .metrics import (DepthEvalPair, depth_metrics, median_scale_align,
                          write_depth_report)
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    names = sorted(p.name for p in gt_dir.glob("*.pfm"))
    if not names:
        raise ValueError(f"no .pfm ground truth in {gt_dir}")
    per_frame = []
    for name in names:
        pred_path = pred_dir / name
        if not pred_path.exists():
            raise ValueError(f"missing prediction {pred_path}")
        pred = read_pfm(pred_path).astype(np.float64)
        gt = read_pfm(gt_dir / name).astype(np.float64)
        if args.align:
            pred = median_scale_align(pred, gt)
        per_frame.append((name.replace(".pfm", ""),
                          depth_metrics(DepthEvalPair(pred, gt))))
    paths = write_depth_report(per_frame, args.out)
    print(Path(paths["table"]).read_text())
    return 0


def cmd_plan(args) -> int:
    from .dataset.layout import read_sequence
    from .planner import (LocalMap, export_path_overlay, farthest_visible_point,
                          plan_local_path)
    reader = read_sequence(args.sequence)
    bundle = reader.frame(args.frame)
    goal = farthest_visible_point(bundle.depth, reader.camera)
    # the farthest visible point sits on the wall; stop two radii short
    direction = goal / np.linalg.norm(goal)
    goal = goal - 2.0 * args.robot_radius * direction
    local_map = LocalMap.from_depth(bundle.depth, reader.camera,
                                    robot_radius=args.robot_radius,
                                    stride=args.stride)
    result = plan_local_path(local_map, np.zeros(3), goal, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result.to_json(out / "path.json")
    if result.success:
        export_path_overlay(result, out / "path_overlay.ply")
        print(f"path with {len(result.path)} vertices, cost {result.cost:.4f} "
              f"-> {out}")
        return 0
    print(f"planning failed: {result.message}", file=sys.stderr)
    return 2


def _hash_bytes(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def _dump_sequence_hashes(seq_dir: Path) -> dict:
    from .dataset.layout import read_sequence
    reader = read_sequence(seq_dir)
    frames = {}
    for k in reader.frame_indices:
        fb = reader.frame(k)
        rec = {
            "rgb": _hash_bytes(np.ascontiguousarray(fb.rgb).tobytes()),
            "depth": _hash_bytes(fb.depth.astype("<f4").tobytes()),
            "normals": _hash_bytes(fb.normals.astype("<f4").tobytes()),
            "flow": (None if fb.flow is None
                     else _hash_bytes(fb.flow.astype("<f4").tobytes())),
        }
        if fb.point_cloud is not None:
            rec["point_cloud"] = _hash_bytes(fb.point_cloud.astype("<f4").tobytes())
            if fb.point_colors is not None:
                rec["point_colors"] = _hash_bytes(
                    np.ascontiguousarray(fb.point_colors).tobytes())
        frames[f"{k:04d}"] = rec
    poses = [np.round(rec["pose"], 12).tolist() for rec in reader.trajectory]
    return {"frames": frames, "poses": poses,
            "timestamps": reader.timestamps.tolist()}


def cmd_validate(args) -> int:
    from .dataset.layout import read_sequence
    root = Path(args.root)
    if not root.exists():
        raise ValueError(f"no such path: {root}")
    seq_dirs = []
    if (root / "rgb").is_dir():
        seq_dirs = [root]
    else:
        for pdir in sorted(root.iterdir()):
            if pdir.is_dir():
                seq_dirs += [d for d in sorted(pdir.iterdir())
                             if d.is_dir() and d.name != "anatomy"]
    if not seq_dirs:
        raise ValueError(f"no sequences under {root}")
    from .dataset.layout import validate_against_manifest
    dump = {}
    for d in seq_dirs:
        reader = read_sequence(d)
        problems = validate_against_manifest(d)
        if problems:
            raise ValueError(f"{d}: layout manifest violations: {problems}")
        print(f"ok: {d} ({len(reader)} frames)")
        if args.dump_hashes:
            dump[str(d.relative_to(root) if d != root else d.name)] = \
                _dump_sequence_hashes(d)
    if args.dump_hashes:
        Path(args.dump_hashes).write_text(json.dumps(dump, indent=2))
        print(f"hashes -> {args.dump_hashes}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bronchosim",
        description="Airway bronchoscopy dataset engine and evaluation tools")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_pipeline_args(p):
        p.add_argument("--config", help="JSON or TOML pipeline config")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", help="output root directory")
        p.add_argument("--phantom", choices=["cylinder", "y"])
        p.add_argument("--mask", help="voxel mask (raw + JSON sidecar)")
        p.add_argument("--mesh", help="OBJ/PLY surface mesh")
        p.add_argument("--max-frames", type=int, dest="max_frames")
        p.add_argument("--max-sequences", type=int, dest="max_sequences")

    p = sub.add_parser("generate", help="run the full pipeline")
    add_pipeline_args(p)
    p.add_argument("--stages", help="comma-separated stage subset")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("skeletonize", help="anatomy + skeleton outputs only")
    add_pipeline_args(p)
    p.set_defaults(fn=cmd_skeletonize)

    p = sub.add_parser("render", help="pipeline including the render stage")
    add_pipeline_args(p)
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("noise-fit", help="fit a noise spectrum from real frames")
    p.add_argument("--frames", required=True, help="directory of PNG frames")
    p.add_argument("--out", required=True, help="spectrum archive path")
    p.add_argument("--sigma-spatial", type=float, default=3.0)
    p.add_argument("--sigma-range", type=float, default=0.05)
    p.set_defaults(fn=cmd_noise_fit)

    p = sub.add_parser("evaluate-pose", help="pose metrics from two trajectories")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=None,
                   help="restrict pairs to |i-j| <= window")
    p.set_defaults(fn=cmd_evaluate_pose)

    p = sub.add_parser("evaluate-depth", help="depth metrics from two PFM dirs")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--align", action="store_true",
                   help="median-scale align predictions")
    p.set_defaults(fn=cmd_evaluate_depth)

    p = sub.add_parser("plan", help="plan a local path from one frame's depth")
    p.add_argument("--sequence", required=True)
    p.add_argument("--frame", type=int, default=0)
    p.add_argument("--robot-radius", type=float, default=1.5e-3,
                   dest="robot_radius")
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("validate", help="validate a dataset root or sequence")
    p.add_argument("--root", required=True)
    p.add_argument("--dump-hashes", dest="dump_hashes",
                   help="write per-frame payload hashes to this JSON file")
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    _apply_thread_override()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, FileNotFoundError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        log.exception("runtime failure")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
