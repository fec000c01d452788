#!/usr/bin/env python3
"""Build reader-parity fixtures with the primary dataset engine.

Three sequences cover the layout's edge cases: a standard multi-frame
sequence, a single-frame sequence (no flow at all), and a rendered
cylinder fly-through (realistic values including +inf depth misses).
Reference hashes come from the engine's own reader via the CLI.
"""

import subprocess
import sys
from pathlib import Path

import numpy as np

HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "tests" / "fixtures"
ROOT = FIXTURES / "dataset"


def random_bundle(k, h=10, w=12, with_flow=True, rng=None):
    from bronchosim.render import FrameBundle
    rng = rng or np.random.default_rng(1000 + k)
    depth = 0.005 + rng.random((h, w)) * 0.03
    depth[0, :2] = np.inf  # exercise miss pixels
    pose = np.eye(4)
    pose[:3, 3] = [0.001 * k, -0.002 * k, 0.003 * k]
    th = 0.1 * k
    pose[:3, :3] = np.array([[np.cos(th), -np.sin(th), 0],
                             [np.sin(th), np.cos(th), 0],
                             [0, 0, 1.0]])
    return FrameBundle(
        rgb=rng.integers(0, 256, (h, w, 3)).astype(np.uint8),
        depth=depth,
        normals=rng.standard_normal((h, w, 3)),
        pose=pose, timestamp=0.1 * k,
        flow=(rng.standard_normal((h, w, 2)).astype(np.float32)
              if with_flow else None),
        point_cloud=rng.standard_normal((25, 3)),
        point_colors=rng.integers(0, 256, (25, 3)).astype(np.uint8))


def write_synthetic(patient, seq, n):
    from bronchosim.dataset import SequenceLayout, write_frame, write_sequence_metadata
    from bronchosim.render import CameraIntrinsics
    from bronchosim.robot import RobotParams
    layout = SequenceLayout(ROOT, patient, seq)
    traj = []
    for k in range(n):
        bundle = random_bundle(k, with_flow=(k < n - 1))
        write_frame(layout, k, bundle, force=True)
        traj.append({"frame_id": k, "t_sec": 0.1 * k,
                     "rotation": bundle.pose[:3, :3],
                     "translation": bundle.pose[:3, 3]})
    cam = CameraIntrinsics(width=12, height=10, fx=6, fy=6, cx=6, cy=5)
    write_sequence_metadata(layout, traj, cam, RobotParams(), seed=5)


def write_rendered():
    import json
    from bronchosim.config import PipelineConfig
    from bronchosim.pipeline import run_pipeline
    cfg = PipelineConfig.from_dict({
        "seed": 21, "output_root": str(ROOT), "patient_id": "patient_002",
        "stages": ["reconstruct", "skeletonize", "render"],
        "max_frames": 6, "max_sequences": 1,
        "input": {"kind": "phantom", "phantom": "cylinder", "voxel": 0.8e-3},
        "sdf": {"voxel_size": 0.8e-3},
        "skeleton": {"n_surface_samples": 1200},
        "camera": {"width": 48, "height": 48, "fx": 24, "fy": 24,
                   "cx": 24, "cy": 24},
        "render": {"spp": 1, "point_cloud_stride": 6},
        "noise": {"beta": 0.02},
    })
    run_pipeline(cfg)


def main():
    if (FIXTURES / "hashes.json").exists():
        print("fixtures already present, skipping")
        return 0
    FIXTURES.mkdir(parents=True, exist_ok=True)
    write_synthetic("patient_001", "sequence_001", n=5)
    write_synthetic("patient_001", "sequence_002", n=1)  # single frame
    write_rendered()
    code = subprocess.call([sys.executable, "-m", "bronchosim.cli",
                            "validate", "--root", str(ROOT),
                            "--dump-hashes", str(FIXTURES / "hashes.json")])
    if code != 0:
        raise SystemExit(code)
    print(f"fixtures -> {ROOT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
