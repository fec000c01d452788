"""Sequence directory layout: writers, validating reader, manifest.

Layout per sequence:

    <root>/<patient>/<sequence>/
        rgb/frame_0000.png            depth/frame_0000.pfm
        surface_normals/frame_0000.pfm optical_flow/frame_0000.flo
        point_clouds/frame_0000.ply   calibration/camera_params.json
        metadata/{trajectory,timestamps,robot_config}.json
    <root>/<patient>/anatomy/{lung_model.obj, medial_axis.ply, ct_metadata.json}

Depth and normals are PFM rather than EXR: bit-exact, dependency-free;
readers dispatch on the extension recorded in the manifest.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..render.camera import CameraIntrinsics, matrix_to_quat, pose_matrix, quat_to_matrix
from ..render.frame import FrameBundle
from . import formats

log = logging.getLogger(__name__)

MODALITY_DIRS = ("rgb", "depth", "surface_normals", "optical_flow",
                 "point_clouds", "calibration", "metadata")
FORMAT_VERSIONS = {"rgb": "png-8bit", "depth": "pfm-f32", "surface_normals": "pfm-f32",
                   "optical_flow": "flo-v1", "point_clouds": "ply-binary-le",
                   "layout": 1}
QUAT_NORM_TOL = 1e-3
TIMESTEP = 0.1


@dataclass
class SequenceLayout:
    root: Path
    patient_id: str
    sequence_id: str

    def __post_init__(self):
        self.root = Path(self.root)

    @property
    def patient_dir(self) -> Path:
        return self.root / self.patient_id

    @property
    def sequence_dir(self) -> Path:
        return self.patient_dir / self.sequence_id

    @property
    def anatomy_dir(self) -> Path:
        return self.patient_dir / "anatomy"

    def modality_dir(self, name: str) -> Path:
        return self.sequence_dir / name

    def frame_name(self, index: int, ext: str) -> str:
        return f"frame_{index:04d}.{ext}"

    def make_dirs(self) -> None:
        for d in MODALITY_DIRS:
            self.modality_dir(d).mkdir(parents=True, exist_ok=True)

    def make_anatomy_dir(self) -> None:
        self.anatomy_dir.mkdir(parents=True, exist_ok=True)


def write_frame(layout: SequenceLayout, index: int, bundle: FrameBundle,
                force: bool = False) -> list:
    """Write one frame's modalities; refuses to overwrite without force."""
    if index < 0:
        raise ValueError("frame index must be >= 0")
    if bundle.rgb is None or bundle.depth is None or bundle.normals is None:
        raise ValueError("incomplete bundle: rgb, depth and normals are required")
    layout.make_dirs()

    targets = {
        "rgb": layout.modality_dir("rgb") / layout.frame_name(index, "png"),
        "depth": layout.modality_dir("depth") / layout.frame_name(index, "pfm"),
        "normals": layout.modality_dir("surface_normals") / layout.frame_name(index, "pfm"),
    }
    if bundle.flow is not None:
        targets["flow"] = layout.modality_dir("optical_flow") / layout.frame_name(index, "flo")
    if bundle.point_cloud is not None:
        targets["cloud"] = layout.modality_dir("point_clouds") / layout.frame_name(index, "ply")

    for path in targets.values():
        if path.exists() and not force:
            raise FileExistsError(f"{path} exists (use force to overwrite)")

    formats.write_png(targets["rgb"], bundle.rgb)
    formats.write_pfm(targets["depth"], bundle.depth)
    formats.write_pfm(targets["normals"], bundle.normals)
    if "flow" in targets:
        formats.write_flo(targets["flow"], bundle.flow)
    if "cloud" in targets:
        formats.write_ply_points(targets["cloud"], bundle.point_cloud,
                                 bundle.point_colors)
    return sorted(str(p) for p in targets.values())


def _pose_to_record(rotation: np.ndarray, translation: np.ndarray) -> dict:
    return {"quaternion_wxyz": matrix_to_quat(rotation).tolist(),
            "translation_xyz": np.asarray(translation, dtype=float).tolist()}


def write_sequence_metadata(layout: SequenceLayout, trajectory, cam: CameraIntrinsics,
                            robot_params=None, seed: int | None = None) -> list:
    """camera_params/trajectory/timestamps(/robot_config) JSON files.

    `trajectory` is a list of dict entries {frame_id, t_sec, pose(R, t),
    optional q_cmd/q_eff arrays} or a robot TrajectoryLog.
    """
    layout.make_dirs()
    entries = _trajectory_entries(trajectory)
    n_frames = len(list(layout.modality_dir("rgb").glob("frame_*.png")))
    if n_frames and n_frames != len(entries):
        raise ValueError(f"trajectory has {len(entries)} entries but "
                         f"{n_frames} frames are on disk")

    written = []
    cal = layout.modality_dir("calibration") / "camera_params.json"
    cal.write_text(json.dumps(cam.to_dict(), indent=2))
    written.append(cal)

    meta = layout.modality_dir("metadata")
    traj_doc = []
    for e in entries:
        rec = {"frame_id": e["frame_id"], "t_sec": e["t_sec"],
               "pose": _pose_to_record(e["rotation"], e["translation"])}
        if e.get("q_cmd") is not None:
            rec["q_cmd"] = list(e["q_cmd"])
        if e.get("q_eff") is not None:
            rec["q_eff"] = list(e["q_eff"])
        traj_doc.append(rec)
    (meta / "trajectory.json").write_text(json.dumps(traj_doc, indent=2))
    written.append(meta / "trajectory.json")

    ts = [e["t_sec"] for e in entries]
    (meta / "timestamps.json").write_text(json.dumps(ts))
    written.append(meta / "timestamps.json")

    if robot_params is not None:
        doc = robot_params.to_dict()
        if seed is not None:
            doc["seed"] = seed
        (meta / "robot_config.json").write_text(json.dumps(doc, indent=2))
        written.append(meta / "robot_config.json")
    return [str(p) for p in written]


def _trajectory_entries(trajectory) -> list:
    entries = []
    if hasattr(trajectory, "entries"):  # robot TrajectoryLog
        for e in trajectory.entries:
            entries.append({"frame_id": e.frame_id, "t_sec": e.t_sec,
                            "rotation": e.rotation, "translation": e.position,
                            "q_cmd": e.q_cmd.as_array().tolist(),
                            "q_eff": e.q_eff.as_array().tolist()})
        return entries
    for e in trajectory:
        entries.append({"q_cmd": None, "q_eff": None, **e})
    return entries


def write_ct_metadata(layout: SequenceLayout, mask) -> Path:
    doc = {"source_mask_dims": list(mask.dims), "spacing": list(mask.spacing),
           "origin": list(mask.origin), "units": "m"}
    path = layout.anatomy_dir / "ct_metadata.json"
    layout.make_anatomy_dir()
    path.write_text(json.dumps(doc, indent=2))
    return path


# ---------------------------------------------------------------------------
# reading + validation
# ---------------------------------------------------------------------------

class SequenceReader:
    """Lazy, validating reader for one sequence directory."""

    def __init__(self, sequence_dir):
        self.sequence_dir = Path(sequence_dir)
        if not self.sequence_dir.is_dir():
            raise FileNotFoundError(self.sequence_dir)
        self.camera = self._read_camera()
        self.trajectory = self._read_trajectory()
        self.timestamps = self._read_timestamps()
        self.frame_indices = self._validate_frames()

    def _read_camera(self) -> CameraIntrinsics:
        path = self.sequence_dir / "calibration" / "camera_params.json"
        if not path.exists():
            raise FileNotFoundError(f"missing modality: {path}")
        return CameraIntrinsics.from_dict(json.loads(path.read_text()))

    def _read_trajectory(self) -> list:
        path = self.sequence_dir / "metadata" / "trajectory.json"
        if not path.exists():
            raise FileNotFoundError(f"missing modality: {path}")
        doc = json.loads(path.read_text())
        out = []
        for rec in doc:
            q = np.asarray(rec["pose"]["quaternion_wxyz"], dtype=float)
            norm = np.linalg.norm(q)
            if abs(norm - 1.0) > QUAT_NORM_TOL:
                raise ValueError(f"{path}: frame {rec['frame_id']} quaternion "
                                 f"norm {norm:.6f} outside tolerance")
            q = q / norm
            t = np.asarray(rec["pose"]["translation_xyz"], dtype=float)
            out.append({"frame_id": int(rec["frame_id"]),
                        "t_sec": float(rec["t_sec"]),
                        "pose": pose_matrix(quat_to_matrix(q), t),
                        "q_cmd": rec.get("q_cmd"), "q_eff": rec.get("q_eff")})
        return out

    def _read_timestamps(self) -> np.ndarray:
        path = self.sequence_dir / "metadata" / "timestamps.json"
        if not path.exists():
            raise FileNotFoundError(f"missing modality: {path}")
        ts = np.asarray(json.loads(path.read_text()), dtype=float)
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            raise ValueError(f"{path}: timestamps are not strictly increasing")
        return ts

    def _validate_frames(self) -> list:
        rgb_dir = self.sequence_dir / "rgb"
        if not rgb_dir.is_dir():
            raise FileNotFoundError(f"missing modality: {rgb_dir}")
        indices = []
        for p in sorted(rgb_dir.iterdir()):
            if p.name.startswith("frame_") and p.suffix == ".png" \
                    and len(p.stem) == len("frame_0000"):
                indices.append(int(p.stem.split("_")[1]))
            else:
                log.warning("ignoring unexpected file %s", p)
        if not indices:
            raise ValueError(f"{rgb_dir}: no frames found")
        if indices != list(range(len(indices))):
            raise ValueError(f"{rgb_dir}: frame indices are not contiguous from 0")
        n = len(indices)
        for i in indices:
            for sub, ext in (("depth", "pfm"), ("surface_normals", "pfm")):
                p = self.sequence_dir / sub / f"frame_{i:04d}.{ext}"
                if not p.exists():
                    raise FileNotFoundError(f"missing modality: {p}")
        for i in indices:
            p = self.sequence_dir / "optical_flow" / f"frame_{i:04d}.flo"
            if i < n - 1 and not p.exists():
                raise FileNotFoundError(f"missing modality: {p}")
            if i == n - 1 and p.exists():
                raise ValueError(f"{p}: flow must be absent for the last frame")
        if len(self.trajectory) != n:
            raise ValueError(f"trajectory has {len(self.trajectory)} entries "
                             f"for {n} frames")
        if len(self.timestamps) != n:
            raise ValueError(f"timestamps has {len(self.timestamps)} entries "
                             f"for {n} frames")
        # unexpected extra files elsewhere are tolerated with a warning
        for sub in MODALITY_DIRS:
            d = self.sequence_dir / sub
            if not d.is_dir():
                continue
            for p in d.iterdir():
                if p.is_dir():
                    log.warning("ignoring unexpected directory %s", p)
        return indices

    def __len__(self) -> int:
        return len(self.frame_indices)

    def frame(self, index: int) -> FrameBundle:
        sd = self.sequence_dir
        rgb = formats.read_png(sd / "rgb" / f"frame_{index:04d}.png")
        depth = formats.read_pfm(sd / "depth" / f"frame_{index:04d}.pfm")
        normals = formats.read_pfm(sd / "surface_normals" / f"frame_{index:04d}.pfm")
        flow = None
        flow_path = sd / "optical_flow" / f"frame_{index:04d}.flo"
        if flow_path.exists():
            flow = formats.read_flo(flow_path)
        cloud = colors = None
        cloud_path = sd / "point_clouds" / f"frame_{index:04d}.ply"
        if cloud_path.exists():
            cloud, colors, _ = formats.read_ply_points(cloud_path)
        rec = self.trajectory[index]
        return FrameBundle(rgb=rgb, depth=depth, normals=normals,
                           pose=rec["pose"], timestamp=rec["t_sec"],
                           flow=flow, point_cloud=cloud, point_colors=colors)

    def __iter__(self):
        for i in self.frame_indices:
            yield self.frame(i)


def read_sequence(sequence_dir) -> SequenceReader:
    return SequenceReader(sequence_dir)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

def _layout_manifest() -> dict:
    # repo checkout: docs/ next to src/; installed wheel: package copy
    for candidate in (Path(__file__).resolve().parents[3] / "docs" / "layout_manifest.json",
                      Path(__file__).resolve().parent / "layout_manifest.json"):
        if candidate.exists():
            return json.loads(candidate.read_text())
    raise FileNotFoundError("layout_manifest.json not found")


def validate_against_manifest(sequence_dir) -> list:
    """Check a sequence directory against the shipped layout manifest.

    Returns the list of violations (empty = valid).
    """
    sequence_dir = Path(sequence_dir)
    rules = _layout_manifest()["sequence"]
    problems = []
    for d in rules["required_dirs"]:
        if not (sequence_dir / d).is_dir():
            problems.append(f"missing directory {d}/")
    if problems:
        return problems

    import re
    pattern = re.compile(rules["frame_pattern"] + r"\.png$")
    frames = sorted(p.name for p in (sequence_dir / "rgb").iterdir()
                    if pattern.match(p.name))
    n = len(frames)
    if n == 0:
        return ["no frames matching the manifest pattern"]
    for name, rule in rules["modalities"].items():
        if rule["per_frame"] == "optional":
            continue
        last = n - 1 if rule["per_frame"] == "all_but_last" else n
        for i in range(last):
            p = sequence_dir / name / f"frame_{i:04d}.{rule['ext']}"
            if not p.exists():
                problems.append(f"missing {p.relative_to(sequence_dir)}")
    for f in rules["calibration_files"]:
        if not (sequence_dir / "calibration" / f).exists():
            problems.append(f"missing calibration/{f}")
    for f in rules["metadata_files"]["required"]:
        if not (sequence_dir / "metadata" / f).exists():
            problems.append(f"missing metadata/{f}")
    return problems


def write_manifest(root) -> Path:
    """Scan a dataset root and write room_manifest.json."""
    root = Path(root)
    patients = {}
    for pdir in sorted(root.iterdir()):
        if not pdir.is_dir():
            continue
        sequences = {}
        for sdir in sorted(pdir.iterdir()):
            if not sdir.is_dir() or sdir.name == "anatomy":
                continue
            rgb = sdir / "rgb"
            n = len(list(rgb.glob("frame_*.png"))) if rgb.is_dir() else 0
            sequences[sdir.name] = {"frames": n}
        if sequences or (pdir / "anatomy").is_dir():
            patients[pdir.name] = {"sequences": sequences}
    doc = {"format_versions": FORMAT_VERSIONS, "patients": patients}
    path = root / "room_manifest.json"
    path.write_text(json.dumps(doc, indent=2))
    return path
