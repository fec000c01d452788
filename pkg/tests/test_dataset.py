import numpy as np
import pytest

from bronchosim.dataset import (SequenceLayout, read_flo, read_pfm,
                                read_ply_points, read_sequence, write_flo,
                                write_frame, write_manifest, write_pfm,
                                write_ply_points, write_sequence_metadata)
from bronchosim.render import CameraIntrinsics, FrameBundle
from bronchosim.robot import RobotParams


# -- raw formats ---------------------------------------------------------------

def test_pfm_depth_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    depth = rng.random((24, 32)).astype(np.float64) * 0.05
    depth[3, 4] = np.inf
    p = tmp_path / "d.pfm"
    write_pfm(p, depth)
    back = read_pfm(p)
    assert back.dtype == np.float32
    assert np.array_equal(back, depth.astype(np.float32))


def test_pfm_normals_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    normals = rng.standard_normal((16, 16, 3)).astype(np.float32)
    p = tmp_path / "n.pfm"
    write_pfm(p, normals)
    assert np.array_equal(read_pfm(p), normals)


def test_flo_round_trip_and_byte_count(tmp_path):
    flow = np.zeros((2, 2, 2), dtype=np.float32)
    p = tmp_path / "f.flo"
    write_flo(p, flow)
    # magic (4) + two int32 dims (8) + 2*2 pixels * 2 float32 (32)
    assert p.stat().st_size == 4 + 8 + 2 * 2 * 2 * 4
    assert np.array_equal(read_flo(p), flow)


def test_flo_bad_magic_names_offset(tmp_path):
    p = tmp_path / "bad.flo"
    p.write_bytes(b"XXXX" + b"\x00" * 24)
    with pytest.raises(ValueError, match="offset 0"):
        read_flo(p)


def test_flo_truncated_names_offset(tmp_path):
    flow = np.zeros((4, 4, 2), dtype=np.float32)
    p = tmp_path / "t.flo"
    write_flo(p, flow)
    data = p.read_bytes()
    p.write_bytes(data[:20])
    with pytest.raises(ValueError, match="truncated"):
        read_flo(p)


def test_ply_points_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((100, 3)).astype(np.float32)
    colors = rng.integers(0, 256, (100, 3)).astype(np.uint8)
    radii = rng.random(100).astype(np.float32)
    p = tmp_path / "cloud.ply"
    write_ply_points(p, pts, colors, radii)
    bpts, bcolors, bradii = read_ply_points(p)
    assert np.array_equal(bpts, pts)
    assert np.array_equal(bcolors, colors)
    assert np.array_equal(bradii, radii)


# -- sequence layout -----------------------------------------------------------

def make_bundle(k, h=8, w=8, with_flow=True):
    rng = np.random.default_rng(k)
    pose = np.eye(4)
    pose[2, 3] = 0.001 * k
    return FrameBundle(
        rgb=rng.integers(0, 256, (h, w, 3)).astype(np.uint8),
        depth=(0.01 + rng.random((h, w)) * 0.02),
        normals=rng.standard_normal((h, w, 3)),
        pose=pose, timestamp=0.1 * k,
        flow=(rng.standard_normal((h, w, 2)).astype(np.float32)
              if with_flow else None),
        point_cloud=rng.standard_normal((20, 3)),
        point_colors=rng.integers(0, 256, (20, 3)).astype(np.uint8))


def write_test_sequence(root, n=5, patient="patient_001", seq="sequence_001"):
    layout = SequenceLayout(root, patient, seq)
    cam = CameraIntrinsics(width=8, height=8, fx=4, fy=4, cx=4, cy=4)
    traj = []
    for k in range(n):
        bundle = make_bundle(k, with_flow=(k < n - 1))
        write_frame(layout, k, bundle)
        traj.append({"frame_id": k, "t_sec": 0.1 * k,
                     "rotation": bundle.pose[:3, :3],
                     "translation": bundle.pose[:3, 3]})
    write_sequence_metadata(layout, traj, cam, RobotParams(), seed=7)
    return layout


def test_write_read_round_trip(tmp_path):
    layout = write_test_sequence(tmp_path, n=5)
    reader = read_sequence(layout.sequence_dir)
    assert len(reader) == 5
    for k, frame in enumerate(reader):
        ref = make_bundle(k, with_flow=(k < 4))
        assert np.array_equal(frame.rgb, ref.rgb)
        assert np.array_equal(frame.depth, ref.depth.astype(np.float32))
        assert np.array_equal(frame.normals, ref.normals.astype(np.float32))
        if k < 4:
            assert np.array_equal(frame.flow, ref.flow)
        else:
            assert frame.flow is None
        assert np.allclose(frame.pose, ref.pose, atol=1e-12)
        assert frame.timestamp == pytest.approx(0.1 * k)


def test_timestamps_ten_hz(tmp_path):
    layout = write_test_sequence(tmp_path, n=50)
    reader = read_sequence(layout.sequence_dir)
    assert reader.timestamps[0] == 0.0
    assert reader.timestamps[-1] == pytest.approx(4.9)
    assert np.allclose(np.diff(reader.timestamps), 0.1, atol=1e-12)


def test_refuses_overwrite_without_force(tmp_path):
    layout = SequenceLayout(tmp_path, "p", "s")
    write_frame(layout, 0, make_bundle(0, with_flow=False))
    with pytest.raises(FileExistsError):
        write_frame(layout, 0, make_bundle(0, with_flow=False))
    write_frame(layout, 0, make_bundle(0, with_flow=False), force=True)


def test_incomplete_bundle_rejected(tmp_path):
    layout = SequenceLayout(tmp_path, "p", "s")
    bundle = make_bundle(0)
    bundle.normals = None
    with pytest.raises(ValueError, match="incomplete bundle"):
        write_frame(layout, 0, bundle)


def test_metadata_count_mismatch(tmp_path):
    layout = SequenceLayout(tmp_path, "p", "s")
    cam = CameraIntrinsics(width=8, height=8, fx=4, fy=4, cx=4, cy=4)
    for k in range(3):
        write_frame(layout, k, make_bundle(k, with_flow=(k < 2)))
    traj = [{"frame_id": k, "t_sec": 0.1 * k, "rotation": np.eye(3),
             "translation": np.zeros(3)} for k in range(2)]
    with pytest.raises(ValueError, match="trajectory"):
        write_sequence_metadata(layout, traj, cam)


def test_identity_pose_record(tmp_path):
    import json
    layout = SequenceLayout(tmp_path, "p", "s")
    write_frame(layout, 0, make_bundle(0, with_flow=False))
    traj = [{"frame_id": 0, "t_sec": 0.0, "rotation": np.eye(3),
             "translation": np.zeros(3)}]
    cam = CameraIntrinsics(width=8, height=8, fx=4, fy=4, cx=4, cy=4)
    write_sequence_metadata(layout, traj, cam)
    doc = json.loads((layout.modality_dir("metadata") / "trajectory.json").read_text())
    assert doc[0]["pose"]["quaternion_wxyz"] == [1.0, 0.0, 0.0, 0.0]
    assert doc[0]["pose"]["translation_xyz"] == [0.0, 0.0, 0.0]


def test_missing_depth_detected(tmp_path):
    layout = write_test_sequence(tmp_path, n=3)
    (layout.modality_dir("depth") / "frame_0001.pfm").unlink()
    with pytest.raises(FileNotFoundError, match="missing modality"):
        read_sequence(layout.sequence_dir)


def test_flow_on_last_frame_rejected(tmp_path):
    layout = write_test_sequence(tmp_path, n=3)
    write_flo(layout.modality_dir("optical_flow") / "frame_0002.flo",
              np.zeros((8, 8, 2), dtype=np.float32))
    with pytest.raises(ValueError, match="absent for the last frame"):
        read_sequence(layout.sequence_dir)


def test_bad_quaternion_rejected(tmp_path):
    import json
    layout = write_test_sequence(tmp_path, n=2)
    meta = layout.modality_dir("metadata") / "trajectory.json"
    doc = json.loads(meta.read_text())
    doc[0]["pose"]["quaternion_wxyz"] = [1.1, 0, 0, 0]
    meta.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="quaternion"):
        read_sequence(layout.sequence_dir)


def test_extra_files_warn_but_pass(tmp_path, caplog):
    layout = write_test_sequence(tmp_path, n=2)
    (layout.modality_dir("rgb") / "notes.txt").write_text("hi")
    with caplog.at_level("WARNING"):
        reader = read_sequence(layout.sequence_dir)
    assert len(reader) == 2
    assert any("unexpected" in r.message for r in caplog.records)


def test_manifest(tmp_path):
    import json
    write_test_sequence(tmp_path, n=2)
    write_test_sequence(tmp_path, n=3, seq="sequence_002")
    path = write_manifest(tmp_path)
    doc = json.loads(path.read_text())
    seqs = doc["patients"]["patient_001"]["sequences"]
    assert seqs["sequence_001"]["frames"] == 2
    assert seqs["sequence_002"]["frames"] == 3
    assert "format_versions" in doc


def test_layout_manifest_validation(tmp_path):
    from bronchosim.dataset import validate_against_manifest
    layout = write_test_sequence(tmp_path, n=3)
    assert validate_against_manifest(layout.sequence_dir) == []
    (layout.modality_dir("depth") / "frame_0001.pfm").unlink()
    problems = validate_against_manifest(layout.sequence_dir)
    assert any("frame_0001.pfm" in p for p in problems)
