"""Bit-exact file formats: PFM, Middlebury .flo, binary PLY points, PNG."""

import struct
from pathlib import Path

import numpy as np
from PIL import Image

FLO_MAGIC = b"PIEH"


# ---------------------------------------------------------------------------
# PFM: "PF" (3-channel) / "Pf" (1-channel), little-endian via scale -1.0,
# scanlines stored bottom-to-top
# ---------------------------------------------------------------------------

def write_pfm(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    if array.ndim == 2:
        magic = b"Pf"
    elif array.ndim == 3 and array.shape[2] == 3:
        magic = b"PF"
    else:
        raise ValueError("PFM stores 1- or 3-channel images")
    h, w = array.shape[:2]
    data = array[::-1].astype("<f4")  # bottom-up rows
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{w} {h}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(data.tobytes())


def read_pfm(path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic not in (b"PF", b"Pf"):
            raise ValueError(f"{path}: bad PFM magic {magic!r} at offset 0")
        w, h = (int(t) for t in fh.readline().split())
        scale = float(fh.readline())
        channels = 3 if magic == b"PF" else 1
        count = w * h * channels
        dtype = "<f4" if scale < 0 else ">f4"
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise ValueError(f"{path}: truncated PFM body at offset "
                             f"{fh.tell() - len(raw)}: expected {count * 4} bytes, "
                             f"got {len(raw)}")
        data = np.frombuffer(raw, dtype=dtype).reshape(
            (h, w) if channels == 1 else (h, w, 3))
    return np.ascontiguousarray(data[::-1])


# ---------------------------------------------------------------------------
# Middlebury .flo: magic "PIEH", int32 width, int32 height, row-major
# float32 (u, v) pairs
# ---------------------------------------------------------------------------

def write_flo(path, flow: np.ndarray) -> None:
    flow = np.asarray(flow)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError("flow must be (H, W, 2)")
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(FLO_MAGIC)
        fh.write(struct.pack("<ii", w, h))
        fh.write(flow.astype("<f4").tobytes())


def read_flo(path) -> np.ndarray:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FLO_MAGIC:
            raise ValueError(f"{path}: bad .flo magic {magic!r} at offset 0")
        w, h = struct.unpack("<ii", fh.read(8))
        if w <= 0 or h <= 0 or w > 10 ** 6 or h > 10 ** 6:
            raise ValueError(f"{path}: implausible dimensions {w}x{h} at offset 4")
        count = w * h * 2
        raw = fh.read(count * 4)
        if len(raw) != count * 4:
            raise ValueError(f"{path}: truncated .flo body at offset "
                             f"{12 + len(raw)}: expected {count * 4} bytes, "
                             f"got {len(raw)}")
    return np.frombuffer(raw, dtype="<f4").reshape(h, w, 2).copy()


# ---------------------------------------------------------------------------
# binary little-endian PLY point clouds (x,y,z [+rgb] [+radius])
# ---------------------------------------------------------------------------

def write_ply_points(path, points: np.ndarray, colors: np.ndarray | None = None,
                     radii: np.ndarray | None = None) -> None:
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {n}",
              "property float x", "property float y", "property float z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    if radii is not None:
        header += ["property float radius"]
    header += ["end_header"]

    fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
    if colors is not None:
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    if radii is not None:
        fields += [("radius", "<f4")]
    rec = np.empty(n, dtype=np.dtype(fields))
    rec["x"] = points[:, 0]
    rec["y"] = points[:, 1]
    rec["z"] = points[:, 2]
    if colors is not None:
        colors = np.asarray(colors)
        rec["red"] = colors[:, 0]
        rec["green"] = colors[:, 1]
        rec["blue"] = colors[:, 2]
    if radii is not None:
        rec["radius"] = np.asarray(radii)
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(rec.tobytes())


def read_ply_points(path):
    """Returns (points (N,3) float32, colors (N,3) uint8 | None, radii | None)."""
    from ..geometry.mesh import read_ply
    content = read_ply(path)
    if "vertex" not in content:
        raise ValueError(f"{path}: PLY without vertex element")
    v = content["vertex"]
    pts = np.column_stack([v["x"], v["y"], v["z"]]).astype(np.float32)
    colors = None
    if "red" in v:
        colors = np.column_stack([v["red"], v["green"], v["blue"]]).astype(np.uint8)
    radii = v["radius"].astype(np.float32) if "radius" in v else None
    return pts, colors, radii


# ---------------------------------------------------------------------------
# PNG via Pillow (8-bit truecolor)
# ---------------------------------------------------------------------------

def write_png(path, rgb: np.ndarray) -> None:
    rgb = np.asarray(rgb)
    if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PNG writer expects (H, W, 3) uint8")
    Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))
