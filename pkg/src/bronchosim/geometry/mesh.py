"""Triangle meshes: OBJ/PLY ingestion, cleanup and Laplacian smoothing."""

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12
# CT exports are frequently in millimeters; anything with a >10 m bounding
# box diagonal is assumed to be one of them.
MM_DIAGONAL_THRESHOLD = 10.0


@dataclass
class TriangleMesh:
    """Indexed triangle mesh in meters.

    vertices: (V,3) float64, triangles: (T,3) int64, normals: optional
    per-vertex unit normals (derived lazily when absent).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray | None = None
    watertight: bool = field(default=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.triangles.size and self.triangles.max() >= len(self.vertices):
            raise ValueError("triangle index out of range")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_corners(self):
        """(a, b, c) corner arrays, each (T,3)."""
        v, t = self.vertices, self.triangles
        return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    def face_areas(self) -> np.ndarray:
        a, b, c = self.triangle_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def aabb(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted per-vertex normals (cached)."""
        if self.normals is None:
            a, b, c = self.triangle_corners()
            fn = np.cross(b - a, c - a)  # length = 2*area, weights itself
            n = np.zeros_like(self.vertices)
            for k in range(3):
                np.add.at(n, self.triangles[:, k], fn)
            lengths = np.linalg.norm(n, axis=1)
            lengths[lengths == 0] = 1.0
            self.normals = n / lengths[:, None]
        return self.normals


def signed_volume(mesh: TriangleMesh) -> float:
    """Divergence-theorem volume; positive for outward-wound closed meshes."""
    a, b, c = mesh.triangle_corners()
    return float(np.einsum("ij,ij->", a, np.cross(b, c)) / 6.0)


def _edge_counts(triangles: np.ndarray):
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e = np.sort(e, axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return counts


def is_edge_manifold_closed(mesh: TriangleMesh) -> bool:
    """True iff every edge is shared by exactly two triangles."""
    if mesh.n_triangles == 0:
        return False
    return bool(np.all(_edge_counts(mesh.triangles) == 2))


def clean_mesh(vertices: np.ndarray, triangles: np.ndarray) -> TriangleMesh:
    """Drop degenerate faces (area <= 1e-12 m^2) and set the watertight flag."""
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    if len(vertices) == 0 or len(triangles) == 0:
        raise ValueError("empty mesh")
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    keep = areas > DEGENERATE_AREA
    dropped = int((~keep).sum())
    if dropped:
        log.warning("removed %d degenerate face(s)", dropped)
        triangles = triangles[keep]
    if len(triangles) == 0:
        raise ValueError("empty mesh after degenerate-face removal")
    mesh = TriangleMesh(vertices, triangles)
    mesh.watertight = is_edge_manifold_closed(mesh)
    return mesh


def _maybe_rescale_units(mesh: TriangleMesh, path: Path) -> TriangleMesh:
    sidecar = path.with_suffix(path.suffix + ".json")
    units = None
    if sidecar.exists():
        try:
            units = json.loads(sidecar.read_text()).get("units")
        except (OSError, json.JSONDecodeError):
            log.warning("unreadable metadata sidecar %s, ignored", sidecar)
    if units == "mm" or units == "millimeters":
        mesh.vertices *= 1e-3
        return mesh
    if units in ("m", "meters"):
        return mesh
    lo, hi = mesh.aabb()
    if np.linalg.norm(hi - lo) > MM_DIAGONAL_THRESHOLD:
        log.warning("%s: bounding box diagonal > %g m, assuming millimeters and rescaling",
                    path.name, MM_DIAGONAL_THRESHOLD)
        mesh.vertices *= 1e-3
    return mesh


# ---------------------------------------------------------------------------
# OBJ
# ---------------------------------------------------------------------------

def _load_obj(path: Path):
    vertices = []
    faces = []
    with open(path, "r") as fh:
        for line in fh:
            if line.startswith("v "):
                parts = line.split()
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            elif line.startswith("f "):
                idx = []
                for tok in line.split()[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(vertices) + i)
                # fan-triangulate polygons
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
            # vn/vt/usemtl etc. are ignored; normals are rederived
    if not vertices or not faces:
        raise ValueError(f"{path}: no geometry found")
    return np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64)


def save_obj(mesh: TriangleMesh, path) -> None:
    path = Path(path)
    normals = mesh.vertex_normals()
    with open(path, "w") as fh:
        for v in mesh.vertices:
            fh.write(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}\n")
        for n in normals:
            fh.write(f"vn {n[0]:.6f} {n[1]:.6f} {n[2]:.6f}\n")
        for t in mesh.triangles:
            fh.write(f"f {t[0]+1}//{t[0]+1} {t[1]+1}//{t[1]+1} {t[2]+1}//{t[2]+1}\n")


# ---------------------------------------------------------------------------
# PLY (ASCII + binary little-endian)
# ---------------------------------------------------------------------------

_PLY_TYPES = {
    "char": "b", "int8": "b", "uchar": "B", "uint8": "B",
    "short": "h", "int16": "h", "ushort": "H", "uint16": "H",
    "int": "i", "int32": "i", "uint": "I", "uint32": "I",
    "float": "f", "float32": "f", "double": "d", "float64": "d",
}


def _parse_ply_header(fh):
    if fh.readline().strip() != b"ply":
        raise ValueError("not a PLY file")
    fmt = None
    elements = []  # (name, count, [(prop_name, type, list_count_type|None)])
    while True:
        line = fh.readline()
        if not line:
            raise ValueError("unterminated PLY header")
        tokens = line.decode("ascii").strip().split()
        if not tokens:
            continue
        if tokens[0] == "format":
            fmt = tokens[1]
        elif tokens[0] == "element":
            elements.append((tokens[1], int(tokens[2]), []))
        elif tokens[0] == "property":
            if tokens[1] == "list":
                elements[-1][2].append((tokens[4], tokens[3], tokens[2]))
            else:
                elements[-1][2].append((tokens[2], tokens[1], None))
        elif tokens[0] == "end_header":
            break
    if fmt not in ("ascii", "binary_little_endian"):
        raise ValueError(f"unsupported PLY format {fmt!r}")
    return fmt, elements


def read_ply(path):
    """Read a PLY file into {element: {property: array}}."""
    path = Path(path)
    with open(path, "rb") as fh:
        fmt, elements = _parse_ply_header(fh)
        out = {}
        for name, count, props in elements:
            if fmt == "ascii":
                out[name] = _read_ply_ascii_element(fh, count, props)
            else:
                out[name] = _read_ply_binary_element(fh, count, props)
    return out


def _read_ply_ascii_element(fh, count, props):
    data = {p[0]: [] for p in props}
    for _ in range(count):
        tokens = fh.readline().decode("ascii").split()
        pos = 0
        for pname, ptype, list_count in props:
            if list_count is None:
                val = float(tokens[pos]) if ptype in ("float", "float32", "double", "float64") \
                    else int(tokens[pos])
                data[pname].append(val)
                pos += 1
            else:
                n = int(tokens[pos])
                pos += 1
                data[pname].append([int(t) for t in tokens[pos:pos + n]])
                pos += n
    return {k: (np.array(v) if not isinstance(v[0], list) else v) for k, v in data.items()}


def _read_ply_binary_element(fh, count, props):
    if all(p[2] is None for p in props):
        fmt = "<" + "".join(_PLY_TYPES[p[1]] for p in props)
        size = struct.calcsize(fmt)
        raw = fh.read(size * count)
        if len(raw) != size * count:
            raise ValueError("truncated PLY element")
        rows = list(struct.iter_unpack(fmt, raw))
        arr = np.array(rows)
        return {p[0]: arr[:, i] for i, p in enumerate(props)}
    data = {p[0]: [] for p in props}
    for _ in range(count):
        for pname, ptype, list_count in props:
            if list_count is None:
                (val,) = struct.unpack("<" + _PLY_TYPES[ptype],
                                       fh.read(struct.calcsize(_PLY_TYPES[ptype])))
                data[pname].append(val)
            else:
                (n,) = struct.unpack("<" + _PLY_TYPES[list_count],
                                     fh.read(struct.calcsize(_PLY_TYPES[list_count])))
                item = struct.unpack("<" + _PLY_TYPES[ptype] * n,
                                     fh.read(struct.calcsize(_PLY_TYPES[ptype]) * n))
                data[pname].append(list(item))
    return {k: (np.array(v) if v and not isinstance(v[0], list) else v)
            for k, v in data.items()}


def _load_ply_mesh(path: Path):
    content = read_ply(path)
    if "vertex" not in content:
        raise ValueError(f"{path}: PLY without vertex element")
    vert = content["vertex"]
    vertices = np.column_stack([vert["x"], vert["y"], vert["z"]]).astype(np.float64)
    if "face" not in content:
        raise ValueError(f"{path}: PLY without face element (point clouds are not meshes)")
    face_prop = content["face"]
    key = "vertex_indices" if "vertex_indices" in face_prop else "vertex_index"
    faces = []
    for poly in face_prop[key]:
        for k in range(1, len(poly) - 1):
            faces.append([poly[0], poly[k], poly[k + 1]])
    return vertices, np.array(faces, dtype=np.int64)


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def load_mesh(path) -> TriangleMesh:
    """Load an OBJ or PLY mesh, clean it, and normalize units to meters."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        vertices, triangles = _load_obj(path)
    elif suffix == ".ply":
        vertices, triangles = _load_ply_mesh(path)
    else:
        raise ValueError(f"unsupported mesh format {suffix!r}")
    mesh = clean_mesh(vertices, triangles)
    return _maybe_rescale_units(mesh, path)


def laplacian_smooth(mesh: TriangleMesh, iterations: int = 10,
                     lam: float = 0.5) -> TriangleMesh:
    """Move each vertex toward its 1-ring centroid by factor lam per pass.

    Topology is untouched; isolated vertices stay fixed.
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must be in (0, 1]")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    v = mesh.vertices.copy()
    tri = mesh.triangles

    # symmetric 1-ring adjacency; the ring includes the vertex itself, so a
    # lam = 1 pass sends every vertex of a regular simplex to the shared centroid
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    degree = np.zeros(len(v))
    np.add.at(degree, src, 1.0)
    movable = degree > 0
    ring_size = np.where(movable, degree, 0.0) + 1.0

    for _ in range(iterations):
        acc = v.copy()
        np.add.at(acc, src, v[dst])
        centroid = acc / ring_size[:, None]
        v[movable] += lam * (centroid[movable] - v[movable])

    out = TriangleMesh(v, tri.copy())
    out.watertight = mesh.watertight
    return out
