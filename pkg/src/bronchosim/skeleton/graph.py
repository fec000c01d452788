"""Centerline graph construction from medial point clouds.

Pipeline: greedy radius-proportional covering -> proximity edges ->
largest component -> minimum spanning tree (drops the longest edge of any
loop) -> leaf-spur pruning -> junction merging -> degree-2 chain collapse.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree

from .medial import MedialPointSet

log = logging.getLogger(__name__)

BIN_FACTOR = 0.5     # covering radius = BIN_FACTOR * local radius
LINK_FACTOR = 1.5    # edge if dist <= LINK_FACTOR * (bin_i + bin_j)

ENDPOINT = "endpoint"
BIFURCATION = "bifurcation"
INTERNAL = "internal"


@dataclass
class SkeletonNode:
    index: int
    position: np.ndarray
    kind: str
    radius: float


@dataclass
class SkeletonBranch:
    node_a: int
    node_b: int
    points: np.ndarray   # (M,3) polyline, points[0] at node_a
    radii: np.ndarray    # (M,)
    length: float


@dataclass
class SkeletonGraph:
    nodes: list = field(default_factory=list)
    branches: list = field(default_factory=list)
    discarded_fraction: float = 0.0

    def degree(self, node_index: int) -> int:
        return sum(1 for b in self.branches
                   if node_index in (b.node_a, b.node_b))

    def endpoints(self):
        return [n for n in self.nodes if n.kind == ENDPOINT]

    def bifurcations(self):
        return [n for n in self.nodes if n.kind == BIFURCATION]

    def neighbors(self, node_index: int):
        out = []
        for bi, b in enumerate(self.branches):
            if b.node_a == node_index:
                out.append((b.node_b, bi))
            elif b.node_b == node_index:
                out.append((b.node_a, bi))
        return out

    def to_json(self, path=None) -> str:
        doc = {
            "nodes": [{"id": n.index, "position": n.position.tolist(),
                       "kind": n.kind, "radius": n.radius} for n in self.nodes],
            "branches": [{"a": b.node_a, "b": b.node_b,
                          "points": b.points.tolist(),
                          "radii": b.radii.tolist(),
                          "length": b.length} for b in self.branches],
            "discarded_fraction": self.discarded_fraction,
        }
        text = json.dumps(doc, indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text_or_path) -> "SkeletonGraph":
        p = Path(str(text_or_path))
        doc = json.loads(p.read_text() if p.exists() else text_or_path)
        g = cls(discarded_fraction=doc.get("discarded_fraction", 0.0))
        g.nodes = [SkeletonNode(n["id"], np.array(n["position"]), n["kind"],
                                n["radius"]) for n in doc["nodes"]]
        g.branches = [SkeletonBranch(b["a"], b["b"], np.array(b["points"]),
                                     np.array(b["radii"]), b["length"])
                      for b in doc["branches"]]
        return g


def _greedy_cover(points: np.ndarray, radii: np.ndarray):
    """Cluster by descending radius; covering radius scales with |phi|."""
    order = np.argsort(-radii, kind="stable")
    tree = cKDTree(points)
    covered = np.zeros(len(points), dtype=bool)
    centers = []
    center_radii = []
    for i in order:
        if covered[i]:
            continue
        members = tree.query_ball_point(points[i], BIN_FACTOR * radii[i])
        members = [m for m in members if not covered[m]]
        covered[members] = True
        centers.append(points[members].mean(axis=0))
        center_radii.append(float(radii[members].mean()))
    return np.array(centers), np.array(center_radii)


def _polyline_length(pts: np.ndarray) -> float:
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


class _Chains:
    """Mutable adjacency of cluster indices during simplification."""

    def __init__(self, n, edges):
        self.adj = {i: set() for i in range(n)}
        for a, b in edges:
            self.adj[a].add(b)
            self.adj[b].add(a)

    def degree(self, i):
        return len(self.adj[i])

    def remove_path(self, path):
        for a, b in zip(path[:-1], path[1:]):
            self.adj[a].discard(b)
            self.adj[b].discard(a)
        for v in path[1:-1]:
            self.adj.pop(v, None)
        # drop isolated leaf tip
        if path[0] in self.adj and not self.adj[path[0]]:
            self.adj.pop(path[0])

    def walk_chain(self, start, first):
        """Follow degree-2 vertices from junction/leaf `start` through `first`."""
        path = [start, first]
        prev, cur = start, first
        while self.degree(cur) == 2:
            nxt = next(v for v in self.adj[cur] if v != prev)
            path.append(nxt)
            prev, cur = cur, nxt
        return path


def build_centerline_graph(medial: MedialPointSet, prune_length: float = 2e-3,
                           junction_merge: float | None = None,
                           sdf=None) -> SkeletonGraph:
    """Reduce a medial point cloud to a branch/node skeleton tree.

    When the source SDF is provided, the collapsed polylines are recentered
    on it (cluster means cut corners at junctions otherwise) and the radii
    are refreshed from |phi|.
    """
    if len(medial) < 2:
        raise ValueError("insufficient extent: need at least 2 medial points")
    centers, radii = _greedy_cover(medial.points, medial.radii)
    if len(centers) < 2:
        raise ValueError("insufficient extent: medial points collapse to one cluster")
    if junction_merge is None:
        junction_merge = prune_length

    # proximity edges
    tree = cKDTree(centers)
    rows, cols, vals = [], [], []
    for i in range(len(centers)):
        link = LINK_FACTOR * BIN_FACTOR * 2.0 * radii[i]
        for j in tree.query_ball_point(centers[i], link):
            if j <= i:
                continue
            d = np.linalg.norm(centers[i] - centers[j])
            if d <= LINK_FACTOR * BIN_FACTOR * (radii[i] + radii[j]):
                rows.append(i)
                cols.append(j)
                vals.append(d)
    if not rows:
        raise ValueError("insufficient extent: no proximity links between clusters")
    adj = coo_matrix((vals, (rows, cols)), shape=(len(centers), len(centers)))

    n_comp, labels = connected_components(adj, directed=False)
    if n_comp > 1:
        sizes = np.bincount(labels)
        keep = np.argmax(sizes)
        frac = 1.0 - sizes[keep] / len(centers)
        log.warning("skeleton: %d disconnected cluster group(s); "
                    "kept largest, discarded %.1f%%", n_comp - 1, 100 * frac)
    else:
        keep = 0
        frac = 0.0

    mask = labels == keep
    remap = -np.ones(len(centers), dtype=int)
    remap[mask] = np.arange(mask.sum())
    centers = centers[mask]
    radii = radii[mask]
    sub_rows, sub_cols, sub_vals = [], [], []
    for r, c, v in zip(rows, cols, vals):
        if remap[r] >= 0 and remap[c] >= 0:
            sub_rows.append(remap[r])
            sub_cols.append(remap[c])
            sub_vals.append(v)
    n = len(centers)
    if len(sub_vals) > n - 1:
        log.warning("skeleton: %d loop edge(s) broken at longest edge",
                    len(sub_vals) - (n - 1))
    sub = coo_matrix((sub_vals, (sub_rows, sub_cols)), shape=(n, n))
    mst = minimum_spanning_tree(sub).tocoo()
    edges = list(zip(mst.row.tolist(), mst.col.tolist()))

    chains = _Chains(n, edges)
    _prune_spurs(chains, centers, prune_length)
    _merge_junctions(chains, centers, junction_merge)

    graph = _collapse_chains(chains, centers, radii)
    graph.discarded_fraction = float(frac)
    if not graph.branches:
        raise ValueError("insufficient extent: skeleton pruned to nothing")
    if sdf is not None:
        _recenter_on_sdf(graph, sdf)
    return graph


def _recenter_on_sdf(graph: SkeletonGraph, sdf, rounds: int = 12):
    """Pull polyline vertices to the local depth maximum of the SDF.

    Interior vertices move only perpendicular to the local tangent; node
    positions descend the full gradient (junction centers live at local
    minima of phi). Radii are refreshed from |phi| afterwards.
    """
    from ..geometry import kernels

    vals = sdf.values
    org = sdf._origin_arr
    spc = sdf._spacing_arr
    eta = 0.35 * min(sdf.spacing)

    def grad(p):
        return np.array(kernels.grid_gradient(vals, org, spc, p[0], p[1], p[2]))

    def phi(p):
        return kernels.grid_sample(vals, org, spc, p[0], p[1], p[2])

    for node in graph.nodes:
        p = node.position
        for _ in range(rounds):
            g = grad(p)
            n = np.linalg.norm(g)
            if n < 1e-9:
                break
            p = p - eta * g / n
        node.position = p
        node.radius = float(max(-phi(p), 0.0))

    for br in graph.branches:
        pts = br.points.copy()
        pts[0] = graph.nodes[br.node_a].position
        pts[-1] = graph.nodes[br.node_b].position
        for _ in range(rounds):
            if len(pts) < 3:
                break
            t = np.gradient(pts, axis=0)
            t /= np.maximum(np.linalg.norm(t, axis=1)[:, None], 1e-12)
            for i in range(1, len(pts) - 1):
                g = grad(pts[i])
                g_perp = g - (g @ t[i]) * t[i]
                n = np.linalg.norm(g_perp)
                if n > 1e-9:
                    pts[i] = pts[i] - eta * g_perp / n
        br.points = pts
        br.radii = np.array([max(-phi(p), 0.0) for p in pts])
        br.length = _polyline_length(pts)


def _prune_spurs(chains: _Chains, centers, prune_length):
    """Iteratively delete leaf chains shorter than prune_length."""
    changed = True
    while changed:
        changed = False
        leaves = [v for v in list(chains.adj) if chains.degree(v) == 1]
        for leaf in leaves:
            if leaf not in chains.adj or chains.degree(leaf) != 1:
                continue
            path = chains.walk_chain(leaf, next(iter(chains.adj[leaf])))
            # only spurs hanging off a junction are candidates
            if chains.degree(path[-1]) < 3:
                continue
            if _polyline_length(centers[path]) < prune_length:
                chains.remove_path(path)
                changed = True


def _merge_junctions(chains: _Chains, centers, merge_length):
    """Contract short junction-junction chains left by medial sheets."""
    changed = True
    while changed:
        changed = False
        junctions = [v for v in list(chains.adj) if chains.degree(v) >= 3]
        for j in junctions:
            if j not in chains.adj or chains.degree(j) < 3:
                continue
            for first in list(chains.adj[j]):
                path = chains.walk_chain(j, first)
                other = path[-1]
                if other == j or other not in chains.adj:
                    continue
                if chains.degree(other) < 3:
                    continue
                if _polyline_length(centers[path]) >= merge_length:
                    continue
                # contract: other's other neighbours reattach to j
                chains.remove_path(path)
                if other in chains.adj:
                    for nb in list(chains.adj[other]):
                        chains.adj[nb].discard(other)
                        if nb != j:
                            chains.adj[nb].add(j)
                            chains.adj[j].add(nb)
                    chains.adj.pop(other)
                changed = True
                break


def _collapse_chains(chains: _Chains, centers, radii) -> SkeletonGraph:
    junction_or_leaf = [v for v in chains.adj if chains.degree(v) != 2]
    if not junction_or_leaf:
        # pure cycle remnant: pick an arbitrary anchor
        junction_or_leaf = [next(iter(chains.adj))]

    node_index = {}
    graph = SkeletonGraph()

    def node_for(v):
        if v not in node_index:
            deg = chains.degree(v)
            kind = ENDPOINT if deg <= 1 else (BIFURCATION if deg >= 3 else INTERNAL)
            node_index[v] = len(graph.nodes)
            graph.nodes.append(SkeletonNode(node_index[v], centers[v].copy(),
                                            kind, float(radii[v])))
        return node_index[v]

    seen_edges = set()
    for v in junction_or_leaf:
        for first in chains.adj[v]:
            path = chains.walk_chain(v, first)
            key = (min(path[0], path[-1]), max(path[0], path[-1]),
                   min(path[1], path[-2]), max(path[1], path[-2]))
            if key in seen_edges:
                continue
            seen_edges.add(key)
            a = node_for(path[0])
            b = node_for(path[-1])
            pts = centers[path]
            graph.branches.append(SkeletonBranch(
                node_a=a, node_b=b, points=pts, radii=radii[path],
                length=_polyline_length(pts)))
    return graph
