from .medial import MedialPointSet, extract_medial_axis
from .graph import (SkeletonGraph, SkeletonNode, SkeletonBranch,
                    build_centerline_graph, ENDPOINT, BIFURCATION, INTERNAL)
from .waypoints import WaypointSequence, sample_waypoints, TICK

__all__ = [
    "MedialPointSet", "extract_medial_axis",
    "SkeletonGraph", "SkeletonNode", "SkeletonBranch", "build_centerline_graph",
    "ENDPOINT", "BIFURCATION", "INTERNAL",
    "WaypointSequence", "sample_waypoints", "TICK",
]
