from .pose import PoseSet, PoseMetrics, PairErrors, pair_errors, pose_metrics
from .depth import DepthEvalPair, DepthMetrics, depth_metrics, median_scale_align
from .report import write_pose_report, write_depth_report

__all__ = [
    "PoseSet", "PoseMetrics", "PairErrors", "pair_errors", "pose_metrics",
    "DepthEvalPair", "DepthMetrics", "depth_metrics", "median_scale_align",
    "write_pose_report", "write_depth_report",
]
