"""Monocular depth evaluation: L1, AbsRel, RMSE and delta accuracies."""

from dataclasses import dataclass

import numpy as np


@dataclass
class DepthEvalPair:
    predicted: np.ndarray
    ground_truth: np.ndarray
    mask: np.ndarray | None = None   # defaults to gt finite and > 0

    def __post_init__(self):
        self.predicted = np.asarray(self.predicted, dtype=np.float64)
        self.ground_truth = np.asarray(self.ground_truth, dtype=np.float64)
        if self.predicted.shape != self.ground_truth.shape:
            raise ValueError("prediction and ground truth must match in shape")
        default = np.isfinite(self.ground_truth) & (self.ground_truth > 0)
        self.mask = default if self.mask is None else (np.asarray(self.mask, bool) & default)
        if not self.mask.any():
            raise ValueError("empty evaluation mask")


@dataclass
class DepthMetrics:
    l1: float
    abs_rel: float
    rmse: float
    delta1: float
    delta2: float
    delta3: float

    def to_dict(self) -> dict:
        return {"L1": self.l1, "AbsRel": self.abs_rel, "RMSE": self.rmse,
                "delta1_pct": self.delta1, "delta2_pct": self.delta2,
                "delta3_pct": self.delta3}


def median_scale_align(pred: np.ndarray, gt: np.ndarray,
                       mask: np.ndarray | None = None) -> np.ndarray:
    """Scale pred by median(gt)/median(pred) over the mask."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if mask is None:
        mask = np.isfinite(gt) & (gt > 0)
    if not np.any(mask):
        raise ValueError("empty mask")
    mp = np.median(pred[mask])
    if mp <= 0:
        raise ValueError("non-positive median prediction")
    return pred * (np.median(gt[mask]) / mp)


def depth_metrics(pair: DepthEvalPair) -> DepthMetrics:
    d_hat = pair.predicted[pair.mask]
    d = pair.ground_truth[pair.mask]
    err = d_hat - d
    ratio = np.maximum(d_hat / d, d / d_hat)
    return DepthMetrics(
        l1=float(np.mean(np.abs(err))),
        abs_rel=float(np.mean(np.abs(err) / d)),
        rmse=float(np.sqrt(np.mean(err ** 2))),
        delta1=100.0 * float(np.mean(ratio < 1.25)),
        delta2=100.0 * float(np.mean(ratio < 1.25 ** 2)),
        delta3=100.0 * float(np.mean(ratio < 1.25 ** 3)),
    )
