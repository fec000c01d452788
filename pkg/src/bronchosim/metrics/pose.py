"""Multi-view pose metrics over relative transforms.

All metrics work on frame pairs, so a global rigid (or similarity) gauge
on either set cancels out. Relative translation is compared by direction
only: monocular trajectories carry no scale.
"""

from dataclasses import dataclass, field

import numpy as np

MIN_BASELINE = 1e-6  # m, gt pairs below this are excluded from RTA
AUC_MAX_DEG = 30
RRA_RTA_DEG = 5.0


@dataclass
class PoseSet:
    """Rigid transforms (world-from-camera) keyed by frame id."""

    rotations: np.ndarray    # (N,3,3)
    translations: np.ndarray  # (N,3)
    frame_ids: np.ndarray    # (N,)
    gauge_free: bool = True

    def __post_init__(self):
        self.rotations = np.asarray(self.rotations, dtype=float)
        self.translations = np.asarray(self.translations, dtype=float)
        self.frame_ids = np.asarray(self.frame_ids)
        if len(self.rotations) < 2:
            raise ValueError("need at least 2 poses")
        eye = np.eye(3)
        for R in self.rotations:
            if np.abs(R.T @ R - eye).max() > 1e-6:
                raise ValueError("rotation not orthonormal within 1e-6")

    @classmethod
    def from_matrices(cls, poses, frame_ids=None) -> "PoseSet":
        poses = np.asarray(poses, dtype=float)
        if frame_ids is None:
            frame_ids = np.arange(len(poses))
        return cls(poses[:, :3, :3], poses[:, :3, 3], frame_ids)

    def __len__(self):
        return len(self.rotations)


@dataclass
class PairErrors:
    rotation_deg: np.ndarray
    translation_deg: np.ndarray   # nan where baseline undefined
    n_excluded_translation: int = 0


@dataclass
class PoseMetrics:
    rra_at_5: float
    rta_at_5: float
    auc_at_30: float
    n_pairs: int
    n_excluded_translation: int
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"RRA@5deg": self.rra_at_5, "RTA@5deg": self.rta_at_5,
                "AUC@30deg": self.auc_at_30, "pairs": self.n_pairs,
                "excluded_translation_pairs": self.n_excluded_translation}


def _angle_deg(R: np.ndarray) -> float:
    c = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def _dir_angle_deg(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na < MIN_BASELINE or nb < MIN_BASELINE:
        return np.nan
    c = np.clip(a @ b / (na * nb), -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def pair_errors(pred: PoseSet, gt: PoseSet, windowed: int | None = None) -> PairErrors:
    """Relative rotation/translation errors over frame pairs.

    Pair (i, j): R_rel = R_i^T R_j, t_rel = R_i^T (t_j - t_i). Rotation
    error is the angle of R_rel_pred^T R_rel_gt; translation error is the
    angle between relative translation directions. `windowed` restricts
    pairs to |i - j| <= windowed (all pairs by default).
    """
    ids_p = {int(f): k for k, f in enumerate(pred.frame_ids)}
    ids_g = {int(f): k for k, f in enumerate(gt.frame_ids)}
    common = sorted(set(ids_p) & set(ids_g))
    if len(common) < 2:
        raise ValueError("need at least two common frame ids")

    rot_err = []
    trans_err = []
    excluded = 0
    for a in range(len(common)):
        for b in range(a + 1, len(common)):
            if windowed is not None and b - a > windowed:
                continue
            i, j = common[a], common[b]
            pi, pj = ids_p[i], ids_p[j]
            gi, gj = ids_g[i], ids_g[j]

            R_rel_p = pred.rotations[pi].T @ pred.rotations[pj]
            R_rel_g = gt.rotations[gi].T @ gt.rotations[gj]
            rot_err.append(_angle_deg(R_rel_p.T @ R_rel_g))

            t_rel_p = pred.rotations[pi].T @ (pred.translations[pj]
                                              - pred.translations[pi])
            t_rel_g = gt.rotations[gi].T @ (gt.translations[gj]
                                            - gt.translations[gi])
            if np.linalg.norm(t_rel_g) < MIN_BASELINE:
                excluded += 1
                trans_err.append(np.nan)
            else:
                trans_err.append(_dir_angle_deg(t_rel_p, t_rel_g))
    return PairErrors(np.asarray(rot_err), np.asarray(trans_err), excluded)


def pose_metrics(pred: PoseSet, gt: PoseSet,
                 windowed: int | None = None) -> PoseMetrics:
    """RRA@5, RTA@5 (percent) and AUC@30 over min(rot, trans) per pair."""
    errs = pair_errors(pred, gt, windowed)
    rot = errs.rotation_deg
    trans = errs.translation_deg

    rra = 100.0 * float(np.mean(rot < RRA_RTA_DEG))
    defined = ~np.isnan(trans)
    rta = 100.0 * float(np.mean(trans[defined] < RRA_RTA_DEG)) if defined.any() else 0.0

    # per-pair error for the accuracy curve; undefined translation falls
    # back to the rotation error alone
    combined = np.where(defined, np.fmin(rot, trans), rot)
    taus = np.arange(1, AUC_MAX_DEG + 1, dtype=float)
    acc = np.array([np.mean(combined < tau) for tau in taus])
    auc = 100.0 * float(acc.mean())

    return PoseMetrics(rra_at_5=rra, rta_at_5=rta, auc_at_30=auc,
                       n_pairs=len(rot),
                       n_excluded_translation=errs.n_excluded_translation,
                       extras={"accuracy_curve_deg": taus.tolist(),
                               "accuracy_curve": acc.tolist()})
