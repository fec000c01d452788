"""Evaluation reports: JSON + CSV + plain-text tables + matplotlib figures."""

import csv
import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .depth import DepthMetrics
from .pose import PoseMetrics

POSE_COLUMNS = ["RRA@5deg", "RTA@5deg", "AUC@30deg"]
DEPTH_COLUMNS = ["L1", "AbsRel", "RMSE", "delta1_pct", "delta2_pct", "delta3_pct"]


def _write_table(path: Path, header: list, rows: list) -> None:
    widths = [max(len(str(h)), *(len(f"{r[i]}") for r in rows)) + 2
              for i, h in enumerate(header)]
    lines = ["".join(str(h).ljust(w) for h, w in zip(header, widths))]
    lines.append("-" * sum(widths))
    for r in rows:
        lines.append("".join(f"{c}".ljust(w) for c, w in zip(r, widths)))
    path.write_text("\n".join(lines) + "\n")


def write_pose_report(metrics: PoseMetrics, out_dir, name: str = "pose") -> dict:
    """metrics JSON, CSV row, text table and the accuracy-vs-threshold figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    doc = metrics.to_dict()
    paths["json"] = out_dir / f"{name}_metrics.json"
    paths["json"].write_text(json.dumps(doc, indent=2))

    paths["csv"] = out_dir / f"{name}_metrics.csv"
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(POSE_COLUMNS)
        writer.writerow([f"{doc[c]:.4f}" for c in POSE_COLUMNS])

    paths["table"] = out_dir / f"{name}_metrics.txt"
    _write_table(paths["table"], POSE_COLUMNS,
                 [[f"{doc[c]:.2f}" for c in POSE_COLUMNS]])

    taus = metrics.extras.get("accuracy_curve_deg")
    acc = metrics.extras.get("accuracy_curve")
    if taus and acc:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(taus, 100.0 * np.asarray(acc), lw=2)
        ax.set_xlabel("threshold (deg)")
        ax.set_ylabel("pairs within threshold (%)")
        ax.set_ylim(0, 105)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        paths["figure"] = out_dir / f"{name}_accuracy_curve.png"
        fig.savefig(paths["figure"], dpi=120)
        plt.close(fig)
    return {k: str(v) for k, v in paths.items()}


def write_depth_report(per_frame: list, out_dir, name: str = "depth") -> dict:
    """per_frame: [(frame label, DepthMetrics)]; aggregates mean over frames."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    rows = [(label, m.to_dict()) for label, m in per_frame]
    mean = {c: float(np.mean([d[c] for _, d in rows])) for c in DEPTH_COLUMNS}

    doc = {"frames": {label: d for label, d in rows}, "mean": mean}
    paths["json"] = out_dir / f"{name}_metrics.json"
    paths["json"].write_text(json.dumps(doc, indent=2))

    paths["csv"] = out_dir / f"{name}_metrics.csv"
    with open(paths["csv"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame"] + DEPTH_COLUMNS)
        for label, d in rows:
            writer.writerow([label] + [f"{d[c]:.6f}" for c in DEPTH_COLUMNS])
        writer.writerow(["mean"] + [f"{mean[c]:.6f}" for c in DEPTH_COLUMNS])

    paths["table"] = out_dir / f"{name}_metrics.txt"
    _write_table(paths["table"], ["frame"] + DEPTH_COLUMNS,
                 [[label] + [f"{d[c]:.4f}" for c in DEPTH_COLUMNS]
                  for label, d in rows]
                 + [["mean"] + [f"{mean[c]:.4f}" for c in DEPTH_COLUMNS]])

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    labels = [label for label, _ in rows]
    axes[0].bar(range(len(rows)), [d["AbsRel"] for _, d in rows])
    axes[0].set_xticks(range(len(rows)), labels, rotation=45, fontsize=7)
    axes[0].set_ylabel("AbsRel")
    axes[1].bar(range(len(rows)), [d["delta1_pct"] for _, d in rows], color="tab:green")
    axes[1].set_xticks(range(len(rows)), labels, rotation=45, fontsize=7)
    axes[1].set_ylabel("delta1 (%)")
    fig.tight_layout()
    paths["figure"] = out_dir / f"{name}_per_frame.png"
    fig.savefig(paths["figure"], dpi=120)
    plt.close(fig)
    return {k: str(v) for k, v in paths.items()}
