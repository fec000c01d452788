import { existsSync, readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { readFlo, FlowField } from "./flo.js";
import { readPfm, PfmImage } from "./pfm.js";
import { readPlyPoints, PointCloud } from "./plyPoints.js";
import { readPng, RgbImage } from "./png.js";
import { poseFromQuatTrans, quaternionNorm } from "./pose.js";

const QUAT_NORM_TOL = 1e-3;

export interface CameraParams {
  width: number;
  height: number;
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  convention: string;
}

export interface TrajectoryEntry {
  frameId: number;
  tSec: number;
  /** Row-major 4x4 world-from-camera. */
  pose: number[][];
  qCmd: number[] | null;
  qEff: number[] | null;
}

export interface Frame {
  index: number;
  rgb: RgbImage;
  depth: PfmImage;
  normals: PfmImage;
  flow: FlowField | null;
  pointCloud: PointCloud | null;
  pose: number[][];
  timestamp: number;
}

function frameName(index: number, ext: string): string {
  return `frame_${String(index).padStart(4, "0")}.${ext}`;
}

/**
 * Validating handle over one sequence directory. Mirrors the dataset
 * engine's layout rules: contiguous 4-digit frame indices, depth/normals
 * for every rgb frame, flow for all but the last frame, strictly
 * increasing timestamps, near-unit quaternions.
 */
export class SequenceHandle {
  readonly root: string;
  readonly camera: CameraParams;
  readonly trajectory: TrajectoryEntry[];
  readonly timestamps: number[];
  readonly frameCount: number;

  constructor(root: string) {
    this.root = root;
    if (!existsSync(root)) throw new Error(`no such sequence: ${root}`);
    this.camera = this.readCamera();
    this.trajectory = this.readTrajectory();
    this.timestamps = this.readTimestamps();
    this.frameCount = this.validateFrames();
  }

  private requireFile(path: string): string {
    if (!existsSync(path)) throw new Error(`missing modality: ${path}`);
    return path;
  }

  private readCamera(): CameraParams {
    const path = this.requireFile(join(this.root, "calibration", "camera_params.json"));
    const doc = JSON.parse(readFileSync(path, "utf-8"));
    return {
      width: doc.width, height: doc.height, fx: doc.fx, fy: doc.fy,
      cx: doc.cx, cy: doc.cy, convention: doc.convention ?? "",
    };
  }

  private readTrajectory(): TrajectoryEntry[] {
    const path = this.requireFile(join(this.root, "metadata", "trajectory.json"));
    const doc = JSON.parse(readFileSync(path, "utf-8"));
    return doc.map((rec: any) => {
      const q: number[] = rec.pose.quaternion_wxyz;
      const norm = quaternionNorm(q);
      if (Math.abs(norm - 1.0) > QUAT_NORM_TOL) {
        throw new Error(
          `${path}: frame ${rec.frame_id} quaternion norm ${norm.toFixed(6)} ` +
          `outside tolerance`);
      }
      return {
        frameId: rec.frame_id,
        tSec: rec.t_sec,
        pose: poseFromQuatTrans(q, rec.pose.translation_xyz),
        qCmd: rec.q_cmd ?? null,
        qEff: rec.q_eff ?? null,
      };
    });
  }

  private readTimestamps(): number[] {
    const path = this.requireFile(join(this.root, "metadata", "timestamps.json"));
    const ts: number[] = JSON.parse(readFileSync(path, "utf-8"));
    for (let i = 1; i < ts.length; i++) {
      if (!(ts[i] > ts[i - 1])) {
        throw new Error(`${path}: timestamps are not strictly increasing`);
      }
    }
    return ts;
  }

  private validateFrames(): number {
    const rgbDir = join(this.root, "rgb");
    if (!existsSync(rgbDir)) throw new Error(`missing modality: ${rgbDir}`);
    const indices: number[] = [];
    for (const name of readdirSync(rgbDir).sort()) {
      const m = name.match(/^frame_(\d{4})\.png$/);
      if (m) indices.push(parseInt(m[1], 10));
    }
    if (indices.length === 0) throw new Error(`${rgbDir}: no frames found`);
    indices.forEach((v, i) => {
      if (v !== i) throw new Error(`${rgbDir}: frame indices are not contiguous from 0`);
    });
    const n = indices.length;
    for (let i = 0; i < n; i++) {
      this.requireFile(join(this.root, "depth", frameName(i, "pfm")));
      this.requireFile(join(this.root, "surface_normals", frameName(i, "pfm")));
      const flow = join(this.root, "optical_flow", frameName(i, "flo"));
      if (i < n - 1) this.requireFile(flow);
      else if (existsSync(flow)) {
        throw new Error(`${flow}: flow must be absent for the last frame`);
      }
    }
    if (this.trajectory.length !== n) {
      throw new Error(`trajectory has ${this.trajectory.length} entries for ${n} frames`);
    }
    if (this.timestamps.length !== n) {
      throw new Error(`timestamps has ${this.timestamps.length} entries for ${n} frames`);
    }
    return n;
  }

  frame(index: number): Frame {
    if (index < 0 || index >= this.frameCount) {
      throw new Error(`frame index ${index} out of range [0, ${this.frameCount})`);
    }
    const flowPath = join(this.root, "optical_flow", frameName(index, "flo"));
    const cloudPath = join(this.root, "point_clouds", frameName(index, "ply"));
    const entry = this.trajectory[index];
    return {
      index,
      rgb: readPng(join(this.root, "rgb", frameName(index, "png"))),
      depth: readPfm(join(this.root, "depth", frameName(index, "pfm"))),
      normals: readPfm(join(this.root, "surface_normals", frameName(index, "pfm"))),
      flow: existsSync(flowPath) ? readFlo(flowPath) : null,
      pointCloud: existsSync(cloudPath) ? readPlyPoints(cloudPath) : null,
      pose: entry.pose,
      timestamp: entry.tSec,
    };
  }

  *iterate(): Generator<Frame> {
    for (let i = 0; i < this.frameCount; i++) yield this.frame(i);
  }
}

export function openSequence(path: string): SequenceHandle {
  return new SequenceHandle(path);
}
