export { readPfm, PfmImage } from "./pfm.js";
export { readFlo, FlowField } from "./flo.js";
export { readPlyPoints, PointCloud } from "./plyPoints.js";
export { readPng, RgbImage } from "./png.js";
export { poseFromQuatTrans, quaternionNorm } from "./pose.js";
export {
  openSequence, SequenceHandle, Frame, CameraParams, TrajectoryEntry,
} from "./sequence.js";
