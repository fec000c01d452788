import { readFileSync } from "node:fs";

export interface FlowField {
  width: number;
  height: number;
  /** Row-major (u, v) pairs, top-down. */
  data: Float32Array;
}

/** Middlebury .flo: "PIEH", int32 width, int32 height, float32 (u,v) pairs. */
export function readFlo(path: string): FlowField {
  const buf = readFileSync(path);
  if (buf.length < 12 || buf.toString("ascii", 0, 4) !== "PIEH") {
    const magic = buf.toString("ascii", 0, Math.min(4, buf.length));
    throw new Error(`${path}: bad .flo magic ${JSON.stringify(magic)} at offset 0`);
  }
  const width = buf.readInt32LE(4);
  const height = buf.readInt32LE(8);
  if (width <= 0 || height <= 0 || width > 1e6 || height > 1e6) {
    throw new Error(`${path}: implausible dimensions ${width}x${height} at offset 4`);
  }
  const count = width * height * 2;
  if (buf.length - 12 < count * 4) {
    throw new Error(
      `${path}: truncated .flo body at offset ${buf.length}: expected ` +
      `${count * 4} bytes, got ${buf.length - 12}`);
  }
  const view = new DataView(buf.buffer, buf.byteOffset + 12, count * 4);
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = view.getFloat32(i * 4, true);
  return { width, height, data };
}
