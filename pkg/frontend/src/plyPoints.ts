import { readFileSync } from "node:fs";

export interface PointCloud {
  count: number;
  /** (N*3) xyz float32. */
  points: Float32Array;
  /** (N*3) rgb uint8, when present. */
  colors: Uint8Array | null;
  radii: Float32Array | null;
}

interface Property {
  name: string;
  type: string;
}

const TYPE_SIZES: Record<string, number> = {
  char: 1, int8: 1, uchar: 1, uint8: 1,
  short: 2, int16: 2, ushort: 2, uint16: 2,
  int: 4, int32: 4, uint: 4, uint32: 4,
  float: 4, float32: 4, double: 8, float64: 8,
};

/** Binary little-endian PLY point clouds written by the dataset engine. */
export function readPlyPoints(path: string): PointCloud {
  const buf = readFileSync(path);
  const headerEnd = buf.indexOf("end_header\n");
  if (buf.toString("ascii", 0, 4) !== "ply\n" || headerEnd < 0) {
    throw new Error(`${path}: not a PLY file`);
  }
  const header = buf.toString("ascii", 0, headerEnd).split("\n");
  let format = "";
  let count = -1;
  const props: Property[] = [];
  let inVertex = false;
  for (const line of header) {
    const tok = line.trim().split(/\s+/);
    if (tok[0] === "format") format = tok[1];
    else if (tok[0] === "element") {
      inVertex = tok[1] === "vertex";
      if (inVertex) count = parseInt(tok[2], 10);
    } else if (tok[0] === "property" && inVertex) {
      if (tok[1] === "list") {
        throw new Error(`${path}: list properties are not point-cloud data`);
      }
      props.push({ name: tok[2], type: tok[1] });
    }
  }
  if (format !== "binary_little_endian") {
    throw new Error(`${path}: unsupported PLY format ${JSON.stringify(format)}`);
  }
  if (count < 0) throw new Error(`${path}: PLY without vertex element`);

  const stride = props.reduce((s, p) => s + TYPE_SIZES[p.type], 0);
  const body = headerEnd + "end_header\n".length;
  if (buf.length - body < count * stride) {
    throw new Error(
      `${path}: truncated PLY body at offset ${buf.length}: expected ` +
      `${count * stride} bytes, got ${buf.length - body}`);
  }

  const offsets: Record<string, number> = {};
  let acc = 0;
  for (const p of props) {
    offsets[p.name] = acc;
    acc += TYPE_SIZES[p.type];
  }
  const view = new DataView(buf.buffer, buf.byteOffset + body, count * stride);

  const points = new Float32Array(count * 3);
  for (let i = 0; i < count; i++) {
    points[i * 3] = view.getFloat32(i * stride + offsets.x, true);
    points[i * 3 + 1] = view.getFloat32(i * stride + offsets.y, true);
    points[i * 3 + 2] = view.getFloat32(i * stride + offsets.z, true);
  }
  let colors: Uint8Array | null = null;
  if ("red" in offsets) {
    colors = new Uint8Array(count * 3);
    for (let i = 0; i < count; i++) {
      colors[i * 3] = view.getUint8(i * stride + offsets.red);
      colors[i * 3 + 1] = view.getUint8(i * stride + offsets.green);
      colors[i * 3 + 2] = view.getUint8(i * stride + offsets.blue);
    }
  }
  let radii: Float32Array | null = null;
  if ("radius" in offsets) {
    radii = new Float32Array(count);
    for (let i = 0; i < count; i++) {
      radii[i] = view.getFloat32(i * stride + offsets.radius, true);
    }
  }
  return { count, points, colors, radii };
}
