import { readFileSync } from "node:fs";

export interface PfmImage {
  width: number;
  height: number;
  channels: 1 | 3;
  /** Row-major, top-down, channel-interleaved. */
  data: Float32Array;
}

/**
 * PFM: "PF" (3-channel) / "Pf" (1-channel), dims line, scale line
 * (negative = little-endian), float32 scanlines stored bottom-up.
 */
export function readPfm(path: string): PfmImage {
  const buf = readFileSync(path);
  let offset = 0;

  function readLine(): string {
    const start = offset;
    while (offset < buf.length && buf[offset] !== 0x0a) offset++;
    if (offset >= buf.length) {
      throw new Error(`${path}: unterminated PFM header at offset ${start}`);
    }
    const line = buf.toString("ascii", start, offset);
    offset++;
    return line;
  }

  const magic = readLine().trim();
  if (magic !== "PF" && magic !== "Pf") {
    throw new Error(`${path}: bad PFM magic ${JSON.stringify(magic)} at offset 0`);
  }
  const channels = magic === "PF" ? 3 : 1;
  const dims = readLine().trim().split(/\s+/);
  const width = parseInt(dims[0], 10);
  const height = parseInt(dims[1], 10);
  const scale = parseFloat(readLine().trim());
  if (!Number.isFinite(width) || !Number.isFinite(height) || width <= 0 || height <= 0) {
    throw new Error(`${path}: bad PFM dimensions`);
  }
  const littleEndian = scale < 0;
  const count = width * height * channels;
  if (buf.length - offset < count * 4) {
    throw new Error(
      `${path}: truncated PFM body at offset ${buf.length}: expected ` +
      `${count * 4} bytes, got ${buf.length - offset}`);
  }

  const view = new DataView(buf.buffer, buf.byteOffset + offset, count * 4);
  const data = new Float32Array(count);
  const rowLen = width * channels;
  for (let y = 0; y < height; y++) {
    const srcRow = height - 1 - y; // bottom-up storage
    for (let i = 0; i < rowLen; i++) {
      data[y * rowLen + i] = view.getFloat32((srcRow * rowLen + i) * 4, littleEndian);
    }
  }
  return { width, height, channels: channels as 1 | 3, data };
}
