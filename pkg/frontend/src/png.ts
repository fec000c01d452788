import { readFileSync } from "node:fs";
import { PNG } from "pngjs";

export interface RgbImage {
  width: number;
  height: number;
  /** (H*W*3) uint8, row-major RGB. */
  data: Uint8Array;
}

export function readPng(path: string): RgbImage {
  const png = PNG.sync.read(readFileSync(path));
  const { width, height } = png;
  const rgb = new Uint8Array(width * height * 3);
  // pngjs always expands to RGBA
  for (let i = 0; i < width * height; i++) {
    rgb[i * 3] = png.data[i * 4];
    rgb[i * 3 + 1] = png.data[i * 4 + 1];
    rgb[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width, height, data: rgb };
}
