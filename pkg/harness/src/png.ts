/** Grayscale PNG I/O on top of pngjs (the simulator emits 8-bit mode-L PNGs). */

import fs from "node:fs";
import { PNG } from "pngjs";

export interface GrayImage {
  width: number;
  height: number;
  /** row-major intensities in [0, 255], length width * height */
  pixels: Float32Array;
}

export function readGrayPng(path: string): GrayImage {
  const png = PNG.sync.read(fs.readFileSync(path));
  const n = png.width * png.height;
  const pixels = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    pixels[i] = png.data[4 * i]; // R of the expanded RGBA; R=G=B for grayscale input
  }
  return { width: png.width, height: png.height, pixels };
}

export function writeGrayPng(path: string, image: GrayImage): void {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.pixels.length; i++) {
    const v = Math.max(0, Math.min(255, Math.round(image.pixels[i])));
    png.data[4 * i] = v;
    png.data[4 * i + 1] = v;
    png.data[4 * i + 2] = v;
    png.data[4 * i + 3] = 255;
  }
  fs.writeFileSync(path, PNG.sync.write(png));
}
