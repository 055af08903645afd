/**
 * Image input: directory listing, PNG decoding, model preprocessing.
 *
 * Listing is recursive, PNG-only, and sorted by relative path so the
 * row order of an export is a pure function of the directory content.
 * Preprocessing is nearest-neighbor resize to the model's input side,
 * pixel scaling to [0, 1], then per-channel normalization, all in
 * float64 integer-exact arithmetic, so repeated runs are bit-identical.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

import { ExportError } from "./errors.js";
import type { ModelSpec } from "./zoo.js";

export interface DecodedImage {
  width: number;
  height: number;
  /** RGBA bytes, row-major */
  data: Uint8Array;
}

/** Relative posix paths of every .png under dir, sorted lexicographically. */
export function listImages(dir: string): string[] {
  if (!fs.existsSync(dir) || !fs.statSync(dir).isDirectory()) {
    throw new ExportError(`input directory not found: ${dir}`);
  }
  const out: string[] = [];
  const walk = (rel: string) => {
    const abs = rel === "" ? dir : path.join(dir, rel);
    for (const entry of fs.readdirSync(abs, { withFileTypes: true })) {
      const childRel = rel === "" ? entry.name : `${rel}/${entry.name}`;
      if (entry.isDirectory()) {
        walk(childRel);
      } else if (entry.isFile() && entry.name.toLowerCase().endsWith(".png")) {
        out.push(childRel);
      }
    }
  };
  walk("");
  out.sort();
  if (out.length === 0) {
    throw new ExportError(`no PNG images under ${dir}`);
  }
  return out;
}

export function decodePng(dir: string, relPath: string): DecodedImage {
  const abs = path.join(dir, relPath);
  let png: PNG;
  try {
    png = PNG.sync.read(fs.readFileSync(abs));
  } catch (err) {
    const reason = err instanceof Error ? err.message : String(err);
    throw new ExportError(`cannot decode ${relPath}: ${reason}`);
  }
  return { width: png.width, height: png.height, data: png.data };
}

/** Flattened float64 input row (side*side*3, channel-last) for one image. */
export function preprocess(img: DecodedImage, spec: ModelSpec): Float64Array {
  const side = spec.inputSize;
  const out = new Float64Array(side * side * 3);
  for (let y = 0; y < side; y++) {
    const srcY = Math.floor((y * img.height) / side);
    for (let x = 0; x < side; x++) {
      const srcX = Math.floor((x * img.width) / side);
      const src = (srcY * img.width + srcX) * 4;
      const dst = (y * side + x) * 3;
      for (let c = 0; c < 3; c++) {
        out[dst + c] = (img.data[src + c] / 255.0 - spec.mean[c]) / spec.std[c];
      }
    }
  }
  return out;
}

/** Human-readable preprocessing description stored in the dump header. */
export function preprocessTag(spec: ModelSpec): string {
  const fmt = (v: number[]) => v.map((x) => x.toString()).join(",");
  return (
    `resize=nn:${spec.inputSize}x${spec.inputSize};scale=1/255;` +
    `mean=${fmt(spec.mean)};std=${fmt(spec.std)}`
  );
}
