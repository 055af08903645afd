/**
 * EIPRED1 prediction-dump encoder.
 *
 * Layout, little-endian: 8-byte magic "EIPRED1\n", uint32 header
 * length, canonical compact JSON header (fixed key order:
 * format_version, model_id, dataset_id, transform, num_samples,
 * num_classes, has_labels, metadata), then uint32 labels (one per
 * sample, only when labeled), then float32 probabilities row-major.
 */

import { ExportError } from "./errors.js";

export const MAGIC = "EIPRED1\n";
export const FORMAT_VERSION = 1;
export const TRANSFORM_TAGS = ["identity", "rot90", "rot180", "rot270", "grayscale"] as const;

export interface DumpHeader {
  model_id: string;
  dataset_id: string;
  transform: string;
  num_samples: number;
  num_classes: number;
  has_labels: boolean;
  metadata: string;
}

export function encodeHeader(h: DumpHeader): Buffer {
  const canonical = {
    format_version: FORMAT_VERSION,
    model_id: h.model_id,
    dataset_id: h.dataset_id,
    transform: h.transform,
    num_samples: h.num_samples,
    num_classes: h.num_classes,
    has_labels: h.has_labels,
    metadata: h.metadata,
  };
  return Buffer.from(JSON.stringify(canonical), "utf8");
}

/** Whole-file bytes for one dump; probs is row-major with n*k entries. */
export function encodePredictions(
  h: DumpHeader,
  probs: Float32Array,
  labels?: Uint32Array,
): Buffer {
  const n = h.num_samples;
  const k = h.num_classes;
  if (probs.length !== n * k) {
    throw new ExportError(`probability block has ${probs.length} values, expected ${n}*${k}`);
  }
  if (h.has_labels !== (labels !== undefined)) {
    throw new ExportError("has_labels flag disagrees with the labels argument");
  }
  if (labels && labels.length !== n) {
    throw new ExportError(`label block has ${labels.length} values, expected ${n}`);
  }
  const headerBytes = encodeHeader(h);
  const labelBytes = labels ? labels.length * 4 : 0;
  const buf = Buffer.alloc(8 + 4 + headerBytes.length + labelBytes + probs.length * 4);
  let off = 0;
  buf.write(MAGIC, off, "ascii");
  off += 8;
  buf.writeUInt32LE(headerBytes.length, off);
  off += 4;
  headerBytes.copy(buf, off);
  off += headerBytes.length;
  if (labels) {
    for (let i = 0; i < labels.length; i++) {
      buf.writeUInt32LE(labels[i], off);
      off += 4;
    }
  }
  for (let i = 0; i < probs.length; i++) {
    buf.writeFloatLE(probs[i], off);
    off += 4;
  }
  return buf;
}

/** Header fields of an encoded dump; used by tests and tooling. */
export function parseHeader(buf: Buffer): DumpHeader {
  if (buf.length < 12 || buf.toString("ascii", 0, 8) !== MAGIC) {
    throw new ExportError("not an EIPRED1 file");
  }
  const len = buf.readUInt32LE(8);
  if (buf.length < 12 + len) {
    throw new ExportError("truncated header");
  }
  const parsed = JSON.parse(buf.toString("utf8", 12, 12 + len));
  if (parsed.format_version !== FORMAT_VERSION) {
    throw new ExportError(`unsupported format_version: ${parsed.format_version}`);
  }
  return parsed as DumpHeader;
}
