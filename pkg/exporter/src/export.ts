/**
 * Export pipeline: images in, one EIPRED1 prediction dump out.
 *
 * Rows follow the sorted relative-path order of the input directory,
 * so the i-th row of an identity export and the i-th row of a rot90
 * export made from the matching transformed directory describe the
 * same underlying image. A sha256 of the path list is stored in the
 * header metadata so that alignment is checkable after the fact.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import { ExportError } from "./errors.js";
import { decodePng, listImages, preprocess, preprocessTag } from "./images.js";
import { encodePredictions, TRANSFORM_TAGS } from "./predfile.js";
import { inputDim, loadModel, predictBatch } from "./zoo.js";

export interface ExportJob {
  model: string;
  inputDir: string;
  transform: string;
  outPath: string;
  /** filename,label CSV; when given, labels are written into the dump */
  labelsCsv?: string;
  /** overrides the dataset id inferred from the input directory name */
  datasetId?: string;
  batchSize?: number;
  /** inference device; only "cpu" exists here */
  device?: string;
}

export interface ExportSummary {
  model: string;
  datasetId: string;
  transform: string;
  outPath: string;
  numSamples: number;
  numClasses: number;
  filesSha256: string;
}

/**
 * Dataset id for an input directory: its base name, minus one trailing
 * _tag suffix, so exports of imgs/ and imgs_rot90/ pair up by default.
 */
export function inferDatasetId(inputDir: string): string {
  const base = path.basename(path.resolve(inputDir));
  for (const tag of TRANSFORM_TAGS) {
    const suffix = `_${tag}`;
    if (base.length > suffix.length && base.endsWith(suffix)) {
      return base.slice(0, -suffix.length);
    }
  }
  return base;
}

function readLabelMap(csvPath: string): Map<string, number> {
  let text: string;
  try {
    text = fs.readFileSync(csvPath, "utf8");
  } catch (err) {
    const reason = err instanceof Error ? err.message : String(err);
    throw new ExportError(`cannot read labels file: ${reason}`);
  }
  const map = new Map<string, number>();
  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (line === "") continue;
    if (i === 0 && line.toLowerCase().replace(/\s/g, "") === "filename,label") continue;
    const parts = line.split(",");
    if (parts.length !== 2) {
      throw new ExportError(`labels line ${i + 1} is not 'filename,label': ${line}`);
    }
    const label = Number(parts[1].trim());
    if (!Number.isInteger(label) || label < 0) {
      throw new ExportError(`labels line ${i + 1} has a bad label: ${parts[1].trim()}`);
    }
    map.set(parts[0].trim(), label);
  }
  return map;
}

export function runExport(job: ExportJob): ExportSummary {
  const device = job.device ?? "cpu";
  if (device !== "cpu") {
    throw new ExportError(`device '${device}' is not available: inference runs on cpu only`);
  }
  if (!(TRANSFORM_TAGS as readonly string[]).includes(job.transform)) {
    throw new ExportError(
      `unknown transform tag '${job.transform}' (expected one of ${TRANSFORM_TAGS.join(", ")})`,
    );
  }
  const batchSize = job.batchSize ?? 16;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new ExportError(`batch size must be a positive integer, got ${job.batchSize}`);
  }

  const model = loadModel(job.model);
  const files = listImages(job.inputDir);
  const n = files.length;
  const k = model.spec.numClasses;

  let labels: Uint32Array | undefined;
  if (job.labelsCsv !== undefined) {
    const map = readLabelMap(job.labelsCsv);
    labels = new Uint32Array(n);
    for (let i = 0; i < n; i++) {
      const label = map.get(files[i]);
      if (label === undefined) {
        throw new ExportError(`labels file has no entry for ${files[i]}`);
      }
      if (label >= k) {
        throw new ExportError(`label ${label} for ${files[i]} is out of range for K=${k}`);
      }
      labels[i] = label;
    }
  }

  const probs = new Float32Array(n * k);
  const dim = inputDim(model.spec);
  for (let start = 0; start < n; start += batchSize) {
    const stop = Math.min(start + batchSize, n);
    const inputs: Float64Array[] = [];
    for (let i = start; i < stop; i++) {
      const row = preprocess(decodePng(job.inputDir, files[i]), model.spec);
      if (row.length !== dim) {
        throw new ExportError(`preprocessed ${files[i]} to ${row.length} values, expected ${dim}`);
      }
      inputs.push(row);
    }
    const rows = predictBatch(model, inputs);
    for (let i = start; i < stop; i++) {
      probs.set(rows[i - start], i * k); // float64 softmax rows round to f32 here
    }
  }

  const filesSha256 = crypto.createHash("sha256").update(JSON.stringify(files)).digest("hex");
  const datasetId = job.datasetId ?? inferDatasetId(job.inputDir);
  const metadata =
    `model=${model.spec.name};preprocess=${preprocessTag(model.spec)};files_sha256=${filesSha256}`;
  const bytes = encodePredictions(
    {
      model_id: model.spec.name,
      dataset_id: datasetId,
      transform: job.transform,
      num_samples: n,
      num_classes: k,
      has_labels: labels !== undefined,
      metadata,
    },
    probs,
    labels,
  );
  fs.mkdirSync(path.dirname(path.resolve(job.outPath)), { recursive: true });
  fs.writeFileSync(job.outPath, bytes);
  return {
    model: model.spec.name,
    datasetId,
    transform: job.transform,
    outPath: job.outPath,
    numSamples: n,
    numClasses: k,
    filesSha256,
  };
}
