/**
 * The model zoo: small fixed classifiers with seeded weights.
 *
 * Each entry is a two-layer network (flatten, dense+relu, dense,
 * softmax) whose weights are generated once from the spec's seed, so a
 * zoo name always denotes the same function from pixels to softmax.
 * The forward pass runs entirely in 64-bit floats; rows are cast to
 * 32-bit only at serialization time, which keeps row sums well inside
 * the format's 1e-4 tolerance even at 1000 classes.
 */

import { ExportError } from "./errors.js";
import { seededRng } from "./rng.js";

export interface ModelSpec {
  name: string;
  /** square input side; images are resized to inputSize x inputSize */
  inputSize: number;
  hidden: number;
  numClasses: number;
  seed: number;
  /** per-channel normalization applied after scaling pixels to [0, 1] */
  mean: [number, number, number];
  std: [number, number, number];
}

export const ZOO: Record<string, ModelSpec> = {
  "micro-3": {
    name: "micro-3",
    inputSize: 16,
    hidden: 32,
    numClasses: 3,
    seed: 11,
    mean: [0.5, 0.5, 0.5],
    std: [0.5, 0.5, 0.5],
  },
  "small-10": {
    name: "small-10",
    inputSize: 32,
    hidden: 64,
    numClasses: 10,
    seed: 23,
    mean: [0.4914, 0.4822, 0.4465],
    std: [0.2470, 0.2435, 0.2616],
  },
  "dense-1000": {
    name: "dense-1000",
    inputSize: 32,
    hidden: 64,
    numClasses: 1000,
    seed: 47,
    mean: [0.485, 0.456, 0.406],
    std: [0.229, 0.224, 0.225],
  },
};

export interface LoadedModel {
  spec: ModelSpec;
  w1: Float64Array; // hidden x inputDim, row-major
  b1: Float64Array;
  w2: Float64Array; // numClasses x hidden, row-major
  b2: Float64Array;
}

function glorotFill(rng: () => number, out: Float64Array, fanIn: number, fanOut: number): void {
  const limit = Math.sqrt(6.0 / (fanIn + fanOut));
  for (let i = 0; i < out.length; i++) {
    out[i] = (rng() * 2.0 - 1.0) * limit;
  }
}

export function inputDim(spec: ModelSpec): number {
  return spec.inputSize * spec.inputSize * 3;
}

export function loadModel(name: string): LoadedModel {
  const spec = ZOO[name];
  if (!spec) {
    const known = Object.keys(ZOO).sort().join(", ");
    throw new ExportError(`model not found: '${name}' (available: ${known})`);
  }
  const dim = inputDim(spec);
  const rng = seededRng(spec.seed);
  const w1 = new Float64Array(spec.hidden * dim);
  const b1 = new Float64Array(spec.hidden);
  const w2 = new Float64Array(spec.numClasses * spec.hidden);
  const b2 = new Float64Array(spec.numClasses);
  glorotFill(rng, w1, dim, spec.hidden);
  glorotFill(rng, b1, dim, spec.hidden);
  glorotFill(rng, w2, spec.hidden, spec.numClasses);
  glorotFill(rng, b2, spec.hidden, spec.numClasses);
  return { spec, w1, b1, w2, b2 };
}

/** Softmax row for one preprocessed input, computed in float64. */
export function predictOne(model: LoadedModel, x: Float64Array): Float64Array {
  const { spec, w1, b1, w2, b2 } = model;
  const dim = x.length;
  const hidden = new Float64Array(spec.hidden);
  for (let j = 0; j < spec.hidden; j++) {
    let acc = b1[j];
    const row = j * dim;
    for (let i = 0; i < dim; i++) {
      acc += w1[row + i] * x[i];
    }
    hidden[j] = acc > 0 ? acc : 0;
  }
  const logits = new Float64Array(spec.numClasses);
  let zmax = -Infinity;
  for (let k = 0; k < spec.numClasses; k++) {
    let acc = b2[k];
    const row = k * spec.hidden;
    for (let j = 0; j < spec.hidden; j++) {
      acc += w2[row + j] * hidden[j];
    }
    logits[k] = acc;
    if (acc > zmax) zmax = acc;
  }
  let total = 0.0;
  for (let k = 0; k < spec.numClasses; k++) {
    logits[k] = Math.exp(logits[k] - zmax);
    total += logits[k];
  }
  for (let k = 0; k < spec.numClasses; k++) {
    logits[k] /= total;
  }
  return logits;
}

/** Softmax rows for a batch of preprocessed inputs, in input order. */
export function predictBatch(model: LoadedModel, inputs: Float64Array[]): Float64Array[] {
  return inputs.map((x) => predictOne(model, x));
}
