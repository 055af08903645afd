/**
 * export_predictions: dump one model's softmax rows over an image
 * directory into an EIPRED1 file.
 *
 *   export_predictions --model NAME --input DIR --transform TAG --out FILE
 *                      [--labels CSV] [--dataset ID] [--batch-size N]
 *                      [--device cpu]
 *
 * Exit codes: 0 success, 1 export failure, 2 usage error.
 */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { ExportError } from "./errors.js";
import { runExport } from "./export.js";
import { TRANSFORM_TAGS } from "./predfile.js";
import { ZOO } from "./zoo.js";

const USAGE =
  "usage: export_predictions --model NAME --input DIR --transform TAG --out FILE\n" +
  "                          [--labels CSV] [--dataset ID] [--batch-size N] [--device cpu]\n" +
  `models: ${Object.keys(ZOO).sort().join(", ")}\n` +
  `transforms: ${TRANSFORM_TAGS.join(", ")}`;

type Writer = (line: string) => void;

export function main(argv: string[], out?: Writer, err?: Writer): number {
  const stdout: Writer = out ?? ((line) => process.stdout.write(line + "\n"));
  const stderr: Writer = err ?? ((line) => process.stderr.write(line + "\n"));

  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        model: { type: "string" },
        input: { type: "string" },
        transform: { type: "string" },
        out: { type: "string" },
        labels: { type: "string" },
        dataset: { type: "string" },
        "batch-size": { type: "string" },
        device: { type: "string" },
        help: { type: "boolean" },
      },
      allowPositionals: false,
    });
  } catch (e) {
    stderr(e instanceof Error ? e.message : String(e));
    stderr(USAGE);
    return 2;
  }
  const v = parsed.values;
  if (v.help) {
    stdout(USAGE);
    return 0;
  }
  const missing = ["model", "input", "transform", "out"].filter(
    (name) => v[name as keyof typeof v] === undefined,
  );
  if (missing.length > 0) {
    stderr(`missing required flags: ${missing.map((m) => "--" + m).join(", ")}`);
    stderr(USAGE);
    return 2;
  }
  let batchSize: number | undefined;
  if (v["batch-size"] !== undefined) {
    batchSize = Number(v["batch-size"]);
    if (!Number.isInteger(batchSize) || batchSize < 1) {
      stderr(`--batch-size must be a positive integer, got ${v["batch-size"]}`);
      return 2;
    }
  }

  try {
    const summary = runExport({
      model: v.model as string,
      inputDir: v.input as string,
      transform: v.transform as string,
      outPath: v.out as string,
      labelsCsv: v.labels,
      datasetId: v.dataset,
      batchSize,
      device: v.device,
    });
    stdout(
      JSON.stringify({
        model: summary.model,
        dataset_id: summary.datasetId,
        transform: summary.transform,
        out: summary.outPath,
        num_samples: summary.numSamples,
        num_classes: summary.numClasses,
        files_sha256: summary.filesSha256,
      }),
    );
    return 0;
  } catch (e) {
    if (e instanceof ExportError) {
      stderr(`error: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
