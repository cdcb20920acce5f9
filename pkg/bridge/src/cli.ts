#!/usr/bin/env node
/**
 * bridge run --requests F --out F --model {rowwise,columnwise}
 *            --pooling {mean,cls} [--backend {hash,http}] [--endpoint URL]
 *            [--dim N] [--max-tokens N] [--snapshot N]
 *
 * Exit codes: 0 all requests served, 1 some requests failed, 2 usage error,
 * 3 request file unreadable.
 */

import { parseArgs } from "node:util";

import { createBackend, Pooling } from "./encoder.js";
import { Model, runBatch } from "./runner.js";

const USAGE =
  "usage: bridge run --requests <jsonl> --out <jsonl> --model rowwise|columnwise " +
  "[--pooling mean|cls] [--backend hash|http] [--endpoint URL] [--dim N] " +
  "[--max-tokens N] [--snapshot N]";

function fail(message: string, code: number): never {
  console.error(message);
  process.exit(code);
}

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== "run") {
    console.error(USAGE);
    return 2;
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: argv.slice(1),
      options: {
        requests: { type: "string" },
        out: { type: "string" },
        model: { type: "string" },
        pooling: { type: "string", default: "mean" },
        backend: { type: "string", default: "hash" },
        endpoint: { type: "string" },
        dim: { type: "string", default: "64" },
        "max-tokens": { type: "string", default: "512" },
        snapshot: { type: "string", default: "3" },
        quiet: { type: "boolean", default: false },
      },
    }));
  } catch (error) {
    console.error(String(error));
    console.error(USAGE);
    return 2;
  }

  const { requests, out, model, pooling, backend, endpoint } = values;
  if (!requests || !out || !model) {
    console.error(USAGE);
    return 2;
  }
  if (model !== "rowwise" && model !== "columnwise") {
    console.error(`--model must be rowwise or columnwise, got ${model}`);
    return 2;
  }
  if (pooling !== "mean" && pooling !== "cls") {
    console.error(`--pooling must be mean or cls, got ${pooling}`);
    return 2;
  }
  if (backend !== "hash" && backend !== "http") {
    console.error(`--backend must be hash or http, got ${backend}`);
    return 2;
  }

  let encoder;
  try {
    encoder = createBackend({
      backend,
      dim: Number(values.dim),
      pooling: pooling as Pooling,
      endpoint,
    });
  } catch (error) {
    console.error(String(error));
    return 2;
  }

  let summary;
  try {
    summary = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: model as Model,
      backend: encoder,
      maxTokens: Number(values["max-tokens"]),
      snapshotSize: Number(values.snapshot),
      log: values.quiet ? () => {} : (message) => console.error(message),
    });
  } catch (error) {
    console.error(String(error));
    return 3;
  }

  console.log(
    `requests=${summary.total} written=${summary.written} ` +
      `resumed=${summary.skippedExisting} other-target=${summary.skippedOtherTarget} ` +
      `truncated=${summary.truncated} failed=${summary.failures.length}`,
  );
  for (const failure of summary.failures) {
    console.error(`line ${failure.line}: ${failure.message}`);
  }
  return summary.failures.length > 0 ? 1 : 0;
}

import { pathToFileURL } from "node:url";

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then(
    (code) => process.exit(code),
    (error) => fail(String(error), 3),
  );
}
