/**
 * Batch runner: streams encoding requests, produces one vector record per
 * request, appends JSONL, and resumes by skipping keys already present in
 * the output file. Per-request failures are collected, not fatal.
 */

import { createReadStream, createWriteStream, existsSync } from "node:fs";
import { createInterface } from "node:readline";

import { EncoderBackend } from "./encoder.js";
import { columnText, rowText, truncateToTokens } from "./linearize.js";
import {
  EncodingRequest,
  TableVectorsRecord,
  granularityOf,
  parseRequestLine,
  recordKey,
  requestKey,
  tableVectorsSchema,
} from "./types.js";

export type Model = "rowwise" | "columnwise";

export interface RunnerOptions {
  requestsPath: string;
  outPath: string;
  model: Model;
  backend: EncoderBackend;
  /** Sequence-length ceiling per serialized text, in whitespace tokens. */
  maxTokens?: number;
  /** Rows a column encoder sees per table (the content snapshot). */
  snapshotSize?: number;
  log?: (message: string) => void;
}

export interface RunSummary {
  total: number;
  written: number;
  skippedExisting: number;
  skippedOtherTarget: number;
  truncated: number;
  failures: { line: number; message: string }[];
}

/** One vector per sampled row; the row text carries column names with values. */
export async function encodeRowwise(
  request: EncodingRequest,
  backend: EncoderBackend,
  maxTokens: number,
): Promise<{ record: TableVectorsRecord; truncated: boolean }> {
  let truncated = false;
  const texts = request.rows.map((row) => {
    const result = truncateToTokens(rowText(request.header, row), maxTokens);
    truncated = truncated || result.truncated;
    return result.text;
  });
  const vectors = await backend.encode(texts);
  return {
    record: {
      table_id: request.table_id,
      granularity: "row",
      q: request.q,
      masked: request.masked,
      utterance: request.utterance,
      dim: vectors[0]?.length ?? 0,
      vectors,
    },
    truncated,
  };
}

/**
 * One vector per column over the content snapshot, with the utterance
 * prepended; snapshot rows beyond the model's native size are dropped.
 */
export async function encodeColumnwise(
  request: EncodingRequest,
  backend: EncoderBackend,
  maxTokens: number,
  snapshotSize: number,
): Promise<{ record: TableVectorsRecord; truncated: boolean }> {
  const snapshot = request.rows.slice(0, Math.min(snapshotSize, request.rows.length));
  let truncated = false;
  const texts = request.header.map((name, m) => {
    const cells = snapshot.map((row) => row[m]);
    const result = truncateToTokens(columnText(request.utterance, name, cells), maxTokens);
    truncated = truncated || result.truncated;
    return result.text;
  });
  const vectors = await backend.encode(texts);
  // vertical mixing: every column vector shifts toward the table mean, so
  // column representations share cross-column context
  const dim = vectors[0]?.length ?? 0;
  const mean = new Array(dim).fill(0);
  for (const vec of vectors) {
    for (let i = 0; i < dim; i += 1) mean[i] += vec[i] / vectors.length;
  }
  const mixed = vectors.map((vec) => {
    const out = vec.map((v, i) => 0.8 * v + 0.2 * mean[i]);
    const norm = Math.sqrt(out.reduce((acc, v) => acc + v * v, 0));
    return norm > 0 ? out.map((v) => v / norm) : out;
  });
  return {
    record: {
      table_id: request.table_id,
      granularity: "column",
      q: request.q,
      masked: request.masked,
      utterance: request.utterance,
      dim,
      vectors: mixed,
    },
    truncated,
  };
}

async function existingKeys(outPath: string): Promise<Set<string>> {
  const keys = new Set<string>();
  if (!existsSync(outPath)) return keys;
  const reader = createInterface({
    input: createReadStream(outPath, "utf-8"),
    crlfDelay: Infinity,
  });
  for await (const line of reader) {
    if (!line.trim()) continue;
    const parsed = tableVectorsSchema.safeParse(JSON.parse(line));
    if (parsed.success) keys.add(recordKey(parsed.data));
  }
  return keys;
}

export async function runBatch(options: RunnerOptions): Promise<RunSummary> {
  const log = options.log ?? (() => {});
  const maxTokens = options.maxTokens ?? 512;
  const snapshotSize = options.snapshotSize ?? 3;
  if (!existsSync(options.requestsPath)) {
    throw new Error(`request file ${options.requestsPath} does not exist`);
  }

  const done = await existingKeys(options.outPath);
  const summary: RunSummary = {
    total: 0,
    written: 0,
    skippedExisting: 0,
    skippedOtherTarget: 0,
    truncated: 0,
    failures: [],
  };

  const out = createWriteStream(options.outPath, { flags: "a", encoding: "utf-8" });
  const reader = createInterface({
    input: createReadStream(options.requestsPath, "utf-8"),
    crlfDelay: Infinity,
  });

  let lineNumber = 0;
  let expectedDim = 0;
  for await (const line of reader) {
    lineNumber += 1;
    if (!line.trim()) continue;
    summary.total += 1;
    let request: EncodingRequest;
    try {
      request = parseRequestLine(line);
    } catch (error) {
      summary.failures.push({ line: lineNumber, message: String(error) });
      continue;
    }
    if (granularityOf(request.target) !== (options.model === "rowwise" ? "row" : "column")) {
      summary.skippedOtherTarget += 1;
      continue;
    }
    if (done.has(requestKey(request))) {
      summary.skippedExisting += 1;
      continue;
    }
    try {
      const { record, truncated } =
        options.model === "rowwise"
          ? await encodeRowwise(request, options.backend, maxTokens)
          : await encodeColumnwise(request, options.backend, maxTokens, snapshotSize);
      if (expectedDim === 0) expectedDim = record.dim;
      if (record.dim !== expectedDim) {
        throw new Error(`backend dim drifted from ${expectedDim} to ${record.dim}`);
      }
      if (truncated) {
        summary.truncated += 1;
        log(`line ${lineNumber}: truncated to ${maxTokens} tokens (${request.table_id})`);
      }
      out.write(JSON.stringify(record) + "\n");
      done.add(recordKey(record));
      summary.written += 1;
    } catch (error) {
      summary.failures.push({ line: lineNumber, message: String(error) });
    }
  }

  await new Promise<void>((resolve, reject) => {
    out.end((error?: Error | null) => (error ? reject(error) : resolve()));
  });
  return summary;
}
