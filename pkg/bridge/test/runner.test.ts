import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { createServer, Server } from "node:http";

import { HashEncoder, HttpEncoder } from "../src/encoder.js";
import { runBatch } from "../src/runner.js";
import { tableVectorsSchema } from "../src/types.js";

function tmpFile(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "bridge-")), name);
}

function requestLine(overrides: Record<string, unknown> = {}): string {
  return JSON.stringify({
    table_id: "t1",
    q: 3,
    masked: false,
    utterance: " ",
    header: ["name", "pop"],
    rows: [
      ["berlin", "3.6M"],
      ["paris", "2.1M"],
      ["rome", "2.8M"],
    ],
    target: "rowwise",
    ...overrides,
  });
}

function readRecords(path: string) {
  return readFileSync(path, "utf-8")
    .trim()
    .split("\n")
    .filter(Boolean)
    .map((line) => tableVectorsSchema.parse(JSON.parse(line)));
}

describe("runBatch", () => {
  it("serves every request exactly once", async () => {
    const requests = tmpFile("requests.jsonl");
    const out = join(requests, "..", "out.jsonl");
    writeFileSync(
      requests,
      [
        requestLine({ table_id: "a" }),
        requestLine({ table_id: "b" }),
        requestLine({ table_id: "c", q: 1, rows: [["x", "y"]] }),
        requestLine({ table_id: "d", masked: true, header: ["[UNK]", "[UNK]"] }),
      ].join("\n") + "\n",
    );
    const summary = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: "rowwise",
      backend: new HashEncoder(16),
    });
    expect(summary.written).toBe(4);
    expect(summary.failures).toHaveLength(0);
    const records = readRecords(out);
    expect(records).toHaveLength(4);
    // row-count contract: one vector per sampled row
    expect(records.find((r) => r.table_id === "a")?.vectors).toHaveLength(3);
    expect(records.find((r) => r.table_id === "c")?.vectors).toHaveLength(1);
    expect(records.every((r) => r.granularity === "row")).toBe(true);
  });

  it("resumes as a no-op on complete output", async () => {
    const requests = tmpFile("requests.jsonl");
    const out = join(requests, "..", "out.jsonl");
    writeFileSync(requests, requestLine() + "\n");
    const first = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: "rowwise",
      backend: new HashEncoder(16),
    });
    const second = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: "rowwise",
      backend: new HashEncoder(16),
    });
    expect(first.written).toBe(1);
    expect(second.written).toBe(0);
    expect(second.skippedExisting).toBe(1);
    expect(readRecords(out)).toHaveLength(1);
  });

  it("keeps going past malformed requests", async () => {
    const requests = tmpFile("requests.jsonl");
    const out = join(requests, "..", "out.jsonl");
    writeFileSync(
      requests,
      [
        requestLine({ table_id: "a" }),
        '{"table_id": "broken"}',
        requestLine({ table_id: "b" }),
        requestLine({ table_id: "c" }),
      ].join("\n") + "\n",
    );
    const summary = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: "rowwise",
      backend: new HashEncoder(16),
    });
    expect(summary.written).toBe(3);
    expect(summary.failures).toHaveLength(1);
    expect(summary.failures[0].line).toBe(2);
    expect(readRecords(out)).toHaveLength(3);
  });

  it("filters by target", async () => {
    const requests = tmpFile("requests.jsonl");
    const out = join(requests, "..", "out.jsonl");
    writeFileSync(
      requests,
      [requestLine(), requestLine({ target: "columnwise" })].join("\n") + "\n",
    );
    const summary = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: "columnwise",
      backend: new HashEncoder(16),
    });
    expect(summary.written).toBe(1);
    expect(summary.skippedOtherTarget).toBe(1);
    const [record] = readRecords(out);
    // column-count contract: one vector per column
    expect(record.granularity).toBe("column");
    expect(record.vectors).toHaveLength(2);
  });

  it("columnwise output reacts to the utterance", async () => {
    const requests = tmpFile("requests.jsonl");
    const outA = join(requests, "..", "a.jsonl");
    const outB = join(requests, "..", "b.jsonl");
    writeFileSync(requests, requestLine({ target: "columnwise" }) + "\n");
    const requestsB = join(requests, "..", "requestsB.jsonl");
    writeFileSync(requestsB, requestLine({ target: "columnwise", utterance: "Thing" }) + "\n");
    await runBatch({
      requestsPath: requests, outPath: outA, model: "columnwise",
      backend: new HashEncoder(16),
    });
    await runBatch({
      requestsPath: requestsB, outPath: outB, model: "columnwise",
      backend: new HashEncoder(16),
    });
    expect(readRecords(outA)[0].vectors).not.toEqual(readRecords(outB)[0].vectors);
  });

  it("reruns reproduce identical vectors", async () => {
    const requests = tmpFile("requests.jsonl");
    writeFileSync(requests, [requestLine(), requestLine({ table_id: "z" })].join("\n") + "\n");
    const outA = join(requests, "..", "a.jsonl");
    const outB = join(requests, "..", "b.jsonl");
    for (const out of [outA, outB]) {
      await runBatch({
        requestsPath: requests, outPath: out, model: "rowwise",
        backend: new HashEncoder(24),
      });
    }
    expect(readFileSync(outA, "utf-8")).toBe(readFileSync(outB, "utf-8"));
  });

  it("respects the snapshot size for column encoders", async () => {
    const requests = tmpFile("requests.jsonl");
    const out1 = join(requests, "..", "s1.jsonl");
    const out3 = join(requests, "..", "s3.jsonl");
    writeFileSync(requests, requestLine({ target: "columnwise" }) + "\n");
    await runBatch({
      requestsPath: requests, outPath: out1, model: "columnwise",
      backend: new HashEncoder(16), snapshotSize: 1,
    });
    await runBatch({
      requestsPath: requests, outPath: out3, model: "columnwise",
      backend: new HashEncoder(16), snapshotSize: 3,
    });
    expect(readRecords(out1)[0].vectors).not.toEqual(readRecords(out3)[0].vectors);
  });
});

describe("http backend", () => {
  let server: Server;
  let endpoint = "";

  beforeAll(async () => {
    server = createServer((req, res) => {
      let body = "";
      req.on("data", (chunk) => (body += chunk));
      req.on("end", () => {
        const { texts } = JSON.parse(body) as { texts: string[] };
        res.setHeader("content-type", "application/json");
        res.end(
          JSON.stringify({
            dim: 4,
            vectors: texts.map((text) => [text.length, 1, 2, 3]),
          }),
        );
      });
    });
    await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
    const address = server.address();
    if (address && typeof address === "object") {
      endpoint = `http://127.0.0.1:${address.port}/encode`;
    }
  });

  afterAll(() => {
    server.close();
  });

  it("round-trips through a remote inference endpoint", async () => {
    const requests = tmpFile("requests.jsonl");
    const out = join(requests, "..", "out.jsonl");
    writeFileSync(requests, requestLine() + "\n");
    const summary = await runBatch({
      requestsPath: requests,
      outPath: out,
      model: "rowwise",
      backend: new HttpEncoder(endpoint),
    });
    expect(summary.written).toBe(1);
    const [record] = readRecords(out);
    expect(record.dim).toBe(4);
    expect(record.vectors).toHaveLength(3);
  });
});
