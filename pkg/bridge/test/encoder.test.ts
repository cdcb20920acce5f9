import { describe, expect, it } from "vitest";

import { HashEncoder } from "../src/encoder.js";
import { columnText, rowText, truncateToTokens } from "../src/linearize.js";

describe("linearization", () => {
  it("concatenates each cell value with its column name", () => {
    expect(rowText(["name", "pop"], ["berlin", "3.6M"])).toBe(
      "name is berlin ; pop is 3.6M",
    );
  });

  it("keeps the [UNK] literal for masked headers", () => {
    expect(rowText(["[UNK]", "[UNK]"], ["berlin", "3.6M"])).toBe(
      "[UNK] is berlin ; [UNK] is 3.6M",
    );
  });

  it("prefixes the utterance in column texts", () => {
    expect(columnText("Thing", "name", ["berlin", "paris"])).toBe(
      "Thing name is berlin ; paris",
    );
  });

  it("truncates long sequences with a flag", () => {
    const long = Array.from({ length: 600 }, (_, i) => `tok${i}`).join(" ");
    const result = truncateToTokens(long, 512);
    expect(result.truncated).toBe(true);
    expect(result.text.split(" ")).toHaveLength(512);
    expect(truncateToTokens("short text", 512).truncated).toBe(false);
  });
});

describe("hash encoder", () => {
  it("is deterministic", async () => {
    const encoder = new HashEncoder(32, "mean");
    const [a] = await encoder.encode(["name is berlin"]);
    const [b] = await encoder.encode(["name is berlin"]);
    expect(a).toEqual(b);
  });

  it("produces unit vectors of the requested dim", async () => {
    const encoder = new HashEncoder(48, "mean");
    const [vec] = await encoder.encode(["some tokens here"]);
    expect(vec).toHaveLength(48);
    const norm = Math.sqrt(vec.reduce((acc, v) => acc + v * v, 0));
    expect(norm).toBeCloseTo(1.0, 9);
  });

  it("is sensitive to the utterance prefix", async () => {
    const encoder = new HashEncoder(32, "mean");
    const [empty] = await encoder.encode([columnText(" ", "name", ["berlin"])]);
    const [thing] = await encoder.encode([columnText("Thing", "name", ["berlin"])]);
    expect(empty).not.toEqual(thing);
  });

  it("mean and cls pooling differ", async () => {
    const mean = new HashEncoder(32, "mean");
    const cls = new HashEncoder(32, "cls");
    const [a] = await mean.encode(["name is berlin"]);
    const [b] = await cls.encode(["name is berlin"]);
    expect(a).not.toEqual(b);
  });

  it("is order sensitive only through token multiset (mean pooling)", async () => {
    const encoder = new HashEncoder(32, "mean");
    const [a] = await encoder.encode(["alpha beta"]);
    const [b] = await encoder.encode(["beta alpha"]);
    expect(a).toEqual(b);
  });

  it("encodes empty text to the zero vector", async () => {
    const encoder = new HashEncoder(16, "mean");
    const [vec] = await encoder.encode([" "]);
    expect(vec.every((v) => v === 0)).toBe(true);
  });
});
