import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  charSpanForTokenRange,
  fullText,
  tokenRangeForCharRange,
  tokenize,
} from "../src/tokens.js";

interface SnapCase {
  title: string;
  body: string;
  raw_start: number;
  raw_end: number;
  snapped_start: number;
  snapped_end: number;
}

const snapCases: SnapCase[] = JSON.parse(
  readFileSync(new URL("./fixtures/snap_cases.json", import.meta.url), "utf-8"),
);

describe("tokenize", () => {
  it("finds maximal non-whitespace runs", () => {
    expect(tokenize("metastatic cancer families")).toEqual([
      { start: 0, end: 10 },
      { start: 11, end: 17 },
      { start: 18, end: 26 },
    ]);
  });

  it("returns nothing for empty text", () => {
    expect(tokenize("")).toEqual([]);
  });

  it("ignores surrounding whitespace", () => {
    expect(tokenize(" a ")).toEqual([{ start: 1, end: 2 }]);
  });

  it("treats tabs and newlines as separators", () => {
    expect(tokenize("a\tb\nc")).toEqual([
      { start: 0, end: 1 },
      { start: 2, end: 3 },
      { start: 4, end: 5 },
    ]);
  });
});

describe("charSpanForTokenRange", () => {
  const tokens = tokenize("breast cancer cases");

  it("covers a single token", () => {
    expect(charSpanForTokenRange(tokens, 0, 0)).toEqual({ start: 0, end: 6 });
  });

  it("covers a run of tokens", () => {
    expect(charSpanForTokenRange(tokens, 0, 1)).toEqual({ start: 0, end: 13 });
  });

  it("rejects bad ranges", () => {
    expect(() => charSpanForTokenRange(tokens, 1, 0)).toThrow(RangeError);
    expect(() => charSpanForTokenRange(tokens, 0, 9)).toThrow(RangeError);
  });
});

describe("snapping contract with the backend", () => {
  it("matches the server's snap rule on every fixture case", () => {
    expect(snapCases.length).toBeGreaterThan(0);
    for (const c of snapCases) {
      const tokens = tokenize(fullText(c.title, c.body));
      const range = tokenRangeForCharRange(tokens, c.raw_start, c.raw_end);
      expect(range).not.toBeNull();
      const span = charSpanForTokenRange(tokens, range!.first, range!.last);
      expect(span).toEqual({ start: c.snapped_start, end: c.snapped_end });
    }
  });

  it("returns null for whitespace-only selections", () => {
    const tokens = tokenize("a b");
    expect(tokenRangeForCharRange(tokens, 1, 2)).toBeNull();
  });
});
