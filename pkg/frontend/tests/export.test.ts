import { describe, expect, it } from "vitest";

import { HashedEncoder } from "../src/encoder.js";
import { encodeInstance, exportCorpus } from "../src/export.js";
import type { Instance } from "../src/jsonl.js";
import { parseCorpus } from "../src/jsonl.js";
import { readStore } from "../src/nsemb.js";

function instance(id: string, n = 6): Instance {
  return {
    id,
    tokens: Array.from({ length: n }, (_, i) => `tok${(i * 7 + id.length) % 11}`),
    head: { start: 0, end: 1, entityId: "H" },
    tail: { start: n - 1, end: n, entityId: "T" },
  };
}

describe("exportCorpus", () => {
  it("writes one vector per instance with the declared dim", () => {
    const encoder = new HashedEncoder(16);
    const store = readStore(exportCorpus(encoder, [instance("a"), instance("b")]));
    expect(store.dim).toBe(16);
    expect(store.records.map((r) => r.id)).toEqual(["a", "b"]);
    for (const rec of store.records) {
      expect(rec.vector.length).toBe(16);
      expect(Array.from(rec.vector).every((v) => Number.isFinite(v))).toBe(true);
    }
  });

  it("is deterministic for fixed inputs", () => {
    const xs = [instance("a"), instance("b"), instance("c", 9)];
    const one = exportCorpus(new HashedEncoder(24), xs);
    const two = exportCorpus(new HashedEncoder(24), xs);
    expect(one.equals(two)).toBe(true);
  });

  it("distinguishes instances with different content", () => {
    const encoder = new HashedEncoder(32);
    const a = encodeInstance(encoder, instance("a", 5));
    const b = encodeInstance(encoder, instance("b", 8));
    expect(Array.from(a)).not.toEqual(Array.from(b));
  });

  it("truncates over-length instances with a warning instead of dropping", () => {
    const encoder = new HashedEncoder(8);
    const warnings: string[] = [];
    const long = instance("long", 50);
    const store = readStore(
      exportCorpus(encoder, [long, instance("short")], {
        maxLen: 12,
        onWarning: (m) => warnings.push(m),
      }),
    );
    expect(store.records.map((r) => r.id)).toEqual(["long", "short"]);
    expect(warnings).toHaveLength(1);
    expect(warnings[0]).toContain('"long"');
    expect(warnings[0]).toContain("truncat");
  });

  it("marker placement changes the representation", () => {
    const encoder = new HashedEncoder(32);
    const base = instance("same", 6);
    const moved: Instance = {
      ...base,
      head: { start: 2, end: 3, entityId: "H" },
    };
    expect(Array.from(encodeInstance(encoder, base))).not.toEqual(
      Array.from(encodeInstance(encoder, moved)),
    );
  });
});

describe("parseCorpus", () => {
  const line = (id: string) =>
    JSON.stringify({
      id,
      tokens: ["a", "b", "c"],
      head: { id: "E1", span: [0, 1] },
      tail: { id: "E2", span: [2, 3] },
    });

  it("parses valid lines and reports bad ones with line numbers", () => {
    expect(parseCorpus(`${line("x")}\n${line("y")}\n`)).toHaveLength(2);
    expect(() => parseCorpus(`${line("x")}\nnot json\n`)).toThrow(/line 2/);
    expect(() => parseCorpus(`${line("x")}\n${line("x")}\n`)).toThrow(
      /line 2: duplicate/,
    );
    const bad = JSON.stringify({
      id: "z",
      tokens: ["a"],
      head: { id: "E1", span: [0, 2] },
      tail: { id: "E2", span: [0, 1] },
    });
    expect(() => parseCorpus(bad)).toThrow(/out of range/);
  });
});
