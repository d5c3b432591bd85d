import { describe, expect, it } from "vitest";

import { readStore, writeStore } from "../src/nsemb.js";

describe("embedding store format", () => {
  it("lays out the header and records byte-exactly", () => {
    const buf = writeStore(
      [{ id: "ab", vector: new Float32Array([1.5, -2.0]) }],
      2,
    );
    expect(buf.subarray(0, 6).toString("ascii")).toBe("NSEMB1");
    expect(buf.readUInt32LE(6)).toBe(1); // count
    expect(buf.readUInt32LE(10)).toBe(2); // dim
    expect(buf.readUInt16LE(14)).toBe(2); // id length
    expect(buf.subarray(16, 18).toString("utf-8")).toBe("ab");
    expect(buf.readFloatLE(18)).toBe(1.5);
    expect(buf.readFloatLE(22)).toBe(-2.0);
    expect(buf.length).toBe(26);
  });

  it("round-trips records bit-exactly, including non-ascii ids", () => {
    const records = Array.from({ length: 25 }, (_, k) => ({
      id: `inst-${k}-é你`,
      vector: new Float32Array(
        Array.from({ length: 7 }, (_, i) => Math.fround(Math.sin(k * 31 + i))),
      ),
    }));
    const { dim, records: loaded } = readStore(writeStore(records, 7));
    expect(dim).toBe(7);
    expect(loaded.map((r) => r.id)).toEqual(records.map((r) => r.id));
    loaded.forEach((rec, k) => {
      expect(Array.from(rec.vector)).toEqual(Array.from(records[k].vector));
    });
  });

  it("rejects dimension mismatches and trailing garbage", () => {
    expect(() =>
      writeStore([{ id: "a", vector: new Float32Array([1]) }], 2),
    ).toThrow(/dim/);
    const good = writeStore([{ id: "a", vector: new Float32Array([1, 2]) }], 2);
    expect(() => readStore(Buffer.concat([good, Buffer.from([0])]))).toThrow(
      /trailing/,
    );
    expect(() => readStore(Buffer.from("NOPE00aaaaaaaa"))).toThrow(/magic/);
  });
});
