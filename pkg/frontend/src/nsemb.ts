/**
 * The engine's binary embedding-store format:
 * magic "NSEMB1", u32 count, u32 dim (little-endian), then per record a
 * u16 id length, the UTF-8 id bytes and dim float32 little-endian values.
 */

export type EmbeddingRecord = {
  id: string;
  vector: Float32Array;
};

const MAGIC = Buffer.from("NSEMB1", "ascii");

export function writeStore(records: EmbeddingRecord[], dim: number): Buffer {
  const parts: Buffer[] = [];
  const header = Buffer.alloc(MAGIC.length + 8);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(records.length, MAGIC.length);
  header.writeUInt32LE(dim, MAGIC.length + 4);
  parts.push(header);
  for (const { id, vector } of records) {
    if (vector.length !== dim) {
      throw new Error(`vector for "${id}" has dim ${vector.length}, expected ${dim}`);
    }
    const idBytes = Buffer.from(id, "utf-8");
    if (idBytes.length > 0xffff) throw new Error(`instance id too long: "${id}"`);
    const rec = Buffer.alloc(2 + idBytes.length + 4 * dim);
    rec.writeUInt16LE(idBytes.length, 0);
    idBytes.copy(rec, 2);
    for (let i = 0; i < dim; i++) {
      rec.writeFloatLE(vector[i], 2 + idBytes.length + 4 * i);
    }
    parts.push(rec);
  }
  return Buffer.concat(parts);
}

export function readStore(data: Buffer): { dim: number; records: EmbeddingRecord[] } {
  if (!data.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error("bad magic: not an embedding store");
  }
  let offset = MAGIC.length;
  const count = data.readUInt32LE(offset);
  const dim = data.readUInt32LE(offset + 4);
  offset += 8;
  const records: EmbeddingRecord[] = [];
  for (let r = 0; r < count; r++) {
    const idLen = data.readUInt16LE(offset);
    offset += 2;
    const id = data.subarray(offset, offset + idLen).toString("utf-8");
    offset += idLen;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = data.readFloatLE(offset + 4 * i);
    }
    offset += 4 * dim;
    records.push({ id, vector });
  }
  if (offset !== data.length) {
    throw new Error(`${data.length - offset} trailing bytes after ${count} records`);
  }
  return { dim, records };
}
