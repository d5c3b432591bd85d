/**
 * Reader for the engine's tagged-instance JSONL corpus format:
 * one object per line with id, tokens, head/tail spans (end exclusive)
 * and an optional relation label.
 */

export type EntitySpan = {
  start: number;
  end: number;
  entityId: string;
};

export type Instance = {
  id: string;
  tokens: string[];
  head: EntitySpan;
  tail: EntitySpan;
  relation?: string;
};

export class CorpusFormatError extends Error {}

function parseSpan(obj: unknown, which: string): EntitySpan {
  if (typeof obj !== "object" || obj === null) {
    throw new CorpusFormatError(`${which} must be an object`);
  }
  const rec = obj as Record<string, unknown>;
  const span = rec["span"];
  if (
    !Array.isArray(span) ||
    span.length !== 2 ||
    !span.every((v) => Number.isInteger(v))
  ) {
    throw new CorpusFormatError(`${which}.span must be [start, end]`);
  }
  if (typeof rec["id"] !== "string" || rec["id"].length === 0) {
    throw new CorpusFormatError(`${which}.id must be a non-empty string`);
  }
  return { start: span[0] as number, end: span[1] as number, entityId: rec["id"] };
}

export function parseInstance(obj: unknown): Instance {
  if (typeof obj !== "object" || obj === null) {
    throw new CorpusFormatError("line is not a JSON object");
  }
  const rec = obj as Record<string, unknown>;
  if (typeof rec["id"] !== "string" || rec["id"].length === 0) {
    throw new CorpusFormatError("missing or empty id");
  }
  const tokens = rec["tokens"];
  if (!Array.isArray(tokens) || !tokens.every((t) => typeof t === "string")) {
    throw new CorpusFormatError("tokens must be an array of strings");
  }
  const head = parseSpan(rec["head"], "head");
  const tail = parseSpan(rec["tail"], "tail");
  for (const [name, span] of [
    ["head", head],
    ["tail", tail],
  ] as const) {
    if (!(0 <= span.start && span.start < span.end && span.end <= tokens.length)) {
      throw new CorpusFormatError(
        `${name} span [${span.start}, ${span.end}) out of range for ${tokens.length} tokens`,
      );
    }
  }
  const relation = rec["relation"];
  if (relation !== undefined && typeof relation !== "string") {
    throw new CorpusFormatError("relation must be a string when present");
  }
  return {
    id: rec["id"],
    tokens: tokens as string[],
    head,
    tail,
    ...(typeof relation === "string" ? { relation } : {}),
  };
}

/** Parse a whole JSONL document; errors carry 1-based line numbers. */
export function parseCorpus(text: string): Instance[] {
  const out: Instance[] = [];
  const seen = new Set<string>();
  const lines = text.split(/\r?\n/g);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new CorpusFormatError(`line ${i + 1}: invalid JSON (${(e as Error).message})`);
    }
    let instance: Instance;
    try {
      instance = parseInstance(obj);
    } catch (e) {
      throw new CorpusFormatError(`line ${i + 1}: ${(e as Error).message}`);
    }
    if (seen.has(instance.id)) {
      throw new CorpusFormatError(`line ${i + 1}: duplicate instance id "${instance.id}"`);
    }
    seen.add(instance.id);
    out.push(instance);
  }
  return out;
}
