export { CorpusFormatError, parseCorpus, parseInstance } from "./jsonl.js";
export type { EntitySpan, Instance } from "./jsonl.js";
export {
  HEAD_CLOSE,
  HEAD_OPEN,
  MARKER_TOKENS,
  SEQ_START,
  TAIL_CLOSE,
  TAIL_OPEN,
  insertMarkers,
  removeMarkers,
} from "./markers.js";
export type { MarkedSequence } from "./markers.js";
export { HashedEncoder, makeEncoder } from "./encoder.js";
export type { ContextualEncoder } from "./encoder.js";
export { readStore, writeStore } from "./nsemb.js";
export type { EmbeddingRecord } from "./nsemb.js";
export { encodeInstance, exportCorpus } from "./export.js";
export type { ExportOptions } from "./export.js";
