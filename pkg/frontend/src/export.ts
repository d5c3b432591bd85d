/**
 * Corpus -> embedding store: mark entities, run the contextual encoder,
 * keep the first token's hidden state as the sentence representation.
 */

import type { ContextualEncoder } from "./encoder.js";
import type { Instance } from "./jsonl.js";
import { insertMarkers } from "./markers.js";
import type { EmbeddingRecord } from "./nsemb.js";
import { writeStore } from "./nsemb.js";

export type ExportOptions = {
  maxLen?: number;
  /** receives one message per truncated instance; defaults to silence */
  onWarning?: (message: string) => void;
};

export function encodeInstance(
  encoder: ContextualEncoder,
  instance: Instance,
  options: ExportOptions = {},
): Float32Array {
  const { maxLen, onWarning } = options;
  let tokens = insertMarkers(instance).tokens;
  if (maxLen !== undefined && tokens.length > maxLen) {
    onWarning?.(
      `instance "${instance.id}": ${tokens.length} marked tokens exceed ` +
        `max-len ${maxLen}; truncating (never dropping)`,
    );
    tokens = tokens.slice(0, maxLen);
  }
  return encoder.encode(tokens)[0];
}

export function exportCorpus(
  encoder: ContextualEncoder,
  instances: Instance[],
  options: ExportOptions = {},
): Buffer {
  const records: EmbeddingRecord[] = instances.map((instance) => ({
    id: instance.id,
    vector: encodeInstance(encoder, instance, options),
  }));
  return writeStore(records, encoder.dim);
}
