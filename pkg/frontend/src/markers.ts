/**
 * Entity-marking convention for contextual encoders: a sequence-start
 * marker plus distinct open/close markers around the head and the tail
 * entity. Insertion is lossless; removing every marker token recovers the
 * original sequence exactly.
 */

import type { Instance } from "./jsonl.js";

export const SEQ_START = "[REL]";
export const HEAD_OPEN = "[H]";
export const HEAD_CLOSE = "[/H]";
export const TAIL_OPEN = "[T]";
export const TAIL_CLOSE = "[/T]";

export const MARKER_TOKENS = new Set([
  SEQ_START,
  HEAD_OPEN,
  HEAD_CLOSE,
  TAIL_OPEN,
  TAIL_CLOSE,
]);

export type MarkedSequence = {
  tokens: string[];
  /** indices of inserted marker tokens, for lossless removal */
  markerPositions: number[];
};

/**
 * Insert the sequence-start marker, then entity markers left to right.
 * Each insertion point is the original position shifted by the number of
 * markers already inserted before it.
 */
export function insertMarkers(instance: Instance): MarkedSequence {
  const spans = [
    { ...instance.head, open: HEAD_OPEN, close: HEAD_CLOSE },
    { ...instance.tail, open: TAIL_OPEN, close: TAIL_CLOSE },
  ].sort((a, b) => a.start - b.start);

  const tokens: string[] = [];
  const markerPositions: number[] = [];
  const mark = (token: string) => {
    markerPositions.push(tokens.length);
    tokens.push(token);
  };

  mark(SEQ_START);
  let next = 0;
  for (const span of spans) {
    tokens.push(...instance.tokens.slice(next, span.start));
    mark(span.open);
    tokens.push(...instance.tokens.slice(span.start, span.end));
    mark(span.close);
    next = span.end;
  }
  tokens.push(...instance.tokens.slice(next));
  return { tokens, markerPositions };
}

/** Strip marker tokens, recovering the original sequence. */
export function removeMarkers(marked: MarkedSequence): string[] {
  const drop = new Set(marked.markerPositions);
  return marked.tokens.filter((_, i) => !drop.has(i));
}
