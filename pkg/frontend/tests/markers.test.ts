import { describe, expect, it } from "vitest";

import type { Instance } from "../src/jsonl.js";
import {
  HEAD_CLOSE,
  HEAD_OPEN,
  SEQ_START,
  TAIL_CLOSE,
  TAIL_OPEN,
  insertMarkers,
  removeMarkers,
} from "../src/markers.js";

const FIXTURE: Instance = {
  id: "x1",
  tokens: ["the", "painter", "founded", "a", "school"],
  head: { start: 1, end: 2, entityId: "E1" },
  tail: { start: 4, end: 5, entityId: "E2" },
};

describe("insertMarkers", () => {
  it("matches the hand-traced insertion for head-before-tail", () => {
    // trace: seq marker first, then each marker at its original position
    // shifted by the number of markers already inserted before it:
    // [REL] the [H] painter [/H] founded a [T] school [/T]
    const marked = insertMarkers(FIXTURE);
    expect(marked.tokens).toEqual([
      SEQ_START,
      "the",
      HEAD_OPEN,
      "painter",
      HEAD_CLOSE,
      "founded",
      "a",
      TAIL_OPEN,
      "school",
      TAIL_CLOSE,
    ]);
    expect(marked.markerPositions).toEqual([0, 2, 4, 7, 9]);
  });

  it("keeps head and tail marker kinds distinct", () => {
    const kinds = new Set([SEQ_START, HEAD_OPEN, HEAD_CLOSE, TAIL_OPEN, TAIL_CLOSE]);
    expect(kinds.size).toBe(5);
  });

  it("handles tail occurring before head in the sentence", () => {
    const swapped: Instance = {
      id: "x2",
      tokens: ["city", "of", "light", "hosts", "her"],
      head: { start: 4, end: 5, entityId: "E9" },
      tail: { start: 0, end: 3, entityId: "E8" },
    };
    const marked = insertMarkers(swapped);
    expect(marked.tokens).toEqual([
      SEQ_START,
      TAIL_OPEN,
      "city",
      "of",
      "light",
      TAIL_CLOSE,
      "hosts",
      HEAD_OPEN,
      "her",
      HEAD_CLOSE,
    ]);
  });

  it("handles adjacent spans", () => {
    const adjacent: Instance = {
      id: "x3",
      tokens: ["a", "b"],
      head: { start: 0, end: 1, entityId: "E1" },
      tail: { start: 1, end: 2, entityId: "E2" },
    };
    const marked = insertMarkers(adjacent);
    expect(marked.tokens).toEqual([
      SEQ_START,
      HEAD_OPEN,
      "a",
      HEAD_CLOSE,
      TAIL_OPEN,
      "b",
      TAIL_CLOSE,
    ]);
  });

  it("removal recovers the original sequence exactly", () => {
    for (const instance of [
      FIXTURE,
      {
        id: "x4",
        tokens: ["one", "two", "three", "four", "five", "six"],
        head: { start: 3, end: 5, entityId: "A" },
        tail: { start: 0, end: 2, entityId: "B" },
      },
    ]) {
      expect(removeMarkers(insertMarkers(instance))).toEqual(instance.tokens);
    }
  });
});
