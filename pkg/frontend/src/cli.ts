#!/usr/bin/env node
/**
 * embed-export --input corpus.jsonl --output store.bin
 *              [--encoder hashed] [--dim 64] [--max-len 128]
 *
 * Reads a tagged-instance JSONL corpus, inserts entity markers, encodes
 * every instance and writes the binary embedding store.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { exit, argv, stderr, stdout } from "node:process";

import { makeEncoder } from "./encoder.js";
import { CorpusFormatError, parseCorpus } from "./jsonl.js";
import { exportCorpus } from "./export.js";

type Args = {
  input: string;
  output: string;
  encoder: string;
  dim: number;
  maxLen: number;
};

const USAGE =
  "usage: embed-export --input corpus.jsonl --output store.bin " +
  "[--encoder hashed] [--dim 64] [--max-len 128]";

function parseArgs(args: string[]): Args {
  const out: Partial<Args> = { encoder: "hashed", dim: 64, maxLen: 128 };
  for (let i = 0; i < args.length; i++) {
    const flag = args[i];
    const value = args[i + 1];
    switch (flag) {
      case "--input":
      case "--output":
      case "--encoder":
      case "--dim":
      case "--max-len":
        if (value === undefined) throw new Error(`${flag} needs a value`);
        i++;
        if (flag === "--input") out.input = value;
        else if (flag === "--output") out.output = value;
        else if (flag === "--encoder") out.encoder = value;
        else if (flag === "--dim") out.dim = Number(value);
        else out.maxLen = Number(value);
        break;
      case "--help":
      case "-h":
        stdout.write(USAGE + "\n");
        exit(0);
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!out.input || !out.output) throw new Error("--input and --output are required");
  if (!Number.isInteger(out.dim) || (out.dim as number) < 1) {
    throw new Error("--dim must be a positive integer");
  }
  if (!Number.isInteger(out.maxLen) || (out.maxLen as number) < 1) {
    throw new Error("--max-len must be a positive integer");
  }
  return out as Args;
}

function main(): number {
  let args: Args;
  try {
    args = parseArgs(argv.slice(2));
  } catch (e) {
    stderr.write(`error: ${(e as Error).message}\n${USAGE}\n`);
    return 2;
  }
  try {
    const text = readFileSync(args.input, "utf-8");
    const instances = parseCorpus(text);
    const encoder = makeEncoder(args.encoder, args.dim);
    const store = exportCorpus(encoder, instances, {
      maxLen: args.maxLen,
      onWarning: (message) => stderr.write(`warning: ${message}\n`),
    });
    writeFileSync(args.output, store);
    stdout.write(
      `wrote ${instances.length} vectors (dim ${encoder.dim}, encoder ` +
        `${encoder.name}) to ${args.output}\n`,
    );
    return 0;
  } catch (e) {
    if (e instanceof CorpusFormatError || (e as NodeJS.ErrnoException).code === "ENOENT") {
      stderr.write(`error: ${(e as Error).message}\n`);
      return 2;
    }
    stderr.write(`error: ${(e as Error).message}\n`);
    return 1;
  }
}

exit(main());
