// Greedy decoding: feed <bos> input <sep>, emit until <eos> or the
// context cap. Exceeding the cap is flagged, not fatal.

import { readFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { Checkpoint, Model, argmax, emptyCache, fromCheckpoint, stepLogits } from "./model.js";
import { Tokenizer } from "./tokenizer.js";

export interface Generation {
  text: string;
  lengthCapExceeded: boolean;
}

export function generate(model: Model, tokenizer: Tokenizer, inputText: string): Generation {
  const prompt = [tokenizer.bosId, ...tokenizer.encodeText(inputText), tokenizer.sepId];
  const cache = emptyCache(model);
  const cap = model.config.blockSize;
  if (prompt.length >= cap) {
    return { text: "", lengthCapExceeded: true };
  }
  let logits!: Float32Array;
  for (const id of prompt) logits = stepLogits(model, id, cache);
  const out: number[] = [];
  for (;;) {
    const next = argmax(logits);
    if (next === tokenizer.eosId) return { text: tokenizer.decode(out), lengthCapExceeded: false };
    out.push(next);
    if (cache.length >= cap) return { text: tokenizer.decode(out), lengthCapExceeded: true };
    logits = stepLogits(model, next, cache);
  }
}

export function loadRun(checkpointPath: string): { model: Model; tokenizer: Tokenizer } {
  const ckpt = JSON.parse(readFileSync(checkpointPath, "utf-8")) as Checkpoint;
  return { model: fromCheckpoint(ckpt), tokenizer: new Tokenizer(ckpt.vocab) };
}

function main(): void {
  const { values } = parseArgs({
    options: {
      checkpoint: { type: "string" },
      input: { type: "string" },
    },
  });
  if (!values.checkpoint || values.input === undefined) {
    console.error('usage: infer --checkpoint run/checkpoint.json --input "<noisy text>"');
    process.exit(2);
  }
  const { model, tokenizer } = loadRun(values.checkpoint);
  const generation = generate(model, tokenizer, values.input);
  if (generation.lengthCapExceeded) console.error("warning: length cap exceeded, output truncated");
  console.log(generation.text);
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
