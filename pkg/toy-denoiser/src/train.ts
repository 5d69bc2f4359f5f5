// Training loop: completion-style causal LM on rendered corpus samples,
// loss masked to the target span (everything after the separator).

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { Checkpoint, Model, ModelConfig, fromCheckpoint, initModel, lossAndBackward, toCheckpoint } from "./model.js";
import { mulberry32, shuffleInPlace } from "./rng.js";
import { Sample, parseCorpus } from "./template.js";
import { Tokenizer } from "./tokenizer.js";

export interface TrainOptions {
  steps: number;
  seed: number;
  dModel: number;
  nHead: number;
  nLayer: number;
  dFF: number;
  blockSize: number;
  learningRate: number;
  warmupSteps: number;
  clipNorm: number;
  logEvery: number;
  /**
   * Restrict the loss to the target span. Off by default: full-sequence
   * CLM also supervises the input span, whose internal repetition is
   * what teaches the model to copy from context at all.
   */
  maskInputSpan: boolean;
  /** Samples whose gradients accumulate into one optimizer update. */
  batchSize: number;
  /** Resume from a checkpoint (vocabulary must match the corpus). */
  initFrom?: string;
  /** Write checkpoint.json every this many samples (0 = only at the end). */
  checkpointEvery?: number;
  checkpointDir?: string;
  onLog?: (line: string) => void;
}

// Two layers matter: copying tokens from the input span into the target
// (the essence of denoising) needs composed attention, which one layer
// cannot express.
export const DEFAULT_TRAIN: TrainOptions = {
  steps: 50000,
  seed: 7,
  dModel: 48,
  nHead: 4,
  nLayer: 2,
  dFF: 192,
  blockSize: 416,
  learningRate: 4e-3,
  warmupSteps: 100,
  clipNorm: 1.0,
  logEvery: 200,
  maskInputSpan: false,
  batchSize: 8,
};

export interface TrainResult {
  model: Model;
  tokenizer: Tokenizer;
  losses: number[];       // per-step loss
  movingAverage: number[]; // same length, window 100
  skippedTooLong: number;
}

class Adam {
  private m: Float64Array;
  private v: Float64Array;
  private updates = 0;
  private readonly beta1 = 0.9;
  private readonly beta2 = 0.99;
  private readonly eps = 1e-8;

  constructor(private model: Model, private options: TrainOptions) {
    let total = 0;
    for (const p of model.params) total += p.data.length;
    this.m = new Float64Array(total);
    this.v = new Float64Array(total);
  }

  /** Consume accumulated gradients of one batch; schedule runs on samples. */
  step(samplesSeen: number, accumulated: number): void {
    const { learningRate, warmupSteps, steps, clipNorm, batchSize } = this.options;
    const warm = Math.min(1, samplesSeen / (warmupSteps * batchSize));
    const decay = 1 - (0.9 * samplesSeen) / Math.max(1, steps);
    const lr = learningRate * warm * decay;
    const avg = 1 / accumulated;

    let normSq = 0;
    for (const p of this.model.params) {
      for (let i = 0; i < p.grad.length; i++) normSq += (p.grad[i] * avg) ** 2;
    }
    const norm = Math.sqrt(normSq);
    const clip = (norm > clipNorm ? clipNorm / norm : 1) * avg;

    this.updates++;
    const bc1 = 1 - this.beta1 ** this.updates;
    const bc2 = 1 - this.beta2 ** this.updates;
    let offset = 0;
    for (const p of this.model.params) {
      for (let i = 0; i < p.data.length; i++) {
        const g = p.grad[i] * clip;
        const mi = (this.m[offset + i] = this.beta1 * this.m[offset + i] + (1 - this.beta1) * g);
        const vi = (this.v[offset + i] = this.beta2 * this.v[offset + i] + (1 - this.beta2) * g * g);
        p.data[i] -= (lr * (mi / bc1)) / (Math.sqrt(vi / bc2) + this.eps);
        p.grad[i] = 0;
      }
      offset += p.data.length;
    }
  }
}

export function trainModel(samples: Sample[], options: Partial<TrainOptions> = {}): TrainResult {
  const opts: TrainOptions = { ...DEFAULT_TRAIN, ...options };
  if (samples.length === 0) throw new Error("empty corpus");
  const log = opts.onLog ?? ((line: string) => console.log(line));

  const tokenizer = Tokenizer.fromCorpus(
    (function* () {
      for (const s of samples) {
        yield s.inputText;
        yield s.targetText;
      }
    })(),
  );

  const encoded: Array<{ tokens: number[]; sepIndex: number }> = [];
  let skippedTooLong = 0;
  for (const sample of samples) {
    const tokens = tokenizer.encodeSample(sample.inputText, sample.targetText);
    if (tokens.length > opts.blockSize) {
      skippedTooLong++;
      continue;
    }
    encoded.push({ tokens, sepIndex: tokens.indexOf(tokenizer.sepId) });
  }
  if (encoded.length === 0) throw new Error("no sample fits the block size");

  const rng = mulberry32(opts.seed);
  shuffleInPlace(encoded, rng);

  let model: Model;
  if (opts.initFrom) {
    const ckpt = JSON.parse(readFileSync(opts.initFrom, "utf-8")) as Checkpoint;
    if (ckpt.vocab.length !== tokenizer.size ||
        ckpt.vocab.some((t, i) => t !== tokenizer.tokens[i])) {
      throw new Error("checkpoint vocabulary does not match this corpus");
    }
    model = fromCheckpoint(ckpt);
    log(`resumed from ${opts.initFrom}`);
  } else {
    const config: ModelConfig = {
      vocabSize: tokenizer.size,
      dModel: opts.dModel,
      nHead: opts.nHead,
      nLayer: opts.nLayer,
      dFF: opts.dFF,
      blockSize: opts.blockSize,
    };
    model = initModel(config, rng);
  }
  let nParams = 0;
  for (const p of model.params) nParams += p.data.length;
  log(`vocab ${tokenizer.size} | params ${nParams} | samples ${encoded.length} (skipped ${skippedTooLong} too long)`);

  const adam = new Adam(model, opts);
  const losses: number[] = [];
  const movingAverage: number[] = [];
  const window = 100;
  let windowSum = 0;
  const started = Date.now();

  let pending = 0;
  for (let step = 0; step < opts.steps; step++) {
    const { tokens, sepIndex } = encoded[step % encoded.length];
    const loss = lossAndBackward(model, tokens, opts.maskInputSpan ? sepIndex : 0);
    pending++;
    if (pending === opts.batchSize || step + 1 === opts.steps) {
      adam.step(step + 1, pending);
      pending = 0;
    }

    losses.push(loss);
    windowSum += loss;
    if (losses.length > window) windowSum -= losses[losses.length - 1 - window];
    movingAverage.push(windowSum / Math.min(losses.length, window));

    if ((step + 1) % opts.logEvery === 0 || step + 1 === opts.steps) {
      const dt = (Date.now() - started) / 1000;
      log(
        `step ${String(step + 1).padStart(6)} / ${opts.steps} | ` +
        `loss ${loss.toFixed(4)} | avg ${movingAverage[movingAverage.length - 1].toFixed(4)} | ` +
        `${(dt / (step + 1) * 1000).toFixed(0)} ms/step`,
      );
    }
    if (
      opts.checkpointEvery && opts.checkpointDir &&
      (step + 1) % opts.checkpointEvery === 0 && step + 1 < opts.steps
    ) {
      mkdirSync(opts.checkpointDir, { recursive: true });
      writeFileSync(
        join(opts.checkpointDir, "checkpoint.json"),
        JSON.stringify(toCheckpoint(model, tokenizer.tokens)),
      );
    }
  }

  return { model, tokenizer, losses, movingAverage, skippedTooLong };
}

export function saveRun(result: TrainResult, outDir: string): void {
  mkdirSync(outDir, { recursive: true });
  const ckpt = toCheckpoint(result.model, result.tokenizer.tokens);
  writeFileSync(join(outDir, "checkpoint.json"), JSON.stringify(ckpt));
  const rows = ["step,loss,moving_average"];
  for (let i = 0; i < result.losses.length; i++) {
    rows.push(`${i + 1},${result.losses[i].toFixed(6)},${result.movingAverage[i].toFixed(6)}`);
  }
  writeFileSync(join(outDir, "loss.csv"), rows.join("\n") + "\n");
}

function main(): void {
  const { values } = parseArgs({
    options: {
      corpus: { type: "string" },
      out: { type: "string", default: "run" },
      steps: { type: "string" },
      seed: { type: "string" },
      dim: { type: "string" },
      heads: { type: "string" },
      layers: { type: "string" },
      ff: { type: "string" },
      block: { type: "string" },
      lr: { type: "string" },
      "init-from": { type: "string" },
      "checkpoint-every": { type: "string" },
    },
  });
  if (!values.corpus) {
    console.error("usage: train --corpus corpus.txt --out run [--steps N] ...");
    process.exit(2);
  }
  const overrides: Partial<TrainOptions> = {};
  if (values.steps) overrides.steps = Number(values.steps);
  if (values.seed) overrides.seed = Number(values.seed);
  if (values.dim) overrides.dModel = Number(values.dim);
  if (values.heads) overrides.nHead = Number(values.heads);
  if (values.layers) overrides.nLayer = Number(values.layers);
  if (values.ff) overrides.dFF = Number(values.ff);
  if (values.block) overrides.blockSize = Number(values.block);
  if (values.lr) overrides.learningRate = Number(values.lr);
  if (values["init-from"]) overrides.initFrom = values["init-from"];
  if (values["checkpoint-every"]) {
    overrides.checkpointEvery = Number(values["checkpoint-every"]);
    overrides.checkpointDir = values.out;
  }

  // template violations abort here, before any training
  const samples = parseCorpus(readFileSync(values.corpus, "utf-8"));
  const result = trainModel(samples, overrides);
  saveRun(result, values.out!);
  console.log(`checkpoint + loss curve written to ${values.out}`);
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
