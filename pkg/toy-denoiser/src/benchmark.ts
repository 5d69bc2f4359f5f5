// End-to-end comparison: noised inputs vs model regenerations, both
// scored by the primary `noisemill evaluate` CLI against the clean
// references. All coupling to the primary goes through its CLI and file
// formats; nothing is imported in-process.

import { execFileSync } from "node:child_process";
import { existsSync, mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { generate, loadRun } from "./infer.js";
import { Model } from "./model.js";
import { initModel } from "./model.js";
import { mulberry32 } from "./rng.js";
import { parseCorpus } from "./template.js";
import { Tokenizer } from "./tokenizer.js";
import { DEFAULT_TRAIN, TrainOptions, saveRun, trainModel } from "./train.js";

const NOISEMILL = process.env.NOISEMILL_BIN ?? "noisemill";

export interface BenchmarkPlan {
  workdir: string;
  categories: number;
  trainObjects: number;
  evalObjects: number;
  trainSeed: number;
  evalSeed: number;
  soupProbability: number;
  train: Partial<TrainOptions>;
  untrained: boolean;
  checkpoint?: string;
}

export const PRESETS: Record<string, Partial<BenchmarkPlan>> = {
  demo: {
    categories: 6, trainObjects: 4000, evalObjects: 200,
    train: { steps: 12000 },
  },
  full: {
    categories: 8, trainObjects: 50000, evalObjects: 1000,
    train: { steps: 50000 },
  },
};

function run(args: string[]): void {
  execFileSync(NOISEMILL, args, { stdio: ["ignore", "inherit", "inherit"] });
}

function writeNoiseConfig(path: string, seed: number, soupProbability: number): void {
  writeFileSync(path, JSON.stringify({ mode: "grounded", seed, soup_probability: soupProbability }));
}

export function prepareData(plan: BenchmarkPlan): { trainCorpus: string; evalCorpus: string; schemas: string } {
  const d = plan.workdir;
  mkdirSync(d, { recursive: true });
  // One world, one schema set; held-out means disjoint records, not a
  // differently-sampled universe. Eval records are the tail of the run.
  const world = join(d, "world");
  run(["synth", "--categories", String(plan.categories),
       "--objects", String(plan.trainObjects + plan.evalObjects),
       "--seed", String(plan.trainSeed), "--out", world]);
  const all = readFileSync(join(world, "objects.jsonl"), "utf-8").split("\n");
  if (all[all.length - 1] === "") all.pop();
  const trainObjectsPath = join(d, "train-objects.jsonl");
  const evalObjectsPath = join(d, "eval-objects.jsonl");
  writeFileSync(trainObjectsPath, all.slice(0, plan.trainObjects).join("\n") + "\n");
  writeFileSync(evalObjectsPath, all.slice(plan.trainObjects).join("\n") + "\n");
  const schemas = join(world, "schemas.json");

  const trainNoise = join(d, "noise-train.json");
  writeNoiseConfig(trainNoise, plan.trainSeed, plan.soupProbability);
  // evaluation inputs must stay parseable objects, so no soup there
  const evalNoise = join(d, "noise-eval.json");
  writeNoiseConfig(evalNoise, plan.evalSeed, 0.0);

  const trainCorpus = join(d, "train-corpus.txt");
  const evalCorpus = join(d, "eval-corpus.txt");
  run(["build", "--in", trainObjectsPath, "--schemas", schemas,
       "--noise-config", trainNoise, "--out", trainCorpus,
       "--stats", join(d, "train-stats.json"), "--jobs", "1"]);
  run(["build", "--in", evalObjectsPath, "--schemas", schemas,
       "--noise-config", evalNoise, "--out", evalCorpus,
       "--stats", join(d, "eval-stats.json"), "--jobs", "1"]);
  return { trainCorpus, evalCorpus, schemas };
}

interface RegenResult {
  records: number;
  parsed: number;
  categoryMatched: number;
  lengthCapExceeded: number;
}

export function categoryOf(line: string): string | null {
  try {
    const obj = JSON.parse(line);
    if (obj && typeof obj === "object" && !Array.isArray(obj) &&
        typeof obj.category === "string" && obj.category !== "") {
      return obj.category;
    }
  } catch {
    // not an object line
  }
  return null;
}

export function regenerate(
  model: Model,
  tokenizer: Tokenizer,
  evalCorpus: string,
  outDir: string,
  onLog: (line: string) => void = console.log,
): RegenResult {
  const samples = parseCorpus(readFileSync(evalCorpus, "utf-8"));
  const refLines: string[] = [];
  const noisedLines: string[] = [];
  const regenLines: string[] = [];
  const result: RegenResult = { records: 0, parsed: 0, categoryMatched: 0, lengthCapExceeded: 0 };
  const started = Date.now();

  for (const sample of samples) {
    const refCategory = categoryOf(sample.targetText)!;
    const generation = generate(model, tokenizer, sample.inputText);
    if (generation.lengthCapExceeded) result.lengthCapExceeded++;
    const regenCategory = categoryOf(generation.text);
    if (regenCategory !== null) result.parsed++;
    if (regenCategory === refCategory) {
      result.categoryMatched++;
      regenLines.push(generation.text);
    } else {
      // keep the evaluate files line-aligned; an empty object of the right
      // category scores zero everywhere, which is the honest penalty
      regenLines.push(JSON.stringify({ category: refCategory }));
    }
    refLines.push(sample.targetText);
    noisedLines.push(sample.inputText);
    result.records++;
    if (result.records % 100 === 0) {
      const dt = (Date.now() - started) / 1000;
      onLog(`regenerated ${result.records}/${samples.length} (${(dt / result.records * 1000).toFixed(0)} ms/record)`);
    }
  }
  writeFileSync(join(outDir, "reference.jsonl"), refLines.join("\n") + "\n");
  writeFileSync(join(outDir, "noised.jsonl"), noisedLines.join("\n") + "\n");
  writeFileSync(join(outDir, "regenerated.jsonl"), regenLines.join("\n") + "\n");
  return result;
}

function evaluatePair(workdir: string, schemas: string, candidate: string, tag: string): Record<string, any> {
  const aggregate = join(workdir, `aggregate-${tag}.json`);
  run(["evaluate", "--reference", join(workdir, "reference.jsonl"), "--candidate", candidate,
       "--schemas", schemas, "--out", join(workdir, `per-record-${tag}.jsonl`),
       "--aggregate", aggregate]);
  return JSON.parse(readFileSync(aggregate, "utf-8"));
}

export function runBenchmark(plan: BenchmarkPlan): Record<string, any> {
  const { trainCorpus, evalCorpus, schemas } = prepareData(plan);

  let model: Model;
  let tokenizer: Tokenizer;
  if (plan.checkpoint && existsSync(plan.checkpoint)) {
    console.log(`loading checkpoint ${plan.checkpoint}`);
    ({ model, tokenizer } = loadRun(plan.checkpoint));
  } else {
    const samples = parseCorpus(readFileSync(trainCorpus, "utf-8"));
    if (plan.untrained) {
      // negative control: random weights over the real vocabulary
      const result = trainModel(samples, { ...plan.train, steps: 1, learningRate: 0 });
      model = initModel(result.model.config, mulberry32(1));
      tokenizer = result.tokenizer;
    } else {
      const result = trainModel(samples, {
        checkpointEvery: 10000,
        checkpointDir: join(plan.workdir, "run"),
        ...plan.train,
      });
      saveRun(result, join(plan.workdir, "run"));
      model = result.model;
      tokenizer = result.tokenizer;
    }
  }

  const regen = regenerate(model, tokenizer, evalCorpus, plan.workdir);
  const noised = evaluatePair(plan.workdir, schemas, join(plan.workdir, "noised.jsonl"), "noised");
  const regenerated = evaluatePair(plan.workdir, schemas, join(plan.workdir, "regenerated.jsonl"), "regenerated");

  const direction = ["title_rouge_l_f1", "description_rouge_l_f1", "attribute_accuracy"].map((field) => ({
    field,
    noised: noised[field]["mean"],
    regenerated: regenerated[field]["mean"],
    improved: regenerated[field]["mean"] > noised[field]["mean"],
  }));

  const comparison = {
    records: regen.records,
    parse_rate: regen.parsed / regen.records,
    category_match_rate: regen.categoryMatched / regen.records,
    length_cap_exceeded: regen.lengthCapExceeded,
    direction,
    direction_ok: direction.every((d) => d.improved),
    noised,
    regenerated,
  };
  writeFileSync(join(plan.workdir, "comparison.json"), JSON.stringify(comparison, null, 2) + "\n");

  console.log("\nfacet".padEnd(28) + "noised".padStart(10) + "regenerated".padStart(14));
  for (const d of direction) {
    console.log(d.field.padEnd(28) + d.noised.toFixed(2).padStart(10) + d.regenerated.toFixed(2).padStart(14)
      + (d.improved ? "  +" : "  -"));
  }
  console.log(`parse rate: ${(100 * comparison.parse_rate).toFixed(1)}%  ` +
              `length-capped: ${regen.lengthCapExceeded}  direction ok: ${comparison.direction_ok}`);
  return comparison;
}

function main(): void {
  const { values } = parseArgs({
    options: {
      preset: { type: "string", default: "demo" },
      workdir: { type: "string" },
      "train-objects": { type: "string" },
      "eval-objects": { type: "string" },
      categories: { type: "string" },
      steps: { type: "string" },
      untrained: { type: "boolean", default: false },
      checkpoint: { type: "string" },
    },
  });
  const preset = PRESETS[values.preset!];
  if (!preset) {
    console.error(`unknown preset ${values.preset}; use one of ${Object.keys(PRESETS).join(", ")}`);
    process.exit(2);
  }
  const plan: BenchmarkPlan = {
    workdir: values.workdir ?? `bench-${values.preset}`,
    categories: 6,
    trainObjects: 4000,
    evalObjects: 200,
    trainSeed: 11,
    evalSeed: 9090,
    soupProbability: 0.3,
    train: { ...DEFAULT_TRAIN },
    untrained: values.untrained!,
    checkpoint: values.checkpoint,
    ...preset,
  };
  plan.train = { ...DEFAULT_TRAIN, ...preset.train };
  if (values.categories) plan.categories = Number(values.categories);
  if (values["train-objects"]) plan.trainObjects = Number(values["train-objects"]);
  if (values["eval-objects"]) plan.evalObjects = Number(values["eval-objects"]);
  if (values.steps) plan.train.steps = Number(values.steps);

  const comparison = runBenchmark(plan);
  process.exitCode = comparison.direction_ok ? 0 : 1;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main();
}
