// A tiny pre-norm causal transformer with tied input/output embeddings.
// Training runs the whole sequence through matrix ops on a tape;
// inference re-runs token by token against a KV cache.

import { Mat, Tape, add, addBias, causalAttention, crossEntropyMasked, matmul, matmulNT, relu, rmsnorm, rope, ropeVec, sliceRows } from "./tensor.js";
import { Rng, gauss } from "./rng.js";

export interface ModelConfig {
  vocabSize: number;
  dModel: number;
  nHead: number;
  nLayer: number;
  dFF: number;
  blockSize: number;
}

export interface Model {
  config: ModelConfig;
  weights: Record<string, Mat>;
  params: Mat[];
}

export function initModel(config: ModelConfig, rng: Rng): Model {
  const { vocabSize, dModel, nHead, nLayer, dFF, blockSize } = config;
  if (dModel % nHead !== 0) throw new Error("dModel must be divisible by nHead");
  const weights: Record<string, Mat> = {};
  const matrix = (name: string, rows: number, cols: number, std: number) => {
    const m = new Mat(rows, cols);
    if (std > 0) for (let i = 0; i < m.data.length; i++) m.data[i] = gauss(rng, 0, std);
    weights[name] = m;
    return m;
  };
  matrix("wte", vocabSize, dModel, 0.08);
  matrix("wpe", blockSize, dModel, 0.02);
  for (let l = 0; l < nLayer; l++) {
    matrix(`l${l}.wq`, dModel, dModel, 0.08);
    matrix(`l${l}.wk`, dModel, dModel, 0.08);
    matrix(`l${l}.wv`, dModel, dModel, 0.08);
    matrix(`l${l}.wo`, dModel, dModel, 0.08);
    matrix(`l${l}.w1`, dModel, dFF, 0.08);
    matrix(`l${l}.b1`, 1, dFF, 0);
    matrix(`l${l}.w2`, dFF, dModel, 0.08);
    matrix(`l${l}.b2`, 1, dModel, 0);
  }
  return { config, weights, params: Object.values(weights) };
}

/** Embed tokens, with position embeddings, gradients flowing to both tables. */
function embed(tape: Tape, model: Model, tokens: number[] | Int32Array, T: number): Mat {
  const { dModel } = model.config;
  const wte = model.weights["wte"], wpe = model.weights["wpe"];
  const X = new Mat(T, dModel);
  for (let i = 0; i < T; i++) {
    const src = tokens[i] * dModel, pos = i * dModel, dst = i * dModel;
    for (let j = 0; j < dModel; j++) X.data[dst + j] = wte.data[src + j] + wpe.data[pos + j];
  }
  tape.push(() => {
    for (let i = 0; i < T; i++) {
      const src = tokens[i] * dModel, pos = i * dModel, dst = i * dModel;
      for (let j = 0; j < dModel; j++) {
        wte.grad[src + j] += X.grad[dst + j];
        wpe.grad[pos + j] += X.grad[dst + j];
      }
    }
  });
  return X;
}

/**
 * Full-sequence forward to logits (training path). Only rows from
 * logitsFrom onward hit the output head; the loss never reads earlier
 * positions, so computing them would be waste.
 */
export function forward(
  tape: Tape,
  model: Model,
  tokens: number[] | Int32Array,
  T: number,
  logitsFrom = 0,
): Mat {
  const { nHead, nLayer } = model.config;
  let X = embed(tape, model, tokens, T);
  for (let l = 0; l < nLayer; l++) {
    const w = model.weights;
    let Xn = rmsnorm(tape, X);
    const Q = rope(tape, matmul(tape, Xn, w[`l${l}.wq`]), nHead);
    const K = rope(tape, matmul(tape, Xn, w[`l${l}.wk`]), nHead);
    const V = matmul(tape, Xn, w[`l${l}.wv`]);
    const A = causalAttention(tape, Q, K, V, nHead);
    X = add(tape, X, matmul(tape, A, w[`l${l}.wo`]));
    Xn = rmsnorm(tape, X);
    const H = relu(tape, addBias(tape, matmul(tape, Xn, w[`l${l}.w1`]), w[`l${l}.b1`]));
    X = add(tape, X, addBias(tape, matmul(tape, H, w[`l${l}.w2`]), w[`l${l}.b2`]));
  }
  let Xf = rmsnorm(tape, X);
  if (logitsFrom > 0) Xf = sliceRows(tape, Xf, logitsFrom);
  return matmulNT(tape, Xf, model.weights["wte"]);
}

/**
 * One training step plus backward. Full-sequence CLM by default; with
 * maskFrom > 0 the loss covers only positions from maskFrom on (the
 * target span). Full-sequence matters in practice: predicting the input
 * span supervises the in-context copying the denoiser depends on.
 */
export function lossAndBackward(model: Model, tokens: number[], maskFrom = 0): number {
  const T = tokens.length - 1; // positions 0..T-1 predict tokens 1..T
  const tape = new Tape();
  const logits = forward(tape, model, tokens, T, maskFrom);
  const targets = new Int32Array(logits.rows);
  for (let i = 0; i < logits.rows; i++) targets[i] = tokens[maskFrom + i + 1];
  const loss = crossEntropyMasked(tape, logits, targets, 0);
  tape.backward();
  return loss;
}

// ---- inference with a KV cache (plain arrays, no autograd) ---------------

export interface KVCache {
  keys: Float32Array[][];   // [layer][t] -> d
  values: Float32Array[][];
  length: number;
}

export function emptyCache(model: Model): KVCache {
  return {
    keys: Array.from({ length: model.config.nLayer }, () => []),
    values: Array.from({ length: model.config.nLayer }, () => []),
    length: 0,
  };
}

function rmsnormVec(x: Float32Array, eps = 1e-5): Float32Array {
  let ms = 0;
  for (let j = 0; j < x.length; j++) ms += x[j] * x[j];
  const inv = 1 / Math.sqrt(ms / x.length + eps);
  const y = new Float32Array(x.length);
  for (let j = 0; j < x.length; j++) y[j] = x[j] * inv;
  return y;
}

function matvecT(W: Mat, x: Float32Array): Float32Array {
  // y = x @ W for W(rows=in, cols=out)
  const y = new Float32Array(W.cols);
  for (let i = 0; i < W.rows; i++) {
    const xi = x[i];
    if (xi === 0) continue;
    const off = i * W.cols;
    for (let j = 0; j < W.cols; j++) y[j] += xi * W.data[off + j];
  }
  return y;
}

/** Advance one token; returns logits for the next-token distribution. */
export function stepLogits(model: Model, tokenId: number, cache: KVCache): Float32Array {
  const { dModel, nHead, nLayer, vocabSize, blockSize } = model.config;
  const hd = dModel / nHead;
  const scale = 1 / Math.sqrt(hd);
  const pos = cache.length;
  if (pos >= blockSize) throw new RangeError("context window exhausted");
  const w = model.weights;
  let x = new Float32Array(dModel);
  const te = tokenId * dModel, pe = pos * dModel;
  for (let j = 0; j < dModel; j++) x[j] = w["wte"].data[te + j] + w["wpe"].data[pe + j];

  for (let l = 0; l < nLayer; l++) {
    const xn = rmsnormVec(x);
    const q = matvecT(w[`l${l}.wq`], xn);
    const k = matvecT(w[`l${l}.wk`], xn);
    const v = matvecT(w[`l${l}.wv`], xn);
    ropeVec(q, nHead, pos);
    ropeVec(k, nHead, pos); // cache holds rotated keys
    cache.keys[l].push(k);
    cache.values[l].push(v);
    const att = new Float32Array(dModel);
    const tLen = cache.keys[l].length;
    for (let h = 0; h < nHead; h++) {
      const hs = h * hd;
      const scores = new Float32Array(tLen);
      let max = -Infinity;
      for (let t = 0; t < tLen; t++) {
        const kt = cache.keys[l][t];
        let s = 0;
        for (let j = 0; j < hd; j++) s += q[hs + j] * kt[hs + j];
        s *= scale;
        scores[t] = s;
        if (s > max) max = s;
      }
      let total = 0;
      for (let t = 0; t < tLen; t++) {
        scores[t] = Math.exp(scores[t] - max);
        total += scores[t];
      }
      for (let t = 0; t < tLen; t++) {
        const wgt = scores[t] / total;
        const vt = cache.values[l][t];
        for (let j = 0; j < hd; j++) att[hs + j] += wgt * vt[hs + j];
      }
    }
    const proj = matvecT(w[`l${l}.wo`], att);
    for (let j = 0; j < dModel; j++) x[j] += proj[j];

    const xn2 = rmsnormVec(x);
    const h1 = matvecT(w[`l${l}.w1`], xn2);
    for (let j = 0; j < h1.length; j++) {
      h1[j] += w[`l${l}.b1`].data[j];
      if (h1[j] < 0) h1[j] = 0;
    }
    const h2 = matvecT(w[`l${l}.w2`], h1);
    for (let j = 0; j < dModel; j++) x[j] += h2[j] + w[`l${l}.b2`].data[j];
  }

  const xf = rmsnormVec(x);
  const logits = new Float32Array(vocabSize);
  const wte = w["wte"].data;
  for (let t = 0; t < vocabSize; t++) {
    const off = t * dModel;
    let s = 0;
    for (let j = 0; j < dModel; j++) s += xf[j] * wte[off + j];
    logits[t] = s;
  }
  cache.length++;
  return logits;
}

export function argmax(x: Float32Array): number {
  let best = 0;
  for (let i = 1; i < x.length; i++) if (x[i] > x[best]) best = i;
  return best;
}

// ---- checkpoint serialization ---------------------------------------------

export interface Checkpoint {
  config: ModelConfig;
  vocab: string[];
  weights: Record<string, string>; // base64 Float32Array
}

export function toCheckpoint(model: Model, vocab: string[]): Checkpoint {
  const weights: Record<string, string> = {};
  for (const [name, mat] of Object.entries(model.weights)) {
    weights[name] = Buffer.from(mat.data.buffer, mat.data.byteOffset, mat.data.byteLength)
      .toString("base64");
  }
  return { config: model.config, vocab, weights };
}

export function fromCheckpoint(ckpt: Checkpoint): Model {
  const model = initModel(ckpt.config, () => 0);
  for (const [name, b64] of Object.entries(ckpt.weights)) {
    const buf = Buffer.from(b64, "base64");
    const arr = new Float32Array(buf.buffer, buf.byteOffset, buf.byteLength / 4);
    model.weights[name].data.set(arr);
  }
  return model;
}
