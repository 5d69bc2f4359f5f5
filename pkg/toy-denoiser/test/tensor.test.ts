// Gradient checks: compare backprop against central finite differences
// along random parameter directions. float32 storage limits precision,
// so the comparison is directional (aggregated) with a loose tolerance.

import { describe, expect, it } from "vitest";

import { initModel, lossAndBackward } from "../src/model.js";
import { mulberry32 } from "../src/rng.js";
import { Mat, Tape, causalAttention, crossEntropyMasked, matmul, rmsnorm, rope, ropeVec, sliceRows } from "../src/tensor.js";

function randomMat(rows: number, cols: number, rng: () => number): Mat {
  const m = new Mat(rows, cols);
  for (let i = 0; i < m.data.length; i++) m.data[i] = (rng() - 0.5) * 0.8;
  return m;
}

describe("tape backward", () => {
  it("matmul gradients match finite differences", () => {
    const rng = mulberry32(1);
    const A = randomMat(3, 4, rng);
    const B = randomMat(4, 2, rng);

    const lossOf = () => {
      const tape = new Tape();
      const C = matmul(tape, A, B);
      let s = 0;
      for (let i = 0; i < C.data.length; i++) s += C.data[i] * C.data[i];
      return { tape, C, loss: s };
    };

    const { tape, C, loss } = lossOf();
    for (let i = 0; i < C.data.length; i++) C.grad[i] = 2 * C.data[i];
    tape.backward();

    const eps = 1e-3;
    for (const mat of [A, B]) {
      for (const idx of [0, 3, mat.data.length - 1]) {
        const orig = mat.data[idx];
        mat.data[idx] = orig + eps;
        const up = lossOf().loss;
        mat.data[idx] = orig - eps;
        const down = lossOf().loss;
        mat.data[idx] = orig;
        const numeric = (up - down) / (2 * eps);
        expect(Math.abs(numeric - mat.grad[idx])).toBeLessThan(2e-2 * Math.max(1, Math.abs(numeric)));
      }
    }
    expect(loss).toBeGreaterThan(0);
  });

  it("attention + rmsnorm + slice + cross-entropy gradients match a directional derivative", () => {
    const rng = mulberry32(2);
    const T = 5, d = 8, nHead = 2, V = 7;
    const X = randomMat(T, d, rng);
    const Wq = randomMat(d, d, rng);
    const Wk = randomMat(d, d, rng);
    const Wv = randomMat(d, d, rng);
    const Wout = randomMat(d, V, rng);
    const params = [X, Wq, Wk, Wv, Wout];
    const targets = new Int32Array([1, 2, 3, 4, 5]);

    const lossOf = (): { tape: Tape; loss: number } => {
      const tape = new Tape();
      const Xn = rmsnorm(tape, X);
      const A = causalAttention(
        tape,
        rope(tape, matmul(tape, Xn, Wq), nHead),
        rope(tape, matmul(tape, Xn, Wk), nHead),
        matmul(tape, Xn, Wv),
        nHead,
      );
      const logits = matmul(tape, sliceRows(tape, A, 1), Wout);
      const loss = crossEntropyMasked(tape, logits, targets.subarray(1), 0);
      return { tape, loss };
    };

    const base = lossOf();
    base.tape.backward();

    // random direction over all parameters
    const dirRng = mulberry32(3);
    const direction = params.map((p) => Float32Array.from(p.data, () => dirRng() - 0.5));
    let analytic = 0;
    params.forEach((p, pi) => {
      for (let i = 0; i < p.data.length; i++) analytic += p.grad[i] * direction[pi][i];
    });

    const eps = 1e-3;
    const nudge = (sign: number) =>
      params.forEach((p, pi) => {
        for (let i = 0; i < p.data.length; i++) p.data[i] += sign * eps * direction[pi][i];
      });
    nudge(+1);
    const up = lossOf().loss;
    nudge(-2);
    const down = lossOf().loss;
    nudge(+1);
    const numeric = (up - down) / (2 * eps);

    expect(Math.abs(numeric - analytic)).toBeLessThan(2e-2 * Math.max(1, Math.abs(numeric)));
  });

  it("whole-model loss gradient matches a directional derivative", () => {
    const rng = mulberry32(4);
    const model = initModel(
      { vocabSize: 11, dModel: 8, nHead: 2, nLayer: 1, dFF: 16, blockSize: 16 }, rng,
    );
    const tokens = [0, 5, 3, 7, 1, 2, 9, 10];
    const sepIndex = 4;

    // lossAndBackward never mutates weights, only grads, which the
    // finite-difference probes below ignore
    const lossOnly = () => lossAndBackward(model, tokens, sepIndex);

    const loss0 = lossAndBackward(model, tokens, sepIndex);
    expect(loss0).toBeGreaterThan(0);
    const grads = model.params.map((p) => Float32Array.from(p.grad));
    model.params.forEach((p) => p.grad.fill(0));

    const dirRng = mulberry32(5);
    const direction = model.params.map((p) => Float32Array.from(p.data, () => dirRng() - 0.5));
    let analytic = 0;
    grads.forEach((g, pi) => {
      for (let i = 0; i < g.length; i++) analytic += g[i] * direction[pi][i];
    });

    const eps = 5e-4;
    const nudge = (sign: number) =>
      model.params.forEach((p, pi) => {
        for (let i = 0; i < p.data.length; i++) p.data[i] += sign * eps * direction[pi][i];
      });
    nudge(+1);
    const up = lossOnly();
    nudge(-2);
    const down = lossOnly();
    nudge(+1);
    const numeric = (up - down) / (2 * eps);

    expect(Math.abs(numeric - analytic)).toBeLessThan(3e-2 * Math.max(1, Math.abs(numeric)));
  });

  it("rope matches the single-vector rotation used at inference", () => {
    const rng = mulberry32(6);
    const A = randomMat(3, 8, rng);
    const tape = new Tape();
    const C = rope(tape, A, 2, 0);
    for (let i = 0; i < 3; i++) {
      const row = Float32Array.from(A.data.subarray(i * 8, (i + 1) * 8));
      ropeVec(row, 2, i);
      for (let j = 0; j < 8; j++) {
        expect(Math.abs(C.data[i * 8 + j] - row[j])).toBeLessThan(1e-6);
      }
    }
  });

  it("rope preserves vector norms", () => {
    const rng = mulberry32(7);
    const A = randomMat(4, 8, rng);
    const C = rope(new Tape(), A, 2, 3);
    for (let i = 0; i < 4; i++) {
      let na = 0, nc = 0;
      for (let j = 0; j < 8; j++) {
        na += A.data[i * 8 + j] ** 2;
        nc += C.data[i * 8 + j] ** 2;
      }
      expect(Math.abs(na - nc)).toBeLessThan(1e-4);
    }
  });
});
