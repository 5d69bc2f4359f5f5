// Minimal matrix autograd: Float32Array storage, a tape of backward
// closures, and 4-row-blocked matmul kernels (the speed of these loops
// decides the training wall clock).

export class Mat {
  rows: number;
  cols: number;
  data: Float32Array;
  grad: Float32Array;

  constructor(rows: number, cols: number, data?: Float32Array) {
    this.rows = rows;
    this.cols = cols;
    this.data = data ?? new Float32Array(rows * cols);
    this.grad = new Float32Array(rows * cols);
  }
}

export class Tape {
  private ops: Array<() => void> = [];

  push(backward: () => void): void {
    this.ops.push(backward);
  }

  backward(): void {
    for (let i = this.ops.length - 1; i >= 0; i--) this.ops[i]();
    this.ops.length = 0;
  }
}

// C += A(n x k) @ B(k x m), blocked over 4 rows of A
function mmAcc(A: Float32Array, B: Float32Array, C: Float32Array, n: number, k: number, m: number): void {
  const n4 = n & ~3;
  for (let i = 0; i < n4; i += 4) {
    const a0 = i * k, a1 = a0 + k, a2 = a1 + k, a3 = a2 + k;
    const c0 = i * m, c1 = c0 + m, c2 = c1 + m, c3 = c2 + m;
    for (let p = 0; p < k; p++) {
      const x0 = A[a0 + p], x1 = A[a1 + p], x2 = A[a2 + p], x3 = A[a3 + p];
      const bp = p * m;
      for (let j = 0; j < m; j++) {
        const b = B[bp + j];
        C[c0 + j] += x0 * b;
        C[c1 + j] += x1 * b;
        C[c2 + j] += x2 * b;
        C[c3 + j] += x3 * b;
      }
    }
  }
  for (let i = n4; i < n; i++) {
    const ai = i * k, ci = i * m;
    for (let p = 0; p < k; p++) {
      const a = A[ai + p], bp = p * m;
      for (let j = 0; j < m; j++) C[ci + j] += a * B[bp + j];
    }
  }
}

// C += A(n x k) @ B(m x k)^T
function mmAccNT(A: Float32Array, B: Float32Array, C: Float32Array, n: number, k: number, m: number): void {
  for (let i = 0; i < n; i++) {
    const ai = i * k, ci = i * m;
    for (let j = 0; j < m; j++) {
      const bj = j * k;
      let acc = 0;
      for (let p = 0; p < k; p++) acc += A[ai + p] * B[bj + p];
      C[ci + j] += acc;
    }
  }
}

// C += A(k x n)^T @ B(k x m)
function mmAccTN(A: Float32Array, B: Float32Array, C: Float32Array, n: number, k: number, m: number): void {
  for (let p = 0; p < k; p++) {
    const ap = p * n, bp = p * m;
    for (let i = 0; i < n; i++) {
      const a = A[ap + i];
      if (a === 0) continue;
      const ci = i * m;
      for (let j = 0; j < m; j++) C[ci + j] += a * B[bp + j];
    }
  }
}

/** C = A @ B with gradients into both. */
export function matmul(tape: Tape, A: Mat, B: Mat): Mat {
  const C = new Mat(A.rows, B.cols);
  mmAcc(A.data, B.data, C.data, A.rows, A.cols, B.cols);
  tape.push(() => {
    mmAccNT(C.grad, B.data, A.grad, A.rows, B.cols, A.cols); // dA += dC @ B^T
    mmAccTN(A.data, C.grad, B.grad, A.cols, A.rows, B.cols); // dB += A^T @ dC
  });
  return C;
}

/** C = A @ B^T (used for the tied output head). */
export function matmulNT(tape: Tape, A: Mat, B: Mat): Mat {
  const C = new Mat(A.rows, B.rows);
  mmAccNT(A.data, B.data, C.data, A.rows, A.cols, B.rows);
  tape.push(() => {
    mmAcc(C.grad, B.data, A.grad, A.rows, B.rows, A.cols);   // dA += dC @ B
    mmAccTN(C.grad, A.data, B.grad, B.rows, A.rows, A.cols); // dB += dC^T @ A
  });
  return C;
}

export function add(tape: Tape, A: Mat, B: Mat): Mat {
  const C = new Mat(A.rows, A.cols);
  for (let i = 0; i < C.data.length; i++) C.data[i] = A.data[i] + B.data[i];
  tape.push(() => {
    for (let i = 0; i < C.data.length; i++) {
      A.grad[i] += C.grad[i];
      B.grad[i] += C.grad[i];
    }
  });
  return C;
}

/** Row-broadcast bias add: A(n x m) + b(1 x m). */
export function addBias(tape: Tape, A: Mat, b: Mat): Mat {
  const C = new Mat(A.rows, A.cols);
  const m = A.cols;
  for (let i = 0; i < A.rows; i++) {
    const off = i * m;
    for (let j = 0; j < m; j++) C.data[off + j] = A.data[off + j] + b.data[j];
  }
  tape.push(() => {
    for (let i = 0; i < A.rows; i++) {
      const off = i * m;
      for (let j = 0; j < m; j++) {
        A.grad[off + j] += C.grad[off + j];
        b.grad[j] += C.grad[off + j];
      }
    }
  });
  return C;
}

export function relu(tape: Tape, A: Mat): Mat {
  const C = new Mat(A.rows, A.cols);
  for (let i = 0; i < A.data.length; i++) C.data[i] = A.data[i] > 0 ? A.data[i] : 0;
  tape.push(() => {
    for (let i = 0; i < A.data.length; i++) {
      if (A.data[i] > 0) A.grad[i] += C.grad[i];
    }
  });
  return C;
}

/** Row-wise RMS normalization, no learned parameters. */
export function rmsnorm(tape: Tape, A: Mat, eps = 1e-5): Mat {
  const C = new Mat(A.rows, A.cols);
  const d = A.cols;
  const invr = new Float32Array(A.rows);
  for (let i = 0; i < A.rows; i++) {
    const off = i * d;
    let ms = 0;
    for (let j = 0; j < d; j++) ms += A.data[off + j] * A.data[off + j];
    const inv = 1 / Math.sqrt(ms / d + eps);
    invr[i] = inv;
    for (let j = 0; j < d; j++) C.data[off + j] = A.data[off + j] * inv;
  }
  tape.push(() => {
    for (let i = 0; i < A.rows; i++) {
      const off = i * d;
      const inv = invr[i];
      let dot = 0;
      for (let j = 0; j < d; j++) dot += C.grad[off + j] * A.data[off + j];
      const scale = (inv * inv * inv * dot) / d;
      for (let j = 0; j < d; j++) {
        A.grad[off + j] += inv * C.grad[off + j] - scale * A.data[off + j];
      }
    }
  });
  return C;
}

/**
 * Rotary position encoding over head slices: each (2j, 2j+1) pair within
 * a head rotates by pos * theta_j. Rotation is orthogonal, so the
 * backward pass rotates gradients the opposite way. Relative matching is
 * what lets copy heads work at any input length.
 */
export function rope(tape: Tape, A: Mat, nHead: number, startPos = 0, base = 10000): Mat {
  const T = A.rows, d = A.cols, hd = d / nHead;
  const half = hd / 2;
  if (hd % 2 !== 0) throw new Error("head dim must be even for rope");
  const C = new Mat(T, d);
  const apply = (src: Float32Array, dst: Float32Array, sign: number) => {
    for (let i = 0; i < T; i++) {
      const pos = startPos + i;
      const off = i * d;
      for (let h = 0; h < nHead; h++) {
        const hs = off + h * hd;
        for (let j = 0; j < half; j++) {
          const theta = pos * Math.pow(base, -2 * j / hd);
          const cos = Math.cos(theta), sin = sign * Math.sin(theta);
          const a = src[hs + 2 * j], b = src[hs + 2 * j + 1];
          dst[hs + 2 * j] += a * cos - b * sin;
          dst[hs + 2 * j + 1] += a * sin + b * cos;
        }
      }
    }
  };
  apply(A.data, C.data, +1);
  tape.push(() => apply(C.grad, A.grad, -1));
  return C;
}

/** In-place rotary encoding of a single position vector (inference path). */
export function ropeVec(x: Float32Array, nHead: number, pos: number, base = 10000): void {
  const d = x.length, hd = d / nHead, half = hd / 2;
  for (let h = 0; h < nHead; h++) {
    const hs = h * hd;
    for (let j = 0; j < half; j++) {
      const theta = pos * Math.pow(base, -2 * j / hd);
      const cos = Math.cos(theta), sin = Math.sin(theta);
      const a = x[hs + 2 * j], b = x[hs + 2 * j + 1];
      x[hs + 2 * j] = a * cos - b * sin;
      x[hs + 2 * j + 1] = a * sin + b * cos;
    }
  }
}

/**
 * Multi-head causal self-attention over a full sequence.
 * Q, K, V are (T x d); heads split d into nHead slices.
 */
export function causalAttention(tape: Tape, Q: Mat, K: Mat, V: Mat, nHead: number): Mat {
  const T = Q.rows, d = Q.cols, hd = d / nHead;
  const scale = 1 / Math.sqrt(hd);
  const O = new Mat(T, d);
  // per-head softmax weights, kept for the backward pass
  const probs: Float32Array[] = [];
  for (let h = 0; h < nHead; h++) {
    const hs = h * hd;
    const P = new Float32Array(T * T);
    for (let i = 0; i < T; i++) {
      const qi = i * d + hs;
      let max = -Infinity;
      const row = i * T;
      for (let t = 0; t <= i; t++) {
        const kt = t * d + hs;
        let s = 0;
        for (let j = 0; j < hd; j++) s += Q.data[qi + j] * K.data[kt + j];
        s *= scale;
        P[row + t] = s;
        if (s > max) max = s;
      }
      let total = 0;
      for (let t = 0; t <= i; t++) {
        const e = Math.exp(P[row + t] - max);
        P[row + t] = e;
        total += e;
      }
      const inv = 1 / total;
      for (let t = 0; t <= i; t++) P[row + t] *= inv;
      const oi = i * d + hs;
      for (let t = 0; t <= i; t++) {
        const w = P[row + t];
        const vt = t * d + hs;
        for (let j = 0; j < hd; j++) O.data[oi + j] += w * V.data[vt + j];
      }
    }
    probs.push(P);
  }
  tape.push(() => {
    for (let h = 0; h < nHead; h++) {
      const hs = h * hd;
      const P = probs[h];
      for (let i = 0; i < T; i++) {
        const row = i * T;
        const oi = i * d + hs;
        const qi = oi;
        // dP[t] = dO . V_t ; dV_t += P[t] * dO
        let dot = 0; // sum_t P[t] * dP[t] for the softmax backward
        const dP = new Float32Array(i + 1);
        for (let t = 0; t <= i; t++) {
          const vt = t * d + hs;
          let acc = 0;
          for (let j = 0; j < hd; j++) {
            acc += O.grad[oi + j] * V.data[vt + j];
            V.grad[vt + j] += P[row + t] * O.grad[oi + j];
          }
          dP[t] = acc;
          dot += P[row + t] * acc;
        }
        for (let t = 0; t <= i; t++) {
          const dS = P[row + t] * (dP[t] - dot) * scale;
          if (dS === 0) continue;
          const kt = t * d + hs;
          for (let j = 0; j < hd; j++) {
            Q.grad[qi + j] += dS * K.data[kt + j];
            K.grad[kt + j] += dS * Q.data[qi + j];
          }
        }
      }
    }
  });
  return O;
}

/** Rows [start, A.rows) as their own matrix; gradients scatter back. */
export function sliceRows(tape: Tape, A: Mat, start: number): Mat {
  const rows = A.rows - start;
  const C = new Mat(rows, A.cols);
  C.data.set(A.data.subarray(start * A.cols));
  tape.push(() => {
    const off = start * A.cols;
    for (let i = 0; i < C.grad.length; i++) A.grad[off + i] += C.grad[i];
  });
  return C;
}

/**
 * Mean cross-entropy over positions >= maskStart predicting targets[pos].
 * Writes softmax-CE gradients straight into logits.grad on backward.
 */
export function crossEntropyMasked(
  tape: Tape,
  logits: Mat,
  targets: Int32Array,
  maskStart: number,
): number {
  const V = logits.cols;
  let loss = 0;
  let count = 0;
  const probsRows: Array<{ pos: number; probs: Float32Array }> = [];
  for (let pos = maskStart; pos < logits.rows; pos++) {
    const off = pos * V;
    let max = -Infinity;
    for (let j = 0; j < V; j++) if (logits.data[off + j] > max) max = logits.data[off + j];
    let total = 0;
    const probs = new Float32Array(V);
    for (let j = 0; j < V; j++) {
      const e = Math.exp(logits.data[off + j] - max);
      probs[j] = e;
      total += e;
    }
    const inv = 1 / total;
    for (let j = 0; j < V; j++) probs[j] *= inv;
    loss += -Math.log(probs[targets[pos]] + 1e-12);
    probsRows.push({ pos, probs });
    count++;
  }
  if (count === 0) return 0;
  tape.push(() => {
    const scale = 1 / count;
    for (const { pos, probs } of probsRows) {
      const off = pos * V;
      for (let j = 0; j < V; j++) logits.grad[off + j] += probs[j] * scale;
      logits.grad[off + targets[pos]] -= scale;
    }
  });
  return loss / count;
}
