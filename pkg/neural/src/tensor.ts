/** Flat Float64Array parameter matrices and the matmul kernels the model
 * needs. Row-major throughout: element (r, c) of an R x C matrix lives at
 * r * C + c. */

import { Rng } from "./rng.js";

export class Param {
  data: Float64Array;
  grad: Float64Array;

  constructor(
    readonly name: string,
    readonly rows: number,
    readonly cols: number,
  ) {
    this.data = new Float64Array(rows * cols);
    this.grad = new Float64Array(rows * cols);
  }

  get size(): number {
    return this.rows * this.cols;
  }

  fillGauss(rng: Rng, std: number): this {
    for (let i = 0; i < this.data.length; i++) this.data[i] = rng.gauss() * std;
    return this;
  }

  fill(value: number): this {
    this.data.fill(value);
    return this;
  }

  zeroGrad(): void {
    this.grad.fill(0);
  }
}

/** out[M,N] += a[M,K] @ b[K,N] */
export function matmulAcc(
  a: Float64Array,
  b: Float64Array,
  out: Float64Array,
  M: number,
  K: number,
  N: number,
): void {
  for (let m = 0; m < M; m++) {
    const aRow = m * K;
    const outRow = m * N;
    for (let k = 0; k < K; k++) {
      const av = a[aRow + k];
      if (av === 0) continue;
      const bRow = k * N;
      for (let n = 0; n < N; n++) {
        out[outRow + n] += av * b[bRow + n];
      }
    }
  }
}

/** dA[M,K] += dOut[M,N] @ b[K,N]^T */
export function matmulAccBT(
  dOut: Float64Array,
  b: Float64Array,
  dA: Float64Array,
  M: number,
  K: number,
  N: number,
): void {
  for (let m = 0; m < M; m++) {
    const dRow = m * N;
    const aRow = m * K;
    for (let k = 0; k < K; k++) {
      const bRow = k * N;
      let acc = 0;
      for (let n = 0; n < N; n++) {
        acc += dOut[dRow + n] * b[bRow + n];
      }
      dA[aRow + k] += acc;
    }
  }
}

/** dB[K,N] += a[M,K]^T @ dOut[M,N] */
export function matmulAccAT(
  a: Float64Array,
  dOut: Float64Array,
  dB: Float64Array,
  M: number,
  K: number,
  N: number,
): void {
  for (let m = 0; m < M; m++) {
    const aRow = m * K;
    const dRow = m * N;
    for (let k = 0; k < K; k++) {
      const av = a[aRow + k];
      if (av === 0) continue;
      const bRow = k * N;
      for (let n = 0; n < N; n++) {
        dB[bRow + n] += av * dOut[dRow + n];
      }
    }
  }
}
