/**
 * Toy decoder-only transformer with segment-level recurrence.
 *
 * Each layer attends over [cached memory ‖ current segment]; the cache holds
 * the previous segments' layer inputs and receives no gradient, so long
 * sequences train segment by segment while information still flows across
 * the boundary. Position information enters as a learned per-head relative
 * bias on attention scores, which stays consistent when cached states shift
 * window position. Forward and backward are written out by hand over flat
 * Float64Arrays.
 */

import { Rng } from "./rng.js";
import { Param, matmulAcc, matmulAccAT, matmulAccBT } from "./tensor.js";

export interface ModelConfig {
  vocabSize: number;
  dModel: number;
  numLayers: number;
  numHeads: number;
  ffSize: number;
  segmentLength: number;
  memoryLength: number;
}

export const DEFAULT_CONFIG: ModelConfig = {
  vocabSize: 631,
  dModel: 48,
  numLayers: 2,
  numHeads: 2,
  ffSize: 96,
  segmentLength: 512,
  memoryLength: 512,
};

interface LayerParams {
  ln1g: Param;
  ln1b: Param;
  wq: Param;
  wk: Param;
  wv: Param;
  wo: Param;
  relBias: Param; // [numHeads, memoryLength + segmentLength]
  ln2g: Param;
  ln2b: Param;
  w1: Param;
  b1: Param;
  w2: Param;
  b2: Param;
}

export interface Model {
  config: ModelConfig;
  tokEmb: Param; // [V, d]
  layers: LayerParams[];
  lnFg: Param;
  lnFb: Param;
  wOut: Param; // [d, V]
  bOut: Param; // [1, V]
}

export function createModel(config: ModelConfig, seed: number): Model {
  config = { ...config }; // models own their config; callers may tweak it later
  if (config.dModel % config.numHeads !== 0) {
    throw new Error("dModel must be divisible by numHeads");
  }
  const rng = new Rng(seed);
  const d = config.dModel;
  const window = config.memoryLength + config.segmentLength;
  const layers: LayerParams[] = [];
  for (let l = 0; l < config.numLayers; l++) {
    layers.push({
      ln1g: new Param(`l${l}.ln1g`, 1, d).fill(1),
      ln1b: new Param(`l${l}.ln1b`, 1, d),
      wq: new Param(`l${l}.wq`, d, d).fillGauss(rng, 0.02),
      wk: new Param(`l${l}.wk`, d, d).fillGauss(rng, 0.02),
      wv: new Param(`l${l}.wv`, d, d).fillGauss(rng, 0.02),
      wo: new Param(`l${l}.wo`, d, d).fillGauss(rng, 0.02),
      relBias: new Param(`l${l}.relBias`, config.numHeads, window),
      ln2g: new Param(`l${l}.ln2g`, 1, d).fill(1),
      ln2b: new Param(`l${l}.ln2b`, 1, d),
      w1: new Param(`l${l}.w1`, d, config.ffSize).fillGauss(rng, 0.02),
      b1: new Param(`l${l}.b1`, 1, config.ffSize),
      w2: new Param(`l${l}.w2`, config.ffSize, d).fillGauss(rng, 0.02),
      b2: new Param(`l${l}.b2`, 1, d),
    });
  }
  return {
    config,
    tokEmb: new Param("tokEmb", config.vocabSize, d).fillGauss(rng, 0.02),
    layers,
    lnFg: new Param("lnFg", 1, d).fill(1),
    lnFb: new Param("lnFb", 1, d),
    wOut: new Param("wOut", d, config.vocabSize).fillGauss(rng, 0.02),
    bOut: new Param("bOut", 1, config.vocabSize),
  };
}

export function allParams(model: Model): Param[] {
  const out: Param[] = [model.tokEmb];
  for (const l of model.layers) {
    out.push(
      l.ln1g, l.ln1b, l.wq, l.wk, l.wv, l.wo, l.relBias,
      l.ln2g, l.ln2b, l.w1, l.b1, l.w2, l.b2,
    );
  }
  out.push(model.lnFg, model.lnFb, model.wOut, model.bOut);
  return out;
}

export function zeroGrads(model: Model): void {
  for (const p of allParams(model)) p.zeroGrad();
}

// ---------------------------------------------------------------------------
// Segment memory

export interface SegmentMemory {
  m: number; // cached timesteps per batch element
  layers: Float64Array[]; // per layer: [B * m * d]
}

export function emptyMemory(model: Model): SegmentMemory {
  return { m: 0, layers: model.layers.map(() => new Float64Array(0)) };
}

// ---------------------------------------------------------------------------
// Layer norm helpers

function lnForward(
  x: Float64Array,
  rows: number,
  d: number,
  gamma: Float64Array,
  beta: Float64Array,
  out: Float64Array,
  xhat: Float64Array,
  inv: Float64Array,
): void {
  for (let r = 0; r < rows; r++) {
    const base = r * d;
    let mean = 0;
    for (let j = 0; j < d; j++) mean += x[base + j];
    mean /= d;
    let variance = 0;
    for (let j = 0; j < d; j++) {
      const c = x[base + j] - mean;
      variance += c * c;
    }
    const invStd = 1 / Math.sqrt(variance / d + 1e-5);
    inv[r] = invStd;
    for (let j = 0; j < d; j++) {
      const h = (x[base + j] - mean) * invStd;
      xhat[base + j] = h;
      out[base + j] = h * gamma[j] + beta[j];
    }
  }
}

function lnBackward(
  dOut: Float64Array,
  rows: number,
  d: number,
  gamma: Param,
  beta: Param,
  xhat: Float64Array,
  inv: Float64Array,
  dX: Float64Array, // accumulated into
): void {
  const g = gamma.data;
  for (let r = 0; r < rows; r++) {
    const base = r * d;
    let meanDy = 0;
    let meanDyXhat = 0;
    for (let j = 0; j < d; j++) {
      const dy = dOut[base + j];
      const h = xhat[base + j];
      gamma.grad[j] += dy * h;
      beta.grad[j] += dy;
      const gj = dy * g[j];
      meanDy += gj;
      meanDyXhat += gj * h;
    }
    meanDy /= d;
    meanDyXhat /= d;
    const invStd = inv[r];
    for (let j = 0; j < d; j++) {
      const gj = dOut[base + j] * g[j];
      dX[base + j] += invStd * (gj - meanDy - xhat[base + j] * meanDyXhat);
    }
  }
}

// ---------------------------------------------------------------------------
// Forward (+ optional backward) over one segment

export interface SegmentOptions {
  targets?: Int32Array; // [B*T]
  mask?: Uint8Array; // [B*T]; 1 = scored position
  gradScale?: number; // when set, accumulate grads of gradScale * sum(nll)
  wantProbs?: boolean; // return softmax of the last position per batch row
}

export interface SegmentOutput {
  logProb: Float64Array; // [B*T], ln p(target) at masked positions, else 0
  nllSum: number;
  tokenCount: number;
  newMemory: SegmentMemory;
  lastProbs?: Float64Array; // [B*V]
}

interface LayerCache {
  ctx: Float64Array; // [B*S*d]
  xhat1: Float64Array;
  inv1: Float64Array;
  a: Float64Array; // ln1 output [B*S*d]
  q: Float64Array; // [B*T*d]
  k: Float64Array; // [B*S*d]
  v: Float64Array; // [B*S*d]
  attn: Float64Array; // [B*H*T*S] softmax rows
  o: Float64Array; // [B*T*d] concatenated head outputs
  h1: Float64Array; // after attention residual [B*T*d]
  xhat2: Float64Array;
  inv2: Float64Array;
  f: Float64Array; // ln2 output
  ffAct: Float64Array; // relu output [B*T*F]
}

export function runSegment(
  model: Model,
  tokens: Int32Array,
  B: number,
  T: number,
  memory: SegmentMemory | null,
  opts: SegmentOptions = {},
): SegmentOutput {
  const cfg = model.config;
  const d = cfg.dModel;
  const V = cfg.vocabSize;
  const H = cfg.numHeads;
  const dh = d / H;
  const scale = 1 / Math.sqrt(dh);
  const mem = memory ?? emptyMemory(model);
  const M = mem.m;
  const S = M + T;
  const wantGrads = opts.gradScale !== undefined && opts.gradScale !== 0;

  // Token embedding.
  let h = new Float64Array(B * T * d);
  for (let b = 0; b < B; b++) {
    for (let t = 0; t < T; t++) {
      const tok = tokens[b * T + t];
      if (tok < 0 || tok >= V) throw new Error(`token ${tok} outside vocabulary`);
      const src = tok * d;
      const dst = (b * T + t) * d;
      for (let j = 0; j < d; j++) h[dst + j] = model.tokEmb.data[src + j];
    }
  }

  const caches: LayerCache[] = [];
  const newMemLayers: Float64Array[] = [];
  const newM = Math.min(cfg.memoryLength, S);

  for (let l = 0; l < cfg.numLayers; l++) {
    const lp = model.layers[l];
    const ctx = new Float64Array(B * S * d);
    for (let b = 0; b < B; b++) {
      if (M > 0) {
        ctx.set(mem.layers[l].subarray(b * M * d, (b + 1) * M * d), b * S * d);
      }
      ctx.set(h.subarray(b * T * d, (b + 1) * T * d), (b * S + M) * d);
    }
    // Cache for the next segment: the most recent newM layer inputs.
    const nm = new Float64Array(B * newM * d);
    for (let b = 0; b < B; b++) {
      nm.set(
        ctx.subarray((b * S + S - newM) * d, (b + 1) * S * d),
        b * newM * d,
      );
    }
    newMemLayers.push(nm);

    const xhat1 = new Float64Array(B * S * d);
    const inv1 = new Float64Array(B * S);
    const a = new Float64Array(B * S * d);
    lnForward(ctx, B * S, d, lp.ln1g.data, lp.ln1b.data, a, xhat1, inv1);

    const q = new Float64Array(B * T * d);
    const k = new Float64Array(B * S * d);
    const v = new Float64Array(B * S * d);
    for (let b = 0; b < B; b++) {
      const aSeg = a.subarray((b * S + M) * d, (b + 1) * S * d);
      const aAll = a.subarray(b * S * d, (b + 1) * S * d);
      matmulAcc(aSeg, lp.wq.data, q.subarray(b * T * d, (b + 1) * T * d), T, d, d);
      matmulAcc(aAll, lp.wk.data, k.subarray(b * S * d, (b + 1) * S * d), S, d, d);
      matmulAcc(aAll, lp.wv.data, v.subarray(b * S * d, (b + 1) * S * d), S, d, d);
    }

    const attn = new Float64Array(B * H * T * S);
    const o = new Float64Array(B * T * d);
    const window = lp.relBias.cols;
    for (let b = 0; b < B; b++) {
      for (let head = 0; head < H; head++) {
        const hOff = head * dh;
        for (let t = 0; t < T; t++) {
          const qBase = (b * T + t) * d + hOff;
          const row = ((b * H + head) * T + t) * S;
          const limit = M + t; // causal: keys 0..M+t
          let maxScore = -Infinity;
          for (let s = 0; s <= limit; s++) {
            const kBase = (b * S + s) * d + hOff;
            let dot = 0;
            for (let j = 0; j < dh; j++) dot += q[qBase + j] * k[kBase + j];
            const offset = limit - s;
            const score =
              dot * scale + (offset < window ? lp.relBias.data[head * window + offset] : 0);
            attn[row + s] = score;
            if (score > maxScore) maxScore = score;
          }
          let total = 0;
          for (let s = 0; s <= limit; s++) {
            const e = Math.exp(attn[row + s] - maxScore);
            attn[row + s] = e;
            total += e;
          }
          const invTotal = 1 / total;
          const oBase = (b * T + t) * d + hOff;
          for (let s = 0; s <= limit; s++) {
            const p = attn[row + s] * invTotal;
            attn[row + s] = p;
            const vBase = (b * S + s) * d + hOff;
            for (let j = 0; j < dh; j++) o[oBase + j] += p * v[vBase + j];
          }
          for (let s = limit + 1; s < S; s++) attn[row + s] = 0;
        }
      }
    }

    const h1 = new Float64Array(B * T * d);
    h1.set(h);
    for (let b = 0; b < B; b++) {
      matmulAcc(
        o.subarray(b * T * d, (b + 1) * T * d),
        lp.wo.data,
        h1.subarray(b * T * d, (b + 1) * T * d),
        T,
        d,
        d,
      );
    }

    const xhat2 = new Float64Array(B * T * d);
    const inv2 = new Float64Array(B * T);
    const f = new Float64Array(B * T * d);
    lnForward(h1, B * T, d, lp.ln2g.data, lp.ln2b.data, f, xhat2, inv2);

    const F = cfg.ffSize;
    const ffAct = new Float64Array(B * T * F);
    for (let b = 0; b < B; b++) {
      matmulAcc(
        f.subarray(b * T * d, (b + 1) * T * d),
        lp.w1.data,
        ffAct.subarray(b * T * F, (b + 1) * T * F),
        T,
        d,
        F,
      );
    }
    for (let i = 0; i < ffAct.length; i++) {
      const z = ffAct[i] + lp.b1.data[i % F];
      ffAct[i] = z > 0 ? z : 0;
    }
    const h2 = new Float64Array(B * T * d);
    h2.set(h1);
    for (let i = 0; i < h2.length; i++) h2[i] += lp.b2.data[i % d];
    for (let b = 0; b < B; b++) {
      matmulAcc(
        ffAct.subarray(b * T * F, (b + 1) * T * F),
        lp.w2.data,
        h2.subarray(b * T * d, (b + 1) * T * d),
        T,
        F,
        d,
      );
    }

    caches.push({ ctx, xhat1, inv1, a, q, k, v, attn, o, h1, xhat2, inv2, f, ffAct });
    h = h2;
  }

  // Final norm + logits.
  const xhatF = new Float64Array(B * T * d);
  const invF = new Float64Array(B * T);
  const hF = new Float64Array(B * T * d);
  lnForward(h, B * T, d, model.lnFg.data, model.lnFb.data, hF, xhatF, invF);

  const logits = new Float64Array(B * T * V);
  for (let i = 0; i < B * T; i++) {
    for (let c = 0; c < V; c++) logits[i * V + c] = model.bOut.data[c];
  }
  matmulAcc(hF, model.wOut.data, logits, B * T, d, V);

  const logProb = new Float64Array(B * T);
  let nllSum = 0;
  let tokenCount = 0;
  let lastProbs: Float64Array | undefined;
  if (opts.wantProbs) lastProbs = new Float64Array(B * V);

  // Per-row log-softmax; logits buffer becomes probabilities (reused in backward).
  for (let i = 0; i < B * T; i++) {
    const base = i * V;
    let maxLogit = -Infinity;
    for (let c = 0; c < V; c++) if (logits[base + c] > maxLogit) maxLogit = logits[base + c];
    let total = 0;
    for (let c = 0; c < V; c++) total += Math.exp(logits[base + c] - maxLogit);
    const lse = maxLogit + Math.log(total);
    if (opts.targets && (!opts.mask || opts.mask[i])) {
      const target = opts.targets[i];
      logProb[i] = logits[base + target] - lse;
      nllSum -= logProb[i];
      tokenCount++;
    }
    const needProbs = wantGrads || (opts.wantProbs && i % T === T - 1);
    if (needProbs) {
      for (let c = 0; c < V; c++) logits[base + c] = Math.exp(logits[base + c] - lse);
    }
    if (opts.wantProbs && i % T === T - 1 && lastProbs) {
      lastProbs.set(logits.subarray(base, base + V), Math.floor(i / T) * V);
    }
  }

  const output: SegmentOutput = {
    logProb,
    nllSum,
    tokenCount,
    newMemory: { m: newM, layers: newMemLayers },
    lastProbs,
  };
  if (!wantGrads) return output;
  if (!opts.targets) throw new Error("gradScale requires targets");

  // ---- Backward ----
  const gs = opts.gradScale as number;
  const dLogits = logits; // probabilities in place; convert to gradient
  for (let i = 0; i < B * T; i++) {
    const base = i * V;
    if (!opts.mask || opts.mask[i]) {
      dLogits[base + opts.targets[i]] -= 1;
      for (let c = 0; c < V; c++) dLogits[base + c] *= gs;
    } else {
      for (let c = 0; c < V; c++) dLogits[base + c] = 0;
    }
  }

  const dHF = new Float64Array(B * T * d);
  matmulAccAT(hF, dLogits, model.wOut.grad, B * T, d, V);
  for (let i = 0; i < B * T; i++) {
    const base = i * V;
    for (let c = 0; c < V; c++) model.bOut.grad[c] += dLogits[base + c];
  }
  matmulAccBT(dLogits, model.wOut.data, dHF, B * T, d, V);

  let dH = new Float64Array(B * T * d);
  lnBackward(dHF, B * T, d, model.lnFg, model.lnFb, xhatF, invF, dH);

  for (let l = cfg.numLayers - 1; l >= 0; l--) {
    const lp = model.layers[l];
    const c = caches[l];
    const F = cfg.ffSize;

    // Feed-forward block: h2 = h1 + relu(f@W1+b1)@W2 + b2
    const dFfAct = new Float64Array(B * T * F);
    for (let b = 0; b < B; b++) {
      const dSeg = dH.subarray(b * T * d, (b + 1) * T * d);
      matmulAccAT(
        c.ffAct.subarray(b * T * F, (b + 1) * T * F),
        dSeg,
        lp.w2.grad,
        T,
        F,
        d,
      );
      matmulAccBT(dSeg, lp.w2.data, dFfAct.subarray(b * T * F, (b + 1) * T * F), T, F, d);
    }
    for (let i = 0; i < B * T * d; i++) lp.b2.grad[i % d] += dH[i];
    for (let i = 0; i < dFfAct.length; i++) {
      if (c.ffAct[i] <= 0) dFfAct[i] = 0;
      lp.b1.grad[i % F] += dFfAct[i];
    }
    const dF = new Float64Array(B * T * d);
    for (let b = 0; b < B; b++) {
      matmulAccAT(
        c.f.subarray(b * T * d, (b + 1) * T * d),
        dFfAct.subarray(b * T * F, (b + 1) * T * F),
        lp.w1.grad,
        T,
        d,
        F,
      );
      matmulAccBT(
        dFfAct.subarray(b * T * F, (b + 1) * T * F),
        lp.w1.data,
        dF.subarray(b * T * d, (b + 1) * T * d),
        T,
        d,
        F,
      );
    }
    const dH1 = dH; // residual path carries through
    lnBackward(dF, B * T, d, lp.ln2g, lp.ln2b, c.xhat2, c.inv2, dH1);

    // Attention block: h1 = h + (heads(a) concat) @ Wo
    const dO = new Float64Array(B * T * d);
    for (let b = 0; b < B; b++) {
      const dSeg = dH1.subarray(b * T * d, (b + 1) * T * d);
      matmulAccAT(c.o.subarray(b * T * d, (b + 1) * T * d), dSeg, lp.wo.grad, T, d, d);
      matmulAccBT(dSeg, lp.wo.data, dO.subarray(b * T * d, (b + 1) * T * d), T, d, d);
    }

    const dQ = new Float64Array(B * T * d);
    const dK = new Float64Array(B * S * d);
    const dV = new Float64Array(B * S * d);
    const q = c.q;
    const k = c.k;
    const v = c.v;
    const window = lp.relBias.cols;
    for (let b = 0; b < B; b++) {
      for (let head = 0; head < H; head++) {
        const hOff = head * dh;
        for (let t = 0; t < T; t++) {
          const row = ((b * H + head) * T + t) * S;
          const limit = M + t;
          const oBase = (b * T + t) * d + hOff;
          // dP then softmax backward within the row.
          let dot = 0;
          const dPRow = new Float64Array(limit + 1);
          for (let s = 0; s <= limit; s++) {
            const vBase = (b * S + s) * d + hOff;
            let dp = 0;
            for (let j = 0; j < dh; j++) {
              dp += dO[oBase + j] * v[vBase + j];
              dV[vBase + j] += c.attn[row + s] * dO[oBase + j];
            }
            dPRow[s] = dp;
            dot += c.attn[row + s] * dp;
          }
          const qBase = (b * T + t) * d + hOff;
          for (let s = 0; s <= limit; s++) {
            const dS = c.attn[row + s] * (dPRow[s] - dot);
            if (dS === 0) continue;
            const offset = limit - s;
            if (offset < window) lp.relBias.grad[head * window + offset] += dS;
            const kBase = (b * S + s) * d + hOff;
            const scaled = dS * scale;
            for (let j = 0; j < dh; j++) {
              dQ[qBase + j] += scaled * k[kBase + j];
              dK[kBase + j] += scaled * q[qBase + j];
            }
          }
        }
      }
    }

    const dA = new Float64Array(B * S * d);
    for (let b = 0; b < B; b++) {
      const aSeg = c.a.subarray((b * S + M) * d, (b + 1) * S * d);
      const aAll = c.a.subarray(b * S * d, (b + 1) * S * d);
      const dQSeg = dQ.subarray(b * T * d, (b + 1) * T * d);
      const dKSeg = dK.subarray(b * S * d, (b + 1) * S * d);
      const dVSeg = dV.subarray(b * S * d, (b + 1) * S * d);
      matmulAccAT(aSeg, dQSeg, lp.wq.grad, T, d, d);
      matmulAccBT(dQSeg, lp.wq.data, dA.subarray((b * S + M) * d, (b + 1) * S * d), T, d, d);
      matmulAccAT(aAll, dKSeg, lp.wk.grad, S, d, d);
      matmulAccBT(dKSeg, lp.wk.data, dA.subarray(b * S * d, (b + 1) * S * d), S, d, d);
      matmulAccAT(aAll, dVSeg, lp.wv.grad, S, d, d);
      matmulAccBT(dVSeg, lp.wv.data, dA.subarray(b * S * d, (b + 1) * S * d), S, d, d);
    }

    const dCtx = new Float64Array(B * S * d);
    lnBackward(dA, B * S, d, lp.ln1g, lp.ln1b, c.xhat1, c.inv1, dCtx);

    // Residual + segment rows of the context; memory rows receive no gradient.
    const dPrev = new Float64Array(B * T * d);
    dPrev.set(dH1);
    for (let b = 0; b < B; b++) {
      const src = dCtx.subarray((b * S + M) * d, (b + 1) * S * d);
      const dst = dPrev.subarray(b * T * d, (b + 1) * T * d);
      for (let i = 0; i < T * d; i++) dst[i] += src[i];
    }
    dH = dPrev;
  }

  // Embedding gradient.
  for (let b = 0; b < B; b++) {
    for (let t = 0; t < T; t++) {
      const tok = tokens[b * T + t];
      const src = (b * T + t) * d;
      const dst = tok * d;
      for (let j = 0; j < d; j++) model.tokEmb.grad[dst + j] += dH[src + j];
    }
  }

  return output;
}

// ---------------------------------------------------------------------------
// Checkpoints

export interface Checkpoint {
  version: number;
  config: ModelConfig;
  valNll: number | null;
  epochsTrained: number;
  params: Record<string, number[]>;
}

export function toCheckpoint(
  model: Model,
  valNll: number | null,
  epochsTrained: number,
): Checkpoint {
  const params: Record<string, number[]> = {};
  for (const p of allParams(model)) params[p.name] = Array.from(p.data);
  return { version: 1, config: { ...model.config }, valNll, epochsTrained, params };
}

export function fromCheckpoint(checkpoint: Checkpoint): Model {
  if (checkpoint.version !== 1) {
    throw new Error(`unsupported checkpoint version ${checkpoint.version}`);
  }
  const model = createModel(checkpoint.config, 0);
  for (const p of allParams(model)) {
    const stored = checkpoint.params[p.name];
    if (!stored || stored.length !== p.size) {
      throw new Error(`checkpoint is missing or misshapes parameter ${p.name}`);
    }
    p.data.set(stored);
  }
  return model;
}
