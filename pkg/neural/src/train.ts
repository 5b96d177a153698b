/**
 * Next-token training with Adam and early stopping on validation NLL.
 *
 * Sequences are batched, split into segments of the configured length, and
 * each batch steps through its segments carrying the recurrent memory, so a
 * token's context can reach across segment boundaries while gradients stay
 * within the current segment.
 */

import { Batch, makeBatch, readTokenFile, VOCAB_SIZE } from "./data.js";
import {
  Checkpoint,
  DEFAULT_CONFIG,
  Model,
  ModelConfig,
  SegmentMemory,
  allParams,
  createModel,
  fromCheckpoint,
  runSegment,
  toCheckpoint,
  zeroGrads,
} from "./model.js";
import { Rng } from "./rng.js";

export interface TrainConfig {
  trainFile: string;
  validFile: string;
  segmentLength: number;
  memoryLength: number;
  numLayers: number;
  numHeads: number;
  dModel: number;
  ffSize: number;
  learningRate: number;
  batchSize: number;
  maxEpochs: number;
  patience: number;
  seed: number;
  vocabSize: number;
  logEvery?: number;
}

export const DEFAULT_TRAIN_CONFIG: Omit<TrainConfig, "trainFile" | "validFile"> = {
  segmentLength: DEFAULT_CONFIG.segmentLength,
  memoryLength: DEFAULT_CONFIG.memoryLength,
  numLayers: DEFAULT_CONFIG.numLayers,
  numHeads: DEFAULT_CONFIG.numHeads,
  dModel: DEFAULT_CONFIG.dModel,
  ffSize: DEFAULT_CONFIG.ffSize,
  learningRate: 2e-5,
  batchSize: 8,
  maxEpochs: 50,
  patience: 5,
  seed: 0,
  vocabSize: VOCAB_SIZE,
};

export interface TrainResult {
  checkpoint: Checkpoint;
  validationHistory: number[]; // one NLL per epoch
}

function modelConfig(cfg: TrainConfig): ModelConfig {
  return {
    vocabSize: cfg.vocabSize,
    dModel: cfg.dModel,
    numLayers: cfg.numLayers,
    numHeads: cfg.numHeads,
    ffSize: cfg.ffSize,
    segmentLength: cfg.segmentLength,
    memoryLength: cfg.memoryLength,
  };
}

class Adam {
  private m: Float64Array;
  private v: Float64Array;
  private step = 0;

  constructor(
    private params: ReturnType<typeof allParams>,
    private lr: number,
    private beta1 = 0.9,
    private beta2 = 0.999,
    private eps = 1e-8,
  ) {
    const total = params.reduce((acc, p) => acc + p.size, 0);
    this.m = new Float64Array(total);
    this.v = new Float64Array(total);
  }

  update(): void {
    this.step++;
    const c1 = 1 - Math.pow(this.beta1, this.step);
    const c2 = 1 - Math.pow(this.beta2, this.step);
    let offset = 0;
    for (const p of this.params) {
      for (let i = 0; i < p.size; i++) {
        const g = p.grad[i];
        const mi = (this.m[offset + i] = this.beta1 * this.m[offset + i] + (1 - this.beta1) * g);
        const vi = (this.v[offset + i] = this.beta2 * this.v[offset + i] + (1 - this.beta2) * g * g);
        p.data[i] -= (this.lr * (mi / c1)) / (Math.sqrt(vi / c2) + this.eps);
      }
      offset += p.size;
    }
  }
}

/** Teacher-forced mean NLL per token, memory carried across segments. */
export function evaluateNll(
  model: Model,
  sequences: number[][],
  batchSize: number,
  memoryLength?: number,
): number {
  const saved = model.config.memoryLength;
  if (memoryLength !== undefined) model.config.memoryLength = memoryLength;
  try {
    let nll = 0;
    let count = 0;
    for (let start = 0; start < sequences.length; start += batchSize) {
      const group = sequences
        .slice(start, start + batchSize)
        .filter((s) => s.length >= 2);
      if (!group.length) continue;
      const batch = makeBatch(group);
      for (const piece of segments(batch, model.config.segmentLength)) {
        const out = runSegment(model, piece.inputs, batch.B, piece.T, piece.memory, {
          targets: piece.targets,
          mask: piece.mask,
        });
        piece.carry(out.newMemory);
        nll += out.nllSum;
        count += out.tokenCount;
      }
    }
    if (count === 0) throw new Error("no tokens to evaluate");
    return nll / count;
  } finally {
    model.config.memoryLength = saved;
  }
}

interface SegmentPiece {
  inputs: Int32Array;
  targets: Int32Array;
  mask: Uint8Array;
  T: number;
  memory: SegmentMemory;
  carry: (mem: SegmentMemory) => void;
}

/** Walk a batch in segment-sized windows, threading the recurrent memory. */
function* segments(batch: Batch, segmentLength: number): Generator<SegmentPiece> {
  let memory: SegmentMemory | null = null;
  const holder = {
    set(mem: SegmentMemory) {
      memory = mem;
    },
  };
  for (let start = 0; start < batch.T; start += segmentLength) {
    const T = Math.min(segmentLength, batch.T - start);
    const inputs = new Int32Array(batch.B * T);
    const targets = new Int32Array(batch.B * T);
    const mask = new Uint8Array(batch.B * T);
    for (let b = 0; b < batch.B; b++) {
      for (let t = 0; t < T; t++) {
        inputs[b * T + t] = batch.inputs[b * batch.T + start + t];
        targets[b * T + t] = batch.targets[b * batch.T + start + t];
        mask[b * T + t] = batch.mask[b * batch.T + start + t];
      }
    }
    yield {
      inputs,
      targets,
      mask,
      T,
      memory: memory ?? { m: 0, layers: [] },
      carry: (mem) => holder.set(mem),
    };
  }
}

/** Yield to the event loop so long runs stay responsive inside runners. */
function breathe(): Promise<void> {
  return new Promise((resolve) => setImmediate(resolve));
}

async function trainLoop(
  model: Model,
  cfg: TrainConfig,
  startEpoch: number,
): Promise<TrainResult> {
  const trainSeqs = readTokenFile(cfg.trainFile).filter((s) => s.length >= 2);
  const validSeqs = readTokenFile(cfg.validFile).filter((s) => s.length >= 2);
  if (!trainSeqs.length) throw new Error(`${cfg.trainFile}: no usable sequences`);
  if (!validSeqs.length) throw new Error(`${cfg.validFile}: no usable sequences`);

  const rng = new Rng(cfg.seed + 1);
  const adam = new Adam(allParams(model), cfg.learningRate);
  const history: number[] = [];
  let bestNll = Infinity;
  let bestCheckpoint = toCheckpoint(model, null, startEpoch);
  let sinceBest = 0;

  for (let epoch = 0; epoch < cfg.maxEpochs; epoch++) {
    const order = trainSeqs.map((_, i) => i);
    rng.shuffle(order);
    for (let start = 0; start < order.length; start += cfg.batchSize) {
      const group = order.slice(start, start + cfg.batchSize).map((i) => trainSeqs[i]);
      const batch = makeBatch(group);
      let total = 0;
      for (let i = 0; i < batch.mask.length; i++) total += batch.mask[i];
      if (!total) continue;
      zeroGrads(model);
      for (const piece of segments(batch, cfg.segmentLength)) {
        const out = runSegment(model, piece.inputs, batch.B, piece.T, piece.memory, {
          targets: piece.targets,
          mask: piece.mask,
          gradScale: 1 / total,
        });
        piece.carry(out.newMemory);
      }
      adam.update();
      await breathe();
    }
    const valNll = evaluateNll(model, validSeqs, cfg.batchSize);
    history.push(valNll);
    if (cfg.logEvery && (epoch + 1) % cfg.logEvery === 0) {
      console.log(`epoch ${epoch + 1}/${cfg.maxEpochs}  valid nll ${valNll.toFixed(4)}`);
    }
    if (valNll < bestNll - 1e-9) {
      bestNll = valNll;
      bestCheckpoint = toCheckpoint(model, valNll, startEpoch + epoch + 1);
      sinceBest = 0;
    } else {
      sinceBest++;
      if (sinceBest > cfg.patience) break;
    }
  }
  return { checkpoint: bestCheckpoint, validationHistory: history };
}

/** Train from random initialization. */
export function train(cfg: TrainConfig): Promise<TrainResult> {
  const model = createModel(modelConfig(cfg), cfg.seed);
  return trainLoop(model, cfg, 0);
}

/** Continue training from a checkpoint; zero epochs returns it unchanged. */
export async function fineTune(checkpoint: Checkpoint, cfg: TrainConfig): Promise<TrainResult> {
  if (cfg.vocabSize !== checkpoint.config.vocabSize) {
    throw new Error(
      `vocabulary mismatch: checkpoint has ${checkpoint.config.vocabSize}, ` +
        `config wants ${cfg.vocabSize}`,
    );
  }
  if (cfg.maxEpochs === 0) {
    return { checkpoint, validationHistory: [] };
  }
  const model = fromCheckpoint(checkpoint);
  model.config.segmentLength = cfg.segmentLength;
  model.config.memoryLength = cfg.memoryLength;
  return trainLoop(model, cfg, checkpoint.epochsTrained);
}
