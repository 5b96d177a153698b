/**
 * Autoregressive sampling with the same temperature/top-k semantics as the
 * Python toolkit: probabilities are raised to 1/T, the k heaviest survive
 * (ties keep the lower event ID), and the draw renormalizes over survivors.
 * Generation feeds one token at a time, letting the recurrent memory carry
 * the history, and stops on the boundary token or the event cap.
 */

import { BOUNDARY_ID } from "./data.js";
import { Checkpoint, fromCheckpoint, Model, runSegment, SegmentMemory } from "./model.js";
import { Rng } from "./rng.js";

export interface SamplingParams {
  temperature: number;
  topK: number;
  maxEvents: number;
  seed: number;
}

export const DEFAULT_SAMPLING: SamplingParams = {
  temperature: 0.95,
  topK: 32,
  maxEvents: 512,
  seed: 0,
};

export function sampleFromDist(dist: Float64Array, params: SamplingParams, rng: Rng): number {
  const n = dist.length;
  const weights = new Float64Array(n);
  for (let i = 0; i < n; i++) weights[i] = Math.pow(dist[i], 1 / params.temperature);
  const order = Array.from({ length: n }, (_, i) => i);
  order.sort((a, b) => weights[b] - weights[a] || a - b);
  const k = Math.min(params.topK, n);
  let total = 0;
  for (let i = 0; i < k; i++) total += weights[order[i]];
  let draw = rng.next() * total;
  for (let i = 0; i < k; i++) {
    draw -= weights[order[i]];
    if (draw <= 0) return order[i];
  }
  return order[k - 1];
}

function step(model: Model, token: number, memory: SegmentMemory | null) {
  const out = runSegment(model, Int32Array.of(token), 1, 1, memory, {
    wantProbs: true,
  });
  return { probs: out.lastProbs as Float64Array, memory: out.newMemory };
}

/** Continue a prime (empty prime starts from the boundary token). */
export function sample(
  checkpoint: Checkpoint,
  prime: number[],
  params: SamplingParams,
): number[] {
  const model = fromCheckpoint(checkpoint);
  const rng = new Rng(params.seed);
  const history = prime.length ? [...prime] : [BOUNDARY_ID];
  let memory: SegmentMemory | null = null;
  let probs: Float64Array | null = null;
  for (const token of history) {
    const result = step(model, token, memory);
    memory = result.memory;
    probs = result.probs;
  }
  let emitted = 0;
  while (emitted < params.maxEvents) {
    const next = sampleFromDist(probs as Float64Array, params, rng);
    history.push(next);
    emitted++;
    if (next === BOUNDARY_ID) break;
    const result = step(model, next, memory);
    memory = result.memory;
    probs = result.probs;
  }
  return history;
}
