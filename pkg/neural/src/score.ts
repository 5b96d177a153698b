/**
 * Emit likelihood files: for each token line, the natural-log probability
 * the model assigns to tokens 2..n, each conditioned on everything before
 * it. Line-aligned with the token file so `chipscore eval --likelihoods`
 * accepts the output directly.
 */

import { readTokenFile, writeLikelihoodFile } from "./data.js";
import { Checkpoint, fromCheckpoint, runSegment, SegmentMemory } from "./model.js";

export interface ScoreOptions {
  memoryLength?: number; // override the trained memory length (e.g. 0)
}

export function scoreSequences(
  checkpoint: Checkpoint,
  sequences: number[][],
  options: ScoreOptions = {},
): number[][] {
  const model = fromCheckpoint(checkpoint);
  if (options.memoryLength !== undefined) {
    model.config.memoryLength = options.memoryLength;
  }
  const segmentLength = model.config.segmentLength;
  const out: number[][] = [];
  for (const seq of sequences) {
    if (seq.length < 2) {
      out.push([]);
      continue;
    }
    const inputs = seq.slice(0, -1);
    const targets = seq.slice(1);
    const logs: number[] = [];
    let memory: SegmentMemory | null = null;
    for (let start = 0; start < inputs.length; start += segmentLength) {
      const T = Math.min(segmentLength, inputs.length - start);
      const result = runSegment(
        model,
        Int32Array.from(inputs.slice(start, start + T)),
        1,
        T,
        memory,
        {
          targets: Int32Array.from(targets.slice(start, start + T)),
          mask: new Uint8Array(T).fill(1),
        },
      );
      memory = result.newMemory;
      for (let t = 0; t < T; t++) logs.push(result.logProb[t]);
    }
    out.push(logs);
  }
  return out;
}

export function scoreFile(
  checkpoint: Checkpoint,
  tokenPath: string,
  outPath: string,
  options: ScoreOptions = {},
): void {
  const lines = scoreSequences(checkpoint, readTokenFile(tokenPath), options);
  writeLikelihoodFile(outPath, lines);
}
