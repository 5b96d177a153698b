/** Token and likelihood text files, shared with the Python toolkit:
 * one sequence per line, space-separated decimal event IDs in [0, 630];
 * likelihood line i carries (token count of line i) - 1 natural logs. */

import fs from "node:fs";

export const VOCAB_SIZE = 631;
export const BOUNDARY_ID = 0;

export function parseTokenLine(line: string, lineNumber: number): number[] {
  const out: number[] = [];
  for (const piece of line.trim().split(/\s+/)) {
    if (!piece) continue;
    const value = Number(piece);
    if (!Number.isInteger(value)) {
      throw new Error(`line ${lineNumber}: token ${piece} is not an integer`);
    }
    out.push(value);
  }
  return out;
}

export function readTokenFile(path: string): number[][] {
  const sequences: number[][] = [];
  const lines = fs.readFileSync(path, "utf-8").split("\n");
  for (let i = 0; i < lines.length; i++) {
    if (!lines[i].trim()) continue;
    const tokens = parseTokenLine(lines[i], i + 1);
    for (const token of tokens) {
      if (token < 0 || token >= VOCAB_SIZE) {
        throw new Error(`${path} line ${i + 1}: token ${token} out of range`);
      }
    }
    sequences.push(tokens);
  }
  return sequences;
}

export function writeTokenFile(path: string, sequences: number[][]): void {
  fs.writeFileSync(path, sequences.map((s) => s.join(" ")).join("\n") + "\n");
}

export function writeLikelihoodFile(path: string, lines: number[][]): void {
  fs.writeFileSync(path, lines.map((l) => l.join(" ")).join("\n") + "\n");
}

/** Pad a group of sequences to a rectangle of inputs/targets plus a mask.
 * Position (b, t) trains the prediction of seq[t+1] from seq[..t]. */
export interface Batch {
  B: number;
  T: number; // input length = max sequence length - 1
  inputs: Int32Array; // [B*T]
  targets: Int32Array; // [B*T]
  mask: Uint8Array; // [B*T]
}

export function makeBatch(sequences: number[][]): Batch {
  const B = sequences.length;
  let T = 0;
  for (const seq of sequences) T = Math.max(T, seq.length - 1);
  if (T < 1) throw new Error("batch needs sequences of at least two tokens");
  const inputs = new Int32Array(B * T).fill(BOUNDARY_ID);
  const targets = new Int32Array(B * T);
  const mask = new Uint8Array(B * T);
  for (let b = 0; b < B; b++) {
    const seq = sequences[b];
    for (let t = 0; t < seq.length - 1; t++) {
      inputs[b * T + t] = seq[t];
      targets[b * T + t] = seq[t + 1];
      mask[b * T + t] = 1;
    }
  }
  return { B, T, inputs, targets, mask };
}
