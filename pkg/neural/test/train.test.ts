import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { writeTokenFile } from "../src/data.js";
import { fromCheckpoint, allParams } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { sample, sampleFromDist, DEFAULT_SAMPLING } from "../src/sample.js";
import { scoreSequences } from "../src/score.js";
import { DEFAULT_TRAIN_CONFIG, evaluateNll, fineTune, train, TrainConfig } from "../src/train.js";
import { markerCorpus } from "./corpus.js";

let dir: string;

beforeAll(async () => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "neural-train-"));
});

afterAll(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function smallConfig(trainFile: string, validFile: string): TrainConfig {
  return {
    ...DEFAULT_TRAIN_CONFIG,
    trainFile,
    validFile,
    segmentLength: 16,
    memoryLength: 16,
    numLayers: 2,
    numHeads: 2,
    dModel: 32,
    ffSize: 64,
    learningRate: 3e-3,
    batchSize: 8,
    maxEpochs: 6,
    patience: 10,
    seed: 1,
    logEvery: 0,
  };
}

describe("training", () => {
  it("drives validation NLL strictly down over the first three epochs", async () => {
    const rng = new Rng(20);
    const trainFile = path.join(dir, "train.txt");
    const validFile = path.join(dir, "valid.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 20));
    writeTokenFile(validFile, markerCorpus(rng, 6));
    const result = await train({ ...smallConfig(trainFile, validFile), maxEpochs: 10 });
    const history = result.validationHistory;
    expect(history.length).toBeGreaterThanOrEqual(3);
    expect(history[1]).toBeLessThan(history[0]);
    expect(history[2]).toBeLessThan(history[1]);
    expect(result.checkpoint.valNll).not.toBeNull();
  });

  it("stored validation NLL is reproduced from the checkpoint", async () => {
    const rng = new Rng(21);
    const trainFile = path.join(dir, "t2.txt");
    const validFile = path.join(dir, "v2.txt");
    const validCorpus = markerCorpus(rng, 5);
    writeTokenFile(trainFile, markerCorpus(rng, 12));
    writeTokenFile(validFile, validCorpus);
    const result = await train({ ...smallConfig(trainFile, validFile), maxEpochs: 3 });
    const model = fromCheckpoint(result.checkpoint);
    const recomputed = evaluateNll(model, validCorpus, 8);
    expect(Math.abs(recomputed - (result.checkpoint.valNll as number))).toBeLessThan(1e-4);
  });

  it("fineTune with zero epochs returns the checkpoint unchanged", async () => {
    const rng = new Rng(22);
    const trainFile = path.join(dir, "t3.txt");
    const validFile = path.join(dir, "v3.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 8));
    writeTokenFile(validFile, markerCorpus(rng, 3));
    const cfg = { ...smallConfig(trainFile, validFile), maxEpochs: 1 };
    const first = await train(cfg);
    const untouched = await fineTune(first.checkpoint, { ...cfg, maxEpochs: 0 });
    expect(untouched.checkpoint).toBe(first.checkpoint);
  });

  it("fineTune rejects a vocabulary mismatch", async () => {
    const rng = new Rng(23);
    const trainFile = path.join(dir, "t4.txt");
    const validFile = path.join(dir, "v4.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 8));
    writeTokenFile(validFile, markerCorpus(rng, 3));
    const cfg = { ...smallConfig(trainFile, validFile), maxEpochs: 1 };
    const first = await train(cfg);
    await expect(() => fineTune(first.checkpoint, { ...cfg, vocabSize: 12 })).rejects.toThrow(
      /vocabulary mismatch/,
    );
  });

  it("training is deterministic given the seed", async () => {
    const rng = new Rng(24);
    const trainFile = path.join(dir, "t5.txt");
    const validFile = path.join(dir, "v5.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 8));
    writeTokenFile(validFile, markerCorpus(rng, 3));
    const cfg = { ...smallConfig(trainFile, validFile), maxEpochs: 2 };
    const a = await train(cfg);
    const b = await train(cfg);
    expect(a.checkpoint.valNll).toBe(b.checkpoint.valNll);
    const pa = allParams(fromCheckpoint(a.checkpoint));
    const pb = allParams(fromCheckpoint(b.checkpoint));
    for (let i = 0; i < pa.length; i++) {
      expect(Array.from(pa[i].data)).toEqual(Array.from(pb[i].data));
    }
  });
});

describe("scoring", () => {
  it("emits one value per predicted token, every value non-positive", async () => {
    const rng = new Rng(25);
    const trainFile = path.join(dir, "t6.txt");
    const validFile = path.join(dir, "v6.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 8));
    writeTokenFile(validFile, markerCorpus(rng, 3));
    const result = await train({ ...smallConfig(trainFile, validFile), maxEpochs: 1 });
    const sequences = markerCorpus(rng, 4);
    const lines = scoreSequences(result.checkpoint, sequences);
    expect(lines.length).toBe(sequences.length);
    for (let i = 0; i < lines.length; i++) {
      expect(lines[i].length).toBe(sequences[i].length - 1);
      for (const value of lines[i]) expect(value).toBeLessThanOrEqual(0);
    }
  });

  it("is deterministic across runs", async () => {
    const rng = new Rng(26);
    const trainFile = path.join(dir, "t7.txt");
    const validFile = path.join(dir, "v7.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 8));
    writeTokenFile(validFile, markerCorpus(rng, 3));
    const result = await train({ ...smallConfig(trainFile, validFile), maxEpochs: 1 });
    const sequences = markerCorpus(rng, 3);
    const a = scoreSequences(result.checkpoint, sequences);
    const b = scoreSequences(result.checkpoint, sequences);
    expect(a).toEqual(b);
  });
});

describe("sampling", () => {
  it("topK=1 picks the argmax deterministically", async () => {
    const dist = new Float64Array([0.1, 0.5, 0.2, 0.2]);
    const rng = new Rng(0);
    for (let i = 0; i < 20; i++) {
      expect(sampleFromDist(dist, { ...DEFAULT_SAMPLING, topK: 1 }, rng)).toBe(1);
    }
  });

  it("breaks ties toward the lower event ID", async () => {
    const dist = new Float64Array(8).fill(1 / 8);
    const rng = new Rng(1);
    const seen = new Set<number>();
    for (let i = 0; i < 500; i++) {
      seen.add(sampleFromDist(dist, { ...DEFAULT_SAMPLING, topK: 3, temperature: 1 }, rng));
    }
    expect([...seen].sort((a, b) => a - b)).toEqual([0, 1, 2]);
  });

  it("primed output begins with the prime; all IDs in range", async () => {
    const rng = new Rng(27);
    const trainFile = path.join(dir, "t8.txt");
    const validFile = path.join(dir, "v8.txt");
    writeTokenFile(trainFile, markerCorpus(rng, 8));
    writeTokenFile(validFile, markerCorpus(rng, 3));
    const result = await train({ ...smallConfig(trainFile, validFile), maxEpochs: 1 });
    const prime = [0, 500, 400, 410];
    const out = sample(result.checkpoint, prime, {
      temperature: 0.95,
      topK: 32,
      maxEvents: 40,
      seed: 5,
    });
    expect(out.slice(0, prime.length)).toEqual(prime);
    expect(out.length).toBeLessThanOrEqual(prime.length + 40);
    for (const token of out) {
      expect(token).toBeGreaterThanOrEqual(0);
      expect(token).toBeLessThan(631);
    }
    const again = sample(result.checkpoint, prime, {
      temperature: 0.95,
      topK: 32,
      maxEvents: 40,
      seed: 5,
    });
    expect(again).toEqual(out);
  });
});
