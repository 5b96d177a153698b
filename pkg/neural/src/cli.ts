#!/usr/bin/env node
/**
 * Entry point: train, finetune, score, sample. Checkpoints are JSON files
 * produced and consumed only by this package; token and likelihood files
 * are the shared interchange formats.
 */

import fs from "node:fs";
import process from "node:process";

import { readTokenFile, writeTokenFile, VOCAB_SIZE } from "./data.js";
import { Checkpoint } from "./model.js";
import { DEFAULT_SAMPLING, sample } from "./sample.js";
import { scoreFile } from "./score.js";
import { DEFAULT_TRAIN_CONFIG, fineTune, train, TrainConfig } from "./train.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    if (!argv[i].startsWith("--")) throw new Error(`unexpected argument ${argv[i]}`);
    const key = argv[i].slice(2);
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`flag --${key} needs a value`);
    flags.set(key, value);
    i++;
  }
  return flags;
}

function num(flags: Map<string, string>, key: string, fallback: number): number {
  const raw = flags.get(key);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new Error(`flag --${key}: ${raw} is not a number`);
  return value;
}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) throw new Error(`missing required flag --${key}`);
  return value;
}

function trainConfig(flags: Map<string, string>): TrainConfig {
  const d = DEFAULT_TRAIN_CONFIG;
  return {
    trainFile: need(flags, "train"),
    validFile: need(flags, "valid"),
    segmentLength: num(flags, "segment-length", d.segmentLength),
    memoryLength: num(flags, "memory-length", d.memoryLength),
    numLayers: num(flags, "layers", d.numLayers),
    numHeads: num(flags, "heads", d.numHeads),
    dModel: num(flags, "d-model", d.dModel),
    ffSize: num(flags, "ff-size", d.ffSize),
    learningRate: num(flags, "lr", d.learningRate),
    batchSize: num(flags, "batch-size", d.batchSize),
    maxEpochs: num(flags, "max-epochs", d.maxEpochs),
    patience: num(flags, "patience", d.patience),
    seed: num(flags, "seed", d.seed),
    vocabSize: num(flags, "vocab", d.vocabSize),
    logEvery: num(flags, "log-every", 1),
  };
}

function loadCheckpoint(path: string): Checkpoint {
  return JSON.parse(fs.readFileSync(path, "utf-8")) as Checkpoint;
}

function saveCheckpoint(path: string, checkpoint: Checkpoint): void {
  fs.writeFileSync(path, JSON.stringify(checkpoint));
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    const flags = parseFlags(rest);
    switch (command) {
      case "train": {
        const cfg = trainConfig(flags);
        const result = await train(cfg);
        saveCheckpoint(need(flags, "out"), result.checkpoint);
        console.log(
          `best validation nll ${result.checkpoint.valNll?.toFixed(4)} ` +
            `after ${result.checkpoint.epochsTrained} epochs`,
        );
        return 0;
      }
      case "finetune": {
        const cfg = trainConfig(flags);
        const start = loadCheckpoint(need(flags, "init"));
        const result = await fineTune(start, cfg);
        saveCheckpoint(need(flags, "out"), result.checkpoint);
        console.log(`best validation nll ${result.checkpoint.valNll?.toFixed(4)}`);
        return 0;
      }
      case "score": {
        const checkpoint = loadCheckpoint(need(flags, "model"));
        const memFlag = flags.get("memory-length");
        scoreFile(checkpoint, need(flags, "tokens"), need(flags, "out"), {
          memoryLength: memFlag === undefined ? undefined : Number(memFlag),
        });
        return 0;
      }
      case "sample": {
        const checkpoint = loadCheckpoint(need(flags, "model"));
        const params = {
          temperature: num(flags, "temperature", DEFAULT_SAMPLING.temperature),
          topK: num(flags, "top-k", DEFAULT_SAMPLING.topK),
          maxEvents: num(flags, "max-events", DEFAULT_SAMPLING.maxEvents),
          seed: num(flags, "seed", DEFAULT_SAMPLING.seed),
        };
        const primePath = flags.get("prime-file");
        const primes: number[][] = primePath ? readTokenFile(primePath) : [];
        const count = primes.length || num(flags, "num", 1);
        const out: number[][] = [];
        for (let i = 0; i < count; i++) {
          out.push(
            sample(checkpoint, primes[i] ?? [], { ...params, seed: params.seed + i }),
          );
        }
        writeTokenFile(need(flags, "out"), out);
        return 0;
      }
      default:
        console.error(
          "usage: chipscore-neural <train|finetune|score|sample> [--flags]\n" +
            `  (vocabulary size ${VOCAB_SIZE})`,
        );
        return 2;
    }
  } catch (error) {
    console.error(`chipscore-neural ${command}: ${(error as Error).message}`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
