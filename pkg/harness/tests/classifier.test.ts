import path from "node:path";
import { describe, expect, it } from "vitest";

import {
  bestEpoch,
  evaluateClassifier,
  loadLabeledImages,
  predictProbabilities,
  trainClassifier,
} from "../src/classifier.js";
import { DataError } from "../src/errors.js";
import { readManifest } from "../src/manifest.js";
import { GrayImage } from "../src/png.js";
import { mulberry32 } from "../src/rng.js";
import { splitByLocation } from "../src/split.js";
import { FIXTURES } from "./globalSetup.js";

const CLEAN = path.join(FIXTURES, "clean");

function toyImage(rng: () => number, bright: boolean, size = 32): GrayImage {
  const pixels = new Float32Array(size * size);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = rng() * 80 + (bright ? 120 : 0);
  }
  return { width: size, height: size, pixels };
}

function toySet(seed: number, n: number) {
  const rng = mulberry32(seed);
  return Array.from({ length: n }, (_, i) => ({
    image: toyImage(rng, i % 2 === 0),
    label: i % 2 === 0,
  }));
}

describe("bestEpoch", () => {
  it("keeps the epoch with the minimum validation loss", () => {
    expect(bestEpoch([0.9, 0.4, 0.6])).toBe(1);
    expect(bestEpoch([0.5])).toBe(0);
    expect(bestEpoch([0.5, 0.5, 0.5])).toBe(0); // first on ties
  });
});

describe("trainClassifier", () => {
  it("rejects a single-class training set", async () => {
    const rng = mulberry32(1);
    const oneClass = Array.from({ length: 8 }, () => ({
      image: toyImage(rng, true),
      label: true,
    }));
    await expect(trainClassifier(oneClass, toySet(2, 4), "efficientnet")).rejects.toThrow(
      DataError,
    );
  });

  it("training loss decreases over 5 epochs on a 60-image toy set", async () => {
    const { checkpoint } = await trainClassifier(toySet(3, 60), toySet(4, 12), "efficientnet", {
      epochs: 5,
      seed: 1,
      learningRate: 3e-3,
    });
    expect(checkpoint.trainLoss).toHaveLength(5);
    expect(checkpoint.trainLoss[4]).toBeLessThan(checkpoint.trainLoss[0]);
  });

  it("selects the checkpoint by minimum validation loss", async () => {
    const { checkpoint } = await trainClassifier(toySet(5, 24), toySet(6, 8), "resnext", {
      epochs: 4,
      seed: 2,
      learningRate: 3e-3,
    });
    const best = bestEpoch(checkpoint.valLoss);
    expect(checkpoint.bestEpoch).toBe(best);
  });

  it("horizontal flip changes training but never the evaluation pipeline", async () => {
    const train = toySet(7, 24);
    const val = toySet(8, 8);
    const plain = await trainClassifier(train, val, "efficientnet", { epochs: 2, seed: 5 });
    const flipped = await trainClassifier(train, val, "efficientnet", {
      epochs: 2,
      seed: 5,
      horizontalFlip: true,
    });
    // augmentation perturbs the learned weights...
    expect(plain.checkpoint.trainLoss).not.toEqual(flipped.checkpoint.trainLoss);
    // ...but inference on a fixed checkpoint is identical regardless of the flag
    const probsA = await predictProbabilities(plain.checkpoint, val);
    const probsB = await predictProbabilities(plain.checkpoint, val);
    expect(probsA).toEqual(probsB);
  });

  it("is deterministic given a seed", async () => {
    const train = toySet(9, 20);
    const val = toySet(10, 6);
    const a = await trainClassifier(train, val, "vit", { epochs: 2, seed: 11 });
    const b = await trainClassifier(train, val, "vit", { epochs: 2, seed: 11 });
    expect(a.checkpoint.trainLoss).toEqual(b.checkpoint.trainLoss);
    expect(a.checkpoint.weights.data).toBe(b.checkpoint.weights.data);
  });
});

describe("evaluateClassifier on a real dataset tree", () => {
  it("trains on a location split of the fixture dataset and reports metrics", async () => {
    const manifest = readManifest(CLEAN);
    const split = splitByLocation(manifest, { n_train: 2, n_val: 1, n_test: 1, seed: 2 });
    const train = loadLabeledImages(CLEAN, split.train);
    const hasBoth = new Set(train.map((s) => s.label)).size === 2;
    expect(hasBoth).toBe(true);

    const { checkpoint } = await trainClassifier(
      train,
      loadLabeledImages(CLEAN, split.val),
      "efficientnet",
      { epochs: 3, seed: 3 },
    );
    const report = await evaluateClassifier(checkpoint, loadLabeledImages(CLEAN, split.test));
    expect(report.tp + report.fp + report.fn + report.tn).toBe(split.test.length);
    expect(report.accuracy).toBeGreaterThanOrEqual(0);
    expect(report.accuracy).toBeLessThanOrEqual(1);
  });
});
