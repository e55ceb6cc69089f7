import { describe, expect, it } from "vitest";

import { trainClassifier } from "../src/classifier.js";
import { ConfigError } from "../src/errors.js";
import { activationMapToImage, gradCam } from "../src/gradcam.js";
import { GrayImage } from "../src/png.js";
import { mulberry32 } from "../src/rng.js";

function toyImage(rng: () => number, bright: boolean, size = 32): GrayImage {
  const pixels = new Float32Array(size * size);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = rng() * 80 + (bright ? 120 : 0);
  }
  return { width: size, height: size, pixels };
}

async function trainedCheckpoint(backbone: "efficientnet" | "resnext" | "vit") {
  const rng = mulberry32(20);
  const train = Array.from({ length: 16 }, (_, i) => ({
    image: toyImage(rng, i % 2 === 0),
    label: i % 2 === 0,
  }));
  const val = Array.from({ length: 6 }, (_, i) => ({
    image: toyImage(rng, i % 2 === 0),
    label: i % 2 === 0,
  }));
  const { checkpoint } = await trainClassifier(train, val, backbone, {
    epochs: 2,
    seed: 6,
    learningRate: 3e-3,
  });
  return checkpoint;
}

describe("gradCam", () => {
  it.each(["efficientnet", "resnext", "vit"] as const)(
    "produces a nonnegative, input-sized, max-normalized map (%s)",
    async (backbone) => {
      const checkpoint = await trainedCheckpoint(backbone);
      const image = toyImage(mulberry32(4), true);
      const map = await gradCam(checkpoint, image, "block1");
      expect(map.width).toBe(image.width);
      expect(map.height).toBe(image.height);
      const values = Array.from(map.values);
      expect(values.every((v) => v >= 0)).toBe(true);
      const peak = Math.max(...values);
      expect(peak === 0 || Math.abs(peak - 1) < 1e-5).toBe(true);
    },
  );

  it("supports earlier blocks and resizes the coarse map to the input", async () => {
    const checkpoint = await trainedCheckpoint("efficientnet");
    const image = toyImage(mulberry32(5), false);
    const map = await gradCam(checkpoint, image, "block0");
    expect(map.width).toBe(image.width);
    expect(map.height).toBe(image.height);
  });

  it("rejects layers without spatial extent and unknown layers", async () => {
    const checkpoint = await trainedCheckpoint("efficientnet");
    const image = toyImage(mulberry32(6), true);
    await expect(gradCam(checkpoint, image, "head")).rejects.toThrow(ConfigError);
    await expect(gradCam(checkpoint, image, "blocks9")).rejects.toThrow(ConfigError);
  });

  it("yields an all-zero map for a constant-output network", async () => {
    const checkpoint = await trainedCheckpoint("efficientnet");
    // zero out every weight: the head output is then constant in the input,
    // all gradients vanish, and normalization must be skipped
    const buffer = Buffer.from(checkpoint.weights.data, "base64");
    const zeroed = Buffer.alloc(buffer.length);
    const silenced = {
      ...checkpoint,
      weights: { ...checkpoint.weights, data: zeroed.toString("base64") },
    };
    const map = await gradCam(silenced, toyImage(mulberry32(7), true));
    expect(Math.max(...map.values)).toBe(0);
  });

  it("renders to a grayscale image", async () => {
    const checkpoint = await trainedCheckpoint("resnext");
    const map = await gradCam(checkpoint, toyImage(mulberry32(8), true));
    const img = activationMapToImage(map);
    expect(img.width).toBe(map.width);
    expect(Math.max(...img.pixels)).toBeLessThanOrEqual(255);
    expect(Math.min(...img.pixels)).toBeGreaterThanOrEqual(0);
  });
});
