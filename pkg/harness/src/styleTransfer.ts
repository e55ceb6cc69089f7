/** Unpaired translator training (cycle-consistent adversarial pair) at desk
 * scale, plus deterministic inference.
 *
 * Two generators (simulated -> styled and back) and two patch
 * discriminators train under least-squares adversarial losses with an L1
 * cycle penalty. Defaults follow the desk-scale setup: 500 iterations at
 * learning rate 2e-4, batch 1.
 */

import * as tf from "@tensorflow/tfjs";
import fs from "node:fs";
import path from "node:path";

import { initBackend } from "./backend.js";
import { ConfigError, DataError } from "./errors.js";
import {
  SerializedWeights,
  buildDiscriminator,
  buildGenerator,
  deserializeWeights,
  serializeWeights,
} from "./models.js";
import { GrayImage, readGrayPng } from "./png.js";
import { deriveSeed, mulberry32, randInt } from "./rng.js";

export interface TranslatorConfig {
  learningRate: number;
  iterations: number;
  imageSize: number;
  cycleWeight: number;
}

export const DEFAULT_TRANSLATOR_CONFIG: TranslatorConfig = {
  learningRate: 2e-4,
  iterations: 500,
  imageSize: 64,
  cycleWeight: 10.0,
};

export interface TranslatorCheckpoint {
  kind: "translator";
  config: TranslatorConfig;
  toStyle: SerializedWeights;
  toContent: SerializedWeights;
}

export interface LossLogRow {
  iteration: number;
  generatorLoss: number;
  discriminatorLoss: number;
}

export function listImageDir(dir: string): string[] {
  const imagesSub = path.join(dir, "images");
  const effective = fs.existsSync(imagesSub) ? imagesSub : dir;
  if (!fs.existsSync(effective)) {
    throw new DataError(`image directory ${dir} does not exist`);
  }
  const files = fs
    .readdirSync(effective)
    .filter((f) => f.endsWith(".png"))
    .sort()
    .map((f) => path.join(effective, f));
  if (files.length === 0) {
    throw new DataError(`no .png images under ${effective}`);
  }
  return files;
}

/** Stack images into a [N, size, size, 1] tensor scaled to [-1, 1]. */
export function imagesToTensor(images: GrayImage[], size: number): tf.Tensor4D {
  return tf.tidy(() => {
    const stacked = images.map((img) => {
      const t = tf
        .tensor3d(img.pixels, [img.height, img.width, 1])
        .div(127.5)
        .sub(1.0) as tf.Tensor3D;
      return img.height === size && img.width === size
        ? t
        : (tf.image.resizeBilinear(t, [size, size]) as tf.Tensor3D);
    });
    return tf.stack(stacked) as tf.Tensor4D;
  });
}

function tensorToImages(batch: tf.Tensor4D): GrayImage[] {
  const [n, h, w] = [batch.shape[0], batch.shape[1], batch.shape[2]];
  const data = batch.add(1.0).mul(127.5).clipByValue(0, 255).dataSync() as Float32Array;
  const images: GrayImage[] = [];
  for (let i = 0; i < n; i++) {
    images.push({ width: w, height: h, pixels: Float32Array.from(data.slice(i * h * w, (i + 1) * h * w)) });
  }
  return images;
}

export interface TrainedTranslator {
  checkpoint: TranslatorCheckpoint;
  lossLog: LossLogRow[];
}

export async function trainStyleTransfer(
  contentDir: string,
  styleDir: string,
  config: Partial<TranslatorConfig>,
  seed: number,
): Promise<TrainedTranslator> {
  const cfg: TranslatorConfig = { ...DEFAULT_TRANSLATOR_CONFIG, ...config };
  if (cfg.iterations < 1) {
    throw new ConfigError(`n_iterations must be >= 1, got ${cfg.iterations}`);
  }
  if (cfg.learningRate <= 0) {
    throw new ConfigError("learning rate must be positive");
  }
  await initBackend();
  const contentImages = listImageDir(contentDir).map(readGrayPng);
  const styleImages = listImageDir(styleDir).map(readGrayPng);

  const content = imagesToTensor(contentImages, cfg.imageSize);
  const style = imagesToTensor(styleImages, cfg.imageSize);

  const toStyle = buildGenerator(cfg.imageSize, deriveSeed(seed, 1), "to_style");
  const toContent = buildGenerator(cfg.imageSize, deriveSeed(seed, 2), "to_content");
  const dStyle = buildDiscriminator(cfg.imageSize, deriveSeed(seed, 3), "d_style");
  const dContent = buildDiscriminator(cfg.imageSize, deriveSeed(seed, 4), "d_content");

  dStyle.compile({ optimizer: tf.train.adam(cfg.learningRate, 0.5), loss: "meanSquaredError" });
  dContent.compile({ optimizer: tf.train.adam(cfg.learningRate, 0.5), loss: "meanSquaredError" });

  // generator step trains through frozen discriminators (Keras GAN recipe:
  // the discriminators' own compiles above captured their trainable state)
  dStyle.trainable = false;
  dContent.trainable = false;
  const inContent = tf.input({ shape: [cfg.imageSize, cfg.imageSize, 1] });
  const inStyle = tf.input({ shape: [cfg.imageSize, cfg.imageSize, 1] });
  const fakeStyleSym = toStyle.apply(inContent) as tf.SymbolicTensor;
  const fakeContentSym = toContent.apply(inStyle) as tf.SymbolicTensor;
  const recContentSym = toContent.apply(fakeStyleSym) as tf.SymbolicTensor;
  const recStyleSym = toStyle.apply(fakeContentSym) as tf.SymbolicTensor;
  const judgedStyle = dStyle.apply(fakeStyleSym) as tf.SymbolicTensor;
  const judgedContent = dContent.apply(fakeContentSym) as tf.SymbolicTensor;
  const combined = tf.model({
    inputs: [inContent, inStyle],
    outputs: [judgedStyle, judgedContent, recContentSym, recStyleSym],
  });
  // tfjs compile() has no lossWeights: bake the cycle weight into the losses
  const mse = (t: tf.Tensor, p: tf.Tensor) => t.sub(p).square().mean() as tf.Tensor;
  const weightedMae = (t: tf.Tensor, p: tf.Tensor) =>
    t.sub(p).abs().mean().mul(cfg.cycleWeight) as tf.Tensor;
  combined.compile({
    optimizer: tf.train.adam(cfg.learningRate, 0.5),
    loss: [mse, mse, weightedMae, weightedMae],
  });

  const patchShape = dStyle.outputShape.slice(1) as number[];
  const ones = tf.ones([1, ...patchShape]);
  const zeros = tf.zeros([1, ...patchShape]);

  const rng = mulberry32(deriveSeed(seed, 5));
  const lossLog: LossLogRow[] = [];

  // tfjs checks variable trainable flags at step time, so the discriminators
  // are re-enabled for their own updates and frozen for the generator step
  const setDiscriminatorsTrainable = (flag: boolean) => {
    dStyle.trainable = flag;
    dContent.trainable = flag;
  };

  for (let iteration = 1; iteration <= cfg.iterations; iteration++) {
    const ci = randInt(rng, contentImages.length);
    const si = randInt(rng, styleImages.length);
    const x = tf.slice(content, [ci, 0, 0, 0], [1, -1, -1, -1]);
    const y = tf.slice(style, [si, 0, 0, 0], [1, -1, -1, -1]);
    const fakeStyle = toStyle.predict(x) as tf.Tensor;
    const fakeContent = toContent.predict(y) as tf.Tensor;

    setDiscriminatorsTrainable(true);
    const dsReal = await dStyle.trainOnBatch(y, ones);
    const dsFake = await dStyle.trainOnBatch(fakeStyle, zeros);
    const dcReal = await dContent.trainOnBatch(x, ones);
    const dcFake = await dContent.trainOnBatch(fakeContent, zeros);
    const dLoss = (first(dsReal) + first(dsFake) + first(dcReal) + first(dcFake)) / 4;

    setDiscriminatorsTrainable(false);
    const gOut = await combined.trainOnBatch([x, y], [ones, ones, x, y]);
    const gLoss = first(gOut);

    lossLog.push({ iteration, generatorLoss: gLoss, discriminatorLoss: dLoss });
    tf.dispose([x, y, fakeStyle, fakeContent]);
  }

  const checkpoint: TranslatorCheckpoint = {
    kind: "translator",
    config: cfg,
    toStyle: serializeWeights(toStyle),
    toContent: serializeWeights(toContent),
  };
  tf.dispose([content, style, ones, zeros]);
  return { checkpoint, lossLog };
}

function first(loss: number | number[]): number {
  return Array.isArray(loss) ? loss[0] : loss;
}

export function lossLogToCsv(log: LossLogRow[]): string {
  const rows = log.map((r) => `${r.iteration},${r.generatorLoss},${r.discriminatorLoss}`);
  return ["iteration,generator_loss,discriminator_loss", ...rows].join("\n") + "\n";
}

export function saveTranslator(checkpoint: TranslatorCheckpoint, file: string): void {
  fs.writeFileSync(file, JSON.stringify(checkpoint));
}

export function loadTranslator(file: string): TranslatorCheckpoint {
  const parsed = JSON.parse(fs.readFileSync(file, "utf-8")) as TranslatorCheckpoint;
  if (parsed.kind !== "translator") {
    throw new ConfigError(`${file} is not a translator checkpoint`);
  }
  return parsed;
}

/** Translate images content -> style; deterministic, order- and shape-preserving. */
export async function applyStyleTransfer(
  checkpoint: TranslatorCheckpoint,
  images: GrayImage[],
): Promise<GrayImage[]> {
  await initBackend();
  const size = checkpoint.config.imageSize;
  const generator = buildGenerator(size, 0, "to_style");
  deserializeWeights(generator, checkpoint.toStyle);
  const input = imagesToTensor(images, size);
  const output = generator.predict(input, { batchSize: 16 }) as tf.Tensor4D;
  const result = tensorToImages(output);
  tf.dispose([input, output]);
  return result;
}
