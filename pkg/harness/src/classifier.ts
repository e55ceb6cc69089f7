/** Binary defect classifier training with validation-loss checkpointing. */

import * as tf from "@tensorflow/tfjs";
import fs from "node:fs";

import { initBackend } from "./backend.js";
import { ConfigError, DataError } from "./errors.js";
import { imagePath, Manifest, SampleRecord } from "./manifest.js";
import { EvalReport, computeMetrics, confusionFromPredictions } from "./metrics.js";
import {
  BackboneKind,
  SerializedWeights,
  buildBackbone,
  deserializeWeights,
  serializeWeights,
} from "./models.js";
import { GrayImage, readGrayPng } from "./png.js";
import { deriveSeed, mulberry32, shuffle } from "./rng.js";

export interface LabeledImage {
  image: GrayImage;
  /** true = defective (positive class) */
  label: boolean;
}

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  horizontalFlip: boolean;
  imageSize: number;
  seed: number;
}

export const DEFAULT_TRAIN_OPTIONS: TrainOptions = {
  epochs: 8,
  batchSize: 8,
  learningRate: 1e-3,
  horizontalFlip: false,
  imageSize: 32,
  seed: 0,
};

export interface ClassifierCheckpoint {
  kind: "classifier";
  backbone: BackboneKind;
  imageSize: number;
  weights: SerializedWeights;
  bestEpoch: number;
  trainLoss: number[];
  valLoss: number[];
}

export function loadLabeledImages(datasetDir: string, records: SampleRecord[]): LabeledImage[] {
  return records.map((record) => ({
    image: readGrayPng(imagePath(datasetDir, record)),
    label: record.label === "defective",
  }));
}

/** Index of the checkpoint to keep: first minimum of the validation losses. */
export function bestEpoch(valLosses: number[]): number {
  if (valLosses.length === 0) {
    throw new ConfigError("no epochs recorded");
  }
  let best = 0;
  for (let i = 1; i < valLosses.length; i++) {
    if (valLosses[i] < valLosses[best]) {
      best = i;
    }
  }
  return best;
}

function toTensors(samples: LabeledImage[], size: number): { xs: tf.Tensor4D; ys: tf.Tensor2D } {
  const xs = tf.tidy(() => {
    const stacked = samples.map((s) => {
      const t = tf
        .tensor3d(s.image.pixels, [s.image.height, s.image.width, 1])
        .div(255.0) as tf.Tensor3D;
      return s.image.height === size && s.image.width === size
        ? t
        : (tf.image.resizeBilinear(t, [size, size]) as tf.Tensor3D);
    });
    return tf.stack(stacked) as tf.Tensor4D;
  });
  const ys = tf.tensor2d(samples.map((s) => [s.label ? 1 : 0]));
  return { xs, ys };
}

export interface TrainedClassifier {
  checkpoint: ClassifierCheckpoint;
}

export async function trainClassifier(
  train: LabeledImage[],
  val: LabeledImage[],
  backbone: BackboneKind,
  options: Partial<TrainOptions> = {},
): Promise<TrainedClassifier> {
  await initBackend();
  const opts: TrainOptions = { ...DEFAULT_TRAIN_OPTIONS, ...options };
  if (train.length === 0 || val.length === 0) {
    throw new DataError("training and validation sets must be nonempty");
  }
  const positives = train.filter((s) => s.label).length;
  if (positives === 0 || positives === train.length) {
    throw new DataError("training set contains a single class");
  }

  const model = buildBackbone(backbone, opts.imageSize, deriveSeed(opts.seed, 11));
  model.full.compile({
    optimizer: tf.train.adam(opts.learningRate),
    loss: "binaryCrossentropy",
  });

  const { xs, ys } = toTensors(train, opts.imageSize);
  const { xs: valXs, ys: valYs } = toTensors(val, opts.imageSize);
  const rng = mulberry32(deriveSeed(opts.seed, 12));

  const trainLoss: number[] = [];
  const valLoss: number[] = [];
  let bestWeights: SerializedWeights | null = null;
  let bestValLoss = Infinity;
  let bestIndex = 0;

  for (let epoch = 0; epoch < opts.epochs; epoch++) {
    const order = shuffle(rng, [...Array(train.length).keys()]);
    let epochLoss = 0;
    let batches = 0;
    for (let start = 0; start < order.length; start += opts.batchSize) {
      const idx = order.slice(start, start + opts.batchSize);
      const flips = idx.map(() => opts.horizontalFlip && rng() < 0.5);
      const batch = tf.tidy(() => {
        const bx = tf.gather(xs, idx);
        if (!flips.some(Boolean)) {
          return bx;
        }
        // flip selected samples along the width axis (training-only transform)
        const mask = tf.tensor(flips.map((f) => (f ? 1 : 0)), [idx.length, 1, 1, 1]);
        return tf.where(mask.cast("bool"), tf.reverse(bx, [2]), bx) as tf.Tensor4D;
      });
      const by = tf.tidy(() => tf.gather(ys, idx));
      const loss = await model.full.trainOnBatch(batch, by);
      epochLoss += Array.isArray(loss) ? loss[0] : loss;
      batches += 1;
      tf.dispose([batch, by]);
    }
    trainLoss.push(epochLoss / batches);

    const evalOut = model.full.evaluate(valXs, valYs, { batchSize: 32 }) as tf.Scalar;
    const vLoss = evalOut.dataSync()[0];
    evalOut.dispose();
    valLoss.push(vLoss);
    if (vLoss < bestValLoss) {
      bestValLoss = vLoss;
      bestIndex = epoch;
      bestWeights = serializeWeights(model.full);
    }
  }

  // keep the weights that minimized the validation loss
  if (bestWeights !== null) {
    deserializeWeights(model.full, bestWeights);
  }
  const checkpoint: ClassifierCheckpoint = {
    kind: "classifier",
    backbone,
    imageSize: opts.imageSize,
    weights: bestWeights ?? serializeWeights(model.full),
    bestEpoch: bestIndex,
    trainLoss,
    valLoss,
  };
  tf.dispose([xs, ys, valXs, valYs]);
  return { checkpoint };
}

export function saveClassifier(checkpoint: ClassifierCheckpoint, file: string): void {
  fs.writeFileSync(file, JSON.stringify(checkpoint));
}

export function loadClassifier(file: string): ClassifierCheckpoint {
  const parsed = JSON.parse(fs.readFileSync(file, "utf-8")) as ClassifierCheckpoint;
  if (parsed.kind !== "classifier") {
    throw new ConfigError(`${file} is not a classifier checkpoint`);
  }
  return parsed;
}

export function restoreBackbone(checkpoint: ClassifierCheckpoint) {
  const model = buildBackbone(checkpoint.backbone, checkpoint.imageSize, 0);
  deserializeWeights(model.full, checkpoint.weights);
  return model;
}

export async function predictProbabilities(
  checkpoint: ClassifierCheckpoint,
  samples: LabeledImage[],
): Promise<number[]> {
  await initBackend();
  const model = restoreBackbone(checkpoint);
  const { xs, ys } = toTensors(samples, checkpoint.imageSize);
  const out = model.full.predict(xs, { batchSize: 32 }) as tf.Tensor2D;
  const probs = Array.from(out.dataSync());
  tf.dispose([xs, ys, out]);
  return probs;
}

/** Confusion counts and derived metrics on a test set (defective = positive). */
export async function evaluateClassifier(
  checkpoint: ClassifierCheckpoint,
  test: LabeledImage[],
): Promise<EvalReport> {
  if (test.length === 0) {
    throw new DataError("test set must be nonempty");
  }
  const probs = await predictProbabilities(checkpoint, test);
  const truths = test.map((s) => s.label);
  const predictions = probs.map((p) => p >= 0.5);
  const { tp, fp, fn, tn } = confusionFromPredictions(truths, predictions);
  return computeMetrics(tp, fp, fn, tn);
}

export function historyToCsv(checkpoint: ClassifierCheckpoint): string {
  const rows = checkpoint.trainLoss.map(
    (t, i) => `${i},${t},${checkpoint.valLoss[i]}`,
  );
  return ["epoch,train_loss,val_loss", ...rows].join("\n") + "\n";
}
