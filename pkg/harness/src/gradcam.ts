/** Gradient-weighted class activation maps over a backbone's block outputs. */

import * as tf from "@tensorflow/tfjs";

import { initBackend } from "./backend.js";
import { restoreBackbone, ClassifierCheckpoint } from "./classifier.js";
import { ConfigError } from "./errors.js";
import { GrayImage } from "./png.js";

export interface ActivationMap {
  width: number;
  height: number;
  /** in [0, 1], max-normalized unless the map is identically zero */
  values: Float32Array;
}

/** Compute the class activation map of `image` at `targetLayer` (a block name).
 *
 * Weighs the target block's feature maps by their pooled score gradients,
 * rectifies, upsamples to the input resolution, and normalizes the peak
 * to 1 when nonzero.
 */
export async function gradCam(
  checkpoint: ClassifierCheckpoint,
  image: GrayImage,
  targetLayer = "block1",
): Promise<ActivationMap> {
  await initBackend();
  const model = restoreBackbone(checkpoint);
  const index = model.blocks.findIndex((b) => b.name === targetLayer);
  if (index < 0) {
    throw new ConfigError(
      `unknown target layer '${targetLayer}'; available: ${model.blocks.map((b) => b.name).join(", ")}`,
    );
  }
  const size = checkpoint.imageSize;

  const result = tf.tidy(() => {
    let x = tf
      .tensor3d(image.pixels, [image.height, image.width, 1])
      .div(255.0) as tf.Tensor3D;
    if (image.height !== size || image.width !== size) {
      x = tf.image.resizeBilinear(x, [size, size]);
    }
    let features = x.expandDims(0) as tf.Tensor;
    for (let i = 0; i <= index; i++) {
      features = model.blocks[i].model.predict(features) as tf.Tensor;
    }
    if (features.shape.length !== 4) {
      throw new ConfigError(
        `target layer '${targetLayer}' has no spatial extent (shape ${JSON.stringify(features.shape)})`,
      );
    }

    const headFrom = (a: tf.Tensor) => {
      let y = a;
      for (let i = index + 1; i < model.blocks.length; i++) {
        y = model.blocks[i].model.apply(y) as tf.Tensor;
      }
      return y.sum() as tf.Scalar;
    };
    const gradients = tf.grad(headFrom)(features);

    const alpha = gradients.mean([1, 2], true); // [1, 1, 1, C]
    const weighted = features.mul(alpha).sum(3) as tf.Tensor3D; // [1, h, w]
    const rectified = tf.relu(weighted).expandDims(3) as tf.Tensor4D;
    const upsampled = tf.image
      .resizeBilinear(rectified, [image.height, image.width])
      .squeeze([0, 3]) as tf.Tensor2D;
    const peak = upsampled.max();
    const normalized = tf.where(
      peak.greater(0),
      upsampled.div(peak.add(1e-38)),
      upsampled,
    ) as tf.Tensor2D;
    return normalized;
  });

  const values = result.dataSync() as Float32Array;
  result.dispose();
  return { width: image.width, height: image.height, values: Float32Array.from(values) };
}

export function activationMapToImage(map: ActivationMap): GrayImage {
  const pixels = new Float32Array(map.values.length);
  for (let i = 0; i < pixels.length; i++) {
    pixels[i] = 255 * map.values[i];
  }
  return { width: map.width, height: map.height, pixels };
}
