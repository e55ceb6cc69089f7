/** Tiny seeded model builders: three classifier backbone families at desk
 * scale (separable-style + squeeze-excite, grouped-residual, and a patch-token
 * transformer) plus the translator generator/discriminator pair.
 *
 * Convolutions are expressed as a constant patch-extraction conv (identity
 * kernel, so backprop only ever needs the conv input gradient) followed by a
 * trainable matMul; that keeps every model trainable on the WASM backend,
 * whose conv filter-gradient kernel is missing.
 *
 * Every backbone is a chain of named block models ending in "head"; block
 * boundaries are the valid class-activation-map targets, and the composed
 * full model shares the block weights.
 */

import * as tf from "@tensorflow/tfjs";

import { ConfigError } from "./errors.js";

export type BackboneKind = "efficientnet" | "resnext" | "vit";

export interface BackboneModel {
  kind: BackboneKind;
  imageSize: number;
  /** feature blocks in order; the last entry is the "head" (features -> probability) */
  blocks: { name: string; model: tf.LayersModel }[];
  full: tf.LayersModel;
}

type Activation = "linear" | "relu" | "tanh";

/** Identity kernel [k, k, cin, k*k*cin] that rearranges patches into channels. */
function identityKernelData(kernel: number, cin: number): Float32Array {
  const cout = kernel * kernel * cin;
  const data = new Float32Array(kernel * kernel * cin * cout);
  for (let di = 0; di < kernel; di++) {
    for (let dj = 0; dj < kernel; dj++) {
      for (let c = 0; c < cin; c++) {
        const out = (di * kernel + dj) * cin + c;
        data[((di * kernel + dj) * cin + c) * cout + out] = 1;
      }
    }
  }
  return data;
}

class PatchConv2D extends tf.layers.Layer {
  static className = "PatchConv2D";
  private kernelVar!: ReturnType<tf.layers.Layer["addWeight"]>;
  private biasVar!: ReturnType<tf.layers.Layer["addWeight"]>;
  private identity: tf.Tensor4D | null = null;
  private cin = 0;

  constructor(
    private readonly filters: number,
    private readonly kernel: number,
    private readonly stride: number,
    private readonly seed: number,
    private readonly activation: Activation = "linear",
    name?: string,
  ) {
    super(name ? { name } : {});
  }

  override build(inputShape: tf.Shape): void {
    this.cin = inputShape[3] as number;
    this.kernelVar = this.addWeight(
      "kernel",
      [this.kernel * this.kernel * this.cin, this.filters],
      "float32",
      tf.initializers.glorotUniform({ seed: this.seed }),
    );
    this.biasVar = this.addWeight("bias", [this.filters], "float32", tf.initializers.zeros());
    this.built = true;
  }

  override computeOutputShape(inputShape: tf.Shape): tf.Shape {
    const h = Math.ceil((inputShape[1] as number) / this.stride);
    const w = Math.ceil((inputShape[2] as number) / this.stride);
    return [inputShape[0], h, w, this.filters];
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = (Array.isArray(inputs) ? inputs[0] : inputs) as tf.Tensor4D;
    if (this.identity === null || this.identity.isDisposed) {
      this.identity = tf.keep(
        tf.tensor4d(identityKernelData(this.kernel, this.cin), [
          this.kernel,
          this.kernel,
          this.cin,
          this.kernel * this.kernel * this.cin,
        ]),
      );
    }
    const patches = tf.conv2d(x, this.identity, this.stride, "same");
    const [b, h, w] = [patches.shape[0], patches.shape[1], patches.shape[2]];
    const flat = patches.reshape([b * h * w, this.kernel * this.kernel * this.cin]);
    let y = tf
      .matMul(flat, this.kernelVar.read())
      .reshape([b, h, w, this.filters])
      .add(this.biasVar.read());
    if (this.activation === "relu") {
      y = tf.relu(y);
    } else if (this.activation === "tanh") {
      y = tf.tanh(y);
    }
    return y;
  }
}

class ChannelSlice extends tf.layers.Layer {
  static className = "ChannelSlice";

  constructor(
    private readonly begin: number,
    private readonly size: number,
  ) {
    super({ name: `slice_${begin}_${size}` });
  }

  override computeOutputShape(inputShape: tf.Shape): tf.Shape {
    return [...inputShape.slice(0, 3), this.size];
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = Array.isArray(inputs) ? inputs[0] : inputs;
    return tf.slice(x, [0, 0, 0, this.begin], [-1, -1, -1, this.size]);
  }
}

class AddPositionEmbedding extends tf.layers.Layer {
  static className = "AddPositionEmbedding";
  private pos!: ReturnType<tf.layers.Layer["addWeight"]>;

  constructor(
    private readonly tokens: number,
    private readonly dim: number,
    private readonly seed: number,
  ) {
    super({ name: `posemb_${tokens}x${dim}` });
  }

  override build(): void {
    this.pos = this.addWeight(
      "pos",
      [1, this.tokens, this.dim],
      "float32",
      tf.initializers.randomNormal({ mean: 0, stddev: 0.02, seed: this.seed }),
    );
    this.built = true;
  }

  override computeOutputShape(inputShape: tf.Shape): tf.Shape {
    return inputShape;
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = Array.isArray(inputs) ? inputs[0] : inputs;
    return tf.add(x, this.pos.read());
  }
}

class SelfAttention extends tf.layers.Layer {
  static className = "SelfAttention";
  private wq!: ReturnType<tf.layers.Layer["addWeight"]>;
  private wk!: ReturnType<tf.layers.Layer["addWeight"]>;
  private wv!: ReturnType<tf.layers.Layer["addWeight"]>;
  private wo!: ReturnType<tf.layers.Layer["addWeight"]>;

  constructor(
    private readonly dim: number,
    private readonly heads: number,
    private readonly seed: number,
  ) {
    super({ name: `attention_h${heads}` });
    if (dim % heads !== 0) {
      throw new ConfigError(`attention dim ${dim} not divisible by ${heads} heads`);
    }
  }

  override build(): void {
    const mk = (name: string, offset: number) =>
      this.addWeight(
        name,
        [this.dim, this.dim],
        "float32",
        tf.initializers.glorotUniform({ seed: this.seed + offset }),
      );
    this.wq = mk("wq", 0);
    this.wk = mk("wk", 1);
    this.wv = mk("wv", 2);
    this.wo = mk("wo", 3);
    this.built = true;
  }

  override computeOutputShape(inputShape: tf.Shape): tf.Shape {
    return inputShape;
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = (Array.isArray(inputs) ? inputs[0] : inputs) as tf.Tensor3D;
    const [b, t] = [x.shape[0], x.shape[1]];
    const dh = this.dim / this.heads;
    const project = (w: tf.Tensor) =>
      tf
        .matMul(x.reshape([b * t, this.dim]), w)
        .reshape([b, t, this.heads, dh])
        .transpose([0, 2, 1, 3]); // [B, H, T, dh]
    const q = project(this.wq.read());
    const k = project(this.wk.read());
    const v = project(this.wv.read());
    const scores = tf.matMul(q, k, false, true).div(Math.sqrt(dh));
    const attention = tf.softmax(scores, -1);
    const context = tf
      .matMul(attention, v)
      .transpose([0, 2, 1, 3])
      .reshape([b * t, this.dim]);
    return tf.matMul(context, this.wo.read()).reshape([b, t, this.dim]);
  }
}

function conv(
  filters: number,
  kernel: number,
  stride: number,
  seed: number,
  activation: Activation = "linear",
): PatchConv2D {
  return new PatchConv2D(filters, kernel, stride, seed, activation);
}

function squeezeExcite(x: tf.SymbolicTensor, channels: number, seed: number): tf.SymbolicTensor {
  let s = tf.layers.globalAveragePooling2d({}).apply(x) as tf.SymbolicTensor;
  s = tf.layers
    .dense({
      units: Math.max(2, channels / 4),
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
    })
    .apply(s) as tf.SymbolicTensor;
  s = tf.layers
    .dense({
      units: channels,
      activation: "sigmoid",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
    })
    .apply(s) as tf.SymbolicTensor;
  s = tf.layers.reshape({ targetShape: [1, 1, channels] }).apply(s) as tf.SymbolicTensor;
  return tf.layers.multiply({}).apply([x, s]) as tf.SymbolicTensor;
}

function blockModel(name: string, input: tf.SymbolicTensor, output: tf.SymbolicTensor): {
  name: string;
  model: tf.LayersModel;
} {
  return { name, model: tf.model({ inputs: input, outputs: output, name }) };
}

function headModel(name: string, featureShape: number[], seed: number): {
  name: string;
  model: tf.LayersModel;
} {
  const input = tf.input({ shape: featureShape });
  let y = tf.layers.globalAveragePooling2d({}).apply(input) as tf.SymbolicTensor;
  y = tf.layers
    .dense({
      units: 1,
      activation: "sigmoid",
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
    })
    .apply(y) as tf.SymbolicTensor;
  return blockModel(name, input, y);
}

function buildEfficientNetTiny(imageSize: number, seed: number) {
  // inverted-bottleneck flavor: spatial mix, squeeze-excite, pointwise project
  const in0 = tf.input({ shape: [imageSize, imageSize, 1] });
  const y = conv(12, 3, 2, seed, "relu").apply(in0) as tf.SymbolicTensor;
  const block0 = blockModel("block0", in0, y);

  const in1 = tf.input({ shape: block0.model.outputShape.slice(1) as number[] });
  let z = conv(24, 3, 2, seed + 2, "relu").apply(in1) as tf.SymbolicTensor;
  z = squeezeExcite(z, 24, seed + 4);
  z = conv(16, 1, 1, seed + 5).apply(z) as tf.SymbolicTensor;
  const block1 = blockModel("block1", in1, z);

  const head = headModel("head", block1.model.outputShape.slice(1) as number[], seed + 6);
  return [block0, block1, head];
}

function buildResNextTiny(imageSize: number, seed: number) {
  const in0 = tf.input({ shape: [imageSize, imageSize, 1] });
  const y = conv(16, 3, 2, seed, "relu").apply(in0) as tf.SymbolicTensor;
  const block0 = blockModel("block0", in0, y);

  const in1 = tf.input({ shape: block0.model.outputShape.slice(1) as number[] });
  const cardinality = 4;
  const groupWidth = 4;
  const branches: tf.SymbolicTensor[] = [];
  for (let g = 0; g < cardinality; g++) {
    let b = new ChannelSlice(g * groupWidth, groupWidth).apply(in1) as tf.SymbolicTensor;
    b = conv(groupWidth, 3, 1, seed + 10 + g, "relu").apply(b) as tf.SymbolicTensor;
    branches.push(b);
  }
  let z = tf.layers.concatenate({}).apply(branches) as tf.SymbolicTensor;
  z = conv(16, 1, 1, seed + 20).apply(z) as tf.SymbolicTensor;
  z = tf.layers.add({}).apply([in1, z]) as tf.SymbolicTensor;
  z = tf.layers.activation({ activation: "relu" }).apply(z) as tf.SymbolicTensor;
  z = conv(16, 2, 2, seed + 22).apply(z) as tf.SymbolicTensor; // strided downsample
  const block1 = blockModel("block1", in1, z);

  const head = headModel("head", block1.model.outputShape.slice(1) as number[], seed + 21);
  return [block0, block1, head];
}

function buildViTTiny(imageSize: number, seed: number) {
  const patch = 4;
  if (imageSize % patch !== 0) {
    throw new ConfigError(`vit image size ${imageSize} must be a multiple of ${patch}`);
  }
  const grid = imageSize / patch;
  const tokens = grid * grid;
  const dim = 32;

  const in0 = tf.input({ shape: [imageSize, imageSize, 1] });
  let y = conv(dim, patch, patch, seed).apply(in0) as tf.SymbolicTensor;
  y = tf.layers.reshape({ targetShape: [tokens, dim] }).apply(y) as tf.SymbolicTensor;
  y = new AddPositionEmbedding(tokens, dim, seed + 1).apply(y) as tf.SymbolicTensor;
  y = tf.layers.reshape({ targetShape: [grid, grid, dim] }).apply(y) as tf.SymbolicTensor;
  const block0 = blockModel("block0", in0, y);

  const in1 = tf.input({ shape: [grid, grid, dim] });
  let t = tf.layers.reshape({ targetShape: [tokens, dim] }).apply(in1) as tf.SymbolicTensor;
  let a = tf.layers.layerNormalization({}).apply(t) as tf.SymbolicTensor;
  a = new SelfAttention(dim, 4, seed + 2).apply(a) as tf.SymbolicTensor;
  t = tf.layers.add({}).apply([t, a]) as tf.SymbolicTensor;
  let m = tf.layers.layerNormalization({}).apply(t) as tf.SymbolicTensor;
  m = tf.layers
    .dense({
      units: dim * 2,
      activation: "relu",
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 7 }),
    })
    .apply(m) as tf.SymbolicTensor;
  m = tf.layers
    .dense({ units: dim, kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 8 }) })
    .apply(m) as tf.SymbolicTensor;
  t = tf.layers.add({}).apply([t, m]) as tf.SymbolicTensor;
  const out = tf.layers.reshape({ targetShape: [grid, grid, dim] }).apply(t) as tf.SymbolicTensor;
  const block1 = blockModel("block1", in1, out);

  const head = headModel("head", [grid, grid, dim], seed + 9);
  return [block0, block1, head];
}

export function buildBackbone(kind: BackboneKind, imageSize: number, seed: number): BackboneModel {
  const blocks =
    kind === "efficientnet"
      ? buildEfficientNetTiny(imageSize, seed)
      : kind === "resnext"
        ? buildResNextTiny(imageSize, seed)
        : kind === "vit"
          ? buildViTTiny(imageSize, seed)
          : null;
  if (blocks === null) {
    throw new ConfigError(`unknown backbone kind '${kind}'`);
  }
  const input = tf.input({ shape: [imageSize, imageSize, 1] });
  let y: tf.SymbolicTensor = input;
  for (const block of blocks) {
    y = block.model.apply(y) as tf.SymbolicTensor;
  }
  const full = tf.model({ inputs: input, outputs: y, name: `${kind}_tiny` });
  return { kind, imageSize, blocks, full };
}

/** Translator generator: 3-layer full-resolution convnet, tanh output in [-1, 1]. */
export function buildGenerator(imageSize: number, seed: number, name: string): tf.LayersModel {
  const input = tf.input({ shape: [imageSize, imageSize, 1] });
  let y = conv(16, 3, 1, seed, "relu").apply(input) as tf.SymbolicTensor;
  y = conv(16, 3, 1, seed + 1, "relu").apply(y) as tf.SymbolicTensor;
  y = conv(1, 3, 1, seed + 2, "tanh").apply(y) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: y, name });
}

/** Patch discriminator for least-squares adversarial training. */
export function buildDiscriminator(imageSize: number, seed: number, name: string): tf.LayersModel {
  const input = tf.input({ shape: [imageSize, imageSize, 1] });
  let y = conv(16, 3, 2, seed).apply(input) as tf.SymbolicTensor;
  y = tf.layers.leakyReLU({ alpha: 0.2 }).apply(y) as tf.SymbolicTensor;
  y = conv(32, 3, 2, seed + 1).apply(y) as tf.SymbolicTensor;
  y = tf.layers.leakyReLU({ alpha: 0.2 }).apply(y) as tf.SymbolicTensor;
  y = conv(1, 3, 1, seed + 2).apply(y) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: y, name });
}

// --- weight (de)serialization -------------------------------------------

export interface SerializedWeights {
  shapes: number[][];
  /** base64 of the concatenated float32 buffers */
  data: string;
}

export function serializeWeights(model: tf.LayersModel): SerializedWeights {
  const tensors = model.getWeights();
  const shapes = tensors.map((t) => [...t.shape]);
  const arrays = tensors.map((t) => t.dataSync() as Float32Array);
  const total = arrays.reduce((n, a) => n + a.length, 0);
  const flat = new Float32Array(total);
  let offset = 0;
  for (const a of arrays) {
    flat.set(a, offset);
    offset += a.length;
  }
  return { shapes, data: Buffer.from(flat.buffer, flat.byteOffset, flat.byteLength).toString("base64") };
}

export function deserializeWeights(model: tf.LayersModel, serialized: SerializedWeights): void {
  const buffer = Buffer.from(serialized.data, "base64");
  const flat = new Float32Array(buffer.buffer, buffer.byteOffset, buffer.byteLength / 4);
  const tensors: tf.Tensor[] = [];
  let offset = 0;
  for (const shape of serialized.shapes) {
    const size = shape.reduce((a, b) => a * b, 1);
    tensors.push(tf.tensor(flat.slice(offset, offset + size), shape));
    offset += size;
  }
  model.setWeights(tensors);
  tensors.forEach((t) => t.dispose());
}
