export { initBackend } from "./backend.js";
export { ConfigError, DataError } from "./errors.js";
export { GrayImage, readGrayPng, writeGrayPng } from "./png.js";
export {
  DefectInfo,
  Manifest,
  ManifestHeader,
  SampleRecord,
  groupByLocation,
  imagePath,
  readManifest,
} from "./manifest.js";
export { EvalReport, computeMetrics, confusionFromPredictions } from "./metrics.js";
export { SplitResult, SplitSpec, splitByLocation } from "./split.js";
export {
  BackboneKind,
  BackboneModel,
  buildBackbone,
  buildDiscriminator,
  buildGenerator,
} from "./models.js";
export {
  DEFAULT_TRANSLATOR_CONFIG,
  LossLogRow,
  TranslatorCheckpoint,
  TranslatorConfig,
  applyStyleTransfer,
  imagesToTensor,
  listImageDir,
  loadTranslator,
  lossLogToCsv,
  saveTranslator,
  trainStyleTransfer,
} from "./styleTransfer.js";
export {
  ClassifierCheckpoint,
  DEFAULT_TRAIN_OPTIONS,
  LabeledImage,
  TrainOptions,
  bestEpoch,
  evaluateClassifier,
  historyToCsv,
  loadClassifier,
  loadLabeledImages,
  predictProbabilities,
  restoreBackbone,
  saveClassifier,
  trainClassifier,
} from "./classifier.js";
export { ActivationMap, activationMapToImage, gradCam } from "./gradcam.js";
export { mulberry32, shuffle, deriveSeed } from "./rng.js";
