/** Confusion-matrix metrics for the binary defect/defect-free task. */

export interface EvalReport {
  tp: number;
  fp: number;
  fn: number;
  tn: number;
  accuracy: number;
  precision: number;
  recall: number;
  f_score: number;
  /** ratios whose denominator was zero and were reported as 0 */
  undefined_metrics: string[];
}

export function computeMetrics(tp: number, fp: number, fn: number, tn: number): EvalReport {
  for (const [name, v] of Object.entries({ tp, fp, fn, tn })) {
    if (v < 0 || !Number.isInteger(v)) {
      throw new RangeError(`confusion count ${name} must be a non-negative integer, got ${v}`);
    }
  }
  const total = tp + fp + fn + tn;
  const undefinedMetrics: string[] = [];

  const accuracy = total > 0 ? (tp + tn) / total : flag("accuracy");
  const precision = tp + fp > 0 ? tp / (tp + fp) : flag("precision");
  const recall = tp + fn > 0 ? tp / (tp + fn) : flag("recall");
  const f_score = precision + recall > 0 ? (2 * precision * recall) / (precision + recall) : flag("f_score");

  function flag(name: string): number {
    undefinedMetrics.push(name);
    return 0;
  }

  return { tp, fp, fn, tn, accuracy, precision, recall, f_score, undefined_metrics: undefinedMetrics };
}

/** Accumulate a confusion matrix from labels (defective = positive class). */
export function confusionFromPredictions(
  truths: boolean[],
  predictions: boolean[],
): { tp: number; fp: number; fn: number; tn: number } {
  if (truths.length !== predictions.length) {
    throw new RangeError("truth/prediction length mismatch");
  }
  let tp = 0;
  let fp = 0;
  let fn = 0;
  let tn = 0;
  for (let i = 0; i < truths.length; i++) {
    if (truths[i] && predictions[i]) tp++;
    else if (!truths[i] && predictions[i]) fp++;
    else if (truths[i] && !predictions[i]) fn++;
    else tn++;
  }
  return { tp, fp, fn, tn };
}
