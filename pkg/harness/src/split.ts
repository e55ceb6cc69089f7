/** Location-atomic train/val/test partitioning of a dataset manifest.
 *
 * Splitting happens at the defect-location level: every frame of a location
 * lands in exactly one subset, so no sequence straddles the split.
 */

import { DataError } from "./errors.js";
import { Manifest, SampleRecord, groupByLocation } from "./manifest.js";
import { mulberry32, shuffle } from "./rng.js";

export interface SplitSpec {
  n_train: number;
  n_val: number;
  n_test: number;
  seed: number;
}

export interface SplitResult {
  train: SampleRecord[];
  val: SampleRecord[];
  test: SampleRecord[];
  locations: { train: number[]; val: number[]; test: number[] };
}

export function splitByLocation(manifest: Manifest, spec: SplitSpec): SplitResult {
  if (spec.n_train < 0 || spec.n_val < 0 || spec.n_test < 0) {
    throw new DataError("split counts must be >= 0");
  }
  const groups = groupByLocation(manifest.records);
  const locationIds = [...groups.keys()];
  const wanted = spec.n_train + spec.n_val + spec.n_test;
  if (wanted !== locationIds.length) {
    throw new DataError(
      `split counts ${spec.n_train}/${spec.n_val}/${spec.n_test} must sum to the ` +
        `${locationIds.length} available locations`,
    );
  }
  const order = shuffle(mulberry32(spec.seed), [...locationIds]);
  const trainIds = order.slice(0, spec.n_train).sort((a, b) => a - b);
  const valIds = order.slice(spec.n_train, spec.n_train + spec.n_val).sort((a, b) => a - b);
  const testIds = order.slice(spec.n_train + spec.n_val).sort((a, b) => a - b);

  const collect = (ids: number[]) => ids.flatMap((id) => groups.get(id) ?? []);
  return {
    train: collect(trainIds),
    val: collect(valIds),
    test: collect(testIds),
    locations: { train: trainIds, val: valIds, test: testIds },
  };
}
