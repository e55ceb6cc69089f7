/** Reader for the simulator's dataset tree (manifest.jsonl + images/). */

import fs from "node:fs";
import path from "node:path";

import { DataError } from "./errors.js";

export interface DefectInfo {
  center_x: number;
  center_z: number;
  diameter: number;
}

export interface SampleRecord {
  image_path: string;
  location_id: number;
  frame_index: number;
  time: number;
  label: "defect_free" | "defective";
  defect: DefectInfo | null;
}

export interface ManifestHeader {
  schema_version: number;
  config_digest: string;
  seed: number;
}

export interface Manifest {
  header: ManifestHeader;
  records: SampleRecord[];
}

export function readManifest(datasetDir: string): Manifest {
  const file = path.join(datasetDir, "manifest.jsonl");
  if (!fs.existsSync(file)) {
    throw new DataError(`no manifest.jsonl under ${datasetDir}`);
  }
  const lines = fs.readFileSync(file, "utf-8").split("\n").filter((l) => l.trim());
  if (lines.length === 0) {
    throw new DataError(`empty manifest ${file}`);
  }
  const header = JSON.parse(lines[0]) as ManifestHeader;
  const records = lines.slice(1).map((line) => JSON.parse(line) as SampleRecord);
  return { header, records };
}

/** Record indices grouped by location id, ordered by location id. */
export function groupByLocation(records: SampleRecord[]): Map<number, SampleRecord[]> {
  const groups = new Map<number, SampleRecord[]>();
  for (const record of records) {
    const group = groups.get(record.location_id);
    if (group) {
      group.push(record);
    } else {
      groups.set(record.location_id, [record]);
    }
  }
  return new Map([...groups.entries()].sort((a, b) => a[0] - b[0]));
}

export function imagePath(datasetDir: string, record: SampleRecord): string {
  return path.join(datasetDir, record.image_path);
}
