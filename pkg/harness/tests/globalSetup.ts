/** Generates the fixture datasets by invoking the simulator CLI, so the
 * harness tests consume the primary component's real external interfaces
 * (manifest.jsonl + PNG tree). The noisy variant stands in for the
 * measured-image style domain.
 */

import { execFileSync } from "node:child_process";
import fs from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";

const here = path.dirname(fileURLToPath(import.meta.url));
export const FIXTURES = path.join(here, "fixtures");

const BASE_CONFIG = `
[geometry]
width_mm = 30.0
depth_mm = 20.0
view_x0_mm = 8.6
view_z0_mm = 4.0
view_width_mm = 12.8
view_height_mm = 12.8

[grid]
dx_mm = 0.4

[source]
center_x_mm = 15.0

[dataset]
n_locations = 3
n_frames = 8
margin_mm = 1.5
`;

const NOISY_EXTRA = `noise_sigma = 14.0
noise_speckle = 0.08
`;

export default function setup(): void {
  fs.rmSync(FIXTURES, { recursive: true, force: true });
  fs.mkdirSync(FIXTURES, { recursive: true });

  const cleanConfig = path.join(FIXTURES, "clean.toml");
  const noisyConfig = path.join(FIXTURES, "noisy.toml");
  fs.writeFileSync(cleanConfig, BASE_CONFIG);
  fs.writeFileSync(noisyConfig, BASE_CONFIG + NOISY_EXTRA);

  for (const [config, out, seed] of [
    [cleanConfig, path.join(FIXTURES, "clean"), "11"],
    [noisyConfig, path.join(FIXTURES, "noisy"), "12"],
  ] as const) {
    execFileSync(
      "luvtsim",
      ["dataset", "--config", config, "--out", out, "--seed", seed, "--quiet"],
      { stdio: "inherit" },
    );
  }
}
