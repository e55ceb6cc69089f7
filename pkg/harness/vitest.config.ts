import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: "./tests/globalSetup.ts",
    testTimeout: 600_000,
    hookTimeout: 120_000,
    pool: "forks",
    silent: false,
  },
});
