/** tfjs backend bootstrap: WASM when available, plain CPU otherwise.
 *
 * The WASM kernels are dramatically faster than the pure-JS CPU backend for
 * the conv-heavy models here; both are deterministic. Force a choice with
 * LUVT_TFJS_BACKEND=cpu|wasm.
 */

import { createRequire } from "node:module";
import path from "node:path";

import * as tf from "@tensorflow/tfjs";

let pending: Promise<string> | null = null;

export function initBackend(): Promise<string> {
  if (pending === null) {
    pending = selectBackend();
  }
  return pending;
}

async function selectBackend(): Promise<string> {
  const forced = process.env.LUVT_TFJS_BACKEND?.toLowerCase();
  if (forced === "cpu") {
    await tf.setBackend("cpu");
    await tf.ready();
    return tf.getBackend();
  }
  try {
    const wasm = await import("@tensorflow/tfjs-backend-wasm");
    const require = createRequire(import.meta.url);
    const dist = path.dirname(require.resolve("@tensorflow/tfjs-backend-wasm"));
    wasm.setWasmPaths(dist + path.sep);
    if (!(await tf.setBackend("wasm"))) {
      throw new Error("wasm backend rejected");
    }
    await tf.ready();
  } catch (error) {
    if (forced === "wasm") {
      throw error;
    }
    await tf.setBackend("cpu");
    await tf.ready();
  }
  return tf.getBackend();
}
