#!/usr/bin/env node
/** CLI: style-train, style-apply, clf-train, clf-eval, cam. */

import fs from "node:fs";
import path from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  evaluateClassifier,
  historyToCsv,
  loadClassifier,
  loadLabeledImages,
  saveClassifier,
  trainClassifier,
} from "./classifier.js";
import { ConfigError, DataError } from "./errors.js";
import { activationMapToImage, gradCam } from "./gradcam.js";
import { readManifest } from "./manifest.js";
import { BackboneKind } from "./models.js";
import { readGrayPng, writeGrayPng } from "./png.js";
import { splitByLocation } from "./split.js";
import {
  applyStyleTransfer,
  listImageDir,
  loadTranslator,
  lossLogToCsv,
  saveTranslator,
  trainStyleTransfer,
} from "./styleTransfer.js";

interface SplitFile {
  train: number[];
  val: number[];
  test: number[];
}

async function cmdStyleTrain(argv: any): Promise<void> {
  const { checkpoint, lossLog } = await trainStyleTransfer(
    argv.content,
    argv.style,
    {
      learningRate: argv.lr,
      iterations: argv.iterations,
      imageSize: argv.size,
      cycleWeight: argv.cycleWeight,
    },
    argv.seed,
  );
  saveTranslator(checkpoint, argv.out);
  fs.writeFileSync(argv.out + ".loss.csv", lossLogToCsv(lossLog));
  const last = lossLog[lossLog.length - 1];
  console.log(
    `trained ${argv.iterations} iterations (final generator loss ${last.generatorLoss.toFixed(4)}); ` +
      `checkpoint ${argv.out}, loss curve ${argv.out}.loss.csv`,
  );
}

async function cmdStyleApply(argv: any): Promise<void> {
  const checkpoint = loadTranslator(argv.checkpoint);
  const stat = fs.statSync(argv.input);
  const files = stat.isDirectory() ? listImageDir(argv.input) : [argv.input];
  const outputs = await applyStyleTransfer(checkpoint, files.map(readGrayPng));
  if (stat.isDirectory() || files.length > 1) {
    fs.mkdirSync(argv.out, { recursive: true });
    files.forEach((file, i) => {
      writeGrayPng(path.join(argv.out, path.basename(file)), outputs[i]);
    });
    console.log(`translated ${files.length} images into ${argv.out}`);
  } else {
    fs.mkdirSync(path.dirname(path.resolve(argv.out)), { recursive: true });
    writeGrayPng(argv.out, outputs[0]);
    console.log(`translated ${files[0]} -> ${argv.out}`);
  }
}

async function cmdClfTrain(argv: any): Promise<void> {
  const manifest = readManifest(argv.dataset);
  const split = splitByLocation(manifest, {
    n_train: argv.train,
    n_val: argv.val,
    n_test: argv.test,
    seed: argv.seed,
  });
  const trainSet = loadLabeledImages(argv.dataset, split.train);
  const valSet = loadLabeledImages(argv.dataset, split.val);
  const { checkpoint } = await trainClassifier(trainSet, valSet, argv.backbone as BackboneKind, {
    epochs: argv.epochs,
    imageSize: argv.size,
    horizontalFlip: argv.flip,
    seed: argv.seed,
  });
  saveClassifier(checkpoint, argv.out);
  fs.writeFileSync(argv.out + ".history.csv", historyToCsv(checkpoint));
  const splitFile: SplitFile = split.locations;
  fs.writeFileSync(argv.out + ".split.json", JSON.stringify(splitFile, null, 2));
  console.log(
    `trained ${argv.backbone} (kept epoch ${checkpoint.bestEpoch}, val loss ` +
      `${checkpoint.valLoss[checkpoint.bestEpoch].toFixed(4)}); checkpoint ${argv.out}`,
  );
}

async function cmdClfEval(argv: any): Promise<void> {
  const checkpoint = loadClassifier(argv.checkpoint);
  const manifest = readManifest(argv.dataset);
  let records = manifest.records;
  if (argv.split) {
    const splitFile = JSON.parse(fs.readFileSync(argv.split, "utf-8")) as SplitFile;
    const testIds = new Set(splitFile.test);
    records = records.filter((r) => testIds.has(r.location_id));
  }
  if (records.length === 0) {
    throw new DataError("no test records selected");
  }
  const report = await evaluateClassifier(checkpoint, loadLabeledImages(argv.dataset, records));
  const json = JSON.stringify(report, null, 2);
  if (argv.out) {
    fs.writeFileSync(argv.out, json + "\n");
  }
  console.log(json);
}

async function cmdCam(argv: any): Promise<void> {
  const checkpoint = loadClassifier(argv.checkpoint);
  const image = readGrayPng(argv.image);
  const map = await gradCam(checkpoint, image, argv.layer);
  writeGrayPng(argv.out, activationMapToImage(map));
  console.log(`activation map (${map.width}x${map.height}) -> ${argv.out}`);
}

export async function main(args: string[]): Promise<number> {
  try {
    await yargs(args)
      .scriptName("luvt-harness")
      .command(
        "style-train",
        "train the unpaired style translator",
        (y) =>
          y
            .option("content", { type: "string", demandOption: true, describe: "simulated-image dir or dataset dir" })
            .option("style", { type: "string", demandOption: true, describe: "style-domain image dir or dataset dir" })
            .option("out", { type: "string", demandOption: true })
            .option("iterations", { type: "number", default: 500 })
            .option("lr", { type: "number", default: 2e-4 })
            .option("size", { type: "number", default: 64 })
            .option("cycle-weight", { type: "number", default: 10 })
            .option("seed", { type: "number", default: 0 }),
        (argv) => cmdStyleTrain(argv),
      )
      .command(
        "style-apply",
        "translate images with a trained checkpoint",
        (y) =>
          y
            .option("checkpoint", { type: "string", demandOption: true })
            .option("input", { type: "string", demandOption: true, describe: "png file or directory" })
            .option("out", { type: "string", demandOption: true }),
        (argv) => cmdStyleApply(argv),
      )
      .command(
        "clf-train",
        "train a defect classifier on a dataset tree",
        (y) =>
          y
            .option("dataset", { type: "string", demandOption: true })
            .option("backbone", { choices: ["efficientnet", "resnext", "vit"] as const, default: "efficientnet" })
            .option("out", { type: "string", demandOption: true })
            .option("train", { type: "number", demandOption: true, describe: "training locations" })
            .option("val", { type: "number", demandOption: true, describe: "validation locations" })
            .option("test", { type: "number", demandOption: true, describe: "testing locations" })
            .option("epochs", { type: "number", default: 8 })
            .option("size", { type: "number", default: 32 })
            .option("flip", { type: "boolean", default: false, describe: "horizontal-flip augmentation" })
            .option("seed", { type: "number", default: 0 }),
        (argv) => cmdClfTrain(argv),
      )
      .command(
        "clf-eval",
        "evaluate a classifier checkpoint (accuracy/precision/recall/F-score)",
        (y) =>
          y
            .option("checkpoint", { type: "string", demandOption: true })
            .option("dataset", { type: "string", demandOption: true })
            .option("split", { type: "string", describe: "split.json from clf-train (evaluates its test subset)" })
            .option("out", { type: "string", describe: "write the JSON report here as well" }),
        (argv) => cmdClfEval(argv),
      )
      .command(
        "cam",
        "write a class activation map for one image",
        (y) =>
          y
            .option("checkpoint", { type: "string", demandOption: true })
            .option("image", { type: "string", demandOption: true })
            .option("out", { type: "string", demandOption: true })
            .option("layer", { type: "string", default: "block1" }),
        (argv) => cmdCam(argv),
      )
      .demandCommand(1)
      .strict()
      .fail((msg, err) => {
        throw err ?? new ConfigError(msg ?? "invalid usage");
      })
      .parseAsync();
    return 0;
  } catch (error) {
    if (error instanceof ConfigError || error instanceof DataError) {
      console.error(`error: ${error.message}`);
      return 1;
    }
    throw error;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  main(hideBin(process.argv)).then(
    (code) => process.exit(code),
    (error) => {
      console.error(error);
      process.exit(2);
    },
  );
}
