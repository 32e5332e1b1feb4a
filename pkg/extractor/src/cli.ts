#!/usr/bin/env node
/**
 * Extraction CLI: turn benchmark datasets and an encoder into EMBT files
 * that the classification toolkit consumes directly.
 *
 *   embt-extract extract-audio --dataset esc50 --root /data/ESC-50 \
 *       --model command:"python clap_bridge.py" --dim 512 --out-prefix esc50_audio
 *   embt-extract extract-text --labels "dog,siren" \
 *       --pattern "This is a sound of {}" --model stub:16 --out-prefix text
 */

import * as fs from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { makeEncoder } from "./encoder.js";
import { extractAudio, extractText } from "./extract.js";
import {
  loadEsc50Manifest,
  loadFsd50kManifest,
  loadJsonManifest,
  loadUs8kManifest,
  validateManifest,
  type ExtractionManifest,
} from "./manifest.js";
import type { CaseMode } from "./prompts.js";

function buildManifest(args: {
  dataset: string;
  root: string;
  model: string;
  manifestJson?: string;
  split?: string;
}): ExtractionManifest {
  switch (args.dataset) {
    case "esc50":
      return loadEsc50Manifest(args.root, args.model);
    case "us8k":
      return loadUs8kManifest(args.root, args.model);
    case "fsd50k":
      return loadFsd50kManifest(args.root, args.model,
        (args.split ?? "both") as "dev" | "eval" | "both");
    case "json":
      if (!args.manifestJson) throw new Error("--dataset json needs --manifest-json");
      return loadJsonManifest(args.manifestJson, args.root, args.model);
    default:
      throw new Error(`unknown dataset ${args.dataset}`);
  }
}

export async function main(argv: string[]): Promise<number> {
  let exitCode = 0;
  const parser = yargs(argv)
    .scriptName("embt-extract")
    .strict()
    .exitProcess(false)
    .command(
      "extract-audio",
      "Embed every clip of a dataset into an EMBT file",
      (y) =>
        y
          .option("dataset", { choices: ["esc50", "us8k", "fsd50k", "json"] as const, demandOption: true })
          .option("root", { type: "string", demandOption: true })
          .option("manifest-json", { type: "string" })
          .option("split", { choices: ["dev", "eval", "both"] as const })
          .option("model", { type: "string", demandOption: true })
          .option("dim", { type: "number" })
          .option("long-audio-mode", { type: "string" })
          .option("skip-validate", { type: "boolean", default: false })
          .option("out-prefix", { type: "string", demandOption: true }),
      async (args) => {
        const manifest = buildManifest({
          dataset: args.dataset,
          root: args.root,
          model: args.model,
          manifestJson: args.manifestJson,
          split: args.split,
        });
        if (args.longAudioMode) manifest.longAudioMode = args.longAudioMode;
        if (!args.skipValidate) validateManifest(manifest);
        const encoder = makeEncoder(args.model, args.dim);
        try {
          const result = await extractAudio(manifest, encoder, args.outPrefix);
          console.error(`wrote ${result.written} rows to ${result.matrixPath}`);
          if (result.skipped.length > 0) {
            console.error(`skipped ${result.skipped.length} clips`);
            exitCode = 1;
          }
        } finally {
          await encoder.close();
        }
      },
    )
    .command(
      "extract-text",
      "Embed one rendered prompt per class label into an EMBT file",
      (y) =>
        y
          .option("labels", { type: "string", describe: "comma-separated class labels" })
          .option("labels-file", { type: "string", describe: "file with one label per line" })
          .option("pattern", { type: "string", default: "This is a sound of {}" })
          .option("case-mode", {
            choices: ["preserve", "capitalize_first", "lowercase"] as const,
            default: "preserve" as const,
          })
          .option("model", { type: "string", demandOption: true })
          .option("dim", { type: "number" })
          .option("out-prefix", { type: "string", demandOption: true }),
      async (args) => {
        let labels: string[];
        if (args.labelsFile) {
          labels = fs.readFileSync(args.labelsFile, "utf-8").split("\n")
            .map((s) => s.trim()).filter((s) => s.length > 0);
        } else if (args.labels) {
          labels = args.labels.split(",").filter((s) => s.length > 0);
        } else {
          throw new Error("pass --labels or --labels-file");
        }
        const encoder = makeEncoder(args.model, args.dim);
        try {
          const result = await extractText(
            labels, args.pattern, args.caseMode as CaseMode, encoder, args.outPrefix);
          console.error(`wrote ${result.written} rows to ${result.matrixPath}`);
        } finally {
          await encoder.close();
        }
      },
    )
    .demandCommand(1)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });

  try {
    await parser.parseAsync();
    return exitCode;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

const isDirectRun =
  process.argv[1] !== undefined && import.meta.url === `file://${process.argv[1]}`;
if (isDirectRun) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
