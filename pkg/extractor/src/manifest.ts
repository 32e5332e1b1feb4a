/**
 * Extraction manifests: which clips to embed, with labels and folds taken
 * from each benchmark's published metadata.
 *
 * Published fold numbers are 1-based for ESC-50 and UrbanSound8K; they are
 * normalized to 0-based here so that every fold id is < the fold count.
 * The multi-label benchmark uses the fixed-split convention fold 0 = train
 * pool, fold 1 = test.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import Papa from "papaparse";

import type { CaseMode } from "./prompts.js";

export interface ClipEntry {
  id: string;
  /** Path of the audio file, relative to the dataset root. */
  relativePath: string;
  labels: string[];
  fold?: number;
}

export interface ExtractionManifest {
  datasetRoot: string;
  dataset: string;
  clips: ClipEntry[];
  model: string;
  promptPattern?: string;
  caseMode?: CaseMode;
  /** Verbatim long-audio handling mode of the encoder, for provenance. */
  longAudioMode?: string;
}

export class ManifestError extends Error {}

function parseCsv(csvPath: string): Record<string, string>[] {
  const text = fs.readFileSync(csvPath, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new ManifestError(`${csvPath}: ${first.message} (row ${first.row})`);
  }
  return parsed.data;
}

function requireFields(row: Record<string, string>, fields: string[], csvPath: string): void {
  for (const f of fields) {
    if (row[f] === undefined || row[f] === "") {
      throw new ManifestError(`${csvPath}: missing field '${f}' in row ${JSON.stringify(row)}`);
    }
  }
}

/** ESC-50: meta/esc50.csv with audio under audio/. Folds 1-5 become 0-4. */
export function loadEsc50Manifest(root: string, model: string): ExtractionManifest {
  const csvPath = path.join(root, "meta", "esc50.csv");
  const clips = parseCsv(csvPath).map((row): ClipEntry => {
    requireFields(row, ["filename", "fold", "category"], csvPath);
    return {
      id: row.filename,
      relativePath: path.join("audio", row.filename),
      labels: [row.category],
      fold: parseInt(row.fold, 10) - 1,
    };
  });
  return { datasetRoot: root, dataset: "esc50", clips, model };
}

/** UrbanSound8K: metadata/UrbanSound8K.csv, audio under audio/fold<n>/. */
export function loadUs8kManifest(root: string, model: string): ExtractionManifest {
  const csvPath = path.join(root, "metadata", "UrbanSound8K.csv");
  const clips = parseCsv(csvPath).map((row): ClipEntry => {
    requireFields(row, ["slice_file_name", "fold", "class"], csvPath);
    return {
      id: row.slice_file_name,
      relativePath: path.join("audio", `fold${row.fold}`, row.slice_file_name),
      labels: [row.class],
      fold: parseInt(row.fold, 10) - 1,
    };
  });
  return { datasetRoot: root, dataset: "us8k", clips, model };
}

/**
 * FSD50K: FSD50K.ground_truth/{dev,eval}.csv with comma-separated labels.
 * Dev clips land in fold 0 (train pool), eval clips in fold 1 (test).
 */
export function loadFsd50kManifest(
  root: string,
  model: string,
  split: "dev" | "eval" | "both" = "both",
): ExtractionManifest {
  const clips: ClipEntry[] = [];
  const parts: Array<["dev" | "eval", number]> =
    split === "both" ? [["dev", 0], ["eval", 1]] : [[split, split === "dev" ? 0 : 1]];
  for (const [name, fold] of parts) {
    const csvPath = path.join(root, "FSD50K.ground_truth", `${name}.csv`);
    for (const row of parseCsv(csvPath)) {
      requireFields(row, ["fname", "labels"], csvPath);
      clips.push({
        id: row.fname,
        relativePath: path.join(`FSD50K.${name}_audio`, `${row.fname}.wav`),
        labels: row.labels.split(","),
        fold,
      });
    }
  }
  return { datasetRoot: root, dataset: "fsd50k", clips, model };
}

/** Free-form manifest: a JSON file with {clips: [{id, relativePath, labels, fold?}]}. */
export function loadJsonManifest(jsonPath: string, root: string, model: string): ExtractionManifest {
  const raw = JSON.parse(fs.readFileSync(jsonPath, "utf-8"));
  if (!Array.isArray(raw.clips)) {
    throw new ManifestError(`${jsonPath}: expected a top-level "clips" array`);
  }
  const clips = raw.clips.map((c: ClipEntry, i: number): ClipEntry => {
    if (!c.id || !c.relativePath) {
      throw new ManifestError(`${jsonPath}: clip ${i} needs id and relativePath`);
    }
    return { id: c.id, relativePath: c.relativePath, labels: c.labels ?? [], fold: c.fold };
  });
  return { datasetRoot: root, dataset: "json", clips, model };
}

export const manifestLoaders = {
  esc50: loadEsc50Manifest,
  us8k: loadUs8kManifest,
} as const;

/** Check the manifest invariants: unique ids, existing files, sane folds. */
export function validateManifest(manifest: ExtractionManifest): void {
  const seen = new Set<string>();
  let maxFold = -1;
  for (const clip of manifest.clips) {
    if (seen.has(clip.id)) {
      throw new ManifestError(`duplicate clip id ${clip.id}`);
    }
    seen.add(clip.id);
    if (clip.fold !== undefined) {
      if (!Number.isInteger(clip.fold) || clip.fold < 0) {
        throw new ManifestError(`clip ${clip.id}: fold must be a non-negative integer`);
      }
      maxFold = Math.max(maxFold, clip.fold);
    }
    const full = path.join(manifest.datasetRoot, clip.relativePath);
    if (!fs.existsSync(full)) {
      throw new ManifestError(`clip ${clip.id}: missing audio file ${full}`);
    }
  }
  void maxFold;
}
