/**
 * Batch extraction: embed every manifest clip (or rendered prompt) and write
 * EMBT + JSONL files in manifest order. Vectors are written as the encoder
 * produced them; the consumer normalizes on load.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { writeEmbt, writeMeta, type MetaRow } from "./embt.js";
import type { AudioTextEncoder } from "./encoder.js";
import type { ExtractionManifest } from "./manifest.js";
import { renderPrompt, type CaseMode } from "./prompts.js";

export interface ExtractResult {
  written: number;
  skipped: string[];
  matrixPath: string;
  metaPath: string;
}

function checkVector(vec: Float32Array, dim: number, what: string): void {
  if (vec.length !== dim) {
    throw new Error(`${what}: encoder returned length ${vec.length}, expected ${dim}`);
  }
  let norm = 0;
  for (const v of vec) {
    if (!Number.isFinite(v)) throw new Error(`${what}: non-finite embedding component`);
    norm += v * v;
  }
  if (norm === 0) throw new Error(`${what}: zero embedding`);
}

function writeRows(
  outPrefix: string,
  vectors: Float32Array[],
  meta: MetaRow[],
  dim: number,
): { matrixPath: string; metaPath: string } {
  const flat = new Float32Array(vectors.length * dim);
  vectors.forEach((vec, i) => flat.set(vec, i * dim));
  const matrixPath = `${outPrefix}.embt`;
  const metaPath = `${outPrefix}.jsonl`;
  writeEmbt(matrixPath, flat, vectors.length, dim);
  writeMeta(metaPath, meta);
  return { matrixPath, metaPath };
}

function writeProvenance(outPrefix: string, record: Record<string, unknown>): void {
  fs.writeFileSync(`${outPrefix}.manifest.json`, JSON.stringify(record, null, 2) + "\n");
}

/** Embed every clip; unreadable clips are skipped and logged, order preserved. */
export async function extractAudio(
  manifest: ExtractionManifest,
  encoder: AudioTextEncoder,
  outPrefix: string,
  log: (msg: string) => void = (msg) => console.error(msg),
): Promise<ExtractResult> {
  const vectors: Float32Array[] = [];
  const meta: MetaRow[] = [];
  const skipped: string[] = [];
  for (const clip of manifest.clips) {
    const full = path.join(manifest.datasetRoot, clip.relativePath);
    try {
      const vec = await encoder.embedAudio(full, clip.id);
      checkVector(vec, encoder.dim, clip.id);
      vectors.push(vec);
      const row: MetaRow = { id: clip.id };
      if (clip.labels.length > 0) row.labels = clip.labels;
      if (clip.fold !== undefined) row.fold = clip.fold;
      meta.push(row);
    } catch (err) {
      skipped.push(clip.id);
      log(`skip ${clip.id}: ${(err as Error).message}`);
    }
  }
  const { matrixPath, metaPath } = writeRows(outPrefix, vectors, meta, encoder.dim);
  writeProvenance(outPrefix, {
    kind: "audio",
    dataset: manifest.dataset,
    datasetRoot: manifest.datasetRoot,
    model: encoder.name,
    longAudioMode: manifest.longAudioMode ?? null,
    clips: manifest.clips.length,
    written: vectors.length,
    skipped,
  });
  return { written: vectors.length, skipped, matrixPath, metaPath };
}

/** Embed one rendered prompt per label; row ids are the raw labels. */
export async function extractText(
  labels: string[],
  pattern: string,
  caseMode: CaseMode,
  encoder: AudioTextEncoder,
  outPrefix: string,
): Promise<ExtractResult> {
  if (labels.length === 0) throw new Error("no labels to embed");
  const vectors: Float32Array[] = [];
  const meta: MetaRow[] = [];
  for (const label of labels) {
    const prompt = renderPrompt(pattern, label, caseMode);
    const vec = await encoder.embedText(prompt);
    checkVector(vec, encoder.dim, label);
    vectors.push(vec);
    meta.push({ id: label, prompt });
  }
  const { matrixPath, metaPath } = writeRows(outPrefix, vectors, meta, encoder.dim);
  writeProvenance(outPrefix, {
    kind: "text",
    model: encoder.name,
    promptPattern: pattern,
    caseMode,
    labels: labels.length,
    written: vectors.length,
    skipped: [],
  });
  return { written: vectors.length, skipped: [], matrixPath, metaPath };
}
