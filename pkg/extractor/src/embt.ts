/**
 * EMBT binary matrix files and their JSONL metadata sidecars.
 *
 * Layout (all integers little-endian):
 *   magic "EMBT" | version u32 = 1 | count u64 | dim u32 | dtype u8 = 0
 *   | 3 reserved zero bytes | count*dim float32 values, row-major
 *
 * The sidecar has one JSON object per row, aligned by line number:
 *   {"id": str, "labels": [str]?, "fold": int?} plus free extra fields.
 */

import * as fs from "node:fs";

export const MAGIC = "EMBT";
export const VERSION = 1;
export const HEADER_SIZE = 24;

export interface MetaRow {
  id: string;
  labels?: string[];
  fold?: number;
  [extra: string]: unknown;
}

export class EmbtFormatError extends Error {}

export function encodeEmbt(rows: Float32Array, count: number, dim: number): Buffer {
  if (rows.length !== count * dim) {
    throw new EmbtFormatError(
      `expected ${count * dim} values for ${count}x${dim}, got ${rows.length}`,
    );
  }
  if (count > 0 && dim < 1) {
    throw new EmbtFormatError(`dim must be >= 1, got ${dim}`);
  }
  const buf = Buffer.alloc(HEADER_SIZE + count * dim * 4);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeBigUInt64LE(BigInt(count), 8);
  buf.writeUInt32LE(dim, 16);
  buf.writeUInt8(0, 20); // dtype float32
  for (let i = 0; i < rows.length; i++) {
    buf.writeFloatLE(rows[i], HEADER_SIZE + i * 4);
  }
  return buf;
}

export function writeEmbt(path: string, rows: Float32Array, count: number, dim: number): void {
  fs.writeFileSync(path, encodeEmbt(rows, count, dim));
}

export interface EmbtMatrix {
  count: number;
  dim: number;
  rows: Float32Array;
}

export function decodeEmbt(buf: Buffer, context = "buffer"): EmbtMatrix {
  if (buf.length < HEADER_SIZE) {
    throw new EmbtFormatError(`${context}: shorter than the ${HEADER_SIZE}-byte header`);
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new EmbtFormatError(`${context}: bad magic`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new EmbtFormatError(`${context}: unsupported version ${version}`);
  }
  const count = Number(buf.readBigUInt64LE(8));
  const dim = buf.readUInt32LE(16);
  if (buf.readUInt8(20) !== 0) {
    throw new EmbtFormatError(`${context}: unsupported dtype`);
  }
  if (buf.readUInt8(21) !== 0 || buf.readUInt8(22) !== 0 || buf.readUInt8(23) !== 0) {
    throw new EmbtFormatError(`${context}: reserved bytes must be zero`);
  }
  if (dim < 1) {
    throw new EmbtFormatError(`${context}: dim must be >= 1`);
  }
  const expected = count * dim * 4;
  if (buf.length - HEADER_SIZE !== expected) {
    throw new EmbtFormatError(
      `${context}: payload is ${buf.length - HEADER_SIZE} bytes, header implies ${expected}`,
    );
  }
  const rows = new Float32Array(count * dim);
  for (let i = 0; i < rows.length; i++) {
    rows[i] = buf.readFloatLE(HEADER_SIZE + i * 4);
  }
  return { count, dim, rows };
}

export function readEmbt(path: string): EmbtMatrix {
  return decodeEmbt(fs.readFileSync(path), path);
}

export function writeMeta(path: string, rows: MetaRow[]): void {
  const lines = rows.map((row) => JSON.stringify(row)).join("\n");
  fs.writeFileSync(path, rows.length ? lines + "\n" : "", { encoding: "utf-8" });
}

export function readMeta(path: string): MetaRow[] {
  const text = fs.readFileSync(path, "utf-8");
  const rows: MetaRow[] = [];
  for (const line of text.split("\n")) {
    if (!line.trim()) continue;
    const obj = JSON.parse(line);
    if (typeof obj.id !== "string" || obj.id.length === 0) {
      throw new EmbtFormatError(`${path}: every line needs a non-empty string id`);
    }
    rows.push(obj as MetaRow);
  }
  return rows;
}
