/**
 * Encoders map audio files and text strings into embedding vectors.
 *
 * Three implementations are provided:
 *  - StubEncoder: deterministic pseudo-embeddings from content hashes. No
 *    audio understanding; exists so the extraction pipeline and file
 *    formats can be exercised without model weights.
 *  - PrecomputedEncoder: vectors looked up from a JSON table produced by
 *    an offline run of a real model.
 *  - CommandEncoder: a JSON-lines bridge to an external process that wraps
 *    a real model (send {"kind","id","path"|"text"}, receive {"vector"}).
 */

import { createHash } from "node:crypto";
import { spawn, type ChildProcessByStdio } from "node:child_process";
import * as fs from "node:fs";
import * as readline from "node:readline";
import type { Readable, Writable } from "node:stream";

export interface AudioTextEncoder {
  readonly name: string;
  readonly dim: number;
  embedAudio(absolutePath: string, id: string): Promise<Float32Array>;
  embedText(text: string): Promise<Float32Array>;
  close(): Promise<void>;
}

/** Expand a hash digest into `dim` floats in [-1, 1], rehashing counter-mode. */
function hashToVector(seed: Buffer, dim: number): Float32Array {
  const out = new Float32Array(dim);
  let block = 0;
  let offset = 0;
  let digest = Buffer.alloc(0);
  for (let i = 0; i < dim; i++) {
    if (offset + 4 > digest.length) {
      digest = createHash("sha256")
        .update(seed)
        .update(Buffer.from(String(block++)))
        .digest();
      offset = 0;
    }
    const raw = digest.readUInt32LE(offset);
    offset += 4;
    out[i] = (raw / 0xffffffff) * 2 - 1;
  }
  return out;
}

export class StubEncoder implements AudioTextEncoder {
  readonly name: string;
  readonly dim: number;

  constructor(dim = 16) {
    this.dim = dim;
    this.name = `stub-${dim}`;
  }

  async embedAudio(absolutePath: string): Promise<Float32Array> {
    const content = fs.readFileSync(absolutePath);
    return hashToVector(createHash("sha256").update("audio:").update(content).digest(), this.dim);
  }

  async embedText(text: string): Promise<Float32Array> {
    return hashToVector(createHash("sha256").update("text:" + text, "utf-8").digest(), this.dim);
  }

  async close(): Promise<void> {}
}

export class PrecomputedEncoder implements AudioTextEncoder {
  readonly name: string;
  readonly dim: number;
  private table: Record<string, number[]>;

  /** `tablePath` holds {"dim": n, "vectors": {key: [floats]}}; audio keys are clip ids. */
  constructor(tablePath: string) {
    const raw = JSON.parse(fs.readFileSync(tablePath, "utf-8"));
    this.table = raw.vectors;
    this.dim = raw.dim;
    this.name = raw.model ?? `precomputed:${tablePath}`;
  }

  private lookup(key: string): Float32Array {
    const vec = this.table[key];
    if (!vec) throw new Error(`no precomputed vector for ${key}`);
    if (vec.length !== this.dim) {
      throw new Error(`vector for ${key} has length ${vec.length}, expected ${this.dim}`);
    }
    return Float32Array.from(vec);
  }

  async embedAudio(_absolutePath: string, id: string): Promise<Float32Array> {
    return this.lookup(id);
  }

  async embedText(text: string): Promise<Float32Array> {
    return this.lookup(text);
  }

  async close(): Promise<void> {}
}

interface CommandRequest {
  kind: "audio" | "text";
  id?: string;
  path?: string;
  text?: string;
}

export class CommandEncoder implements AudioTextEncoder {
  readonly name: string;
  readonly dim: number;
  private child: ChildProcessByStdio<Writable, Readable, null> | null = null;
  private lines: AsyncIterator<string> | null = null;
  private queue: Promise<unknown> = Promise.resolve();
  private argv: string[];

  constructor(command: string, dim: number) {
    this.argv = command.split(" ").filter((s) => s.length > 0);
    if (this.argv.length === 0) throw new Error("empty encoder command");
    this.dim = dim;
    this.name = `command:${command}`;
  }

  private ensureChild(): void {
    if (this.child) return;
    this.child = spawn(this.argv[0], this.argv.slice(1), {
      stdio: ["pipe", "pipe", "inherit"],
    });
    const rl = readline.createInterface({ input: this.child.stdout });
    this.lines = rl[Symbol.asyncIterator]();
  }

  private request(req: CommandRequest): Promise<Float32Array> {
    // serialize requests: one JSON line out, one JSON line back
    const run = async (): Promise<Float32Array> => {
      this.ensureChild();
      this.child!.stdin.write(JSON.stringify(req) + "\n");
      const next = await this.lines!.next();
      if (next.done) {
        throw new Error(`encoder command exited before answering ${JSON.stringify(req)}`);
      }
      const reply = JSON.parse(next.value);
      if (!Array.isArray(reply.vector) || reply.vector.length !== this.dim) {
        throw new Error(`encoder command returned a bad vector for ${JSON.stringify(req)}`);
      }
      return Float32Array.from(reply.vector as number[]);
    };
    const result = this.queue.then(run, run);
    this.queue = result.catch(() => undefined);
    return result;
  }

  embedAudio(absolutePath: string, id: string): Promise<Float32Array> {
    return this.request({ kind: "audio", id, path: absolutePath });
  }

  embedText(text: string): Promise<Float32Array> {
    return this.request({ kind: "text", text });
  }

  async close(): Promise<void> {
    if (this.child) {
      this.child.stdin.end();
      this.child = null;
      this.lines = null;
    }
  }
}

/**
 * Parse an encoder flag: "stub", "stub:<dim>", "precomputed:<table.json>",
 * or "command:<argv...>" (requires --dim).
 */
export function makeEncoder(model: string, dim?: number): AudioTextEncoder {
  if (model === "stub") return new StubEncoder(dim ?? 16);
  if (model.startsWith("stub:")) return new StubEncoder(parseInt(model.slice(5), 10));
  if (model.startsWith("precomputed:")) return new PrecomputedEncoder(model.slice(12));
  if (model.startsWith("command:")) {
    if (!dim) throw new Error("command encoders need an explicit --dim");
    return new CommandEncoder(model.slice(8), dim);
  }
  throw new Error(`unknown model ${model}; use stub[:dim], precomputed:FILE or command:CMD`);
}
