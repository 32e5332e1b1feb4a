import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { readEmbt, readMeta } from "../src/embt.js";
import { CommandEncoder, makeEncoder, StubEncoder } from "../src/encoder.js";
import { extractAudio, extractText } from "../src/extract.js";
import type { ExtractionManifest } from "../src/manifest.js";

let dir: string;
beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "extract-"));
});
afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function toyManifest(n = 3): ExtractionManifest {
  const clips = [];
  for (let i = 0; i < n; i++) {
    const rel = `clips/clip${i}.wav`;
    fs.mkdirSync(path.join(dir, "clips"), { recursive: true });
    fs.writeFileSync(path.join(dir, rel), `payload ${i}`);
    clips.push({ id: `clip${i}`, relativePath: rel, labels: [`class${i % 2}`], fold: i % 2 });
  }
  return { datasetRoot: dir, dataset: "json", clips, model: "stub-8" };
}

describe("StubEncoder", () => {
  it("is deterministic and content-sensitive", async () => {
    const enc = new StubEncoder(8);
    fs.writeFileSync(path.join(dir, "a.wav"), "aaa");
    fs.writeFileSync(path.join(dir, "b.wav"), "bbb");
    const a1 = await enc.embedAudio(path.join(dir, "a.wav"), "a");
    const a2 = await enc.embedAudio(path.join(dir, "a.wav"), "a");
    const b = await enc.embedAudio(path.join(dir, "b.wav"), "b");
    expect(Array.from(a1)).toEqual(Array.from(a2));
    expect(Array.from(a1)).not.toEqual(Array.from(b));
    expect(a1).toHaveLength(8);
  });

  it("separates text from audio hashing", async () => {
    const enc = new StubEncoder(8);
    fs.writeFileSync(path.join(dir, "t.wav"), "same");
    const audio = await enc.embedAudio(path.join(dir, "t.wav"), "t");
    const text = await enc.embedText("same");
    expect(Array.from(audio)).not.toEqual(Array.from(text));
  });

  it("parses model flags", () => {
    expect(makeEncoder("stub").dim).toBe(16);
    expect(makeEncoder("stub:32").dim).toBe(32);
    expect(() => makeEncoder("hal9000")).toThrow(/unknown model/);
  });
});

describe("extractAudio", () => {
  it("writes one row per clip in manifest order", async () => {
    const manifest = toyManifest(3);
    const result = await extractAudio(manifest, new StubEncoder(8), path.join(dir, "out"));
    expect(result.written).toBe(3);
    expect(result.skipped).toEqual([]);
    const matrix = readEmbt(path.join(dir, "out.embt"));
    expect(matrix.count).toBe(3);
    expect(matrix.dim).toBe(8);
    const meta = readMeta(path.join(dir, "out.jsonl"));
    expect(meta.map((m) => m.id)).toEqual(["clip0", "clip1", "clip2"]);
    expect(meta[1]).toEqual({ id: "clip1", labels: ["class1"], fold: 1 });
  });

  it("re-runs byte-identically", async () => {
    const manifest = toyManifest(4);
    await extractAudio(manifest, new StubEncoder(8), path.join(dir, "one"));
    await extractAudio(manifest, new StubEncoder(8), path.join(dir, "two"));
    expect(fs.readFileSync(path.join(dir, "one.embt"))).toEqual(
      fs.readFileSync(path.join(dir, "two.embt")),
    );
  });

  it("skips unreadable clips and logs them", async () => {
    const manifest = toyManifest(3);
    fs.rmSync(path.join(dir, "clips/clip1.wav"));
    const logged: string[] = [];
    const result = await extractAudio(
      manifest, new StubEncoder(8), path.join(dir, "out"), (m) => logged.push(m));
    expect(result.written).toBe(2);
    expect(result.skipped).toEqual(["clip1"]);
    expect(logged[0]).toContain("clip1");
    const meta = readMeta(path.join(dir, "out.jsonl"));
    expect(meta.map((m) => m.id)).toEqual(["clip0", "clip2"]);
  });

  it("records provenance next to the artifact", async () => {
    const manifest = toyManifest(2);
    manifest.longAudioMode = "feature-fusion";
    await extractAudio(manifest, new StubEncoder(8), path.join(dir, "out"));
    const prov = JSON.parse(fs.readFileSync(path.join(dir, "out.manifest.json"), "utf-8"));
    expect(prov.model).toBe("stub-8");
    expect(prov.longAudioMode).toBe("feature-fusion");
    expect(prov.written).toBe(2);
  });
});

describe("extractText", () => {
  it("keys rows by raw label and stores the rendered prompt", async () => {
    await extractText(
      ["dog", "car horn"], "This is a sound of {}", "preserve",
      new StubEncoder(8), path.join(dir, "text"));
    const meta = readMeta(path.join(dir, "text.jsonl"));
    expect(meta.map((m) => m.id)).toEqual(["dog", "car horn"]);
    expect(meta[0].prompt).toBe("This is a sound of dog");
    const matrix = readEmbt(path.join(dir, "text.embt"));
    expect(matrix.count).toBe(2);
  });

  it("case variants produce different embeddings", async () => {
    const enc = new StubEncoder(8);
    await extractText(["dog"], "{} sound", "capitalize_first", enc, path.join(dir, "upper"));
    await extractText(["dog"], "{} sound", "lowercase", enc, path.join(dir, "lower"));
    const upper = readEmbt(path.join(dir, "upper.embt"));
    const lower = readEmbt(path.join(dir, "lower.embt"));
    expect(Array.from(upper.rows)).not.toEqual(Array.from(lower.rows));
  });

  it("identical label lists produce identical files", async () => {
    const enc = new StubEncoder(8);
    await extractText(["a", "b"], "This is {}", "preserve", enc, path.join(dir, "t1"));
    await extractText(["a", "b"], "This is {}", "preserve", enc, path.join(dir, "t2"));
    expect(fs.readFileSync(path.join(dir, "t1.embt"))).toEqual(
      fs.readFileSync(path.join(dir, "t2.embt")));
  });
});

describe("CommandEncoder", () => {
  it("bridges to an external process over JSON lines", async () => {
    const bridge = path.join(dir, "bridge.mjs");
    fs.writeFileSync(
      bridge,
      `
import * as readline from "node:readline";
const rl = readline.createInterface({ input: process.stdin });
rl.on("line", (line) => {
  const req = JSON.parse(line);
  const key = req.kind === "text" ? req.text : req.id;
  const vector = Array.from({ length: 4 }, (_, i) => (key.length + i) / 10);
  process.stdout.write(JSON.stringify({ vector }) + "\\n");
});
`,
    );
    const enc = new CommandEncoder(`node ${bridge}`, 4);
    try {
      const v1 = await enc.embedText("dog");
      const v2 = await enc.embedAudio("/tmp/file.wav", "someclip");
      const expected = [0.3, 0.4, 0.5, 0.6];
      v1.forEach((v, i) => expect(v).toBeCloseTo(expected[i], 6));
      expect(v2).toHaveLength(4);
    } finally {
      await enc.close();
    }
  });
});
