export {
  decodeEmbt,
  encodeEmbt,
  EmbtFormatError,
  HEADER_SIZE,
  MAGIC,
  readEmbt,
  readMeta,
  VERSION,
  writeEmbt,
  writeMeta,
  type EmbtMatrix,
  type MetaRow,
} from "./embt.js";
export {
  CommandEncoder,
  makeEncoder,
  PrecomputedEncoder,
  StubEncoder,
  type AudioTextEncoder,
} from "./encoder.js";
export { extractAudio, extractText, type ExtractResult } from "./extract.js";
export {
  loadEsc50Manifest,
  loadFsd50kManifest,
  loadJsonManifest,
  loadUs8kManifest,
  ManifestError,
  validateManifest,
  type ClipEntry,
  type ExtractionManifest,
} from "./manifest.js";
export {
  renderPrompt,
  STANDARD_PROMPTS,
  validatePattern,
  type CaseMode,
  type PromptSpec,
} from "./prompts.js";
