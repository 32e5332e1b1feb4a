/** Prompt rendering, mirroring the consumer library's template semantics. */

export type CaseMode = "preserve" | "capitalize_first" | "lowercase";

export const PLACEHOLDER = "{}";

export function validatePattern(pattern: string): void {
  const count = pattern.split(PLACEHOLDER).length - 1;
  if (count !== 1) {
    throw new Error(`pattern must contain exactly one ${PLACEHOLDER} placeholder: ${pattern}`);
  }
}

/** Substitute the label verbatim, then apply the case mode to the first character. */
export function renderPrompt(pattern: string, label: string, caseMode: CaseMode = "preserve"): string {
  validatePattern(pattern);
  const text = pattern.replace(PLACEHOLDER, label);
  if (text.length === 0 || caseMode === "preserve") return text;
  if (caseMode === "capitalize_first") return text[0].toUpperCase() + text.slice(1);
  return text[0].toLowerCase() + text.slice(1);
}

export interface PromptSpec {
  pattern: string;
  caseMode: CaseMode;
}

/** The stock prompt formulations swept in the ablation. */
export const STANDARD_PROMPTS: PromptSpec[] = [
  { pattern: "{}", caseMode: "capitalize_first" },
  { pattern: "I can hear {}", caseMode: "preserve" },
  { pattern: "This is an audio of {}", caseMode: "preserve" },
  { pattern: "This is {}", caseMode: "preserve" },
  { pattern: "This is a sound of {}", caseMode: "preserve" },
];
