"""Prompt templates that turn a class label into a text query string."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ContractError

CASE_MODES = ("preserve", "capitalize_first", "lowercase")

PLACEHOLDER = "{}"


@dataclass(frozen=True)
class PromptTemplate:
    """A text pattern with exactly one ``{}`` placeholder.

    Rendering substitutes the class label verbatim, then applies
    ``case_mode`` to the first character of the result.
    """

    pattern: str
    case_mode: str = "preserve"

    def __post_init__(self):
        if self.pattern.count(PLACEHOLDER) != 1:
            raise ContractError(
                f"pattern must contain exactly one {PLACEHOLDER!r} placeholder: {self.pattern!r}"
            )
        if self.case_mode not in CASE_MODES:
            raise ContractError(
                f"case_mode must be one of {CASE_MODES}, got {self.case_mode!r}"
            )

    def render(self, label: str) -> str:
        text = self.pattern.replace(PLACEHOLDER, label, 1)
        if not text or self.case_mode == "preserve":
            return text
        if self.case_mode == "capitalize_first":
            return text[0].upper() + text[1:]
        return text[0].lower() + text[1:]


def render_prompts(labels: list[str], template: PromptTemplate) -> list[str]:
    """Render one query string per label, order preserved."""
    if not labels:
        raise ContractError("labels must be non-empty")
    return [template.render(label) for label in labels]


# The stock prompt formulations used for the prompt ablation. The bare-label
# variant capitalizes the first letter; sentence prompts already start
# uppercase.
STANDARD_TEMPLATES = (
    PromptTemplate("{}", "capitalize_first"),
    PromptTemplate("I can hear {}"),
    PromptTemplate("This is an audio of {}"),
    PromptTemplate("This is {}"),
    PromptTemplate("This is a sound of {}"),
)

DEFAULT_TEMPLATE = STANDARD_TEMPLATES[4]
