"""Instruction templates, QA synthesis, and sample validation.

The default template set has 50 instructions addressed by id; image prompts
for fine-tuning share the same id space. Rendered instructions plus
knowledge-store facts are sent to an LLM client, and every returned sample
passes through the validation rules before it can reach a manifest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union

from .errors import MissingSlot, ValidationExhausted
from .ingest.records import MediaRecord
from .knowledge import AttributePath, KnowledgeStore, format_attribute_path

_SLOT_RE = re.compile(r"\{(\w+)\}")

IMAGE_TOKEN = "<image>"  # literal placeholder the trainer substitutes

SYSTEM_TEXT = (
    "You are a marine biology assistant. Answer the instruction using the "
    "supplied facts; do not invent information that is not supported by them."
)


@dataclass(frozen=True)
class InstructionTemplate:
    template_id: int
    text: str
    tags: tuple[str, ...] = ()

    @property
    def slots(self) -> tuple[str, ...]:
        seen = []
        for name in _SLOT_RE.findall(self.text):
            if name not in seen:
                seen.append(name)
        return tuple(seen)


@dataclass(frozen=True)
class ValidationResult:
    passed: bool
    reasons: tuple[str, ...] = ()


@dataclass(frozen=True)
class InstructionSample:
    record_id: str
    instruction: str
    response: str
    generator: str  # llm | template_fact
    template_id: int
    validation: ValidationResult


def render_instruction(template: InstructionTemplate, slots: dict[str, str]) -> str:
    """Substitute every slot marker verbatim; unknown slots are an error."""
    rendered = template.text
    for name in template.slots:
        if name not in slots:
            raise MissingSlot(name)
        rendered = rendered.replace("{" + name + "}", slots[name])
    return rendered


def load_templates(path: Union[str, Path]) -> list[InstructionTemplate]:
    """Load a template config: `id<TAB>tags<TAB>text` per line, # comments."""
    templates = []
    seen_ids = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        template_id_str, tags_str, text = line.rstrip("\n").split("\t", 2)
        template_id = int(template_id_str)
        if template_id in seen_ids:
            raise ValueError(f"duplicate template id {template_id}")
        seen_ids.add(template_id)
        tags = tuple(t.strip() for t in tags_str.split(",") if t.strip())
        templates.append(InstructionTemplate(template_id=template_id, text=text, tags=tags))
    return templates


def default_instructions_path() -> Path:
    return Path(str(resources.files("seacorpus.data") / "instructions.tsv"))


def default_prompts_path() -> Path:
    return Path(str(resources.files("seacorpus.data") / "finetune_prompts.tsv"))


def load_default_instructions() -> list[InstructionTemplate]:
    return load_templates(default_instructions_path())


def load_default_prompts() -> list[InstructionTemplate]:
    return load_templates(default_prompts_path())


# --- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class ValidationRules:
    min_words: int = 10
    max_words: int = 400
    category_names: tuple[str, ...] = ()
    name_exempt: bool = False


def validate_sample(sample: InstructionSample, rules: ValidationRules) -> ValidationResult:
    """Default quality gate; returns failure reasons instead of raising."""
    reasons = []
    response = sample.response.strip()
    if not response:
        reasons.append("EmptyResponse")
    else:
        words = len(response.split())
        if words < rules.min_words:
            reasons.append("TooShort")
        elif words > rules.max_words:
            reasons.append("TooLong")
        if rules.category_names and not rules.name_exempt:
            lowered = response.lower()
            if not any(name.lower() in lowered for name in rules.category_names if name):
                reasons.append("MissingCategoryMention")
    if _SLOT_RE.search(sample.instruction) or _SLOT_RE.search(response):
        reasons.append("UnresolvedSlot")
    return ValidationResult(passed=not reasons, reasons=tuple(reasons))


def rules_for_record(
    store: KnowledgeStore,
    record: MediaRecord,
    template: InstructionTemplate,
    *,
    min_words: int = 10,
    max_words: int = 400,
) -> ValidationRules:
    names = []
    if record.category_annotation:
        names.append(record.category_annotation)
        taxon = store.taxon(record.category_annotation)
        if taxon:
            names.append(taxon.scientific_name)
            names.extend(taxon.common_names)
    return ValidationRules(
        min_words=min_words,
        max_words=max_words,
        category_names=tuple(dict.fromkeys(names)),
        name_exempt="name_exempt" in template.tags,
    )


# --- generation ---------------------------------------------------------------


class LlmClient(Protocol):
    def complete(self, system: str, user: str) -> str:
        """Return completion text for a system+user prompt pair."""
        ...


def serialize_context(context: dict[AttributePath, list[str]]) -> str:
    lines = ["Known facts:"]
    for key in sorted(context):
        for text in context[key]:
            lines.append(f"- {format_attribute_path(key)}: {text}")
    return "\n".join(lines)


def generate_qa(
    record: MediaRecord,
    template: InstructionTemplate,
    llm: LlmClient,
    context: dict[AttributePath, list[str]],
    rules: ValidationRules,
    *,
    attempts: int = 3,
) -> InstructionSample:
    """Synthesize one instruction-following sample grounded in `context`.

    On validation failure the prompt is retried with a repair note, up to
    `attempts` times; if every attempt fails, ValidationExhausted is raised
    carrying the last (failed) sample so callers can store it for audit.
    """
    if not record.category_annotation:
        raise ValueError("record has no category annotation")
    slots = {"category": record.category_annotation, "image": IMAGE_TOKEN}
    instruction = render_instruction(template, slots)
    user = instruction
    if context:
        user = instruction + "\n\n" + serialize_context(context)

    sample = None
    prompt = user
    for _ in range(attempts):
        response = llm.complete(SYSTEM_TEXT, prompt)
        sample = InstructionSample(
            record_id=record.record_id,
            instruction=instruction,
            response=response.strip(),
            generator="llm",
            template_id=template.template_id,
            validation=ValidationResult(passed=False),
        )
        result = validate_sample(sample, rules)
        sample = replace(sample, validation=result)
        if result.passed:
            return sample
        prompt = (
            user
            + "\n\nThe previous answer was rejected ("
            + ", ".join(result.reasons)
            + "). Provide a corrected answer."
        )
    raise ValidationExhausted(sample)


def generate_template_sample(
    record: MediaRecord,
    template: InstructionTemplate,
    context: dict[AttributePath, list[str]],
    rules: ValidationRules,
) -> InstructionSample:
    """Template-based conversion: the response is composed directly from
    stored facts, no model involved."""
    if not record.category_annotation:
        raise ValueError("record has no category annotation")
    slots = {"category": record.category_annotation, "image": IMAGE_TOKEN}
    instruction = render_instruction(template, slots)
    sentences = [f"{record.category_annotation}:"]
    for key in sorted(context):
        for text in context[key]:
            text = text.strip()
            sentences.append(text if text.endswith((".", "!", "?")) else text + ".")
    sample = InstructionSample(
        record_id=record.record_id,
        instruction=instruction,
        response=" ".join(sentences),
        generator="template_fact",
        template_id=template.template_id,
        validation=ValidationResult(passed=False),
    )
    return replace(sample, validation=validate_sample(sample, rules))


def emit_finetune_prompts(
    category: str, prompts: Optional[Sequence[InstructionTemplate]] = None
) -> list[str]:
    """Render the configured stage-2 prompt set for one category."""
    if not category:
        raise ValueError("category must be non-empty")
    if prompts is None:
        prompts = load_default_prompts()
    slots = {"category": category, "image": IMAGE_TOKEN}
    return [render_instruction(p, slots) for p in prompts]
