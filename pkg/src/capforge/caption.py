"""Extraction preprocessing and LLM caption composition.

Removes sentences asserting the absence of speech/music, then renders the
structured captioning prompt and asks the text LLM for a candidate caption.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .backends.base import Backend, LlmParams
from .catalog import AudioItem, ExtractionRecord
from .errors import EmptyCaption, MissingDescription

DEFAULT_ABSENCE_PATTERNS = [
    r"\bno (speech|music|vocals?|singing|spoken language)\b.*\b(present|heard|detected|found|audible)\b",
    r"\bthere (is|are) no\b.*\b(speech|music|vocals?|singing)\b",
    r"\b(speech|music|vocals?|singing) (is|are) (not present|absent)\b",
    r"\bno spoken language or musical elements\b",
]

DEFAULT_ROLE_SETTING = (
    "I'm currently doing crowd-sourced labeling of audio data. I want you to "
    "act as a professional worker to write the final caption for the audio. "
    "The most important thing is following my instructions! Now, let's get started."
)

DEFAULT_INSTRUCTIONS = [
    "Do not mention the specific content of speech!",
    "Do not output the ground truth labels in the caption!",
]

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


@dataclass
class AbsenceRuleSet:
    patterns: list[str] = field(default_factory=lambda: list(DEFAULT_ABSENCE_PATTERNS))

    def __post_init__(self):
        self._compiled = [re.compile(p, re.IGNORECASE) for p in self.patterns]

    def matches(self, sentence: str) -> bool:
        return any(p.search(sentence) for p in self._compiled)


def strip_absence(text: str, rules: AbsenceRuleSet) -> str:
    """Drop sentences matching any absence pattern; normalize whitespace."""
    if not text.strip():
        return ""
    sentences = _SENTENCE_SPLIT.split(text.strip())
    kept = [s for s in sentences if not rules.matches(s)]
    return re.sub(r"\s+", " ", " ".join(kept)).strip()


@dataclass
class CaptionPrompt:
    description: str
    speech: str = ""
    music: str = ""
    labels: list[str] = field(default_factory=list)
    role_setting: str = DEFAULT_ROLE_SETTING
    instructions: list[str] = field(default_factory=lambda: list(DEFAULT_INSTRUCTIONS))
    word_limit: int = 50


def render_prompt(p: CaptionPrompt) -> str:
    """Render the structured captioning prompt (role setting, input details,
    instructions). Empty speech/music slots render as "None"."""
    if not p.description:
        raise MissingDescription("description slot must be non-empty")
    lines = [
        f"Role Setting: {p.role_setting}",
        "",
        "Input Details:",
        "1. Crowd-sourced workers:",
        f"  Description: {p.description}",
        f"  Speech: {p.speech or 'None'}",
        f"  Music: {p.music or 'None'}",
        f"2. The ground truth labels: {', '.join(p.labels)}",
        "",
        "Instructions:",
    ]
    lines += [f"- {instr}" for instr in p.instructions]
    lines.append(f"- Output your caption (within {p.word_limit} words):")
    return "\n".join(lines)


@dataclass
class CaptionConfig:
    absence_rules: AbsenceRuleSet = field(default_factory=AbsenceRuleSet)
    role_setting: str = DEFAULT_ROLE_SETTING
    instructions: list[str] = field(default_factory=lambda: list(DEFAULT_INSTRUCTIONS))
    word_limit: int = 50
    max_tokens: int = 256
    temperature: float = 0.7
    fine_grained_enabled: bool = True


def build_prompt(
    rec: ExtractionRecord, item: AudioItem, cfg: CaptionConfig
) -> CaptionPrompt:
    description = strip_absence(rec.overall, cfg.absence_rules)
    if not description:
        raise EmptyCaption(
            f"overall description for {item.audio_id} is empty after preprocessing"
        )
    if cfg.fine_grained_enabled:
        speech = strip_absence(rec.speech, cfg.absence_rules)
        music = strip_absence(rec.music, cfg.absence_rules)
    else:
        speech = ""
        music = ""
    return CaptionPrompt(
        description=description,
        speech=speech,
        music=music,
        labels=list(item.labels),
        role_setting=cfg.role_setting,
        instructions=list(cfg.instructions),
        word_limit=cfg.word_limit,
    )


def generate_candidate(
    rec: ExtractionRecord,
    item: AudioItem,
    cfg: CaptionConfig,
    backend: Backend,
    seed: int = 0,
) -> str:
    """One LLM call producing a candidate caption, trimmed of wrapping quotes."""
    prompt = render_prompt(build_prompt(rec, item, cfg))
    params = LlmParams(max_tokens=cfg.max_tokens, temperature=cfg.temperature, seed=seed)
    raw = backend.llm_complete("", prompt, params)
    caption = raw.strip().strip('"“”\'').strip()
    if not caption:
        raise EmptyCaption(f"LLM returned a blank caption for {item.audio_id}")
    return caption


def word_count(caption: str) -> int:
    return len(caption.split())
