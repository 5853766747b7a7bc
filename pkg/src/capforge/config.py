"""Pipeline configuration: loading, validation, and hashing.

The config hash covers every output-affecting field, so any change to them
invalidates existing checkpoints. Execution knobs (concurrency, shard_size)
are excluded: they control scheduling and file layout, never record content.
TOML is the primary format (multiline prompt templates); JSON is accepted
as a fallback.
"""

from __future__ import annotations

import hashlib
import json

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path

from .caption import (
    DEFAULT_ABSENCE_PATTERNS,
    DEFAULT_INSTRUCTIONS,
    DEFAULT_ROLE_SETTING,
    AbsenceRuleSet,
    CaptionConfig,
)
from .extract import DEFAULT_PROMPTS, ChainConfig
from .refine import RefineConfig


@dataclass
class PipelineConfig:
    chain: ChainConfig = field(default_factory=ChainConfig)
    caption: CaptionConfig = field(default_factory=CaptionConfig)
    refine: RefineConfig = field(default_factory=RefineConfig)
    refine_enabled: bool = True
    concurrency: int = 4
    seed: int = 0
    shard_size: int = 1000

    def __post_init__(self):
        if self.concurrency < 1:
            raise ValueError("concurrency must be >= 1")
        if self.shard_size < 1:
            raise ValueError("shard_size must be >= 1")

    def to_dict(self) -> dict:
        return {
            "chain": {
                "prompts": dict(self.chain.prompts),
                "chaining_enabled": self.chain.chaining_enabled,
            },
            "caption": {
                "absence_patterns": list(self.caption.absence_rules.patterns),
                "role_setting": self.caption.role_setting,
                "instructions": list(self.caption.instructions),
                "word_limit": self.caption.word_limit,
                "max_tokens": self.caption.max_tokens,
                "temperature": self.caption.temperature,
                "fine_grained_enabled": self.caption.fine_grained_enabled,
            },
            "refine": {
                "max_attempts": self.refine.max_attempts,
                "label_template": self.refine.label_template,
            },
            "refine_enabled": self.refine_enabled,
            "concurrency": self.concurrency,
            "seed": self.seed,
            "shard_size": self.shard_size,
        }

    def config_hash(self) -> str:
        semantic = self.to_dict()
        # concurrency and shard_size only affect scheduling and file layout
        del semantic["concurrency"]
        del semantic["shard_size"]
        canonical = json.dumps(semantic, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def config_from_dict(data: dict) -> PipelineConfig:
    chain_data = data.get("chain", {})
    prompts = dict(DEFAULT_PROMPTS)
    prompts.update(chain_data.get("prompts", {}))
    chain = ChainConfig(
        prompts=prompts,
        chaining_enabled=chain_data.get("chaining_enabled", True),
    )

    caption_data = data.get("caption", {})
    caption = CaptionConfig(
        absence_rules=AbsenceRuleSet(
            patterns=caption_data.get("absence_patterns", list(DEFAULT_ABSENCE_PATTERNS))
        ),
        role_setting=caption_data.get("role_setting", DEFAULT_ROLE_SETTING),
        instructions=caption_data.get("instructions", list(DEFAULT_INSTRUCTIONS)),
        word_limit=caption_data.get("word_limit", 50),
        max_tokens=caption_data.get("max_tokens", 256),
        temperature=caption_data.get("temperature", 0.7),
        fine_grained_enabled=caption_data.get("fine_grained_enabled", True),
    )

    refine_data = data.get("refine", {})
    refine = RefineConfig(
        max_attempts=refine_data.get("max_attempts", 3),
        label_template=refine_data.get("label_template", "{labels}"),
    )

    return PipelineConfig(
        chain=chain,
        caption=caption,
        refine=refine,
        refine_enabled=data.get("refine_enabled", True),
        concurrency=data.get("concurrency", 4),
        seed=data.get("seed", 0),
        shard_size=data.get("shard_size", 1000),
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".json":
        data = json.loads(raw)
    else:
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError:
            data = json.loads(raw)
    return config_from_dict(data)
