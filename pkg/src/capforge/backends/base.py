"""Shared backend types and the client protocol."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..errors import DimensionMismatch

ROLES = ("system", "user", "assistant")


@dataclass
class ChatTurn:
    role: str
    text: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role: {self.role!r}")
        if self.role in ("user", "assistant") and not self.text:
            raise ValueError("user/assistant turns must have non-empty text")

    def to_dict(self) -> dict:
        return {"role": self.role, "text": self.text}


@dataclass
class LalmRequest:
    audio_uri: str
    history: list[ChatTurn] = field(default_factory=list)
    prompt: str = ""

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass
class LlmParams:
    max_tokens: int = 256
    temperature: float = 0.7
    seed: int = 0

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass
class Embedding:
    values: np.ndarray
    normalized: bool = False

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def cosine(self, other: "Embedding") -> float:
        if self.dim != other.dim:
            raise DimensionMismatch(f"{self.dim} != {other.dim}")
        return float(np.dot(self.values, other.values))


def l2_normalize(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("cannot normalize a zero vector")
    return vec / norm


class Backend(Protocol):
    """The three model services consumed by the pipeline."""

    def lalm_chat(self, req: LalmRequest) -> str: ...

    def llm_complete(self, system: str, prompt: str, params: LlmParams) -> str: ...

    def embed(self, inputs: list[tuple[str, str]]) -> list[Embedding]: ...
