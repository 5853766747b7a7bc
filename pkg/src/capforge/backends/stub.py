"""Deterministic in-process stub backend for desk-scale testing.

Every response is a pure function of (request, seed): replaying a request
yields an identical response. Embeddings with prescribed cosines can be
planted for score-sensitive tests; all other embeddings are seeded-hash
unit vectors derived from the input string alone (no media needed).
"""

from __future__ import annotations

import hashlib
import random
import re

import numpy as np

from .base import Embedding, LalmRequest, LlmParams, l2_normalize

_NOUNS = [
    "water", "engine", "crowd", "wind", "bird", "bell", "rain", "footsteps",
    "traffic", "machinery", "thunder", "applause", "waves", "insects", "fire",
]
_ADJS = [
    "steady", "distant", "rhythmic", "loud", "gentle", "sharp", "low",
    "continuous", "faint", "bright",
]
_OPENERS = [
    "The audio features",
    "This recording captures",
    "The clip presents",
    "Heard throughout are",
    "The soundscape contains",
]
_FILLER_WORDS = frozenset(
    "a an the of in on at to and or with is are was were this that there "
    "no not none it its as by for from be been".split()
)

_DESCRIPTION_RE = re.compile(r"Description:\s*(.*)")


def _digest(*parts: str) -> int:
    h = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


class PlantedCosines:
    """Constructs unit vectors realizing prescribed pairwise cosines.

    Plants are hub-anchored: each (hub, satellite, cosine) triple places the
    hub on its own axis and the satellite at the prescribed angle in the
    plane spanned by the hub axis and a fresh axis, so every planted cosine
    is exact. A satellite may be anchored to only one hub.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self._hubs: dict[tuple[str, str], int] = {}
        self._satellites: dict[tuple[str, str], tuple[int, float, int]] = {}
        self._next_axis = 0

    def _alloc_axis(self) -> int:
        if self._next_axis >= self.dim:
            raise ValueError(f"planted values exceed embedding dimension {self.dim}")
        axis = self._next_axis
        self._next_axis += 1
        return axis

    def plant(
        self,
        a: tuple[str, str],
        b: tuple[str, str],
        cosine: float,
    ) -> None:
        if not -1.0 <= cosine <= 1.0:
            raise ValueError("cosine must be in [-1, 1]")
        hub, sat = (b, a) if b in self._hubs and a not in self._hubs else (a, b)
        if hub in self._satellites:
            raise ValueError(f"{hub} is already a satellite; cannot be a hub")
        if sat in self._hubs or sat in self._satellites:
            raise ValueError(f"{sat} already planted")
        if hub not in self._hubs:
            self._hubs[hub] = self._alloc_axis()
        self._satellites[sat] = (self._hubs[hub], cosine, self._alloc_axis())

    def lookup(self, key: tuple[str, str]) -> np.ndarray | None:
        if key in self._hubs:
            vec = np.zeros(self.dim)
            vec[self._hubs[key]] = 1.0
            return vec
        if key in self._satellites:
            hub_axis, cosine, own_axis = self._satellites[key]
            vec = np.zeros(self.dim)
            vec[hub_axis] = cosine
            vec[own_axis] = float(np.sqrt(max(0.0, 1.0 - cosine * cosine)))
            return vec
        return None


class StubBackend:
    """All three model services as one deterministic in-process object."""

    def __init__(self, seed: int = 0, dim: int = 64):
        self.seed = seed
        self.dim = dim
        self.plants = PlantedCosines(dim)
        self.calls = {"lalm": 0, "llm": 0, "embed": 0}

    # -- planting ---------------------------------------------------------

    def plant_cosine(
        self, a_kind: str, a_value: str, b_kind: str, b_value: str, cosine: float
    ) -> None:
        self.plants.plant((a_kind, a_value), (b_kind, b_value), cosine)

    # -- services ---------------------------------------------------------

    def lalm_chat(self, req: LalmRequest) -> str:
        self.calls["lalm"] += 1
        history_key = "|".join(f"{t.role}:{t.text}" for t in req.history)
        rng = random.Random(
            _digest("lalm", str(self.seed), req.audio_uri, req.prompt, history_key)
        )
        noun_a, noun_b = rng.sample(_NOUNS, 2)
        adj = rng.choice(_ADJS)
        return f"A {adj} {noun_a} sound with {noun_b} in the background."

    def llm_complete(self, system: str, prompt: str, params: LlmParams) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        self.calls["llm"] += 1
        rng = random.Random(
            _digest(
                "llm",
                str(self.seed),
                str(params.seed),
                f"{params.temperature:.6f}",
                system,
                prompt,
            )
        )
        words = self._salient_words(prompt)
        opener = rng.choice(_OPENERS)
        if not words:
            return f"{opener} a {rng.choice(_ADJS)} {rng.choice(_NOUNS)} sound."
        if len(words) > 6:
            words = words[:6]
        if len(words) == 1:
            body = words[0]
        else:
            body = ", ".join(words[:-1]) + " and " + words[-1]
        return f"{opener} {body}."

    @staticmethod
    def _salient_words(prompt: str) -> list[str]:
        """Content words of the Description slot, in order, deduplicated."""
        match = _DESCRIPTION_RE.search(prompt)
        source = match.group(1) if match else prompt
        seen: list[str] = []
        for token in re.findall(r"[a-zA-Z]+", source.lower()):
            if token in _FILLER_WORDS or token in seen:
                continue
            seen.append(token)
        return seen

    def embed(self, inputs: list[tuple[str, str]]) -> list[Embedding]:
        if not inputs:
            raise ValueError("inputs must be non-empty")
        self.calls["embed"] += 1
        out = []
        for kind, value in inputs:
            if kind not in ("audio", "text"):
                raise ValueError(f"unknown input kind: {kind!r}")
            planted = self.plants.lookup((kind, value))
            if planted is not None:
                vec = planted
            else:
                rng = np.random.default_rng(_digest("emb", str(self.seed), kind, value))
                vec = l2_normalize(rng.standard_normal(self.dim))
            out.append(Embedding(values=vec, normalized=True))
        return out
