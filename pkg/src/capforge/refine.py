"""Embedding-similarity caption refinement.

Scores each candidate caption against the audio embedding, compares it to
the ground-truth-label benchmark score, and regenerates up to a bounded
number of attempts. On exhaustion the best-scoring attempt is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backends.base import Backend, Embedding
from .caption import CaptionConfig, generate_candidate
from .catalog import AudioItem, ExtractionRecord


@dataclass
class RefineConfig:
    max_attempts: int = 3
    label_template: str = "{labels}"

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if "{labels}" not in self.label_template:
            raise ValueError("label_template must contain {labels}")


@dataclass
class RefinementTrace:
    benchmark_score: float
    attempts: list[tuple[str, float]]
    accepted_index: int
    exhausted: bool
    no_benchmark: bool = False

    @property
    def caption(self) -> str:
        return self.attempts[self.accepted_index][0]

    @property
    def score(self) -> float:
        return self.attempts[self.accepted_index][1]

    @property
    def accepted(self) -> bool:
        return self.score >= self.benchmark_score


def _clamp_cosine(value: float) -> float:
    return float(min(1.0, max(-1.0, value)))


def benchmark_text(item: AudioItem, cfg: RefineConfig) -> str:
    return cfg.label_template.format(labels=", ".join(item.labels))


def benchmark_score(
    item: AudioItem, cfg: RefineConfig, backend: Backend, audio_emb: Embedding
) -> float:
    """Cosine similarity between the audio and its rendered label text."""
    (label_emb,) = backend.embed([("text", benchmark_text(item, cfg))])
    return _clamp_cosine(audio_emb.cosine(label_emb))


def refine_caption(
    item: AudioItem,
    extraction: ExtractionRecord,
    caption_cfg: CaptionConfig,
    refine_cfg: RefineConfig,
    backend: Backend,
    seed: int = 0,
) -> RefinementTrace:
    """Generate-score-compare loop for one item.

    Audio and benchmark embeddings are computed exactly once regardless of
    attempt count. Each regeneration uses a distinct seed offset. Items
    without labels have no benchmark: the first attempt is accepted
    unconditionally and flagged.
    """
    (audio_emb,) = backend.embed([("audio", item.audio_uri)])

    if not item.labels:
        caption = generate_candidate(extraction, item, caption_cfg, backend, seed=seed)
        (cand_emb,) = backend.embed([("text", caption)])
        score = _clamp_cosine(audio_emb.cosine(cand_emb))
        # -1.0 is a floor no cosine falls below, so accept always holds.
        return RefinementTrace(
            benchmark_score=-1.0,
            attempts=[(caption, score)],
            accepted_index=0,
            exhausted=False,
            no_benchmark=True,
        )

    benchmark = benchmark_score(item, refine_cfg, backend, audio_emb)

    attempts: list[tuple[str, float]] = []
    for i in range(refine_cfg.max_attempts):
        caption = generate_candidate(
            extraction, item, caption_cfg, backend, seed=seed + i
        )
        (cand_emb,) = backend.embed([("text", caption)])
        score = _clamp_cosine(audio_emb.cosine(cand_emb))
        attempts.append((caption, score))
        if score >= benchmark:
            return RefinementTrace(
                benchmark_score=benchmark,
                attempts=attempts,
                accepted_index=i,
                exhausted=False,
            )

    best = max(range(len(attempts)), key=lambda j: (attempts[j][1], -j))
    return RefinementTrace(
        benchmark_score=benchmark,
        attempts=attempts,
        accepted_index=best,
        exhausted=True,
    )
