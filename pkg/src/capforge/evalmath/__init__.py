"""Evaluation math over paired audio/text embeddings.

Hot kernels (contrastive loss, gradient, R@k) live in a compiled Cython
extension with a pure-numpy fallback; set CAPFORGE_PURE_PYTHON=1 to force
the fallback.
"""

from __future__ import annotations

import math
import os
import random
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..backends.base import Backend, Embedding
from ..errors import (
    BadTemplate,
    DimensionMismatch,
    EmptyClasses,
    InvalidK,
    NonFinite,
    ZeroProbabilityTarget,
)
from . import _fallback

if os.environ.get("CAPFORGE_PURE_PYTHON") == "1":
    _kernels = _fallback
    KERNEL_BACKEND = "python"
else:
    try:
        from . import _core as _kernels  # type: ignore[no-redef]

        KERNEL_BACKEND = "cython"
    except ImportError:
        _kernels = _fallback
        KERNEL_BACKEND = "python"

MASK_TOKEN = "[MASK]"
NORM_TOLERANCE = 1e-6


def _as_c_double(m: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(m, dtype=np.float64)


@dataclass
class EmbeddingBatch:
    """Paired audio/text embedding matrices; row i of each side corresponds."""

    audio: np.ndarray
    text: np.ndarray

    def __post_init__(self):
        self.audio = _as_c_double(self.audio)
        self.text = _as_c_double(self.text)
        if self.audio.ndim != 2 or self.text.ndim != 2:
            raise DimensionMismatch("embedding matrices must be 2-D")
        if self.audio.shape != self.text.shape:
            raise DimensionMismatch(
                f"audio {self.audio.shape} vs text {self.text.shape}"
            )
        if not (np.isfinite(self.audio).all() and np.isfinite(self.text).all()):
            raise NonFinite("embedding matrices contain non-finite entries")
        for name, m in (("audio", self.audio), ("text", self.text)):
            norms = np.linalg.norm(m, axis=1)
            if np.abs(norms - 1.0).max() > NORM_TOLERANCE:
                raise ValueError(f"{name} rows are not L2-normalized")

    @property
    def size(self) -> int:
        return int(self.audio.shape[0])


@dataclass
class LossConfig:
    temperature: float = 0.07

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass
class RetrievalResult:
    direction: str
    recall_at: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "recall_at": {str(k): v for k, v in self.recall_at.items()},
        }


def infonce_loss(
    batch: EmbeddingBatch, cfg: LossConfig | None = None
) -> tuple[float, np.ndarray, np.ndarray]:
    """Symmetric contrastive loss: (total, per-item audio, per-item text)."""
    cfg = cfg or LossConfig()
    total, loss_a, loss_t = _kernels.infonce_forward(
        batch.audio, batch.text, cfg.temperature
    )
    return float(total), np.asarray(loss_a), np.asarray(loss_t)


def infonce_gradient(
    batch: EmbeddingBatch, cfg: LossConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the total loss w.r.t. audio and text rows."""
    cfg = cfg or LossConfig()
    ga, gt = _kernels.infonce_backward(batch.audio, batch.text, cfg.temperature)
    return np.asarray(ga), np.asarray(gt)


def similarity_matrix(batch: EmbeddingBatch) -> np.ndarray:
    """S[i, j] = audio row i . text row j (cosine, rows being unit-norm)."""
    return batch.audio @ batch.text.T


def recall_at_k(s: np.ndarray, k: int, direction: str) -> float:
    """R@k percentage over a square similarity matrix with diagonal truth."""
    s = _as_c_double(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionMismatch("similarity matrix must be square")
    b = s.shape[0]
    if not 1 <= k <= b:
        raise InvalidK(f"k={k} outside [1, {b}]")
    if direction not in ("audio_to_text", "text_to_audio"):
        raise ValueError(f"unknown direction: {direction!r}")
    return float(_kernels.recall_percent(s, k, direction == "audio_to_text"))


def retrieval_report(s: np.ndarray, ks: list[int]) -> list[RetrievalResult]:
    return [
        RetrievalResult(
            direction=d, recall_at={k: recall_at_k(s, k, d) for k in ks}
        )
        for d in ("text_to_audio", "audio_to_text")
    ]


@dataclass
class TokenDistributionSequence:
    """Per-position vocabulary distributions plus the target token indices."""

    probs: np.ndarray
    targets: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise DimensionMismatch("probs must be N x V")
        if self.probs.shape[0] != len(self.targets):
            raise DimensionMismatch("one target per distribution row required")
        if np.abs(self.probs.sum(axis=1) - 1.0).max() > 1e-6:
            raise ValueError("each probability row must sum to 1")
        if (self.probs < 0).any():
            raise ValueError("probabilities must be non-negative")
        vocab = self.probs.shape[1]
        if any(not 0 <= t < vocab for t in self.targets):
            raise ValueError("target index outside vocabulary")


def aac_nll(seq: TokenDistributionSequence) -> float:
    """Mean token-level negative log-likelihood of the target sequence.

    A zero-probability target yields +inf and a ZeroProbabilityTarget warning.
    """
    picked = seq.probs[np.arange(len(seq.targets)), seq.targets]
    if (picked == 0).any():
        warnings.warn("target token has zero probability", ZeroProbabilityTarget)
        return math.inf
    return float(-np.log(picked).mean())


def zero_shot_classify(
    audio_emb: Embedding, class_texts: list[str], backend: Backend
) -> tuple[int, np.ndarray]:
    """Predict the class whose embedded text is most similar to the audio.

    Ties resolve to the smallest index.
    """
    if not class_texts:
        raise EmptyClasses("class_texts must be non-empty")
    class_embs = backend.embed([("text", t) for t in class_texts])
    scores = np.array([audio_emb.cosine(e) for e in class_embs])
    return int(np.argmax(scores)), scores


def mask_text(caption: str, ratio: float, seed: int) -> str:
    """Replace round(ratio * token_count) whitespace tokens with the mask
    symbol, chosen uniformly without replacement by a seeded RNG."""
    if not 0 <= ratio <= 1:
        raise ValueError("ratio must be in [0, 1]")
    tokens = caption.split()
    if not tokens:
        return caption
    count = int(math.floor(ratio * len(tokens) + 0.5))
    rng = random.Random(seed)
    chosen = set(rng.sample(range(len(tokens)), count))
    return " ".join(
        MASK_TOKEN if i in chosen else tok for i, tok in enumerate(tokens)
    )


def expand_label(label: str, template: str) -> str:
    """Render a class label into a sentence via a {label} template."""
    if not label:
        raise ValueError("label must be non-empty")
    if "{label}" not in template:
        raise BadTemplate("template must contain {label}")
    return template.replace("{label}", label.lower())


DEFAULT_LABEL_SENTENCE_TEMPLATE = "the sound of {label}"
