"""Pure-numpy implementations of the evaluation kernels.

Used when the compiled extension is unavailable or explicitly disabled via
CAPFORGE_PURE_PYTHON=1. Semantics are identical to the Cython core.
"""

from __future__ import annotations

import numpy as np


def _log_softmax_rows(z: np.ndarray) -> np.ndarray:
    zmax = z.max(axis=1, keepdims=True)
    shifted = z - zmax
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return shifted - lse


def infonce_forward(
    audio: np.ndarray, text: np.ndarray, tau: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Symmetric contrastive loss. Returns (total, per-item audio losses,
    per-item text losses)."""
    b = audio.shape[0]
    z = (audio @ text.T) / tau
    log_p = _log_softmax_rows(z)
    log_q = _log_softmax_rows(z.T)
    diag = np.arange(b)
    loss_a = -log_p[diag, diag]
    loss_t = -log_q[diag, diag]
    total = float((loss_a.sum() + loss_t.sum()) / (2.0 * b))
    return total, loss_a, loss_t


def infonce_backward(
    audio: np.ndarray, text: np.ndarray, tau: float
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the symmetric loss w.r.t. the audio and text rows."""
    b = audio.shape[0]
    z = (audio @ text.T) / tau
    p = np.exp(_log_softmax_rows(z))
    q = np.exp(_log_softmax_rows(z.T))
    eye = np.eye(b)
    scale = 1.0 / (2.0 * b * tau)
    grad_audio = scale * ((p + q.T - 2.0 * eye) @ text)
    grad_text = scale * ((q + p.T - 2.0 * eye) @ audio)
    return grad_audio, grad_text


def recall_percent(s: np.ndarray, k: int, audio_to_text: bool) -> float:
    """R@k over a square similarity matrix with diagonal ground truth.

    Ties rank the smaller index first.
    """
    b = s.shape[0]
    hits = 0
    for q in range(b):
        row = s[q, :] if audio_to_text else s[:, q]
        truth = row[q]
        rank = 1
        for j in range(b):
            if row[j] > truth or (row[j] == truth and j < q):
                rank += 1
        if rank <= k:
            hits += 1
    return 100.0 * hits / b
