"""Model service clients: deterministic stub and HTTP implementations."""

from __future__ import annotations

import os

from .base import Backend, ChatTurn, Embedding, LalmRequest, LlmParams, l2_normalize
from .http import HttpBackend
from .policy import BackendPolicy, RateLimiter
from .stub import PlantedCosines, StubBackend

ENV_LALM_URL = "CAPFORGE_LALM_URL"
ENV_LLM_URL = "CAPFORGE_LLM_URL"
ENV_CLAP_URL = "CAPFORGE_CLAP_URL"
ENV_BACKEND = "CAPFORGE_BACKEND"


def make_backend(
    kind: str | None = None,
    seed: int = 0,
    policy: BackendPolicy | None = None,
    lalm_url: str | None = None,
    llm_url: str | None = None,
    clap_url: str | None = None,
) -> Backend:
    """Build a backend from explicit arguments, falling back to CAPFORGE_* env vars."""
    kind = kind or os.environ.get(ENV_BACKEND, "stub")
    if kind == "stub":
        return StubBackend(seed=seed)
    if kind == "http":
        lalm_url = lalm_url or os.environ.get(ENV_LALM_URL)
        llm_url = llm_url or os.environ.get(ENV_LLM_URL)
        clap_url = clap_url or os.environ.get(ENV_CLAP_URL)
        missing = [
            name
            for name, url in [
                (ENV_LALM_URL, lalm_url),
                (ENV_LLM_URL, llm_url),
                (ENV_CLAP_URL, clap_url),
            ]
            if not url
        ]
        if missing:
            raise ValueError(f"http backend needs URLs: set {', '.join(missing)}")
        return HttpBackend(lalm_url, llm_url, clap_url, policy=policy)
    raise ValueError(f"unknown backend kind: {kind!r}")


__all__ = [
    "Backend",
    "BackendPolicy",
    "ChatTurn",
    "Embedding",
    "HttpBackend",
    "LalmRequest",
    "LlmParams",
    "PlantedCosines",
    "RateLimiter",
    "StubBackend",
    "l2_normalize",
    "make_backend",
]
