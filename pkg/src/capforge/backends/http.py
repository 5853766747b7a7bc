"""HTTP clients for the three model services.

Wire formats:
  LALM:      POST {lalm_url}/v1/lalm/chat        -> {"text": str}
  LLM:       POST {llm_url}/v1/chat/completions  -> OpenAI-style choices
  Embedding: POST {clap_url}/v1/clap/embed       -> {"dim": int, "embeddings": [[float]]}
"""

from __future__ import annotations

import time

import numpy as np
import requests

from ..errors import BackendUnavailable, DimensionMismatch, MalformedResponse
from .base import Embedding, LalmRequest, LlmParams, l2_normalize
from .policy import BackendPolicy, RateLimiter


class HttpBackend:
    """Thread-safe client; retries transient failures with exponential backoff."""

    def __init__(
        self,
        lalm_url: str,
        llm_url: str,
        clap_url: str,
        policy: BackendPolicy | None = None,
        session: requests.Session | None = None,
    ):
        self.policy = policy or BackendPolicy()
        self._urls = {"lalm": lalm_url, "llm": llm_url, "clap": clap_url}
        self._limiters = {
            name: RateLimiter(self.policy.rate_limit_per_s) for name in self._urls
        }
        self._session = session or requests.Session()

    def _post(self, service: str, path: str, body: dict) -> dict:
        url = self._urls[service].rstrip("/") + path
        last_error: Exception | None = None
        for attempt in range(self.policy.max_retries + 1):
            if attempt > 0:
                time.sleep(self.policy.backoff_s(attempt - 1))
            self._limiters[service].acquire()
            try:
                resp = self._session.post(
                    url, json=body, timeout=self.policy.timeout_ms / 1000.0
                )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code >= 500:
                last_error = BackendUnavailable(f"{url} -> HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise BackendUnavailable(f"{url} -> HTTP {resp.status_code}: {resp.text}")
            try:
                return resp.json()
            except ValueError as exc:
                raise MalformedResponse(f"{url}: non-JSON body") from exc
        raise BackendUnavailable(f"{url}: retries exhausted ({last_error})")

    def lalm_chat(self, req: LalmRequest) -> str:
        body = {
            "audio_uri": req.audio_uri,
            "history": [t.to_dict() for t in req.history],
            "prompt": req.prompt,
        }
        data = self._post("lalm", "/v1/lalm/chat", body)
        text = data.get("text")
        if not isinstance(text, str) or not text:
            raise MalformedResponse("LALM response missing non-empty 'text'")
        return text

    def llm_complete(self, system: str, prompt: str, params: LlmParams) -> str:
        messages = []
        if system:
            messages.append({"role": "system", "content": system})
        messages.append({"role": "user", "content": prompt})
        body = {
            "messages": messages,
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
            "seed": params.seed,
        }
        data = self._post("llm", "/v1/chat/completions", body)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse("LLM response missing choices[0].message.content") from exc
        if not isinstance(content, str):
            raise MalformedResponse("LLM completion content is not a string")
        return content

    def embed(self, inputs: list[tuple[str, str]]) -> list[Embedding]:
        if not inputs:
            raise ValueError("inputs must be non-empty")
        body = {"inputs": [{"kind": kind, "value": value} for kind, value in inputs]}
        data = self._post("clap", "/v1/clap/embed", body)
        try:
            dim = int(data["dim"])
            rows = data["embeddings"]
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse("embed response missing 'dim'/'embeddings'") from exc
        if len(rows) != len(inputs):
            raise MalformedResponse(f"expected {len(inputs)} embeddings, got {len(rows)}")
        out = []
        for row in rows:
            if len(row) != dim:
                raise DimensionMismatch(f"ragged embedding: {len(row)} != {dim}")
            out.append(Embedding(values=l2_normalize(np.asarray(row)), normalized=True))
        return out
