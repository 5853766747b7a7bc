"""FastAPI app exposing the deterministic stub over the real wire formats.

Lets the HTTP clients be exercised end to end without any model deployment.
A fixture file can plant embedding cosines:

    {"seed": 0, "dim": 64,
     "planted": [{"a": {"kind": "audio", "value": "a1"},
                  "b": {"kind": "text", "value": "cap1"},
                  "cosine": 0.9}]}
"""

from __future__ import annotations

import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .base import ChatTurn, LalmRequest, LlmParams
from .stub import StubBackend


class TurnModel(BaseModel):
    role: str
    text: str


class LalmBody(BaseModel):
    audio_uri: str
    history: list[TurnModel] = Field(default_factory=list)
    prompt: str


class MessageModel(BaseModel):
    role: str
    content: str


class LlmBody(BaseModel):
    messages: list[MessageModel]
    max_tokens: int = 256
    temperature: float = 0.7
    seed: int = 0


class EmbedInput(BaseModel):
    kind: str
    value: str


class EmbedBody(BaseModel):
    inputs: list[EmbedInput]


def load_fixture(stub: StubBackend, path: str | Path) -> None:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    for plant in data.get("planted", []):
        stub.plant_cosine(
            plant["a"]["kind"],
            plant["a"]["value"],
            plant["b"]["kind"],
            plant["b"]["value"],
            plant["cosine"],
        )


def create_app(seed: int = 0, dim: int = 64, fixture: str | Path | None = None) -> FastAPI:
    stub = StubBackend(seed=seed, dim=dim)
    if fixture:
        load_fixture(stub, fixture)

    app = FastAPI(title="capforge stub backend")
    app.state.stub = stub

    @app.post("/v1/lalm/chat")
    def lalm_chat(body: LalmBody):
        try:
            req = LalmRequest(
                audio_uri=body.audio_uri,
                history=[ChatTurn(t.role, t.text) for t in body.history],
                prompt=body.prompt,
            )
            return {"text": stub.lalm_chat(req)}
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/v1/chat/completions")
    def chat_completions(body: LlmBody):
        system = ""
        prompt = ""
        for msg in body.messages:
            if msg.role == "system":
                system = msg.content
            elif msg.role == "user":
                prompt = msg.content
        try:
            params = LlmParams(
                max_tokens=body.max_tokens, temperature=body.temperature, seed=body.seed
            )
            text = stub.llm_complete(system, prompt, params)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"choices": [{"message": {"role": "assistant", "content": text}}]}

    @app.post("/v1/clap/embed")
    def clap_embed(body: EmbedBody):
        try:
            embeddings = stub.embed([(i.kind, i.value) for i in body.inputs])
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "dim": stub.dim,
            "embeddings": [e.values.tolist() for e in embeddings],
        }

    return app
