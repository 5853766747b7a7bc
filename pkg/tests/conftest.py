import json
from pathlib import Path

import pytest

from capforge.backends import StubBackend
from capforge.backends.base import LlmParams


@pytest.fixture
def stub():
    return StubBackend(seed=0)


class ScriptedLlmBackend(StubBackend):
    """Stub whose LLM returns a fixed caption per call, cycling if exhausted.

    Extraction and embedding behave like the plain stub (plus any plants),
    so tests can pin attempt captions and plant their scores.
    """

    def __init__(self, captions: list[str], seed: int = 0, dim: int = 64):
        super().__init__(seed=seed, dim=dim)
        self.scripted_captions = captions

    def llm_complete(self, system: str, prompt: str, params: LlmParams) -> str:
        self.calls["llm"] += 1
        idx = (self.calls["llm"] - 1) % len(self.scripted_captions)
        return self.scripted_captions[idx]


@pytest.fixture
def scripted_backend_factory():
    return ScriptedLlmBackend


def make_manifest(path: Path, n: int, with_labels: bool = True) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n):
            row = {
                "audio_id": f"id{i:04d}",
                "audio_uri": f"uri://clip/{i}",
                "labels": ["Dog", "Bark"] if with_labels and i % 3 else [],
                "duration_s": 10.0,
            }
            fh.write(json.dumps(row) + "\n")
    return path


@pytest.fixture
def manifest_factory(tmp_path):
    def factory(n: int, with_labels: bool = True, name: str = "manifest.jsonl"):
        return make_manifest(tmp_path / name, n, with_labels)

    return factory
