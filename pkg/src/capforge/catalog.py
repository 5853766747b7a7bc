"""Manifest ingestion, shard output, and resumable checkpointing."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigMismatch, DuplicateId, ParseError

SHARD_NAME = "shard-{index:05d}.jsonl"
CHECKPOINT_NAME = "checkpoint.txt"


@dataclass
class AudioItem:
    """One manifest entry."""

    audio_id: str
    audio_uri: str
    labels: list[str] = field(default_factory=list)
    duration_s: float | None = None

    def validate(self) -> None:
        if not self.audio_id:
            raise ValueError("audio_id must be non-empty")
        for label in self.labels:
            if not label or label != label.strip():
                raise ValueError(f"label must be non-empty and trimmed: {label!r}")
        if self.duration_s is not None and self.duration_s < 0:
            raise ValueError("duration_s must be non-negative")


@dataclass
class ExtractionRecord:
    """Outputs of the three-step extraction chain plus the audit transcript."""

    overall: str
    speech: str = ""
    music: str = ""
    chain_transcript: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "speech": self.speech,
            "music": self.music,
            "chain_transcript": self.chain_transcript,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionRecord":
        return cls(
            overall=d["overall"],
            speech=d.get("speech", ""),
            music=d.get("music", ""),
            chain_transcript=d.get("chain_transcript", []),
        )


@dataclass
class CaptionRecord:
    """Final caption for one audio item, with its refinement trace."""

    audio_id: str
    caption: str
    extraction: ExtractionRecord
    attempts: list[tuple[str, float]]
    benchmark_score: float
    accepted: bool
    pipeline_config_hash: str
    no_benchmark: bool = False
    overlong: bool = False

    def to_dict(self) -> dict:
        # Stable field order for byte-identical shard output.
        return {
            "audio_id": self.audio_id,
            "caption": self.caption,
            "extraction": self.extraction.to_dict(),
            "attempts": [{"caption": c, "score": s} for c, s in self.attempts],
            "benchmark_score": self.benchmark_score,
            "accepted": self.accepted,
            "no_benchmark": self.no_benchmark,
            "overlong": self.overlong,
            "pipeline_config_hash": self.pipeline_config_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CaptionRecord":
        return cls(
            audio_id=d["audio_id"],
            caption=d["caption"],
            extraction=ExtractionRecord.from_dict(d["extraction"]),
            attempts=[(a["caption"], a["score"]) for a in d["attempts"]],
            benchmark_score=d["benchmark_score"],
            accepted=d["accepted"],
            no_benchmark=d.get("no_benchmark", False),
            overlong=d.get("overlong", False),
            pipeline_config_hash=d["pipeline_config_hash"],
        )


@dataclass
class Checkpoint:
    completed_ids: set[str]
    config_hash: str
    shard_index: int = 0


def _item_from_row(row: dict, line_no: int) -> AudioItem:
    try:
        labels = row.get("labels") or []
        if isinstance(labels, str):
            # CSV manifests carry labels as a ";"-joined cell.
            labels = [l.strip() for l in labels.split(";") if l.strip()]
        duration = row.get("duration_s")
        duration = float(duration) if duration not in (None, "") else None
        item = AudioItem(
            audio_id=str(row["audio_id"]),
            audio_uri=str(row["audio_uri"]),
            labels=list(labels),
            duration_s=duration,
        )
        item.validate()
        return item
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(line_no, str(exc)) from exc


def load_manifest(path: str | Path, format: str = "jsonl") -> list[AudioItem]:
    """Load an audio manifest, preserving file order.

    Duplicate audio_id values are an error.
    """
    path = Path(path)
    items: list[AudioItem] = []
    if format == "jsonl":
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ParseError(line_no, f"invalid JSON: {exc}") from exc
                if not isinstance(row, dict):
                    raise ParseError(line_no, "row is not a JSON object")
                items.append(_item_from_row(row, line_no))
    elif format == "csv":
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for line_no, row in enumerate(reader, start=2):
                items.append(_item_from_row(row, line_no))
    else:
        raise ValueError(f"unknown manifest format: {format!r}")

    seen: set[str] = set()
    for item in items:
        if item.audio_id in seen:
            raise DuplicateId(item.audio_id)
        seen.add(item.audio_id)
    return items


def write_shard(
    records: list[CaptionRecord], dir: str | Path, shard_size: int
) -> list[Path]:
    """Write records as sorted, fixed-size JSONL shards.

    Records are globally sorted by audio_id; output is deterministic and
    byte-identical across runs for identical inputs.
    """
    if shard_size < 1:
        raise ValueError("shard_size must be >= 1")
    out_dir = Path(dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(records, key=lambda r: r.audio_id)
    n_shards = math.ceil(len(ordered) / shard_size)
    paths: list[Path] = []
    for idx in range(n_shards):
        chunk = ordered[idx * shard_size : (idx + 1) * shard_size]
        path = out_dir / SHARD_NAME.format(index=idx)
        with path.open("w", encoding="utf-8") as fh:
            for rec in chunk:
                fh.write(json.dumps(rec.to_dict(), ensure_ascii=False))
                fh.write("\n")
        paths.append(path)
    return paths


def resume_filter(manifest: list[AudioItem], ckpt: Checkpoint, config_hash: str) -> list[AudioItem]:
    """Return manifest items not yet completed, preserving order."""
    if ckpt.config_hash != config_hash:
        raise ConfigMismatch(
            f"checkpoint config hash {ckpt.config_hash} != current {config_hash}"
        )
    return [item for item in manifest if item.audio_id not in ckpt.completed_ids]


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Write the checkpoint atomically (write-then-rename)."""
    path = Path(path)
    tmp = path.with_suffix(".tmp")
    with tmp.open("w", encoding="utf-8") as fh:
        fh.write(f"config_hash={ckpt.config_hash}\n")
        for audio_id in sorted(ckpt.completed_ids):
            fh.write(audio_id + "\n")
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("config_hash="):
            raise ParseError(1, "missing config_hash header")
        config_hash = header.split("=", 1)[1]
        completed = {line.strip() for line in fh if line.strip()}
    return Checkpoint(completed_ids=completed, config_hash=config_hash)
