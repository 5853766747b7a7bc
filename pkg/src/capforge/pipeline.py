"""End-to-end orchestration: extraction, caption composition, refinement,
spooled output, and checkpointed resume with bounded concurrency.

Per-item seeds derive from (run seed, audio_id), so output never depends
on worker interleaving; final shards are sorted globally by audio_id and
byte-identical across runs and across interruption/resume boundaries.
"""

from __future__ import annotations

import hashlib
import json
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from .backends.base import Backend
from .caption import generate_candidate, word_count
from .catalog import (
    CHECKPOINT_NAME,
    AudioItem,
    CaptionRecord,
    Checkpoint,
    load_checkpoint,
    load_manifest,
    resume_filter,
    save_checkpoint,
    write_shard,
)
from .config import PipelineConfig
from .errors import BackendUnavailable, CapforgeError
from .extract import run_chain
from .refine import RefinementTrace, refine_caption

SPOOL_NAME = "records.jsonl"
FAILURES_NAME = "failures.jsonl"
ITEM_RETRIES = 2


def derive_item_seed(run_seed: int, audio_id: str) -> int:
    digest = hashlib.blake2b(
        f"{run_seed}|{audio_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") % (2**31)


@dataclass
class RunSummary:
    processed: int
    skipped: int
    failed: int
    shards: list[Path]

    def to_dict(self) -> dict:
        return {
            "processed": self.processed,
            "skipped": self.skipped,
            "failed": self.failed,
            "shards": [str(p) for p in self.shards],
        }


def process_item(
    item: AudioItem, cfg: PipelineConfig, backend: Backend, config_hash: str
) -> CaptionRecord:
    """Run the full three-stage pipeline for one item."""
    seed = derive_item_seed(cfg.seed, item.audio_id)
    extraction = run_chain(item, cfg.chain, backend)

    if cfg.refine_enabled:
        trace = refine_caption(item, extraction, cfg.caption, cfg.refine, backend, seed=seed)
    else:
        # Refinement ablation: one generation, no embedding calls. Scores are
        # placeholders so the record schema stays uniform.
        caption = generate_candidate(extraction, item, cfg.caption, backend, seed=seed)
        trace = RefinementTrace(
            benchmark_score=0.0,
            attempts=[(caption, 0.0)],
            accepted_index=0,
            exhausted=False,
            no_benchmark=True,
        )

    return CaptionRecord(
        audio_id=item.audio_id,
        caption=trace.caption,
        extraction=extraction,
        attempts=trace.attempts,
        benchmark_score=trace.benchmark_score,
        accepted=trace.accepted,
        no_benchmark=trace.no_benchmark,
        overlong=word_count(trace.caption) > cfg.caption.word_limit,
        pipeline_config_hash=config_hash,
    )


def _process_with_retries(
    item: AudioItem, cfg: PipelineConfig, backend: Backend, config_hash: str
) -> CaptionRecord:
    last: Exception | None = None
    for _ in range(ITEM_RETRIES + 1):
        try:
            return process_item(item, cfg, backend, config_hash)
        except BackendUnavailable as exc:
            # Partial traces are discarded; the item restarts whole.
            last = exc
    raise last  # type: ignore[misc]


def _load_spool(path: Path) -> dict[str, dict]:
    records: dict[str, dict] = {}
    if not path.exists():
        return records
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            records[row["audio_id"]] = row  # last write wins
    return records


def run(
    manifest_path: str | Path,
    cfg: PipelineConfig,
    out_dir: str | Path,
    backend: Backend,
    resume: bool = False,
    limit: int | None = None,
    progress=None,
) -> RunSummary:
    """Process a manifest into sorted caption shards.

    `limit` caps the number of items processed this invocation (used to
    exercise interruption + resume). `progress` is an optional callable
    receiving JSONL-able event dicts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spool_path = out_dir / SPOOL_NAME
    ckpt_path = out_dir / CHECKPOINT_NAME
    failures_path = out_dir / FAILURES_NAME
    config_hash = cfg.config_hash()

    manifest = load_manifest(manifest_path)

    if resume and ckpt_path.exists():
        ckpt = load_checkpoint(ckpt_path)
        resume_filter(manifest, ckpt, config_hash)  # validates the hash
        spool = _load_spool(spool_path)
    else:
        spool = {}
        spool_path.write_text("", encoding="utf-8")
        if failures_path.exists():
            failures_path.unlink()

    # The spool is the source of truth for completed work: a record may have
    # been spooled after the last checkpoint flush.
    completed = set(spool)
    pending = [item for item in manifest if item.audio_id not in completed]
    skipped = len(manifest) - len(pending)
    if limit is not None:
        pending = pending[:limit]

    lock = threading.Lock()
    failed = 0
    done_since_flush = 0

    def emit(event: dict) -> None:
        if progress is not None:
            progress(event)

    with spool_path.open("a", encoding="utf-8") as spool_fh, ThreadPoolExecutor(
        max_workers=cfg.concurrency
    ) as pool:
        futures = {
            pool.submit(_process_with_retries, item, cfg, backend, config_hash): item
            for item in pending
        }
        for future in as_completed(futures):
            item = futures[future]
            try:
                record = future.result()
            except CapforgeError as exc:
                with lock:
                    failed += 1
                    with failures_path.open("a", encoding="utf-8") as fh:
                        fh.write(
                            json.dumps(
                                {"audio_id": item.audio_id, "error": str(exc)}
                            )
                        )
                        fh.write("\n")
                emit({"event": "item_failed", "audio_id": item.audio_id, "error": str(exc)})
                continue
            with lock:
                spool_fh.write(json.dumps(record.to_dict(), ensure_ascii=False))
                spool_fh.write("\n")
                spool_fh.flush()
                completed.add(record.audio_id)
                done_since_flush += 1
                if done_since_flush >= cfg.shard_size:
                    save_checkpoint(
                        Checkpoint(set(completed), config_hash), ckpt_path
                    )
                    done_since_flush = 0
            emit({"event": "item_done", "audio_id": record.audio_id})

    save_checkpoint(Checkpoint(set(completed), config_hash), ckpt_path)

    records = [CaptionRecord.from_dict(d) for d in _load_spool(spool_path).values()]
    shards = write_shard(records, out_dir, cfg.shard_size)
    emit({"event": "run_done", "records": len(records), "shards": len(shards)})

    processed = len(pending) - failed
    return RunSummary(processed=processed, skipped=skipped, failed=failed, shards=shards)
