"""Subjective-evaluation backend: rater assignment, rating ingestion, and
mean-opinion-score aggregation.

Storage is an append-only JSONL rating log; the in-memory index is rebuilt
from it at startup. Resubmission by the same rater for the same
(sample, source) pair overwrites.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidScore, UnknownItem, UnknownRater

LEVEL_NAMES = {1: "Bad", 2: "Poor", 3: "Fair", 4: "Good", 5: "Excellent"}
COVERAGE_GOAL = 5


@dataclass
class EvalItem:
    sample_id: str
    audio_uri: str
    annotation_source: str
    annotation_text: str

    @property
    def key(self) -> tuple[str, str]:
        return (self.sample_id, self.annotation_source)

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "audio_uri": self.audio_uri,
            "annotation_source": self.annotation_source,
            "annotation_text": self.annotation_text,
        }


@dataclass
class RatingRecord:
    rater_id: str
    sample_id: str
    annotation_source: str
    score: int
    timestamp: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "rater_id": self.rater_id,
            "sample_id": self.sample_id,
            "annotation_source": self.annotation_source,
            "score": self.score,
            "timestamp": self.timestamp,
        }


@dataclass
class SourceReport:
    source: str
    mean: float
    distribution: dict[str, float]
    n_ratings: int
    coverage: int
    low_coverage_samples: list[str]

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "mean": self.mean,
            "distribution": self.distribution,
            "n_ratings": self.n_ratings,
            "coverage": self.coverage,
            "low_coverage_samples": self.low_coverage_samples,
        }


def load_items(path: str | Path) -> list[EvalItem]:
    items = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            items.append(
                EvalItem(
                    sample_id=row["sample_id"],
                    audio_uri=row["audio_uri"],
                    annotation_source=row["annotation_source"],
                    annotation_text=row["annotation_text"],
                )
            )
    return items


class RatingStore:
    """Linearized rating storage with least-rated-first assignment."""

    def __init__(self, items: list[EvalItem], log_path: str | Path | None = None):
        self._items = {item.key: item for item in items}
        self._ratings: dict[tuple[str, str, str], RatingRecord] = {}
        self._raters: set[str] = set()
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path else None
        if self._log_path and self._log_path.exists():
            self._replay_log()

    def _replay_log(self) -> None:
        with self._log_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                rec = RatingRecord(
                    rater_id=row["rater_id"],
                    sample_id=row["sample_id"],
                    annotation_source=row["annotation_source"],
                    score=int(row["score"]),
                    timestamp=row.get("timestamp", 0.0),
                )
                self._raters.add(rec.rater_id)
                key = (rec.rater_id, rec.sample_id, rec.annotation_source)
                self._ratings[key] = rec  # last write wins

    def _append_log(self, rec: RatingRecord) -> None:
        if not self._log_path:
            return
        with self._log_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec.to_dict()))
            fh.write("\n")
            fh.flush()

    def register_rater(self) -> str:
        token = uuid.uuid4().hex
        with self._lock:
            self._raters.add(token)
        return token

    def _pair_counts(self) -> dict[tuple[str, str], int]:
        counts = {key: 0 for key in self._items}
        for (_, sample_id, source) in self._ratings:
            counts[(sample_id, source)] += 1
        return counts

    def assign_next(self, rater_id: str) -> EvalItem | None:
        """Unrated-by-this-rater item with the fewest ratings, or None."""
        with self._lock:
            if rater_id not in self._raters:
                raise UnknownRater(rater_id)
            counts = self._pair_counts()
            candidates = [
                key
                for key in self._items
                if (rater_id, key[0], key[1]) not in self._ratings
            ]
            if not candidates:
                return None
            best = min(candidates, key=lambda key: (counts[key], key))
            return self._items[best]

    def submit_rating(self, rec: RatingRecord) -> None:
        if rec.score not in LEVEL_NAMES:
            raise InvalidScore(f"score must be in 1..5, got {rec.score}")
        with self._lock:
            if rec.rater_id not in self._raters:
                raise UnknownRater(rec.rater_id)
            if (rec.sample_id, rec.annotation_source) not in self._items:
                raise UnknownItem(f"{rec.sample_id}/{rec.annotation_source}")
            key = (rec.rater_id, rec.sample_id, rec.annotation_source)
            self._ratings[key] = rec
            self._append_log(rec)

    def mos_report(self, sources: list[str] | None = None) -> dict:
        """Per-source means, level distributions, and coverage flags."""
        with self._lock:
            ratings = list(self._ratings.values())
            item_keys = list(self._items)

        all_sources = sorted({source for _, source in item_keys})
        if sources:
            all_sources = [s for s in all_sources if s in sources]

        reports = []
        for source in all_sources:
            source_ratings = [r for r in ratings if r.annotation_source == source]
            n = len(source_ratings)
            mean = sum(r.score for r in source_ratings) / n if n else 0.0
            distribution = {}
            for level, name in LEVEL_NAMES.items():
                count = sum(1 for r in source_ratings if r.score == level)
                distribution[name] = 100.0 * count / n if n else 0.0
            samples = sorted({sid for sid, src in item_keys if src == source})
            per_sample = {sid: 0 for sid in samples}
            for r in source_ratings:
                per_sample[r.sample_id] += 1
            coverage = min(per_sample.values()) if per_sample else 0
            low = [sid for sid in samples if per_sample[sid] < COVERAGE_GOAL]
            reports.append(
                SourceReport(
                    source=source,
                    mean=mean,
                    distribution=distribution,
                    n_ratings=n,
                    coverage=coverage,
                    low_coverage_samples=low,
                )
            )
        return {
            "sources": [r.to_dict() for r in reports],
            "n_ratings": len(ratings),
        }


try:
    from pydantic import BaseModel

    class RatingBody(BaseModel):
        rater_id: str
        sample_id: str
        annotation_source: str
        score: int

except ImportError:  # pragma: no cover - fastapi/pydantic are hard deps
    RatingBody = None


def create_app(store: RatingStore, media_dir: str | Path | None = None,
               ui_dir: str | Path | None = None):
    """HTTP JSON API over the rating store, plus static UI/media serving."""
    from fastapi import FastAPI, HTTPException, Response

    app = FastAPI(title="capforge MOS service")
    app.state.store = store

    @app.post("/api/session")
    def session():
        return {"rater_id": store.register_rater()}

    @app.get("/api/next")
    def next_item(rater_id: str):
        try:
            item = store.assign_next(rater_id)
        except UnknownRater:
            raise HTTPException(status_code=401, detail="unknown rater")
        if item is None:
            return Response(status_code=204)
        return item.to_dict()

    @app.post("/api/rating")
    def rating(body: RatingBody):
        rec = RatingRecord(
            rater_id=body.rater_id,
            sample_id=body.sample_id,
            annotation_source=body.annotation_source,
            score=body.score,
        )
        try:
            store.submit_rating(rec)
        except InvalidScore as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except UnknownRater:
            raise HTTPException(status_code=401, detail="unknown rater")
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"ok": True}

    @app.get("/api/report")
    def report(sources: str | None = None):
        wanted = sources.split(",") if sources else None
        return store.mos_report(wanted)

    from fastapi.staticfiles import StaticFiles

    if media_dir:
        app.mount("/media", StaticFiles(directory=str(media_dir)), name="media")
    if ui_dir:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
