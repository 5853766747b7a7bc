import json

import pytest

from capforge.catalog import (
    AudioItem,
    CaptionRecord,
    Checkpoint,
    ExtractionRecord,
    load_checkpoint,
    load_manifest,
    resume_filter,
    save_checkpoint,
    write_shard,
)
from capforge.errors import ConfigMismatch, DuplicateId, ParseError


def make_record(audio_id: str) -> CaptionRecord:
    return CaptionRecord(
        audio_id=audio_id,
        caption=f"caption for {audio_id}",
        extraction=ExtractionRecord(overall="o", speech="s", music="m"),
        attempts=[(f"caption for {audio_id}", 0.5)],
        benchmark_score=0.4,
        accepted=True,
        pipeline_config_hash="abc",
    )


class TestLoadManifest:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        assert load_manifest(path) == []

    def test_two_rows_in_order(self, tmp_path):
        path = tmp_path / "m.jsonl"
        rows = [
            {"audio_id": "a", "audio_uri": "u1", "labels": ["X"]},
            {"audio_id": "b", "audio_uri": "u2", "labels": []},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows))
        items = load_manifest(path)
        assert [i.audio_id for i in items] == ["a", "b"]
        assert items[0].labels == ["X"]

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "m.jsonl"
        row = json.dumps({"audio_id": "a", "audio_uri": "u"})
        path.write_text(row + "\n" + row + "\n")
        with pytest.raises(DuplicateId):
            load_manifest(path)

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"audio_id": "a", "audio_uri": "u"}\nnot json\n')
        with pytest.raises(ParseError) as exc:
            load_manifest(path)
        assert exc.value.line_no == 2

    def test_missing_field(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text('{"audio_id": "a"}\n')
        with pytest.raises(ParseError):
            load_manifest(path)

    def test_csv_format(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text(
            "audio_id,audio_uri,labels,duration_s\n"
            "a,u1,Dog;Bark,10.0\n"
            "b,u2,,\n"
        )
        items = load_manifest(path, format="csv")
        assert items[0].labels == ["Dog", "Bark"]
        assert items[1].labels == []
        assert items[1].duration_s is None

    def test_untrimmed_label_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(json.dumps({"audio_id": "a", "audio_uri": "u", "labels": [" x"]}))
        with pytest.raises(ParseError):
            load_manifest(path)


class TestWriteShard:
    def test_zero_records(self, tmp_path):
        assert write_shard([], tmp_path, 2) == []

    def test_shard_sizes(self, tmp_path):
        records = [make_record(f"id{i}") for i in range(5)]
        paths = write_shard(records, tmp_path, 2)
        assert len(paths) == 3
        sizes = [len(p.read_text().splitlines()) for p in paths]
        assert sizes == [2, 2, 1]

    def test_sorted_by_audio_id(self, tmp_path):
        records = [make_record(x) for x in ["c", "a", "b"]]
        paths = write_shard(records, tmp_path, 10)
        ids = [json.loads(l)["audio_id"] for l in paths[0].read_text().splitlines()]
        assert ids == ["a", "b", "c"]

    def test_byte_identical_reruns(self, tmp_path):
        records = [make_record(f"id{i}") for i in range(7)]
        p1 = write_shard(records, tmp_path / "r1", 3)
        p2 = write_shard(list(reversed(records)), tmp_path / "r2", 3)
        for a, b in zip(p1, p2):
            assert a.read_bytes() == b.read_bytes()

    def test_bad_shard_size(self, tmp_path):
        with pytest.raises(ValueError):
            write_shard([], tmp_path, 0)


class TestResumeFilter:
    def _items(self, ids):
        return [AudioItem(audio_id=i, audio_uri=f"u{i}") for i in ids]

    def test_empty_checkpoint(self):
        items = self._items(["a", "b"])
        ckpt = Checkpoint(completed_ids=set(), config_hash="h")
        assert resume_filter(items, ckpt, "h") == items

    def test_all_completed(self):
        items = self._items(["a", "b"])
        ckpt = Checkpoint(completed_ids={"a", "b"}, config_hash="h")
        assert resume_filter(items, ckpt, "h") == []

    def test_partial(self):
        items = self._items(["a", "b", "c"])
        ckpt = Checkpoint(completed_ids={"b"}, config_hash="h")
        assert [i.audio_id for i in resume_filter(items, ckpt, "h")] == ["a", "c"]

    def test_config_mismatch(self):
        ckpt = Checkpoint(completed_ids=set(), config_hash="old")
        with pytest.raises(ConfigMismatch):
            resume_filter([], ckpt, "new")


class TestCheckpointFile:
    def test_roundtrip(self, tmp_path):
        ckpt = Checkpoint(completed_ids={"b", "a"}, config_hash="deadbeef")
        path = tmp_path / "ckpt.txt"
        save_checkpoint(ckpt, path)
        loaded = load_checkpoint(path)
        assert loaded.completed_ids == {"a", "b"}
        assert loaded.config_hash == "deadbeef"
        # header line format per the file contract
        assert path.read_text().splitlines()[0] == "config_hash=deadbeef"

    def test_missing_header(self, tmp_path):
        path = tmp_path / "ckpt.txt"
        path.write_text("a\nb\n")
        with pytest.raises(ParseError):
            load_checkpoint(path)


def test_caption_record_roundtrip():
    rec = make_record("x")
    assert CaptionRecord.from_dict(rec.to_dict()) == rec
