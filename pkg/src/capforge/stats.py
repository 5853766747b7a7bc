"""Corpus statistics: caption counts, lengths, vocabulary, fine-grained
class counts, and word frequencies.

Accumulators are mergeable so shards can be processed in parallel and
combined afterwards.
"""

from __future__ import annotations

import csv
import json
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

HISTOGRAM_MAX = 120  # lengths above this land in the overflow bin

DEFAULT_TAXONOMY = {
    "spoken_language": [
        "English", "French", "Chinese", "Japanese", "Arabic",
        "Spanish", "Hindi", "Russian", "German", "Portuguese",
    ],
    "speech_emotion": [
        "Neutral", "Calm", "Angry", "Excited", "Sad",
        "Happy", "Fearful", "Surprised", "Frustrated", "Nervous",
    ],
    "music_instrument": [
        "Guitar", "Bass", "Piano", "Drums", "Violin",
        "Flute", "Trumpet", "Saxophone", "Clarinet", "Harp",
    ],
    "music_genre": [
        "Electronic", "Pop", "Folk", "Rock", "Classical",
        "Country", "Jazz", "Blues", "Hip hop", "Reggae",
    ],
}

DEFAULT_STOP_WORDS = frozenset(
    """a about above after again against all am an and any are aren't as at be
    because been before being below between both but by can cannot could
    couldn't did didn't do does doesn't doing don't down during each few for
    from further had hadn't has hasn't have haven't having he her here hers
    herself him himself his how i if in into is isn't it its itself just me
    more most my myself no nor not of off on once only or other our ours
    ourselves out over own same she should shouldn't so some such than that
    the their theirs them themselves then there these they this those through
    to too under until up very was wasn't we were weren't what when where
    which while who whom why will with won't would wouldn't you your yours
    yourself yourselves""".split()
)

_PUNCT_STRIP = string.punctuation + "‘’“”"


def normalize_token(token: str) -> str:
    return token.lower().strip(_PUNCT_STRIP)


def tokenize(caption: str) -> list[str]:
    return caption.split()


@dataclass
class CorpusStats:
    quantity: int = 0
    total_words: int = 0
    vocab: set[str] = field(default_factory=set)
    length_histogram: Counter = field(default_factory=Counter)

    @property
    def mean_length_words(self) -> float:
        return self.total_words / self.quantity if self.quantity else 0.0

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def add(self, caption: str) -> None:
        tokens = tokenize(caption)
        self.quantity += 1
        self.total_words += len(tokens)
        self.length_histogram[min(len(tokens), HISTOGRAM_MAX)] += 1
        for tok in tokens:
            norm = normalize_token(tok)
            if norm:
                self.vocab.add(norm)

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        merged = CorpusStats(
            quantity=self.quantity + other.quantity,
            total_words=self.total_words + other.total_words,
            vocab=self.vocab | other.vocab,
            length_histogram=self.length_histogram + other.length_histogram,
        )
        return merged

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "mean_length_words": self.mean_length_words,
            "vocab_size": self.vocab_size,
            "length_histogram": {
                str(k): v for k, v in sorted(self.length_histogram.items())
            },
        }


def corpus_stats(captions: Iterable[str]) -> CorpusStats:
    stats = CorpusStats()
    for caption in captions:
        stats.add(caption)
    return stats


@dataclass
class FineGrainedTaxonomy:
    categories: dict[str, list[str]] = field(
        default_factory=lambda: {k: list(v) for k, v in DEFAULT_TAXONOMY.items()}
    )

    def __post_init__(self):
        for name, classes in self.categories.items():
            if len(set(c.lower() for c in classes)) != len(classes):
                raise ValueError(f"duplicate class keyword in {name}")

    @classmethod
    def from_file(cls, path: str | Path) -> "FineGrainedTaxonomy":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(categories={k: list(v) for k, v in data.items()})


@dataclass
class FineGrainedCounts:
    counts: dict[str, Counter] = field(default_factory=dict)

    def top_shares(self, category: str, top: int = 5) -> list[tuple[str, float]]:
        """Share of each of the top classes among all matches in a category
        (pie-chart export)."""
        counter = self.counts.get(category, Counter())
        total = sum(counter.values())
        if total == 0:
            return []
        return [(cls, n / total) for cls, n in counter.most_common(top)]

    def to_dict(self) -> dict:
        return {
            cat: {cls: int(n) for cls, n in sorted(counter.items())}
            for cat, counter in self.counts.items()
        }


def _class_pattern(keyword: str, plural: bool) -> re.Pattern:
    escaped = re.escape(keyword).replace(r"\ ", r"\s+")
    suffix = r"(?:s|es)?" if plural else ""
    return re.compile(rf"\b{escaped}{suffix}\b", re.IGNORECASE)


def count_fine_grained(
    captions: Iterable[str],
    tax: FineGrainedTaxonomy | None = None,
    match_plurals: bool = False,
) -> FineGrainedCounts:
    """Per-caption presence counts of each taxonomy class.

    Whole-word, case-insensitive matching; multi-word classes match as a
    phrase. A caption increments a class at most once.
    """
    tax = tax or FineGrainedTaxonomy()
    patterns = {
        cat: [(cls, _class_pattern(cls, match_plurals)) for cls in classes]
        for cat, classes in tax.categories.items()
    }
    result = FineGrainedCounts(
        counts={cat: Counter({cls: 0 for cls in classes})
                for cat, classes in tax.categories.items()}
    )
    for caption in captions:
        for cat, class_patterns in patterns.items():
            for cls, pattern in class_patterns:
                if pattern.search(caption):
                    result.counts[cat][cls] += 1
    return result


def word_frequencies(
    captions: Iterable[str], stop_words: frozenset[str] | set[str] = DEFAULT_STOP_WORDS
) -> list[tuple[str, int]]:
    """Token frequencies excluding stop words, descending by count then
    alphabetical."""
    counter: Counter = Counter()
    for caption in captions:
        for tok in tokenize(caption):
            norm = normalize_token(tok)
            if norm and norm not in stop_words:
                counter[norm] += 1
    return sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))


def length_histogram_export(stats: CorpusStats, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "count"])
        for length in sorted(stats.length_histogram):
            writer.writerow([length, stats.length_histogram[length]])


def word_frequencies_export(
    freqs: list[tuple[str, int]], path: str | Path, top: int = 100
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["token", "count"])
        for token, count in freqs[:top]:
            writer.writerow([token, count])


def load_stop_words(path: str | Path) -> frozenset[str]:
    words = Path(path).read_text(encoding="utf-8").split()
    return frozenset(w.lower() for w in words)
