import csv

import pytest

from capforge.stats import (
    DEFAULT_STOP_WORDS,
    DEFAULT_TAXONOMY,
    CorpusStats,
    FineGrainedTaxonomy,
    corpus_stats,
    count_fine_grained,
    length_histogram_export,
    word_frequencies,
)


class TestCorpusStats:
    def test_empty(self):
        s = corpus_stats([])
        assert s.quantity == 0
        assert s.mean_length_words == 0.0
        assert s.vocab_size == 0

    def test_basic_counts(self):
        s = corpus_stats(["a b c", "d e"])
        assert s.quantity == 2
        assert s.mean_length_words == 2.5
        assert s.vocab_size == 5

    def test_normalization(self):
        s = corpus_stats(["The dog.", "the cat"])
        assert s.vocab == {"the", "dog", "cat"}

    def test_histogram(self):
        s = corpus_stats(["a b", "c d", "e"])
        assert s.length_histogram[2] == 2
        assert s.length_histogram[1] == 1
        assert s.quantity == sum(s.length_histogram.values())

    def test_overflow_bin(self):
        s = corpus_stats([" ".join(["w"] * 300)])
        assert s.length_histogram[120] == 1
        # total word count is exact even for overflowed captions
        assert s.total_words == 300

    def test_merge_equals_concatenation(self):
        left = ["a b c", "d"]
        right = ["e f", "a b"]
        merged = corpus_stats(left).merge(corpus_stats(right))
        combined = corpus_stats(left + right)
        assert merged.quantity == combined.quantity
        assert merged.total_words == combined.total_words
        assert merged.vocab == combined.vocab
        assert merged.length_histogram == combined.length_histogram
        assert merged.mean_length_words == combined.mean_length_words


class TestFineGrained:
    def test_guitar_jazz(self):
        counts = count_fine_grained(["A guitar plays a jazz tune"])
        assert counts.counts["music_instrument"]["Guitar"] == 1
        assert counts.counts["music_genre"]["Jazz"] == 1

    def test_whole_word_rule(self):
        counts = count_fine_grained(["guitars everywhere"])
        assert counts.counts["music_instrument"]["Guitar"] == 0

    def test_plural_opt_in(self):
        counts = count_fine_grained(["guitars everywhere"], match_plurals=True)
        assert counts.counts["music_instrument"]["Guitar"] == 1

    def test_empty_corpus_all_zeros(self):
        counts = count_fine_grained([])
        for category in counts.counts.values():
            assert all(v == 0 for v in category.values())

    def test_presence_not_occurrence(self):
        counts = count_fine_grained(["guitar guitar guitar"])
        assert counts.counts["music_instrument"]["Guitar"] == 1

    def test_multiword_phrase(self):
        counts = count_fine_grained(["some hip hop beats"])
        assert counts.counts["music_genre"]["Hip hop"] == 1

    def test_case_insensitive(self):
        counts = count_fine_grained(["ENGLISH spoken softly"])
        assert counts.counts["spoken_language"]["English"] == 1

    def test_monotone_under_addition(self):
        base = count_fine_grained(["a piano melody"])
        more = count_fine_grained(["a piano melody", "another piano and a flute"])
        for cat in base.counts:
            for cls in base.counts[cat]:
                assert more.counts[cat][cls] >= base.counts[cat][cls]

    def test_default_taxonomy_classes(self):
        tax = FineGrainedTaxonomy()
        assert tax.categories["spoken_language"] == [
            "English", "French", "Chinese", "Japanese", "Arabic",
            "Spanish", "Hindi", "Russian", "German", "Portuguese",
        ]
        for classes in DEFAULT_TAXONOMY.values():
            assert len(classes) == 10

    def test_top_shares(self):
        counts = count_fine_grained(
            ["piano", "piano and violin", "violin", "piano again"]
        )
        shares = counts.top_shares("music_instrument", top=2)
        assert shares[0] == ("Piano", 3 / 5)
        assert shares[1] == ("Violin", 2 / 5)
        assert sum(s for _, s in shares) <= 1.0

    def test_duplicate_class_rejected(self):
        with pytest.raises(ValueError):
            FineGrainedTaxonomy(categories={"x": ["A", "a"]})


class TestWordFrequencies:
    def test_stop_words_excluded(self):
        assert word_frequencies(["the the dog"], {"the"}) == [("dog", 1)]

    def test_all_stop_words(self):
        assert word_frequencies(["the a of"], DEFAULT_STOP_WORDS) == []

    def test_ordering(self):
        assert word_frequencies(["dog dog cat"], set()) == [("dog", 2), ("cat", 1)]

    def test_tie_alphabetical(self):
        out = word_frequencies(["zebra apple"], set())
        assert out == [("apple", 1), ("zebra", 1)]

    def test_punctuation_stripped(self):
        assert word_frequencies(["Dog, dog."], set()) == [("dog", 2)]


class TestHistogramExport:
    def read_rows(self, path):
        with open(path, newline="") as fh:
            return list(csv.reader(fh))

    def test_single_caption(self, tmp_path):
        stats = corpus_stats(["a b"])
        out = tmp_path / "h.csv"
        length_histogram_export(stats, out)
        assert self.read_rows(out) == [["bin", "count"], ["2", "1"]]

    def test_empty_corpus_header_only(self, tmp_path):
        out = tmp_path / "h.csv"
        length_histogram_export(CorpusStats(), out)
        assert self.read_rows(out) == [["bin", "count"]]

    def test_two_same_length(self, tmp_path):
        stats = corpus_stats(["x y z", "p q r"])
        out = tmp_path / "h.csv"
        length_histogram_export(stats, out)
        assert ["3", "2"] in self.read_rows(out)
