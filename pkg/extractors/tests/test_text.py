"""Word-table subsets and sentence tables."""

import json
import logging

import numpy as np
import pytest

from extractors import (
    BUILTIN_SENTENCE_MODEL, BUILTIN_WORD_MODEL, SENTENCE_DIM,
    ValidationError, WORD_DIM, extract_sentence_table, extract_word_table,
)
from zsaudio import (
    ClassCatalog, ClassRecord, EmbeddingTable, read_embedding_table,
    write_embedding_table,
)


class TestWordTable:
    def test_builtin_covers_every_token(self, tmp_path):
        out = tmp_path / "words.tsv"
        table = extract_word_table(["dog", "bark", "rain"],
                                   BUILTIN_WORD_MODEL, out)
        assert table.dim == WORD_DIM
        assert list(table.ids) == ["dog", "bark", "rain"]
        back = read_embedding_table(out)
        assert back.dim == WORD_DIM and back.kind == "semantic"
        manifest = json.loads((tmp_path / "words.tsv.manifest.json").read_text())
        assert manifest["tokens_oov"] == 0

    def test_duplicates_collapse_keeping_first_position(self, tmp_path):
        table = extract_word_table(["dog", "cat", "dog"],
                                   BUILTIN_WORD_MODEL, tmp_path / "w.tsv")
        assert list(table.ids) == ["dog", "cat"]

    def test_deterministic_across_runs(self, tmp_path):
        for name in ("a.tsv", "b.tsv"):
            extract_word_table(["storm", "quiet"], BUILTIN_WORD_MODEL,
                               tmp_path / name)
        assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()

    def test_empty_vocabulary_writes_an_empty_table(self, tmp_path):
        table = extract_word_table([], BUILTIN_WORD_MODEL, tmp_path / "e.tsv")
        assert len(table) == 0
        back = read_embedding_table(tmp_path / "e.tsv")
        assert len(back) == 0 and back.dim == WORD_DIM

    def test_file_backed_subset_reports_oov(self, tmp_path, caplog):
        source = EmbeddingTable(4, [("dog", [1, 2, 3, 4]),
                                    ("cat", [5, 6, 7, 8])], kind="semantic")
        write_embedding_table(source, tmp_path / "source.tsv")
        with caplog.at_level(logging.WARNING, logger="extractors"):
            table = extract_word_table(["dog", "zeppelin", "cat"],
                                       str(tmp_path / "source.tsv"),
                                       tmp_path / "subset.tsv")
        assert list(table.ids) == ["dog", "cat"]  # out-of-vocabulary token absent
        assert table.dim == 4
        assert np.array_equal(table["dog"], source["dog"])
        assert any("1 of 3" in rec.message for rec in caplog.records)
        manifest = json.loads(
            (tmp_path / "subset.tsv.manifest.json").read_text())
        assert manifest["tokens_oov"] == 1
        assert manifest["tokens_covered"] == 2

    def test_unknown_model_rejected(self, tmp_path):
        with pytest.raises(ValidationError, match="word featurizer"):
            extract_word_table(["dog"], "no-such-model", tmp_path / "w.tsv")


@pytest.fixture
def catalog():
    return ClassCatalog([
        ClassRecord("dog_bark", "dog bark", "A dog barking twice."),
        ClassRecord("rain", "rain", "Steady rain on a roof."),
        ClassRecord("wind", "wind", "A dog barking twice."),  # same text
    ])


class TestSentenceTable:
    def test_one_vector_per_class_in_catalog_order(self, tmp_path, catalog):
        out = tmp_path / "sentences.tsv"
        table = extract_sentence_table(catalog, BUILTIN_SENTENCE_MODEL, out)
        assert table.dim == SENTENCE_DIM
        assert list(table.ids) == ["dog_bark", "rain", "wind"]
        back = read_embedding_table(out)
        assert list(back.ids) == list(catalog.ids)

    def test_same_description_same_vector(self, tmp_path, catalog):
        table = extract_sentence_table(catalog, BUILTIN_SENTENCE_MODEL,
                                       tmp_path / "s.tsv")
        assert np.array_equal(table["dog_bark"], table["wind"])
        assert not np.array_equal(table["dog_bark"], table["rain"])

    def test_tokenization_is_lowercase_and_punctuation_free(self, tmp_path):
        a = ClassCatalog([ClassRecord("x", "x", "Dog Bark!")])
        b = ClassCatalog([ClassRecord("x", "x", "dog bark")])
        ta = extract_sentence_table(a, BUILTIN_SENTENCE_MODEL, tmp_path / "a.tsv")
        tb = extract_sentence_table(b, BUILTIN_SENTENCE_MODEL, tmp_path / "b.tsv")
        assert np.array_equal(ta["x"], tb["x"])

    def test_missing_description_names_the_class(self, tmp_path):
        bare = ClassCatalog([ClassRecord("rain", "rain"),
                             ClassRecord("wind", "wind", "Windy.")])
        with pytest.raises(ValidationError, match="rain"):
            extract_sentence_table(bare, BUILTIN_SENTENCE_MODEL,
                                   tmp_path / "s.tsv")

    def test_deterministic_across_runs(self, tmp_path, catalog):
        for name in ("a.tsv", "b.tsv"):
            extract_sentence_table(catalog, BUILTIN_SENTENCE_MODEL,
                                   tmp_path / name)
        assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()

    def test_pooling_documented_in_manifest(self, tmp_path, catalog):
        extract_sentence_table(catalog, BUILTIN_SENTENCE_MODEL,
                               tmp_path / "s.tsv")
        manifest = json.loads((tmp_path / "s.tsv.manifest.json").read_text())
        assert "mean" in manifest["pooling"]
        assert "caveat" in manifest

    def test_unknown_model_rejected(self, tmp_path, catalog):
        with pytest.raises(ValidationError, match="sentence featurizer"):
            extract_sentence_table(catalog, "bert-large", tmp_path / "s.tsv")
