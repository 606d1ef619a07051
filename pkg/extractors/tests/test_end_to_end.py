"""Toy-corpus acceptance: extract all three embedding kinds for a
10-clip, 10-class corpus and drive a full train + evaluate run through
the training toolkit's command line.  One visible pass/fail line."""

import json

import numpy as np
import pytest

from extractors import (
    AUDIO_DIM, BUILTIN_AUDIO_MODEL, BUILTIN_SENTENCE_MODEL,
    BUILTIN_WORD_MODEL, ExtractionJob, SENTENCE_DIM, WORD_DIM, run_job,
)
from zsaudio import (
    SampleRecord, SampleSet, TokenRule, read_class_catalog,
    read_embedding_table, write_sample_set,
)
from zsaudio.cli import main as zsaudio_cli

from conftest import sine, write_wav

LABELS = ["dog bark", "rain fall", "sea waves", "crying baby", "clock tick",
          "sneeze burst", "helicopter pass", "chainsaw cut", "rooster crow",
          "fire crackle"]


@pytest.fixture
def corpus(tmp_path):
    """Ten classes, two clips each, plus catalog and sample files."""
    rng = np.random.default_rng(0)
    records, manifest = [], []
    catalog_lines = []
    for i, label in enumerate(LABELS):
        class_id = label.replace(" ", "_")
        catalog_lines.append(json.dumps({
            "class_id": class_id, "label": label,
            "description": f"The sound of {label}, recorded indoors."}))
        for n in range(2):
            clip_id = f"{class_id}_{n}"
            # distinct tone per class + a little noise per clip; one clip
            # per class is 44.1 kHz to exercise resampling
            rate = 44100 if n else 16000
            signal = (sine(1.1, rate, 300.0 + 150.0 * i)
                      + 0.05 * rng.standard_normal(int(1.1 * rate)))
            write_wav(tmp_path / f"{clip_id}.wav", signal, rate)
            manifest.append((clip_id, tmp_path / f"{clip_id}.wav"))
            records.append(SampleRecord(clip_id, class_id))
    (tmp_path / "catalog.jsonl").write_text("\n".join(catalog_lines) + "\n")
    write_sample_set(SampleSet(records), tmp_path / "samples.tsv")
    return tmp_path, manifest


def test_toy_corpus_end_to_end(corpus, capsys):
    root, manifest = corpus
    catalog = read_class_catalog(root / "catalog.jsonl")

    # --- extraction: one table per kind, via the job dispatcher --------
    acoustic = run_job(ExtractionJob("audio-clip", manifest,
                                     BUILTIN_AUDIO_MODEL,
                                     root / "acoustic.tsv"))

    rule = TokenRule(lowercase=True)
    vocabulary = [t for record in catalog for t in rule.tokenize(record.label)]
    words = run_job(ExtractionJob("word-table-subset",
                                  [(t, t) for t in dict.fromkeys(vocabulary)],
                                  BUILTIN_WORD_MODEL, root / "words.tsv"))

    sentences = run_job(ExtractionJob(
        "sentence-table",
        [(r.class_id, r.description) for r in catalog],
        BUILTIN_SENTENCE_MODEL, root / "sentences.tsv"))

    # every output must reload through corpus validation with its
    # advertised dimensionality
    dims = {read_embedding_table(root / name).dim
            for name in ("acoustic.tsv", "words.tsv", "sentences.tsv")}
    assert dims == {AUDIO_DIM, WORD_DIM, SENTENCE_DIM} == {128, 300, 1024}
    assert list(acoustic.ids) == [i for i, _ in manifest]
    assert list(sentences.ids) == list(catalog.ids)
    assert set(vocabulary) <= set(words.ids)

    # --- feed the training toolkit end to end --------------------------
    spec = [
        {"name": "label-mean", "source": "label",
         "word_table": str(root / "words.tsv"), "lowercase": True},
        {"name": "sentence", "source": "table",
         "table": str(root / "sentences.tsv")},
    ]
    (root / "spec.json").write_text(json.dumps(spec))
    (root / "config.json").write_text(json.dumps({"epochs": 3}))

    steps = [
        ["split", "--strategy", "random", "--k", "5", "--seed", "0",
         "--setting", "S1", "--catalog", str(root / "catalog.jsonl"),
         "--out", str(root / "plan.json")],
        ["assemble", "--catalog", str(root / "catalog.jsonl"),
         "--spec", str(root / "spec.json"), "--out", str(root / "semantic.tsv")],
        ["train", "--plan", str(root / "plan.json"),
         "--acoustic", str(root / "acoustic.tsv"),
         "--semantic", str(root / "semantic.tsv"),
         "--samples", str(root / "samples.tsv"),
         "--config", str(root / "config.json"),
         "--out", str(root / "model.tsv")],
        ["predict", "--model", str(root / "model.tsv"),
         "--acoustic", str(root / "acoustic.tsv"),
         "--semantic", str(root / "semantic.tsv"),
         "--samples", str(root / "samples.tsv"),
         "--plan", str(root / "plan.json"), "--restrict",
         "--out", str(root / "predictions.tsv")],
        ["evaluate", "--model", str(root / "model.tsv"),
         "--acoustic", str(root / "acoustic.tsv"),
         "--semantic", str(root / "semantic.tsv"),
         "--samples", str(root / "samples.tsv"),
         "--plan", str(root / "plan.json"), "--restrict",
         "--out", str(root / "report.json")],
    ]
    for argv in steps:
        assert zsaudio_cli(argv) == 0, f"step {argv[0]} failed"

    semantic = read_embedding_table(root / "semantic.tsv")
    assert semantic.dim == WORD_DIM + SENTENCE_DIM  # hybrid: label + sentence

    report = json.loads((root / "report.json").read_text())
    ok = (report["n_samples"] == 4  # 2 zero-shot test classes x 2 clips
          and 0.0 <= report["top1"] <= 1.0 and 0.0 <= report["map"] <= 1.0)
    with capsys.disabled():
        print(f"{'PASS' if ok else 'FAIL'}  toy-corpus-end-to-end: "
              f"dims {{128, 300, 1024}}, train+evaluate completed, "
              f"test top1={report['top1']:.2f} map={report['map']:.2f} "
              f"on {report['n_samples']} clips", flush=True)
    assert ok
