"""Word and sentence embeddings in the corpus table format.

Two featurizer families are built in, both deterministic:

* ``hashed-gaussian-300/v1`` — every token maps to a 300-d Gaussian
  vector seeded from a hash of (model id, token).  Used for word-table
  subsets; by construction nothing is out of vocabulary.
* ``hashed-bow-1024/v1`` — a sentence is the mean of 1024-d hash-seeded
  token vectors (the pooling choice is recorded in the output manifest).

``extract_word_table`` alternatively accepts a path to an existing
embedding-table file as the model, in which case it exports the subset
of requested tokens and reports how many were out of vocabulary.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from zsaudio import (
    ClassCatalog, EmbeddingTable, TokenRule, ValidationError,
    read_embedding_table, write_embedding_table,
)

from .jobs import seed_from, write_output_manifest

log = logging.getLogger("extractors")

WORD_DIM = 300
SENTENCE_DIM = 1024
BUILTIN_WORD_MODEL = "hashed-gaussian-300/v1"
BUILTIN_SENTENCE_MODEL = "hashed-bow-1024/v1"

_TOKEN_RULE = TokenRule(lowercase=True)


def _hashed_vector(model: str, token: str, dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed_from(model, token))
    return rng.standard_normal(dim)


def extract_word_table(vocabulary, model: str, out) -> EmbeddingTable:
    """Write a word-vector table covering the requested tokens.

    With the builtin model every token is covered.  With a table file as
    the model, tokens absent from the file are left out of the output and
    counted in the log and the output manifest.
    """
    requested = list(dict.fromkeys(str(t) for t in vocabulary))
    if model == BUILTIN_WORD_MODEL:
        dim = WORD_DIM
        entries = [(t, _hashed_vector(model, t, dim)) for t in requested]
        oov: list[str] = []
        note = "hash-seeded Gaussian token vectors"
    elif Path(model).exists():
        source = read_embedding_table(model)
        dim = source.dim
        entries = [(t, source[t]) for t in requested if t in source]
        oov = [t for t in requested if t not in source]
        note = "subset of a word-vector table file"
    else:
        raise ValidationError(
            f"unknown word featurizer {model!r}; use {BUILTIN_WORD_MODEL!r} "
            "or a path to an embedding-table file")
    if oov:
        log.warning("%d of %d requested tokens out of vocabulary",
                    len(oov), len(requested))

    table = EmbeddingTable(dim, entries, kind="semantic")
    write_embedding_table(table, out)
    write_output_manifest(out, {
        "kind": "word-table-subset",
        "model": model,
        "model_note": note,
        "dim": dim,
        "tokens_requested": len(requested),
        "tokens_covered": len(entries),
        "tokens_oov": len(oov),
    })
    return table


def extract_sentence_table(catalog: ClassCatalog, model: str,
                           out) -> EmbeddingTable:
    """One sentence vector per class description, in catalog order."""
    if model != BUILTIN_SENTENCE_MODEL:
        raise ValidationError(
            f"unknown sentence featurizer {model!r}; "
            f"use {BUILTIN_SENTENCE_MODEL!r}")
    entries = []
    for record in catalog:
        if not record.description:
            raise ValidationError(
                f"class {record.class_id!r} has no description")
        tokens = _TOKEN_RULE.tokenize(record.description)
        if not tokens:
            raise ValidationError(
                f"class {record.class_id!r} has a description with no tokens")
        vectors = [_hashed_vector(model, t, SENTENCE_DIM) for t in tokens]
        entries.append((record.class_id, np.mean(vectors, axis=0)))

    table = EmbeddingTable(SENTENCE_DIM, entries, kind="semantic")
    write_embedding_table(table, out)
    write_output_manifest(out, {
        "kind": "sentence-table",
        "model": model,
        "model_note": "hashed bag of words",
        "dim": SENTENCE_DIM,
        "pooling": "mean over hash-seeded token vectors, lowercase "
                   "punctuation-stripped tokenization",
        "classes": len(entries),
    })
    return table
