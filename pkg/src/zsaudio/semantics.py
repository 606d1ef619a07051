"""Assembly of class-level semantic embeddings and clip-level acoustic embeddings.

Label embeddings average the word vectors of the tokens in a class's textual
label; sentence embeddings do the same over a sentence description with stop
words removed first.  Clip-level acoustic embeddings are the componentwise
mean of per-segment vectors.  Tokenization is deliberately simple and
deterministic: ASCII punctuation is replaced by spaces, the text is split on
whitespace, and lowercasing is optional because some word tables are
case-sensitive.
"""

from __future__ import annotations

import logging
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import ClassCatalog, EmbeddingTable, ValidationError

log = logging.getLogger(__name__)

_PUNCT_TO_SPACE = str.maketrans({c: " " for c in string.punctuation})


class NoCoverageError(ValidationError):
    """Raised when no token of a label/description resolves to a word vector."""


@dataclass(frozen=True)
class TokenRule:
    """How text turns into lookup tokens.

    ``stopwords`` only apply to sentence descriptions, never to labels.
    When ``lowercase`` is set the stopword list must already be lowercase,
    otherwise its entries could never match.
    """

    lowercase: bool = False
    stopwords: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))
        if self.lowercase:
            bad = [w for w in self.stopwords if w != w.lower()]
            if bad:
                raise ValidationError(
                    f"stopwords must be lowercase when lowercase=True: {sorted(bad)}")

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = text.lower()
        return text.translate(_PUNCT_TO_SPACE).split()


@dataclass(frozen=True)
class AssemblySpec:
    """One source of per-class vectors: a named (source, word table, rule) triple.

    ``normalize`` rescales each assembled vector to unit L2 norm.  It is off
    by default: plain averages are the reference behavior.
    """

    name: str
    source: str  # "label" or "description"
    word_table: EmbeddingTable
    rule: TokenRule = field(default_factory=TokenRule)
    normalize: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValidationError("assembly spec name must be nonempty")
        if self.source not in ("label", "description"):
            raise ValidationError(
                f"assembly source must be 'label' or 'description', got {self.source!r}")


def _maybe_normalize(vec: np.ndarray, normalize: bool) -> np.ndarray:
    if not normalize:
        return vec
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0 else vec


def read_stopwords(path) -> frozenset[str]:
    """Read a stopword file: one token per line, ``#`` comments, blanks ignored."""
    words = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            token = raw.strip()
            if token and not token.startswith("#"):
                words.append(token)
    return frozenset(words)


def _mean_of_tokens(tokens: Sequence[str], word_table: EmbeddingTable,
                    what: str) -> tuple[np.ndarray, int]:
    """Mean of the in-vocabulary token vectors; returns (vector, oov count)."""
    hits = [word_table[t] for t in tokens if t in word_table]
    oov = len(tokens) - len(hits)
    if not hits:
        raise NoCoverageError(f"no token of {what} is covered by the word table")
    return np.mean(hits, axis=0), oov


def _label_embedding(label: str, word_table: EmbeddingTable,
                     rule: TokenRule) -> tuple[np.ndarray, int, int]:
    if not label:
        raise ValidationError("label must be nonempty")
    tokens = rule.tokenize(label)
    if len(tokens) > 1:
        # some word tables contain whole phrases; prefer those when present
        phrase = "_".join(tokens)
        if phrase in word_table:
            return np.array(word_table[phrase]), 0, 1
    vec, oov = _mean_of_tokens(tokens, word_table, f"label {label!r}")
    return vec, oov, len(tokens)


def _sentence_embedding(description: str, word_table: EmbeddingTable,
                        rule: TokenRule) -> tuple[np.ndarray, int, int]:
    if not description:
        raise ValidationError("description must be nonempty")
    tokens = [t for t in rule.tokenize(description) if t not in rule.stopwords]
    if not tokens:
        raise NoCoverageError(
            f"description {description!r} has no tokens left after stopword removal")
    vec, oov = _mean_of_tokens(tokens, word_table, f"description {description!r}")
    return vec, oov, len(tokens)


def assemble_label_embedding(label: str, word_table: EmbeddingTable,
                             rule: TokenRule = TokenRule(),
                             normalize: bool = False) -> np.ndarray:
    """Average the word vectors of a textual label's tokens.

    Multi-token labels first try the underscore-joined phrase, since word
    tables may contain whole phrases.  Tokens missing from the table are
    skipped; only zero coverage is an error.
    """
    vec, _, _ = _label_embedding(label, word_table, rule)
    return _maybe_normalize(vec, normalize)


def assemble_sentence_embedding(description: str, word_table: EmbeddingTable,
                                rule: TokenRule = TokenRule(),
                                normalize: bool = False) -> np.ndarray:
    """Average the word vectors of a sentence description, stopwords removed."""
    vec, _, _ = _sentence_embedding(description, word_table, rule)
    return _maybe_normalize(vec, normalize)


def aggregate_clip_embedding(segment_vectors: Iterable[Sequence[float]]) -> np.ndarray:
    """Componentwise mean of per-segment acoustic vectors."""
    vectors = [np.asarray(v, dtype=np.float64) for v in segment_vectors]
    if not vectors:
        raise ValidationError("cannot aggregate an empty list of segment vectors")
    dim = vectors[0].shape
    for i, v in enumerate(vectors):
        if v.shape != dim:
            raise ValidationError(
                f"segment {i} has shape {v.shape}, expected {dim}: mixed dimensionality")
    return np.mean(vectors, axis=0)


def concat_embeddings(tables: Sequence[EmbeddingTable]) -> EmbeddingTable:
    """Concatenate tables entry-wise; output dim is the sum of input dims.

    All tables must cover exactly the same ids.  Output entry order follows
    the first table.
    """
    if len(tables) < 2:
        raise ValidationError("concatenation needs at least two tables")
    base_ids = tables[0].ids
    base_set = set(base_ids)
    for t in tables[1:]:
        other = set(t.ids)
        if other != base_set:
            missing = sorted(base_set - other)
            extra = sorted(other - base_set)
            raise ValidationError(
                f"id sets differ: missing {missing or 'none'}, unexpected {extra or 'none'}")
    dim = sum(t.dim for t in tables)
    kind = tables[0].kind
    entries = [(ident, np.concatenate([t[ident] for t in tables])) for ident in base_ids]
    return EmbeddingTable(dim, entries, kind=kind)


def build_class_semantic_table(catalog: ClassCatalog,
                               specs: Sequence[AssemblySpec]) -> EmbeddingTable:
    """Assemble one semantic vector per class: each spec in order, concatenated.

    Per-class out-of-vocabulary counts are logged at INFO level.  A class
    without a description fails any description-sourced spec by name.
    """
    if not specs:
        raise ValidationError("need at least one assembly spec")
    dim = sum(spec.word_table.dim for spec in specs)
    entries = []
    for rec in catalog:
        parts = []
        for spec in specs:
            try:
                if spec.source == "label":
                    part, oov, total = _label_embedding(rec.label, spec.word_table, spec.rule)
                else:
                    if rec.description is None:
                        raise ValidationError(
                            f"class {rec.class_id!r} has no description but spec "
                            f"{spec.name!r} assembles from descriptions")
                    part, oov, total = _sentence_embedding(
                        rec.description, spec.word_table, spec.rule)
            except NoCoverageError:
                raise NoCoverageError(
                    f"class {rec.class_id!r}: no coverage under spec {spec.name!r}") from None
            if oov:
                log.info("class %s / spec %s: %d of %d tokens out of vocabulary",
                         rec.class_id, spec.name, oov, total)
            parts.append(_maybe_normalize(part, spec.normalize))
        vec = np.concatenate(parts) if len(parts) > 1 else parts[0]
        if vec.shape != (dim,):
            raise ValidationError(
                f"class {rec.class_id!r} assembled to dim {vec.size}, expected {dim}")
        entries.append((rec.class_id, vec))
    return EmbeddingTable(dim, entries, kind="semantic")
