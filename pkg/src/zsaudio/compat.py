"""Bilinear compatibility scoring and the zero-shot classifier built on it.

An instance with acoustic embedding ``a`` is scored against a class with
semantic embedding ``s`` by the bilinear form ``a @ W @ s``; classification
is the argmax of that score over the candidate classes.  Scores are always
computed in double precision so rank decisions stay stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import CompatibilityModel, EmbeddingTable, ValidationError


@dataclass(frozen=True)
class ScoredClassList:
    """Candidate classes sorted by score descending.

    Ties are broken by semantic-table entry order, which keeps evaluation
    deterministic and independent of any seed.
    """

    entries: tuple[tuple[str, float], ...]

    def top(self) -> str:
        return self.entries[0][0]

    def rank_of(self, class_id: str) -> int:
        """1-based position of ``class_id`` in the sorted list."""
        for pos, (cid, _) in enumerate(self.entries, start=1):
            if cid == class_id:
                return pos
        raise KeyError(f"class {class_id!r} not among the scored candidates")

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def _check_vector(vec: np.ndarray, dim: int, what: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (dim,):
        raise ValidationError(f"{what} has shape {vec.shape}, expected ({dim},)")
    if not np.all(np.isfinite(vec)):
        raise ValidationError(f"{what} contains non-finite components")
    return vec


def project(model: CompatibilityModel, acoustic) -> np.ndarray:
    """Project an acoustic embedding into the semantic space: ``W.T @ a``."""
    a = _check_vector(acoustic, model.acoustic_dim, "acoustic embedding")
    return model.weights.T @ a


def compatibility(model: CompatibilityModel, acoustic, semantic) -> float:
    """Bilinear score ``a @ W @ s`` of an instance against one class."""
    a = _check_vector(acoustic, model.acoustic_dim, "acoustic embedding")
    s = _check_vector(semantic, model.semantic_dim, "semantic embedding")
    return float(a @ model.weights @ s)


def score_candidates(model: CompatibilityModel, acoustic,
                     semantic_table: EmbeddingTable,
                     candidates) -> tuple[list[str], np.ndarray]:
    """Scores for ``candidates`` ordered by semantic-table entry order.

    Returns ``(ordered candidate ids, scores)``; the table-order layout is
    what makes downstream argmax tie-breaking deterministic.
    """
    wanted = set(candidates)
    if not wanted:
        raise ValidationError("candidate set must be nonempty")
    unknown = wanted.difference(semantic_table.ids)
    if unknown:
        raise ValidationError(f"unknown candidate ids: {sorted(unknown)}")
    ordered = [cid for cid in semantic_table.ids if cid in wanted]
    a = _check_vector(acoustic, model.acoustic_dim, "acoustic embedding")
    projected = model.weights.T @ a
    scores = semantic_table.matrix(ordered) @ projected
    return ordered, scores


def score_classes(model: CompatibilityModel, acoustic,
                  semantic_table: EmbeddingTable, candidates) -> ScoredClassList:
    """Rank every candidate class by compatibility with the instance."""
    ordered, scores = score_candidates(model, acoustic, semantic_table, candidates)
    # stable sort on negated score keeps table order within ties
    order = np.argsort(-scores, kind="stable")
    return ScoredClassList(tuple((ordered[i], float(scores[i])) for i in order))


def classify(model: CompatibilityModel, acoustic,
             semantic_table: EmbeddingTable, candidates) -> str:
    """Most compatible candidate class for the instance."""
    ordered, scores = score_candidates(model, acoustic, semantic_table, candidates)
    return ordered[int(np.argmax(scores))]
