"""Evaluation: Top-1 accuracy, single-label mAP, analytic random-guess
baselines, and McNemar's paired test between two classifiers.

Everything here assumes single-label data, where the average precision of
one sample collapses to the reciprocal rank of its true class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .corpus import CompatibilityModel, EmbeddingTable, SampleSet, ValidationError
from .compat import ScoredClassList, score_classes


@dataclass(frozen=True)
class EvalReport:
    n_samples: int
    top1: float
    map: float
    per_sample: tuple[tuple[str, str, int, float], ...] | None = None
    """Optional per-sample detail: (sample_id, predicted, rank of truth, AP)."""

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("report needs at least one sample")
        if not 0.0 <= self.top1 <= 1.0:
            raise ValidationError("top1 must lie in [0, 1]")
        if not 0.0 <= self.map <= 1.0:
            raise ValidationError("map must lie in [0, 1]")

    def to_json(self) -> str:
        payload = {"n_samples": self.n_samples, "top1": self.top1, "map": self.map}
        if self.per_sample is not None:
            payload["per_sample"] = [list(row) for row in self.per_sample]
        return json.dumps(payload, indent=2)


@dataclass(frozen=True)
class ContingencyTable:
    """Paired-correctness counts of two classifiers on the same samples."""

    both_correct: int
    a_only: int
    b_only: int
    both_wrong: int

    def __post_init__(self):
        for name in ("both_correct", "a_only", "b_only", "both_wrong"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")

    @property
    def n_samples(self) -> int:
        return self.both_correct + self.a_only + self.b_only + self.both_wrong


class Baseline(NamedTuple):
    map: float
    top1: float


class McNemarResult(NamedTuple):
    statistic: float
    p_value: float


def top1(predictions: Sequence[str], truths: Sequence[str]) -> float:
    """Fraction of positions where prediction equals truth."""
    if len(predictions) != len(truths):
        raise ValidationError(
            f"got {len(predictions)} predictions for {len(truths)} truths")
    if not truths:
        raise ValidationError("cannot score an empty prediction list")
    correct = sum(1 for p, t in zip(predictions, truths) if p == t)
    return correct / len(truths)


def average_precision(ranked: ScoredClassList, truth: str) -> float:
    """Single-label AP: reciprocal of the 1-based rank of the true class."""
    try:
        return 1.0 / ranked.rank_of(truth)
    except KeyError:
        raise ValidationError(f"true class {truth!r} is not among the ranked classes") from None


def evaluate(model: CompatibilityModel, test_set: SampleSet,
             acoustic_table: EmbeddingTable, semantic_table: EmbeddingTable,
             candidates, with_per_sample: bool = True) -> EvalReport:
    """Classify every sample into the candidate classes and aggregate.

    Each sample is scored against all candidates; Top-1 counts exact
    argmax hits and mAP averages the reciprocal rank of the truth.
    """
    if len(test_set) == 0:
        raise ValidationError("test set is empty")
    candidate_set = set(candidates)
    correct = 0
    ap_total = 0.0
    detail = []
    for record in test_set:
        if record.sample_id not in acoustic_table:
            raise ValidationError(f"no acoustic embedding for sample {record.sample_id!r}")
        if record.class_id not in candidate_set:
            raise ValidationError(
                f"sample {record.sample_id!r} has class {record.class_id!r} "
                "outside the candidate set")
        ranked = score_classes(model, acoustic_table[record.sample_id],
                               semantic_table, candidates)
        predicted = ranked.top()
        rank = ranked.rank_of(record.class_id)
        correct += predicted == record.class_id
        ap_total += 1.0 / rank
        if with_per_sample:
            detail.append((record.sample_id, predicted, rank, 1.0 / rank))
    n = len(test_set)
    return EvalReport(
        n_samples=n,
        top1=correct / n,
        map=ap_total / n,
        per_sample=tuple(detail) if with_per_sample else None,
    )


def random_baseline(k: int) -> Baseline:
    """Expected (mAP, Top-1) of a uniformly random ranking of k classes.

    The truth's rank is uniform on 1..k, so Top-1 is 1/k and the expected
    reciprocal rank is the k-th harmonic number over k.
    """
    if k < 1:
        raise ValidationError("class count must be a positive integer")
    harmonic = sum(1.0 / i for i in range(1, k + 1))
    return Baseline(map=harmonic / k, top1=1.0 / k)


def mcnemar(table: ContingencyTable) -> McNemarResult:
    """Continuity-corrected McNemar's test on the discordant pairs.

    The statistic is ``(|a_only - b_only| - 1)^2 / (a_only + b_only)``,
    clamped to zero when the corrected difference would go negative.  The
    p-value is the chi-squared(1) upper tail, computed as
    ``erfc(sqrt(x / 2))``; with double-precision ``math.erfc`` this is
    accurate to well over six significant digits for statistics up to 200.
    """
    discordant = table.a_only + table.b_only
    if discordant == 0:
        raise ValidationError("no discordant pairs; the test is undefined")
    corrected = abs(table.a_only - table.b_only) - 1
    statistic = max(corrected, 0) ** 2 / discordant
    return McNemarResult(statistic=statistic, p_value=math.erfc(math.sqrt(statistic / 2.0)))


def build_contingency(preds_a: Sequence[str], preds_b: Sequence[str],
                      truths: Sequence[str]) -> ContingencyTable:
    """Cross-tabulate the correctness of two prediction lists."""
    if not len(preds_a) == len(preds_b) == len(truths):
        raise ValidationError(
            f"length mismatch: {len(preds_a)} vs {len(preds_b)} predictions "
            f"for {len(truths)} truths")
    both = a_only = b_only = neither = 0
    for a, b, t in zip(preds_a, preds_b, truths):
        a_hit, b_hit = a == t, b == t
        if a_hit and b_hit:
            both += 1
        elif a_hit:
            a_only += 1
        elif b_hit:
            b_only += 1
        else:
            neither += 1
    return ContingencyTable(both_correct=both, a_only=a_only,
                            b_only=b_only, both_wrong=neither)


__all__ = [
    "EvalReport", "ContingencyTable", "Baseline", "McNemarResult", "top1",
    "average_precision", "evaluate", "random_baseline", "mcnemar",
    "build_contingency",
]
