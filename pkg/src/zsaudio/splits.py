"""Class-fold construction: category folds, random folds, bin-stratified
folds over class sample counts, and undersampling of oversized classes.

All randomized operations are pure functions of their inputs and a 64-bit
seed.  Fold plans produced here always partition the input class set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import ClassCatalog, FoldPlan, SampleSet, ValidationError

logger = logging.getLogger(__name__)

# Nine right-open sample-count intervals spanning roughly 50..1500 on a log
# scale.  The bin edges are configuration, not a property of the method.
DEFAULT_BIN_EDGES = (50, 75, 110, 170, 250, 380, 560, 850, 1280, 1501)

SETTINGS = ("S1", "S2")


@dataclass(frozen=True)
class BinSpec:
    """Right-open sample-count intervals ``[edges[i], edges[i+1])``.

    Counts below the first edge fall into the first bin and counts at or
    above the last edge into the last, so every class lands somewhere.
    """

    edges: tuple[int, ...] = DEFAULT_BIN_EDGES

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(int(e) for e in self.edges))
        if len(self.edges) < 2:
            raise ValidationError("bin spec needs at least two edges")
        if self.edges[0] < 1:
            raise ValidationError("bin edges must be positive")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValidationError("bin edges must be strictly increasing")

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1

    def bin_of(self, count: int) -> int:
        if count < 1:
            raise ValidationError("sample count must be positive")
        idx = int(np.searchsorted(self.edges, count, side="right")) - 1
        return min(max(idx, 0), self.n_bins - 1)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & (2 ** 64 - 1))


def category_folds(catalog: ClassCatalog, category_map: Mapping[str, str]) -> FoldPlan:
    """One fold per category, in order of first appearance in the catalog."""
    folds: dict[str, list[str]] = {}
    for record in catalog:
        category = category_map.get(record.class_id)
        if category is None:
            raise ValidationError(f"class {record.class_id!r} has no category")
        folds.setdefault(category, []).append(record.class_id)
    return FoldPlan(folds={name: tuple(ids) for name, ids in folds.items()})


def random_folds(catalog: ClassCatalog, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle of the classes, dealt round-robin into k folds."""
    class_ids = list(catalog.ids)
    if k < 1:
        raise ValidationError("fold count must be a positive integer")
    if k > len(class_ids):
        raise ValidationError(f"cannot make {k} folds from {len(class_ids)} classes")
    order = _rng(seed).permutation(len(class_ids))
    folds: list[list[str]] = [[] for _ in range(k)]
    for pos, class_idx in enumerate(order):
        folds[pos % k].append(class_ids[class_idx])
    return FoldPlan(folds={f"Fold{i}": tuple(fold) for i, fold in enumerate(folds)})


def undersample(samples: SampleSet, cap: int = 1500, threshold: int = 1000,
                seed: int = 0) -> SampleSet:
    """Cap the size of classes holding more than ``threshold`` samples.

    Affected classes keep ``min(count, cap)`` samples drawn uniformly
    without replacement; the surviving samples stay in their original
    order.  Classes at or below the threshold pass through untouched.
    """
    if cap < 1:
        raise ValidationError("cap must be a positive integer")
    if threshold < 1:
        raise ValidationError("threshold must be a positive integer")
    if cap < threshold:
        logger.warning(
            "undersample cap %d is below threshold %d; classes between them "
            "will be cut to the cap", cap, threshold)
    counts = samples.class_counts()
    rng = _rng(seed)
    keep_per_class: dict[str, set[int]] = {}
    positions: dict[str, int] = {}
    for class_id in counts:  # first-appearance order, so draws are reproducible
        count = counts[class_id]
        if count > threshold:
            chosen = rng.choice(count, size=min(count, cap), replace=False)
            keep_per_class[class_id] = set(int(i) for i in chosen)
        positions[class_id] = 0
    kept = []
    for record in samples:
        keep = keep_per_class.get(record.class_id)
        if keep is None or positions[record.class_id] in keep:
            kept.append(record)
        positions[record.class_id] += 1
    return SampleSet(kept, binding=samples.binding)


def bin_stratified_folds(samples: SampleSet, catalog: ClassCatalog,
                         bins: BinSpec, k: int, seed: int) -> FoldPlan:
    """Stratified class folds balanced across sample-count bins.

    Each class is assigned to the bin holding its sample count.  Every bin
    is shuffled and split into ``k`` groups whose sizes differ by at most
    one, the group order is permuted, and fold ``i`` is the union of group
    ``i`` across bins.
    """
    if k < 2:
        raise ValidationError("fold count must be at least 2")
    counts = samples.class_counts()
    by_bin: list[list[str]] = [[] for _ in range(bins.n_bins)]
    for record in catalog:
        count = counts.get(record.class_id, 0)
        if count == 0:
            raise ValidationError(f"class {record.class_id!r} has no samples")
        by_bin[bins.bin_of(count)].append(record.class_id)
    rng = _rng(seed)
    folds: list[list[str]] = [[] for _ in range(k)]
    for members in by_bin:
        if not members:
            continue
        order = rng.permutation(len(members))
        group_of_fold = rng.permutation(k)
        b = len(members)
        sizes = [b // k + (1 if g < b % k else 0) for g in range(k)]
        starts = np.concatenate([[0], np.cumsum(sizes)])
        for fold_idx in range(k):
            group = int(group_of_fold[fold_idx])
            for pos in order[starts[group]:starts[group + 1]]:
                folds[fold_idx].append(members[pos])
    return FoldPlan(folds={f"Fold{i}": tuple(fold) for i, fold in enumerate(folds)})


def make_data_setting(plan: FoldPlan, setting: str) -> FoldPlan:
    """Attach the two standard role layouts to a five-fold plan.

    S1 trains the acoustic model on Fold0+Fold1 and runs zero-shot
    train/validation/test on Fold2/Fold3/Fold4.  S2 reuses Fold2+Fold3 as
    acoustic-model training material, keeping the zero-shot roles the same.
    """
    if setting not in SETTINGS:
        raise ValidationError(f"setting must be one of {SETTINGS}")
    needed = [f"Fold{i}" for i in range(5)]
    missing = [name for name in needed if name not in plan.folds]
    if missing:
        raise ValidationError(f"fold plan lacks {missing[0]!r}")
    model_train = ("Fold0", "Fold1") if setting == "S1" else ("Fold2", "Fold3")
    roles = {
        "model-train": model_train,
        "zsl-train": ("Fold2",),
        "zsl-validation": ("Fold3",),
        "zsl-test": ("Fold4",),
    }
    return FoldPlan(folds=dict(plan.folds), roles=roles)


__all__ = [
    "BinSpec", "DEFAULT_BIN_EDGES", "SETTINGS", "category_folds",
    "random_folds", "undersample", "bin_stratified_folds", "make_data_setting",
]
