"""Splitting classes into folds: by category, at random, and stratified
by sample count, plus the two standard role assignments.

The packaged 50-class catalog of environmental sounds drives the first
two strategies; a synthetic long-tailed corpus drives the third.
"""

import json
from importlib import resources

from zsaudio import (
    BinSpec, ClassCatalog, ClassRecord, SampleRecord, SampleSet,
    bin_stratified_folds, category_folds, make_data_setting,
    random_folds, read_class_catalog, undersample,
)

fixtures = resources.files("zsaudio") / "fixtures"
catalog = read_class_catalog(fixtures / "esc50_catalog.jsonl")
print(f"catalog: {len(catalog)} classes, e.g. "
      f"{[r.class_id for r in list(catalog)[:4]]}")

# --- category folds -----------------------------------------------------
# One fold per semantic category: the hardest zero-shot regime, since
# test classes share no category with anything seen in training.
categories = json.loads((fixtures / "esc50_categories.json").read_text())
by_category = category_folds(catalog, categories)
for name, members in by_category.folds.items():
    print(f"  {name}: {len(members)} classes")

# --- random folds -------------------------------------------------------
by_chance = random_folds(catalog, k=5, seed=7)
print("\nrandom folds:", {n: len(m) for n, m in by_chance.folds.items()})
print("Fold0 sample:", by_chance.folds["Fold0"][:4])

# Role assignment: setting S1 trains the embedding model on Fold0+1,
# setting S2 on Fold2+3 (overlapping the zero-shot side, which is the
# leakage comparison the two settings exist to measure).  Both use
# Fold2/Fold3/Fold4 as zero-shot train/validation/test.
for setting in ("S1", "S2"):
    plan = make_data_setting(by_chance, setting)
    print(f"{setting}: {plan.roles}")

# --- sample-count stratification -----------------------------------------
# A long-tailed synthetic corpus: class sizes spread over the standard
# bin edges, so every fold should receive a fair share of rare and
# common classes alike.
bins = BinSpec()
records = []
sizes = [55, 80, 120, 200, 300, 400, 600, 900, 1300, 1400]
for i, size in enumerate(sizes):
    records += [SampleRecord(f"c{i}_s{n}", f"c{i}") for n in range(size)]
samples = SampleSet(records)
tail_catalog = ClassCatalog([ClassRecord(f"c{i}", f"c{i}")
                             for i in range(len(sizes))])

print("\nbin of each class:",
      {f"c{i}": bins.bin_of(size) for i, size in enumerate(sizes)})
stratified = bin_stratified_folds(samples, tail_catalog, bins, k=2, seed=0)
print("stratified folds:", dict(stratified.folds))

# Oversized classes can be capped first (sampling without replacement,
# original order kept).
capped = undersample(samples, cap=1000, threshold=800, seed=0)
print("\nafter capping at 1000:",
      {c: n for c, n in capped.class_counts().items() if n != dict(
          zip([f"c{i}" for i in range(len(sizes))], sizes))[c]})
