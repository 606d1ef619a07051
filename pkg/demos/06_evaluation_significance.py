"""Evaluating classifiers and testing whether two of them differ.

Covers Top-1 accuracy, single-label mean average precision (mAP = mean
of 1/rank of the truth), the closed-form random-guess baseline, and the
paired discordant-count significance test.
"""

import numpy as np

from zsaudio import (
    CompatibilityModel, ContingencyTable, EmbeddingTable, SampleRecord,
    SampleSet, build_contingency, classify, evaluate, mcnemar,
    random_baseline,
)

rng = np.random.default_rng(5)
dim = 6
classes = [f"c{i}" for i in range(10)]
means = rng.standard_normal((10, dim)) * 2.0
semantic = EmbeddingTable(dim, [(c, means[i]) for i, c in enumerate(classes)],
                          kind="semantic")

entries, records = [], []
for i, c in enumerate(classes):
    for n in range(30):
        sid = f"{c}_{n}"
        entries.append((sid, means[i] + 1.5 * rng.standard_normal(dim)))
        records.append(SampleRecord(sid, c))
acoustic = EmbeddingTable(dim, entries, kind="acoustic")
samples = SampleSet(records)

# Two models: an informed one (identity weights work here because the
# semantic vectors are the cluster means) and a random one.
informed = CompatibilityModel(weights=np.eye(dim))
random_w = CompatibilityModel(weights=rng.standard_normal((dim, dim)))

for name, model in (("informed", informed), ("random", random_w)):
    report = evaluate(model, samples, acoustic, semantic, classes)
    print(f"{name:>8}: top1={report.top1:.3f} map={report.map:.3f}")

# Per-sample detail: predicted class, rank of the truth, 1/rank.
report = evaluate(informed, samples, acoustic, semantic, classes)
for sample_id, predicted, rank, ap in report.per_sample[:3]:
    print(f"  {sample_id}: predicted={predicted} truth_rank={rank} ap={ap:.2f}")

# Chance level for k classes: top1 = 1/k, map = (1 + 1/2 + ... + 1/k)/k.
base = random_baseline(10)
print(f"\nrandom-guess baseline, 10 classes: "
      f"top1={base.top1:.2f} map={base.map:.4f}")

# Are the two models different, or is the gap chance?  The test looks
# only at discordant pairs: samples exactly one model gets right.
preds_a = [classify(informed, acoustic[r.sample_id], semantic, classes)
           for r in records]
preds_b = [classify(random_w, acoustic[r.sample_id], semantic, classes)
           for r in records]
truths = [r.class_id for r in records]
table = build_contingency(preds_a, preds_b, truths)
print(f"\ncontingency: both={table.both_correct} a_only={table.a_only} "
      f"b_only={table.b_only} neither={table.both_wrong}")
result = mcnemar(table)
print(f"statistic={result.statistic:.2f} p={result.p_value:.2e}"
      + ("  -> significant at 0.05" if result.p_value < 0.05 else ""))
