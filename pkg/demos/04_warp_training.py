"""Training the compatibility matrix with the rank-weighted hinge loss.

The trainer runs per-sample SGD: for each sample it counts how many
wrong classes violate a unit margin against the true class, weights the
violation sum by beta(r)/r (beta = harmonic partial sum, so top-of-list
mistakes cost the most), and descends.  A small grid of L2 penalties is
searched; the model with the best validation Top-1 wins.

Here the data is synthetic and separable by construction: each class's
semantic vector equals its acoustic cluster mean, so a perfect solution
(the identity matrix) exists.  Four classes are held out entirely from
training to show zero-shot transfer.
"""

import numpy as np

from zsaudio import (
    EmbeddingTable, SampleRecord, SampleSet, TrainConfig, beta, evaluate,
    train,
)

rng = np.random.default_rng(0)
dim = 8
classes = [f"class_{i:02d}" for i in range(12)]
train_classes, held_out = classes[:8], classes[8:]

# beta makes high ranks expensive: one top-1 mistake outweighs several
# further down the list.
print("rank weights beta(r)/r:",
      [round(beta(r) / r, 3) for r in range(1, 6)])

means = rng.standard_normal((12, dim))
means /= np.linalg.norm(means, axis=1, keepdims=True)
means *= 3.0
semantic = EmbeddingTable(dim, [(c, means[i]) for i, c in enumerate(classes)],
                          kind="semantic")

entries, train_recs, val_recs, test_recs = [], [], [], []
for i, c in enumerate(classes):
    buckets = [("train", 16, train_recs)] if c in train_classes else \
              [("val", 4, val_recs), ("test", 12, test_recs)]
    for tag, count, bucket in buckets:
        for n in range(count):
            sid = f"{c}_{tag}{n}"
            entries.append((sid, means[i] + 0.05 * rng.standard_normal(dim)))
            bucket.append(SampleRecord(sid, c))
acoustic = EmbeddingTable(dim, entries, kind="acoustic")

# Model selection is zero-shot itself: validation classes are the four
# held-out ones, so early stopping tracks transfer, not memorization.
history = []
model = train(SampleSet(train_recs), SampleSet(val_recs), acoustic, semantic,
              train_classes, held_out, TrainConfig(seed=0),
              log_fn=history.append)

print(f"\n{len(history)} epoch records across the penalty grid; last few:")
for record in history[-3:]:
    print(f"  lambda={record['lambda']:<5} epoch={record['epoch']:>2} "
          f"objective={record['train_objective']:.4f} "
          f"val_top1={record['validation_top1']:.3f}")
print("selected penalty:", model.lambda_)

report = evaluate(model, SampleSet(test_recs), acoustic, semantic, held_out,
                  with_per_sample=False)
print(f"zero-shot test: top1={report.top1:.3f} map={report.map:.3f} "
      f"on {report.n_samples} samples of {len(held_out)} unseen classes")
