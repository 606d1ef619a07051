"""Tour of the four on-disk formats: embedding tables, class catalogs,
fold plans, and compatibility models.

Every format is plain text, deterministic, and round-trips exactly:
floats are written with ``repr`` so the parsed value is bit-identical.
"""

import tempfile
from pathlib import Path

import numpy as np

from zsaudio import (
    ClassCatalog, ClassRecord, CompatibilityModel, EmbeddingTable, FoldPlan,
    read_class_catalog, read_embedding_table, read_fold_plan, read_model,
    write_class_catalog, write_embedding_table, write_fold_plan, write_model,
)

workdir = Path(tempfile.mkdtemp(prefix="formats-"))
print(f"writing artifacts under {workdir}\n")

# --- embedding tables -------------------------------------------------
# A table is a '#dim=' header plus one tab-separated row per id.  The
# same format carries acoustic clip embeddings and semantic class
# embeddings; the optional '#kind=' header says which.
table = EmbeddingTable(3, [
    ("dog_bark", [0.25, -1.5, 0.125]),
    ("rain", [1.0 / 3.0, 2.0, -0.75]),       # 1/3 survives the round trip
], kind="acoustic")
write_embedding_table(table, workdir / "clips.tsv")
print("clips.tsv:")
print((workdir / "clips.tsv").read_text())

back = read_embedding_table(workdir / "clips.tsv")
print("round trip exact:",
      all(np.array_equal(back[i], table[i]) for i in table.ids))

# --- class catalogs ---------------------------------------------------
# One JSON object per line: id, human label, optional description.
catalog = ClassCatalog([
    ClassRecord("dog_bark", "dog bark", "A dog barking in short bursts."),
    ClassRecord("rain", "rain", "Steady rainfall on a hard surface."),
])
write_class_catalog(catalog, workdir / "catalog.jsonl")
print("\ncatalog.jsonl:")
print((workdir / "catalog.jsonl").read_text())
assert list(read_class_catalog(workdir / "catalog.jsonl")) == list(catalog)

# --- fold plans -------------------------------------------------------
# Disjoint named class folds plus role assignments.  Zero-shot test
# classes may never overlap the training or validation folds; the
# reader enforces this.
plan = FoldPlan({"Fold0": ["dog_bark"], "Fold1": ["rain"]},
                roles={"zsl-train": ["Fold0"], "zsl-test": ["Fold1"]})
write_fold_plan(plan, workdir / "plan.json")
print("plan.json:")
print((workdir / "plan.json").read_text())
assert read_fold_plan(workdir / "plan.json").folds == plan.folds

# --- compatibility models ---------------------------------------------
# A JSON header line with the shape and training metadata, then one
# tab-separated row of weights per acoustic dimension.
model = CompatibilityModel(weights=np.array([[1.0, 0.5], [0.0, 2.0],
                                             [-1.0, 0.25]]),
                           lambda_=0.01, seed=7, notes="demo")
write_model(model, workdir / "model.tsv")
print("model.tsv:")
print((workdir / "model.tsv").read_text())
assert np.array_equal(read_model(workdir / "model.tsv").weights, model.weights)

print("all four formats round-tripped exactly")
