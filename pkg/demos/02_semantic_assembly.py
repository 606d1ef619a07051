"""Building class semantic embeddings from text.

A class can be represented by the mean of the word vectors of its label,
by the mean over its sentence description (stopwords removed), or by the
concatenation of several such parts.  Multi-word labels prefer a whole
phrase entry (underscore-joined) when the word table has one.
"""

from importlib import resources

import numpy as np

from zsaudio import (
    AssemblySpec, ClassCatalog, ClassRecord, EmbeddingTable, TokenRule,
    assemble_label_embedding, assemble_sentence_embedding,
    build_class_semantic_table, read_stopwords,
)

# A miniature word-vector table (2-d instead of the usual 300-d).
words = EmbeddingTable(2, [
    ("dog", [1.0, 0.0]),
    ("bark", [0.0, 1.0]),
    ("sea", [2.0, 0.0]),
    ("waves", [0.0, 2.0]),
    ("sea_waves", [5.0, 5.0]),     # a phrase entry
    ("loud", [3.0, 3.0]),
    ("a", [9.0, 9.0]),             # stopword; never consulted
], kind="semantic")

# Tokenization rule: lowercase everything and drop the packaged English
# stopword list (stopwords apply to descriptions only, never labels).
stop = read_stopwords(resources.files("zsaudio") / "fixtures" / "stopwords.txt")
rule = TokenRule(lowercase=True, stopwords=stop)

# --- label embeddings ---------------------------------------------------
vec = assemble_label_embedding("dog bark", words, rule)
print("label 'dog bark' ->", vec, "(mean of dog+bark)")

# The phrase entry wins over token averaging when the table has it.
vec = assemble_label_embedding("sea waves", words, rule)
print("label 'sea waves' ->", vec, "(phrase entry, not the token mean)")

# --- sentence embeddings ------------------------------------------------
vec = assemble_sentence_embedding("A loud dog.", words, rule)
print("sentence 'A loud dog.' ->", vec, "(stopword 'a' dropped)")

# Tokens missing from the table are skipped and reported via logging;
# only full zero coverage is an error.
vec = assemble_sentence_embedding("loud zeppelin dog", words, rule)
print("with one unknown token ->", vec)

# --- whole-catalog assembly ----------------------------------------------
catalog = ClassCatalog([
    ClassRecord("dog_bark", "dog bark", "A loud dog."),
    ClassRecord("sea_waves", "sea waves", "Waves at sea."),
])

# One part per representation; parts concatenate in order, so a label
# part plus a description part doubles the dimension here.
specs = [
    AssemblySpec("label-mean", "label", words, rule),
    AssemblySpec("description-mean", "description", words, rule),
]
table = build_class_semantic_table(catalog, specs)
print("\nhybrid table dim:", table.dim)
for cid in table.ids:
    print(f"  {cid}: {np.asarray(table[cid])}")

# Optional unit-length normalization per part.
normalized = build_class_semantic_table(
    catalog, [AssemblySpec("label-mean", "label", words, rule, normalize=True)])
print("\nnormalized label part lengths:",
      [round(float(np.linalg.norm(normalized[c])), 6) for c in normalized.ids])
