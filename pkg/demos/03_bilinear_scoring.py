"""Scoring audio against classes with a bilinear compatibility model.

A clip embedding theta and a class embedding phi are compared through a
learned weight matrix W: score = theta @ W @ phi.  Classification is the
argmax of that score over a candidate class list, and candidates never
seen in training are scored the same way — that is what makes the model
zero-shot capable.
"""

import numpy as np

from zsaudio import (
    CompatibilityModel, EmbeddingTable, classify, compatibility, project,
    score_classes,
)

semantic = EmbeddingTable(2, [
    ("dog_bark", [1.0, 0.0]),
    ("rain", [0.0, 1.0]),
    ("thunder", [0.6, 0.8]),
], kind="semantic")

# With identity weights the score is just the dot product.
model = CompatibilityModel(weights=np.eye(2))
clip = np.array([0.9, 0.1])

print("projected clip:", project(model, clip))
for cid in semantic.ids:
    print(f"  compatibility vs {cid}: "
          f"{compatibility(model, clip, semantic[cid]):+.3f}")

# score_classes returns every candidate sorted best-first; ties fall
# back to the semantic table's entry order, which keeps results stable.
ranked = score_classes(model, clip, semantic, semantic.ids)
print("\nranking:", [(c, round(s, 3)) for c, s in ranked])
print("top class:", classify(model, clip, semantic, semantic.ids))
print("rank of 'thunder':", ranked.rank_of("thunder"))

# A non-identity W reshapes the space: here it swaps the axes, so the
# same clip now matches rain.
swapped = CompatibilityModel(weights=np.array([[0.0, 1.0], [1.0, 0.0]]))
print("\nafter swapping axes:",
      classify(swapped, clip, semantic, semantic.ids))

# Restricting candidates is how zero-shot evaluation works: the model
# never trained on these two, yet scores them without modification.
print("restricted to {rain, thunder}:",
      classify(model, clip, semantic, ["rain", "thunder"]))
