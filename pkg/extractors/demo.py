"""Extracting embedding tables from raw inputs.

Three extraction jobs turn raw material into the tab-separated embedding
tables the training toolkit reads: WAV clips become 128-d acoustic
vectors, a vocabulary becomes a 300-d word table, and class descriptions
become 1024-d sentence vectors.  Every output gets a ``.manifest.json``
sidecar recording the featurizer, the pooling rule, and a caveat about
pretrained front-ends, so a table can always be traced back to how it
was made.
"""

import json
import logging
import tempfile
import wave
from pathlib import Path

import numpy as np

from extractors import (
    AUDIO_DIM, BUILTIN_AUDIO_MODEL, BUILTIN_SENTENCE_MODEL,
    BUILTIN_WORD_MODEL, ExtractionJob, run_job,
)
from zsaudio import read_embedding_table

logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")

root = Path(tempfile.mkdtemp(prefix="extractors-demo-"))


def write_wav(path, signal, rate):
    """16-bit PCM mono writer for the synthetic clips below."""
    data = (np.clip(signal, -1.0, 1.0) * 32767).astype("<i2")
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(1)
        handle.setsampwidth(2)
        handle.setframerate(rate)
        handle.writeframes(data.tobytes())


# --- audio clips -> acoustic table ---------------------------------------
# Two synthetic tones: one comfortably longer than the 960 ms segment
# length, one shorter (it will be zero-padded, with a warning).
t_long = np.arange(int(1.5 * 44100)) / 44100          # 44.1 kHz; resampled
t_short = np.arange(int(0.4 * 16000)) / 16000          # already 16 kHz
write_wav(root / "siren.wav", 0.5 * np.sin(2 * np.pi * 600 * t_long), 44100)
write_wav(root / "beep.wav", 0.5 * np.sin(2 * np.pi * 1200 * t_short), 16000)

acoustic = run_job(ExtractionJob(
    "audio-clip",
    [("siren", root / "siren.wav"), ("beep", root / "beep.wav")],
    BUILTIN_AUDIO_MODEL,
    root / "acoustic.tsv"))
print(f"acoustic table: {len(acoustic.ids)} clips x {acoustic.dim} dims "
      f"(expected {AUDIO_DIM})")

# --- vocabulary -> word table ---------------------------------------------
# The builtin word featurizer is deterministic: the same token always maps
# to the same vector, on any machine, so tables are reproducible.
tokens = ["dog", "bark", "siren", "beep"]
words = run_job(ExtractionJob(
    "word-table-subset", [(t, t) for t in tokens],
    BUILTIN_WORD_MODEL, root / "words.tsv"))
print(f"word table: {list(words.ids)} x {words.dim} dims")
print("  first three components of 'dog':",
      np.asarray(words["dog"])[:3].round(4))

# --- class descriptions -> sentence table ---------------------------------
sentences = run_job(ExtractionJob(
    "sentence-table",
    [("dog_bark", "A dog barking in a yard."),
     ("siren_wail", "An emergency siren wailing down the street.")],
    BUILTIN_SENTENCE_MODEL, root / "sentences.tsv"))
print(f"sentence table: {list(sentences.ids)} x {sentences.dim} dims")

# --- the outputs are ordinary embedding-table files -----------------------
# Anything downstream reads them back through the standard loader; the
# extractors never need to be importable where training happens.
reloaded = read_embedding_table(root / "acoustic.tsv")
print("reloaded acoustic table dim:", reloaded.dim)

# --- manifests record provenance -------------------------------------------
manifest = json.loads((root / "acoustic.tsv.manifest.json").read_text())
print("\nacoustic manifest keys:", sorted(manifest))
print("  model:", manifest["model"], f"({manifest['model_note']})")
print("  pooling:", manifest["pooling"])
print("  segments per clip:", manifest["segments"])
print("  caveat:", manifest["caveat"][:72] + "...")

# --- custom weights via an .npz file ---------------------------------------
# A trained front-end can replace the builtin projection: save a
# (6144, k) 'projection' array (and optional 'bias') and pass the path
# as the model.  Here k=16 stands in for a real model's output width.
rng = np.random.default_rng(0)
np.savez(root / "custom.npz", projection=rng.standard_normal((6144, 16)))
custom = run_job(ExtractionJob(
    "audio-clip", [("siren", root / "siren.wav")],
    str(root / "custom.npz"), root / "custom.tsv"))
print(f"\ncustom featurizer output: {custom.dim} dims from custom.npz")
