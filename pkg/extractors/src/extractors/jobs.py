"""Extraction jobs and their manifests.

A job names what to extract (audio clips, a word-table subset, or a
sentence table), where the inputs come from, which featurizer to use,
and where the output table goes.  Next to every output table the
extractor writes a ``<output>.manifest.json`` sidecar recording the
featurizer, its pooling/segmentation policy, and the caveat that a
pretrained (rather than task-trained) featurizer can bias a zero-shot
evaluation when its own training data overlapped the test classes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from zsaudio import ValidationError

JOB_KINDS = ("audio-clip", "word-table-subset", "sentence-table")

PRETRAINED_CAVEAT = (
    "Embeddings come from a fixed pretrained-style featurizer, not one "
    "trained on the training folds only; if the featurizer's own training "
    "data covered any zero-shot class, the evaluation is optimistically "
    "biased.")


@dataclass(frozen=True)
class ExtractionJob:
    """One batch extraction: (kind, inputs, featurizer, output path).

    ``manifest`` holds ``(id, source)`` pairs; the meaning of ``source``
    depends on the kind (audio file path, the token itself, or a
    sentence description).  Ids must be unique and output row order is
    manifest order.
    """

    kind: str
    manifest: tuple = field(default_factory=tuple)
    model: str = ""
    out: str = ""

    def __post_init__(self):
        if self.kind not in JOB_KINDS:
            raise ValidationError(
                f"job kind must be one of {JOB_KINDS}, got {self.kind!r}")
        pairs = tuple((str(i), str(s)) for i, s in self.manifest)
        object.__setattr__(self, "manifest", pairs)
        seen = set()
        for ident, _ in pairs:
            if ident in seen:
                raise ValidationError(f"duplicate id {ident!r} in job manifest")
            seen.add(ident)
        if not self.model:
            raise ValidationError("job model identifier must be nonempty")
        if not self.out:
            raise ValidationError("job output path must be nonempty")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(i for i, _ in self.manifest)


def read_job_manifest(path) -> list[tuple[str, str]]:
    """Read a JSON array of ``{"id": ..., "source": ...}`` objects."""
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"manifest is not valid JSON: {exc}",
                                  path=path) from exc
    if not isinstance(data, list):
        raise ValidationError("manifest must be a JSON array", path=path)
    pairs = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "id" not in item or "source" not in item:
            raise ValidationError(
                f"manifest entry {i} must be an object with 'id' and 'source'",
                path=path)
        pairs.append((str(item["id"]), str(item["source"])))
    return pairs


def seed_from(*parts: str) -> int:
    """Stable 64-bit seed derived from strings (featurizer ids, tokens)."""
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def write_output_manifest(out_path, payload: dict) -> None:
    """Write the ``<out>.manifest.json`` sidecar (deterministic, no clock)."""
    record = dict(payload)
    record["caveat"] = PRETRAINED_CAVEAT
    sidecar = Path(str(out_path) + ".manifest.json")
    sidecar.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n",
                       encoding="utf-8")


def fingerprint(path) -> str:
    """sha256 of a file, for recording inputs in output manifests."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
