"""Data model and file I/O for embeddings, catalogs, sample sets, fold plans, models.

File formats (all UTF-8 text, line oriented, diffable):

* embedding table: lines starting ``#`` are metadata/comments; the first
  non-blank line must be ``#dim=<positive int>``; every data line is
  ``<id>\\t<v1>\\t...\\t<vdim>``; blank lines are ignored.
* class catalog: JSON Lines, one object per line with keys ``class_id``
  (required), ``label`` (required), ``description`` (optional).
* fold plan: one JSON object ``{"folds": {name: [class_id, ...]},
  "roles": {role: [name, ...]}}``.
* model: a JSON header line ``{"acoustic_dim":..,"semantic_dim":..,
  "lambda":..,"seed":..,"notes":..}`` followed by ``acoustic_dim`` rows of
  ``semantic_dim`` tab-separated floats (row-major weights).
* sample set / predictions: ``<sample_id>\\t<class_id>`` per line, ``#``
  comments and blank lines ignored.

Floats are serialized in shortest round-trip decimal form, so
``read(write(x))`` reproduces every stored value exactly.  All types are
immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

EMBEDDING_KINDS = ("acoustic", "semantic")
ROLES = ("model-train", "zsl-train", "zsl-validation", "zsl-test")


class ValidationError(ValueError):
    """A value or file violated a corpus rule.

    Carries the violated rule plus file/line context when the failure came
    from parsing, so callers can report exactly where a file went wrong.
    """

    def __init__(self, rule: str, path: str | Path | None = None, line: int | None = None):
        self.rule = rule
        self.path = str(path) if path is not None else None
        self.line = line
        prefix = ""
        if self.path is not None:
            prefix = self.path
            if line is not None:
                prefix += f":{line}"
            prefix += ": "
        super().__init__(prefix + rule)


def _check_identifier(ident: str, *, path=None, line=None) -> None:
    if not isinstance(ident, str) or not ident:
        raise ValidationError("identifier must be a nonempty string", path, line)
    if "\t" in ident or "\n" in ident or "\r" in ident:
        raise ValidationError(f"identifier {ident!r} contains tab/newline", path, line)
    if ident.startswith("#"):
        raise ValidationError(f"identifier {ident!r} starts with '#' (reserved for comments)", path, line)


def _format_float(x: float) -> str:
    # repr of a Python float is the shortest string that parses back exactly
    return repr(float(x))


def _parse_float(token: str, *, path=None, line=None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ValidationError(f"not a number: {token!r}", path, line) from None
    if not math.isfinite(value):
        raise ValidationError(f"non-finite value: {token!r}", path, line)
    return value


def _freeze(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    vec.setflags(write=False)
    return vec


class EmbeddingTable:
    """Ordered id -> dense vector map with a fixed dimensionality.

    ``kind`` says whether the vectors live on the acoustic or the semantic
    side.  Entry order is preserved and significant: deterministic iteration
    makes seeded training and tie-breaking reproducible.
    """

    def __init__(self, dim: int, entries: Mapping[str, Sequence[float]] | Iterable[tuple[str, Sequence[float]]] = (),
                 kind: str = "semantic"):
        if not isinstance(dim, int) or isinstance(dim, bool) or dim <= 0:
            raise ValidationError(f"dim must be a positive integer, got {dim!r}")
        if kind not in EMBEDDING_KINDS:
            raise ValidationError(f"kind must be one of {EMBEDDING_KINDS}, got {kind!r}")
        self.dim = dim
        self.kind = kind
        self._entries: dict[str, np.ndarray] = {}
        items = entries.items() if isinstance(entries, Mapping) else entries
        for ident, vec in items:
            self._add(ident, vec)

    def _add(self, ident: str, vec: Sequence[float]) -> None:
        _check_identifier(ident)
        if ident in self._entries:
            raise ValidationError(f"duplicate identifier {ident!r}")
        arr = np.asarray(vec, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise ValidationError(
                f"vector for {ident!r} has {arr.size} components, expected {self.dim}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"vector for {ident!r} contains non-finite components")
        self._entries[ident] = _freeze(arr)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, ident: str) -> bool:
        return ident in self._entries

    def __getitem__(self, ident: str) -> np.ndarray:
        try:
            return self._entries[ident]
        except KeyError:
            raise KeyError(f"unknown identifier {ident!r}") from None

    def get(self, ident: str):
        return self._entries.get(ident)

    @property
    def ids(self) -> list[str]:
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def matrix(self, ids: Sequence[str] | None = None) -> np.ndarray:
        """Stack vectors row-wise, in table order or the order of ``ids``."""
        if ids is None:
            ids = self.ids
        if not ids:
            return np.empty((0, self.dim))
        return np.stack([self[i] for i in ids])

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingTable):
            return NotImplemented
        return (self.dim == other.dim and self.kind == other.kind
                and self.ids == other.ids
                and all(np.array_equal(v, other[k]) for k, v in self.items()))

    def __repr__(self) -> str:
        return f"EmbeddingTable(dim={self.dim}, kind={self.kind!r}, entries={len(self)})"


def read_embedding_table(path: str | Path, kind: str | None = None) -> EmbeddingTable:
    """Read an embedding table file; errors carry the offending line number.

    ``kind`` overrides any ``#kind=`` metadata in the file (default
    ``semantic`` when neither is present).
    """
    path = Path(path)
    dim = None
    file_kind = None
    pairs: list[tuple[str, np.ndarray]] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.rstrip("\n").rstrip("\r")
            if not stripped.strip():
                continue
            if stripped.startswith("#"):
                if dim is None:
                    if not stripped.startswith("#dim="):
                        raise ValidationError(
                            "first non-blank line must be '#dim=<positive integer>'", path, lineno)
                    body = stripped[len("#dim="):]
                    if not body.isdigit() or int(body) <= 0:
                        raise ValidationError(f"malformed dimension header {stripped!r}", path, lineno)
                    dim = int(body)
                elif stripped.startswith("#kind="):
                    file_kind = stripped[len("#kind="):]
                    if file_kind not in EMBEDDING_KINDS:
                        raise ValidationError(f"unknown kind {file_kind!r}", path, lineno)
                continue
            if dim is None:
                raise ValidationError(
                    "first non-blank line must be '#dim=<positive integer>'", path, lineno)
            fields = stripped.split("\t")
            ident = fields[0]
            _check_identifier(ident, path=path, line=lineno)
            if ident in seen:
                raise ValidationError(f"duplicate id {ident!r}", path, lineno)
            if len(fields) - 1 != dim:
                raise ValidationError(
                    f"row {ident!r} has {len(fields) - 1} values, expected {dim}", path, lineno)
            vec = np.array([_parse_float(tok, path=path, line=lineno) for tok in fields[1:]])
            seen.add(ident)
            pairs.append((ident, vec))
    if dim is None:
        raise ValidationError("first non-blank line must be '#dim=<positive integer>'", path, None)
    resolved = kind if kind is not None else (file_kind or "semantic")
    return EmbeddingTable(dim, pairs, kind=resolved)


def write_embedding_table(table: EmbeddingTable, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(f"#dim={table.dim}\n")
        fh.write(f"#kind={table.kind}\n")
        for ident, vec in table.items():
            fh.write(ident + "\t" + "\t".join(_format_float(v) for v in vec) + "\n")


@dataclass(frozen=True)
class ClassRecord:
    class_id: str
    label: str
    description: str | None = None


class ClassCatalog:
    """Class records with unique ids; labels are the textual side information."""

    def __init__(self, classes: Iterable[ClassRecord]):
        self.classes: list[ClassRecord] = list(classes)
        seen: set[str] = set()
        for rec in self.classes:
            if not isinstance(rec.class_id, str) or not rec.class_id:
                raise ValidationError("class_id must be a nonempty string")
            if rec.class_id in seen:
                raise ValidationError(f"duplicate class_id {rec.class_id!r}")
            if not isinstance(rec.label, str) or not rec.label:
                raise ValidationError(f"class {rec.class_id!r} has an empty label")
            seen.add(rec.class_id)
        self._by_id = {rec.class_id: rec for rec in self.classes}

    @property
    def ids(self) -> list[str]:
        return [rec.class_id for rec in self.classes]

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __contains__(self, class_id: str) -> bool:
        return class_id in self._by_id

    def __getitem__(self, class_id: str) -> ClassRecord:
        try:
            return self._by_id[class_id]
        except KeyError:
            raise KeyError(f"unknown class_id {class_id!r}") from None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClassCatalog):
            return NotImplemented
        return self.classes == other.classes


def read_class_catalog(path: str | Path) -> ClassCatalog:
    path = Path(path)
    records: list[ClassRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed JSON ({exc.msg})", path, lineno) from None
            if not isinstance(obj, dict):
                raise ValidationError("catalog line must be a JSON object", path, lineno)
            for key in ("class_id", "label"):
                if key not in obj:
                    raise ValidationError(f"missing required field {key!r}", path, lineno)
                if not isinstance(obj[key], str) or not obj[key]:
                    raise ValidationError(f"field {key!r} must be a nonempty string", path, lineno)
            desc = obj.get("description")
            if desc is not None and not isinstance(desc, str):
                raise ValidationError("field 'description' must be a string", path, lineno)
            if obj["class_id"] in seen:
                raise ValidationError(f"duplicate class_id {obj['class_id']!r}", path, lineno)
            seen.add(obj["class_id"])
            records.append(ClassRecord(obj["class_id"], obj["label"], desc))
    return ClassCatalog(records)


def write_class_catalog(catalog: ClassCatalog, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in catalog:
            obj = {"class_id": rec.class_id, "label": rec.label}
            if rec.description is not None:
                obj["description"] = rec.description
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class SampleRecord:
    sample_id: str
    class_id: str


class SampleSet:
    """Labeled instances; acoustic vectors live in a table referenced by name."""

    def __init__(self, samples: Iterable[SampleRecord], binding: str = ""):
        self.samples: list[SampleRecord] = list(samples)
        self.binding = binding
        seen: set[str] = set()
        for rec in self.samples:
            if not isinstance(rec.sample_id, str) or not rec.sample_id:
                raise ValidationError("sample_id must be a nonempty string")
            if rec.sample_id in seen:
                raise ValidationError(f"duplicate sample_id {rec.sample_id!r}")
            seen.add(rec.sample_id)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def sample_ids(self) -> list[str]:
        return [rec.sample_id for rec in self.samples]

    @property
    def class_ids(self) -> list[str]:
        return [rec.class_id for rec in self.samples]

    def class_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for rec in self.samples:
            counts[rec.class_id] = counts.get(rec.class_id, 0) + 1
        return counts

    def restrict_to_classes(self, classes: Iterable[str]) -> "SampleSet":
        wanted = set(classes)
        return SampleSet([rec for rec in self.samples if rec.class_id in wanted], self.binding)

    def check_classes(self, catalog: ClassCatalog) -> None:
        for rec in self.samples:
            if rec.class_id not in catalog:
                raise ValidationError(
                    f"sample {rec.sample_id!r} names unknown class {rec.class_id!r}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleSet):
            return NotImplemented
        return self.samples == other.samples and self.binding == other.binding


def read_sample_set(path: str | Path, binding: str = "") -> SampleSet:
    """Read ``sample_id\\tclass_id`` lines (also the predictions format)."""
    path = Path(path)
    records: list[SampleRecord] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.rstrip("\n").rstrip("\r")
            if not stripped.strip() or stripped.startswith("#"):
                continue
            fields = stripped.split("\t")
            if len(fields) != 2:
                raise ValidationError(
                    f"expected 'sample_id<TAB>class_id', got {len(fields)} fields", path, lineno)
            sample_id, class_id = fields
            _check_identifier(sample_id, path=path, line=lineno)
            if not class_id:
                raise ValidationError("empty class_id", path, lineno)
            if sample_id in seen:
                raise ValidationError(f"duplicate sample_id {sample_id!r}", path, lineno)
            seen.add(sample_id)
            records.append(SampleRecord(sample_id, class_id))
    return SampleSet(records, binding)


def write_sample_set(samples: SampleSet, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in samples:
            fh.write(f"{rec.sample_id}\t{rec.class_id}\n")


class FoldPlan:
    """Named disjoint class folds plus role assignments.

    Roles come from :data:`ROLES`.  Zero-shot test classes may never appear
    in zsl-train or zsl-validation folds; this is checked on every
    construction and load.
    """

    def __init__(self, folds: Mapping[str, Sequence[str]], roles: Mapping[str, Sequence[str]] | None = None):
        self.folds: dict[str, tuple[str, ...]] = {}
        seen_classes: dict[str, str] = {}
        for name, members in folds.items():
            if not isinstance(name, str) or not name:
                raise ValidationError("fold name must be a nonempty string")
            members = tuple(members)
            for cid in members:
                if not isinstance(cid, str) or not cid:
                    raise ValidationError(f"fold {name!r} contains an empty class_id")
                if cid in seen_classes:
                    raise ValidationError(
                        f"class {cid!r} appears in folds {seen_classes[cid]!r} and {name!r}; "
                        "folds must be disjoint")
                seen_classes[cid] = name
            if len(set(members)) != len(members):
                raise ValidationError(f"fold {name!r} lists a class twice")
            self.folds[name] = members
        self.roles: dict[str, tuple[str, ...]] = {}
        for role, names in (roles or {}).items():
            if role not in ROLES:
                raise ValidationError(f"unknown role {role!r}, expected one of {ROLES}")
            names = tuple(names)
            for fold_name in names:
                if fold_name not in self.folds:
                    raise ValidationError(f"role {role!r} references unknown fold {fold_name!r}")
            self.roles[role] = names
        test_classes = set(self.classes_for_role("zsl-test"))
        for role in ("zsl-train", "zsl-validation"):
            overlap = test_classes.intersection(self.classes_for_role(role))
            if overlap:
                raise ValidationError(
                    f"zsl-test classes {sorted(overlap)} also appear in role {role!r}; "
                    "test classes must be disjoint from training/validation classes")

    def all_classes(self) -> list[str]:
        out: list[str] = []
        for members in self.folds.values():
            out.extend(members)
        return out

    def classes_for_role(self, role: str) -> list[str]:
        """Classes of the folds assigned to ``role``, in fold order."""
        if role not in ROLES:
            raise ValidationError(f"unknown role {role!r}, expected one of {ROLES}")
        out: list[str] = []
        for fold_name in self.roles.get(role, ()):
            out.extend(self.folds[fold_name])
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return self.folds == other.folds and self.roles == other.roles

    def __repr__(self) -> str:
        return f"FoldPlan(folds={list(self.folds)}, roles={dict(self.roles)!r})"


def read_fold_plan(path: str | Path) -> FoldPlan:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON ({exc.msg})", path, exc.lineno) from None
    if not isinstance(obj, dict) or "folds" not in obj:
        raise ValidationError("fold plan must be a JSON object with a 'folds' key", path)
    folds = obj["folds"]
    roles = obj.get("roles", {})
    if not isinstance(folds, dict) or not all(isinstance(v, list) for v in folds.values()):
        raise ValidationError("'folds' must map fold names to lists of class ids", path)
    if not isinstance(roles, dict) or not all(isinstance(v, list) for v in roles.values()):
        raise ValidationError("'roles' must map roles to lists of fold names", path)
    try:
        return FoldPlan(folds, roles)
    except ValidationError as exc:
        raise ValidationError(exc.rule, path) from None


def write_fold_plan(plan: FoldPlan, path: str | Path) -> None:
    path = Path(path)
    obj = {"folds": {k: list(v) for k, v in plan.folds.items()},
           "roles": {k: list(v) for k, v in plan.roles.items()}}
    with path.open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


@dataclass(eq=False)
class CompatibilityModel:
    """Learned projection matrix plus training provenance.

    ``weights`` has shape ``(acoustic_dim, semantic_dim)``; scoring an
    instance against a class is ``acoustic @ weights @ semantic``.
    """

    weights: np.ndarray
    lambda_: float = 0.0
    seed: int = 0
    notes: str = ""
    acoustic_dim: int = field(default=0)
    semantic_dim: int = field(default=0)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValidationError("weights must be a 2-D matrix")
        if not self.acoustic_dim:
            self.acoustic_dim = self.weights.shape[0]
        if not self.semantic_dim:
            self.semantic_dim = self.weights.shape[1]
        if self.weights.shape != (self.acoustic_dim, self.semantic_dim):
            raise ValidationError(
                f"weights shape {self.weights.shape} does not match "
                f"(acoustic_dim, semantic_dim)=({self.acoustic_dim}, {self.semantic_dim})")
        if not np.all(np.isfinite(self.weights)):
            raise ValidationError("weights contain non-finite entries")
        if self.lambda_ < 0:
            raise ValidationError("lambda must be nonnegative")
        self.weights.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CompatibilityModel):
            return NotImplemented
        return (np.array_equal(self.weights, other.weights)
                and self.lambda_ == other.lambda_ and self.seed == other.seed
                and self.notes == other.notes
                and self.acoustic_dim == other.acoustic_dim
                and self.semantic_dim == other.semantic_dim)


def read_model(path: str | Path) -> CompatibilityModel:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed model header ({exc.msg})", path, 1) from None
        if not isinstance(header, dict):
            raise ValidationError("model header must be a JSON object", path, 1)
        for key in ("acoustic_dim", "semantic_dim", "lambda", "seed"):
            if key not in header:
                raise ValidationError(f"model header missing {key!r}", path, 1)
        d_a, d_s = header["acoustic_dim"], header["semantic_dim"]
        if not (isinstance(d_a, int) and isinstance(d_s, int) and d_a > 0 and d_s > 0):
            raise ValidationError("model dimensions must be positive integers", path, 1)
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            stripped = raw.rstrip("\n").rstrip("\r")
            if not stripped.strip():
                continue
            fields = stripped.split("\t")
            if len(fields) != d_s:
                raise ValidationError(
                    f"weight row has {len(fields)} values, expected {d_s}", path, lineno)
            rows.append([_parse_float(tok, path=path, line=lineno) for tok in fields])
            if len(rows) > d_a:
                raise ValidationError(f"more than {d_a} weight rows", path, lineno)
    if len(rows) != d_a:
        raise ValidationError(f"expected {d_a} weight rows, found {len(rows)}", path)
    return CompatibilityModel(
        weights=np.array(rows, dtype=np.float64),
        lambda_=float(header["lambda"]),
        seed=int(header["seed"]),
        notes=str(header.get("notes", "")),
        acoustic_dim=d_a,
        semantic_dim=d_s,
    )


def write_model(model: CompatibilityModel, path: str | Path) -> None:
    path = Path(path)
    header = {"acoustic_dim": model.acoustic_dim, "semantic_dim": model.semantic_dim,
              "lambda": model.lambda_, "seed": model.seed, "notes": model.notes}
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for row in model.weights:
            fh.write("\t".join(_format_float(v) for v in row) + "\n")
