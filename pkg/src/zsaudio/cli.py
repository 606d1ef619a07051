"""Command-line pipeline driver.

Subcommands: ``split``, ``assemble``, ``train``, ``predict``, ``evaluate``,
``mcnemar``, ``config init``.  Every artifact-producing command also writes
``<artifact>.manifest.json`` recording the command, its effective
configuration, SHA-256 fingerprints of all inputs, the tool version, and
the seed, so a rerun can be audited byte for byte.  Logs go to standard
error as JSON lines; artifacts only ever go to paths given by flags.

Exit codes: 0 success, 1 I/O failure, 2 validation or usage failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    EmbeddingTable, SampleRecord, SampleSet, ValidationError,
    read_class_catalog, read_embedding_table, read_fold_plan, read_model,
    read_sample_set, write_embedding_table, write_fold_plan, write_model,
    write_sample_set,
)
from .semantics import AssemblySpec, TokenRule, build_class_semantic_table, \
    concat_embeddings, read_stopwords
from .compat import score_classes
from .warp import TrainConfig, train
from .splits import BinSpec, SETTINGS, bin_stratified_folds, category_folds, \
    make_data_setting, random_folds, undersample
from .metrics import ContingencyTable, build_contingency, evaluate, mcnemar

log = logging.getLogger(__name__)


class _JsonLineFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps({"level": record.levelname.lower(),
                           "logger": record.name,
                           "message": record.getMessage()})


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(artifact: str, command: str, config: dict,
                    inputs, seed: int) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(str(p)) for p in inputs if p},
        "tool_version": __version__,
        "seed": seed,
    }
    Path(f"{artifact}.manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _load_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed {what} ({exc.msg})", path=path,
                              line=exc.lineno) from None


# ---------------------------------------------------------------- split

def cmd_split(args) -> int:
    catalog = read_class_catalog(args.catalog)
    inputs = [args.catalog]
    if args.strategy == "category":
        if not args.categories:
            raise ValidationError("--strategy category needs --categories")
        mapping = _load_json(args.categories, "category map")
        if not isinstance(mapping, dict):
            raise ValidationError("category map must be a JSON object",
                                  path=args.categories)
        plan = category_folds(catalog, mapping)
        inputs.append(args.categories)
    elif args.strategy == "random":
        plan = random_folds(catalog, args.k, args.seed)
    else:  # bins
        if not args.samples:
            raise ValidationError("--strategy bins needs --samples")
        samples = read_sample_set(args.samples)
        inputs.append(args.samples)
        if args.bin_edges:
            edges = _load_json(args.bin_edges, "bin edges")
            if not isinstance(edges, list):
                raise ValidationError("bin edges must be a JSON list",
                                      path=args.bin_edges)
            bins = BinSpec(tuple(edges))
            inputs.append(args.bin_edges)
        else:
            bins = BinSpec()
        if args.undersample_cap:
            samples = undersample(samples, cap=args.undersample_cap,
                                  threshold=args.undersample_threshold,
                                  seed=args.seed)
        plan = bin_stratified_folds(samples, catalog, bins, args.k, args.seed)
    if args.setting:
        plan = make_data_setting(plan, args.setting)
    write_fold_plan(plan, args.out)
    _write_manifest(args.out, "split",
                    {"strategy": args.strategy, "k": args.k,
                     "setting": args.setting,
                     "undersample_cap": args.undersample_cap,
                     "undersample_threshold": args.undersample_threshold},
                    inputs, args.seed)
    log.info("wrote fold plan with %d folds to %s", len(plan.folds), args.out)
    return 0


# -------------------------------------------------------------- assemble

def _load_assembly_parts(spec_path: str, catalog):
    """Parse the assembly spec file into per-part class tables.

    The spec file is a JSON array; each element has a ``source`` of
    ``label`` or ``description`` (assembled from a word table, with
    optional ``lowercase`` and ``stopwords``) or ``table`` (a precomputed
    per-class embedding table used verbatim).
    """
    spec = _load_json(spec_path, "assembly spec")
    if not isinstance(spec, list) or not spec:
        raise ValidationError("assembly spec must be a nonempty JSON array",
                              path=spec_path)
    tables = []
    inputs = [spec_path]
    for i, part in enumerate(spec):
        if not isinstance(part, dict) or "source" not in part:
            raise ValidationError(f"part {i} needs a 'source' key", path=spec_path)
        name = part.get("name", f"part{i}")
        source = part["source"]
        if source == "table":
            if "table" not in part:
                raise ValidationError(f"part {name!r} needs a 'table' path",
                                      path=spec_path)
            raw = read_embedding_table(part["table"])
            inputs.append(part["table"])
            missing = [c for c in catalog.ids if c not in raw]
            if missing:
                raise ValidationError(
                    f"part {name!r}: table lacks classes {missing[:5]}",
                    path=part["table"])
            tables.append(EmbeddingTable(
                raw.dim, [(c, raw[c]) for c in catalog.ids], kind="semantic"))
        elif source in ("label", "description"):
            if "word_table" not in part:
                raise ValidationError(f"part {name!r} needs a 'word_table' path",
                                      path=spec_path)
            word_table = read_embedding_table(part["word_table"])
            inputs.append(part["word_table"])
            stopwords = frozenset()
            if part.get("stopwords"):
                stopwords = read_stopwords(part["stopwords"])
                inputs.append(part["stopwords"])
            rule = TokenRule(lowercase=bool(part.get("lowercase", False)),
                             stopwords=stopwords)
            assembly = AssemblySpec(name=name, source=source,
                                    word_table=word_table, rule=rule,
                                    normalize=bool(part.get("normalize", False)))
            tables.append(build_class_semantic_table(catalog, [assembly]))
        else:
            raise ValidationError(
                f"part {name!r}: source must be label, description, or table",
                path=spec_path)
    return tables, inputs


def cmd_assemble(args) -> int:
    catalog = read_class_catalog(args.catalog)
    tables, inputs = _load_assembly_parts(args.spec, catalog)
    table = tables[0] if len(tables) == 1 else concat_embeddings(tables)
    write_embedding_table(table, args.out)
    _write_manifest(args.out, "assemble", {"spec": args.spec},
                    [args.catalog] + inputs, 0)
    log.info("wrote semantic table (%d classes, dim %d) to %s",
             len(table), table.dim, args.out)
    return 0


# ----------------------------------------------------------------- train

def cmd_train(args) -> int:
    plan = read_fold_plan(args.plan)
    acoustic = read_embedding_table(args.acoustic, kind="acoustic")
    semantic = read_embedding_table(args.semantic, kind="semantic")
    samples = read_sample_set(args.samples)
    config = TrainConfig.from_json(Path(args.config).read_text(encoding="utf-8")) \
        if args.config else TrainConfig()
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)

    for role in ("zsl-train", "zsl-validation"):
        if role not in plan.roles:
            raise ValidationError(f"fold plan does not assign the {role!r} role",
                                  path=args.plan)
    train_classes = plan.classes_for_role("zsl-train")
    val_classes = plan.classes_for_role("zsl-validation")
    train_set = samples.restrict_to_classes(train_classes)
    val_set = samples.restrict_to_classes(val_classes)

    log_fh = open(args.log, "w", encoding="utf-8") if args.log else None

    def on_epoch(record: dict) -> None:
        line = json.dumps(record)
        if log_fh:
            log_fh.write(line + "\n")
        log.info("epoch %s", line)

    try:
        model = train(train_set, val_set, acoustic, semantic,
                      train_classes, val_classes, config, log_fn=on_epoch)
    finally:
        if log_fh:
            log_fh.close()
    write_model(model, args.out)
    inputs = [args.plan, args.acoustic, args.semantic, args.samples]
    if args.config:
        inputs.append(args.config)
    _write_manifest(args.out, "train", json.loads(config.to_json()),
                    inputs, config.seed)
    log.info("wrote model (lambda=%s) to %s", model.lambda_, args.out)
    return 0


# ------------------------------------------------------- predict/evaluate

def _resolve_candidates(args) -> list[str]:
    if args.plan:
        plan = read_fold_plan(args.plan)
        if args.role not in plan.roles:
            raise ValidationError(f"fold plan does not assign the {args.role!r} role",
                                  path=args.plan)
        return plan.classes_for_role(args.role)
    if args.candidates:
        lines = Path(args.candidates).read_text(encoding="utf-8").splitlines()
        classes = [ln.strip() for ln in lines if ln.strip()]
        if not classes:
            raise ValidationError("candidate file is empty", path=args.candidates)
        return classes
    raise ValidationError("need --plan (with --role) or --candidates")


def cmd_predict(args) -> int:
    model = read_model(args.model)
    acoustic = read_embedding_table(args.acoustic, kind="acoustic")
    semantic = read_embedding_table(args.semantic, kind="semantic")
    samples = read_sample_set(args.samples)
    candidates = _resolve_candidates(args)
    if args.restrict:
        samples = samples.restrict_to_classes(candidates)
    if len(samples) == 0:
        raise ValidationError("no samples to predict")
    predictions = []
    for record in samples:
        if record.sample_id not in acoustic:
            raise ValidationError(f"no acoustic embedding for sample {record.sample_id!r}")
        ranked = score_classes(model, acoustic[record.sample_id], semantic, candidates)
        predictions.append(SampleRecord(record.sample_id, ranked.top()))
    write_sample_set(SampleSet(predictions), args.out)
    _write_manifest(args.out, "predict",
                    {"role": args.role, "restrict": args.restrict},
                    [args.model, args.acoustic, args.semantic, args.samples,
                     args.plan, args.candidates], 0)
    log.info("wrote %d predictions to %s", len(predictions), args.out)
    return 0


def cmd_evaluate(args) -> int:
    if args.predictions:
        if not args.truth:
            raise ValidationError("--predictions needs --truth")
        preds = read_sample_set(args.predictions)
        truth = read_sample_set(args.truth)
        by_id = {r.sample_id: r.class_id for r in preds}
        missing = [r.sample_id for r in truth if r.sample_id not in by_id]
        if missing:
            raise ValidationError(
                f"predictions lack sample ids {missing[:5]}", path=args.predictions)
        correct = sum(1 for r in truth if by_id[r.sample_id] == r.class_id)
        report = {"n_samples": len(truth), "top1": correct / len(truth)}
        payload = json.dumps(report, indent=2)
        inputs = [args.predictions, args.truth]
    else:
        for flag in ("model", "acoustic", "semantic", "samples"):
            if not getattr(args, flag):
                raise ValidationError(f"--{flag} is required unless --predictions is used")
        model = read_model(args.model)
        acoustic = read_embedding_table(args.acoustic, kind="acoustic")
        semantic = read_embedding_table(args.semantic, kind="semantic")
        samples = read_sample_set(args.samples)
        candidates = _resolve_candidates(args)
        if args.restrict:
            samples = samples.restrict_to_classes(candidates)
        result = evaluate(model, samples, acoustic, semantic, candidates,
                          with_per_sample=args.per_sample)
        payload = result.to_json()
        report = {"top1": result.top1, "map": result.map}
        inputs = [args.model, args.acoustic, args.semantic, args.samples,
                  args.plan, args.candidates]
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        _write_manifest(args.out, "evaluate", {"per_sample": args.per_sample},
                        inputs, 0)
    else:
        print(payload)
    log.info("evaluation: %s", json.dumps(report))
    return 0


# --------------------------------------------------------------- mcnemar

def cmd_mcnemar(args) -> int:
    if args.cells:
        table = ContingencyTable(*args.cells)
        inputs = []
    else:
        if not (args.preds_a and args.preds_b and args.truth):
            raise ValidationError("need --cells or all of --preds-a/--preds-b/--truth")
        preds_a = read_sample_set(args.preds_a)
        preds_b = read_sample_set(args.preds_b)
        truth = read_sample_set(args.truth)
        a_by_id = {r.sample_id: r.class_id for r in preds_a}
        b_by_id = {r.sample_id: r.class_id for r in preds_b}
        missing = [r.sample_id for r in truth
                   if r.sample_id not in a_by_id or r.sample_id not in b_by_id]
        if missing:
            raise ValidationError(f"prediction files lack sample ids {missing[:5]}")
        table = build_contingency([a_by_id[r.sample_id] for r in truth],
                                  [b_by_id[r.sample_id] for r in truth],
                                  [r.class_id for r in truth])
        inputs = [args.preds_a, args.preds_b, args.truth]
    result = mcnemar(table)
    payload = json.dumps({
        "statistic": result.statistic,
        "p_value": result.p_value,
        "table": {"both_correct": table.both_correct, "a_only": table.a_only,
                  "b_only": table.b_only, "both_wrong": table.both_wrong},
    }, indent=2)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        _write_manifest(args.out, "mcnemar", {}, inputs, 0)
    else:
        print(payload)
    return 0


# ---------------------------------------------------------------- config

def cmd_config_init(args) -> int:
    payload = TrainConfig().to_json()
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
        _write_manifest(args.out, "config init", {}, [], 0)
    else:
        print(payload)
    return 0


# ----------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zsaudio",
        description="Zero-shot audio classification pipeline")
    parser.add_argument("--version", action="version",
                        version=f"zsaudio {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="build a class fold plan")
    p.add_argument("--strategy", required=True,
                   choices=["category", "random", "bins"])
    p.add_argument("--catalog", required=True)
    p.add_argument("--categories", help="JSON object class_id -> category")
    p.add_argument("--samples", help="sample set TSV (bins strategy)")
    p.add_argument("--bin-edges", help="JSON list of bin edges")
    p.add_argument("--undersample-cap", type=int, default=0,
                   help="cap oversized classes before binning (0 = off)")
    p.add_argument("--undersample-threshold", type=int, default=1000)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--setting", choices=list(SETTINGS),
                   help="attach S1/S2 roles to the plan")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("assemble", help="assemble class semantic embeddings")
    p.add_argument("--catalog", required=True)
    p.add_argument("--spec", required=True,
                   help="JSON array of assembly parts")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_assemble)

    p = sub.add_parser("train", help="train the compatibility model")
    p.add_argument("--plan", required=True)
    p.add_argument("--acoustic", required=True)
    p.add_argument("--semantic", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--config", help="train config JSON (see `config init`)")
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")
    p.add_argument("--log", help="write the epoch log (JSON lines) here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    for name, fn in (("predict", cmd_predict), ("evaluate", cmd_evaluate)):
        p = sub.add_parser(name, help=f"{name} with a trained model")
        p.add_argument("--model")
        p.add_argument("--acoustic")
        p.add_argument("--semantic")
        p.add_argument("--samples")
        p.add_argument("--plan")
        p.add_argument("--role", default="zsl-test")
        p.add_argument("--candidates", help="text file, one class id per line")
        p.add_argument("--restrict", action="store_true",
                       help="drop samples whose class is not a candidate")
        if name == "evaluate":
            p.add_argument("--predictions", help="score a predictions file instead")
            p.add_argument("--truth", help="truth sample set for --predictions")
            p.add_argument("--per-sample", action="store_true")
            p.add_argument("--out")
        else:
            p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = sub.add_parser("mcnemar", help="paired McNemar's test")
    p.add_argument("--cells", type=int, nargs=4,
                   metavar=("BOTH", "A_ONLY", "B_ONLY", "NEITHER"))
    p.add_argument("--preds-a")
    p.add_argument("--preds-b")
    p.add_argument("--truth")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mcnemar)

    p = sub.add_parser("config", help="configuration helpers")
    csub = p.add_subparsers(dest="config_command", required=True)
    c = csub.add_parser("init", help="write the default train config")
    c.add_argument("--out")
    c.set_defaults(func=cmd_config_init)

    return parser


def main(argv=None) -> int:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLineFormatter())
    pkg_log = logging.getLogger("zsaudio")
    pkg_log.addHandler(handler)
    old_level = pkg_log.level
    pkg_log.setLevel(logging.INFO)
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        try:
            return args.func(args)
        except ValidationError as exc:
            log.error("%s", exc)
            return 2
        except OSError as exc:
            log.error("%s", exc)
            return 1
    finally:
        pkg_log.removeHandler(handler)
        pkg_log.setLevel(old_level)


if __name__ == "__main__":
    sys.exit(main())
