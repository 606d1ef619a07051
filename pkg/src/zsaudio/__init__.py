"""Zero-shot audio classification via a bilinear acoustic-semantic
compatibility model trained with the WARP ranking loss."""

__version__ = "0.1.0"

from .corpus import (
    ClassCatalog, ClassRecord, CompatibilityModel, EmbeddingTable, FoldPlan,
    ROLES, SampleRecord, SampleSet, ValidationError, read_class_catalog,
    read_embedding_table, read_fold_plan, read_model, read_sample_set,
    write_class_catalog, write_embedding_table, write_fold_plan, write_model,
    write_sample_set,
)
from .semantics import (
    AssemblySpec, NoCoverageError, TokenRule, aggregate_clip_embedding,
    assemble_label_embedding, assemble_sentence_embedding,
    build_class_semantic_table, concat_embeddings, read_stopwords,
)
from .compat import ScoredClassList, classify, compatibility, project, score_classes
from .warp import RankResult, TrainConfig, beta, hinge, objective, rank_of, \
    subgradient, train
from .splits import (
    BinSpec, bin_stratified_folds, category_folds, make_data_setting,
    random_folds, undersample,
)
from .metrics import (
    Baseline, ContingencyTable, EvalReport, McNemarResult, average_precision,
    build_contingency, evaluate, mcnemar, random_baseline, top1,
)

__all__ = [
    "__version__",
    "ClassCatalog", "ClassRecord", "CompatibilityModel", "EmbeddingTable",
    "FoldPlan", "ROLES", "SampleRecord", "SampleSet", "ValidationError",
    "read_class_catalog", "read_embedding_table", "read_fold_plan",
    "read_model", "read_sample_set", "write_class_catalog",
    "write_embedding_table", "write_fold_plan", "write_model",
    "write_sample_set",
    "AssemblySpec", "NoCoverageError", "TokenRule", "aggregate_clip_embedding",
    "assemble_label_embedding", "assemble_sentence_embedding",
    "build_class_semantic_table", "concat_embeddings", "read_stopwords",
    "ScoredClassList", "classify", "compatibility", "project", "score_classes",
    "RankResult", "TrainConfig", "beta", "hinge", "objective", "rank_of",
    "subgradient", "train",
    "BinSpec", "bin_stratified_folds", "category_folds", "make_data_setting",
    "random_folds", "undersample",
    "Baseline", "ContingencyTable", "EvalReport", "McNemarResult",
    "average_precision", "build_contingency", "evaluate", "mcnemar",
    "random_baseline", "top1",
]
