"""Weighted approximate-rank pairwise (WARP) objective and trainer.

For a sample with true class ``y_n`` the per-class hinge is
``delta(y_n, y) + score(y) - score(y_n)`` with a unit margin for incorrect
classes.  The rank ``r`` of ``y_n`` counts margin-violating incorrect
classes, the ranking penalty ``beta(r)`` is the harmonic partial sum
``1 + 1/2 + ... + 1/r``, and the per-sample loss is
``beta(r)/r * sum_y max(0, hinge(y))`` with the convention ``0/0 = 0``.
The full objective averages this over samples and adds
``lambda * ||W||_F^2``.  Training is plain per-sample SGD with the
``beta(r)/r`` weight treated as constant between steps, a seeded shuffle per
epoch, early stopping on validation Top-1, and model selection over a
regularization grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import CompatibilityModel, EmbeddingTable, SampleSet, ValidationError

RANK_MODES = ("exact", "sampled")

DEFAULT_LAMBDA_GRID = (0.0, 0.01, 1.0, 10.0)


@dataclass(frozen=True)
class TrainConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    learning_rate: float = 0.01
    epochs: int = 50
    seed: int = 0
    rank_mode: str = "exact"
    sample_cap: int = 256
    init_scale: float = 0.001
    early_stop_patience: int = 10

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        if not self.lambda_grid:
            raise ValidationError("lambda_grid must be nonempty")
        if any(v < 0 for v in self.lambda_grid):
            raise ValidationError("lambda values must be nonnegative")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be a positive integer")
        if self.rank_mode not in RANK_MODES:
            raise ValidationError(f"rank_mode must be one of {RANK_MODES}")
        if self.sample_cap < 1:
            raise ValidationError("sample_cap must be a positive integer")
        if self.init_scale < 0:
            raise ValidationError("init_scale must be nonnegative")
        if self.early_stop_patience < 1:
            raise ValidationError("early_stop_patience must be a positive integer")

    def to_json(self) -> str:
        return json.dumps({
            "lambda_grid": list(self.lambda_grid),
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "seed": self.seed,
            "rank_mode": self.rank_mode,
            "sample_cap": self.sample_cap,
            "init_scale": self.init_scale,
            "early_stop_patience": self.early_stop_patience,
        }, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed train config ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise ValidationError("train config must be a JSON object")
        known = {"lambda_grid", "learning_rate", "epochs", "seed", "rank_mode",
                 "sample_cap", "init_scale", "early_stop_patience"}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"unknown train config keys: {sorted(unknown)}")
        if "lambda_grid" in obj:
            obj["lambda_grid"] = tuple(obj["lambda_grid"])
        return cls(**obj)


@dataclass(frozen=True)
class RankResult:
    """Rank of the true class plus the margin-violating incorrect classes."""

    rank: int
    violators: frozenset[str]


def beta(rank: int) -> float:
    """Harmonic ranking penalty ``sum_{i=1..rank} 1/i``; ``beta(0) = 0``."""
    if rank < 0:
        raise ValidationError("rank must be nonnegative")
    total = 0.0
    for i in range(1, rank + 1):
        total += 1.0 / i
    return total


def hinge(model: CompatibilityModel, sample: tuple[Sequence[float], str],
          y: str, semantic_table: EmbeddingTable) -> float:
    """Margin loss of class ``y`` against the sample's true class.

    Zero exactly when ``y`` is the true class; may be negative for
    well-separated incorrect classes (clamping happens in the objective).
    """
    acoustic, y_n = sample
    if y_n not in semantic_table:
        raise ValidationError(f"unknown class {y_n!r}")
    if y not in semantic_table:
        raise ValidationError(f"unknown class {y!r}")
    if y == y_n:
        return 0.0
    a = np.asarray(acoustic, dtype=np.float64)
    projected = model.weights.T @ a
    return float(1.0 + projected @ semantic_table[y] - projected @ semantic_table[y_n])


class _Problem:
    """Pre-indexed view of the training classes for fast per-sample steps."""

    def __init__(self, semantic_table: EmbeddingTable, train_classes):
        wanted = set(train_classes)
        unknown = wanted.difference(semantic_table.ids)
        if unknown:
            raise ValidationError(f"classes missing from semantic table: {sorted(unknown)}")
        self.class_ids = [cid for cid in semantic_table.ids if cid in wanted]
        self.index = {cid: i for i, cid in enumerate(self.class_ids)}
        self.phi = semantic_table.matrix(self.class_ids)
        self.n_classes = len(self.class_ids)
        # weights[r] = beta(r)/r, with the 0/0 = 0 convention at r = 0
        harmonic = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, self.n_classes + 1))])
        self.rank_weight = np.zeros(self.n_classes + 1)
        self.rank_weight[1:] = harmonic[1:] / np.arange(1, self.n_classes + 1)

    def hinges(self, weights: np.ndarray, acoustic: np.ndarray, yn_idx: int) -> np.ndarray:
        scores = self.phi @ (weights.T @ acoustic)
        h = scores - scores[yn_idx] + 1.0
        h[yn_idx] = 0.0
        return h


def rank_of(model: CompatibilityModel, sample: tuple[Sequence[float], str],
            semantic_table: EmbeddingTable, train_classes,
            mode: str = "exact", rng: np.random.Generator | None = None,
            sample_cap: int = 256, margin_rank: bool = True) -> RankResult:
    """Rank of the true class among the training classes.

    Exact mode counts every margin-violating incorrect class (or, with
    ``margin_rank=False``, every strictly higher-scoring incorrect class)
    and returns all hinge violators.  Sampled mode draws incorrect classes
    uniformly without replacement until one violates the margin or
    ``sample_cap`` draws are spent, and estimates the rank as
    ``floor((num_classes - 1) / draws)``.
    """
    acoustic, y_n = sample
    prob = _Problem(semantic_table, train_classes)
    if y_n not in prob.index:
        raise ValidationError(f"true class {y_n!r} is not a training class")
    a = np.asarray(acoustic, dtype=np.float64)
    yn_idx = prob.index[y_n]

    if mode == "exact":
        h = prob.hinges(model.weights, a, yn_idx)
        violators = frozenset(prob.class_ids[i] for i in np.flatnonzero(h > 0))
        if margin_rank:
            rank = len(violators)
        else:
            scores = prob.phi @ (model.weights.T @ a)
            rank = int(np.sum(scores > scores[yn_idx]))
        return RankResult(rank, violators)

    if mode != "sampled":
        raise ValidationError(f"rank mode must be one of {RANK_MODES}")
    if rng is None:
        raise ValidationError("sampled mode needs an explicit rng for determinism")
    found = _sampled_violator(model.weights, a, yn_idx, prob, rng, sample_cap)
    if found is None:
        return RankResult(0, frozenset())
    v_idx, rank = found
    return RankResult(rank, frozenset({prob.class_ids[v_idx]}))


def _sampled_violator(weights: np.ndarray, acoustic: np.ndarray, yn_idx: int,
                      prob: _Problem, rng: np.random.Generator,
                      sample_cap: int) -> tuple[int, int] | None:
    """One sampled-rank draw: (violator index, rank estimate), or None.

    Draws incorrect classes uniformly without replacement; on the first
    margin violation at draw ``t`` the rank estimate is
    ``floor((num_classes - 1) / t)``.
    """
    others = np.delete(np.arange(prob.n_classes), yn_idx)
    if others.size == 0:
        return None
    projected = weights.T @ acoustic
    score_yn = float(prob.phi[yn_idx] @ projected)
    order = rng.permutation(others.size)
    for draws, pos in enumerate(order[:sample_cap], start=1):
        idx = int(others[pos])
        if 1.0 + float(prob.phi[idx] @ projected) - score_yn > 0:
            return idx, (prob.n_classes - 1) // draws
    return None


def _resolve_samples(samples: SampleSet, acoustic_table: EmbeddingTable,
                     prob: _Problem) -> tuple[np.ndarray, np.ndarray]:
    if len(samples) == 0:
        raise ValidationError("sample set is empty")
    thetas = np.empty((len(samples), acoustic_table.dim))
    yn = np.empty(len(samples), dtype=np.intp)
    for i, rec in enumerate(samples):
        if rec.sample_id not in acoustic_table:
            raise ValidationError(f"no acoustic embedding for sample {rec.sample_id!r}")
        if rec.class_id not in prob.index:
            raise ValidationError(
                f"sample {rec.sample_id!r} has class {rec.class_id!r} outside the training classes")
        thetas[i] = acoustic_table[rec.sample_id]
        yn[i] = prob.index[rec.class_id]
    return thetas, yn


def objective(model: CompatibilityModel, train_set: SampleSet,
              acoustic_table: EmbeddingTable, semantic_table: EmbeddingTable,
              train_classes, lambda_: float) -> float:
    """Mean WARP loss over the sample set plus ``lambda * ||W||_F^2``."""
    prob = _Problem(semantic_table, train_classes)
    thetas, yn = _resolve_samples(train_set, acoustic_table, prob)
    total = 0.0
    for i in range(len(train_set)):
        h = prob.hinges(model.weights, thetas[i], yn[i])
        r = int(np.sum(h > 0))
        if r:
            total += prob.rank_weight[r] * float(np.sum(h[h > 0]))
    return total / len(train_set) + lambda_ * float(np.sum(model.weights ** 2))


def subgradient(model: CompatibilityModel, sample: tuple[Sequence[float], str],
                semantic_table: EmbeddingTable, train_classes,
                lambda_: float) -> np.ndarray:
    """Per-sample subgradient of the objective with respect to the weights.

    The ``beta(r)/r`` weight is held constant (it is piecewise constant in
    the weights); each violator ``y`` contributes the outer product
    ``theta (phi(y) - phi(y_n))^T`` and the regularizer adds ``2 lambda W``.
    """
    acoustic, y_n = sample
    prob = _Problem(semantic_table, train_classes)
    if y_n not in prob.index:
        raise ValidationError(f"true class {y_n!r} is not a training class")
    a = np.asarray(acoustic, dtype=np.float64)
    yn_idx = prob.index[y_n]
    h = prob.hinges(model.weights, a, yn_idx)
    grad = 2.0 * lambda_ * model.weights
    viol = np.flatnonzero(h > 0)
    if viol.size:
        weight = prob.rank_weight[viol.size]
        diff = prob.phi[viol].sum(axis=0) - viol.size * prob.phi[yn_idx]
        grad = grad + weight * np.outer(a, diff)
    return grad


def _validation_state(validation_set: SampleSet, acoustic_table: EmbeddingTable,
                      semantic_table: EmbeddingTable, validation_classes):
    wanted = set(validation_classes)
    unknown = wanted.difference(semantic_table.ids)
    if unknown:
        raise ValidationError(
            f"validation classes missing from semantic table: {sorted(unknown)}")
    ordered = [cid for cid in semantic_table.ids if cid in wanted]
    if not ordered:
        raise ValidationError("validation class set is empty")
    if len(validation_set) == 0:
        raise ValidationError("no validation samples")
    index = {cid: i for i, cid in enumerate(ordered)}
    thetas = np.empty((len(validation_set), acoustic_table.dim))
    truth = np.empty(len(validation_set), dtype=np.intp)
    for i, rec in enumerate(validation_set):
        if rec.sample_id not in acoustic_table:
            raise ValidationError(f"no acoustic embedding for sample {rec.sample_id!r}")
        thetas[i] = acoustic_table[rec.sample_id]
        truth[i] = index.get(rec.class_id, -1)
    phi = semantic_table.matrix(ordered)
    return thetas, truth, phi


def _validation_top1(weights: np.ndarray, thetas: np.ndarray, truth: np.ndarray,
                     phi: np.ndarray) -> float:
    scores = thetas @ weights @ phi.T
    # argmax takes the first maximum, i.e. semantic-table order breaks ties
    predicted = np.argmax(scores, axis=1)
    return float(np.mean(predicted == truth))


def train(train_set: SampleSet, validation_set: SampleSet,
          acoustic_table: EmbeddingTable, semantic_table: EmbeddingTable,
          train_classes, validation_classes, config: TrainConfig,
          log_fn: Callable[[dict], None] | None = None) -> CompatibilityModel:
    """Fit the projection matrix by WARP SGD with regularization grid search.

    For every value in ``config.lambda_grid`` the weights are re-initialized
    from a seeded uniform distribution and trained by per-sample SGD over a
    seeded shuffle of the training set, with early stopping on validation
    Top-1.  The returned model is the best validation Top-1 across the grid;
    ties prefer smaller lambda, then earlier grid position.  The whole
    procedure is deterministic given the config and input order.

    ``log_fn`` receives one record per epoch with the training objective and
    validation Top-1 (the objective is only computed when a logger is
    attached, since it costs a full pass).
    """
    prob = _Problem(semantic_table, train_classes)
    thetas, yn = _resolve_samples(train_set, acoustic_table, prob)
    val_thetas, val_truth, val_phi = _validation_state(
        validation_set, acoustic_table, semantic_table, validation_classes)
    d_a, d_s = acoustic_table.dim, semantic_table.dim
    n = len(train_set)
    lr = config.learning_rate
    seed_u = config.seed & (2 ** 64 - 1)

    best: tuple[float, float, int] | None = None  # (top1, lambda, grid index)
    best_weights: np.ndarray | None = None

    for gi, lam in enumerate(config.lambda_grid):
        rng = np.random.default_rng([seed_u, gi])
        weights = rng.uniform(-config.init_scale, config.init_scale, size=(d_a, d_s))
        run_best_top1 = -1.0
        run_best_weights = weights.copy()
        stale = 0
        for epoch in range(1, config.epochs + 1):
            for i in rng.permutation(n):
                grad = 2.0 * lam * weights
                if config.rank_mode == "exact":
                    h = prob.hinges(weights, thetas[i], yn[i])
                    viol = np.flatnonzero(h > 0)
                    if viol.size:
                        w = prob.rank_weight[viol.size]
                        diff = prob.phi[viol].sum(axis=0) - viol.size * prob.phi[yn[i]]
                        grad = grad + w * np.outer(thetas[i], diff)
                else:
                    found = _sampled_violator(weights, thetas[i], int(yn[i]), prob,
                                              rng, config.sample_cap)
                    if found is not None:
                        v_idx, rank = found
                        grad = grad + prob.rank_weight[rank] * np.outer(
                            thetas[i], prob.phi[v_idx] - prob.phi[yn[i]])
                weights = weights - lr * grad
            top1 = _validation_top1(weights, val_thetas, val_truth, val_phi)
            if log_fn is not None:
                model_now = CompatibilityModel(weights.copy(), lambda_=lam, seed=config.seed)
                log_fn({"lambda": lam, "epoch": epoch,
                        "train_objective": objective(model_now, train_set, acoustic_table,
                                                     semantic_table, train_classes, lam),
                        "validation_top1": top1})
            if top1 > run_best_top1:
                run_best_top1 = top1
                run_best_weights = weights.copy()
                stale = 0
            else:
                stale += 1
                if stale >= config.early_stop_patience:
                    break
        if best is None or run_best_top1 > best[0] or (run_best_top1 == best[0] and lam < best[1]):
            best = (run_best_top1, lam, gi)
            best_weights = run_best_weights

    assert best is not None and best_weights is not None
    top1, lam, _ = best
    return CompatibilityModel(
        weights=best_weights,
        lambda_=lam,
        seed=config.seed,
        notes=f"warp-sgd lr={lr} grid={list(config.lambda_grid)} val_top1={top1:.4f}",
        acoustic_dim=d_a,
        semantic_dim=d_s,
    )


__all__ = [
    "TrainConfig", "RankResult", "beta", "hinge", "rank_of", "objective",
    "subgradient", "train", "DEFAULT_LAMBDA_GRID", "RANK_MODES",
]
