"""WARP loss, rank estimation, subgradient (finite-difference checked), SGD."""

import math

import numpy as np
import pytest

from zsaudio.corpus import (
    CompatibilityModel, EmbeddingTable, SampleRecord, SampleSet, ValidationError,
)
from zsaudio.warp import (
    TrainConfig, beta, hinge, objective, rank_of, subgradient, train,
)


def semantic(entries):
    dim = len(next(iter(dict(entries).values())))
    return EmbeddingTable(dim, entries, kind="semantic")


def model_from(weights):
    return CompatibilityModel(weights=np.asarray(weights, dtype=float))


def random_instance(rng, d_a=3, d_s=2, n_classes=4):
    """A random model, semantic table, acoustic vector, and true class."""
    w = rng.standard_normal((d_a, d_s))
    classes = [f"c{i}" for i in range(n_classes)]
    table = semantic({c: rng.standard_normal(d_s) for c in classes})
    theta = rng.standard_normal(d_a)
    y_n = classes[int(rng.integers(n_classes))]
    return model_from(w), table, theta, y_n, classes


class TestBeta:
    def test_zero(self):
        assert beta(0) == 0.0

    def test_small_values(self):
        assert beta(2) == pytest.approx(1.5)
        assert beta(3) == pytest.approx(11 / 6)

    def test_matches_harmonic_sum_oracle(self):
        for r in range(0, 60):
            assert beta(r) == pytest.approx(math.fsum(1.0 / i for i in range(1, r + 1)))

    def test_nondecreasing_with_nonincreasing_increments(self):
        values = [beta(r) for r in range(30)]
        increments = [b - a for a, b in zip(values, values[1:])]
        assert all(i > 0 for i in increments)
        assert all(b <= a for a, b in zip(increments, increments[1:]))

    def test_negative_rank_rejected(self):
        with pytest.raises(ValidationError):
            beta(-1)


class TestHinge:
    def test_true_class_is_exactly_zero(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            model, table, theta, y_n, _ = random_instance(rng)
            assert hinge(model, (theta, y_n), y_n, table) == 0.0

    def test_zero_weights_leave_only_the_margin(self):
        table = semantic({"a": (1.0, 2.0), "b": (3.0, 4.0)})
        model = model_from(np.zeros((2, 2)))
        assert hinge(model, ([1.0, 1.0], "a"), "b", table) == 1.0

    def test_matches_score_then_subtract_oracle(self):
        from zsaudio.compat import compatibility
        rng = np.random.default_rng(2)
        for _ in range(25):
            model, table, theta, y_n, classes = random_instance(rng)
            y = classes[int(rng.integers(len(classes)))]
            delta = 0.0 if y == y_n else 1.0
            expected = delta + compatibility(model, theta, table[y]) \
                - compatibility(model, theta, table[y_n])
            assert hinge(model, (theta, y_n), y, table) == pytest.approx(expected, rel=1e-9)

    def test_unknown_class(self):
        table = semantic({"a": (1.0,)})
        with pytest.raises(ValidationError, match="ghost"):
            hinge(model_from([[1.0]]), ([1.0], "a"), "ghost", table)


class TestRankOf:
    def test_zero_weights_rank_all_incorrect(self):
        table = semantic({c: (float(i), 1.0) for i, c in enumerate("abc")})
        model = model_from(np.zeros((2, 2)))
        result = rank_of(model, ([1.0, 1.0], "b"), table, ["a", "b", "c"])
        assert result.rank == 2
        assert result.violators == {"a", "c"}

    def test_separated_scores_rank_zero(self):
        # y_n scores 10, others score far below: margin satisfied everywhere
        table = semantic({"yn": (10.0,), "y1": (0.0,), "y2": (-5.0,)})
        model = model_from([[1.0]])
        result = rank_of(model, ([1.0], "yn"), table, ["yn", "y1", "y2"])
        assert result.rank == 0 and result.violators == frozenset()

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            model, table, theta, y_n, classes = random_instance(
                rng, n_classes=int(rng.integers(2, 9)))
            result = rank_of(model, (theta, y_n), table, classes)
            oracle = {y for y in classes if y != y_n
                      and hinge(model, (theta, y_n), y, table) > 0}
            assert result.violators == oracle
            assert result.rank == len(oracle)
            assert result.violators <= set(classes)

    def test_margin_rank_vs_pure_score_rank(self):
        # y scores inside the unit margin but below y_n: counted by the
        # margin convention, not by strict score ordering
        table = semantic({"yn": (1.0,), "y": (0.5,)})
        model = model_from([[1.0]])
        margin = rank_of(model, ([1.0], "yn"), table, ["yn", "y"])
        pure = rank_of(model, ([1.0], "yn"), table, ["yn", "y"], margin_rank=False)
        assert margin.rank == 1 and margin.violators == {"y"}
        assert pure.rank == 0 and pure.violators == {"y"}

    def test_true_class_must_be_a_training_class(self):
        table = semantic({"a": (1.0,), "b": (2.0,)})
        with pytest.raises(ValidationError, match="training class"):
            rank_of(model_from([[1.0]]), ([1.0], "b"), table, ["a"])

    def test_sampled_mode_zero_weights(self):
        # every draw violates, so the first draw stops the search
        classes = [f"c{i}" for i in range(7)]
        table = semantic({c: (float(i),) for i, c in enumerate(classes)})
        model = model_from([[0.0]])
        result = rank_of(model, ([1.0], "c3"), table, classes,
                         mode="sampled", rng=np.random.default_rng(0))
        assert result.rank == 6  # floor((7-1)/1)
        assert len(result.violators) == 1 and "c3" not in result.violators

    def test_sampled_mode_no_violator(self):
        table = semantic({"yn": (10.0,), "y1": (0.0,), "y2": (1.0,)})
        model = model_from([[1.0]])
        result = rank_of(model, ([1.0], "yn"), table, ["yn", "y1", "y2"],
                         mode="sampled", rng=np.random.default_rng(0))
        assert result.rank == 0 and result.violators == frozenset()

    def test_sampled_mode_deterministic_per_rng_seed(self):
        rng_state = np.random.default_rng(9)
        model, table, theta, y_n, classes = random_instance(rng_state, n_classes=10)
        a = rank_of(model, (theta, y_n), table, classes, mode="sampled",
                    rng=np.random.default_rng(42))
        b = rank_of(model, (theta, y_n), table, classes, mode="sampled",
                    rng=np.random.default_rng(42))
        assert a == b

    def test_sampled_mode_needs_rng(self):
        table = semantic({"a": (1.0,), "b": (2.0,)})
        with pytest.raises(ValidationError, match="rng"):
            rank_of(model_from([[1.0]]), ([1.0], "a"), table, ["a", "b"],
                    mode="sampled")


def make_training_data(rng, classes, table, acoustic_dim, n_per_class):
    entries, records = [], []
    for c in classes:
        for _ in range(n_per_class):
            sid = f"s{len(entries)}"
            entries.append((sid, rng.standard_normal(acoustic_dim)))
            records.append(SampleRecord(sid, c))
    return EmbeddingTable(acoustic_dim, entries, kind="acoustic"), SampleSet(records)


class TestObjective:
    def test_zero_weights_three_classes(self):
        # every incorrect class has hinge 1; r=2, so beta(2)/2 * 2 = 1.5
        table = semantic({c: (float(i), 0.0) for i, c in enumerate("abc")})
        acoustic = EmbeddingTable(2, [("s0", [1.0, 1.0])], kind="acoustic")
        samples = SampleSet([SampleRecord("s0", "a")])
        model = model_from(np.zeros((2, 2)))
        assert objective(model, samples, acoustic, table, ["a", "b", "c"], 0.0) \
            == pytest.approx(1.5)

    def test_all_rank_zero_leaves_regularizer_only(self):
        table = semantic({"yn": (5.0,), "y": (0.0,)})
        acoustic = EmbeddingTable(1, [("s0", [1.0])], kind="acoustic")
        samples = SampleSet([SampleRecord("s0", "yn")])
        model = model_from([[2.0]])
        lam = 0.7
        assert objective(model, samples, acoustic, table, ["yn", "y"], lam) \
            == lam * 4.0  # exactly lambda * ||W||_F^2, 0/0 convention

    def test_matches_direct_enumeration_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(15):
            n_classes = int(rng.integers(2, 7))
            classes = [f"c{i}" for i in range(n_classes)]
            table = semantic({c: rng.standard_normal(2) for c in classes})
            model = model_from(rng.standard_normal((3, 2)))
            acoustic = EmbeddingTable(
                3, [(f"s{i}", rng.standard_normal(3)) for i in range(6)],
                kind="acoustic")
            samples = SampleSet([
                SampleRecord(f"s{i}", classes[int(rng.integers(n_classes))])
                for i in range(6)])
            lam = float(rng.choice([0.0, 0.01, 1.0]))

            total = 0.0
            for rec in samples:
                hinges = [hinge(model, (acoustic[rec.sample_id], rec.class_id), y, table)
                          for y in classes]
                r = sum(1 for h in hinges if h > 0)
                if r:
                    total += (beta(r) / r) * sum(max(0.0, h) for h in hinges)
            expected = total / len(samples) + lam * float(np.sum(model.weights ** 2))

            got = objective(model, samples, acoustic, table, classes, lam)
            assert got == pytest.approx(expected, rel=1e-9)
            assert got >= 0.0

    def test_empty_train_set(self):
        table = semantic({"a": (1.0,)})
        acoustic = EmbeddingTable(1, [], kind="acoustic")
        with pytest.raises(ValidationError, match="empty"):
            objective(model_from([[0.0]]), SampleSet([]), acoustic, table, ["a"], 0.0)


class TestSubgradient:
    def test_rank_zero_no_regularization_is_zero_matrix(self):
        table = semantic({"yn": (5.0,), "y": (0.0,)})
        grad = subgradient(model_from([[1.0]]), ([1.0], "yn"), table,
                           ["yn", "y"], 0.0)
        np.testing.assert_array_equal(grad, np.zeros((1, 1)))

    def test_single_violator_formula(self):
        table = semantic({"yn": (1.0, 0.0), "y": (0.0, 1.0)})
        theta = np.array([2.0, 3.0])
        lam = 0.5
        w = np.full((2, 2), 0.1)
        grad = subgradient(model_from(w), (theta, "yn"), table, ["yn", "y"], lam)
        # beta(1)/1 = 1, so the hinge part is theta (phi_y - phi_yn)^T
        expected = np.outer(theta, table["y"] - table["yn"]) + 2 * lam * w
        np.testing.assert_allclose(grad, expected, rtol=1e-12)

    def test_matches_finite_differences(self):
        """Central differences of the objective at kink-free points."""
        rng = np.random.default_rng(5)
        h = 1e-5
        checked = 0
        while checked < 10:
            model, table, theta, y_n, classes = random_instance(rng)
            # stay away from hinge kinks where the objective is not smooth
            margins = [hinge(model, (theta, y_n), y, table)
                       for y in classes if y != y_n]
            if min(abs(m) for m in margins) < 1e-3:
                continue
            lam = float(rng.choice([0.0, 0.01, 1.0]))
            acoustic = EmbeddingTable(3, [("s0", theta)], kind="acoustic")
            samples = SampleSet([SampleRecord("s0", y_n)])

            grad = subgradient(model, (theta, y_n), table, classes, lam)
            fd = np.zeros_like(grad)
            w = model.weights
            for i in range(w.shape[0]):
                for j in range(w.shape[1]):
                    bump = np.zeros_like(w)
                    bump[i, j] = h
                    up = objective(model_from(w + bump), samples, acoustic,
                                   table, classes, lam)
                    down = objective(model_from(w - bump), samples, acoustic,
                                     table, classes, lam)
                    fd[i, j] = (up - down) / (2 * h)
            err = np.linalg.norm(grad - fd) / max(np.linalg.norm(grad),
                                                  np.linalg.norm(fd), 1e-12)
            assert err < 1e-4
            checked += 1


def separable_task(seed, n_classes=3, d=4, n_train=12, n_val=8, noise=0.05):
    """Clustered data whose class semantic vector is the cluster center.

    The identity projection is a perfect classifier by construction, which
    the test verifies before asking training to find a good W.
    """
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((n_classes, d))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    means *= 3.0
    classes = [f"k{i}" for i in range(n_classes)]
    table = semantic({c: means[i] for i, c in enumerate(classes)})
    entries, train_recs, val_recs = [], [], []
    for i, c in enumerate(classes):
        for n in range(n_train):
            sid = f"tr_{c}_{n}"
            entries.append((sid, means[i] + noise * rng.standard_normal(d)))
            train_recs.append(SampleRecord(sid, c))
        for n in range(n_val):
            sid = f"va_{c}_{n}"
            entries.append((sid, means[i] + noise * rng.standard_normal(d)))
            val_recs.append(SampleRecord(sid, c))
    acoustic = EmbeddingTable(d, entries, kind="acoustic")
    return acoustic, table, SampleSet(train_recs), SampleSet(val_recs), classes


def validation_top1(model, acoustic, table, val_set, classes):
    from zsaudio.compat import classify
    hits = sum(classify(model, acoustic[r.sample_id], table, classes) == r.class_id
               for r in val_set)
    return hits / len(val_set)


class TestTrain:
    def test_reaches_high_top1_on_separable_data(self):
        acoustic, table, train_set, val_set, classes = separable_task(0)
        # sanity: the construction really is solvable (identity W is perfect)
        identity = CompatibilityModel(weights=np.eye(4))
        assert validation_top1(identity, acoustic, table, val_set, classes) == 1.0

        config = TrainConfig(epochs=50, seed=0)
        model = train(train_set, val_set, acoustic, table, classes, classes, config)
        top1 = validation_top1(model, acoustic, table, val_set, classes)
        assert top1 >= 0.95

    def test_descent_in_expectation_over_seeds(self):
        # with the empty-grid degenerate case {0}, training should not make
        # the training objective worse than a fresh random init, on average
        final, initial = [], []
        for seed in range(5):
            acoustic, table, train_set, val_set, classes = separable_task(100 + seed)
            config = TrainConfig(lambda_grid=(0.0,), epochs=15, seed=seed)
            model = train(train_set, val_set, acoustic, table, classes, classes,
                          config)
            final.append(objective(model, train_set, acoustic, table, classes, 0.0))
            rng = np.random.default_rng(1000 + seed)
            w0 = rng.uniform(-config.init_scale, config.init_scale, (4, 4))
            initial.append(objective(model_from(w0), train_set, acoustic, table,
                                     classes, 0.0))
        assert np.mean(final) <= np.mean(initial)

    def test_bit_identical_reruns(self):
        acoustic, table, train_set, val_set, classes = separable_task(1)
        config = TrainConfig(epochs=8, seed=7)
        m1 = train(train_set, val_set, acoustic, table, classes, classes, config)
        m2 = train(train_set, val_set, acoustic, table, classes, classes, config)
        assert np.array_equal(m1.weights, m2.weights)
        assert m1.lambda_ == m2.lambda_

    def test_seed_changes_weights_not_quality(self):
        acoustic, table, train_set, val_set, classes = separable_task(2)
        models = [train(train_set, val_set, acoustic, table, classes, classes,
                        TrainConfig(epochs=50, seed=s)) for s in (0, 1)]
        assert not np.array_equal(models[0].weights, models[1].weights)
        for m in models:
            assert validation_top1(m, acoustic, table, val_set, classes) >= 0.95

    def test_lambda_tie_prefers_smaller(self):
        acoustic, table, train_set, val_set, classes = separable_task(3)
        config = TrainConfig(lambda_grid=(0.01, 0.0), epochs=50, seed=0)
        model = train(train_set, val_set, acoustic, table, classes, classes, config)
        # both lambdas solve this easy task perfectly; the tie must go to 0
        assert model.lambda_ == 0.0

    def test_epoch_log_covers_the_whole_grid(self):
        acoustic, table, train_set, val_set, classes = separable_task(4)
        records = []
        config = TrainConfig(epochs=3, seed=0)
        train(train_set, val_set, acoustic, table, classes, classes, config,
              log_fn=records.append)
        assert {r["lambda"] for r in records} == {0.0, 0.01, 1.0, 10.0}
        for r in records:
            assert {"lambda", "epoch", "train_objective", "validation_top1"} <= set(r)

    def test_no_validation_samples(self):
        acoustic, table, train_set, _, classes = separable_task(5)
        with pytest.raises(ValidationError, match="validation"):
            train(train_set, SampleSet([]), acoustic, table, classes, classes,
                  TrainConfig(epochs=1))

    def test_sampled_rank_mode_trains(self):
        acoustic, table, train_set, val_set, classes = separable_task(6)
        config = TrainConfig(epochs=50, seed=0, rank_mode="sampled", sample_cap=8)
        model = train(train_set, val_set, acoustic, table, classes, classes, config)
        assert validation_top1(model, acoustic, table, val_set, classes) >= 0.9


class TestTrainConfig:
    def test_json_round_trip(self):
        config = TrainConfig(lambda_grid=(0.0, 0.5), learning_rate=0.1,
                             epochs=7, seed=99, rank_mode="sampled",
                             sample_cap=32, init_scale=0.01,
                             early_stop_patience=3)
        assert TrainConfig.from_json(config.to_json()) == config

    def test_defaults_match_documented_grid(self):
        assert TrainConfig().lambda_grid == (0.0, 0.01, 1.0, 10.0)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValidationError, match="nonempty"):
            TrainConfig(lambda_grid=())

    def test_bad_values_rejected(self):
        with pytest.raises(ValidationError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValidationError):
            TrainConfig(rank_mode="guess")
        with pytest.raises(ValidationError):
            TrainConfig(lambda_grid=(-1.0,))

    def test_unknown_json_key_rejected(self):
        with pytest.raises(ValidationError, match="momentum"):
            TrainConfig.from_json('{"momentum": 0.9}')
