"""Gradients, the training loop, regularization selection, serialization."""

from dataclasses import replace

import numpy as np
import pytest

from dflearn import risk
from dflearn.optim import (
    CRITEO_LAMBDA_GRID,
    DivergedError,
    LinearModel,
    TrainConfig,
    TrainData,
    grad_convdf,
    grad_fsiw,
    grad_nndf,
    l2_penalty,
    load_model,
    log_uniform_candidates,
    read_model_method,
    risk_and_gradient,
    save_model,
    select_lambda,
    train,
)
from dflearn.synthetic import generate_log, generate_params, make_snapshot

from helpers import (
    biased_dataset,
    feature_matrix,
    finite_difference,
    oracle_dataset,
    random_snapshot_pair,
    relative_gradient_error,
)


class TestL2Penalty:
    def test_zero(self):
        value, grad = l2_penalty(np.zeros(4))
        assert value == 0.0
        np.testing.assert_array_equal(grad, np.zeros(4))

    def test_mean_square(self):
        value, grad = l2_penalty(np.array([1.0, 1.0]))
        assert value == 1.0

    def test_gradient(self):
        _, grad = l2_penalty(np.array([3.0, 0.0]))
        np.testing.assert_allclose(grad, [3.0, 0.0])


def small_data(rng):
    d, e = random_snapshot_pair(rng, dimension=6, n_biased=30, n_oracle=25)
    labeled = feature_matrix(6, [(0,), (1,), (0, 2), ()] * 5)
    classes = np.array([1, -1, 1, -1] * 5)
    return TrainData(biased=d, oracle=e, labeled_features=labeled, labeled_classes=classes,
                     fsiw_weights=rng.uniform(0.0, 3.0, len(d)), omega=0.4)


RISK_OF = {
    "bl": lambda w, data: risk.risk_bl(w, data.biased),
    "tw": lambda w, data: risk.risk_tw(w, data.oracle),
    "convdf": lambda w, data: risk.risk_convdf(w, data.biased, data.oracle),
    "putw": lambda w, data: risk.risk_putw(w, data.biased, data.oracle),
    "pnutw": lambda w, data: risk.risk_pnutw(w, data.biased, data.oracle, 0.4),
    "fsiw": lambda w, data: risk.risk_fsiw(w, data.biased, data.fsiw_weights),
    "oracle": lambda w, data: risk.oracle_risk(w, data.labeled_features, data.labeled_classes),
}


class TestGradients:
    @pytest.mark.parametrize("method", sorted(RISK_OF))
    def test_matches_finite_differences(self, method, rng):
        data = small_data(rng)
        objective = RISK_OF[method]
        for _ in range(10):
            w = rng.normal(size=6)
            _, grad = risk_and_gradient(method, w, data)
            numeric = finite_difference(lambda v: objective(v, data), w)
            assert relative_gradient_error(grad, numeric) < 1e-5

    def test_value_matches_risk_function(self, rng):
        data = small_data(rng)
        for method, objective in RISK_OF.items():
            w = rng.normal(size=6)
            value, _ = risk_and_gradient(method, w, data)
            assert value == pytest.approx(objective(w, data), abs=1e-12)

    def test_convdf_equals_bl_plus_constant_direction(self, rng):
        data = small_data(rng)
        w = rng.normal(size=6)
        g_convdf = grad_convdf(w, data.biased, data.oracle)
        g_bl, = (risk_and_gradient("bl", w, data)[1],)
        late = (data.oracle.snapshot_correct == -1) & (data.oracle.class_label == 1)
        correction = np.zeros(6)
        for i in np.flatnonzero(late):
            correction[data.oracle.features.row(i).indices] -= 1.0 / len(data.oracle)
        np.testing.assert_allclose(g_convdf, g_bl + correction, atol=1e-12)

    def test_dfm_not_served_here(self, rng):
        with pytest.raises(ValueError):
            risk_and_gradient("dfm", np.zeros(6), small_data(rng))


def clamp_triggered_fixture():
    """Bias-only negatives in the biased set, strongly scored late
    converters in the oracle set: the negative difference goes below zero
    at the probe weights."""
    d = biased_dataset(2, [((), 1, 5.0, 1.0), ((), -1, 5.0)])
    e = oracle_dataset(2, [((0,), 1, -1, 3.0), ((0,), 1, -1, 4.0)])
    w = np.array([2.0, 0.0])
    parts = risk.risk_parts(w, d, e)
    assert parts.neg_biased - parts.neg_oracle < -0.5
    return d, e, w


class TestNndfBranches:
    def test_inactive_clamp_equals_convdf_gradient(self, rng):
        d, e = random_snapshot_pair(rng)
        w = np.zeros(8)  # at zero weights the negative difference is >= 0 here
        parts = risk.risk_parts(w, d, e)
        assert parts.neg_biased - parts.neg_oracle >= 0
        np.testing.assert_array_equal(
            grad_nndf(w, d, e, "plain"), grad_convdf(w, d, e)
        )

    def test_plain_branch_is_positive_part_gradient(self):
        d, e, w = clamp_triggered_fixture()

        def positive_part(v):
            parts = risk.risk_parts(v, d, e)
            return parts.pos_biased + parts.pos_oracle

        numeric = finite_difference(positive_part, w)
        assert relative_gradient_error(grad_nndf(w, d, e, "plain"), numeric) < 1e-5

    def test_ascent_branch_negates_negative_part_gradient(self):
        d, e, w = clamp_triggered_fixture()

        def negative_difference(v):
            parts = risk.risk_parts(v, d, e)
            return parts.neg_biased - parts.neg_oracle

        numeric = finite_difference(negative_difference, w)
        assert relative_gradient_error(grad_nndf(w, d, e, "ascent"), -numeric) < 1e-5

    def test_mode_validated(self):
        d, e, w = clamp_triggered_fixture()
        with pytest.raises(ValueError):
            grad_nndf(w, d, e, "sideways")


class TestFsiwGradient:
    def test_matches_finite_differences(self, rng):
        d, _ = random_snapshot_pair(rng, dimension=5, n_biased=25)
        weights = rng.uniform(0.0, 2.0, len(d))
        for _ in range(10):
            w = rng.normal(size=5)
            numeric = finite_difference(lambda v: risk.risk_fsiw(v, d, weights), w)
            assert relative_gradient_error(grad_fsiw(w, d, weights), numeric) < 1e-5


class TestTrainLoop:
    def test_descent_on_separable_points(self, rng):
        d = biased_dataset(3, [((0,), 1, 2.0, 0.1), ((0,), 1, 3.0, 0.1),
                               ((1,), -1, 2.0), ((1,), -1, 3.0)])
        config = TrainConfig(learning_rate=0.05, max_epochs=300)
        result = train("bl", TrainData(biased=d), config)
        trace = np.array(result.objective_trace)
        assert np.all(np.diff(trace) <= 1e-10)
        assert trace[-1] < trace[0]

    def test_trace_starts_at_initial_risk(self, rng):
        data = small_data(rng)
        for method in ("bl", "tw", "convdf", "putw", "fsiw", "oracle"):
            result = train(method, data, TrainConfig(max_epochs=1))
            expected = RISK_OF[method](np.zeros(6), data)
            assert result.objective_trace[0] == pytest.approx(expected, abs=1e-12)

    def test_regularized_trace_includes_penalty(self, rng):
        data = small_data(rng)
        config = TrainConfig(max_epochs=5, l2_lambda=0.3)
        result = train("bl", data, config)
        assert result.objective_trace[0] == pytest.approx(
            risk.risk_bl(np.zeros(6), data.biased), abs=1e-12
        )

    def test_deterministic(self, rng):
        data = small_data(rng)
        config = TrainConfig(max_epochs=120)
        a = train("convdf", data, config)
        b = train("convdf", data, config)
        np.testing.assert_array_equal(a.model.weights, b.model.weights)

    def test_minibatch_deterministic_given_seed(self, rng):
        data = small_data(rng)
        config = TrainConfig(max_epochs=40, batch_size=8, learning_rate=0.2, seed=11)
        a = train("nndf", data, config)
        b = train("nndf", data, config)
        np.testing.assert_array_equal(a.model.weights, b.model.weights)

    def test_logistic_mle_matches_empirical_frequency(self):
        rows = [((), 1, 1.0, 0.0)] * 3 + [((), -1, 1.0)] * 7
        d = biased_dataset(1, rows)
        config = TrainConfig(learning_rate=0.5, max_epochs=5000, grad_tolerance=1e-10)
        result = train("bl", TrainData(biased=d), config)
        probability = 1.0 / (1.0 + np.exp(-result.model.weights[0]))
        assert abs(probability - 0.3) < 1e-3

    def test_oracle_on_true_labels_equals_bl_bitwise(self, rng):
        d, _ = random_snapshot_pair(rng)
        data = TrainData(biased=d, labeled_features=d.features,
                         labeled_classes=d.temporal_label.astype(np.int64))
        config = TrainConfig(max_epochs=60)
        a = train("bl", data, config)
        b = train("oracle", data, config)
        np.testing.assert_array_equal(a.model.weights, b.model.weights)

    def test_nndf_without_trigger_reproduces_convdf_exactly(self):
        params = replace(generate_params(2, 1.0, samples_per_day=300),
                         delay_weights=np.zeros(20))
        log = generate_log(params, 3)
        d, e, _ = make_snapshot(log, 24.0)
        config = TrainConfig(max_epochs=80, l2_lambda=1e-4)
        a = train("convdf", TrainData(biased=d, oracle=e), config)
        b = train("nndf", TrainData(biased=d, oracle=e), config)
        np.testing.assert_array_equal(a.model.weights, b.model.weights)

    def test_divergence_guard(self):
        d = biased_dataset(1, [((), 1, 1.0, 0.0)])
        e = oracle_dataset(1, [((), 1, -1, 1.0)])
        config = TrainConfig(learning_rate=2e4, max_epochs=2000)
        with pytest.raises(DivergedError) as excinfo:
            train("convdf", TrainData(biased=d, oracle=e), config)
        assert excinfo.value.method == "convdf"

    def test_missing_datasets_rejected(self, rng):
        data = small_data(rng)
        with pytest.raises(ValueError):
            train("convdf", TrainData(biased=data.biased))
        with pytest.raises(ValueError):
            train("fsiw", TrainData(biased=data.biased))
        with pytest.raises(ValueError):
            train("oracle", TrainData(biased=data.biased))
        with pytest.raises(ValueError):
            train("mystery", data)

    def test_mini_batches_cover_both_datasets(self, rng):
        data = small_data(rng)
        config = TrainConfig(max_epochs=30, batch_size=7, learning_rate=0.3, seed=5)
        result = train("convdf", data, config)
        assert np.all(np.isfinite(result.model.weights))
        assert len(result.objective_trace) == 30


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(l2_lambda=-1.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(nn_mode="diagonal")
        with pytest.raises(ValueError):
            TrainConfig(max_epochs=0)


class TestSelectLambda:
    def test_single_candidate_returned(self, rng):
        data = small_data(rng)
        assert select_lambda("bl", data, [0.05]) == 0.05

    def test_no_candidates_rejected(self, rng):
        with pytest.raises(ValueError):
            select_lambda("bl", small_data(rng), [])

    def test_divergent_candidate_loses(self):
        d = biased_dataset(1, [((), 1, 1.0, 0.0)] * 4)
        e = oracle_dataset(1, [((), 1, -1, 1.0)] * 4)
        data = TrainData(biased=d, oracle=e)
        config = TrainConfig(learning_rate=2e4, max_epochs=3000)
        # unregularized corrected risk runs away; the penalized one is held
        chosen = select_lambda("convdf", data, [0.0, 1.0], config=config)
        assert chosen == 1.0

    def test_all_divergent_ties_to_larger(self):
        d = biased_dataset(1, [((), 1, 1.0, 0.0)] * 4)
        e = oracle_dataset(1, [((), 1, -1, 1.0)] * 4)
        config = TrainConfig(learning_rate=5e5, max_epochs=3000)
        chosen = select_lambda("convdf", TrainData(biased=d, oracle=e),
                               [1e-9, 1e-8], config=config)
        assert chosen == 1e-8

    def test_selects_a_sane_value_for_bl(self):
        # strongly informative feature: crushing regularization must lose
        rows = [((0,), 1, 1.0, 0.0)] * 20 + [((1,), -1, 1.0, None)] * 20
        data = TrainData(biased=biased_dataset(3, rows))
        config = TrainConfig(max_epochs=150)
        chosen = select_lambda("bl", data, [1e-4, 50.0], folds=2, config=config)
        assert chosen == 1e-4

    def test_fold_shortage_rejected(self):
        d = biased_dataset(2, [((), 1, 1.0, 0.0)])
        e = oracle_dataset(2, [((), 1, 1, 1.0), ((), -1, 1, 1.0)])
        with pytest.raises(ValueError):
            select_lambda("convdf", TrainData(biased=d, oracle=e), [0.1, 0.2])

    def test_criteo_grid_constant(self):
        assert CRITEO_LAMBDA_GRID == (0.1, 0.05, 0.01, 0.005)

    def test_log_uniform_candidates_range(self):
        values = log_uniform_candidates(20, 1e-6, 1e-1, seed=0)
        assert values.size == 20
        assert values.min() >= 1e-6
        assert values.max() <= 1e-1
        np.testing.assert_array_equal(values, log_uniform_candidates(20, 1e-6, 1e-1, seed=0))


class TestSerialization:
    def test_round_trip_exact(self, tmp_path, rng):
        weights = rng.normal(size=40)
        weights[rng.random(40) < 0.5] = 0.0
        model = LinearModel(weights)
        path = tmp_path / "model.txt"
        save_model(path, model, "convdf")
        recovered, method = load_model(path)
        assert method == "convdf"
        np.testing.assert_array_equal(recovered.weights, model.weights)
        assert read_model_method(path) == "convdf"

    def test_awkward_floats_survive(self, tmp_path):
        weights = np.array([1e-300, -1.2345678901234567e8, 0.1, 3.0000000000000004])
        path = tmp_path / "model.txt"
        save_model(path, LinearModel(weights), "bl")
        recovered, _ = load_model(path)
        np.testing.assert_array_equal(recovered.weights, weights)

    def test_non_model_file_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("hello\n", encoding="ascii")
        with pytest.raises(ValueError):
            read_model_method(path)
