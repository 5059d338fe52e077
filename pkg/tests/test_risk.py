"""Loss functions and risk estimators against hand-computed values and
identity properties."""

import math

import numpy as np
import pytest

from dflearn.risk import (
    composite_loss,
    logistic_loss,
    oracle_risk,
    risk_bl,
    risk_convdf,
    risk_fsiw,
    risk_nndf,
    risk_parts,
    risk_pnutw,
    risk_putw,
    risk_tw,
    zero_one_loss,
)

from helpers import biased_dataset, feature_matrix, oracle_dataset, random_snapshot_pair

LN2 = 0.6931471805599453


class TestLosses:
    def test_logistic_at_zero(self):
        assert float(logistic_loss(0.0)) == pytest.approx(LN2, abs=1e-15)

    def test_logistic_frozen_value(self):
        # log(1 + exp(-2)) evaluated independently
        assert float(logistic_loss(2.0)) == pytest.approx(0.12692801104297263, abs=1e-12)

    def test_logistic_no_overflow(self):
        value = float(logistic_loss(-1000.0))
        assert math.isfinite(value)
        assert value == pytest.approx(1000.0, abs=1e-9)

    def test_composite_symmetry_at_zero(self):
        assert float(composite_loss(0.0)) == 0.0

    def test_composite_is_linear_for_logistic(self):
        assert float(composite_loss(2.0)) == pytest.approx(-2.0, abs=1e-12)
        assert float(composite_loss(-3.5)) == pytest.approx(3.5, abs=1e-12)

    def test_zero_one(self):
        assert float(zero_one_loss(1.0)) == 1.0
        assert float(zero_one_loss(-1.0)) == 0.0
        assert float(zero_one_loss(0.0)) == 1.0  # tie convention


def single_row_biased(label, dimension=2):
    return biased_dataset(dimension, [((), label, 5.0, 1.0 if label == 1 else None)])


class TestRiskBl:
    def test_zero_weights_give_ln2(self):
        d = biased_dataset(3, [((0,), 1, 2.0, 0.5), ((), -1, 3.0)])
        assert risk_bl(np.zeros(3), d) == pytest.approx(LN2, abs=1e-15)

    def test_single_row_frozen(self):
        # bias-only model scoring 2 on a positive row
        d = single_row_biased(1)
        assert risk_bl(np.array([0.0, 2.0]), d) == pytest.approx(0.12692801104297263, abs=1e-12)

    def test_label_flip_weight_negate_symmetry(self, rng):
        d, _ = random_snapshot_pair(rng)
        w = rng.normal(size=8)
        flipped = biased_dataset(
            8,
            [
                (
                    tuple(int(i) for i in d.features.row(k).indices[:-1]),
                    -int(d.temporal_label[k]),
                    float(d.elapsed[k]),
                    None if d.temporal_label[k] == 1 else 0.0,
                )
                for k in range(len(d))
            ],
        )
        assert risk_bl(-w, flipped) == pytest.approx(risk_bl(w, d), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            risk_bl(np.zeros(3), biased_dataset(3, []))


class TestRiskTw:
    def test_zero_weights(self):
        e = oracle_dataset(3, [((), 1, 1), ((0,), -1, 1)])
        assert risk_tw(np.zeros(3), e) == pytest.approx(LN2, abs=1e-15)

    def test_single_negative_row(self):
        # score -1 on a class -1 row: loss log(1 + exp(-1))
        e = oracle_dataset(2, [((), -1, 1)])
        assert risk_tw(np.array([0.0, -1.0]), e) == pytest.approx(0.3132616875182228, abs=1e-12)

    def test_ignores_correctness_flag(self):
        late = oracle_dataset(2, [((), 1, -1)])
        assert risk_tw(np.zeros(2), late) == pytest.approx(LN2, abs=1e-15)


class TestConvdf:
    def test_no_late_converters_equals_bl(self, rng):
        d, _ = random_snapshot_pair(rng)
        e = oracle_dataset(8, [((0,), 1, 1), ((), -1, 1)])
        w = rng.normal(size=8)
        assert risk_convdf(w, d, e) == pytest.approx(risk_bl(w, d), abs=1e-15)

    def test_hand_computed_negative_risk(self):
        # single negative biased row at score 0; one late converter at score 1
        d = single_row_biased(-1)
        e = oracle_dataset(2, [((0,), 1, -1)])
        w = np.array([1.0, 0.0])
        assert risk_convdf(w, d, e) == pytest.approx(LN2 - 1.0, abs=1e-12)

    def test_zero_weights(self):
        d = single_row_biased(-1)
        e = oracle_dataset(2, [((0,), 1, -1)])
        assert risk_convdf(np.zeros(2), d, e) == pytest.approx(LN2, abs=1e-15)

    def test_matches_closed_form(self, rng):
        # uncorrected risk minus the mean score over late converters
        for _ in range(20):
            d, e = random_snapshot_pair(rng)
            w = rng.normal(size=8)
            scores = e.features.scores(w)
            late = (e.snapshot_correct == -1) & (e.class_label == 1)
            closed = risk_bl(w, d) - float(scores[late].sum()) / len(e)
            assert risk_convdf(w, d, e) == pytest.approx(closed, abs=1e-10)


class TestRiskParts:
    def test_recomposition_identity(self, rng):
        for _ in range(100):
            d, e = random_snapshot_pair(rng)
            w = rng.normal(size=8) * rng.uniform(0.1, 3.0)
            parts = risk_parts(w, d, e)
            assert parts.convdf_total == pytest.approx(risk_convdf(w, d, e), abs=1e-12)

    def test_all_positive_has_no_negative_part(self):
        d = biased_dataset(3, [((0,), 1, 2.0, 0.5), ((1,), 1, 4.0, 1.0)])
        e = oracle_dataset(3, [((), 1, -1)])
        parts = risk_parts(np.zeros(3), d, e)
        assert parts.neg_biased == 0.0

    def test_no_late_converters_zero_oracle_parts(self, rng):
        d, _ = random_snapshot_pair(rng)
        e = oracle_dataset(8, [((0,), 1, 1), ((), -1, 1)])
        parts = risk_parts(np.ones(8), d, e)
        assert parts.pos_oracle == 0.0
        assert parts.neg_oracle == 0.0

    def test_components_non_negative(self, rng):
        for _ in range(25):
            d, e = random_snapshot_pair(rng)
            parts = risk_parts(rng.normal(size=8), d, e)
            assert min(parts.pos_biased, parts.pos_oracle, parts.neg_biased,
                       parts.neg_oracle) >= 0.0


class TestNndf:
    def test_equals_convdf_when_clamp_inactive(self, rng):
        d, _ = random_snapshot_pair(rng)
        e = oracle_dataset(8, [((0,), 1, 1), ((), -1, 1)])  # no late converters
        w = rng.normal(size=8)
        assert risk_nndf(w, d, e) == pytest.approx(risk_convdf(w, d, e), abs=1e-15)

    def test_clamp_arithmetic(self):
        # neg parts 0.1 vs 0.4 with positive parts summing to 0.5: the
        # clamp keeps the total at 0.5 rather than 0.2
        from dflearn.risk import RiskParts

        parts = RiskParts(pos_biased=0.3, pos_oracle=0.2, neg_biased=0.1, neg_oracle=0.4)
        assert parts.nndf_total == pytest.approx(0.5)
        assert parts.convdf_total == pytest.approx(0.2)

    def test_dominates_convdf(self, rng):
        for _ in range(200):
            d, e = random_snapshot_pair(rng)
            w = rng.normal(size=8) * rng.uniform(0.1, 4.0)
            assert risk_nndf(w, d, e) >= risk_convdf(w, d, e)


class TestPutw:
    def test_zero_weights_give_ln2(self, rng):
        d, e = random_snapshot_pair(rng)
        assert risk_putw(np.zeros(8), d, e) == pytest.approx(LN2, abs=1e-12)

    def test_all_negative_oracle_reduces_to_unlabeled_term(self, rng):
        d, _ = random_snapshot_pair(rng)
        e = oracle_dataset(8, [((), -1, 1), ((1,), -1, 1)])
        w = rng.normal(size=8)
        scores = d.features.scores(w)
        expected = float(np.mean(np.logaddexp(0.0, scores)))
        assert risk_putw(w, d, e) == pytest.approx(expected, abs=1e-12)

    def test_single_rows_frozen(self):
        # one oracle positive at score 1, one biased row at score 1:
        # loss(1) - loss(-1) + loss(-1) = loss(1)
        d = single_row_biased(-1)
        e = oracle_dataset(2, [((0,), 1, 1)])
        w = np.array([0.0, 1.0])
        assert risk_putw(w, d, e) == pytest.approx(0.3132616875182228, abs=1e-12)


class TestPnutw:
    def test_endpoints(self, rng):
        d, e = random_snapshot_pair(rng)
        w = rng.normal(size=8)
        assert risk_pnutw(w, d, e, 0.0) == pytest.approx(risk_tw(w, e), abs=1e-15)
        assert risk_pnutw(w, d, e, 1.0) == pytest.approx(risk_putw(w, d, e), abs=1e-15)

    def test_midpoint_mixing(self, rng):
        d, e = random_snapshot_pair(rng)
        w = rng.normal(size=8)
        mixed = risk_pnutw(w, d, e, 0.5)
        assert mixed == pytest.approx(0.5 * risk_putw(w, d, e) + 0.5 * risk_tw(w, e), abs=1e-13)

    def test_omega_out_of_range(self, rng):
        d, e = random_snapshot_pair(rng)
        with pytest.raises(ValueError):
            risk_pnutw(np.zeros(8), d, e, 1.5)


class TestFsiwRisk:
    def test_unit_weights_equal_bl(self, rng):
        d, _ = random_snapshot_pair(rng)
        w = rng.normal(size=8)
        assert risk_fsiw(w, d, np.ones(len(d))) == pytest.approx(risk_bl(w, d), abs=1e-13)

    def test_zero_weights_give_zero(self, rng):
        d, _ = random_snapshot_pair(rng)
        assert risk_fsiw(rng.normal(size=8), d, np.zeros(len(d))) == 0.0

    def test_weighted_mean_arithmetic(self):
        d = biased_dataset(2, [((), 1, 2.0, 0.5), ((0,), -1, 3.0)])
        w = np.array([0.0, 0.7])  # scores: row0 = 0.7 (bias), row1 = 0.7
        loss_row0 = math.log(1 + math.exp(-0.7))
        assert risk_fsiw(w, d, [2.0, 0.0]) == pytest.approx(loss_row0, abs=1e-12)

    def test_negative_or_missing_weights_rejected(self, rng):
        d, _ = random_snapshot_pair(rng)
        with pytest.raises(ValueError):
            risk_fsiw(np.zeros(8), d, np.full(len(d), -0.1))
        with pytest.raises(ValueError):
            risk_fsiw(np.zeros(8), d, np.ones(len(d) - 1))


class TestOracleRisk:
    def test_zero_weights(self):
        features = feature_matrix(3, [(), (0,)])
        assert oracle_risk(np.zeros(3), features, [1, -1]) == pytest.approx(LN2, abs=1e-15)

    def test_single_row_arithmetic(self):
        features = feature_matrix(2, [(0,)])
        assert oracle_risk(np.array([2.0, 0.0]), features, [1]) == pytest.approx(
            0.12692801104297263, abs=1e-12
        )

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            oracle_risk(np.zeros(3), feature_matrix(3, []), [])
