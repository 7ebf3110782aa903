import numpy as np
import pytest

import curvediff as cd
from helpers import INTERVAL, direct_variance_oracle, random_design_points

LINE = cd.parse_model(["monomial:1"])
CONST = cd.parse_model(["monomial:0"])
TRIG2 = cd.model_preset("trig2")
TRIG4 = cd.model_preset("trig4")


def design(points):
    return cd.GroupDesign(INTERVAL, np.asarray(points, dtype=float))


class TestContinuousInformation:
    def test_linear_trend(self):
        info, info_inv = cd.continuous_information(LINE, INTERVAL)
        np.testing.assert_allclose(info, [[10.0]], atol=1e-12)
        np.testing.assert_allclose(info_inv, [[0.1]], atol=1e-13)

    def test_constant(self):
        info, _ = cd.continuous_information(CONST, INTERVAL)
        np.testing.assert_allclose(info, [[1.0]], atol=1e-12)

    def test_trig2_closed_form(self):
        m11 = 4.5 + (np.sin(20.0) - np.sin(2.0)) / 4.0
        m22 = 4.5 - (np.sin(20.0) - np.sin(2.0)) / 4.0
        m12 = (np.cos(20.0) - np.cos(2.0)) / 4.0
        f1 = np.array([np.sin(1.0), np.cos(1.0)])
        expected = np.array([[m11, m12], [m12, m22]]) + np.outer(f1, f1)
        info, _ = cd.continuous_information(TRIG2, INTERVAL)
        np.testing.assert_allclose(info, expected, atol=1e-12)
        np.testing.assert_allclose(
            info, [[5.20898, 0.66071], [0.66071, 4.79102]], atol=5e-6
        )


class TestIncrementGram:
    def test_linear_trend_telescopes(self):
        for points in ([1, 4, 10], [1, 2, 3, 9.5, 10]):
            np.testing.assert_allclose(
                cd.increment_gram(LINE, design(points)), [[9.0]], atol=1e-12
            )

    def test_constant_model_zero(self):
        np.testing.assert_allclose(
            cd.increment_gram(CONST, design([1, 5, 10])), [[0.0]], atol=1e-15
        )
        with pytest.raises(cd.SingularMatrixError, match="increment Gram"):
            cd.optimal_weights(CONST, design([1, 5, 10]))

    def test_quadratic_hand_value(self):
        model = cd.parse_model(["monomial:2"])
        value = cd.increment_gram(model, design([1, 5.5, 10]))
        expected = 29.25**2 / 4.5 + 69.75**2 / 4.5  # = 190.125 + 1081.125
        np.testing.assert_allclose(value, [[expected]], rtol=1e-12)
        assert value[0, 0] == pytest.approx(1271.25)

    def test_too_few_increments_reported(self):
        with pytest.raises(cd.SingularMatrixError, match="increments"):
            cd.optimal_weights(TRIG4, design([1, 5, 10]))


class TestOptimalWeights:
    def test_linear_trend_gives_unit_weights(self):
        weights = cd.optimal_weights(LINE, design([1, 2.2, 6.1, 10]))
        np.testing.assert_allclose(weights.vectors, np.ones((3, 1)), atol=1e-12)

    def test_unbiasedness_residual_small(self):
        d = design(np.linspace(1, 10, 5))
        weights = cd.optimal_weights(TRIG2, d)
        assert cd.check_unbiasedness(TRIG2, d, weights) < 1e-10

    def test_scaled_vectors_match_definition(self):
        d = design([1, 3, 7, 10])
        weights = cd.optimal_weights(TRIG2, d)
        np.testing.assert_allclose(
            weights.scaled, weights.vectors * np.sqrt(d.increments)[:, None]
        )


class TestCheckUnbiasedness:
    def test_zero_weights_linear(self):
        d = design([1, 4, 10])
        zero = cd.WeightSet.from_vectors(np.zeros((2, 1)), d.increments)
        assert cd.check_unbiasedness(LINE, d, zero) == pytest.approx(9.0)

    def test_zero_weights_constant(self):
        d = design([1, 4, 10])
        zero = cd.WeightSet.from_vectors(np.zeros((2, 1)), d.increments)
        assert cd.check_unbiasedness(CONST, d, zero) == pytest.approx(0.0)


class TestEstimatorSpec:
    def test_coefficient_identities(self):
        d = design(np.linspace(1, 10, 6))
        spec = cd.estimator_spec(TRIG2, d)
        w = spec.weights.vectors
        fa = TRIG2.eval(1.0)
        expected = np.empty_like(spec.coefficients)
        expected[0] = spec.info_inv @ (fa / 1.0 - w[0])
        for j in range(1, d.n - 1):
            expected[j] = spec.info_inv @ (w[j - 1] - w[j])
        expected[-1] = spec.info_inv @ w[-1]
        np.testing.assert_allclose(spec.coefficients, expected, atol=1e-12)

    def test_coefficient_form_unbiasedness(self):
        rng = np.random.default_rng(5)
        for model in (TRIG2, TRIG4):
            for _ in range(5):
                d = design(random_design_points(rng, rng.integers(model.m + 1, 9)))
                spec = cd.estimator_spec(model, d)
                identity = sum(
                    np.outer(c, model.eval(t)) for c, t in zip(spec.coefficients, d.points)
                )
                np.testing.assert_allclose(identity, np.eye(model.m), atol=1e-8)

    def test_weight_length_mismatch(self):
        d = design([1, 5, 10])
        bad = cd.WeightSet.from_vectors(np.ones((1, 2)), np.array([4.0]))
        with pytest.raises(ValueError, match="increments"):
            cd.estimator_spec(TRIG2, d, weights=bad)


class TestApplyEstimator:
    def test_recovers_parameters_from_noiseless_data(self):
        d = design(np.linspace(1, 10, 7))
        spec = cd.estimator_spec(TRIG2, d)
        theta = np.array([1.0, 1.0])
        data = TRIG2.eval(d.points).T @ theta
        np.testing.assert_allclose(cd.apply_estimator(spec, data), theta, atol=1e-9)

    def test_linear_trend(self):
        d = design([1, 3, 10])
        spec = cd.estimator_spec(LINE, d)
        np.testing.assert_allclose(cd.apply_estimator(spec, d.points), [1.0], atol=1e-12)

    def test_zero_data(self):
        d = design([1, 3, 10])
        spec = cd.estimator_spec(LINE, d)
        np.testing.assert_allclose(cd.apply_estimator(spec, np.zeros(3)), [0.0])

    def test_length_mismatch(self):
        spec = cd.estimator_spec(LINE, design([1, 3, 10]))
        with pytest.raises(ValueError, match="observations"):
            cd.apply_estimator(spec, np.zeros(4))


class TestEstimatorVariance:
    def test_linear_trend_attains_bound(self):
        for points in ([1, 2, 10], [1, 4.4, 6.2, 10], np.linspace(1, 10, 9)):
            spec = cd.estimator_spec(LINE, design(points))
            np.testing.assert_allclose(cd.estimator_variance(spec), [[0.1]], atol=1e-12)

    def test_constant_model_anchor_only(self):
        d = design([1, 10])
        zero = cd.WeightSet.from_vectors(np.zeros((1, 1)), d.increments)
        spec = cd.estimator_spec(CONST, d, weights=zero)
        np.testing.assert_allclose(cd.estimator_variance(spec), [[1.0]], atol=1e-12)

    def test_matches_direct_covariance_oracle(self):
        rng = np.random.default_rng(42)
        kernel = cd.brownian_kernel()
        for model in (TRIG2, TRIG4):
            for _ in range(10):
                d = design(random_design_points(rng, int(rng.integers(model.m + 2, 9))))
                weights = cd.random_unbiased_weights(model, d, rng)
                spec = cd.estimator_spec(model, d, weights=weights)
                oracle = direct_variance_oracle(spec, kernel, d.points)
                np.testing.assert_allclose(
                    cd.estimator_variance(spec), oracle, atol=1e-9
                )

    def test_loewner_optimality_of_optimal_weights(self):
        rng = np.random.default_rng(9)
        d = design(random_design_points(rng, 8))
        base = cd.estimator_variance(cd.estimator_spec(TRIG2, d))
        for _ in range(100):
            perturbed = cd.random_unbiased_weights(TRIG2, d, rng, noise=rng.uniform(0.01, 2.0))
            var = cd.estimator_variance(cd.estimator_spec(TRIG2, d, weights=perturbed))
            for _ in range(20):
                v = rng.standard_normal(2)
                assert v @ base @ v <= v @ var @ v + 1e-12

    def test_dominates_continuous_bound(self):
        rng = np.random.default_rng(13)
        for model in (TRIG2, TRIG4):
            d = design(random_design_points(rng, model.m + 3))
            spec = cd.estimator_spec(model, d)
            gap = cd.estimator_variance(spec) - spec.info_inv
            assert cd.smallest_eigenvalue(gap) >= -1e-9


class TestRandomUnbiasedWeights:
    def test_residual_small(self):
        rng = np.random.default_rng(21)
        for model in (TRIG2, TRIG4):
            d = design(random_design_points(rng, model.m + 4))
            weights = cd.random_unbiased_weights(model, d, rng)
            assert cd.check_unbiasedness(model, d, weights) <= 1e-8

    def test_differs_from_optimal_when_null_space_exists(self):
        rng = np.random.default_rng(22)
        d = design(random_design_points(rng, 7))
        random_w = cd.random_unbiased_weights(TRIG2, d, rng)
        optimal_w = cd.optimal_weights(TRIG2, d)
        assert np.max(np.abs(random_w.vectors - optimal_w.vectors)) > 1e-6


class TestWeightedLeastSquares:
    def test_linear_trend_under_brownian(self):
        kernel = cd.brownian_kernel()
        for points in ([1, 10], [1, 2, 7, 10], np.linspace(1, 10, 6)):
            var, _ = cd.weighted_least_squares(LINE, design(points), kernel)
            np.testing.assert_allclose(var, [[0.1]], atol=1e-10)

    def test_noiseless_recovery(self):
        kernel = cd.exponential_kernel(0.5)
        d = design(np.linspace(1, 10, 5))
        theta = np.array([2.0, -1.0])
        data = TRIG2.eval(d.points).T @ theta
        _, fitted = cd.weighted_least_squares(TRIG2, d, kernel, data=data)
        np.testing.assert_allclose(fitted, theta, atol=1e-9)

    def test_single_point_constant(self):
        var, _ = cd.weighted_least_squares(CONST, [1.0], cd.brownian_kernel())
        np.testing.assert_allclose(var, [[1.0]], atol=1e-12)

    def test_rank_deficiency_reported(self):
        with pytest.raises(cd.SingularMatrixError, match="rank deficient"):
            cd.weighted_least_squares(TRIG2, [2.0], cd.brownian_kernel())

    def test_increment_estimator_dominated_by_wlse(self):
        rng = np.random.default_rng(31)
        kernel = cd.brownian_kernel()
        for model in (TRIG2, TRIG4):
            d = design(random_design_points(rng, model.m + 3))
            spec = cd.estimator_spec(model, d)
            wlse_var, _ = cd.weighted_least_squares(model, d, kernel)
            gap = cd.estimator_variance(spec) - wlse_var
            assert cd.smallest_eigenvalue(gap) >= -1e-9
