import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvediff import (
    NotPositiveDefiniteError,
    SingularMatrixError,
    cholesky,
    integrate_outer,
    integrate_scalar,
    invert,
    smallest_eigenvalue,
)


class TestIntegrateOuter:
    def test_linear_trend(self):
        result = integrate_outer(lambda t: np.array([1.0]), 1.0, 10.0)
        np.testing.assert_allclose(result, [[9.0]], atol=1e-12)

    def test_constant_model_has_zero_gram(self):
        result = integrate_outer(lambda t: np.array([0.0]), 1.0, 10.0)
        np.testing.assert_allclose(result, [[0.0]], atol=1e-15)

    def test_trig_pair_matches_antiderivatives(self):
        # Closed forms: int cos^2 = t/2 + sin(2t)/4, int sin^2 = t/2 - sin(2t)/4,
        # int cos * (-sin) = (cos(2t) - cos(2a))/4 evaluated over [1, 10].
        result = integrate_outer(lambda t: np.array([np.cos(t), -np.sin(t)]), 1.0, 10.0)
        m11 = 4.5 + (np.sin(20.0) - np.sin(2.0)) / 4.0
        m22 = 4.5 - (np.sin(20.0) - np.sin(2.0)) / 4.0
        m12 = (np.cos(20.0) - np.cos(2.0)) / 4.0
        np.testing.assert_allclose(result, [[m11, m12], [m12, m22]], atol=1e-12)
        np.testing.assert_allclose(
            result, [[4.50091, 0.20606], [0.20606, 4.49909]], atol=5e-6
        )

    @pytest.mark.parametrize("degree", range(0, 31))
    def test_polynomial_exactness_to_degree_30(self, degree):
        value = integrate_scalar(lambda t: t**degree, 1.0, 10.0)
        exact = (10.0 ** (degree + 1) - 1.0) / (degree + 1)
        assert abs(value - exact) <= 1e-12 * max(1.0, exact)

    @pytest.mark.parametrize("k", [0, 5, 15])
    def test_outer_product_polynomials_exact(self, k):
        result = integrate_outer(lambda t: np.array([t**k]), 1.0, 10.0)
        exact = (10.0 ** (2 * k + 1) - 1.0) / (2 * k + 1)
        np.testing.assert_allclose(result, [[exact]], rtol=1e-12)

    def test_nonconvergence_raises(self):
        from curvediff.numerics import QuadratureError

        rng = np.random.default_rng(0)
        with pytest.raises(QuadratureError):
            integrate_outer(lambda t: np.array([rng.standard_normal()]), 0.0001, 1.0)


class TestInvert:
    def test_scalar(self):
        np.testing.assert_allclose(invert(np.array([[2.0]])), [[0.5]])

    def test_identity(self):
        np.testing.assert_allclose(invert(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(
            invert(np.array([[2.0, 0.0], [0.0, 4.0]])), [[0.5, 0.0], [0.0, 0.25]]
        )

    def test_singular_reports_condition(self):
        with pytest.raises(SingularMatrixError) as info:
            invert(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert info.value.cond is None or info.value.cond > 1e13

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**32 - 1))
    def test_double_inverse_is_identity(self, m, seed):
        rng = np.random.default_rng(seed)
        basis, _ = np.linalg.qr(rng.standard_normal((m, m)))
        eigs = rng.uniform(0.1, 10.0, size=m)
        matrix = basis @ np.diag(eigs) @ basis.T
        np.testing.assert_allclose(invert(invert(matrix)), matrix, atol=1e-8)


class TestCholesky:
    def test_scalar(self):
        np.testing.assert_allclose(cholesky(np.array([[4.0]])), [[2.0]])

    def test_identity(self):
        np.testing.assert_allclose(cholesky(np.eye(4)), np.eye(4))

    def test_hand_checked_two_by_two(self):
        np.testing.assert_allclose(
            cholesky(np.array([[1.0, 1.0], [1.0, 2.0]])), [[1.0, 0.0], [1.0, 1.0]]
        )

    def test_factor_reproduces_matrix(self):
        rng = np.random.default_rng(7)
        root = rng.standard_normal((6, 6))
        matrix = root @ root.T
        factor = cholesky(matrix)
        np.testing.assert_allclose(factor @ factor.T, matrix, atol=1e-9)
        assert np.allclose(factor, np.tril(factor))

    def test_semidefinite_rank_deficient(self):
        v = np.array([1.0, 2.0, 3.0])
        matrix = np.outer(v, v)
        factor = cholesky(matrix)
        np.testing.assert_allclose(factor @ factor.T, matrix, atol=1e-9)

    def test_negative_pivot_rejected(self):
        with pytest.raises(NotPositiveDefiniteError, match="pivot"):
            cholesky(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(NotPositiveDefiniteError):
            cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_smallest_eigenvalue():
    assert smallest_eigenvalue(np.diag([3.0, -2.0, 5.0])) == pytest.approx(-2.0)
