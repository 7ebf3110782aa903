"""Linear unbiased estimators built from observation increments.

The estimator for one group combines the m-vector weights applied to
successive observation increments with an anchor term at the left
endpoint.  Everything in this module works in Brownian-motion time; for
a model with a non-Brownian triangular kernel, reduce it first (see
``models.to_brownian``) and pass the transformed basis and design.
The weighted least squares estimator at the bottom is the classical
finite-sample benchmark and works directly on original coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import GroupDesign, Interval, TriangularKernel
from .numerics import SingularMatrixError, integrate_outer, invert

__all__ = [
    "WeightSet",
    "EstimatorSpec",
    "derivative_gram",
    "continuous_information",
    "increment_gram",
    "optimal_weights",
    "check_unbiasedness",
    "estimator_spec",
    "estimator_variance",
    "apply_estimator",
    "random_unbiased_weights",
    "weighted_least_squares",
]


@dataclass(frozen=True)
class WeightSet:
    """Per-increment weight vectors of a linear unbiased estimator.

    ``vectors[j]`` multiplies the increment Y(t_{j+1}) - Y(t_j);
    ``scaled[j] = vectors[j] * sqrt(t_{j+1} - t_j)`` is the form entering
    the variance formula.
    """

    vectors: np.ndarray
    scaled: np.ndarray

    @classmethod
    def from_vectors(cls, vectors: np.ndarray, increments: np.ndarray) -> "WeightSet":
        vectors = np.asarray(vectors, dtype=float)
        increments = np.asarray(increments, dtype=float)
        if vectors.shape[0] != increments.size:
            raise ValueError(
                f"need one weight vector per increment: got {vectors.shape[0]} "
                f"vectors for {increments.size} increments"
            )
        return cls(vectors=vectors, scaled=vectors * np.sqrt(increments)[:, None])

    def __len__(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True)
class EstimatorSpec:
    """A fully assembled increment estimator for one group.

    ``coefficients[j]`` is the vector multiplying the j-th observation,
    so the estimate is ``coefficients.T @ observations``.  ``info_inv``
    is the inverse information matrix of the continuous-time benchmark
    estimator, which is also its variance lower bound.
    """

    model: object
    design: GroupDesign
    weights: WeightSet
    info_inv: np.ndarray
    coefficients: np.ndarray


def _deriv_and_domain(model, interval: Interval | None):
    """Derivative callable and integration domain, honoring pullbacks.

    Transformed bases expose a ``pullback_chart`` that rewrites their
    Brownian-time Gram integral over the original interval, where the
    integrand is smooth; plain models integrate natively.
    """
    chart = getattr(model, "pullback_chart", None)
    if chart is not None:
        return chart[2], chart[0], chart[1]
    if interval is None:
        raise ValueError("an interval is required for a plain regression model")
    return model.deriv, interval.a, interval.b


def derivative_gram(model, interval: Interval | None = None) -> np.ndarray:
    """Integral of the outer product of the basis derivative over time."""
    deriv, a, b = _deriv_and_domain(model, interval)
    return integrate_outer(deriv, a, b)


def continuous_information(
    model,
    interval: Interval,
    dgram: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Information matrix of the continuous-time benchmark and its inverse.

    The matrix is the derivative Gram integral plus the anchor term
    f(a) f(a)^T / a.  Its inverse is the variance attained by observing
    the full trajectory, hence a lower bound for any finite design.
    """
    if dgram is None:
        dgram = derivative_gram(model, interval)
    fa = np.asarray(model.eval(interval.a), dtype=float)
    info = dgram + np.outer(fa, fa) / interval.a
    try:
        info_inv = invert(info)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"continuous information matrix is singular: the basis is not "
            f"identifiable under Brownian errors ({exc})",
            cond=exc.cond,
        ) from None
    return info, info_inv


def increment_gram(model, design: GroupDesign) -> np.ndarray:
    """Sum over increments of outer(df, df) / dt for the basis values.

    Nonsingularity of this matrix is what makes optimal weights exist;
    it is checked where the matrix is inverted, not here.
    """
    values = np.asarray(model.eval(design.points), dtype=float).T
    return _increment_gram_from_values(values, design.points)


def _increment_gram_from_values(values: np.ndarray, points: np.ndarray) -> np.ndarray:
    steps = np.diff(points)
    scaled = np.diff(values, axis=0) / np.sqrt(steps)[:, None]
    return scaled.T @ scaled


def _solve_increment_gram(gram: np.ndarray, rhs: np.ndarray, n_increments: int) -> np.ndarray:
    m = gram.shape[0]
    try:
        inverse = invert(gram)
    except SingularMatrixError as exc:
        hint = ""
        if n_increments < m:
            hint = f" (only {n_increments} increments for {m} parameters)"
        raise SingularMatrixError(
            f"increment Gram matrix is singular{hint}: optimal weights are "
            f"undefined ({exc})",
            cond=exc.cond,
        ) from None
    return inverse @ rhs


def optimal_weights(
    model,
    design: GroupDesign,
    dgram: np.ndarray | None = None,
    incr_gram: np.ndarray | None = None,
) -> WeightSet:
    """Weight vectors minimizing the estimator variance in Loewner order.

    The j-th vector is G S^{-1} df_j / dt_j, where G is the derivative
    Gram integral and S the increment Gram matrix.  The result satisfies
    the unbiasedness identity exactly up to roundoff.
    """
    if dgram is None:
        dgram = derivative_gram(model, design.interval)
    if incr_gram is None:
        incr_gram = increment_gram(model, design)
    values = np.asarray(model.eval(design.points), dtype=float).T
    diffs = np.diff(values, axis=0)
    solved = _solve_increment_gram(incr_gram, dgram, len(design.increments))
    vectors = (diffs / design.increments[:, None]) @ solved
    return WeightSet.from_vectors(vectors, design.increments)


def check_unbiasedness(
    model,
    design: GroupDesign,
    weights: WeightSet,
    dgram: np.ndarray | None = None,
) -> float:
    """Max-norm residual of the unbiasedness identity for the weights."""
    if dgram is None:
        dgram = derivative_gram(model, design.interval)
    values = np.asarray(model.eval(design.points), dtype=float).T
    diffs = np.diff(values, axis=0)
    reproduced = weights.vectors.T @ diffs
    return float(np.max(np.abs(dgram - reproduced)))


def estimator_spec(
    model,
    design: GroupDesign,
    weights: WeightSet | None = None,
    info_inv: np.ndarray | None = None,
    dgram: np.ndarray | None = None,
) -> EstimatorSpec:
    """Assemble the per-observation coefficients of the estimator.

    With the increment weights w_2..w_n and the anchor f(a)/a, grouping
    terms by observation gives c_1 = inv(info) (f(a)/a - w_2),
    c_j = inv(info) (w_j - w_{j+1}) in between, and c_n = inv(info) w_n.
    """
    if dgram is None:
        dgram = derivative_gram(model, design.interval)
    if weights is None:
        weights = optimal_weights(model, design, dgram=dgram)
    if info_inv is None:
        _, info_inv = continuous_information(model, design.interval, dgram=dgram)
    if len(weights) != design.n - 1:
        raise ValueError(
            f"weight set has {len(weights)} vectors but the design has "
            f"{design.n - 1} increments"
        )
    fa = np.asarray(model.eval(design.interval.a), dtype=float)
    raw = np.empty((design.n, fa.size))
    raw[0] = fa / design.interval.a - weights.vectors[0]
    raw[1:-1] = weights.vectors[:-1] - weights.vectors[1:]
    raw[-1] = weights.vectors[-1]
    return EstimatorSpec(
        model=model,
        design=design,
        weights=weights,
        info_inv=info_inv,
        coefficients=raw @ info_inv.T,
    )


def estimator_variance(spec: EstimatorSpec) -> np.ndarray:
    """Covariance matrix of an unbiased increment estimator.

    Uses the closed form inv(info) [f(a) f(a)^T / a + sum of outer
    products of the scaled weights] inv(info); for unbiased weights this
    equals the direct covariance of the coefficient representation.
    """
    fa = np.asarray(spec.model.eval(spec.design.interval.a), dtype=float)
    inner = np.outer(fa, fa) / spec.design.interval.a + spec.weights.scaled.T @ spec.weights.scaled
    return spec.info_inv @ inner @ spec.info_inv


def apply_estimator(spec: EstimatorSpec, data) -> np.ndarray:
    """Evaluate the estimator on one vector of observations."""
    obs = np.asarray(data, dtype=float)
    if obs.shape[0] != spec.design.n:
        raise ValueError(
            f"expected {spec.design.n} observations, got {obs.shape[0]}"
        )
    return spec.coefficients.T @ obs


def random_unbiased_weights(
    model,
    design: GroupDesign,
    rng: np.random.Generator,
    noise: float = 1.0,
    dgram: np.ndarray | None = None,
) -> WeightSet:
    """A random member of the unbiased weight class, for verification.

    Takes the least-norm solution of the unbiasedness constraint and
    adds noise in the constraint null space, giving a feasible point
    that differs from the optimum whenever the null space is nonzero
    (that is, when there are more increments than parameters).
    """
    if dgram is None:
        dgram = derivative_gram(model, design.interval)
    values = np.asarray(model.eval(design.points), dtype=float).T
    diffs = np.diff(values, axis=0)
    base = np.linalg.pinv(diffs.T) @ dgram
    kernel_dim = diffs.shape[0] - np.linalg.matrix_rank(diffs.T)
    vectors = base.T
    if kernel_dim > 0:
        _, _, vh = np.linalg.svd(diffs.T)
        null_basis = vh[-kernel_dim:].T
        vectors = vectors + (null_basis @ rng.standard_normal((kernel_dim, dgram.shape[0]))) * noise
    return WeightSet.from_vectors(vectors, design.increments)


def weighted_least_squares(
    model,
    points,
    kernel: TriangularKernel,
    data=None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Weighted least squares variance (and fit) on original coordinates.

    ``points`` may be a GroupDesign or a plain array of times.  Returns
    the covariance matrix inv(X^T S^{-1} X) and, when observations are
    given, the fitted parameter vector.
    """
    pts = points.points if isinstance(points, GroupDesign) else np.atleast_1d(np.asarray(points, dtype=float))
    design_matrix = np.asarray(model.eval(pts), dtype=float).T
    gram = kernel.gram(pts)
    try:
        gram_inv = invert(gram)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"observation covariance matrix is singular ({exc})", cond=exc.cond
        ) from None
    normal = design_matrix.T @ gram_inv @ design_matrix
    try:
        variance = invert(normal)
    except SingularMatrixError as exc:
        raise SingularMatrixError(
            f"design matrix is rank deficient: weighted least squares is "
            f"undefined ({exc})",
            cond=exc.cond,
        ) from None
    if data is None:
        return variance, None
    obs = np.asarray(data, dtype=float)
    if obs.shape[0] != pts.size:
        raise ValueError(f"expected {pts.size} observations, got {obs.shape[0]}")
    return variance, variance @ design_matrix.T @ gram_inv @ obs
