"""Variance-of-difference curves and the design criterion.

The object being minimized is an L_p norm, over the original design
interval, of the variance of the estimated difference between the two
group curves.  Each group's estimator lives in Brownian-reduced time;
the variance curve itself is always reported in original coordinates,
where the confidence band for the difference is drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimator import (
    EstimatorSpec,
    WeightSet,
    continuous_information,
    derivative_gram,
    estimator_spec,
    optimal_weights,
    estimator_variance,
)
from .models import (
    DesignPair,
    GroupDesign,
    Interval,
    RegressionModel,
    TriangularKernel,
    to_brownian,
)
from .numerics import SingularMatrixError, _panel_points, invert

__all__ = [
    "ComparisonProblem",
    "CriterionReport",
    "CriterionEvaluator",
    "GroupEngine",
    "problem_engines",
    "variance_difference_at",
    "continuous_lower_bound_at",
    "design_criterion",
    "write_criterion_curve",
]

SUP_GRID_POINTS = 2001
SUP_REFINE_TOL = 1e-8
PNORM_PANELS = 64
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ComparisonProblem:
    """Two regression models with kernels, sample sizes, and a norm order.

    ``p`` may be any order in [1, inf]; use ``float("inf")`` (or the
    string "inf") for the maximal-variance criterion.
    """

    model1: object
    model2: object
    kernel1: TriangularKernel
    kernel2: TriangularKernel
    interval: Interval
    n1: int = 5
    n2: int = 5
    p: float = float("inf")

    def __post_init__(self):
        p = float("inf") if isinstance(self.p, str) and self.p == "inf" else float(self.p)
        object.__setattr__(self, "p", p)
        if not p >= 1.0:
            raise ValueError(f"criterion order must be in [1, inf], got {self.p}")
        for label, model, n in (("n1", self.model1, self.n1), ("n2", self.model2, self.n2)):
            if n < model.m + 1:
                raise ValueError(
                    f"{label} = {n} is too small: need at least m + 1 = "
                    f"{model.m + 1} observations for the increment weights"
                )


@dataclass(frozen=True)
class CriterionReport:
    """Criterion value with the sampled variance and lower-bound curves."""

    value: float
    argmax_t: float | None
    curve: np.ndarray
    lower_curve: np.ndarray
    design: DesignPair
    p: float


class GroupEngine:
    """Cached per-group quantities of the Brownian-reduced problem.

    Holds the reduction, the derivative Gram integral, the continuous
    information matrix, and the anchor term, none of which depend on the
    design points; per-design quantities are computed on demand.
    """

    def __init__(self, model, kernel: TriangularKernel, interval: Interval, label: str = "group"):
        self.label = label
        self.model = model
        self.kernel = kernel
        self.interval = interval
        self.reduction = to_brownian(kernel, model, interval)
        self.native_interval = self.reduction.interval
        native = self.reduction.model
        self.dgram = derivative_gram(native, self.native_interval)
        self.info, self.info_inv = self._wrap(
            continuous_information, native, self.native_interval, dgram=self.dgram
        )
        anchor_vec = np.asarray(self.reduction.eval_original(interval.a), dtype=float)
        self.anchor = np.outer(anchor_vec, anchor_vec) / self.native_interval.a
        self.bound = self.info_inv
        self._dgram_scale = max(1.0, float(np.max(np.abs(self.dgram))))

    def _wrap(self, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SingularMatrixError as exc:
            raise SingularMatrixError(f"{self.label}: {exc}", cond=exc.cond) from None

    def native_points(self, points) -> np.ndarray:
        return self.reduction.map_points(points)

    def native_design(self, points) -> GroupDesign:
        # Spacing was validated in original coordinates; the monotone time
        # change preserves order but not any uniform spacing floor.
        return GroupDesign(self.native_interval, self.native_points(points), min_spacing=0.0)

    def scaled_increments(self, points) -> np.ndarray:
        """Basis increments over sqrt of Brownian-time steps, (n-1, m)."""
        pts = np.asarray(points, dtype=float)
        values = np.asarray(self.reduction.eval_original(pts), dtype=float).T
        steps = np.diff(self.native_points(pts))
        return np.diff(values, axis=0) / np.sqrt(steps)[:, None]

    def increment_gram(self, points) -> np.ndarray:
        scaled = self.scaled_increments(points)
        return scaled.T @ scaled

    def _solve_gram(self, gram: np.ndarray, points) -> np.ndarray:
        try:
            return invert(gram) @ self.dgram
        except SingularMatrixError as exc:
            raise SingularMatrixError(
                f"{self.label}: increment Gram matrix is singular for design "
                f"{np.asarray(points)}; optimal weights are undefined ({exc})",
                cond=exc.cond,
            ) from None

    def variance_matrix(self, points, weights: WeightSet | None = None) -> np.ndarray:
        """Estimator covariance for optimal (or explicitly given) weights."""
        if weights is None:
            solved = self._solve_gram(self.increment_gram(points), points)
            inner = self.anchor + self.dgram @ solved
        else:
            inner = self.anchor + weights.scaled.T @ weights.scaled
        return self.info_inv @ inner @ self.info_inv

    def batch_inner(self, points: np.ndarray) -> np.ndarray:
        """Optimal-weight inner matrices for a batch of designs, (P, m, m).

        Designs whose increment Gram matrix is singular or too badly
        conditioned to solve reliably get +inf entries, so a sup-based
        objective stays total and such designs are repelled instead of
        being scored with solver garbage.
        """
        pts = np.asarray(points, dtype=float)
        values = np.asarray(self.reduction.eval_original(pts), dtype=float)
        values = np.moveaxis(values, 0, -1)  # (P, n, m)
        steps = np.diff(self.native_points(pts), axis=-1)
        scaled = np.diff(values, axis=1) / np.sqrt(steps)[..., None]
        gram = np.einsum("pjm,pjk->pmk", scaled, scaled)
        rhs = np.broadcast_to(self.dgram, gram.shape)
        solved = np.empty_like(gram)
        try:
            with np.errstate(all="ignore"):
                solved = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            for i in range(gram.shape[0]):
                try:
                    solved[i] = np.linalg.solve(gram[i], self.dgram)
                except np.linalg.LinAlgError:
                    solved[i] = np.inf
        # Solve residual doubles as a condition gate: a relative residual
        # of r means the weights carry roughly cond ~ r / eps of noise.
        with np.errstate(all="ignore"):
            residual = np.abs(gram @ solved - rhs).max(axis=(1, 2))
            bad = ~(residual <= 1e-8 * self._dgram_scale)
            solved[bad] = np.inf
            inner = self.anchor + self.dgram @ solved
        return self.info_inv @ inner @ self.info_inv

    def weights(self, points) -> WeightSet:
        steps = np.diff(self.native_points(points))
        scaled = self.scaled_increments(points)
        solved = self._solve_gram(scaled.T @ scaled, points)
        vectors = (scaled / np.sqrt(steps)[:, None]) @ solved
        return WeightSet.from_vectors(vectors, steps)

    def estimator(self, points, weights: WeightSet | None = None) -> EstimatorSpec:
        design = self.native_design(points)
        if weights is None:
            weights = self.weights(points)
        return self._wrap(
            estimator_spec,
            self.reduction.model,
            design,
            weights=weights,
            info_inv=self.info_inv,
            dgram=self.dgram,
        )

    def fit(self, spec: EstimatorSpec, observations, points) -> np.ndarray:
        """Apply a native estimator to observations taken in original time."""
        rescaled = np.asarray(observations, dtype=float) / self.reduction.amplitude(points)
        return spec.coefficients.T @ rescaled

    def basis_at(self, t) -> np.ndarray:
        return np.asarray(self.model.eval(t), dtype=float)


def problem_engines(problem: ComparisonProblem) -> tuple[GroupEngine, GroupEngine]:
    """Build the two per-group engines of a comparison problem."""
    return (
        GroupEngine(problem.model1, problem.kernel1, problem.interval, label="group 1"),
        GroupEngine(problem.model2, problem.kernel2, problem.interval, label="group 2"),
    )


class CriterionEvaluator:
    """Reusable evaluator caching grids and group engines.

    The sup criterion scans a uniform grid in original time and refines
    around the grid argmax; the batch entry points drive the design
    search without rebuilding any design-independent quantity.
    """

    def __init__(self, problem: ComparisonProblem, grid_points: int = SUP_GRID_POINTS):
        self.problem = problem
        self.engines = problem_engines(problem)
        iv = problem.interval
        self.grid = np.linspace(iv.a, iv.b, grid_points)
        self._basis_outer = [self._outer_products(eng, self.grid) for eng in self.engines]
        self._grid_bound = self.lower_bound(self.grid)
        # The variance curve dominates the continuous bound pointwise, so a
        # finite batch value below this floor can only be solver garbage.
        self._sup_floor = float(np.max(self._grid_bound)) * (1.0 - 1e-9)
        if math.isfinite(problem.p):
            nodes, weights = _panel_points(iv.a, iv.b, PNORM_PANELS)
            self._pnodes = nodes
            self._pweights = weights
            self._pnode_outer = [self._outer_products(eng, nodes) for eng in self.engines]
            bound_p = np.power(self.lower_bound(nodes), problem.p) @ weights
            self._pnorm_floor = float(np.power(bound_p, 1.0 / problem.p)) * (1.0 - 1e-9)

    @staticmethod
    def _outer_products(engine: GroupEngine, ts: np.ndarray) -> np.ndarray:
        values = engine.basis_at(ts)
        m = values.shape[0]
        return (values[:, None, :] * values[None, :, :]).reshape(m * m, ts.size)

    def variance_matrices(self, designs: DesignPair):
        return tuple(
            eng.variance_matrix(grp.points)
            for eng, grp in zip(self.engines, (designs.group1, designs.group2))
        )

    def curve(self, matrices, ts=None) -> np.ndarray:
        """Variance of the estimated difference at the grid (or given) times."""
        if ts is None:
            total = np.zeros(self.grid.size)
            for outer, matrix in zip(self._basis_outer, matrices):
                total += matrix.reshape(-1) @ outer
            return total
        return self._at(matrices, ts)

    def _at(self, matrices, ts) -> float | np.ndarray:
        total = 0.0
        for eng, matrix in zip(self.engines, matrices):
            values = eng.basis_at(ts)
            total = total + np.einsum("i...,ij,j...->...", values, matrix, values)
        return total

    def lower_bound(self, ts) -> np.ndarray:
        return self._at([eng.bound for eng in self.engines], ts)

    def _batch_curve(self, points1, points2, outer_index: int | None = None) -> np.ndarray:
        inners = (
            self.engines[0].batch_inner(points1),
            self.engines[1].batch_inner(points2),
        )
        source = self._basis_outer if outer_index is None else self._pnode_outer
        n_nodes = source[0].shape[1]
        total = np.zeros((points1.shape[0], n_nodes))
        for inner, outer in zip(inners, source):
            flat = inner.reshape(inner.shape[0], -1)
            with np.errstate(invalid="ignore"):
                total += flat @ outer
        return np.where(np.isfinite(total), total, np.inf)

    def sup_batch(self, points1: np.ndarray, points2: np.ndarray) -> np.ndarray:
        """Grid sup of the variance curve for a batch of design pairs."""
        values = self._batch_curve(points1, points2).max(axis=1)
        return np.where(values >= self._sup_floor, values, np.inf)

    def pnorm_batch(self, points1: np.ndarray, points2: np.ndarray) -> np.ndarray:
        """L_p criterion on fixed quadrature nodes for a batch of pairs."""
        p = self.problem.p
        curves = self._batch_curve(points1, points2, outer_index=1)
        with np.errstate(over="ignore", invalid="ignore"):
            integral = np.power(curves, p) @ self._pweights
            result = np.power(integral, 1.0 / p)
        result = np.where(np.isfinite(result), result, np.inf)
        return np.where(result >= self._pnorm_floor, result, np.inf)

    def objective_batch(self, points1: np.ndarray, points2: np.ndarray) -> np.ndarray:
        if math.isinf(self.problem.p):
            return self.sup_batch(points1, points2)
        return self.pnorm_batch(points1, points2)

    def report(self, designs: DesignPair) -> CriterionReport:
        matrices = self.variance_matrices(designs)
        grid_curve = self.curve(matrices)
        lower = self._grid_bound
        if math.isinf(self.problem.p):
            k = int(np.argmax(grid_curve))
            lo = self.grid[max(k - 1, 0)]
            hi = self.grid[min(k + 1, self.grid.size - 1)]
            t_star, refined = _golden_max(lambda t: float(self._at(matrices, t)), lo, hi)
            value = max(refined, float(grid_curve[k]))
            argmax_t = t_star if refined >= grid_curve[k] else float(self.grid[k])
        else:
            fun = lambda ts: np.power(self._at(matrices, ts), self.problem.p)
            integral = float(np.asarray(fun(self._pnodes)) @ self._pweights)
            value = integral ** (1.0 / self.problem.p)
            argmax_t = None
        return CriterionReport(
            value=float(value),
            argmax_t=argmax_t,
            curve=np.column_stack([self.grid, grid_curve]),
            lower_curve=lower,
            design=designs,
            p=self.problem.p,
        )


def _golden_max(fun, lo: float, hi: float, tol: float = SUP_REFINE_TOL) -> tuple[float, float]:
    """Golden-section maximization of a unimodal bracket to tol in t."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = fun(x1), fun(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = fun(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = fun(x1)
    t_star = 0.5 * (lo + hi)
    return t_star, fun(t_star)


def variance_difference_at(problem: ComparisonProblem, designs: DesignPair, t):
    """Variance of the estimated difference of the curves at time t.

    Uses the optimal weights for both groups; t may be a scalar or an
    array of original-coordinate times.
    """
    evaluator = CriterionEvaluator(problem, grid_points=2)
    matrices = evaluator.variance_matrices(designs)
    return evaluator._at(matrices, t)


def continuous_lower_bound_at(problem: ComparisonProblem, t):
    """Full-trajectory lower bound for the variance of the difference."""
    evaluator = CriterionEvaluator(problem, grid_points=2)
    return evaluator.lower_bound(t)


def design_criterion(problem: ComparisonProblem, designs: DesignPair) -> CriterionReport:
    """Evaluate the L_p design criterion for one pair of designs."""
    return CriterionEvaluator(problem).report(designs)


def write_criterion_curve(report: CriterionReport, path) -> None:
    """Write the sampled variance and lower-bound curves as delimited text."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("t,phi_n,lower_bound\n")
        for (t, value), bound in zip(report.curve, report.lower_curve):
            handle.write(f"{t:.12g},{value:.12g},{bound:.12g}\n")
