"""Sampling, parametric-bootstrap bands, and coverage experiments.

Observations are drawn in original time coordinates from the Gaussian
process defined by each group's kernel.  Simultaneous confidence bands
for the difference of the two curves use the parametric bootstrap: the
band constant is the empirical quantile of the sup of the standardized
difference process under the plug-in covariance matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criterion import ComparisonProblem, problem_engines
from .estimator import weighted_least_squares
from .models import DesignPair, GroupDesign, TriangularKernel
from .numerics import cholesky

__all__ = [
    "BandError",
    "SimulationPlan",
    "BandResult",
    "ExperimentSummary",
    "sample_observations",
    "bootstrap_band",
    "coverage_experiment",
    "write_band",
    "write_summary",
]

ESTIMATOR_KINDS = ("increment", "wlse")


class BandError(ArithmeticError):
    """The band denominator degenerated somewhere on the grid."""


@dataclass(frozen=True)
class SimulationPlan:
    """Inputs of one coverage experiment."""

    problem: ComparisonProblem
    designs: DesignPair
    theta1: np.ndarray
    theta2: np.ndarray
    replications: int
    seed: int
    alpha: float = 0.05
    bootstrap_reps: int = 1000
    grid_points: int = 201
    estimator: str = "increment"

    def __post_init__(self):
        object.__setattr__(self, "theta1", np.asarray(self.theta1, dtype=float))
        object.__setattr__(self, "theta2", np.asarray(self.theta2, dtype=float))
        if self.theta1.shape != (self.problem.model1.m,):
            raise ValueError(
                f"theta1 has shape {self.theta1.shape}, expected ({self.problem.model1.m},)"
            )
        if self.theta2.shape != (self.problem.model2.m,):
            raise ValueError(
                f"theta2 has shape {self.theta2.shape}, expected ({self.problem.model2.m},)"
            )
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.replications < 1 or self.bootstrap_reps < 1 or self.grid_points < 1:
            raise ValueError("replications, bootstrap_reps, and grid_points must be positive")
        if self.estimator not in ESTIMATOR_KINDS:
            raise ValueError(f"estimator must be one of {ESTIMATOR_KINDS}, got {self.estimator!r}")


@dataclass(frozen=True)
class BandResult:
    """One simultaneous confidence band for the difference of the curves."""

    constant: float
    grid: np.ndarray
    center: np.ndarray
    halfwidth: np.ndarray
    maxwidth: float


@dataclass(frozen=True)
class ExperimentSummary:
    """Aggregated coverage results plus the averaged band curves."""

    coverage: float
    mean_maxwidth: float
    replications: int
    alpha: float
    seed: int
    grid: np.ndarray
    mean_center: np.ndarray
    mean_lower: np.ndarray
    mean_upper: np.ndarray
    true_diff: np.ndarray


def sample_observations(
    model,
    kernel: TriangularKernel,
    design: GroupDesign,
    theta,
    rng: np.random.Generator,
    size: int | None = None,
) -> np.ndarray:
    """Draw correlated observations at the design points.

    Returns one length-n vector, or a (size, n) matrix of independent
    replicates when ``size`` is given.  Observations are the model mean
    plus the Cholesky factor of the kernel Gram matrix applied to
    standard normal draws.
    """
    theta = np.asarray(theta, dtype=float)
    mean = np.asarray(model.eval(design.points), dtype=float).T @ theta
    factor = cholesky(kernel.gram(design.points))
    if size is None:
        return mean + factor @ rng.standard_normal(design.n)
    return mean + rng.standard_normal((size, design.n)) @ factor.T


def bootstrap_band(
    estimates,
    variances,
    models,
    grid,
    alpha: float = 0.05,
    reps: int = 1000,
    rng: np.random.Generator | None = None,
) -> BandResult:
    """Parametric-bootstrap simultaneous band for the curve difference.

    Draws centered normal parameter pairs with the plug-in covariance
    matrices, forms the sup over the grid of the standardized difference
    process, and takes its empirical (1 - alpha) quantile as the band
    constant.
    """
    rng = rng or np.random.default_rng()
    grid = np.asarray(grid, dtype=float)
    basis1 = np.asarray(models[0].eval(grid), dtype=float)
    basis2 = np.asarray(models[1].eval(grid), dtype=float)
    var1 = np.asarray(variances[0], dtype=float)
    var2 = np.asarray(variances[1], dtype=float)
    denom_sq = np.einsum("it,ij,jt->t", basis1, var1, basis1) + np.einsum(
        "it,ij,jt->t", basis2, var2, basis2
    )
    if np.min(denom_sq) < 1e-14:
        t_bad = float(grid[int(np.argmin(denom_sq))])
        raise BandError(
            f"band variance degenerates at t = {t_bad:g} "
            f"({np.min(denom_sq):.3e} < 1e-14)"
        )
    denom = np.sqrt(denom_sq)
    draws1 = rng.standard_normal((reps, var1.shape[0])) @ cholesky(var1).T
    draws2 = rng.standard_normal((reps, var2.shape[0])) @ cholesky(var2).T
    deviations = draws1 @ basis1 - draws2 @ basis2
    sup_stats = np.max(np.abs(deviations) / denom, axis=1)
    constant = float(np.quantile(sup_stats, 1.0 - alpha))
    center = np.asarray(estimates[0], dtype=float) @ basis1 - np.asarray(
        estimates[1], dtype=float
    ) @ basis2
    halfwidth = constant * denom
    return BandResult(
        constant=constant,
        grid=grid,
        center=center,
        halfwidth=halfwidth,
        maxwidth=2.0 * float(np.max(halfwidth)),
    )


def _group_fitters(plan: SimulationPlan):
    """Per-group (variance, fit) pairs for the configured estimator."""
    engines = problem_engines(plan.problem)
    groups = (plan.designs.group1, plan.designs.group2)
    fitters = []
    for engine, design in zip(engines, groups):
        points = design.points
        if plan.estimator == "increment":
            spec = engine.estimator(points)
            variance = engine.variance_matrix(points)
            fit = lambda y, e=engine, s=spec, p=points: e.fit(s, y, p)
        else:
            variance, _ = weighted_least_squares(engine.model, points, engine.kernel)
            fit = (
                lambda y, m=engine.model, p=points, k=engine.kernel: weighted_least_squares(
                    m, p, k, data=y
                )[1]
            )
        fitters.append((variance, fit))
    return fitters


def coverage_experiment(plan: SimulationPlan, rng_factory=None) -> ExperimentSummary:
    """Simulate both groups repeatedly and audit the bootstrap bands.

    Per replication: sample observations, estimate both parameter
    vectors, build the band, record whether the true difference curve
    stays inside everywhere and how wide the band gets.  Replication
    randomness comes from independent child streams of the master seed,
    so aggregates do not depend on evaluation order.  ``rng_factory``
    maps a seed stream to a generator and exists so experiments can be
    rerun with controlled noise (it defaults to numpy's generator).
    """
    rng_factory = rng_factory or np.random.default_rng
    iv = plan.problem.interval
    grid = np.linspace(iv.a, iv.b, plan.grid_points)
    basis1 = np.asarray(plan.problem.model1.eval(grid), dtype=float)
    basis2 = np.asarray(plan.problem.model2.eval(grid), dtype=float)
    truth = plan.theta1 @ basis1 - plan.theta2 @ basis2
    (var1, fit1), (var2, fit2) = _group_fitters(plan)
    models = (plan.problem.model1, plan.problem.model2)
    covered = 0
    widths = np.empty(plan.replications)
    center_sum = np.zeros_like(grid)
    lower_sum = np.zeros_like(grid)
    upper_sum = np.zeros_like(grid)
    streams = np.random.SeedSequence(plan.seed).spawn(plan.replications)
    for rep, stream in enumerate(streams):
        rng = rng_factory(stream)
        y1 = sample_observations(models[0], plan.problem.kernel1, plan.designs.group1, plan.theta1, rng)
        y2 = sample_observations(models[1], plan.problem.kernel2, plan.designs.group2, plan.theta2, rng)
        band = bootstrap_band(
            (fit1(y1), fit2(y2)),
            (var1, var2),
            models,
            grid,
            alpha=plan.alpha,
            reps=plan.bootstrap_reps,
            rng=rng,
        )
        if np.all(np.abs(band.center - truth) <= band.halfwidth):
            covered += 1
        widths[rep] = band.maxwidth
        center_sum += band.center
        lower_sum += band.center - band.halfwidth
        upper_sum += band.center + band.halfwidth
    reps = plan.replications
    return ExperimentSummary(
        coverage=covered / reps,
        mean_maxwidth=float(np.mean(widths)),
        replications=reps,
        alpha=plan.alpha,
        seed=plan.seed,
        grid=grid,
        mean_center=center_sum / reps,
        mean_lower=lower_sum / reps,
        mean_upper=upper_sum / reps,
        true_diff=truth,
    )


def write_band(summary: ExperimentSummary, path) -> None:
    """Write the averaged band curves as delimited text."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("t,center,lower,upper,true_diff\n")
        rows = zip(
            summary.grid,
            summary.mean_center,
            summary.mean_lower,
            summary.mean_upper,
            summary.true_diff,
        )
        for t, center, lower, upper, truth in rows:
            handle.write(
                f"{t:.12g},{center:.12g},{lower:.12g},{upper:.12g},{truth:.12g}\n"
            )


def write_summary(summary: ExperimentSummary, path) -> None:
    """Write the scalar experiment summary as a one-row table."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("coverage,mean_maxwidth,replications,alpha,seed\n")
        handle.write(
            f"{summary.coverage:.12g},{summary.mean_maxwidth:.12g},"
            f"{summary.replications},{summary.alpha:.12g},{summary.seed}\n"
        )
