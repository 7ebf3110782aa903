"""Particle swarm search for the interior design points of both groups.

The swarm works on the concatenated interior points in original time
coordinates; a decode step sorts each group's block, clamps it into the
interval, and projects it onto the minimum-spacing constraints, so the
objective is total on the search box.  The equally spaced design is
injected as one initial particle of every restart, which guarantees the
search never reports anything worse than the uniform baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .criterion import ComparisonProblem, CriterionEvaluator, design_criterion
from .models import DesignPair, GroupDesign, Interval

__all__ = [
    "PsoConfig",
    "PsoResult",
    "DesignSearchResult",
    "pso_minimize",
    "uniform_design",
    "optimize_design_pair",
]


@dataclass(frozen=True)
class PsoConfig:
    """Constriction-regime particle swarm parameters."""

    particles: int = 40
    iterations: int = 300
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    seed: int = 0
    restarts: int = 4

    def __post_init__(self):
        if self.particles < 1 or self.iterations < 1 or self.restarts < 1:
            raise ValueError("particle, iteration, and restart counts must be positive")
        if not 0.0 < self.inertia < 1.0:
            raise ValueError(f"inertia must lie in (0, 1), got {self.inertia}")
        if self.cognitive <= 0.0 or self.social <= 0.0:
            raise ValueError("cognitive and social coefficients must be positive")


class PsoResult(NamedTuple):
    x: np.ndarray
    value: float
    history: np.ndarray
    evaluations: int


@dataclass(frozen=True)
class DesignSearchResult:
    """Outcome of a design search.

    ``value`` is the criterion of ``best`` re-evaluated through the
    standard criterion path, not the optimizer's internal grid value.
    """

    best: DesignPair
    value: float
    history: np.ndarray
    evaluations: int


def pso_minimize(
    objective: Callable[[np.ndarray], float],
    bounds,
    config: PsoConfig | None = None,
    vectorized: bool = False,
    seed_points: np.ndarray | None = None,
) -> PsoResult:
    """Minimize a bound-constrained objective with a particle swarm.

    Parameters
    ----------
    objective : callable
        Maps a point (length-d array) to a finite value or +inf.  With
        ``vectorized=True`` it must accept a (P, d) batch and return a
        length-P array.
    bounds : sequence of (low, high) pairs
        Finite box constraints, one pair per coordinate.
    config : PsoConfig
        Swarm parameters; results are deterministic given the seed.
    seed_points : array, optional
        Rows injected as initial particles of every restart.

    Positions leaving the box are clamped to its boundary, with the
    offending velocity components zeroed.
    """
    cfg = config or PsoConfig()
    box = np.asarray(bounds, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2:
        raise ValueError(f"bounds must be a (d, 2) array of (low, high) pairs, got {box.shape}")
    lo, hi = box[:, 0], box[:, 1]
    if not np.all(np.isfinite(box)) or not np.all(lo < hi):
        raise ValueError("bounds must be finite with low < high in every coordinate")

    if vectorized:
        evaluate = lambda xs: np.asarray(objective(xs), dtype=float)
    else:
        evaluate = lambda xs: np.asarray([float(objective(x)) for x in xs])

    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    best_x = None
    best_f = np.inf
    history = []
    evaluations = 0
    for stream in streams:
        rng = np.random.default_rng(stream)
        positions = lo + (hi - lo) * rng.random((cfg.particles, lo.size))
        if seed_points is not None:
            seeds = np.atleast_2d(np.asarray(seed_points, dtype=float))
            count = min(len(seeds), cfg.particles)
            positions[:count] = np.clip(seeds[:count], lo, hi)
        velocities = np.zeros_like(positions)
        values = evaluate(positions)
        evaluations += cfg.particles
        personal = positions.copy()
        personal_f = values.copy()
        g = int(np.argmin(personal_f))
        swarm_x, swarm_f = personal[g].copy(), float(personal_f[g])
        if swarm_f < best_f:
            best_x, best_f = swarm_x.copy(), swarm_f
        for _ in range(cfg.iterations):
            pull = rng.random((cfg.particles, lo.size))
            push = rng.random((cfg.particles, lo.size))
            velocities = (
                cfg.inertia * velocities
                + cfg.cognitive * pull * (personal - positions)
                + cfg.social * push * (swarm_x - positions)
            )
            positions = positions + velocities
            outside = (positions < lo) | (positions > hi)
            positions = np.clip(positions, lo, hi)
            velocities[outside] = 0.0
            values = evaluate(positions)
            evaluations += cfg.particles
            improved = values < personal_f
            personal[improved] = positions[improved]
            personal_f[improved] = values[improved]
            g = int(np.argmin(personal_f))
            if personal_f[g] < swarm_f:
                swarm_x, swarm_f = personal[g].copy(), float(personal_f[g])
            if swarm_f < best_f:
                best_x, best_f = swarm_x.copy(), swarm_f
            history.append(best_f)
    return PsoResult(best_x, best_f, np.asarray(history), evaluations)


def uniform_design(n: int, interval: Interval) -> GroupDesign:
    """Equally spaced design with n points spanning the interval."""
    if n < 2:
        raise ValueError(f"a design needs at least 2 points, got n = {n}")
    return GroupDesign(interval, np.linspace(interval.a, interval.b, n))


def _decode(interior: np.ndarray, splits: tuple[int, int], interval: Interval) -> tuple[np.ndarray, np.ndarray]:
    """Sort, clamp, and spacing-project a batch of interior coordinates.

    Returns full per-group point matrices including the fixed endpoints.
    Output rows always satisfy ordering, endpoint, and minimum-spacing
    constraints.
    """
    interior = np.atleast_2d(interior)
    spacing = 1e-6 * interval.width
    lo, hi = interval.a + spacing, interval.b - spacing
    groups = []
    offset = 0
    for size in splits:
        block = np.sort(interior[:, offset : offset + size], axis=1)
        offset += size
        block = np.clip(block, lo, hi)
        if size:
            ramp = spacing * np.arange(size)
            block = np.maximum.accumulate(block - ramp, axis=1) + ramp
            caps = hi - spacing * (size - 1 - np.arange(size))
            block = np.minimum(block, caps)
        rows = interior.shape[0]
        full = np.empty((rows, size + 2))
        full[:, 0] = interval.a
        full[:, -1] = interval.b
        full[:, 1:-1] = block
        groups.append(full)
    return groups[0], groups[1]


def optimize_design_pair(problem: ComparisonProblem, config: PsoConfig | None = None) -> DesignSearchResult:
    """Search both groups' interior points for the best criterion value.

    The search space has (n1 - 2) + (n2 - 2) coordinates.  The returned
    value is the criterion of the decoded best pair recomputed through
    the standard evaluation path, so it can be checked independently.
    """
    cfg = config or PsoConfig()
    evaluator = CriterionEvaluator(problem)
    iv = problem.interval
    splits = (problem.n1 - 2, problem.n2 - 2)
    dim = sum(splits)

    uniform_pair = DesignPair(
        uniform_design(problem.n1, iv), uniform_design(problem.n2, iv)
    )
    if dim == 0:
        report = evaluator.report(uniform_pair)
        return DesignSearchResult(uniform_pair, report.value, np.asarray([report.value]), 1)

    def batch_objective(interior: np.ndarray) -> np.ndarray:
        pts1, pts2 = _decode(interior, splits, iv)
        return evaluator.objective_batch(pts1, pts2)

    spacing = 1e-6 * iv.width
    bounds = [(iv.a + spacing, iv.b - spacing)] * dim
    seed = np.concatenate(
        [uniform_pair.group1.points[1:-1], uniform_pair.group2.points[1:-1]]
    )
    run = pso_minimize(
        batch_objective, bounds, cfg, vectorized=True, seed_points=seed[None, :]
    )
    pts1, pts2 = _decode(run.x[None, :], splits, iv)
    best = DesignPair(
        GroupDesign(iv, pts1[0]),
        GroupDesign(iv, pts2[0]),
    )
    report = design_criterion(problem, best)
    return DesignSearchResult(
        best=best,
        value=report.value,
        history=run.history,
        evaluations=run.evaluations,
    )
