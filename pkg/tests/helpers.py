"""Shared fixtures: benchmark cases, independent oracles, random designs."""

import numpy as np

import curvediff as cd

INTERVAL = cd.Interval(1.0, 10.0)

UNIFORM5 = [1.0, 3.25, 5.5, 7.75, 10.0]

# Nine benchmark cases: models, kernel, the reported best five-point designs,
# and the reference criterion values for those designs and for the uniform
# design (both groups equally spaced).  References were cross-checked against
# an independent evaluation path; tolerances reflect that the design points
# are only given to two decimals.
BENCHMARK_CASES = [
    ("trig2", "trig2", "brownian", [1, 3.10, 5.51, 8.40, 10], [1, 3.04, 5.49, 8.29, 10], 0.64, 0.79),
    ("trig2", "trig2", "exp:0.5", [1, 2.87, 5.41, 8.14, 10], [1, 3.15, 5.47, 8.22, 10], 0.55, 0.66),
    ("trig2", "trig2", "exp:1", [1, 2.98, 5.43, 8.03, 10], [1, 2.72, 5.48, 7.91, 10], 0.78, 0.95),
    ("trig2", "trig4", "brownian", [1, 3.30, 5.67, 7.34, 10], [1, 1.44, 5.79, 9.58, 10], 2.20, 27.77),
    ("trig2", "trig4", "exp:0.5", [1, 3.20, 5.09, 8.07, 10], [1, 2.43, 5.60, 5.91, 10], 1.85, 25.72),
    ("trig2", "trig4", "exp:1", [1, 2.11, 4.90, 7.77, 10], [1, 2.44, 5.29, 5.90, 10], 1.83, 34.68),
    ("trig4", "trig4", "brownian", [1, 1.98, 5.17, 5.51, 10], [1, 1.46, 5.60, 9.52, 10], 5.06, 54.91),
    ("trig4", "trig4", "exp:0.5", [1, 1.54, 5.27, 9.70, 10], [1, 5.15, 5.87, 9.34, 10], 2.61, 50.95),
    ("trig4", "trig4", "exp:1", [1, 5.31, 6.13, 9.00, 10], [1, 2.90, 6.63, 7.48, 10], 2.77, 68.69),
]

MODEL_NAMES = ("trig2", "trig4")
KERNEL_NAMES = ("brownian", "exp:0.5", "exp:1")


def benchmark_problem(name1, name2, kernel_name, p=float("inf")):
    kernel = cd.kernel_preset(kernel_name)
    return cd.ComparisonProblem(
        cd.model_preset(name1),
        cd.model_preset(name2),
        kernel,
        kernel,
        INTERVAL,
        p=p,
    )


def design_pair(points1, points2, interval=INTERVAL):
    return cd.DesignPair(
        cd.GroupDesign(interval, np.asarray(points1, dtype=float)),
        cd.GroupDesign(interval, np.asarray(points2, dtype=float)),
    )


def uniform_pair(n=5, interval=INTERVAL):
    return cd.DesignPair(
        cd.uniform_design(n, interval), cd.uniform_design(n, interval)
    )


def random_design_points(rng, n, interval=INTERVAL, min_gap=0.3):
    """Random admissible design with a spacing floor for conditioning."""
    while True:
        interior = np.sort(rng.uniform(interval.a, interval.b, size=n - 2))
        points = np.concatenate([[interval.a], interior, [interval.b]])
        if np.all(np.diff(points) >= min_gap):
            return points


def direct_variance_oracle(spec, kernel, original_points):
    """Estimator covariance straight from the kernel: c^T Gram c.

    The spec's coefficients act on observations rescaled by 1/v at the
    original times, so the raw-observation coefficients are c_j / v(t_j)
    and the covariance uses the original kernel Gram matrix.  This path
    shares nothing with the closed-form variance (no quadrature, no
    increment algebra).
    """
    amplitude = np.asarray(kernel.v(original_points), dtype=float)
    raw = spec.coefficients / amplitude[:, None]
    gram = kernel.gram(original_points)
    return raw.T @ gram @ raw


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def compass_search(fun, x0, lo, hi, step=0.5, shrink=0.5, min_step=1e-9):
    """Coordinate pattern search; a slow but independent local minimizer."""
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    fx = fun(x)
    while step > min_step:
        moved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[i] = np.clip(trial[i] + sign * step, lo[i], hi[i])
                ft = fun(trial)
                if ft < fx:
                    x, fx = trial, ft
                    moved = True
        if not moved:
            step *= shrink
    return x, fx
