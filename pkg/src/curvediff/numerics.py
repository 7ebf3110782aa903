"""Dense matrix helpers and composite Gauss-Legendre quadrature.

Everything here works on plain float64 numpy arrays.  Matrix dimensions
stay tiny (at most 8 in practice), so all algebra is dense and direct;
there is nothing to gain from exploiting structure.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

__all__ = [
    "QuadratureError",
    "SingularMatrixError",
    "NotPositiveDefiniteError",
    "integrate_outer",
    "integrate_scalar",
    "invert",
    "cholesky",
    "smallest_eigenvalue",
]

GL_NODES_PER_PANEL = 32
MAX_PANEL_DOUBLINGS = 20

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_NODES_PER_PANEL)


class QuadratureError(ArithmeticError):
    """Panel doubling failed to reach the requested tolerance."""


class SingularMatrixError(ArithmeticError):
    """A matrix that must be inverted is singular or too ill-conditioned."""

    def __init__(self, message: str, cond: float | None = None):
        super().__init__(message)
        self.cond = cond


class NotPositiveDefiniteError(ArithmeticError):
    """A symmetric factorization hit a negative pivot."""


def _panel_points(a: float, b: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    nodes = (mid[:, None] + half * _GL_X[None, :]).ravel()
    weights = np.tile(half * _GL_W, panels)
    return nodes, weights


def integrate_outer(
    deriv: Callable[[float], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-12,
) -> np.ndarray:
    """Integral over [a, b] of the outer product g(t) g(t)^T.

    ``deriv`` maps a scalar time to a length-m vector.  The composite
    Gauss-Legendre rule (32 nodes per panel) is refined by doubling the
    panel count until two successive estimates agree to ``tol`` in max
    norm.  The result is symmetrized and positive semidefinite up to
    roundoff.

    Raises QuadratureError if the estimates have not settled after
    ``MAX_PANEL_DOUBLINGS`` doublings.
    """
    if not a < b:
        raise ValueError(f"integration interval is empty: [{a}, {b}]")
    previous = None
    panels = 1
    for _ in range(MAX_PANEL_DOUBLINGS + 1):
        nodes, weights = _panel_points(a, b, panels)
        values = np.asarray([np.asarray(deriv(t), dtype=float) for t in nodes])
        estimate = (values * weights[:, None]).T @ values
        estimate = 0.5 * (estimate + estimate.T)
        if previous is not None and np.max(np.abs(estimate - previous)) < tol:
            return estimate
        previous = estimate
        panels *= 2
    raise QuadratureError(
        f"outer-product quadrature on [{a}, {b}] did not converge to {tol:g} "
        f"after {MAX_PANEL_DOUBLINGS} panel doublings"
    )


def integrate_scalar(
    fun: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: int = 64,
) -> float:
    """Fixed-panel Gauss-Legendre integral of a vectorized scalar function."""
    nodes, weights = _panel_points(a, b, panels)
    return float(np.asarray(fun(nodes), dtype=float) @ weights)


def invert(matrix: np.ndarray, rcond_min: float = 1e-13) -> np.ndarray:
    """Inverse of a small dense matrix with an explicit conditioning gate.

    Raises SingularMatrixError (carrying the condition estimate) when the
    reciprocal condition number falls below ``rcond_min`` or when the
    residual ``A A^{-1} - I`` exceeds 1e-9 in max norm.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > 1.0 / rcond_min:
        raise SingularMatrixError(
            f"matrix is singular or ill-conditioned (cond ~ {cond:.3e})", cond=cond
        )
    inverse = np.linalg.solve(a, np.eye(a.shape[0]))
    residual = float(np.max(np.abs(a @ inverse - np.eye(a.shape[0]))))
    if residual > 1e-9:
        raise SingularMatrixError(
            f"inverse residual {residual:.3e} exceeds 1e-9 (cond ~ {cond:.3e})",
            cond=cond,
        )
    return inverse


def cholesky(matrix: np.ndarray, pivot_tol: float = 1e-10) -> np.ndarray:
    """Lower-triangular factor L with L L^T = A for symmetric PSD input.

    Semidefinite matrices are allowed: a pivot within ``pivot_tol`` of
    zero is clamped to zero and its column skipped.  A pivot below
    ``-pivot_tol`` (relative to the largest diagonal entry) means the
    matrix is not positive semidefinite and raises
    NotPositiveDefiniteError.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(np.diag(a)))))
    if np.max(np.abs(a - a.T)) > 1e-8 * scale:
        raise NotPositiveDefiniteError("matrix is not symmetric")
    n = a.shape[0]
    lower = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot < -pivot_tol * scale:
            raise NotPositiveDefiniteError(
                f"negative pivot {pivot:.3e} at index {j}: matrix is not PSD"
            )
        diag = np.sqrt(max(pivot, 0.0))
        lower[j, j] = diag
        if diag > 0.0 and j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / diag
    return lower


def smallest_eigenvalue(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of the symmetric part of a matrix."""
    a = np.asarray(matrix, dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (a + a.T))[0])
