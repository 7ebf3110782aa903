"""Regression bases, triangular covariance kernels, and sampling designs.

A triangular kernel K(s, t) = u(min(s,t)) v(max(s,t)) can be mapped to a
Brownian-motion kernel by the strictly increasing time change
q = u / v.  All estimator and criterion computations in this package run
in that Brownian time; this module provides the reduction and its
inverse, plus the model/kernel presets addressable from configuration
files ("trig2", "trig4", "brownian", "exp:<rate>").
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "DesignError",
    "KernelError",
    "BasisFunction",
    "RegressionModel",
    "TriangularKernel",
    "Interval",
    "GroupDesign",
    "DesignPair",
    "TransformedBasis",
    "BrownianReduction",
    "brownian_kernel",
    "exponential_kernel",
    "kernel_preset",
    "model_preset",
    "parse_model",
    "to_brownian",
    "from_brownian_design",
]

MODEL_PRESETS = {
    "trig2": ("sine:1", "cosine:1"),
    "trig4": ("sine:1", "cosine:1", "sine:2", "cosine:2"),
}


class DesignError(ValueError):
    """A design violates ordering, endpoint, or spacing constraints."""


class KernelError(ValueError):
    """A covariance kernel is malformed or unusable on the given interval."""


@dataclass(frozen=True)
class BasisFunction:
    """One differentiable basis function with an analytic derivative.

    Supported kinds: ``monomial`` (t^k, integer k >= 0), ``sine``
    (sin(k t), k > 0), ``cosine`` (cos(k t), k > 0) and ``exponential``
    (exp(k t), any k).  Evaluation broadcasts over numpy arrays.
    """

    kind: str
    k: float

    def __post_init__(self):
        if self.kind == "monomial":
            if self.k != int(self.k) or self.k < 0:
                raise ValueError(f"monomial exponent must be a nonnegative integer, got {self.k}")
        elif self.kind in ("sine", "cosine"):
            if self.k <= 0:
                raise ValueError(f"{self.kind} frequency must be positive, got {self.k}")
        elif self.kind != "exponential":
            raise ValueError(f"unknown basis kind {self.kind!r}")

    @classmethod
    def parse(cls, name: str) -> "BasisFunction":
        """Parse a ``kind:parameter`` string such as ``"sine:2"``."""
        try:
            kind, _, param = name.partition(":")
            return cls(kind.strip(), float(param))
        except ValueError as exc:
            raise ValueError(f"cannot parse basis function {name!r}: {exc}") from None

    @property
    def name(self) -> str:
        return f"{self.kind}:{self.k:g}"

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "monomial":
            return np.ones_like(t) if self.k == 0 else t ** self.k
        if self.kind == "sine":
            return np.sin(self.k * t)
        if self.kind == "cosine":
            return np.cos(self.k * t)
        return np.exp(self.k * t)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "monomial":
            if self.k == 0:
                return np.zeros_like(t)
            if self.k == 1:
                return np.ones_like(t)
            return self.k * t ** (self.k - 1)
        if self.kind == "sine":
            return self.k * np.cos(self.k * t)
        if self.kind == "cosine":
            return -self.k * np.sin(self.k * t)
        return self.k * np.exp(self.k * t)


@dataclass(frozen=True)
class RegressionModel:
    """An ordered basis of regression functions, linear in the parameters."""

    basis: tuple[BasisFunction, ...]

    def __post_init__(self):
        if len(self.basis) < 1:
            raise ValueError("a regression model needs at least one basis function")
        names = [b.name for b in self.basis]
        if len(set(names)) != len(names):
            raise ValueError(f"basis functions must be pairwise distinct, got {names}")

    @property
    def m(self) -> int:
        return len(self.basis)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.basis)

    def eval(self, t) -> np.ndarray:
        """Basis values at t; shape (m,) for scalar t, (m, ...) for arrays."""
        return np.stack([b.eval(t) for b in self.basis])

    def deriv(self, t) -> np.ndarray:
        return np.stack([b.deriv(t) for b in self.basis])


def model_preset(name: str) -> RegressionModel:
    """Look up a named model preset ("trig2" or "trig4")."""
    if name not in MODEL_PRESETS:
        raise ValueError(f"unknown model preset {name!r}; available: {sorted(MODEL_PRESETS)}")
    return RegressionModel(tuple(BasisFunction.parse(s) for s in MODEL_PRESETS[name]))


def parse_model(spec) -> RegressionModel:
    """Build a model from a preset name or an iterable of basis strings."""
    if isinstance(spec, str):
        return model_preset(spec)
    if isinstance(spec, Iterable):
        return RegressionModel(tuple(BasisFunction.parse(str(s)) for s in spec))
    raise ValueError(f"cannot interpret model specification {spec!r}")


@dataclass(frozen=True)
class Interval:
    """Design interval [a, b] with 0 < a < b."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a < self.b):
            raise ValueError(f"interval must satisfy 0 < a < b, got [{self.a}, {self.b}]")

    @property
    def width(self) -> float:
        return self.b - self.a


@dataclass(eq=False)
class TriangularKernel:
    """Covariance kernel K(s, t) = u(min(s,t)) v(max(s,t)).

    ``du`` and ``dv`` are optional analytic derivatives; when absent,
    the time-change derivative falls back to central differences.
    ``q_inverse_exact`` is an optional closed-form inverse of q = u/v.
    """

    u: Callable[[np.ndarray], np.ndarray]
    v: Callable[[np.ndarray], np.ndarray]
    name: str
    du: Callable[[np.ndarray], np.ndarray] | None = None
    dv: Callable[[np.ndarray], np.ndarray] | None = None
    q_inverse_exact: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, s, t):
        """Covariance between observations at times s and t."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return self.u(np.minimum(s, t)) * self.v(np.maximum(s, t))

    def gram(self, points) -> np.ndarray:
        """Covariance matrix of the observations at the given time points."""
        pts = np.asarray(points, dtype=float)
        return self(pts[:, None], pts[None, :])

    def q(self, t):
        """The Brownian time change q = u / v."""
        t = np.asarray(t, dtype=float)
        return self.u(t) / self.v(t)

    def q_deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.du is not None and self.dv is not None:
            vt = self.v(t)
            return (self.du(t) * vt - self.u(t) * self.dv(t)) / vt**2
        h = 1e-6 * (1.0 + np.abs(t))
        return (self.q(t + h) - self.q(t - h)) / (2.0 * h)

    def v_deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.dv is not None:
            return self.dv(t)
        h = 1e-6 * (1.0 + np.abs(t))
        return (self.v(t + h) - self.v(t - h)) / (2.0 * h)

    def q_inverse(self, x, interval: Interval):
        """Invert the time change on ``interval``, exactly or by bisection."""
        if self.q_inverse_exact is not None:
            return self.q_inverse_exact(np.asarray(x, dtype=float))
        return _bisect_increasing(self.q, np.asarray(x, dtype=float), interval.a, interval.b)


def _bisect_increasing(fun, targets: np.ndarray, lo: float, hi: float, tol: float = 1e-12):
    """Solve fun(t) = target for each target; fun strictly increasing."""
    scalar = targets.ndim == 0
    t_lo = np.full_like(np.atleast_1d(targets), lo, dtype=float)
    t_hi = np.full_like(t_lo, hi)
    targets = np.atleast_1d(targets)
    # 60 halvings push the bracket width below 1e-12 on any desk-scale interval.
    for _ in range(60):
        mid = 0.5 * (t_lo + t_hi)
        below = fun(mid) < targets
        t_lo = np.where(below, mid, t_lo)
        t_hi = np.where(below, t_hi, mid)
        if np.max(t_hi - t_lo) < tol:
            break
    result = 0.5 * (t_lo + t_hi)
    return result[0] if scalar else result


def brownian_kernel() -> TriangularKernel:
    """Brownian-motion kernel K(s, t) = min(s, t)."""
    return TriangularKernel(
        u=lambda t: np.asarray(t, dtype=float),
        v=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        du=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        dv=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        q_inverse_exact=lambda x: x,
        name="brownian",
    )


def exponential_kernel(rate: float) -> TriangularKernel:
    """Exponential kernel K(s, t) = exp(-rate |s - t|), rate > 0."""
    rate = float(rate)
    if not rate > 0:
        raise KernelError(f"exponential kernel rate must be positive, got {rate}")
    return TriangularKernel(
        u=lambda t: np.exp(rate * np.asarray(t, dtype=float)),
        v=lambda t: np.exp(-rate * np.asarray(t, dtype=float)),
        du=lambda t: rate * np.exp(rate * np.asarray(t, dtype=float)),
        dv=lambda t: -rate * np.exp(-rate * np.asarray(t, dtype=float)),
        q_inverse_exact=lambda x: np.log(x) / (2.0 * rate),
        name=f"exp:{rate:g}",
    )


def kernel_preset(name: str) -> TriangularKernel:
    """Parse a kernel preset string: "brownian" or "exp:<rate>"."""
    text = name.strip()
    if text == "brownian":
        return brownian_kernel()
    if text.startswith("exp:"):
        param = text[len("exp:"):]
        try:
            rate = float(param)
        except ValueError:
            raise KernelError(f"cannot parse exponential kernel rate {param!r} in {name!r}") from None
        return exponential_kernel(rate)
    raise KernelError(f"unknown kernel preset {name!r}; expected 'brownian' or 'exp:<rate>'")


@dataclass(frozen=True)
class GroupDesign:
    """Ordered sampling times for one group, endpoints pinned to [a, b].

    ``min_spacing`` defaults to 1e-6 of the interval width; adjacent
    points closer than that are rejected because increment-based
    weights divide by the spacing.
    """

    interval: Interval
    points: np.ndarray
    min_spacing: float | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).copy()
        if pts.ndim != 1 or pts.size < 2:
            raise DesignError(f"a design needs at least 2 ordered points, got {pts!r}")
        width = self.interval.width
        snap = 1e-9 * width
        if abs(pts[0] - self.interval.a) > snap or abs(pts[-1] - self.interval.b) > snap:
            raise DesignError(
                f"design endpoints ({pts[0]}, {pts[-1]}) must equal the interval "
                f"endpoints ({self.interval.a}, {self.interval.b})"
            )
        pts[0], pts[-1] = self.interval.a, self.interval.b
        spacing = 1e-6 * width if self.min_spacing is None else self.min_spacing
        gaps = np.diff(pts)
        if np.any(gaps <= 0):
            raise DesignError(f"design points must be strictly increasing, got {pts}")
        if np.any(gaps < spacing * (1.0 - 1e-9)):
            j = int(np.argmin(gaps))
            raise DesignError(
                f"design points {pts[j]} and {pts[j + 1]} are closer than the "
                f"minimum spacing {spacing:g}"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "min_spacing", spacing)

    @property
    def n(self) -> int:
        return self.points.size

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.points)


@dataclass(frozen=True)
class DesignPair:
    """Designs for the two groups on a common interval."""

    group1: GroupDesign
    group2: GroupDesign

    def __post_init__(self):
        i1, i2 = self.group1.interval, self.group2.interval
        if (i1.a, i1.b) != (i2.a, i2.b):
            raise DesignError(f"group designs live on different intervals: {i1} vs {i2}")

    @property
    def interval(self) -> Interval:
        return self.group1.interval


class TransformedBasis:
    """Regression basis of the Brownian-time version of a kernel model.

    Evaluates ftilde(s) = f(q^{-1}(s)) / v(q^{-1}(s)) and its chain-rule
    derivative with respect to the Brownian time s.  The original
    parametrization is kept so that integrals of the transformed basis
    can be pulled back to the original interval, where the integrand is
    smooth regardless of how violently q stretches time.
    """

    def __init__(self, model: RegressionModel, kernel: TriangularKernel, interval: Interval):
        self.model = model
        self.kernel = kernel
        self.original_interval = interval

    @property
    def m(self) -> int:
        return self.model.m

    def eval(self, s) -> np.ndarray:
        t = self.kernel.q_inverse(s, self.original_interval)
        return self.model.eval(t) / self.kernel.v(t)

    def deriv(self, s) -> np.ndarray:
        t = self.kernel.q_inverse(s, self.original_interval)
        return self.deriv_at_original(t)

    def eval_at_original(self, t) -> np.ndarray:
        """Transformed basis evaluated at s = q(t), without inverting q."""
        return self.model.eval(t) / self.kernel.v(t)

    def deriv_at_original(self, t) -> np.ndarray:
        vt = self.kernel.v(t)
        dv = self.kernel.v_deriv(t)
        qd = self.kernel.q_deriv(t)
        return (self.model.deriv(t) / vt - self.model.eval(t) * dv / vt**2) / qd

    @property
    def pullback_chart(self):
        """(a, b, g) with integral of g g^T over [a, b] equal to the
        Brownian-time derivative Gram integral."""
        a, b = self.original_interval.a, self.original_interval.b

        def weighted(t):
            return self.deriv_at_original(t) * np.sqrt(self.kernel.q_deriv(t))

        return a, b, weighted


@dataclass(frozen=True)
class BrownianReduction:
    """A kernel regression problem rewritten in Brownian-motion time."""

    kernel: TriangularKernel
    original_model: RegressionModel
    original_interval: Interval
    model: object
    interval: Interval
    identity: bool

    def map_points(self, points) -> np.ndarray:
        """Original times to Brownian times."""
        return np.asarray(self.kernel.q(points), dtype=float)

    def unmap_points(self, points) -> np.ndarray:
        """Brownian times back to original times."""
        return from_brownian_design(points, self.kernel, self.original_interval)

    def eval_original(self, t) -> np.ndarray:
        """Transformed basis at Brownian time q(t), given original t."""
        if self.identity:
            return self.model.eval(t)
        return self.model.eval_at_original(t)

    def amplitude(self, t) -> np.ndarray:
        """Scale v(t) relating original and transformed observations."""
        return np.asarray(self.kernel.v(t), dtype=float)


def to_brownian(kernel: TriangularKernel, model: RegressionModel, interval: Interval) -> BrownianReduction:
    """Reduce a triangular-kernel model to an equivalent Brownian one.

    Validates that u and v are positive and q = u/v strictly increasing
    on the interval (otherwise the kernel is rejected), then returns the
    transformed basis together with the mapped interval [q(a), q(b)].
    """
    samples = np.linspace(interval.a, interval.b, 513)
    u_vals = np.asarray(kernel.u(samples), dtype=float)
    v_vals = np.asarray(kernel.v(samples), dtype=float)
    if not (np.all(u_vals > 0) and np.all(v_vals > 0)):
        raise KernelError(
            f"kernel {kernel.name!r} must have positive u and v on "
            f"[{interval.a}, {interval.b}]"
        )
    q_vals = u_vals / v_vals
    if not np.all(np.diff(q_vals) > 0):
        raise KernelError(
            f"kernel {kernel.name!r} is rejected: q = u/v is not strictly "
            f"increasing on [{interval.a}, {interval.b}]"
        )
    mapped = Interval(float(kernel.q(interval.a)), float(kernel.q(interval.b)))
    if kernel.name == "brownian":
        return BrownianReduction(kernel, model, interval, model, mapped, identity=True)
    basis = TransformedBasis(model, kernel, interval)
    return BrownianReduction(kernel, model, interval, basis, mapped, identity=False)


def from_brownian_design(points, kernel: TriangularKernel, interval: Interval) -> np.ndarray:
    """Map a point set from Brownian time back to the original interval."""
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    lo, hi = float(kernel.q(interval.a)), float(kernel.q(interval.b))
    slack = 1e-9 * (hi - lo)
    if np.any(pts < lo - slack) or np.any(pts > hi + slack):
        raise KernelError(
            f"points {pts} fall outside the transformed interval [{lo:g}, {hi:g}]"
        )
    back = np.asarray(kernel.q_inverse(np.clip(pts, lo, hi), interval), dtype=float)
    if back.size > 1 and np.any(np.diff(back) <= 0):
        raise KernelError("inverse time change failed to preserve strict ordering")
    return back
