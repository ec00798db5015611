"""One-dimensional Legendre transform with the Gaussian (one-loop) correction.

Forward:    p = U'(x),  F0(p) = p x - U(x)
One loop:   F1(p) = F0(p) - 1/2 log(U''(x) / 2pi)
Inverse:    x = F0'(p), U(x) = p x - F0(p)
Corrected inverse from a measured F1:  F0 ~ F1 - 1/2 log(2pi F1''), then invert.

Derivatives use fixed finite-difference stencils on a uniform grid:
3-point central in the interior, second-order one-sided at the two edges.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln, xlogy

__all__ = [
    "SampledFunction",
    "TransformResult",
    "NonConvexError",
    "forward",
    "one_loop",
    "inverse",
    "corrected_inverse",
    "stencil_error_bound",
    "corrected_inverse_error_bound",
    "legendre_density",
    "stirling_density",
    "binomial_exact",
    "binomial_demo",
    "write_binomial_csv",
    "binomial_log_generating",
    "binomial_log_exact",
]

EPS = np.finfo(float).eps
UNIFORM_RTOL = 1e-9


class NonConvexError(ValueError):
    def __init__(self, index: int, value: float):
        super().__init__(f"second derivative {value:.6g} <= 0 at grid index {index}")
        self.index = index


def _d1(f: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    d[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return d


def _d2(f: np.ndarray, h: float) -> np.ndarray:
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / (h * h)
    d[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / (h * h)
    d[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / (h * h)
    return d


@dataclass(frozen=True)
class SampledFunction:
    """Samples of a smooth function on a strictly increasing grid.

    Derivatives need a uniform grid; transforms may produce non-uniform
    grids, which :meth:`resample` maps back onto a uniform one.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape:
            raise ValueError("grid and values must be 1-D arrays of equal length")
        if g.size < 5:
            raise ValueError("need at least 5 samples")
        if not np.all(np.diff(g) > 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, f, a: float, b: float, n: int) -> "SampledFunction":
        x = np.linspace(a, b, n)
        return cls(x, f(x))

    @property
    def uniform(self) -> bool:
        dx = np.diff(self.grid)
        return bool(np.all(np.abs(dx - dx.mean()) <= UNIFORM_RTOL * abs(dx.mean())))

    @property
    def h(self) -> float:
        if not self.uniform:
            raise ValueError("finite differences need a uniform grid; call resample() first")
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))

    @property
    def d1(self) -> np.ndarray:
        return _d1(self.values, self.h)

    @property
    def d2(self) -> np.ndarray:
        return _d2(self.values, self.h)

    def resample(self, n: int | None = None) -> "SampledFunction":
        """Cubic-spline resampling onto a uniform grid with the same end points."""
        n = n or self.grid.size
        x = np.linspace(self.grid[0], self.grid[-1], n)
        return SampledFunction(x, CubicSpline(self.grid, self.values)(x))

    def __call__(self, x):
        return CubicSpline(self.grid, self.values)(x)


@dataclass(frozen=True)
class TransformResult:
    p: np.ndarray
    F0: np.ndarray
    x_of_p: np.ndarray
    F1: np.ndarray | None = None

    def sampled(self, which: str = "F0") -> SampledFunction:
        vals = self.F0 if which == "F0" else self.F1
        if vals is None:
            raise ValueError(f"{which} not available")
        return SampledFunction(self.p, vals)


def _require_convex(d2: np.ndarray) -> None:
    bad = np.nonzero(~(d2 > 0))[0]
    if bad.size:
        raise NonConvexError(int(bad[0]), float(d2[bad[0]]))


def forward(U: SampledFunction) -> TransformResult:
    """Legendre transform of a strictly convex ``U``."""
    d2 = U.d2
    _require_convex(d2)
    p = U.d1
    if not np.all(np.diff(p) > 0):
        raise NonConvexError(int(np.argmin(np.diff(p))), float(np.min(np.diff(p))))
    return TransformResult(p, p * U.grid - U.values, U.grid.copy())


def one_loop(U: SampledFunction) -> TransformResult:
    """Forward transform plus ``F1 = F0 - 1/2 log(U''/2pi)``."""
    res = forward(U)
    F1 = res.F0 - 0.5 * np.log(U.d2 / (2 * np.pi))
    return TransformResult(res.p, res.F0, res.x_of_p, F1)


def inverse(F0: SampledFunction) -> SampledFunction:
    """Inverse transform: ``x = F0'(p)``, ``U(x) = p x - F0(p)``."""
    _require_convex(F0.d2)
    x = F0.d1
    return SampledFunction(x, F0.grid * x - F0.values)


def corrected_inverse(F1: SampledFunction, f0_curvature: np.ndarray | None = None) -> SampledFunction:
    """Recover ``U`` from a one-loop corrected ``F1``.

    By default ``F0 = F1 - 1/2 log(2pi F1'')``: the measured ``F1''`` stands in
    for the unknown ``F0''``.  Passing ``f0_curvature`` (``F0''`` on the same
    grid, e.g. from a known reference) uses it instead, which isolates the
    error of that substitution.  Solving ``F0 = F1 - 1/2 log(2pi F0'')`` for
    ``F0`` itself is a second-order ODE without boundary data, so it is not
    attempted.
    """
    d2 = F1.d2
    _require_convex(d2)
    if f0_curvature is None:
        curv = d2
    else:
        curv = np.asarray(f0_curvature, dtype=float)
        if curv.shape != d2.shape:
            raise ValueError("f0_curvature must match the F1 grid")
        _require_convex(curv)
    F0 = F1.values - 0.5 * np.log(2 * np.pi * curv)
    return inverse(SampledFunction(F1.grid, F0))


# ---------------------------------------------------------------------------
# error bounds for the stencils
# ---------------------------------------------------------------------------


def _max_abs_derivative(f: SampledFunction, order: int) -> float:
    """Estimate of max |f^(order)| by repeated differencing."""
    v = f.values
    h = f.h
    for _ in range(order):
        v = np.diff(v) / h
    return float(np.max(np.abs(v))) if v.size else 0.0


def stencil_error_bound(f: SampledFunction, derivative: int) -> float:
    """Truncation plus rounding bound for the first or second derivative stencil.

    first:   h^2/3 max|f3| + h^3/4 max|f4| + 4 eps max|f| / h
    second:  11 h^2/12 max|f4| + h^3 max|f5| + 12 eps max|f| / h^2
    where ``fk`` is the k-th derivative.  The leading constants are those of
    the one-sided edge formulas, which dominate the interior ones; the second
    terms cover the next Taylor order.
    """
    h = f.h
    fmax = float(np.max(np.abs(f.values)))
    if derivative == 1:
        return h * h / 3 * _max_abs_derivative(f, 3) + h**3 / 4 * _max_abs_derivative(f, 4) + 4 * EPS * fmax / h
    if derivative == 2:
        return (
            11 * h * h / 12 * _max_abs_derivative(f, 4)
            + h**3 * _max_abs_derivative(f, 5)
            + 12 * EPS * fmax / (h * h)
        )
    raise ValueError("derivative must be 1 or 2")


def corrected_inverse_error_bound(F1: SampledFunction) -> float:
    """Propagated stencil bound for ``corrected_inverse(F1)`` values.

    ``F0`` inherits ``e2 / (2 min F1'')`` from the second-derivative stencil;
    ``U = p x - F0`` inherits ``max|p| * e1`` from the first-derivative stencil
    applied to ``F0``, plus the F0 error itself.
    """
    d2 = F1.d2
    e2 = stencil_error_bound(F1, 2)
    eF0 = e2 / (2 * float(np.min(d2)))
    F0 = SampledFunction(F1.grid, F1.values - 0.5 * np.log(2 * np.pi * d2))
    e1 = stencil_error_bound(F0, 1) + eF0 / F1.h
    return float(np.max(np.abs(F1.grid))) * e1 + eF0 + EPS * float(np.max(np.abs(F0.values)))


# ---------------------------------------------------------------------------
# coin-flip demonstration
# ---------------------------------------------------------------------------


def binomial_exact(N: int, x: int) -> float:
    """``C(N, x) / 2^N`` computed from exact integers."""
    return math.comb(N, x) / 2**N


def legendre_density(N: int, x):
    """``2^-N (2pi N)^-1/2 exp(-(N+1)[xi log xi + (1-xi) log(1-xi)])``, ``x = (N+1) xi - 1/2``."""
    xi = (np.asarray(x, dtype=float) + 0.5) / (N + 1)
    ent = xlogy(xi, xi) + xlogy(1 - xi, 1 - xi)
    return np.exp(-N * math.log(2) - 0.5 * math.log(2 * math.pi * N) - (N + 1) * ent)


def stirling_density(N: int, x):
    """Stirling form of ``C(N, x)/2^N`` with ``x = N chi``; zero at the end points."""
    chi = np.asarray(x, dtype=float) / N
    inside = (chi > 0) & (chi < 1)
    c = np.where(inside, chi, 0.5)
    ent = c * np.log(c) + (1 - c) * np.log(1 - c)
    val = np.exp(-N * math.log(2) - 0.5 * math.log(2 * math.pi * N) - 0.5 * np.log(c * (1 - c)) - N * ent)
    return np.where(inside, val, 0.0)


def binomial_demo(N: int) -> list[dict]:
    """Rows ``{x, exact, legendre, stirling}`` for ``x = 0..N``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    xs = np.arange(N + 1)
    leg = legendre_density(N, xs)
    sti = stirling_density(N, xs)
    return [
        {"x": int(x), "exact": binomial_exact(N, int(x)), "legendre": float(l), "stirling": float(s)}
        for x, l, s in zip(xs, leg, sti)
    ]


def binomial_log_generating(N: int, p):
    """``f(p) = N log(1 + e^p) - N log 2``, the measured one-loop quantity."""
    return N * np.logaddexp(0.0, p) - N * math.log(2)


def binomial_log_exact(N: int, x) -> np.ndarray:
    """``log(C(N, x)/2^N)`` continued to real ``x`` through the gamma function."""
    x = np.asarray(x, dtype=float)
    return gammaln(N + 1) - gammaln(x + 1) - gammaln(N - x + 1) - N * math.log(2)


def write_binomial_csv(stream, N: int, digits: int = 9) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["x", "exact", "legendre", "stirling"])
    for row in binomial_demo(N):
        w.writerow([row["x"]] + [f"{row[k]:.{digits}g}" for k in ("exact", "legendre", "stirling")])
