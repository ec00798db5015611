"""From a growth profile S(u) to coefficient sizes and term counts.

With ``x = e^u`` and ``|a_m| = e^(s(m))``::

    S0(u)  = S(u) - 1/2 log(2 pi S''(u))
    m + nu = S0'(u)
    s(m)   = S0(u) - u S0'(u)

Everything is kept in natural logs; ``log10`` appears only in outputs that
say so.  Logarithmic series (an ``a1`` stream) are not estimated.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .frobenius import SeriesKind, solve_series
from .legendre import NonConvexError, SampledFunction
from .ode import CanonicalProblem, ODEProblem, UnsupportedClassification, as_ode, to_canonical
from .wkb import PathObstruction, WkbProfile, s_profile

__all__ = [
    "LogSeriesUnsupported",
    "ExtrapolationError",
    "UnreachablePrecision",
    "EstimateCurve",
    "Estimate",
    "Reference",
    "curve_from_profile",
    "curve_from_S",
    "predict_coeff_log",
    "predict_num_terms",
    "predict_max_term",
    "estimate_problem",
    "write_estimate_csv",
    "anharmonic_reference",
    "double_well_reference",
    "anharmonic_log_a_explicit",
    "delta_S",
    "delta_S0",
]

LN10 = math.log(10)
MIN_SAMPLES = 9
DEFAULT_DU = 0.02


class LogSeriesUnsupported(UnsupportedClassification):
    """The requested solution carries a logarithm; its coefficients are not estimated."""


class ExtrapolationError(ValueError):
    """Query outside the range covered by the curve."""


class UnreachablePrecision(ExtrapolationError):
    """The stopping criterion is not met anywhere on the curve."""


@dataclass(frozen=True)
class EstimateCurve:
    """Samples ``(u, m_bar, s, S0)`` with ``m_bar`` strictly increasing."""

    u: np.ndarray
    m_bar: np.ndarray
    s: np.ndarray
    S0: np.ndarray
    nu: float = 0.0

    def __post_init__(self):
        for f in ("u", "m_bar", "s", "S0"):
            object.__setattr__(self, f, np.asarray(getattr(self, f), dtype=float))
        if self.u.size < 2 or not (self.u.shape == self.m_bar.shape == self.s.shape == self.S0.shape):
            raise ValueError("curve arrays must be 1-D, equal length, at least 2 samples")
        dm = np.diff(self.m_bar)
        if not np.all(dm > 0):
            k = int(np.argmin(dm))
            raise NonConvexError(k, float(dm[k]))

    @property
    def samples(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.u.tolist(), self.m_bar.tolist(), self.s.tolist(), self.S0.tolist()))

    @property
    def m_range(self) -> tuple[float, float]:
        return float(self.m_bar[0]), float(self.m_bar[-1])

    @property
    def u_range(self) -> tuple[float, float]:
        return float(self.u[0]), float(self.u[-1])

    def s_of_m(self, m):
        return PchipInterpolator(self.m_bar, self.s, extrapolate=False)(m)

    def m_of_u(self, u):
        return PchipInterpolator(self.u, self.m_bar, extrapolate=False)(u)

    def log10_max_term(self) -> np.ndarray:
        """``(s(m_bar) + m_bar u) / ln 10`` at each sample."""
        return (self.s + self.m_bar * self.u) / LN10


@dataclass(frozen=True)
class Estimate:
    x: float
    P: int
    m_peak: float
    log10_max_term: float
    M: int
    nu: float
    curve: EstimateCurve
    profile: WkbProfile | None = None


def curve_from_S(u, S, nu: float = 0.0, *, log_correction: bool = True) -> EstimateCurve:
    """Legendre-transform sampled ``S(u)`` on a uniform grid."""
    f = SampledFunction(np.asarray(u, dtype=float), np.asarray(S, dtype=float))
    if f.grid.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    S0 = f.values
    if log_correction:
        d2 = f.d2
        bad = np.nonzero(~(d2[1:-1] > 0))[0]
        if bad.size:
            raise NonConvexError(int(bad[0]) + 1, float(d2[bad[0] + 1]))
        if not (d2[0] > 0 and d2[-1] > 0):
            raise NonConvexError(0 if not d2[0] > 0 else d2.size - 1, float(min(d2[0], d2[-1])))
        S0 = f.values - 0.5 * np.log(2 * np.pi * d2)
    dS0 = SampledFunction(f.grid, S0).d1
    return EstimateCurve(f.grid, dS0 - nu, S0 - f.grid * dS0, S0, float(nu))


def curve_from_profile(profile: WkbProfile, nu: float = 0.0, *, log_correction: bool = True) -> EstimateCurve:
    return curve_from_S(profile.u, profile.S, nu, log_correction=log_correction)


def _check_m(curve: EstimateCurve, m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    lo, hi = curve.m_range
    if np.any(m < lo) or np.any(m > hi):
        raise ExtrapolationError(f"m outside the curve range [{lo:.6g}, {hi:.6g}]")
    return m


def predict_coeff_log(curve: EstimateCurve, m):
    """Monotone (PCHIP) interpolation of ``log|a_m|``."""
    out = curve.s_of_m(_check_m(curve, m))
    return float(out) if np.ndim(out) == 0 else out


def _peak(curve: EstimateCurve, x: float) -> float:
    if not x > 0:
        raise ValueError("x must be positive")
    lx = math.log(x)
    lo, hi = curve.u_range
    if not lo <= lx <= hi:
        raise ExtrapolationError(f"log x = {lx:.6g} outside the curve range [{lo:.6g}, {hi:.6g}]")
    return float(curve.m_of_u(lx))


def predict_max_term(curve: EstimateCurve, x: float) -> tuple[float, float]:
    """``(m_peak, log10 of the largest term |a_m| x^m)``."""
    m = _peak(curve, x)
    return m, (float(curve.s_of_m(m)) + m * math.log(x)) / LN10


def predict_num_terms(curve: EstimateCurve, x: float, P: float) -> int:
    """Smallest ``M`` past the peak with ``s(M) + M ln x <= -P ln 10``."""
    lx = math.log(x)
    m_peak = _peak(curve, x)
    target = -P * LN10

    def g(m):
        return float(curve.s_of_m(m)) + m * lx - target

    if g(m_peak) <= 0:
        return max(0, math.ceil(m_peak))
    hi = curve.m_range[1]
    if g(hi) > 0:
        raise UnreachablePrecision(f"terms stay above 1e-{P} up to m = {hi:.6g}; extend the u range")
    root = brentq(g, m_peak, hi, xtol=1e-9, rtol=1e-12)
    return math.ceil(root)


def _solution_nu(prob: ODEProblem, which: str) -> float:
    sol = solve_series(prob, which)
    if sol.kind is SeriesKind.FROBENIUS_LOG:
        raise LogSeriesUnsupported("the selected solution has logarithmic terms; estimation covers pure series only")
    return float(complex(sol.nu).real)


def estimate_problem(problem: ODEProblem | CanonicalProblem, x: float, P: float, *, which: str = "nu2",
                     n_phi: int = 64, du: float = DEFAULT_DU, span: float = 1.0, max_span: float = 8.0,
                     jobs: int = 1) -> Estimate:
    """WKB profile around ``log x``, widened until the term count is reachable."""
    prob = as_ode(problem)
    cp = problem if isinstance(problem, CanonicalProblem) else to_canonical(problem)
    nu = _solution_nu(prob, which)
    lx = math.log(x)
    lo = lx - span
    n = int(round(2 * span / du)) + 1
    u = lo + du * np.arange(n)
    prof = s_profile(cp, u, n_phi, jobs=jobs)
    while True:
        curve = curve_from_profile(prof, nu)
        try:
            M = predict_num_terms(curve, x, P)
            break
        except UnreachablePrecision:
            if prof.u[-1] - lx >= max_span:
                raise
            extra = prof.u[-1] + du * np.arange(1, int(round(span / du)) + 1)
            more = s_profile(cp, extra, n_phi, jobs=jobs)
            prof = WkbProfile(np.concatenate([prof.u, more.u]), np.concatenate([prof.S, more.S]),
                              np.concatenate([prof.phi_star, more.phi_star]),
                              np.concatenate([prof.branch, more.branch]), prof.var_power, prof.terms)
    m_peak, l10 = predict_max_term(curve, x)
    return Estimate(float(x), P, m_peak, l10, M, nu, curve, prof)


def write_estimate_csv(stream, curve: EstimateCurve, digits: int = 12) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["u", "m_bar", "log_abs_a", "log10_max_term"])
    for u, m, s, l10 in zip(curve.u, curve.m_bar, curve.s, curve.log10_max_term()):
        w.writerow([f"{u:.{digits}g}", f"{m:.{digits}g}", f"{s:.{digits}g}", f"{l10:.{digits}g}"])


# ---------------------------------------------------------------------------
# closed-form reference curves for the y^4 oscillators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Reference:
    u: float
    S: float
    m_bar: float
    log_a: float


def delta_S(c2: float, u: float) -> float:
    """Prefactor contribution ``-1/2 log(e^u + c^2)``."""
    return -0.5 * math.log(math.exp(u) + c2)


def delta_S0(c2: float, u: float) -> float:
    """Curvature contribution ``-1/2 log(3/4 e^(3u/2) + 1/4 c^2 e^(u/2))``."""
    return -0.5 * math.log(0.75 * math.exp(1.5 * u) + 0.25 * c2 * math.exp(0.5 * u))


def anharmonic_log_a_explicit(m: float, corrected: bool = False) -> float:
    """``c = 0``: ``2/3 m (1 - log 2m)``, or with the log corrections
    ``1/3 (2m + 5/2)(1 - log(2m + 5/2))``."""
    if corrected:
        k = 2 * m + 2.5
        return k / 3 * (1 - math.log(k))
    return 2 * m / 3 * (1 - math.log(2 * m))


def _anharmonic_at_u(c2: float, u: float, corrected: bool) -> Reference:
    a, b = math.exp(1.5 * u), math.exp(0.5 * u)
    S = (a + 3 * c2 * b) / 3
    if not corrected:
        m = 0.5 * (a + c2 * b)
        return Reference(u, S, m, (1 / 3 - 0.5 * u) * a + c2 * (1 - 0.5 * u) * b)
    x = math.exp(u)
    S0 = S + delta_S(c2, u) + delta_S0(c2, u)
    dS0 = 0.5 * (a + c2 * b) - 0.5 * x / (x + c2) - 0.5 * (1.125 * a + 0.125 * c2 * b) / (0.75 * a + 0.25 * c2 * b)
    return Reference(u, S + delta_S(c2, u), dS0, S0 - u * dS0)


def anharmonic_reference(c2: float, *, u: float | None = None, m: float | None = None,
                         corrected: bool = False) -> Reference:
    """``-Psi'' + (y^2 + c^2)^2 Psi = 0`` with ``x = y^2 = e^u``.

    Uncorrected: ``S = (e^(3u/2) + 3 c^2 e^(u/2))/3``, ``m = (e^(3u/2) + c^2 e^(u/2))/2``.
    ``corrected`` adds the prefactor and curvature terms to ``S0``.  Given
    ``m`` instead of ``u`` the matching ``u`` is found by root search.
    """
    if (u is None) == (m is None):
        raise ValueError("give exactly one of u, m")
    if u is not None:
        return _anharmonic_at_u(float(c2), float(u), corrected)
    lo, hi = -20.0, 20.0
    f = lambda t: _anharmonic_at_u(float(c2), t, corrected).m_bar - m  # noqa: E731
    if corrected:
        lo = 0.0
        while f(lo) > 0 or not math.isfinite(f(lo)):
            lo -= 1.0
    return _anharmonic_at_u(float(c2), brentq(f, lo, hi, xtol=1e-14), corrected)


def double_well_reference(c2: float, u: float) -> Reference:
    """``-Psi'' + (y^2 - c^2)^2 Psi = 0`` with ``x = y^2 = e^u``, phase-maximised.

    Inner regime ``e^u <= c^2/3`` (maximum on the negative real ``y`` axis)
    and outer regime, where ``cos(phi/2) = -1/2 (1 + c^2 e^-u)^(1/2)``.
    """
    x = math.exp(u)
    h = math.exp(0.5 * u)
    if x <= c2 / 3:
        S = c2 * h - x * h / 3
        m = 0.5 * h * (c2 - x)
        s = (1 - 0.5 * u) * c2 * h - (1 / 3 - 0.5 * u) * x * h
    else:
        r = math.sqrt(x + c2)
        S = (x + c2) * r / 3
        m = 0.5 * x * r
        s = ((1 / 3 - 0.5 * u) * x + c2 / 3) * r
    return Reference(u, S, m, s)


def double_well_phase(c2: float, u: float) -> float:
    """Maximising phase ``phi`` of ``x`` in ``[0, 2pi)`` (upper-half ``y`` representative)."""
    x = math.exp(u)
    if x <= c2 / 3:
        return 0.0  # y on the negative real axis: phi = 2pi
    return (2 * math.acos(-0.5 * math.sqrt(1 + c2 / x))) % (2 * math.pi)
