"""Series coefficients for every regular-singular case, summation with a
sustained stopping rule, and analytic continuation.

A single recursion kernel covers all cases.  Writing

    L[(a0 + a1 log z) z^(m+nu)]  summed over m

and collecting powers of ``z`` gives, at each index ``n``,

    sum_k P_k(n+nu) (a0_{n-k} + a1_{n-k} log z) + Q_k(n+nu) a1_{n-k} = 0

with ``P_k(mu) = (mu-k)[(mu-1-k) p_k + q_{k-1}] + r_{k-2}`` and
``Q_k(mu) = (2mu-1-2k) p_k + q_{k-1}``.  The lowest ``k`` whose ``P_k`` is not
identically zero is the *lead* ``d`` (0 at an ordinary point, 1 after an index
shift, 2 for an unshifted case-B problem).  Coefficient ``j`` is fixed by the
equation at ``n = j + d``; the indices where ``P_d`` vanishes are resonances
and carry the free constants.

The kernel is generic over the number field: exact ``Fraction``/``QComplex``
when no context is given, otherwise mpmath values at the context precision.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterator, Sequence

import mpmath
import numpy as np

from . import _kernels
from .numerics import (
    GUARD_MARGIN,
    MPC,
    Exact,
    PrecisionPolicy,
    QComplex,
    context,
    exact,
    format_decimal,
    log10_abs,
    plan_precision,
    to_mp,
)
from .ode import (
    IndexCase,
    IrrationalRoot,
    ODEProblem,
    PointClass,
    UnsupportedClassification,
    indicial_roots,
    recenter,
    reduce_origin,
    shift_index,
    singular_points,
    singular_radius,
)

__all__ = [
    "SeriesKind",
    "RecursionKernel",
    "SeriesSolution",
    "EvalResult",
    "taylor_stream",
    "frob_noninteger_streams",
    "frob_degenerate_streams",
    "frob_integer_diff_streams",
    "solve_series",
    "evaluate",
    "continue_along",
    "continue_from_series",
    "write_coefficients_csv",
    "DEFAULT_MAX_TERMS",
    "RecursionBreakdown",
    "ConvergenceError",
    "DivergenceError",
    "ContinuationError",
]

DEFAULT_MAX_TERMS = 10**7
#: closest a continuation step may land to a singular point, as a fraction of the step's disc radius
MIN_SINGULAR_DISTANCE = 0.1


class RecursionBreakdown(ArithmeticError):
    """A recursion denominator vanished where the case analysis says it cannot."""


class ConvergenceError(ValueError):
    """Evaluation point outside the series' disc of convergence."""


class DivergenceError(ArithmeticError):
    """The stopping criterion was not met within the term cap."""


class ContinuationError(ValueError):
    pass


class SeriesKind(enum.Enum):
    TAYLOR = "Taylor"
    FROBENIUS = "Frobenius"
    FROBENIUS_LOG = "FrobeniusLog"

    def __str__(self):
        return self.value


# ---------------------------------------------------------------------------
# recursion kernel
# ---------------------------------------------------------------------------


def _lead_index(prob: ODEProblem) -> int:
    """Smallest ``k`` for which ``P_k`` is not the zero polynomial in ``mu``."""
    for k in range(prob.depth + 1):
        if prob.p[k] != 0 or prob.q[k - 1] != 0 or prob.r[k - 2] != 0:
            return k
    raise ValueError("degenerate operator")


@dataclass(frozen=True)
class RecursionKernel:
    """``P_k`` and ``Q_k`` as quadratics / linears in ``mu``.

    ``P_k(mu) = p_k mu^2 + (q_{k-1} - (2k+1) p_k) mu + k(k+1) p_k - k q_{k-1} + r_{k-2}``
    ``Q_k(mu) = 2 p_k mu + q_{k-1} - (2k+1) p_k``
    """

    problem: ODEProblem
    lead: int
    depth: int
    # per k: (c2, c1, c0) for P_k and (d1, d0) for Q_k, exact
    pcoef: tuple
    qcoef: tuple

    @classmethod
    def build(cls, prob: ODEProblem) -> "RecursionKernel":
        d = _lead_index(prob)
        depth = max(prob.depth, d)
        pcoef, qcoef = [], []
        for k in range(depth + 1):
            pk, qk1, rk2 = prob.p[k], prob.q[k - 1], prob.r[k - 2]
            pcoef.append((pk, exact(qk1 - (2 * k + 1) * pk), exact(k * (k + 1) * pk - k * qk1 + rk2)))
            qcoef.append((exact(2 * pk), exact(qk1 - (2 * k + 1) * pk)))
        return cls(prob, d, depth, tuple(pcoef), tuple(qcoef))

    @property
    def window(self) -> int:
        """Number of previous coefficients the recursion reads."""
        return max(self.depth - self.lead, 1)

    def P(self, k: int, mu):
        if k < 0 or k > self.depth:
            return 0
        c2, c1, c0 = self.pcoef[k]
        return (c2 * mu + c1) * mu + c0

    def Q(self, k: int, mu):
        if k < 0 or k > self.depth:
            return 0
        d1, d0 = self.qcoef[k]
        return d1 * mu + d0

    def in_field(self, conv) -> tuple[list, list, list]:
        """Coefficient tables converted by ``conv``, with the list of active ``k > lead``."""
        active = [
            k
            for k in range(self.lead + 1, self.depth + 1)
            if any(c != 0 for c in self.pcoef[k]) or any(c != 0 for c in self.qcoef[k])
        ]
        pc = [tuple(conv(c) for c in t) for t in self.pcoef]
        qc = [tuple(conv(c) for c in t) for t in self.qcoef]
        return pc, qc, active

    def complex_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``p, q, r`` as complex128 arrays padded to the kernel depth."""
        n = self.depth + 1
        pr = self.problem
        return tuple(
            np.array([complex(poly[k]) for k in range(n)], dtype=np.complex128) for poly in (pr.p, pr.q, pr.r)
        )


# ---------------------------------------------------------------------------
# solutions
# ---------------------------------------------------------------------------


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction, QComplex))


@dataclass(frozen=True)
class SeriesSolution:
    """``psi(w) = w^nu_shift * sum_j (a0_j + a1_j log w) w^(j + nu_kernel)``.

    ``fixed`` lists the free constants as ``(j, a0_j, a1_j)``; ``a1_j = None``
    marks a logarithmic resonance where ``a1_j`` is solved for instead.
    """

    kind: SeriesKind
    kernel: RecursionKernel
    nu_kernel: Exact | IrrationalRoot
    fixed: tuple
    nu_shift: Exact = Fraction(0)
    M: int | None = None
    max_term_log10: float | None = None

    @property
    def has_log(self) -> bool:
        return self.kind is SeriesKind.FROBENIUS_LOG

    @property
    def problem(self) -> ODEProblem:
        return self.kernel.problem

    @property
    def nu(self):
        """Total exponent of the leading power (exact when possible)."""
        if isinstance(self.nu_kernel, IrrationalRoot):
            return self.nu_kernel
        return exact(self.nu_shift + self.nu_kernel)

    @property
    def exact(self) -> bool:
        return not isinstance(self.nu_kernel, IrrationalRoot) and all(
            _is_exact(a0) and (a1 is None or _is_exact(a1)) for _, a0, a1 in self.fixed
        )

    def nu_value(self, ctx):
        """Kernel index in ``ctx`` (the outer shift is not included)."""
        if isinstance(self.nu_kernel, IrrationalRoot):
            return self.nu_kernel.at(ctx)
        return to_mp(self.nu_kernel, ctx)

    def coefficients(self, ctx=None) -> Iterator[tuple]:
        """Endless stream of ``(a0_j, a1_j)``.

        With ``ctx=None`` the arithmetic is exact; otherwise everything is
        converted into ``ctx``.  Only a window of previous values is kept.
        """
        kern = self.kernel
        if ctx is None:
            if not self.exact:
                raise TypeError("exact coefficients need exact index and initial data")
            conv = exact
            nu = exact(self.nu_kernel)
        else:
            conv = lambda x: to_mp(x, ctx)  # noqa: E731
            nu = self.nu_value(ctx)
        zero = conv(0)
        pc, qc, active = kern.in_field(conv)
        d = kern.lead
        W = kern.window
        has_log = self.has_log
        fixed = {j: (a0, a1) for j, a0, a1 in self.fixed}
        h0 = [zero] * W
        h1 = [zero] * W

        def P(k, mu):
            c2, c1, c0 = pc[k]
            return (c2 * mu + c1) * mu + c0

        def Q(k, mu):
            d1, d0 = qc[k]
            return d1 * mu + d0

        j = 0
        while True:
            mu = nu + (j + d)
            hist = [(k, (j + d - k) % W) for k in active if j + d - k >= 0]
            if j in fixed:
                a0f, a1f = fixed[j]
                a0 = conv(a0f)
                if a1f is None:
                    s = zero
                    for k, i in hist:
                        s += P(k, mu) * h0[i] + Q(k, mu) * h1[i]
                    qd = Q(d, mu)
                    if qd == 0:
                        raise RecursionBreakdown(f"log resonance at j={j} has Q_d = 0")
                    a1 = -s / qd
                else:
                    a1 = conv(a1f) if has_log else zero
            else:
                den = P(d, mu)
                if den == 0:
                    raise RecursionBreakdown(f"recursion denominator vanishes at j={j}")
                s0 = zero
                if has_log:
                    s1 = zero
                    for k, i in hist:
                        pk = P(k, mu)
                        s1 += pk * h1[i]
                        s0 += pk * h0[i] + Q(k, mu) * h1[i]
                    a1 = -s1 / den
                    s0 += Q(d, mu) * a1
                else:
                    for k, i in hist:
                        s0 += P(k, mu) * h0[i]
                    a1 = zero
                a0 = -s0 / den
            h0[j % W] = a0
            h1[j % W] = a1
            yield a0, a1
            j += 1

    def take(self, n: int, ctx=None) -> tuple[list, list]:
        """First ``n`` coefficients as ``(a0 list, a1 list)``; the log list is
        empty unless the solution has a logarithmic part."""
        a0s, a1s = [], []
        for _, (a0, a1) in zip(range(n), self.coefficients(ctx)):
            a0s.append(a0)
            a1s.append(a1)
        return a0s, (a1s if self.has_log else [])


def _fixed(*entries) -> tuple:
    return tuple((j, a0 if not _is_exact(a0) else exact(a0), a1 if a1 is None or not _is_exact(a1) else exact(a1))
                 for j, a0, a1 in entries)


def taylor_stream(prob: ODEProblem, a0, a1) -> SeriesSolution:
    """Taylor series at an ordinary point with ``psi(0) = a0``, ``psi'(0) = a1``."""
    if prob.p[0] == 0:
        raise UnsupportedClassification("Taylor recursion needs an ordinary point (p0 != 0)")
    kern = RecursionKernel.build(prob)
    assert kern.lead == 0
    return SeriesSolution(SeriesKind.TAYLOR, kern, Fraction(0), _fixed((0, a0, 0), (1, a1, 0)))


def _shifted(data) -> ODEProblem:
    """Problem for ``psi~`` with ``psi = w^nu2 psi~``."""
    return shift_index(data.reduced, data.nu2)


def frob_noninteger_streams(prob: ODEProblem, a0=1) -> tuple[SeriesSolution, SeriesSolution]:
    """The two pure power series when the indicial roots do not differ by an integer.

    Rational (or Gaussian-rational) roots are handled by shifting by ``nu2``
    first; irrational roots run the unshifted recursion with the root carried
    symbolically.
    """
    data = indicial_roots(prob)
    if data.case is not IndexCase.NON_INTEGER_DIFF:
        raise UnsupportedClassification(f"index difference is not non-integer ({data.describe()})")
    if not data.exact:
        kern = RecursionKernel.build(data.reduced)
        sols = tuple(
            SeriesSolution(SeriesKind.FROBENIUS, kern, nu, _fixed((0, a0, 0)))
            for nu in (data.nu1, data.nu2)
        )
        return sols  # type: ignore[return-value]
    kern = RecursionKernel.build(_shifted(data))
    nu1 = exact(data.nu1 - data.nu2)
    s1 = SeriesSolution(SeriesKind.FROBENIUS, kern, nu1, _fixed((0, a0, 0)), nu_shift=data.nu2)
    s2 = SeriesSolution(SeriesKind.FROBENIUS, kern, Fraction(0), _fixed((0, a0, 0)), nu_shift=data.nu2)
    return s1, s2


def frob_degenerate_streams(prob: ODEProblem, a00=0, a10=1) -> SeriesSolution:
    """Logarithmic solution for a double indicial root.

    ``a10`` multiplies the pure solution inside the log term; ``a00 = 1,
    a10 = 0`` reproduces the pure solution itself.
    """
    data = indicial_roots(prob)
    if data.case is not IndexCase.DEGENERATE:
        raise UnsupportedClassification(f"indicial roots are not degenerate ({data.describe()})")
    sh = _shifted(data)
    if sh.q[0] != sh.p[1]:
        raise RecursionBreakdown("shifted problem violates q0 = p1")
    kern = RecursionKernel.build(sh)
    return SeriesSolution(SeriesKind.FROBENIUS_LOG, kern, Fraction(0), _fixed((0, a00, a10)), nu_shift=data.nu2)


def frob_integer_diff_streams(prob: ODEProblem, ell: int | None = None, a00=1, a0ell=0) -> SeriesSolution:
    """Solution belonging to the smaller root when the roots differ by ``ell``.

    The log coefficient ``a1_ell`` is forced by the recursion; it vanishes
    exactly when no logarithm is needed.  ``a0_ell`` is free.
    """
    data = indicial_roots(prob)
    if data.case is not IndexCase.INTEGER_DIFF:
        raise UnsupportedClassification(f"index difference is not a positive integer ({data.describe()})")
    if ell is not None and ell != data.ell:
        raise UnsupportedClassification(f"index difference is {data.ell}, not {ell}")
    ell = data.ell
    sh = _shifted(data)
    if sh.q[0] != (1 + ell) * sh.p[1]:
        raise RecursionBreakdown(f"shifted problem violates q0 = (1+ell) p1 for ell={ell}")
    kern = RecursionKernel.build(sh)
    nu = Fraction(-ell)
    for j in range(1, ell):
        if kern.P(kern.lead, nu + j + kern.lead) == 0:
            raise RecursionBreakdown(f"denominator vanishes at j={j} < ell={ell}")
    if kern.P(kern.lead, nu + ell + kern.lead) != 0:
        raise RecursionBreakdown(f"no resonance at j=ell={ell}")
    return SeriesSolution(
        SeriesKind.FROBENIUS_LOG, kern, nu, _fixed((0, a00, 0), (ell, a0ell, None)), nu_shift=data.nu2
    )


def _pure_nu2(data, a0=1) -> SeriesSolution:
    kern = RecursionKernel.build(_shifted(data))
    return SeriesSolution(SeriesKind.FROBENIUS, kern, Fraction(0), _fixed((0, a0, 0)), nu_shift=data.nu2)


def solve_series(prob: ODEProblem, which: str = "nu2", initial: Sequence | None = None) -> SeriesSolution:
    """Pick the right recursion for the expansion point.

    ``which`` selects ``nu1``/``nu2``/``log`` at a regular singular point
    (``nu1`` and ``log`` coincide when the roots differ by an integer); at an
    ordinary point it is ignored and ``initial = (psi(0), psi'(0))``.
    """
    cls, red = reduce_origin(prob)
    if cls is PointClass.ORDINARY:
        a0, a1 = initial if initial is not None else (1, 0)
        return taylor_stream(red, a0, a1)
    if cls is PointClass.IRREGULAR:
        raise UnsupportedClassification("irregular singular point")
    if which not in ("nu1", "nu2", "log"):
        raise ValueError(f"unknown solution selector {which!r}")
    data = indicial_roots(red)
    if data.case is IndexCase.NON_INTEGER_DIFF:
        if which == "log":
            raise UnsupportedClassification("no logarithmic solution when roots differ by a non-integer")
        s1, s2 = frob_noninteger_streams(red, *(initial[:1] if initial else ()))
        return s1 if which == "nu1" else s2
    if which == "nu2":
        return _pure_nu2(data, *(initial[:1] if initial else ()))
    if data.case is IndexCase.DEGENERATE:
        return frob_degenerate_streams(red, *(initial or ()))
    return frob_integer_diff_streams(red, data.ell, *(initial or ()))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalResult:
    value: object
    derivative: object
    M_used: int
    max_term_log10: float
    achieved_digits_estimate: float
    policy: PrecisionPolicy | None = None
    solution: SeriesSolution | None = None
    last_term_log10: float = -math.inf


def _local(prob: ODEProblem, z, ctx):
    """``z - center`` in ``ctx`` (exact subtraction when ``z`` is exact)."""
    if _is_exact(z) or isinstance(z, (str, tuple, list)):
        return to_mp(exact(exact(z) - prob.center), ctx)
    return to_mp(z, ctx) - to_mp(prob.center, ctx)


def _tail_log10(rho: float, R: float) -> float:
    if not math.isfinite(R):
        return 0.0
    qr = rho / R
    return math.log10(max(1.0, qr / (1.0 - qr)))


def _dry_run(sol: SeriesSolution, w: complex, P: int, tail: float, D: int, max_terms: int):
    kern = sol.kernel
    pc, qc, rc = kern.complex_tables()
    ctx = context(64)
    nu = complex(sol.nu_value(ctx))
    idx = np.array([j for j, _, _ in sol.fixed], dtype=np.int64)
    fa0 = np.array([complex(to_mp(a0, ctx)) for _, a0, _ in sol.fixed], dtype=np.complex128)
    fa1 = np.array([0j if a1 is None else complex(to_mp(a1, ctx)) for _, _, a1 in sol.fixed], dtype=np.complex128)
    solve1 = np.array([a1 is None for _, _, a1 in sol.fixed], dtype=np.bool_)
    rho = abs(w)
    logw = complex(np.log(w))
    re_nu = (nu + complex(to_mp(sol.nu_shift, ctx))).real
    return _kernels.dry_run(pc, qc, rc, kern.lead, kern.depth, nu, idx, fa0, fa1, solve1, sol.has_log,
                            logw, rho, re_nu, float(P), tail, D, int(max_terms))


def evaluate(prob: ODEProblem, solution: SeriesSolution, z, P: int, *, max_terms: int = DEFAULT_MAX_TERMS,
             max_term_log10: float | None = None) -> EvalResult:
    """Sum the series and its derivative at ``z`` (in the coordinates of ``prob``).

    Summation stops after ``D`` consecutive terms with
    ``(|a0_j| + |a1_j log w|) |w|^(j + Re nu) <= 10^-P / tail`` where ``tail``
    is the geometric tail factor ``max(1, q/(1-q))`` with ``q = |w|/R``.
    The working precision comes from a double-precision dry run of the same
    recursion (or from ``max_term_log10`` when the caller has an estimate).
    """
    kern = solution.kernel
    D = max(kern.problem.depth, 1)
    ctx0 = context(128)
    w0 = _local(prob, z, ctx0)
    rho = float(abs(w0))
    R = singular_radius(kern.problem)
    if rho >= R:
        raise ConvergenceError(f"|w|={rho:.6g} is not inside the disc of convergence (radius {R:.6g}); "
                               "the tail bound needs |w| < R")
    if rho == 0:
        return _evaluate_at_center(solution, P)
    tail = _tail_log10(rho, R)

    if max_term_log10 is None:
        est, m_est, ok = _dry_run(solution, complex(w0), P, tail, D, max_terms)
        if not ok:
            raise DivergenceError(f"stopping criterion not met within {max_terms} terms")
        max_term_log10 = est if math.isfinite(est) else 0.0
    for _attempt in range(3):
        policy = plan_precision(P, max_term_log10)
        res = _sweep(prob, solution, z, P, policy, tail, D, max_terms)
        if res.max_term_log10 <= policy.guard_digits - GUARD_MARGIN / 2:
            return res
        max_term_log10 = res.max_term_log10
    return res


def _evaluate_at_center(solution: SeriesSolution, P: int) -> EvalResult:
    nu = solution.nu
    if solution.has_log or isinstance(nu, IrrationalRoot) or nu != 0:
        raise ConvergenceError("the series is singular (or multivalued) at its expansion point")
    policy = plan_precision(P, 0)
    ctx = policy.context
    (a0, a1), _ = solution.take(2, ctx)
    return EvalResult(a0, a1, 0, log10_abs(a0), float(P), policy, solution)


def _sweep(prob, solution, z, P, policy, tail, D, max_terms) -> EvalResult:
    ctx = policy.context
    w = _local(prob, z, ctx)
    if isinstance(w, MPC) and w.imag == 0:
        w = w.real
    nu_k = solution.nu_value(ctx)
    nu_tot = nu_k + to_mp(solution.nu_shift, ctx)
    has_log = solution.has_log
    L = ctx.log(w) if has_log else None
    absL = abs(L) if has_log else 0
    rho = abs(w)
    lrho = float(log10_abs(rho))
    re_nu = float(ctx.re(nu_tot))
    threshold = -P - tail
    s0 = ctx.zero
    s1 = ctx.zero
    wp = ctx.one
    best = -math.inf
    last = -math.inf
    run = 0
    M = None
    for j, (a0, a1) in enumerate(solution.coefficients(ctx)):
        if j >= max_terms:
            raise DivergenceError(f"stopping criterion not met within {max_terms} terms")
        if has_log:
            base = a0 + a1 * L
            s0 += base * wp
            s1 += ((j + nu_k) * base + a1) * wp
            mag = abs(a0) + abs(a1) * absL
        else:
            s0 += a0 * wp
            s1 += (j + nu_k) * a0 * wp
            mag = abs(a0)
        t = log10_abs(mag) + (j + re_nu) * lrho if mag != 0 else -math.inf
        if t > best:
            best = t
        if t <= threshold:
            run += 1
            if run >= D:
                M = j - D + 1
                last = t
                break
        else:
            run = 0
        wp *= w
    nu_tot_exact = solution.nu
    if not isinstance(nu_tot_exact, IrrationalRoot) and nu_tot_exact == 0:
        value = s0
        deriv = s1 / w
    else:
        value = ctx.power(w, nu_tot) * s0
        deriv = ctx.power(w, nu_tot - 1) * s1
    # s1 above carries (j + nu_kernel); add the outer shift's contribution
    if solution.nu_shift != 0:
        deriv += to_mp(solution.nu_shift, ctx) * value / w
    working_digits = policy.working_bits / math.log2(10)
    achieved = min(float(P), working_digits - max(0.0, best) - math.log10(M + D + 1))
    best = best if math.isfinite(best) else -math.inf
    sol = replace(solution, M=M, max_term_log10=best)
    return EvalResult(value, deriv, M, best, achieved, policy, sol, last)


# ---------------------------------------------------------------------------
# analytic continuation
# ---------------------------------------------------------------------------


def continue_along(prob: ODEProblem, z0, init: tuple, path: Sequence, P: int, *,
                   max_terms: int = DEFAULT_MAX_TERMS) -> EvalResult:
    """Carry ``(psi, psi')`` from ``z0`` through ``path`` by successive Taylor series.

    Every point must be ordinary, each step must stay inside the disc of the
    expansion at its start, and no step may land within 10% of that disc's
    radius of a singular point.  Each step works to ``P + ceil(log10 steps) + 5``
    digits.
    """
    pts = [exact(z0)] + [exact(z) for z in path]
    pts = [p for i, p in enumerate(pts) if i == 0 or p != pts[i - 1]]
    steps = len(pts) - 1
    psi, dpsi = init
    if steps == 0:
        return EvalResult(psi, dpsi, 0, -math.inf, float(P))
    Pstep = P + math.ceil(math.log10(steps)) + 5
    total_M = 0
    best = -math.inf
    last = None
    for za, zb in zip(pts[:-1], pts[1:]):
        local = recenter(prob, exact(za - prob.center))
        if local.p[0] == 0:
            raise ContinuationError(f"intermediate point {za} is singular")
        R = singular_radius(local)
        h = exact(zb - za)
        hc = complex(h)
        if abs(hc) >= R:
            raise ContinuationError(f"step {za} -> {zb} leaves the disc of convergence (radius {R:.6g})")
        sing = singular_points(local)
        if sing.size and np.min(np.abs(sing - hc)) < MIN_SINGULAR_DISTANCE * R:
            raise ContinuationError(f"step {za} -> {zb} lands too close to a singular point")
        sol = taylor_stream(local, psi, dpsi)
        last = evaluate(local, sol, zb, Pstep, max_terms=max_terms)
        psi, dpsi = last.value, last.derivative
        total_M += last.M_used
        best = max(best, last.max_term_log10)
    achieved = min(float(P), last.achieved_digits_estimate - math.log10(steps))
    return EvalResult(psi, dpsi, total_M, best, achieved, last.policy, last.solution, last.last_term_log10)


def continue_from_series(prob: ODEProblem, solution: SeriesSolution, z_start, path: Sequence, P: int,
                         **kw) -> EvalResult:
    """Evaluate ``solution`` at ``z_start`` (inside its disc), then continue along ``path``."""
    steps = max(len(path), 1)
    first = evaluate(prob, solution, z_start, P + math.ceil(math.log10(steps + 1)) + 5, **kw)
    if not path:
        return first
    res = continue_along(prob, z_start, (first.value, first.derivative), path, P, **kw)
    return replace(res, M_used=res.M_used + first.M_used, max_term_log10=max(res.max_term_log10, first.max_term_log10))


# ---------------------------------------------------------------------------
# coefficient dump
# ---------------------------------------------------------------------------


def _parts(x, digits):
    if isinstance(x, MPC):
        return format_decimal(x.real, digits), format_decimal(x.imag, digits)
    return format_decimal(x, digits), format_decimal(x.context.zero, digits)


def write_coefficients_csv(stream, solution: SeriesSolution, count: int, digits: int = 30) -> None:
    """``m,re_a0,im_a0,re_a1,im_a1,log10_abs_a0`` rows for ``m < count``."""
    ctx = context(math.ceil((digits + 10) * math.log2(10)))
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["m", "re_a0", "im_a0", "re_a1", "im_a1", "log10_abs_a0"])
    exact_mode = solution.exact
    for m, (a0, a1) in zip(range(count), solution.coefficients(None if exact_mode else ctx)):
        a0m, a1m = to_mp(a0, ctx), to_mp(a1, ctx)
        l10 = log10_abs(a0)
        writer.writerow([m, *_parts(a0m, digits), *_parts(a1m, digits),
                         "-inf" if l10 == -math.inf else f"{l10:.12g}"])
