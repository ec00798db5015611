"""Independent checks used by the tests and by ``frobseries validate``.

The residual oracle differentiates the truncated series term by term and
multiplies by ``p, q, r`` directly; it shares no code with the recursion
kernel.
"""
from __future__ import annotations

import math
from collections import defaultdict
from fractions import Fraction

from .numerics import context, exact, to_mp
from .ode import ODEProblem


def apply_operator(prob: ODEProblem, nu, a0: list, a1: list | None = None) -> dict:
    """``L psi`` for ``psi = sum_m (a0_m + a1_m log z) z^(m+nu)``, exactly.

    Returns ``{(e, j): c}`` meaning ``c * z^(e+nu) * log(z)^j``.
    """
    nu = exact(nu)
    a1 = a1 or []
    out: dict = defaultdict(Fraction)

    def add(e, j, c):
        if c != 0:
            out[(e, j)] = out[(e, j)] + c

    for m in range(max(len(a0), len(a1))):
        c0 = a0[m] if m < len(a0) else 0
        c1 = a1[m] if m < len(a1) else 0
        mu = nu + m
        # (d/dz)^2 and d/dz of c0 z^mu and c1 z^mu log z, as (shift, logpow, coeff)
        d2 = [(-2, 0, c0 * mu * (mu - 1) + c1 * (2 * mu - 1)), (-2, 1, c1 * mu * (mu - 1))]
        d1 = [(-1, 0, c0 * mu + c1), (-1, 1, c1 * mu)]
        d0 = [(0, 0, c0), (0, 1, c1)]
        for poly, terms in ((prob.p, d2), (prob.q, d1), (prob.r, d0)):
            for i, pi in enumerate(poly.coeffs):
                if pi == 0:
                    continue
                for sh, lp, c in terms:
                    if c != 0:
                        add(m + sh + i, lp, exact(pi * c))
    return {k: v for k, v in out.items() if v != 0}


def residual_clean_through(prob: ODEProblem, nu, a0: list, a1: list | None, upto: int) -> list:
    """Nonzero residual entries with exponent offset ``e <= upto``."""
    res = apply_operator(prob, nu, a0, a1)
    return sorted((k, v) for k, v in res.items() if k[0] <= upto)


def abel_ratio(prob: ODEProblem, z1, z2, bits: int = 256):
    """``exp(-integral_{z1}^{z2} q/p dz)`` along the straight segment."""
    ctx = context(bits)
    z1m, z2m = to_mp(exact(z1), ctx), to_mp(exact(z2), ctx)
    pc = [to_mp(c, ctx) for c in prob.p.coeffs]
    qc = [to_mp(c, ctx) for c in prob.q.coeffs]

    def f(t):
        z = z1m + t * (z2m - z1m)
        return ctx.polyval(qc[::-1], z) / ctx.polyval(pc[::-1], z) if qc else ctx.zero

    integral = ctx.quad(f, [0, 1]) * (z2m - z1m)
    return ctx.exp(-integral)


def wronskian(y1, dy1, y2, dy2):
    return y1 * dy2 - dy1 * y2


def exp_oracle(z: Fraction, terms: int) -> Fraction:
    """``sum_{k<terms} z^k/k!`` exactly."""
    s, t = Fraction(0), Fraction(1)
    for k in range(terms):
        s += t
        t = t * z / (k + 1)
    return s


def j0_oracle(z: Fraction, terms: int) -> Fraction:
    """``sum_k (-1)^k (z/2)^(2k) / (k!)^2`` exactly."""
    s, t = Fraction(0), Fraction(1)
    x = z * z / 4
    for k in range(terms):
        s += t
        t = -t * x / ((k + 1) ** 2)
    return s


def log10_err(a, b) -> float:
    d = abs(a - b)
    if d == 0:
        return -math.inf
    from .numerics import log10_abs

    return log10_abs(d)


# ---------------------------------------------------------------------------
# quick acceptance corpus for ``frobseries validate``
# ---------------------------------------------------------------------------


def _check_exp():
    from .frobenius import evaluate, solve_series
    from .ode import ODEProblem, Poly

    prob = ODEProblem(Poly.of(1), Poly.of(), Poly.of(-1))
    P = 200
    res = evaluate(prob, solve_series(prob, initial=(1, 1)), 1, P)
    err = log10_err(res.value, to_mp(exp_oracle(Fraction(1), 200), res.value.context))
    return err <= -P, f"log10 err {err:.1f}"


def _check_j0():
    from .frobenius import evaluate, solve_series
    from .ode import ODEProblem, Poly

    prob = ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(0, 0, 1))
    P = 100
    res = evaluate(prob, solve_series(prob, "nu2"), 1, P)
    err = log10_err(res.value, to_mp(j0_oracle(Fraction(1), 80), res.value.context))
    return err <= -P, f"log10 err {err:.1f}"


def _check_log_residual():
    from .frobenius import solve_series
    from .ode import ODEProblem, Poly, reduce_origin

    prob = ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(-1, 0, 1))
    sol = solve_series(prob, "log")
    M = 60
    a0, a1 = sol.take(M)
    _, red = reduce_origin(sol.problem)
    bad = residual_clean_through(red, sol.nu_kernel, a0, a1, M - sol.kernel.depth)
    return not bad, f"{len(bad)} nonzero residual terms"


def _check_binomial():
    from .legendre import binomial_demo

    row = binomial_demo(10)[5]
    return abs(row["legendre"] - 0.252313) <= 1e-6, f"legendre(5) = {row['legendre']:.7f}"


def _check_gaussian():
    import numpy as np

    from .legendre import SampledFunction, corrected_inverse, corrected_inverse_error_bound, one_loop

    U = SampledFunction.from_callable(lambda x: 0.5 * 1.7 * x * x, -2, 2, 101)
    res = one_loop(U)
    F1 = res.sampled("F1").resample()
    back = corrected_inverse(F1)
    err = float(np.max(np.abs(back.values - 0.5 * 1.7 * back.grid**2)))
    bound = corrected_inverse_error_bound(F1)
    return err <= 10 * bound, f"err {err:.2e} bound {bound:.2e}"


def _check_profile():
    import numpy as np

    from .ode import anharmonic_y_canonical
    from .wkb import s_profile

    u = np.linspace(1, 6, 11)
    prof = s_profile(anharmonic_y_canonical(1), u, var_power=2, terms="exponent")
    ref = (np.exp(1.5 * u) + 3 * np.exp(0.5 * u)) / 3
    rel = float(np.max(np.abs(prof.S / ref - 1)))
    return rel <= 1e-3, f"max rel {rel:.1e}"


def _check_term_count():
    from .estimator import estimate_problem
    from .frobenius import evaluate, solve_series
    from .ode import anharmonic_canonical, from_canonical

    cp = anharmonic_canonical(0)
    prob = from_canonical(cp)
    used = evaluate(prob, solve_series(prob, "nu1"), 25, 100).M_used
    M = estimate_problem(cp, 25.0, 100, which="nu1").M
    return abs(M / used - 1) <= 0.1, f"predicted {M}, used {used}"


def _check_continuation():
    from .frobenius import continue_along, evaluate, solve_series
    from .ode import ODEProblem, Poly

    prob = ODEProblem(Poly.of(1), Poly.of(), Poly.of(-1))
    P = 60
    cont = continue_along(prob, 0, (1, 1), [2, 4], P)
    direct = evaluate(prob, solve_series(prob, initial=(1, 1)), 4, P + 10)
    err = log10_err(cont.value, direct.value)
    return err <= -(P - 5), f"log10 err {err:.1f}"


CORPUS = (
    ("exp(1) to 200 digits", _check_exp),
    ("J0(1) to 100 digits", _check_j0),
    ("Bessel-1 log solution residual", _check_log_residual),
    ("binomial demo N=10", _check_binomial),
    ("Gaussian Legendre round trip", _check_gaussian),
    ("WKB profile closed form", _check_profile),
    ("term-count prediction", _check_term_count),
    ("analytic continuation", _check_continuation),
)


def run_corpus() -> list[tuple[str, bool, str]]:
    out = []
    for name, check in CORPUS:
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
