"""Double-precision hot loops.

Each kernel is written once as plain Python over numpy arrays and compiled
with ``numba.njit`` when numba is importable.  Set ``FROBSERIES_NUMBA=0`` to
force the uncompiled path (used by the benchmark and by the backend
agreement tests).  The WKB ray quadrature additionally has a vectorised numpy
implementation, :func:`integrate_rays_numpy`, that handles a whole batch of
rays at once; it is what the numpy backend uses.
"""
from __future__ import annotations

import math
import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("FROBSERIES_NUMBA", "1") not in ("0", "false", "no")


def _jit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# float dry run of the series recursion
# ---------------------------------------------------------------------------


def _pk(pc, qc, rc, k, mu):
    out = 0j
    pk = pc[k] if k < pc.shape[0] else 0j
    qk = qc[k - 1] if 0 <= k - 1 < qc.shape[0] else 0j
    out = (mu - k) * ((mu - 1 - k) * pk + qk)
    if 0 <= k - 2 < rc.shape[0]:
        out += rc[k - 2]
    return out


def _qk(pc, qc, k, mu):
    pk = pc[k] if k < pc.shape[0] else 0j
    qk = qc[k - 1] if 0 <= k - 1 < qc.shape[0] else 0j
    return (2 * mu - 1 - 2 * k) * pk + qk


def _dry_run_impl(pc, qc, rc, lead, depth, nu, fixed_idx, fixed_a0, fixed_a1, fixed_solve1,
                  has_log, logw, rho, re_nu, P, tail_log10, D, max_terms):
    """Magnitude-only replay of the coefficient recursion in complex128.

    Works with the scaled quantities ``b_j = a_j * rho**j * 10**-scale`` so
    neither huge nor tiny terms leave the double range.  Returns
    ``(max_term_log10, M_used, stopped)`` where a term is
    ``(|a0_j| + |a1_j| |log w|) |w|^(j + Re nu)``.
    """
    W = depth - lead
    if W < 1:
        W = 1
    h0 = np.zeros(W, dtype=np.complex128)
    h1 = np.zeros(W, dtype=np.complex128)
    rpow = np.empty(depth + 1, dtype=np.float64)
    for k in range(depth + 1):
        rpow[k] = rho ** (k - lead) if k >= lead else 1.0
    labs = abs(logw)
    log10rho = math.log10(rho) if rho > 0 else -math.inf
    scale = 0.0
    best = -math.inf
    run = 0
    threshold = -P - tail_log10
    nfixed = fixed_idx.shape[0]
    for j in range(max_terms):
        mu = j + lead + nu
        slot = -1
        for i in range(nfixed):
            if fixed_idx[i] == j:
                slot = i
        b0 = 0j
        b1 = 0j
        if slot >= 0 and fixed_solve1[slot]:
            # resonance: a0 given, a1 from the Q-equation
            f = math.exp(j * math.log(rho) - scale * math.log(10.0)) if rho > 0 else (1.0 if j == 0 else 0.0)
            b0 = fixed_a0[slot] * f
            s = 0j
            for k in range(lead + 1, depth + 1):
                idx = (j + lead - k) % W
                if j + lead - k >= 0:
                    s += _pk(pc, qc, rc, k, mu) * rpow[k] * h0[idx]
                    s += _qk(pc, qc, k, mu) * rpow[k] * h1[idx]
            b1 = -s / _qk(pc, qc, lead, mu)
        elif slot >= 0:
            f = math.exp(j * math.log(rho) - scale * math.log(10.0)) if rho > 0 else (1.0 if j == 0 else 0.0)
            b0 = fixed_a0[slot] * f
            b1 = fixed_a1[slot] * f
        else:
            den = _pk(pc, qc, rc, lead, mu)
            s1 = 0j
            s0 = 0j
            for k in range(lead + 1, depth + 1):
                if j + lead - k < 0:
                    continue
                idx = (j + lead - k) % W
                pk = _pk(pc, qc, rc, k, mu) * rpow[k]
                s0 += pk * h0[idx]
                if has_log:
                    s1 += pk * h1[idx]
            if has_log:
                b1 = -s1 / den
                for k in range(lead + 1, depth + 1):
                    if j + lead - k < 0:
                        continue
                    idx = (j + lead - k) % W
                    s0 += _qk(pc, qc, k, mu) * rpow[k] * h1[idx]
                s0 += _qk(pc, qc, lead, mu) * b1
            b0 = -s0 / den
        h0[j % W] = b0
        h1[j % W] = b1
        mag = abs(b0) + abs(b1) * labs
        if mag > 0:
            t = math.log10(mag) + scale + re_nu * log10rho
            if t > best:
                best = t
        else:
            t = -math.inf
        if t <= threshold:
            run += 1
            if run >= D:
                return best, j - D + 1, True
        else:
            run = 0
        # keep the window inside the double range
        big = 0.0
        for i in range(W):
            a = abs(h0[i]) + abs(h1[i])
            if a > big:
                big = a
        if big > 1e100:
            for i in range(W):
                h0[i] *= 1e-100
                h1[i] *= 1e-100
            scale += 100.0
        elif 0 < big < 1e-100:
            for i in range(W):
                h0[i] *= 1e100
                h1[i] *= 1e100
            scale -= 100.0
    return best, max_terms, False


_pk = _jit(_pk)
_qk = _jit(_qk)
dry_run = _jit(_dry_run_impl)


# ---------------------------------------------------------------------------
# WKB ray integrals
# ---------------------------------------------------------------------------
#
# The integrand on tau in [0, 1] is built from a "continuous square root"
#   sq(tau) = lead_root * tau**kpow * prod_j rsqrt(tau - r_j)
# where each factor uses a branch cut pointing away from the segment [0, 1],
# so sq is analytic along the whole path.  Modes:
#   0: f = scale * sq(tau)
#   1: f = scale * num(tau) / (sq(tau) + q0)   (Langer, rationalised)
# with a direct (sq - q0)/tau fallback when the rationalised denominator is
# small.

_GK_X = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_GK_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_GK_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])


def _rsqrt(x, d):
    # sqrt with its cut along direction d (|d| = 1)
    return np.sqrt(d) * np.sqrt(x / d)


def _sq(tau, roots, dirs, lead_root, kpow):
    out = lead_root * tau**kpow
    for i in range(roots.shape[0]):
        out *= _rsqrt(tau - roots[i], dirs[i])
    return out


def _poly_eval(c, x):
    acc = 0j
    for i in range(c.shape[0] - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


def _integrand(tau, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad):
    s = _sq(tau, roots, dirs, lead_root, kpow)
    if mode == 0:
        return scale * s
    den = s + q0
    if abs(den) >= abs(q0) or tau == 0:
        return scale * _poly_eval(num, tau) / den
    return scale * (s - q0) / tau


def _gk15(a, b, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    fc = _integrand(c, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad)
    rk = fc * _GK_WK[7]
    rg = fc * _GK_WG[3]
    for i in range(7):
        dx = h * _GK_X[i]
        f1 = _integrand(c - dx, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad)
        f2 = _integrand(c + dx, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad)
        rk += _GK_WK[i] * (f1 + f2)
        if i % 2 == 1:
            rg += _GK_WG[i // 2] * (f1 + f2)
    return rk * h, abs((rk - rg) * h)


def _integrate_ray_impl(mode, roots, dirs, lead_root, kpow, scale, q0, num, rad, rtol, atol):
    """Adaptive Gauss-Kronrod (7/15) over [0, 1] with an explicit stack."""
    stack_a = np.empty(4096, dtype=np.float64)
    stack_b = np.empty(4096, dtype=np.float64)
    total, err = _gk15(0.0, 1.0, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad)
    if err <= max(atol, rtol * abs(total)):
        return total, err
    n = 0
    stack_a[0] = 0.0
    stack_b[0] = 1.0
    n = 1
    result = 0j
    errsum = 0.0
    # tolerance per unit length
    tol = max(atol, rtol * abs(total))
    while n > 0:
        n -= 1
        a = stack_a[n]
        b = stack_b[n]
        val, e = _gk15(a, b, mode, roots, dirs, lead_root, kpow, scale, q0, num, rad)
        if e <= tol * (b - a) or (b - a) < 1e-12 or n >= 4094:
            result += val
            errsum += e
        else:
            m = 0.5 * (a + b)
            stack_a[n] = a
            stack_b[n] = m
            stack_a[n + 1] = m
            stack_b[n + 1] = b
            n += 2
    return result, errsum


_rsqrt = _jit(_rsqrt)
_sq = _jit(_sq)
_poly_eval = _jit(_poly_eval)
_integrand = _jit(_integrand)
_gk15 = _jit(_gk15)
integrate_ray = _jit(_integrate_ray_impl)


def _integrate_batch_loop(mode, roots, dirs, lead_root, kpow, scale, q0, num, rad, rtol, atol):
    n = roots.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for i in range(n):
        val, _ = integrate_ray(mode, roots[i], dirs[i], lead_root[i], kpow, scale[i], q0, num[i], rad[i], rtol, atol)
        out[i] = val
    return out


integrate_batch_loop = _jit(_integrate_batch_loop)


def _gk_panels(mode, roots, dirs, lead_root, kpow, scale, q0, num, panels, xk, wk):
    """Composite 15-point Kronrod sum on ``panels`` uniform panels, one row per ray."""
    edges = np.linspace(0.0, 1.0, panels + 1)
    c = 0.5 * (edges[:-1] + edges[1:])
    h = 0.5 / panels
    t = (c[:, None] + h * xk[None, :]).ravel()[None, :]
    s = lead_root[:, None] * t**kpow
    for i in range(roots.shape[1]):
        d = dirs[:, i : i + 1]
        s = s * (np.sqrt(d) * np.sqrt((t - roots[:, i : i + 1]) / d))
    if mode == 0:
        f = s
    else:
        numv = np.zeros_like(s)
        for i in range(num.shape[1] - 1, -1, -1):
            numv = numv * t + num[:, i : i + 1]
        den = s + q0
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(np.abs(den) >= abs(q0), numv / den, (s - q0) / t)
    return scale * (f @ (np.tile(wk, panels) * h))


def integrate_rays_numpy(mode, roots, dirs, lead_root, kpow, scale, q0, num, rtol, atol, max_panels=1 << 14,
                         max_points=1 << 21):
    """Vectorised version: composite 15-point Gauss-Kronrod on uniform panels,
    doubling the panel count per ray until successive sums agree.  Converged
    rays drop out; the rest are processed in chunks of at most ``max_points``
    samples so memory stays bounded."""
    B = roots.shape[0]
    xk = np.concatenate([-_GK_X[:7], [0.0], _GK_X[:7][::-1]])
    wk = np.concatenate([_GK_WK[:7], [_GK_WK[7]], _GK_WK[:7][::-1]])
    out = np.empty(B, dtype=np.complex128)
    active = np.arange(B)
    prev = None
    panels = 4
    while active.size:
        step = max(1, max_points // (15 * panels))
        val = np.empty(active.size, dtype=np.complex128)
        for lo in range(0, active.size, step):
            k = active[lo : lo + step]
            val[lo : lo + step] = _gk_panels(mode, roots[k], dirs[k], lead_root[k], kpow, scale[k], q0, num[k],
                                             panels, xk, wk)
        if prev is None:
            done = np.zeros(active.size, dtype=bool)
        elif panels >= max_panels:
            done = np.ones(active.size, dtype=bool)
        else:
            done = np.abs(val - prev) <= np.maximum(atol, rtol * np.abs(val))
        out[active[done]] = val[done]
        active, prev = active[~done], val[~done]
        panels *= 2
    return out
