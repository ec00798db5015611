"""Leading-order and Langer-corrected WKB amplitudes, and the growth profile S(u).

Everything here runs in double precision.  Integrals are taken along the
straight ray from 0 to ``z``, parametrised as ``t = tau z`` with ``tau`` in
``[0, 1]``; the square root of ``Q^2`` is continued along the ray from the
principal branch at its first sample.

Ordinary-point form (``nu_+ = 1``, ``nu_- = 0``, ``v_0 = 0``)::

    Q^2(z) = sum_{n>=1} v_n z^(n-1)
    psi(z) ~ sqrt(Q0/Q(z)) exp(+-(1/s) int_0^z Q dt)

Langer form (any regular singular point)::

    Q^2(z) = s^2 (nu_+ - nu_-)^2 / 4 + sum_{n>=0} v_n z^(n+1)
    psi_+-(z) ~ z^(nu_+-) sqrt(Q0/Q(z)) exp(+-(1/s) int_0^z [Q(t) - Q0] dt/t)

with ``Q0 = Q(0)``.  When ``Q0 = 0`` the constant normalisation ``sqrt(Q0)``
is dropped.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .numerics import exact
from .ode import CanonicalProblem

__all__ = [
    "PathObstruction",
    "WkbProfile",
    "is_ordinary_form",
    "q_squared",
    "q_squared_coeffs",
    "wkb_log_psi",
    "s_profile",
    "write_profile_csv",
]

RTOL = 1e-9
ATOL = 1e-13
OBSTRUCTION_DISTANCE = 1e-6
PHASE_XTOL = 1e-6
PERTURB_RETRIES = 8
PERTURB_STEP = 1e-5
MIN_PHASES = 64


class PathObstruction(ArithmeticError):
    """A zero of ``Q^2`` lies on (or within 1e-6 |z| of) the integration ray."""


# ---------------------------------------------------------------------------
# Q^2 and its factorisation
# ---------------------------------------------------------------------------


def is_ordinary_form(cp: CanonicalProblem) -> bool:
    return cp.nu_plus == 1 and cp.nu_minus == 0 and cp.v[0] == 0


def _use_langer(cp: CanonicalProblem, langer: bool | None) -> bool:
    if langer is None:
        return not is_ordinary_form(cp)
    if not langer and not is_ordinary_form(cp):
        raise ValueError("plain WKB needs the ordinary-point form nu_+ = 1, nu_- = 0, v_0 = 0")
    return bool(langer)


def q_squared_coeffs(cp: CanonicalProblem, langer: bool | None = None) -> tuple:
    """Ascending coefficients of ``Q^2`` as a polynomial in ``z``."""
    if not _use_langer(cp, langer):
        return tuple(cp.v[1:]) or (Fraction(0),)
    s = exact(cp.s)
    dnu = exact(cp.nu_plus) - exact(cp.nu_minus)
    return (s * s * dnu * dnu / 4,) + tuple(cp.v)


def q_squared(cp: CanonicalProblem, z, langer: bool | None = None) -> complex:
    acc = 0j
    for c in reversed(q_squared_coeffs(cp, langer)):
        acc = acc * complex(z) + complex(c)
    return acc


def _trim(a: list) -> list:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _deriv(a: list) -> list:
    return _trim([k * a[k] for k in range(1, len(a))] or [Fraction(0)])


def _divmod(a: list, b: list) -> tuple[list, list]:
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and any(a):
        k = len(a) - len(b)
        f = a[-1] / b[-1]
        q[k] = f
        for i, bi in enumerate(b):
            a[i + k] -= f * bi
        a.pop()
        _trim(a)
        if len(a) < len(b):
            break
    return _trim(q), _trim(a or [Fraction(0)])


def _gcd(a: list, b: list) -> list:
    while any(b):
        _, r = _divmod(a, b)
        a, b = b, r
    return [c / a[-1] for c in a]


def _squarefree(f: list) -> list[tuple[list, int]]:
    """Yun's algorithm over the rationals: ``f = c prod g_i^i``."""
    fp = _deriv(f)
    c = _gcd(f, fp)
    w, _ = _divmod(f, c)
    y, _ = _divmod(fp, c)
    z = _trim([yi - di for yi, di in zip(y + [0] * len(w), _deriv(w) + [0] * len(y))])
    out = []
    i = 1
    while len(w) > 1:
        g = _gcd(w, z)
        if len(g) > 1:
            out.append((g, i))
        w, _ = _divmod(w, g)
        y, _ = _divmod(z, g)
        z = _trim([yi - di for yi, di in zip(y + [0] * len(w), _deriv(w) + [0] * len(y))])
        i += 1
    return out


@dataclass(frozen=True)
class _Factored:
    coeffs: np.ndarray  # ascending, complex
    lead: complex
    m0: int  # multiplicity of the root at t = 0
    roots: np.ndarray  # nonzero roots, repeated by multiplicity

    @property
    def degree(self) -> int:
        return self.m0 + self.roots.size


@lru_cache(maxsize=64)
def _factor(coeffs: tuple) -> _Factored:
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    if len(c) == 1 and c[0] == 0:
        raise ValueError("Q^2 vanishes identically")
    m0 = 0
    while c[m0] == 0:
        m0 += 1
    core = c[m0:]
    roots: list[complex] = []
    if len(core) > 1:
        if all(isinstance(x, Fraction) for x in core):
            for g, mult in _squarefree([Fraction(x) for x in core]):
                r = np.roots([float(x) for x in reversed(g)]) if len(g) > 1 else []
                for rr in r:
                    roots.extend([complex(rr)] * mult)
        else:
            roots = [complex(r) for r in np.roots([complex(x) for x in reversed(core)])]
    return _Factored(np.array([complex(x) for x in c]), complex(c[-1]), m0, np.array(roots, dtype=np.complex128))


# ---------------------------------------------------------------------------
# ray geometry and integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Rays:
    z: np.ndarray
    roots: np.ndarray  # (B, n) in the tau plane
    dirs: np.ndarray
    lead_root: np.ndarray
    scale: np.ndarray
    num: np.ndarray  # (B, deg) Langer numerator coefficients
    obstructed: np.ndarray  # (B,) bool


def _sq_np(tau, rays: _Rays, kpow: float) -> np.ndarray:
    out = rays.lead_root * tau**kpow
    for i in range(rays.roots.shape[1]):
        d = rays.dirs[:, i]
        out = out * (np.sqrt(d) * np.sqrt((tau - rays.roots[:, i]) / d))
    return out


def _geometry(fac: _Factored, z: np.ndarray, langer: bool, s: float) -> _Rays:
    B = z.size
    rho = fac.roots[None, :] / z[:, None]
    proj = np.clip(rho.real, 0.0, 1.0)
    away = rho - proj
    dist = np.abs(away)
    obstructed = np.any(dist < OBSTRUCTION_DISTANCE, axis=1) if rho.shape[1] else np.zeros(B, dtype=bool)
    safe = np.where(dist > 0, dist, 1.0)
    dirs = np.where(dist > 0, -away / safe, -1.0 + 0j)
    lead_root = np.sqrt(fac.lead * z ** fac.degree)
    kpow = fac.m0 / 2
    if fac.m0 == 0:
        tref = np.zeros(B)
    else:
        near = np.min(np.abs(rho), axis=1) if rho.shape[1] else np.ones(B)
        tref = np.minimum(1e-3, 0.5 * near)
    draft = _Rays(z, rho, dirs, lead_root, None, None, obstructed)
    got = _sq_np(tref, draft, kpow)
    tz = tref * z
    q2 = np.zeros(B, dtype=np.complex128)
    for c in fac.coeffs[::-1]:
        q2 = q2 * tz + c
    want = np.sqrt(q2)
    lead_root = np.where(np.abs(got - want) > np.abs(got + want), -lead_root, lead_root)
    if langer:
        scale = np.full(B, 1.0 / s, dtype=np.complex128)
        k = np.arange(1, fac.coeffs.size)
        num = fac.coeffs[None, 1:] * z[:, None] ** k[None, :] if k.size else np.zeros((B, 1), np.complex128)
    else:
        scale = (z / s).astype(np.complex128)
        num = np.zeros((B, 1), dtype=np.complex128)
    return _Rays(z, np.ascontiguousarray(rho), np.ascontiguousarray(dirs), lead_root.astype(np.complex128),
                 scale, np.ascontiguousarray(num), obstructed)


def _integrate(rays: _Rays, langer: bool, kpow: float, q0: complex, rtol: float) -> np.ndarray:
    mode = 1 if langer else 0
    if _kernels.USE_NUMBA:
        return _kernels.integrate_batch_loop(mode, rays.roots, rays.dirs, rays.lead_root, float(kpow), rays.scale,
                                             complex(q0), rays.num, np.zeros(rays.z.size), rtol, ATOL)
    return _kernels.integrate_rays_numpy(mode, rays.roots, rays.dirs, rays.lead_root, float(kpow), rays.scale,
                                         complex(q0), rays.num, rtol, ATOL)


def _log_psi_batch(cp: CanonicalProblem, z: np.ndarray, langer: bool, terms: str, rtol: float):
    """``(logmod, phase, obstructed)`` arrays of shape ``(B, 2)`` for branches (+, -)."""
    coeffs = q_squared_coeffs(cp, langer)
    fac = _factor(coeffs)
    z = np.asarray(z, dtype=np.complex128).ravel()
    rays = _geometry(fac, z, langer, float(cp.s))
    q0 = complex(np.sqrt(complex(coeffs[0]))) if fac.m0 == 0 else 0j
    kpow = fac.m0 / 2
    integral = np.full(z.size, np.nan + 0j)
    ok = ~rays.obstructed
    if np.any(ok):
        sub = _Rays(*(getattr(rays, f)[ok] for f in ("z", "roots", "dirs", "lead_root", "scale", "num", "obstructed")))
        integral[ok] = _integrate(sub, langer, kpow, q0, rtol)
    signs = np.array([1.0, -1.0])
    logmod = signs[None, :] * integral.real[:, None]
    phase = signs[None, :] * integral.imag[:, None]
    if terms == "full":
        qz = _sq_np(np.ones(z.size), rays, kpow)
        amp = -0.5 * np.log(np.abs(qz)) + (0.5 * math.log(abs(q0)) if q0 != 0 else 0.0)
        amp_ph = -0.5 * np.angle(qz) + (0.5 * np.angle(q0) if q0 != 0 else 0.0)
        logmod = logmod + amp[:, None]
        phase = phase + amp_ph[:, None]
        if langer:
            logz = np.log(z)
            nus = np.array([float(cp.nu_plus), float(cp.nu_minus)])
            logmod = logmod + nus[None, :] * logz.real[:, None]
            phase = phase + nus[None, :] * logz.imag[:, None]
    elif terms != "exponent":
        raise ValueError("terms must be 'full' or 'exponent'")
    return logmod, phase, rays.obstructed


def wkb_log_psi(cp: CanonicalProblem, z, branch: int = +1, *, langer: bool | None = None, terms: str = "full",
                rtol: float = RTOL) -> tuple[float, float]:
    """``(log|psi|, arg psi)`` of the WKB solution on ``branch`` (+1 or -1).

    ``terms='exponent'`` keeps only ``+-Re (1/s) int``, the leading growth.
    """
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    langer = _use_langer(cp, langer)
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    logmod, phase, obstructed = _log_psi_batch(cp, np.array([z]), langer, terms, rtol)
    if obstructed[0]:
        raise PathObstruction(f"a turning point lies on the ray from 0 to {z}")
    col = 0 if branch == 1 else 1
    return float(logmod[0, col]), float(phase[0, col])


# ---------------------------------------------------------------------------
# phase-maximised profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WkbProfile:
    """``S(u) = max over phase and branch of log|psi|`` at ``|x| = e^u``.

    ``x = z^var_power`` is the profile variable; ``phi_star`` is the
    maximising phase of ``x`` in ``[0, 2pi)`` and ``branch`` is +1 or -1.
    """

    u: np.ndarray
    S: np.ndarray
    phi_star: np.ndarray
    branch: np.ndarray
    var_power: int = 1
    terms: str = "full"

    def __post_init__(self):
        if not np.all(np.isfinite(self.S)):
            raise ValueError("profile has non-finite entries")


def _perturbed_values(cp, r: float, theta: np.ndarray, langer: bool, terms: str, rtol: float) -> np.ndarray:
    """Branch log-moduli at ``r e^(i theta)``, nudging obstructed rays off the turning points."""
    theta = np.array(theta, dtype=float)
    vals, _, bad = _log_psi_batch(cp, r * np.exp(1j * theta), langer, terms, rtol)
    for attempt in range(PERTURB_RETRIES):
        if not np.any(bad):
            return vals
        step = PERTURB_STEP * 4**attempt * (1 if attempt % 2 == 0 else -1)
        idx = np.nonzero(bad)[0]
        v2, _, b2 = _log_psi_batch(cp, r * np.exp(1j * (theta[idx] + step)), langer, terms, rtol)
        vals[idx] = v2
        bad[idx] = b2
    if np.any(bad):
        raise PathObstruction(f"ray at phase {theta[np.nonzero(bad)[0][0]]:.6g} stays obstructed")
    return vals


def _profile_point(cp: CanonicalProblem, u: float, n_phi: int, langer: bool, terms: str, var_power: int,
                   rtol: float) -> tuple[float, float, int]:
    r = math.exp(u / var_power)
    thetas = 2 * math.pi * np.arange(n_phi) / n_phi
    vals = _perturbed_values(cp, r, thetas, langer, terms, rtol)
    k, col = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[k, col])
    t0 = float(thetas[k])
    half = 2 * math.pi / n_phi

    def neg(t):
        return -float(_perturbed_values(cp, r, [t], langer, terms, rtol)[0, col])

    res = minimize_scalar(neg, bounds=(t0 - half, t0 + half), method="bounded", options={"xatol": PHASE_XTOL})
    if -res.fun > best:
        best, t0 = -float(res.fun), float(res.x)
    phi = (var_power * t0) % (2 * math.pi)
    return best, phi, 1 if col == 0 else -1


def _profile_chunk(args):
    cp, us, n_phi, langer, terms, var_power, rtol = args
    return [_profile_point(cp, float(u), n_phi, langer, terms, var_power, rtol) for u in us]


def s_profile(cp: CanonicalProblem, u, n_phi: int = MIN_PHASES, *, langer: bool | None = None, terms: str = "full",
              var_power: int = 1, rtol: float = RTOL, jobs: int = 1) -> WkbProfile:
    """Maximise ``log|psi|`` over phase and branch at each ``u``.

    The phase of ``z`` is scanned on ``n_phi`` equispaced points, then the best
    sample is refined by a bounded Brent search (golden section with parabolic
    steps) to ``1e-6``.  Rays that hit a turning point are rotated by
    ``1e-5 * 4^k`` radians with alternating sign, up to 8 times.
    """
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size < 1:
        raise ValueError("u must be a 1-D grid")
    if u.size > 2:
        du = np.diff(u)
        if np.any(np.abs(du - du.mean()) > 1e-9 * abs(du.mean())):
            raise ValueError("u grid must be uniform")
    if n_phi < MIN_PHASES:
        raise ValueError(f"n_phi must be at least {MIN_PHASES}")
    if var_power < 1:
        raise ValueError("var_power must be a positive integer")
    langer = _use_langer(cp, langer)
    if jobs > 1 and u.size > 1:
        chunks = np.array_split(u, min(jobs, u.size))
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = [row for part in ex.map(_profile_chunk, [(cp, c, n_phi, langer, terms, var_power, rtol)
                                                            for c in chunks]) for row in part]
    else:
        rows = _profile_chunk((cp, u, n_phi, langer, terms, var_power, rtol))
    S, phi, br = (np.array(col) for col in zip(*rows))
    return WkbProfile(u, S.astype(float), phi.astype(float), br.astype(int), var_power, terms)


def write_profile_csv(stream, profile: WkbProfile, digits: int = 12) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["u", "S", "phi_star", "branch"])
    for u, S, phi, b in zip(profile.u, profile.S, profile.phi_star, profile.branch):
        w.writerow([f"{u:.{digits}g}", f"{S:.{digits}g}", f"{phi:.{digits}g}", "+" if b > 0 else "-"])
