"""Exact representation of ``p(z) psi'' + q(z) psi' + r(z) psi = 0``.

Everything in this module runs in exact (complex) rational arithmetic: point
classification, indicial roots and the index shift decide which recursion the
series engine uses, and a rounding slip there would select the wrong one.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .numerics import Exact, QComplex, context, exact, is_real, to_mp

__all__ = [
    "MAX_DEGREE",
    "Poly",
    "ODEProblem",
    "CanonicalProblem",
    "PointClass",
    "IndexCase",
    "IndicialData",
    "IrrationalRoot",
    "UnsupportedClassification",
    "InvalidShift",
    "UndecidableIndexDifference",
    "classify_origin",
    "reduce_origin",
    "indicial_roots",
    "shift_index",
    "from_canonical",
    "to_canonical",
    "recenter",
    "singular_radius",
    "singular_points",
    "problem_from_dict",
    "problem_to_dict",
    "load_problem",
    "anharmonic_canonical",
    "anharmonic_y_canonical",
]

MAX_DEGREE = 64
CLASSIFICATION_BITS = 256


class UnsupportedClassification(ValueError):
    """Raised when an operation needs a different kind of expansion point."""


class InvalidShift(ValueError):
    pass


class UndecidableIndexDifference(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Poly:
    """Polynomial with exact coefficients, ``coeffs[k]`` multiplies ``z**k``."""

    coeffs: tuple = ()

    def __post_init__(self):
        cs = [exact(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if len(cs) - 1 > MAX_DEGREE:
            raise ValueError(f"polynomial degree {len(cs) - 1} exceeds cap {MAX_DEGREE}")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def of(cls, *coeffs) -> "Poly":
        return cls(tuple(coeffs))

    def __getitem__(self, k: int) -> Exact:
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return Fraction(0)

    def __len__(self):
        return len(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_real(self) -> bool:
        return all(is_real(c) for c in self.coeffs)

    def __call__(self, z):
        if isinstance(z, (Fraction, QComplex, int)):
            conv = exact
        elif isinstance(z, (float, complex)):
            conv = complex
        else:
            ctx = z.context
            conv = lambda c: to_mp(c, ctx)  # noqa: E731
        acc = conv(0)
        for c in reversed(self.coeffs):
            acc = acc * z + conv(c)
        return acc

    def __add__(self, other: "Poly") -> "Poly":
        n = max(len(self), len(other))
        return Poly(tuple(self[k] + other[k] for k in range(n)))

    def scale(self, c) -> "Poly":
        c = exact(c)
        return Poly(tuple(c * a for a in self.coeffs))

    def mul_z(self, k: int = 1) -> "Poly":
        if self.is_zero():
            return self
        return Poly((Fraction(0),) * k + self.coeffs)

    def div_z(self, k: int = 1) -> "Poly":
        """Exact division by ``z**k``; raises if a low coefficient is nonzero."""
        if any(self[j] != 0 for j in range(k)):
            raise InvalidShift(f"polynomial not divisible by z^{k}: {self.coeffs}")
        return Poly(self.coeffs[k:])

    def taylor_shift(self, a) -> "Poly":
        """Coefficients of ``self(w + a)`` in powers of ``w``."""
        a = exact(a)
        out = list(self.coeffs)
        n = len(out)
        # repeated synthetic division
        for i in range(n):
            for j in range(n - 2, i - 1, -1):
                out[j] = out[j] + a * out[j + 1]
        return Poly(tuple(out))

    def to_complex(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=np.complex128)

    def __str__(self):
        if self.is_zero():
            return "0"
        return " + ".join(f"({c})z^{k}" for k, c in enumerate(self.coeffs) if c != 0)


def _poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, (list, tuple)):
        return Poly(tuple(x))
    return Poly((x,))


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ODEProblem:
    """``p psi'' + q psi' + r psi = 0`` written in the local coordinate
    ``w = z - center``."""

    p: Poly
    q: Poly = field(default_factory=Poly)
    r: Poly = field(default_factory=Poly)
    center: Exact = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "p", _poly(self.p))
        object.__setattr__(self, "q", _poly(self.q))
        object.__setattr__(self, "r", _poly(self.r))
        object.__setattr__(self, "center", exact(self.center))
        if self.p.is_zero():
            raise ValueError("leading coefficient p must not vanish identically")

    def scale(self, c) -> "ODEProblem":
        return replace(self, p=self.p.scale(c), q=self.q.scale(c), r=self.r.scale(c))

    def mul_z(self, k: int = 1) -> "ODEProblem":
        return replace(self, p=self.p.mul_z(k), q=self.q.mul_z(k), r=self.r.mul_z(k))

    def div_z(self, k: int = 1) -> "ODEProblem":
        return replace(self, p=self.p.div_z(k), q=self.q.div_z(k), r=self.r.div_z(k))

    def is_real(self) -> bool:
        return self.p.is_real() and self.q.is_real() and self.r.is_real()

    @property
    def depth(self) -> int:
        """``max(deg p, deg q + 1, deg r + 2)``: the reach of the recursion."""
        return max(self.p.degree, self.q.degree + 1 if len(self.q) else 0, self.r.degree + 2 if len(self.r) else 0)


@dataclass(frozen=True)
class CanonicalProblem:
    """``-(psi'' + (1-nu_+-nu_-)/z psi' + nu_+ nu_-/z^2 psi) + (1/z) sum v_n z^n psi = 0``.

    ``s`` is the WKB scale parameter; it only enters the WKB formulas.
    """

    nu_plus: Fraction | float
    nu_minus: Fraction | float
    v: tuple = ()
    s: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(exact(x) for x in self.v) or (Fraction(0),))
        for name in ("nu_plus", "nu_minus"):
            val = getattr(self, name)
            if not isinstance(val, float):
                object.__setattr__(self, name, exact(val))
        if not self.s > 0:
            raise ValueError("scale s must be positive")

    @property
    def N(self) -> int:
        return len(self.v) - 1


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------


class PointClass(enum.Enum):
    ORDINARY = "Ordinary"
    REGULAR_SINGULAR_A = "RegularSingularA"
    REGULAR_SINGULAR_B = "RegularSingularB"
    IRREGULAR = "Irregular"

    def __str__(self):
        return self.value


class IndexCase(enum.Enum):
    NON_INTEGER_DIFF = "NonIntegerDiff"
    DEGENERATE = "Degenerate"
    INTEGER_DIFF = "IntegerDiff"

    def __str__(self):
        return self.value


def reduce_origin(prob: ODEProblem) -> tuple[PointClass, ODEProblem]:
    """Classify ``w = 0`` and return the problem in the form used downstream.

    A common factor of ``w`` in p, q and r is divided out only when the
    problem fits none of the classes as given, so ``w^2 psi'' + w psi' + ...``
    stays a case-B problem.
    """
    while True:
        p, q, r = prob.p, prob.q, prob.r
        if p[0] != 0:
            return PointClass.ORDINARY, prob
        if p[1] != 0 and (q[0] != 0 or r[0] != 0):
            return PointClass.REGULAR_SINGULAR_A, prob
        if p[1] == 0 and q[0] == 0 and p[2] != 0:
            return PointClass.REGULAR_SINGULAR_B, prob
        if q[0] == 0 and r[0] == 0:
            prob = prob.div_z()
            continue
        return PointClass.IRREGULAR, prob


def classify_origin(prob: ODEProblem) -> PointClass:
    return reduce_origin(prob)[0]


# ---------------------------------------------------------------------------
# indicial equation
# ---------------------------------------------------------------------------


def _isqrt_exact(n: int) -> int | None:
    if n < 0:
        return None
    s = math.isqrt(n)
    return s if s * s == n else None


def _sqrt_fraction(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    a, b = _isqrt_exact(x.numerator), _isqrt_exact(x.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def sqrt_exact(d: Exact) -> Exact | None:
    """Exact square root in Q(i), or ``None`` when it is irrational."""
    if isinstance(d, Fraction):
        if d >= 0:
            return _sqrt_fraction(d)
        s = _sqrt_fraction(-d)
        return None if s is None else QComplex(0, s)
    a, b = d.re, d.im
    mod = _sqrt_fraction(a * a + b * b)
    if mod is None:
        return None
    x = _sqrt_fraction((a + mod) / 2)
    y = _sqrt_fraction((mod - a) / 2)
    if x is None or y is None:
        return None
    if b < 0:
        y = -y
    return exact(QComplex(x, y))


@dataclass(frozen=True)
class IrrationalRoot:
    """Root ``(-b + sign*sqrt(b^2-4ac)) / 2a`` kept symbolic so it can be
    evaluated at any working precision."""

    a: Exact
    b: Exact
    c: Exact
    sign: int

    def at(self, ctx):
        a, b, c = (to_mp(x, ctx) for x in (self.a, self.b, self.c))
        root = ctx.sqrt(ctx.mpc(b * b - 4 * a * c))
        val = (-b + self.sign * root) / (2 * a)
        return val.real if val.imag == 0 else val

    def __complex__(self):
        return complex(self.at(context(CLASSIFICATION_BITS)))


def _sort_key(v) -> tuple[float, float]:
    c = complex(v)
    return (c.real, c.imag)


@dataclass(frozen=True)
class IndicialData:
    """Classification of ``w = 0`` with the indicial roots (Re nu1 <= Re nu2)."""

    point_class: PointClass
    nu1: Exact | IrrationalRoot
    nu2: Exact | IrrationalRoot
    case: IndexCase
    ell: int = 0
    reduced: ODEProblem | None = None

    @property
    def exact(self) -> bool:
        return not isinstance(self.nu1, IrrationalRoot)

    def describe(self) -> str:
        case = f"IntegerDiff({self.ell})" if self.case is IndexCase.INTEGER_DIFF else str(self.case)
        return f"{self.point_class}, {case}, nu1={_fmt(self.nu1)}, nu2={_fmt(self.nu2)}"


def _fmt(v) -> str:
    if isinstance(v, IrrationalRoot):
        c = complex(v)
        return f"{c.real:.17g}" if c.imag == 0 else f"{c.real:.17g},{c.imag:.17g}"
    return str(v)


def indicial_roots(prob: ODEProblem) -> IndicialData:
    """Indicial roots at ``w = 0`` and the resulting recursion case.

    Case A:  ``nu [(nu - 1) p1 + q0] = 0``;  case B:  ``nu(nu-1) p2 + nu q1 + r0 = 0``.
    """
    cls, red = reduce_origin(prob)
    if cls is PointClass.REGULAR_SINGULAR_A:
        a, b, c = red.p[1], red.q[0] - red.p[1], Fraction(0)
    elif cls is PointClass.REGULAR_SINGULAR_B:
        a, b, c = red.p[2], red.q[1] - red.p[2], red.r[0]
    else:
        raise UnsupportedClassification(f"indicial roots need a regular singular point, got {cls}")

    disc = b * b - 4 * a * c
    root = sqrt_exact(disc)
    if root is None:
        r1, r2 = IrrationalRoot(a, b, c, -1), IrrationalRoot(a, b, c, +1)
        if _sort_key(r2) < _sort_key(r1):
            r1, r2 = r2, r1
        # an integer difference would need disc = (ell*a)^2, a perfect square
        return IndicialData(cls, r1, r2, IndexCase.NON_INTEGER_DIFF, reduced=red)

    r1 = exact((-b - root) / (2 * a))
    r2 = exact((-b + root) / (2 * a))
    if _exact_key(r2) < _exact_key(r1):
        r1, r2 = r2, r1
    diff = exact(r2 - r1)
    if diff == 0:
        return IndicialData(cls, r1, r2, IndexCase.DEGENERATE, reduced=red)
    if isinstance(diff, Fraction) and diff.denominator == 1 and diff > 0:
        return IndicialData(cls, r1, r2, IndexCase.INTEGER_DIFF, ell=int(diff), reduced=red)
    return IndicialData(cls, r1, r2, IndexCase.NON_INTEGER_DIFF, reduced=red)


def _exact_key(v: Exact) -> tuple[Fraction, Fraction]:
    if isinstance(v, QComplex):
        return (v.re, v.im)
    return (Fraction(v), Fraction(0))


def shift_index(prob: ODEProblem, nu) -> ODEProblem:
    """Problem satisfied by ``psi~`` where ``psi = z**nu * psi~``.

    A case-A problem is first multiplied by ``z`` so that ``p0 = p1 = q0 = 0``.
    Raises :class:`InvalidShift` unless ``nu`` is an indicial root.
    """
    if isinstance(nu, IrrationalRoot):
        raise InvalidShift("cannot shift exactly by an irrational index")
    nu = exact(nu)
    work = prob
    if work.p[0] == 0 and work.p[1] != 0:
        work = work.mul_z()
    if not (work.p[0] == 0 and work.p[1] == 0 and work.q[0] == 0):
        raise InvalidShift("index shift needs p0 = p1 = q0 = 0 (after normalisation)")
    p, q, r = work.p, work.q, work.r
    pt = p.div_z(1)
    qt = p.scale(2 * nu).div_z(2) + q.div_z(1)
    rsum = p.scale(nu * (nu - 1)) + q.scale(nu).mul_z(1) + r.mul_z(2)
    try:
        rt = rsum.div_z(3)
    except InvalidShift as exc:
        raise InvalidShift(f"nu={nu} does not satisfy the indicial equation") from exc
    return ODEProblem(pt, qt, rt, prob.center)


# ---------------------------------------------------------------------------
# canonical form
# ---------------------------------------------------------------------------


def from_canonical(cp: CanonicalProblem) -> ODEProblem:
    """Multiply the canonical equation by ``-z^2``:
    ``p = z^2``, ``q = (1-nu_+-nu_-) z``, ``r = nu_+ nu_- - sum v_n z^(n+1)``."""
    nup, num = exact(cp.nu_plus), exact(cp.nu_minus)
    p = Poly.of(0, 0, 1)
    q = Poly.of(0, 1 - nup - num)
    r = Poly((nup * num,) + tuple(-vn for vn in cp.v))
    return ODEProblem(p, q, r)


def to_canonical(prob: ODEProblem, s: float = 1.0) -> CanonicalProblem:
    """Inverse of :func:`from_canonical` for problems of the form
    ``c z^d psi'' + b z^(d-1) psi' + r psi`` with ``d <= 2``."""
    p = prob.p
    nz = [k for k, c in enumerate(p.coeffs) if c != 0]
    if len(nz) != 1 or nz[0] > 2:
        raise UnsupportedClassification("canonical form needs p = c*z^d with d <= 2")
    d = nz[0]
    c = p[d]
    lift = 2 - d
    q = prob.q.mul_z(lift).scale(1 / c)
    r = prob.r.mul_z(lift).scale(1 / c)
    if any(q[k] != 0 for k in range(len(q)) if k != 1):
        raise UnsupportedClassification("canonical form needs q proportional to z^(d-1)")
    ssum = exact(1 - q[1])  # nu_+ + nu_-
    prod = r[0]  # nu_+ nu_-
    if not (is_real(ssum) and is_real(prod)):
        raise UnsupportedClassification("canonical form needs real indices")
    disc = ssum * ssum - 4 * prod
    root = sqrt_exact(disc)
    if root is not None and isinstance(root, Fraction):
        nup, num = (ssum + root) / 2, (ssum - root) / 2
    elif disc >= 0:
        sq = math.sqrt(float(disc))
        nup, num = (float(ssum) + sq) / 2, (float(ssum) - sq) / 2
    else:
        raise UnsupportedClassification("canonical form needs real indices")
    v = tuple(-r[n + 1] for n in range(max(len(r) - 1, 1)))
    return CanonicalProblem(nup, num, v, s)


def anharmonic_canonical(c2, sign: int = +1) -> CanonicalProblem:
    """``-Psi''(y) + (y^2 + sign*c2)^2 Psi = 0`` written in ``x = y^2``.

    ``sign=+1`` is the anharmonic oscillator, ``sign=-1`` the double well.
    In ``x`` the indices are ``{0, 1/2}`` and ``v = (c2^2/4, sign*c2/2, 1/4)``.
    """
    c2 = exact(c2)
    return CanonicalProblem(Fraction(1, 2), Fraction(0), (c2 * c2 / 4, sign * c2 / 2, Fraction(1, 4)))


def anharmonic_y_canonical(c2, sign: int = +1) -> CanonicalProblem:
    """The same oscillator kept in ``y``: ``-Psi'' + (y^2 + sign*c2)^2 Psi = 0``.

    ``y = 0`` is an ordinary point (indices ``{0, 1}``) and
    ``v = (0, c2^2, 0, 2 sign c2, 0, 1)``, so ``Q^2 = (y^2 + sign*c2)^2``.
    """
    c2 = exact(c2)
    return CanonicalProblem(Fraction(1), Fraction(0), (0, c2 * c2, 0, 2 * sign * c2, 0, 1))


# ---------------------------------------------------------------------------
# re-centering and convergence radius
# ---------------------------------------------------------------------------


def recenter(prob: ODEProblem, z1) -> ODEProblem:
    """Re-expand around ``center + z1`` (``z1`` in the current local coordinate)."""
    z1 = exact(z1)
    if z1 == 0:
        return prob
    return ODEProblem(
        prob.p.taylor_shift(z1),
        prob.q.taylor_shift(z1),
        prob.r.taylor_shift(z1),
        exact(prob.center + z1),
    )


def singular_points(prob: ODEProblem) -> np.ndarray:
    """Zeros of ``p`` in the local coordinate, excluding the exact root at 0."""
    cs = list(prob.p.coeffs)
    while cs and cs[0] == 0:
        cs.pop(0)
    if len(cs) <= 1:
        return np.zeros(0, dtype=np.complex128)
    arr = np.array([complex(c) for c in reversed(cs)], dtype=np.complex128)
    return np.roots(arr)


def singular_radius(prob: ODEProblem) -> float:
    """Distance from the local origin to the nearest other singular point."""
    pts = singular_points(prob)
    if pts.size == 0:
        return math.inf
    return float(np.min(np.abs(pts)))


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------


def _coeff_list(values: Iterable) -> tuple:
    out = []
    for v in values:
        if isinstance(v, (int, str)):
            out.append(exact(v))
        elif isinstance(v, list) and len(v) == 2:
            out.append(exact((exact(str(v[0])), exact(str(v[1])))))
        else:
            raise ValueError(f"coefficient must be an exact rational string, got {v!r}")
    return tuple(out)


def problem_from_dict(data: dict) -> ODEProblem | CanonicalProblem:
    """Parse the JSON problem schema.

    ``{"p": ["c0", "c1", ...], "q": [...], "r": [...]}`` with exact rational
    strings ``"num/den"`` (optionally ``"center"``), or
    ``{"canonical": {"nu_plus": ..., "nu_minus": ..., "v": [...], "s": ...}}``.
    """
    has_pqr = "p" in data
    has_can = "canonical" in data
    if has_pqr == has_can:
        raise ValueError("problem must contain exactly one of p/q/r or canonical")
    if has_can:
        c = data["canonical"]
        try:
            return CanonicalProblem(
                exact(str(c["nu_plus"])),
                exact(str(c["nu_minus"])),
                _coeff_list(c.get("v", ["0"])),
                float(c.get("s", 1.0)),
            )
        except KeyError as exc:
            raise ValueError(f"canonical problem missing {exc}") from exc
    return ODEProblem(
        Poly(_coeff_list(data["p"])),
        Poly(_coeff_list(data.get("q", []))),
        Poly(_coeff_list(data.get("r", []))),
        exact(str(data.get("center", "0"))),
    )


def _exact_str(x: Exact):
    if isinstance(x, QComplex):
        return [str(x.re), str(x.im)]
    return str(x)


def problem_to_dict(prob: ODEProblem | CanonicalProblem) -> dict:
    if isinstance(prob, CanonicalProblem):
        return {
            "canonical": {
                "nu_plus": str(prob.nu_plus),
                "nu_minus": str(prob.nu_minus),
                "v": [_exact_str(x) for x in prob.v],
                "s": prob.s,
            }
        }
    out = {
        "p": [_exact_str(c) for c in prob.p.coeffs],
        "q": [_exact_str(c) for c in prob.q.coeffs],
        "r": [_exact_str(c) for c in prob.r.coeffs],
    }
    if prob.center != 0:
        out["center"] = str(prob.center)
    return out


def load_problem(path) -> tuple[ODEProblem | CanonicalProblem, dict]:
    with open(path) as fh:
        data = json.load(fh)
    return problem_from_dict(data), data


def as_ode(prob: ODEProblem | CanonicalProblem) -> ODEProblem:
    return from_canonical(prob) if isinstance(prob, CanonicalProblem) else prob


def poly_from_values(values: Sequence) -> Poly:
    return Poly(tuple(values))
