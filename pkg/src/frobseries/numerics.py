"""Scalar arithmetic used throughout the package.

Two number systems live here:

* exact rationals (:class:`fractions.Fraction`) and exact complex rationals
  (:class:`QComplex`), used for problem coefficients, classification and the
  residual oracles;
* arbitrary-precision binary floats backed by :mod:`mpmath`.  Every precision
  gets its own :class:`mpmath.MPContext`, so values carry their precision with
  them (``x.context.prec``) and nothing depends on the global ``mpmath.mp``.

:func:`plan_precision` turns a target number of decimal digits plus a predicted
peak term size into a working precision with guard digits.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Union

import mpmath
from mpmath.libmp import from_rational, round_nearest

__all__ = [
    "QComplex",
    "Exact",
    "exact",
    "parse_exact",
    "is_real",
    "PrecisionPolicy",
    "plan_precision",
    "GUARD_MARGIN",
    "context",
    "arb_real",
    "arb_complex",
    "to_mp",
    "parse_decimal",
    "format_decimal",
    "log10_abs",
    "PrecisionError",
    "MPF",
    "MPC",
]

#: extra decimal digits carried beyond the predicted peak-term overshoot
GUARD_MARGIN = 10

LOG2_10 = math.log2(10.0)

# base classes shared by the mpf/mpc types of every context
MPF = mpmath.ctx_mp_python._mpf
MPC = mpmath.ctx_mp_python._mpc

_DECIMAL_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class PrecisionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact complex rationals
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QComplex:
    """Complex number with exact rational parts.

    Arithmetic with ints/Fractions is supported on both sides.  Results whose
    imaginary part vanishes collapse back to a plain ``Fraction`` so that the
    common real case stays on the fast path.
    """

    re: Fraction
    im: Fraction

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @staticmethod
    def _parts(x):
        if isinstance(x, QComplex):
            return x.re, x.im
        if isinstance(x, (int, Fraction, Rational)):
            return Fraction(x), Fraction(0)
        return None

    def __add__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return _qc(self.re + o[0], self.im + o[1])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return _qc(self.re - o[0], self.im - o[1])

    def __rsub__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return _qc(o[0] - self.re, o[1] - self.im)

    def __mul__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        a, b = self.re, self.im
        c, d = o
        return _qc(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        c, d = o
        den = c * c + d * d
        if den == 0:
            raise ZeroDivisionError("QComplex division by zero")
        a, b = self.re, self.im
        return _qc((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return QComplex(*o) / self

    def __neg__(self):
        return _qc(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return 1 / (self**-n)
        out: Exact = Fraction(1)
        base: Exact = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        o = self._parts(other)
        if o is None:
            return NotImplemented
        return self.re == o[0] and self.im == o[1]

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def conjugate(self):
        return _qc(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __repr__(self):
        return f"QComplex({self.re}, {self.im})"

    def __str__(self):
        return f"{self.re},{self.im}"


Exact = Union[Fraction, QComplex]


def _qc(re_, im_) -> Exact:
    if im_ == 0:
        return Fraction(re_)
    return QComplex(re_, im_)


def exact(x) -> Exact:
    """Coerce ints, Fractions, QComplex, decimal strings and exact floats."""
    if isinstance(x, QComplex):
        return _qc(x.re, x.im)
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, complex):
        return _qc(Fraction(x.real), Fraction(x.imag))
    if isinstance(x, str):
        return parse_exact(x)
    if isinstance(x, (tuple, list)) and len(x) == 2:
        return _qc(exact(x[0]), exact(x[1]))
    raise TypeError(f"cannot interpret {x!r} as an exact number")


def parse_exact(text: str) -> Exact:
    """Parse ``"3/4"``, ``"-1.25e2"`` or ``"re,im"`` into an exact value."""
    text = text.strip()
    if "," in text:
        re_s, im_s = text.split(",", 1)
        re_v, im_v = parse_exact(re_s), parse_exact(im_s)
        if isinstance(re_v, QComplex) or isinstance(im_v, QComplex):
            raise ValueError(f"malformed complex literal {text!r}")
        return _qc(re_v, im_v)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed exact number {text!r}") from exc


def is_real(x) -> bool:
    if isinstance(x, QComplex):
        return x.im == 0
    if isinstance(x, MPC):
        return x.imag == 0
    if isinstance(x, complex):
        return x.imag == 0
    return True


# ---------------------------------------------------------------------------
# precision planning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PrecisionPolicy:
    target_digits: int
    guard_digits: int
    working_bits: int

    def __post_init__(self):
        need = math.ceil((self.target_digits + self.guard_digits) * LOG2_10)
        if self.working_bits < need:
            raise PrecisionError(f"working_bits={self.working_bits} < {need} required")

    @property
    def context(self) -> mpmath.MPContext:
        return context(self.working_bits)


def plan_precision(P: int, max_term_log10: float, margin: int = GUARD_MARGIN) -> PrecisionPolicy:
    """Working precision for a series whose largest term is ``10**max_term_log10``.

    The guard absorbs the cancellation between terms of that size and the
    final result:  ``guard = max(0, ceil(max_term_log10)) + margin``.
    """
    if P < 1:
        raise PrecisionError(f"target digits must be >= 1, got {P}")
    if not math.isfinite(max_term_log10):
        raise PrecisionError(f"max_term_log10 must be finite, got {max_term_log10}")
    guard = max(0, math.ceil(max_term_log10)) + margin
    bits = math.ceil((P + guard) * LOG2_10)
    return PrecisionPolicy(int(P), int(guard), int(bits))


# ---------------------------------------------------------------------------
# arbitrary-precision values
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def context(bits: int) -> mpmath.MPContext:
    """A private mpmath context fixed at ``bits`` of precision.

    Contexts are cached and never mutated after creation.
    """
    if bits < 2:
        raise PrecisionError(f"precision must be at least 2 bits, got {bits}")
    ctx = mpmath.MPContext()
    ctx.prec = int(bits)
    return ctx


def to_mp(x, ctx: mpmath.MPContext):
    """Convert an exact or machine number into ``ctx``'s mpf/mpc."""
    if isinstance(x, Fraction):
        # correctly rounded, no double rounding through numerator then quotient
        return ctx.make_mpf(from_rational(x.numerator, x.denominator, ctx.prec, round_nearest))
    if isinstance(x, QComplex):
        return ctx.mpc(to_mp(x.re, ctx), to_mp(x.im, ctx))
    if isinstance(x, int):
        return ctx.mpf(x)
    if isinstance(x, MPF):
        return ctx.mpf(x)
    if isinstance(x, MPC):
        return ctx.mpc(x)
    if isinstance(x, complex):
        return ctx.mpc(x)
    if isinstance(x, float):
        return ctx.mpf(x)
    if isinstance(x, str):
        return to_mp(parse_exact(x), ctx)
    raise TypeError(f"cannot convert {x!r} to mpmath")


def arb_real(value, bits: int):
    return to_mp(exact(value) if isinstance(value, str) else value, context(bits)).real


def arb_complex(re_, im_, bits: int):
    ctx = context(bits)
    return ctx.mpc(to_mp(re_, ctx), to_mp(im_, ctx))


def parse_decimal(text: str, bits: int):
    """Parse a decimal string into an mpf at ``bits`` precision.

    The string must match ``[+-]digits[.fraction][e[+-]k]``.  The rounded
    value is checked against the exact rational value; anything further than
    one unit in the last place is refused.
    """
    if not _DECIMAL_RE.match(text.strip()):
        raise PrecisionError(f"not a decimal literal: {text!r}")
    q = Fraction(text.strip())
    ctx = context(bits)
    v = to_mp(q, ctx)
    if q == 0:
        return v
    sign, man, exp, bc = v._mpf_
    got = (-1) ** sign * Fraction(int(man)) * (Fraction(2) ** int(exp))
    ulp = Fraction(2) ** (int(exp) + int(bc) - bits)
    if abs(got - q) > ulp:
        raise PrecisionError(f"{text!r} is not representable within 1 ulp at {bits} bits")
    return v


def format_decimal(x, digits: int | None = None) -> str:
    """Decimal string for an mpf/mpc; defaults to enough digits to round-trip."""
    prec = x.context.prec
    if digits is None:
        digits = int(math.ceil(prec / LOG2_10)) + 1
    # binary-to-decimal conversion at extra precision so short formats stay exact
    ctx = context(max(prec, math.ceil(digits * LOG2_10)) + 20)
    x = ctx.mpc(x) if isinstance(x, MPC) else ctx.mpf(x)
    if isinstance(x, MPC):
        return f"{ctx.nstr(x.real, digits, strip_zeros=False)},{ctx.nstr(x.imag, digits, strip_zeros=False)}"
    return ctx.nstr(x, digits, strip_zeros=False)


def log10_abs(x) -> float:
    """``log10|x|`` as a float, ``-inf`` for zero; safe for huge exponents."""
    if isinstance(x, (Fraction, int)):
        if x == 0:
            return -math.inf
        x = Fraction(x)
        return math.log10(abs(x.numerator)) - math.log10(x.denominator)
    if isinstance(x, QComplex):
        return 0.5 * log10_abs(x.re * x.re + x.im * x.im)
    if isinstance(x, complex):
        return math.log10(abs(x)) if x != 0 else -math.inf
    ctx = x.context
    a = ctx.fabs(x) if not isinstance(x, MPC) else abs(x)
    if a == 0:
        return -math.inf
    man, exp = a.man_exp
    shift = max(int(man).bit_length() - 60, 0)
    return math.log10(int(man) >> shift) + (exp + shift) * math.log10(2.0)

