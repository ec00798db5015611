import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobseries.numerics import (
    QComplex,
    PrecisionError,
    PrecisionPolicy,
    context,
    exact,
    format_decimal,
    log10_abs,
    parse_decimal,
    parse_exact,
    plan_precision,
    to_mp,
)

LOG2_10 = math.log2(10)

fractions = st.fractions(max_denominator=10**6).filter(lambda x: abs(x) < 10**6)
qcomplex = st.builds(lambda a, b: exact((a, b)), fractions, fractions)


def test_plan_no_cancellation():
    pol = plan_precision(50, 0)
    assert pol.guard_digits == 10
    assert pol.working_bits >= math.ceil(60 * LOG2_10) == 200


def test_plan_anharmonic_peak():
    pol = plan_precision(100, 144.8)
    assert pol.guard_digits == 155
    assert pol.working_bits >= 847


def test_plan_decaying_terms_clamp():
    assert plan_precision(1000, -5).guard_digits == 10


@pytest.mark.parametrize("bad", [math.inf, -math.inf, math.nan])
def test_plan_rejects_non_finite(bad):
    with pytest.raises(PrecisionError):
        plan_precision(10, bad)


def test_plan_rejects_zero_digits():
    with pytest.raises(PrecisionError):
        plan_precision(0, 0)


def test_policy_invariant_enforced():
    with pytest.raises(PrecisionError):
        PrecisionPolicy(100, 10, 300)


@given(st.integers(1, 5000), st.integers(1, 5000), st.floats(-50, 500), st.floats(-50, 500))
def test_plan_monotone(p1, p2, m1, m2):
    a = plan_precision(min(p1, p2), min(m1, m2))
    b = plan_precision(max(p1, p2), max(m1, m2))
    assert a.working_bits <= b.working_bits
    assert a.guard_digits <= b.guard_digits


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 200),
    st.integers(-5, 60),
    st.lists(st.tuples(st.integers(-(10**9), 10**9), st.integers(1, 10**9)), min_size=1, max_size=300),
)
def test_policy_summation_error(P, mt, raw):
    # terms of magnitude <= 10**mt; exact rational sum as the oracle
    terms = [F(n, d) / max(1, abs(F(n, d))) * F(10) ** mt for n, d in raw]
    pol = plan_precision(P, mt)
    ctx = pol.context
    s = ctx.zero
    for t in terms:
        s += to_mp(t, ctx)
    exact_sum = sum(terms, F(0))
    err = abs(s - to_mp(exact_sum, context(pol.working_bits + 200)))
    assert err <= len(terms) * ctx.mpf(10) ** (-(P + 5))


@given(st.integers(2, 3000), st.fractions(max_denominator=10**12))
def test_decimal_round_trip(bits, q):
    x = to_mp(q, context(bits))
    assert parse_decimal(format_decimal(x), bits) == x


@pytest.mark.parametrize("text", ["", "abc", "1e", "--1", "1,2", "0x10", "1/3"])
def test_parse_decimal_rejects_malformed(text):
    with pytest.raises(PrecisionError):
        parse_decimal(text, 100)


def test_parse_decimal_accepts_grammar():
    for text in ["1", "-2.5", "+.5e-3", "12.", "3E+10"]:
        v = parse_decimal(text, 200)
        assert abs(v - to_mp(F(text), context(400))) <= abs(v) * 2 ** -199


def test_mixed_precision_keeps_at_least_minimum():
    a = context(100).mpf(1) / 3
    b = context(300).mpf(1) / 3
    assert (a + b).context.prec >= 100
    assert (b * a).context.prec >= 100


def test_format_complex():
    ctx = context(60)
    assert format_decimal(ctx.mpc(1, -2), 3) == "1.00,-2.00"


@given(qcomplex, qcomplex, qcomplex)
def test_qcomplex_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a - a == 0
    if b != 0:
        assert (a / b) * b == a


@given(qcomplex, qcomplex)
def test_qcomplex_matches_float_complex(a, b):
    got = complex(a * b)
    want = complex(a) * complex(b)
    assert abs(got - want) <= 1e-9 * max(1, abs(want))


def test_qcomplex_collapses_to_fraction():
    assert isinstance(QComplex(1, 2) * QComplex(1, -2), F)
    assert QComplex(0, 1) ** 2 == -1


def test_parse_exact_forms():
    assert parse_exact("3/4") == F(3, 4)
    assert parse_exact("-1.25e2") == F(-125)
    assert parse_exact("1/2,-3") == QComplex(F(1, 2), -3)
    with pytest.raises(ValueError):
        parse_exact("x")


def test_log10_abs_huge_values():
    ctx = context(20000)
    x = ctx.mpf(10) ** 5000 * 3
    assert log10_abs(x) == pytest.approx(5000 + math.log10(3))
    assert log10_abs(F(10**400, 7)) == pytest.approx(400 - math.log10(7))
    assert log10_abs(F(0)) == -math.inf
