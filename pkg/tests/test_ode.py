import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frobseries.numerics import QComplex, exact
from frobseries.ode import (
    CanonicalProblem,
    IndexCase,
    InvalidShift,
    IrrationalRoot,
    ODEProblem,
    PointClass,
    Poly,
    UnsupportedClassification,
    anharmonic_canonical,
    classify_origin,
    from_canonical,
    indicial_roots,
    load_problem,
    problem_from_dict,
    problem_to_dict,
    recenter,
    shift_index,
    singular_radius,
    to_canonical,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)
polys = st.lists(small, min_size=1, max_size=4).map(lambda c: Poly(tuple(c)))


def test_poly_trims_and_caps():
    assert Poly.of(1, 2, 0, 0).coeffs == (1, 2)
    with pytest.raises(ValueError):
        Poly(tuple([1] * 66))


def test_classify_ordinary(exp_problem):
    assert classify_origin(exp_problem) is PointClass.ORDINARY


def test_classify_bessel0_form(bessel0):
    assert classify_origin(bessel0) is PointClass.REGULAR_SINGULAR_B


def test_classify_case_a():
    assert classify_origin(ODEProblem(Poly.of(0, 1), Poly.of(2), Poly.of(1))) is PointClass.REGULAR_SINGULAR_A


def test_classify_irregular():
    # z^2 psi'' + psi' = 0
    assert classify_origin(ODEProblem(Poly.of(0, 0, 1), Poly.of(1), Poly.of(1))) is PointClass.IRREGULAR


def test_classify_divides_common_factor():
    # z^3 psi'' + z^2 psi' + z^2 psi: common z, then case B
    prob = ODEProblem(Poly.of(0, 0, 0, 1), Poly.of(0, 0, 1), Poly.of(0, 0, 1))
    assert classify_origin(prob) is PointClass.REGULAR_SINGULAR_B


def test_indicial_bessel0(bessel0):
    d = indicial_roots(bessel0)
    assert (d.nu1, d.nu2, d.case) == (0, 0, IndexCase.DEGENERATE)


def test_indicial_bessel1(bessel1):
    d = indicial_roots(bessel1)
    assert (d.nu1, d.nu2, d.case, d.ell) == (-1, 1, IndexCase.INTEGER_DIFF, 2)


def test_indicial_half(half_index):
    d = indicial_roots(ODEProblem(Poly.of(0, 1), Poly.of(F(1, 2)), Poly.of(1)))
    assert (d.nu1, d.nu2, d.case) == (0, F(1, 2), IndexCase.NON_INTEGER_DIFF)


def test_indicial_rejects_ordinary(exp_problem):
    with pytest.raises(UnsupportedClassification):
        indicial_roots(exp_problem)


def test_indicial_irrational_and_complex_roots():
    d = indicial_roots(ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(-2, 1)))
    assert isinstance(d.nu1, IrrationalRoot) and d.case is IndexCase.NON_INTEGER_DIFF
    assert complex(d.nu2) == pytest.approx(2**0.5)
    d = indicial_roots(ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(1, 1)))
    assert {d.nu1, d.nu2} == {QComplex(0, 1), QComplex(0, -1)}
    assert d.case is IndexCase.NON_INTEGER_DIFF


def test_shift_bessel1(bessel1):
    sh = shift_index(bessel1, 1)
    assert (sh.p, sh.q, sh.r) == (Poly.of(0, 1), Poly.of(3), Poly.of(0, 1))
    d = indicial_roots(sh)
    assert (d.nu1, d.nu2) == (-2, 0)


def test_shift_by_zero_is_division(bessel0):
    sh = shift_index(bessel0, 0)
    assert sh == bessel0.div_z()


def test_shift_rejects_non_root(bessel1):
    with pytest.raises(InvalidShift):
        shift_index(bessel1, 2)


def test_canonical_free_equation():
    prob = from_canonical(CanonicalProblem(1, 0, [0]))
    assert (prob.p, prob.q, prob.r) == (Poly.of(0, 0, 1), Poly(), Poly())
    d = indicial_roots(prob)
    assert (d.nu1, d.nu2, d.case, d.ell) == (0, 1, IndexCase.INTEGER_DIFF, 1)


def test_canonical_degenerate():
    prob = from_canonical(CanonicalProblem(0, 0, [1]))
    assert prob.r == Poly.of(0, -1)
    assert indicial_roots(prob).case is IndexCase.DEGENERATE


def test_anharmonic_map_indices():
    # -Psi'' + y^4 Psi = 0 with x = y^2:  4x psi'' + 2 psi' - x^2 psi = 0
    prob = ODEProblem(Poly.of(0, 4), Poly.of(2), Poly.of(0, 0, -1))
    cp = to_canonical(prob)
    assert (cp.nu_plus, cp.nu_minus) == (F(1, 2), 0)
    assert cp.v == (0, 0, F(1, 4))
    assert cp == anharmonic_canonical(0)
    d = indicial_roots(prob)
    # indices {0, 1/2} in x are {0, 1} in y = sqrt(x)
    assert sorted(2 * v for v in (d.nu1, d.nu2)) == [0, 1]


def test_recenter_examples(bessel0):
    assert recenter(ODEProblem(Poly.of(0, 1)), 1).p == Poly.of(1, 1)
    assert recenter(bessel0, 0) == bessel0
    rc = recenter(bessel0, 2)
    assert (rc.p, rc.q, rc.r, rc.center) == (Poly.of(4, 4, 1), Poly.of(2, 1), Poly.of(4, 4, 1), 2)


@settings(max_examples=60)
@given(polys, polys, polys, small)
def test_recenter_ordinary_where_p_nonzero(p, q, r, z1):
    if p.is_zero() or p(z1) == 0:
        return
    assert classify_origin(recenter(ODEProblem(p, q, r), z1)) is PointClass.ORDINARY


@settings(max_examples=60)
@given(polys, polys, polys, small, small)
def test_recenter_composes(p, q, r, a, b):
    if p.is_zero():
        return
    prob = ODEProblem(p, q, r)
    assert recenter(recenter(prob, a), b) == recenter(prob, a + b)


@given(small, small, st.lists(small, min_size=1, max_size=4))
def test_canonical_roots_exact(nup, num, v):
    d = indicial_roots(from_canonical(CanonicalProblem(nup, num, v)))
    assert {d.nu1, d.nu2} == {nup, num}


@given(small, small, st.lists(small, min_size=1, max_size=3))
def test_shift_by_nu2_normalises(nup, num, v):
    d = indicial_roots(from_canonical(CanonicalProblem(nup, num, v)))
    sh = indicial_roots(shift_index(d.reduced, d.nu2))
    assert sh.nu2 == 0
    assert exact(sh.nu1) <= 0


def test_singular_radius(bessel0, exp_problem):
    assert singular_radius(exp_problem) == float("inf")
    assert singular_radius(bessel0) == float("inf")
    assert singular_radius(ODEProblem(Poly.of(0, 1, -1))) == pytest.approx(1.0)


def test_problem_dict_round_trip(tmp_path):
    prob = ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(F(-1, 3), 0, 1), center=QComplex(1, 2))
    assert problem_from_dict(problem_to_dict(prob)) == prob
    cp = anharmonic_canonical(4, sign=-1)
    assert problem_from_dict(problem_to_dict(cp)) == cp
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"p": ["0", "0", "1"], "q": ["0", "1"], "r": ["0", "0", "1"]}))
    assert load_problem(path)[0] == ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(0, 0, 1))


@pytest.mark.parametrize(
    "bad",
    [{}, {"p": ["1"], "canonical": {}}, {"p": [1.5]}, {"canonical": {"nu_plus": "1"}}, {"p": ["1/0"]}],
)
def test_problem_dict_rejects(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        problem_from_dict(bad)
