from fractions import Fraction as F

import pytest

from frobseries.ode import ODEProblem, Poly


@pytest.fixture
def exp_problem():
    # psi'' = psi
    return ODEProblem(Poly.of(1), Poly.of(), Poly.of(-1))


@pytest.fixture
def bessel0():
    return ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(0, 0, 1))


@pytest.fixture
def bessel1():
    return ODEProblem(Poly.of(0, 0, 1), Poly.of(0, 1), Poly.of(-1, 0, 1))


@pytest.fixture
def half_index():
    # z psi'' + psi'/2 - psi = 0, indices {0, 1/2}
    return ODEProblem(Poly.of(0, 1), Poly.of(F(1, 2)), Poly.of(-1))


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_report(request):
    """Append ``(label, ok, detail)``; printed as one line per criterion at the end of the run."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(lines):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
