import csv
import io
import json
import math
from pathlib import Path

import mpmath
import pytest

from frobseries.cli import run
from frobseries.estimator import anharmonic_reference

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def prob(name):
    return str(PROBLEMS / name)


def call(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_problem(tmp_path, data, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


@pytest.mark.parametrize(
    "name,head",
    [
        ("exp.json", "Ordinary"),
        ("bessel0.json", "Degenerate, nu=0"),
        ("bessel1.json", "IntegerDiff(2), nu1=-1, nu2=1"),
    ],
)
def test_classify(capsys, name, head):
    code, out, _ = call(capsys, "classify", prob(name))
    assert code == 0
    assert out.splitlines()[0] == head


def test_classify_irregular_is_unsupported(capsys, tmp_path):
    path = write_problem(tmp_path, {"p": ["0", "0", "1"], "q": ["1"], "r": ["1"]})
    code, _, err = call(capsys, "classify", path)
    assert code == 3 and "rregular" in err


def test_solve_exp(capsys):
    code, out, _ = call(capsys, "solve", prob("exp.json"), "--at", "1", "--precision", "50", "--initial", "1;1")
    assert code == 0
    value = out.splitlines()[0].split()[1]
    with mpmath.workdps(60):
        assert abs(mpmath.mpf(value) - mpmath.e) < mpmath.mpf(10) ** -48


def test_solve_bessel_and_path(capsys):
    code, out, _ = call(capsys, "solve", prob("bessel0.json"), "--at", "2", "--precision", "20")
    assert code == 0
    assert float(out.split()[1]) == pytest.approx(float(mpmath.besselj(0, 2)), rel=1e-15)
    code, out, _ = call(capsys, "solve", prob("bessel0.json"), "--at", "8", "--precision", "20",
                        "--path", "2;3;4;5.5")
    assert code == 0
    assert float(out.split()[1]) == pytest.approx(float(mpmath.besselj(0, 8)), rel=1e-14)


def test_solve_outside_disc_is_numeric_failure(capsys, tmp_path):
    path = write_problem(tmp_path, {"p": ["1", "-1"], "q": [], "r": ["1"]})
    code, _, err = call(capsys, "solve", path, "--at", "2", "--precision", "10", "--initial", "1;0")
    assert code == 4 and "disc" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["solve", "problems/exp.json", "--at", "1", "--precision", "0"],
        ["solve", "problems/exp.json", "--at", "abc", "--precision", "10"],
        ["solve", "no_such_file.json", "--at", "1", "--precision", "10"],
        ["coeffs", "problems/exp.json", "--count", "5", "--initial", "1"],
        ["profile", "problems/anharmonic_c0.json", "--u", "3:1:5"],
        ["demo-binomial", "--n", "1"],
        ["frobnicate"],
    ],
)
def test_bad_input_exit_two(capsys, monkeypatch, argv):
    monkeypatch.chdir(PROBLEMS.parent)
    code, _, _ = call(capsys, *argv)
    assert code == 2


def test_coeffs_exp(capsys):
    code, out, _ = call(capsys, "coeffs", prob("exp.json"), "--count", "6", "--initial", "1;1", "--digits", "20")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [float(r["re_a0"]) for r in rows] == pytest.approx([1 / math.factorial(m) for m in range(6)])


def test_coeffs_log_columns(capsys):
    code, out, _ = call(capsys, "coeffs", prob("bessel0.json"), "--solution", "log", "--count", "5")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    # the log part of the degenerate second solution is J0 itself
    assert [float(r["re_a1"]) for r in rows] == pytest.approx([1, 0, -0.25, 0, 1 / 64])


def test_coeffs_zero_initial_data(capsys):
    code, out, _ = call(capsys, "coeffs", prob("exp.json"), "--count", "4", "--initial", "0;0")
    assert code == 0
    assert all(float(r["re_a0"]) == 0 for r in csv.DictReader(io.StringIO(out)))


def test_coeffs_round_trip_matches_solve(capsys):
    P = 40
    code, out, _ = call(capsys, "coeffs", prob("exp.json"), "--count", "60", "--initial", "1;1", "--digits", "60")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    code, out, _ = call(capsys, "solve", prob("exp.json"), "--at", "1/2", "--precision", str(P), "--initial", "1;1")
    with mpmath.workdps(80):
        z = mpmath.mpf("0.5")
        total = sum(mpmath.mpf(r["re_a0"]) * z ** int(r["m"]) for r in rows)
        assert abs(total - mpmath.mpf(out.split()[1])) < mpmath.mpf(10) ** -(P - 2)


def test_estimate_term_count(capsys, tmp_path):
    csv_path = tmp_path / "curve.csv"
    code, out, _ = call(capsys, "estimate", prob("anharmonic_c0.json"), "--at", "100", "--precision", "100",
                        "--solution", "nu1", "--csv", str(csv_path))
    assert code == 0
    fields = dict(line.split() for line in out.splitlines())
    assert int(fields["M"]) == pytest.approx(1.7e3, rel=0.05)
    assert csv_path.read_text().startswith("u,m_bar,log_abs_a,log10_max_term")


def test_estimate_refuses_log_series(capsys):
    code, _, err = call(capsys, "estimate", prob("bessel0.json"), "--at", "2", "--precision", "10",
                        "--solution", "log")
    assert code == 3 and "log" in err


def test_profile_matches_closed_form(capsys):
    code, out, _ = call(capsys, "profile", prob("anharmonic_y_c1.json"), "--u", "1:6:6", "--var-power", "2",
                        "--terms", "exponent")
    assert code == 0
    for row in csv.DictReader(io.StringIO(out)):
        u = float(row["u"])
        assert float(row["S"]) == pytest.approx(anharmonic_reference(1, u=u).S, rel=1e-9)


def test_demo_binomial(capsys):
    code, out, _ = call(capsys, "demo-binomial", "--n", "10")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 11
    assert float(rows[5]["legendre"]) == pytest.approx(0.252313, abs=1e-6)


def test_validate(capsys):
    code, out, _ = call(capsys, "validate")
    assert code == 0
    assert out.count("PASS") == len(out.splitlines())


def test_json_envelope(capsys):
    code, out, _ = call(capsys, "solve", prob("exp.json"), "--at", "1", "--precision", "20", "--initial", "1;1",
                        "--json")
    assert code == 0
    env = json.loads(out)
    assert env["schema_version"] == 1 and env["command"] == "solve"
    assert env["result"]["value"].startswith("2.718281828")
    assert "wall_time_ms" in env["result"]


def test_reproducible_output_is_byte_identical(capsys, tmp_path):
    outs = []
    for k in range(2):
        target = tmp_path / f"run{k}.json"
        code, _, _ = call(capsys, "profile", prob("anharmonic_c0.json"), "--u", "1:3:5", "--json", "--reproducible",
                          "--out", str(target))
        assert code == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    assert b"wall_time_ms" not in outs[0]
