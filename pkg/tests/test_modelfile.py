import numpy as np
import pytest

from powerlag import expr as ex, modelfile, scenarios
from powerlag.model import compile_model
from powerlag.modelfile import ModelFileError, dumps, loads

OSCILLATOR = """\
# damped oscillator
[meta]
n = 1
coords = x

[params]
m = 1.0
k = 4.0
gamma = 0.2

[lagrangian]
L = 0.5*m*qd0^2 - 0.5*k*q0^2

[rayleigh]
R = 0.5*gamma*qd0^2

[initial]
t = 0.0
q = 1.0
qd = 0.0

[integrator]
method = rk4
t1 = 2.5
dt = 0.01
"""


def test_loads_basic_file():
    spec = loads(OSCILLATOR)
    assert spec.n == 1 and spec.coords == ["x"]
    assert spec.params == {"m": 1.0, "k": 4.0, "gamma": 0.2}
    assert spec.initial.q.tolist() == [1.0]
    assert spec.integrator == {"method": "rk4", "t1": 2.5, "dt": 0.01}


def test_crlf_and_bom_accepted():
    crlf = "﻿" + OSCILLATOR.replace("\n", "\r\n")
    a, b = loads(OSCILLATOR), loads(crlf)
    assert a.L is b.L and a.R is b.R and a.params == b.params


@pytest.mark.parametrize("name", scenarios.names())
def test_round_trip_compiles_to_same_model(name):
    spec = scenarios.get(name).spec
    back = loads(dumps(spec))
    assert dumps(back) == dumps(spec)
    a, b = compile_model(spec), compile_model(back)
    assert a.order_class == b.order_class
    assert all(ex.poly_difference(x, y) == [] for x, y in zip(a.X, b.X))
    assert back.homogeneous_pe == spec.homogeneous_pe
    assert (back.gauge is None) == (spec.gauge is None)
    np.testing.assert_array_equal(back.initial.q, spec.initial.q)


@pytest.mark.parametrize("text, line, message", [
    ("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^2\n[bogus]\n", 5, "unknown section"),
    ("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^2\nL = 1\n", 5, "duplicate key"),
    ("n = 1\n", 1, "outside of any section"),
    ("[meta]\nn = 1\n[params]\nm = heavy\n[lagrangian]\nL = 0.5*m*qd0^2\n", 4, "real number"),
    ("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^2\n[options]\nregularize_sgn = maybe\n", 6,
     "true or false"),
    ("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^2\n[integrator]\nsteps = 3\n", 6, "unexpected key"),
    ("[meta]\nn = 1\nwhat\n", 3, "cannot read"),
])
def test_errors_carry_line_numbers(text, line, message):
    with pytest.raises(ModelFileError, match=message) as info:
        loads(text)
    assert info.value.line == line


def test_missing_required_entries():
    with pytest.raises(ModelFileError, match="missing n"):
        loads("[lagrangian]\nL = 0.5*qd0^2\n")
    with pytest.raises(ModelFileError, match="missing L"):
        loads("[meta]\nn = 1\n")
    with pytest.raises(ModelFileError, match="indices"):
        loads("[meta]\nn = 2\n[lagrangian]\nL = 0.5*qd0^2\n[constraints]\nf1 = qd0\n")


def test_expression_errors_report_the_file_line():
    with pytest.raises(ModelFileError, match="unexpected end of input") as info:
        loads("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^\n")
    assert info.value.line == 4
    with pytest.raises(ModelFileError, match="unknown identifier") as info:
        loads("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^2\n[rayleigh]\nR = g*qd0^2\n")
    assert info.value.line == 6


def test_options_and_gauge_round_trip():
    text = ("[meta]\nn = 1\n[lagrangian]\nL = 0.5*qd0^2\n[radiative]\nPE = -qdd0^2\n"
            "[options]\nregularize_sgn = true\nepsilon = 0.01\nhomogeneous_pe = false\n"
            "gauge = qd0^2\n")
    spec = loads(text)
    assert spec.regularize_sgn and spec.epsilon == 0.01
    assert format(ex.format_expr(spec.gauge)) == "qd0^2"
    assert loads(dumps(spec)).gauge is spec.gauge


def test_file_io(tmp_path):
    spec = loads(OSCILLATOR)
    path = tmp_path / "osc.model"
    modelfile.dump(spec, path)
    assert b"\r\n" not in path.read_bytes()
    assert dumps(modelfile.load(path)) == dumps(spec)
