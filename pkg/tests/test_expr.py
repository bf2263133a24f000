import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ghostfluid.expr import ExpressionError, Jet2, eval_jet, evaluate, parse_expression

from conftest import central_difference, preset_expressions


def test_values_at_zero():
    assert evaluate(parse_expression("exp(sin(5*pi*x))"), 0.0) == 1.0
    assert evaluate(parse_expression("3+cos(5*pi*x)"), 0.0) == 4.0


def test_unclosed_call_reports_offset():
    with pytest.raises(ExpressionError) as exc:
        parse_expression("sin(")
    assert exc.value.offset == 4


@pytest.mark.parametrize("src,offset", [
    ("x +* 2", 3), ("2 $ x", 2), ("foo(x)", 0), ("(x", 2), ("x)", 1), ("", 0),
])
def test_syntax_errors(src, offset):
    with pytest.raises(ExpressionError) as exc:
        parse_expression(src)
    assert exc.value.offset == offset


@pytest.mark.parametrize("src", ["2^x", "x^0.5", "x^-1", "(-2)^0.5", "0^-1"])
def test_rejected_powers(src):
    with pytest.raises(ExpressionError):
        parse_expression(src)


def test_precedence_and_associativity():
    assert evaluate(parse_expression("-x^2"), 3.0) == -9.0
    assert evaluate(parse_expression("2^3^2"), 0.0) == 512.0
    assert evaluate(parse_expression("8/4/2"), 0.0) == 1.0
    assert evaluate(parse_expression("1-2-3"), 0.0) == -4.0
    assert evaluate(parse_expression("2*x+1e-1"), 1.0) == pytest.approx(2.1)


def test_parameters():
    t = parse_expression("10^p*x", {"p": 3})
    assert evaluate(t, 2.0) == 2000.0
    with pytest.raises(ExpressionError):
        parse_expression("10^p")


def test_constant_broadcasts_on_arrays():
    j = eval_jet(parse_expression("7"), np.linspace(0, 1, 5))
    assert j.value.shape == (5,) and np.all(j.d1 == 0) and np.all(j.d2 == 0)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        evaluate(parse_expression("1/x"), 0.0)


def test_jet_of_square():
    j = eval_jet(parse_expression("x^2"), 3.0)
    assert (j.value, j.d1, j.d2) == (9.0, 6.0, 2.0)


def test_jet_of_sine():
    j = eval_jet(parse_expression("sin(x)"), 0.0)
    assert (j.value, j.d1, j.d2) == (0.0, 1.0, 0.0)


def test_jet_arithmetic_rules():
    a = Jet2(2.0, 3.0, 5.0)
    b = Jet2(7.0, -1.0, 4.0)
    p = a * b
    assert (p.value, p.d1, p.d2) == (14.0, 3 * 7 - 2, 5 * 7 + 2 * 3 * -1 + 2 * 4)
    q = a / b
    # check the quotient through q * b == a
    r = q * b
    assert r.value == pytest.approx(a.value) and r.d1 == pytest.approx(a.d1)
    assert r.d2 == pytest.approx(a.d2)


@pytest.mark.parametrize("src", preset_expressions())
def test_jets_match_finite_differences(src):
    tree = parse_expression(src)
    x = np.random.default_rng(2024).uniform(0.0, 1.0, 100)
    jet = eval_jet(tree, x)
    d1 = central_difference(lambda y: np.asarray(evaluate(tree, y)) + 0 * y, x)
    d2 = central_difference(lambda y: eval_jet(tree, y).d1, x)
    assert np.all(np.abs(jet.d1 - d1) <= 1e-6 * np.abs(jet.d1))
    assert np.all(np.abs(jet.d2 - d2) <= 1e-6 * np.abs(jet.d2))


POLY = st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=5)


@given(coef=POLY, x=st.floats(min_value=-2, max_value=2))
@settings(max_examples=100, deadline=None)
def test_polynomial_jets(coef, x):
    src = "+".join(f"({c})*x^{k}" for k, c in enumerate(coef))
    j = eval_jet(parse_expression(src), x)
    val = sum(c * x**k for k, c in enumerate(coef))
    d1 = sum(k * c * x ** (k - 1) for k, c in enumerate(coef) if k >= 1)
    d2 = sum(k * (k - 1) * c * x ** (k - 2) for k, c in enumerate(coef) if k >= 2)
    assert j.value == pytest.approx(val, abs=1e-9)
    assert j.d1 == pytest.approx(d1, abs=1e-9)
    assert j.d2 == pytest.approx(d2, abs=1e-9)


@given(x=st.floats(min_value=-1, max_value=1))
@settings(max_examples=50, deadline=None)
def test_chain_rule_exp_sin(x):
    j = eval_jet(parse_expression("exp(sin(2*x))"), x)
    s, c = math.sin(2 * x), math.cos(2 * x)
    e = math.exp(s)
    assert j.value == pytest.approx(e)
    assert j.d1 == pytest.approx(2 * c * e)
    assert j.d2 == pytest.approx((4 * c * c - 4 * s) * e)
