import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toda_forge.errors import EvalError, ParseError, UnknownIdentifierError
from toda_forge.exprlang import (
    Binary,
    Const,
    Pow,
    Unary,
    Var,
    constant_value,
    eval_float,
    eval_jet,
    is_constant,
    parse_expr,
    to_source,
)


def test_precedence():
    assert parse_expr("1 + 2*t") == Binary("+", Const(1.0), Binary("*", Const(2.0), Var()))
    assert parse_expr("-t^2") == Unary("neg", Pow(Var(), Const(2.0)))


def test_power_is_left_associative():
    assert parse_expr("t^2^3") == Pow(Pow(Var(), Const(2.0)), Const(3.0))


def test_negative_and_folded_exponents():
    assert parse_expr("t^-1") == Pow(Var(), Const(-1.0))
    assert parse_expr("t^(1/2)") == Pow(Var(), Const(0.5))


def test_exponent_must_be_constant():
    with pytest.raises(ParseError) as e:
        parse_expr("2^t")
    assert e.value.offset == 2


def test_error_offsets():
    with pytest.raises(ParseError) as e:
        parse_expr("1 + * 2")
    assert e.value.offset == 4
    with pytest.raises(ParseError) as e:
        parse_expr("sin(t")
    assert e.value.offset == 5 and ")" in e.value.expected
    with pytest.raises(ParseError):
        parse_expr("")
    with pytest.raises(ParseError) as e:
        parse_expr("t $ 1")
    assert e.value.offset == 2


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as e:
        parse_expr("1 + tan(t)")
    assert e.value.offset == 4


def test_jet_of_sin_exp():
    j = eval_jet(parse_expr("sin(t)*exp(2*t)"), 0.0, 3)
    # sin t e^{2t} = t + 2t^2 + (2 - 1/6) t^3 + ...
    np.testing.assert_allclose(j.coeffs, [0, 1, 2, 2 - 1 / 6], atol=1e-14)


def test_eval_float_vectorized():
    ts = np.linspace(0.1, 2, 7)
    got = eval_float(parse_expr("sqrt(t) + log(t)*cos(t) - t^-2"), ts)
    np.testing.assert_allclose(got, np.sqrt(ts) + np.log(ts) * np.cos(ts) - ts**-2)


def test_eval_errors_name_subexpression():
    with pytest.raises(EvalError) as e:
        eval_float(parse_expr("1 + log(t - 1)"), [0.5, 2.0])
    assert "log" in e.value.subexpr and e.value.at == 0.5
    with pytest.raises(EvalError) as e:
        eval_jet(parse_expr("sqrt(t - 2)"), 1.0, 2)
    assert e.value.subexpr == "sqrt(t - 2)"
    with pytest.raises(EvalError):
        eval_float("1/(t-1)", 1.0)


def test_constants():
    assert is_constant(parse_expr("2*3 + sin(0)"))
    assert constant_value(parse_expr("2^3")) == 8.0
    assert not is_constant(parse_expr("t - t"))


leaves = st.one_of(
    st.just(Var()),
    st.integers(0, 9).map(lambda k: Const(float(k))),
    st.sampled_from([0.5, 2.25, 1e-3]).map(Const),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/"), children, children).map(lambda a: Binary(*a)),
        st.tuples(st.sampled_from(["neg", "exp", "sin", "cos", "log", "sqrt"]), children).map(
            lambda a: Unary(*a)
        ),
        st.tuples(children, st.sampled_from([2.0, 3.0, -1.0, 0.5])).map(lambda a: Pow(a[0], Const(a[1]))),
    )


trees = st.recursive(leaves, _extend, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_print_parse_roundtrip(tree):
    assert parse_expr(to_source(tree)) == tree


@settings(max_examples=100, deadline=None)
@given(trees)
def test_jet_value_matches_float(tree):
    try:
        v = eval_float(tree, 0.7)
    except EvalError:
        return
    if not np.isfinite(v) or abs(v) > 1e8:
        return
    try:
        j = eval_jet(tree, 0.7, 2)
    except EvalError:
        return
    assert j.value == pytest.approx(v, rel=1e-9, abs=1e-9)


def test_jet_derivative_against_finite_difference():
    f = parse_expr("exp(sin(t)) / (1 + t^2)")
    h = 1e-4
    fd = (eval_float(f, 0.3 + h) - eval_float(f, 0.3 - h)) / (2 * h)
    assert eval_jet(f, 0.3, 1).derivative(1) == pytest.approx(fd, rel=1e-7)
