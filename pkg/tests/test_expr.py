import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orlicz_mpa.expr import (Binary, Const, ExprDomainError, ExprSyntaxError, Unary,
                             UnboundVariable, Var, compile_expr, differentiate,
                             evaluate, parse, to_string, variables_of)


def ev(src, **kw):
    return float(evaluate(parse(src), kw))


def test_precedence_and_associativity():
    assert ev("2+3*4") == 14
    assert ev("2^3^2") == 512
    assert ev("-2^2") == -4
    assert ev("(1-2)-3") == -4 and ev("1-2-3") == -4
    assert ev("8/4/2") == 1


def test_abs_bars_and_functions():
    assert ev("|t|^(17/2)", t=-1.0) == 1.0
    assert ev("log(2+t)*sqrt(t)", t=4.0) == pytest.approx(math.log(6) * 2)
    assert ev("pi") == math.pi


def test_coordinate_builtins():
    x = np.array([[0.0, 0.5, 1.0]])
    assert float(evaluate(parse("sum_cos2(x,3)"), {"x": x})[0]) == pytest.approx(2.0)
    assert float(evaluate(parse("sum_sin2(x,2)"), {"x": x})[0]) == pytest.approx(1.0)
    assert float(evaluate(parse("x2"), {"x": x})[0]) == 0.5


@pytest.mark.parametrize("src", ["2+", "(t", "t)", "foo(t)", "q", "t $ 2", "|t"])
def test_syntax_errors_carry_position(src):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(src)
    assert exc.value.pos >= 0


@pytest.mark.parametrize("src, t", [("log(t)", 0.0), ("sqrt(t)", -1.0), ("1/t", 0.0),
                                    ("t^0.5", -2.0), ("t^(-1)", 0.0)])
def test_domain_errors(src, t):
    with pytest.raises(ExprDomainError):
        ev(src, t=t)


def test_unbound_variable():
    with pytest.raises(UnboundVariable):
        ev("t+s", t=1.0)


def test_derivative_of_kernel_matches_closed_form():
    d = differentiate(parse("4*t^2*log(2+t)+t^3/(1+t)"), "t")
    t = 1.7
    ref = 8 * t * math.log(2 + t) + 4 * t**2 / (2 + t) + (3 * t**2 * (1 + t) - t**3) / (1 + t) ** 2
    assert float(evaluate(d, {"t": t})) == pytest.approx(ref, rel=1e-13)


def test_constant_folding():
    assert differentiate(parse("3*t"), "t") == Const(3.0)
    assert differentiate(parse("s^2"), "t") == Const(0.0)


def test_compile_order():
    f = compile_expr(parse("t-s"), ("s", "t"))
    assert f(1.0, 3.0) == 2.0
    assert variables_of(parse("t*s+x3")) == {"t", "s", "x3"}


# random ASTs over t

_leaf = st.one_of(st.just(Var("t")), st.floats(0.25, 4).map(lambda v: Const(round(v, 3))))


def _extend(children):
    unary = st.builds(Unary, st.sampled_from(["neg", "sin", "cos", "exp", "abs"]), children)
    binary = st.builds(Binary, st.sampled_from(["+", "-", "*"]), children, children)
    square = children.map(lambda c: Binary("^", c, Const(2.0)))
    return st.one_of(unary, binary, square)


trees = st.recursive(_leaf, _extend, max_leaves=8)


@given(trees, st.floats(0.3, 1.5))
def test_print_parse_round_trip(node, t):
    back = parse(to_string(node))
    a, b = evaluate(node, {"t": t}), evaluate(back, {"t": t})
    assert np.isclose(a, b, rtol=1e-12, atol=1e-12) or (np.isnan(a) and np.isnan(b))


@given(trees, st.floats(0.3, 1.5))
def test_derivative_matches_difference(node, t):
    d = float(evaluate(differentiate(node, "t"), {"t": t}))
    h = 1e-6
    fd = (float(evaluate(node, {"t": t + h})) - float(evaluate(node, {"t": t - h}))) / (2 * h)
    if np.isfinite(fd) and abs(fd) < 1e6:
        assert d == pytest.approx(fd, rel=1e-4, abs=1e-4)
