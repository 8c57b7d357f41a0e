from __future__ import annotations

import cmath
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwkb.builtins import resolve
from qwkb.operator import (
    DegenerateOperatorError,
    SingularEvaluationError,
    clear_denominators,
    eval_coefficient,
    parse_operator,
    serialize_operator,
    specialize_classical,
    to_epsilon_form,
)
from qwkb.parser import EInDenominatorError, OperatorSyntaxError
from qwkb.poly import BivariatePolynomial, RationalFunction2, UPoly, upoly_gcd

RNG = np.random.default_rng(7)


def unit(n):
    return np.exp(2j * np.pi * RNG.random(n))


def test_normal_form_reading():
    op = parse_operator("E^2 - (Q+1)*E + Q")
    assert op.degree == 2
    for Q in unit(5):
        b = [eval_coefficient(op, j, Q, 0.7 + 0.2j) for j in range(3)]
        assert np.allclose(b, [Q, -(Q + 1), 1], atol=1e-14)


def test_commutation_EQ():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        op = parse_operator("E*Q")
        ref = parse_operator("q*Q*E")
    assert op.is_equivalent(ref)
    assert eval_coefficient(op, 1, 2.0, 3.0) == pytest.approx(6.0)
    assert eval_coefficient(op, 0, 2.0, 3.0) == 0


def test_trefoil_leading_coefficient():
    op = resolve("trefoil").operator
    assert op.degree == 2
    for Q, q in zip(unit(10), unit(10)):
        expect = (-1 + q ** 2 * Q) / (Q * (q - q ** 4 * Q ** 2))
        assert abs(eval_coefficient(op, 2, Q, q) - expect) < 1e-12 * abs(expect)


def test_trefoil_singular_at_one():
    op = resolve("trefoil").operator
    with pytest.raises(SingularEvaluationError):
        eval_coefficient(op, 2, 1.0, 1.0)


def test_eval_example():
    op = parse_operator("E^2 - (Q+1)*E + Q")
    assert eval_coefficient(op, 1, 1j, 1.0) == pytest.approx(-(1 + 1j))


@pytest.mark.parametrize("text, pos", [("E^2 - (Q", 8), ("E + * Q", 4), ("E ^ x", 4)])
def test_syntax_error_position(text, pos):
    with pytest.raises(OperatorSyntaxError) as exc:
        parse_operator(text)
    assert exc.value.position == pos


def test_E_in_denominator():
    with pytest.raises(EInDenominatorError):
        parse_operator("1/(E - 1)")


def test_degenerate():
    with pytest.raises(DegenerateOperatorError):
        parse_operator("Q + q")
    with pytest.raises(DegenerateOperatorError):
        parse_operator("E - E")


def test_rational_literals():
    op = parse_operator("E - 7/2")
    assert eval_coefficient(op, 0, 1.0, 1.0) == pytest.approx(-3.5)


def test_specialize_simple():
    P = specialize_classical(parse_operator("E^2 - (Q+1)*E + Q"))
    for v in unit(5):
        t = cmath.phase(v) / (2 * math.pi) % 1
        c = P.original_coeffs_at(t)
        lam = np.roots(c[::-1])
        assert np.allclose(sorted(lam, key=lambda z: z.real), sorted([1, v], key=lambda z: z.real), atol=1e-10)


def test_specialize_constant():
    P = specialize_classical(parse_operator("E - 2"))
    assert P.degree == 1
    assert np.allclose(P.original_coeffs_at(0.3), [-2, 1])


def test_specialize_trefoil_matches_printed_form():
    # -(L-1)(L+M^3)/(M(1+M)) with v = M
    P = specialize_classical(resolve("trefoil").operator).with_parametrization("circle")
    for t in RNG.random(20):
        M = cmath.exp(2j * math.pi * t)
        c = P.original_coeffs_at(t)
        for L in (0.3 + 0.4j, 1.7 - 0.2j):
            got = np.polyval(c[::-1], L)
            want = -(L - 1) * (L + M ** 3) / (M * (1 + M))
            assert abs(got - want) < 1e-10 * abs(want)


def test_specialization_compatibility():
    op = resolve("figure8").operator
    P = specialize_classical(op).with_parametrization("circle")
    for t in RNG.random(10):
        Q = cmath.exp(2j * math.pi * t)
        direct = [eval_coefficient(op, j, Q, 1.0) for j in range(op.degree + 1)]
        assert np.allclose(P.original_coeffs_at(t), direct, rtol=1e-12, atol=0)


def test_epsilon_form_examples():
    eq = to_epsilon_form(parse_operator("E - Q"))
    assert eq.coefficients(0.25, 0.0)[0] == pytest.approx(-1j)
    eq2 = to_epsilon_form(parse_operator("E^2 - (Q+1)*E + Q"))
    assert eq2.coefficients(0.37, 0.01)[2] == 1


def test_epsilon_form_singular_figure8():
    eq = to_epsilon_form(resolve("figure8").operator)
    with pytest.raises(SingularEvaluationError):
        eq.coefficients(0.5, 0.0)


def test_epsilon_form_translation():
    op = resolve("figure8").operator
    eq = to_epsilon_form(op)
    for k, eps in [(3, 0.01), (17, 0.003), (101, 0.0007)]:
        a = eq.coefficients(k * eps, eps)
        b = [eval_coefficient(op, j, cmath.exp(2j * math.pi * k * eps), cmath.exp(2j * math.pi * eps))
             for j in range(4)]
        assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_eps_series_matches_finite_differences():
    eq = to_epsilon_form(resolve("trefoil").operator)
    x = 0.13
    ser = eq.eps_series(x, 2)
    h = 1e-4
    fd1 = (eq.coefficients(x, h) - eq.coefficients(x, -h)) / (2 * h)
    fd2 = (eq.coefficients(x, h) - 2 * eq.coefficients(x, 0) + eq.coefficients(x, -h)) / h ** 2
    assert np.allclose(ser[:, 0], eq.coefficients(x, 0), rtol=1e-12)
    assert np.allclose(ser[:, 1], fd1, rtol=1e-6)
    assert np.allclose(ser[:, 2], fd2 / 2, rtol=1e-4)


def test_round_trip_knots():
    for name in ("trefoil", "figure8"):
        op = resolve(name).operator
        again = parse_operator(serialize_operator(op))
        assert again.is_equivalent(op)
        assert serialize_operator(again) == serialize_operator(op)


def test_clear_denominators_polynomial():
    op = clear_denominators(resolve("trefoil").operator)
    assert all(c.is_polynomial() for c in op.coeffs)
    ref = resolve("trefoil").operator
    Q, q = 0.3 + 0.9j, 0.8 - 0.1j
    ratios = [eval_coefficient(op, j, Q, q) / eval_coefficient(ref, j, Q, q) for j in range(3)]
    assert np.allclose(ratios, ratios[0])


def test_upoly_gcd():
    a = UPoly.from_dense([-1, 0, 1])  # v^2 - 1
    b = UPoly.from_dense([1, 2, 1])  # (v+1)^2
    g = upoly_gcd(a, b)
    assert g.degree() == 1 and g(-1) == 0


def test_bivariate_exact():
    p = BivariatePolynomial({(1, 0): Fraction(1, 3), (0, -1): 2})
    assert (p * p - p * p).is_zero()
    assert (p + (-p)).is_zero()


# -- properties


monos = st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), st.integers(-4, 4).filter(bool),
                        min_size=1, max_size=3)


@settings(max_examples=40, deadline=None)
@given(monos, monos, monos)
def test_round_trip_property(b0, b1, b2):
    def text(terms):
        return " + ".join(f"({c})*Q^{a}*q^{b}" for (a, b), c in terms.items())

    src = f"{text(b0)} + ({text(b1)})*E + ({text(b2)})*E^2"
    try:
        op = parse_operator(src)
    except DegenerateOperatorError:
        return
    again = parse_operator(serialize_operator(op))
    assert again.is_equivalent(op)


@pytest.mark.filterwarnings("ignore:trailing coefficient")
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3), st.integers(-2, 2))
def test_confluence_EQ_power(j, a):
    # E^j Q^a = q^(a j) Q^a E^j
    lhs = parse_operator(f"E^{j}*Q^{a} + E^3")
    rhs = parse_operator(f"q^{a * j}*Q^{a}*E^{j} + E^3")
    assert lhs.is_equivalent(rhs)


def test_rational_function_cross_equal():
    x = RationalFunction2.from_poly(BivariatePolynomial({(1, 0): 1, (0, 0): 1}))
    assert (x / x).cross_equal(RationalFunction2.constant(1))
