from __future__ import annotations

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwkb.logscaled import ZERO, LogScaledValue, log_sum

finite = st.floats(-1e6, 1e6, allow_nan=False)
logs = st.builds(complex, st.floats(-1e5, 1e5), st.floats(-3, 3))


@settings(max_examples=200)
@given(logs)
def test_mantissa_normalized(L):
    v = LogScaledValue.from_log(L)
    assert 1 <= abs(v.mantissa) < 2
    assert v.log_abs == pytest.approx(L.real, abs=1e-9 * max(1, abs(L.real)))


@settings(max_examples=200)
@given(logs, logs)
def test_multiplication_adds_logs(a, b):
    p = LogScaledValue.from_log(a) * LogScaledValue.from_log(b)
    assert p.log_abs == pytest.approx(a.real + b.real, abs=1e-9 * (1 + abs(a.real) + abs(b.real)))
    assert cmath.exp(1j * p.phase) == pytest.approx(cmath.exp(1j * (a.imag + b.imag)), abs=1e-9)


@settings(max_examples=200)
@given(logs, logs)
def test_division_inverse(a, b):
    x, y = LogScaledValue.from_log(a), LogScaledValue.from_log(b)
    back = (x / y) * y
    assert back.log_abs == pytest.approx(x.log_abs, abs=1e-9 * (1 + abs(a.real) + abs(b.real)))


@given(st.complex_numbers(max_magnitude=1e100, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=1e100, allow_nan=False, allow_infinity=False))
def test_addition_matches_complex(z, w):
    s = (LogScaledValue.from_complex(z) + LogScaledValue.from_complex(w)).to_complex()
    assert abs(s - (z + w)) <= 1e-12 * (abs(z) + abs(w)) + 1e-300  # subnormals carry no relative precision


def test_beyond_float_range():
    big = LogScaledValue.from_log(5000.0)
    assert (big * big).log_abs == pytest.approx(10000.0)
    assert math.isinf(big.to_complex().real)
    assert (big - big).is_zero()


def test_zero_behaviour():
    assert (ZERO * LogScaledValue.from_complex(3)).is_zero()
    assert (ZERO + 2).to_complex() == 2
    with pytest.raises(ZeroDivisionError):
        LogScaledValue.from_complex(1) / ZERO
    with pytest.raises(ValueError):
        LogScaledValue.from_complex(complex(math.inf, 0))


def test_log_sum():
    s, ratio = log_sum([0j, 0j])
    assert s == pytest.approx(math.log(2))
    assert ratio == pytest.approx(1)
    s, ratio = log_sum([0j, complex(0, math.pi)])
    assert ratio < 1e-15
    s, ratio = log_sum([1000.0, 1000.0 + 1e-12j * 0])
    assert s.real == pytest.approx(1000 + math.log(2))
