"""Overflow-free complex numbers stored as mantissa * e^exponent."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LogScaledValue:
    """``mantissa * exp(exponent)`` with ``1 <= |mantissa| < 2`` or mantissa 0."""

    mantissa: complex
    exponent: float

    @classmethod
    def from_log(cls, log_value: complex) -> "LogScaledValue":
        """From a complex logarithm ``log|z| + i arg z``."""
        if not cmath.isfinite(log_value):
            if log_value.real == -math.inf:
                return ZERO
            raise ValueError(f"non-finite logarithm {log_value}")
        L = log_value.real
        e = math.floor(L / LN2) * LN2
        return cls(cmath.exp(complex(L - e, log_value.imag)), e)._fix()

    @classmethod
    def from_complex(cls, z: complex) -> "LogScaledValue":
        z = complex(z)
        if z == 0:
            return ZERO
        if not cmath.isfinite(z):
            raise ValueError(f"non-finite value {z}")
        return cls.from_log(cmath.log(z))

    def _fix(self) -> "LogScaledValue":
        # rounding can push |mantissa| just outside [1, 2)
        m, e = self.mantissa, self.exponent
        a = abs(m)
        if a == 0:
            return ZERO
        if a >= 2.0:
            return LogScaledValue(m / 2.0, e + LN2)
        if a < 1.0:
            return LogScaledValue(m * 2.0, e - LN2)
        return self

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def log(self) -> complex:
        """Complex logarithm; real part is log|z| to working precision."""
        if self.is_zero():
            return complex(-math.inf, 0.0)
        return complex(math.log(abs(self.mantissa)) + self.exponent, cmath.phase(self.mantissa))

    @property
    def log_abs(self) -> float:
        return self.log().real

    @property
    def phase(self) -> float:
        return cmath.phase(self.mantissa) if not self.is_zero() else 0.0

    def to_complex(self) -> complex:
        """Plain complex value; overflows to inf for huge exponents."""
        if self.is_zero():
            return 0j
        try:
            return self.mantissa * math.exp(self.exponent)
        except OverflowError:
            return complex(math.inf, 0.0)

    def __mul__(self, other) -> "LogScaledValue":
        other = _coerce(other)
        if self.is_zero() or other.is_zero():
            return ZERO
        return LogScaledValue(self.mantissa * other.mantissa, self.exponent + other.exponent)._fix()

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogScaledValue":
        other = _coerce(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero LogScaledValue")
        if self.is_zero():
            return ZERO
        return LogScaledValue(self.mantissa / other.mantissa, self.exponent - other.exponent)._fix()

    def __add__(self, other) -> "LogScaledValue":
        other = _coerce(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        big, small = (self, other) if self.exponent >= other.exponent else (other, self)
        shift = small.exponent - big.exponent
        m = big.mantissa + small.mantissa * math.exp(shift) if shift > -800 else big.mantissa
        if m == 0:
            return ZERO
        return LogScaledValue.from_log(cmath.log(m) + big.exponent)

    __radd__ = __add__

    def __neg__(self) -> "LogScaledValue":
        return LogScaledValue(-self.mantissa, self.exponent)

    def __sub__(self, other) -> "LogScaledValue":
        return self + (-_coerce(other))


ZERO = LogScaledValue(0j, 0.0)


def _coerce(x) -> LogScaledValue:
    return x if isinstance(x, LogScaledValue) else LogScaledValue.from_complex(x)


def log_sum(logs) -> tuple[complex, float]:
    """Complex log of ``sum exp(logs)`` and the cancellation ratio.

    The ratio is ``|sum| / sum |terms|``; values far below 1 mean the sum
    lost relative precision.
    """
    logs = np.asarray(logs, dtype=complex)
    finite = np.isfinite(logs.real)
    if not np.any(finite):
        return complex(-math.inf, 0.0), 1.0
    logs = logs[finite]
    M = float(np.max(logs.real))
    terms = np.exp(logs - M)
    s = complex(np.sum(terms))
    total = float(np.sum(np.abs(terms)))
    if s == 0:
        return complex(-math.inf, 0.0), 0.0
    return cmath.log(s) + M, abs(s) / total
