"""q-difference operators and their two specializations.

An operator ``P = sum_j b_j(Q, q) E^j`` acts on sequences by
``(Q f)(n) = q^n f(n)``, ``(E f)(n) = f(n+1)``.  Setting ``q = 1`` gives the
characteristic polynomial; setting ``q = exp(2 pi i eps)``, ``Q = exp(2 pi i x)``
gives an eps-difference equation.
"""

from __future__ import annotations

import cmath
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .parser import NCElement, OperatorSyntaxError, parse_expression
from .poly import RationalFunction2, UPoly, multiset_lcm, upoly_exact_div, upoly_gcd

SINGULAR_REL_TOL = 1e-13


class DegenerateOperatorError(ValueError):
    pass


class SingularEvaluationError(ArithmeticError):
    """A coefficient denominator is (numerically) zero at the given point."""

    def __init__(self, message: str, point=None, index: int | None = None):
        super().__init__(message)
        self.point = point
        self.index = index


@dataclass(frozen=True)
class QOperator:
    """``sum_{j=0}^{d} b_j(Q, q) E^j`` with exact rational coefficients."""

    coeffs: tuple[RationalFunction2, ...]

    def __post_init__(self):
        if len(self.coeffs) < 2:
            raise DegenerateOperatorError("operator has no E-dependence (degree 0)")
        if self.coeffs[-1].is_zero():
            raise DegenerateOperatorError("leading coefficient is zero")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def has_zero_trailing(self) -> bool:
        return self.coeffs[0].is_zero()

    def coefficient(self, j: int) -> RationalFunction2:
        return self.coeffs[j]

    def is_equivalent(self, other: "QOperator") -> bool:
        """Coefficientwise equality under cross-multiplication."""
        return self.degree == other.degree and all(
            a.cross_equal(b) for a, b in zip(self.coeffs, other.coeffs)
        )

    def __str__(self):
        return serialize_operator(self)


def _from_element(elem: NCElement) -> QOperator:
    if not elem.coeffs:
        raise DegenerateOperatorError("operator is identically zero")
    d = elem.degree()
    if d < 1:
        raise DegenerateOperatorError("operator has no E-dependence (degree 0)")
    coeffs = tuple(elem.coeffs.get(j, RationalFunction2(0)) for j in range(d + 1))
    if coeffs[0].is_zero():
        warnings.warn("trailing coefficient b_0 is zero; the operator factors through E", stacklevel=3)
    return QOperator(coeffs)


_SERIAL_LINE = re.compile(r"^\s*b\[(\d+)\]\s*=\s*(.+?)\s*$")


def parse_operator(text: str) -> QOperator:
    """Parse operator text into normal form ``b_0 + b_1 E + ... + b_d E^d``.

    Accepts the expression grammar of :mod:`qwkb.parser` and also the
    serialized ``b[j] = num / den`` line format written by
    :func:`serialize_operator`.
    """
    stripped = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    if "b[" in stripped:
        return _parse_serialized(stripped)
    return _from_element(parse_expression(text))


def _parse_serialized(text: str) -> QOperator:
    parts: dict[int, RationalFunction2] = {}
    offset = 0
    for line in text.splitlines(keepends=True):
        if line.strip():
            m = _SERIAL_LINE.match(line)
            if not m:
                raise OperatorSyntaxError("expected 'b[j] = <expr>'", offset, text)
            j = int(m.group(1))
            elem = parse_expression(m.group(2))
            if not elem.is_E_free():
                raise OperatorSyntaxError("serialized coefficient contains E", offset + m.start(2), text)
            parts[j] = elem.coeffs.get(0, RationalFunction2(0))
        offset += len(line)
    if not parts:
        raise DegenerateOperatorError("no coefficients")
    d = max(parts)
    return _from_element(NCElement({j: parts[j] for j in parts if j <= d}))


def serialize_operator(op: QOperator) -> str:
    """One line per coefficient: ``b[j] = <numerator> / <denominator>``."""
    lines = []
    for j, c in enumerate(op.coeffs):
        num = c.numerator.to_text()
        den = c.denominator.to_text()
        lines.append(f"b[{j}] = ({num}) / ({den})")
    return "\n".join(lines) + "\n"


def clear_denominators(op: QOperator) -> QOperator:
    """Multiply on the left by the lcm of all coefficient denominators.

    The lcm is a multiset lcm of the tracked factors together with the
    monomial needed to make every exponent nonnegative.  Left multiplication
    by a function of (Q, q) does not move any E, so solutions are unchanged.
    """
    lcm = multiset_lcm(c.den_factors for c in op.coeffs if not c.is_zero())
    nz = [c for c in op.coeffs if not c.is_zero()]
    amin = min(c.mono[0] for c in nz)
    bmin = min(c.mono[1] for c in nz)
    scale = RationalFunction2(1, (-amin, -bmin), tuple(lcm), ())
    return QOperator(tuple(c * scale for c in op.coeffs))


def _check_singular(num: complex, den: complex, where, j: int | None = None) -> complex:
    if abs(den) < SINGULAR_REL_TOL * (1.0 + abs(num)):
        raise SingularEvaluationError(f"singular evaluation of b_{j} at {where}", where, j)
    return num / den


def eval_coefficient(op: QOperator, j: int, Q: complex, q: complex) -> complex:
    """``b_j(Q, q)`` by Horner evaluation of numerator and denominator."""
    if not 0 <= j <= op.degree:
        raise IndexError(f"coefficient index {j} outside 0..{op.degree}")
    c = op.coeffs[j]
    if c.is_zero():
        return 0j
    num, den = c(Q, q)
    return _check_singular(num, den, (Q, q), j)


def eval_coefficients(op: QOperator, Q: complex, q: complex) -> np.ndarray:
    return np.array([eval_coefficient(op, j, Q, q) for j in range(op.degree + 1)], dtype=complex)


# --------------------------------------------------------------------------
# q -> 1: characteristic polynomial data


@dataclass(frozen=True)
class ClassicalCoefficient:
    """Univariate rational coefficient ``num(v) / den(v)`` in factored form."""

    coef: object
    mono: int
    num_factors: tuple[UPoly, ...]
    den_factors: tuple[UPoly, ...]

    def is_zero(self) -> bool:
        return self.coef == 0

    @property
    def numerator(self) -> UPoly:
        p = UPoly({max(self.mono, 0): self.coef})
        for f in self.num_factors:
            p = p * f
        return p

    @property
    def denominator(self) -> UPoly:
        p = UPoly({max(-self.mono, 0): 1})
        for f in self.den_factors:
            p = p * f
        return p

    def __call__(self, v: complex) -> tuple[complex, complex]:
        return self.numerator(v), self.denominator(v)

    def to_text(self) -> str:
        den = self.denominator
        num = self.numerator.to_text()
        if den == UPoly({0: 1}):
            return num
        return f"({num}) / ({den.to_text()})"


def _at_q1(c: RationalFunction2, j: int) -> ClassicalCoefficient:
    if c.is_zero():
        return ClassicalCoefficient(0, 0, (), ())
    num = UPoly({c.mono[0]: c.coef})
    for f in c.num_factors:
        num = num * f.at_q1()
    if num.is_zero():
        return ClassicalCoefficient(0, 0, (), ())
    den = UPoly({0: 1})
    for f in c.den_factors:
        u = f.at_q1()
        if u.is_zero():
            raise SingularEvaluationError(
                f"denominator of b_{j} vanishes identically at q=1", None, j
            )
        den = den * u
    # cancel common factors so that only genuine poles remain
    g = upoly_gcd(num, den)
    if g.degree() > 0:
        num = upoly_exact_div(num, g)
        den = upoly_exact_div(den, g)
    coef = num.lead() / den.lead()
    mono = num.min_exp() - den.min_exp()
    nf, df = num.normalized(), den.normalized()
    return ClassicalCoefficient(
        coef, mono, (nf,) if nf.degree() > 0 else (), (df,) if df.degree() > 0 else ()
    )


def specialize_classical(op: QOperator):
    """Characteristic polynomial ``sum_j b_j(v, 1) lambda^j``.

    Returns a :class:`qwkb.spectral.CharPoly` on the unit circle.  Leading
    coefficients vanishing identically at ``q = 1`` are dropped with a warning.
    """
    from .spectral import CharPoly

    coeffs = [_at_q1(c, j) for j, c in enumerate(op.coeffs)]
    while len(coeffs) > 1 and coeffs[-1].is_zero():
        warnings.warn(
            f"coefficient b_{len(coeffs) - 1} vanishes identically at q=1; degree reduced",
            stacklevel=2,
        )
        coeffs.pop()
    if len(coeffs) < 2:
        raise DegenerateOperatorError("characteristic polynomial has degree 0")
    return CharPoly.from_rational(coeffs)


# --------------------------------------------------------------------------
# eps-form


@dataclass(frozen=True)
class EpsilonEquation:
    """``sum_j a_j(k eps, eps) psi((k+j) eps) = 0`` on an interval.

    ``coeff_fn(x, eps)`` returns the d+1 coefficients and must accept complex
    ``eps`` when ``series_fn`` is absent (eps-Taylor coefficients are then
    taken by a Cauchy integral).  ``series_fn(x, order)`` returns an array of
    shape ``(d+1, order+1)`` of eps-Taylor coefficients when known exactly.
    """

    degree: int
    coeff_fn: Callable[[float, complex], np.ndarray]
    interval: tuple[float, float]
    series_fn: Callable[[float, int], np.ndarray] | None = None
    operator: QOperator | None = None
    name: str = ""
    char_fns: Callable[[float], np.ndarray] | None = field(default=None, repr=False)

    def coefficients(self, x: float, eps: complex) -> np.ndarray:
        return np.asarray(self.coeff_fn(x, eps), dtype=complex)

    def eps_series(self, x: float, order: int) -> np.ndarray:
        """Taylor coefficients ``a_{j,s}(x)`` for s = 0..order."""
        if self.series_fn is not None:
            return np.asarray(self.series_fn(x, order), dtype=complex)
        # Cauchy integral on a small circle in complex eps
        r = 1e-2
        m = max(32, 4 * (order + 1))
        w = np.exp(2j * np.pi * np.arange(m) / m)
        vals = np.array([self.coefficients(x, r * z) for z in w])  # (m, d+1)
        c = np.fft.fft(vals, axis=0) / m  # coefficient s at index s
        s = np.arange(order + 1)
        return (c[: order + 1].T) / (r ** s)

    def d_eps(self, x: float) -> np.ndarray:
        """``d a_j / d eps`` at eps = 0 (exact when series are known, else central difference)."""
        if self.series_fn is not None:
            return self.eps_series(x, 1)[:, 1]
        h = 1e-5
        return (self.coefficients(x, h) - self.coefficients(x, -h)) / (2 * h)

    def characteristic(self, x: float) -> np.ndarray:
        return self.coefficients(x, 0.0)

    def char_poly(self):
        """CharPoly in the interval parametrization (t is x itself)."""
        from .spectral import CharPoly

        if self.operator is not None:
            return specialize_classical(self.operator).with_parametrization(
                "interval", self.interval
            )
        return CharPoly.from_functions(
            lambda t: self.coefficients(t, 0.0), self.degree, self.interval, name=self.name
        )


def to_epsilon_form(op: QOperator, interval: Sequence[float] = (0.0, 1.0)) -> EpsilonEquation:
    """Substitute ``q = exp(2 pi i eps)``, ``Q = exp(2 pi i x)``."""
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("interval must be nonempty")
    nums = [c.numerator for c in op.coeffs]
    dens = [c.denominator for c in op.coeffs]

    def coeff_fn(x, eps):
        Q = cmath.exp(2j * math.pi * x)
        q = cmath.exp(2j * math.pi * eps)
        # same evaluation path as the q-mode recursion
        return eval_coefficients(op, Q, q)

    def series_fn(x, order):
        Q = cmath.exp(2j * math.pi * x)
        out = np.zeros((op.degree + 1, order + 1), dtype=complex)
        for j, c in enumerate(op.coeffs):
            if c.is_zero():
                continue
            n = np.array(nums[j].eps_series(Q, order))
            dser = np.array(dens[j].eps_series(Q, order))
            if abs(dser[0]) < SINGULAR_REL_TOL * (1 + abs(n[0])):
                raise SingularEvaluationError(f"coefficient singular at ({x}, 0)", (x, 0.0), j)
            out[j] = _series_divide(n, dser)
        return out

    return EpsilonEquation(op.degree, coeff_fn, (lo, hi), series_fn, op, name="")


def _series_divide(n: np.ndarray, d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(n)
    for s in range(len(n)):
        acc = n[s] - sum(out[t] * d[s - t] for t in range(s))
        out[s] = acc / d[0]
    return out


def equation_from_functions(
    coeff_fn: Callable[[float, complex], Sequence[complex]],
    degree: int,
    interval: Sequence[float],
    series_fn: Callable[[float, int], np.ndarray] | None = None,
    name: str = "",
) -> EpsilonEquation:
    """Eps-difference equation from closed-form coefficient functions."""
    lo, hi = float(interval[0]), float(interval[1])
    return EpsilonEquation(
        degree, lambda x, e: np.asarray(coeff_fn(x, e), dtype=complex), (lo, hi), series_fn, None, name
    )
