"""Exact Laurent polynomials in (Q, q) and rational functions kept in factored form.

Coefficients are :class:`fractions.Fraction`; nothing here rounds.  Rational
functions remember the polynomial factors they were built from so that
denominators can be cleared by a multiset lcm instead of a multivariate gcd.
"""

from __future__ import annotations

from collections import Counter
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping

Monomial = tuple[int, int]  # (exponent of Q, exponent of q)


def _frac(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


class BivariatePolynomial:
    """Finite sum of ``c * Q^a * q^b`` with exact rational ``c``; ``a, b`` may be negative."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = _frac(c)
            if c:
                clean[(int(mono[0]), int(mono[1]))] = c
        self._terms = clean
        self._hash = None

    # construction helpers
    @classmethod
    def constant(cls, c) -> "BivariatePolynomial":
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, a: int = 0, b: int = 0, c=1) -> "BivariatePolynomial":
        return cls({(a, b): c})

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or set(self._terms) == {(0, 0)}

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms with exponents descending in Q, then in q."""
        return sorted(self._terms.items(), key=lambda t: (-t[0][0], -t[0][1]))

    def leading_coefficient(self) -> Fraction:
        return self.sorted_terms()[0][1] if self._terms else Fraction(0)

    def min_exponents(self) -> Monomial:
        if not self._terms:
            return (0, 0)
        return (min(a for a, _ in self._terms), min(b for _, b in self._terms))

    def max_exponents(self) -> Monomial:
        if not self._terms:
            return (0, 0)
        return (max(a for a, _ in self._terms), max(b for _, b in self._terms))

    # arithmetic
    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return BivariatePolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return BivariatePolynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        out: dict[Monomial, Fraction] = {}
        for (a1, b1), c1 in self._terms.items():
            for (a2, b2), c2 in other._terms.items():
                key = (a1 + a2, b1 + b2)
                out[key] = out.get(key, 0) + c1 * c2
        return BivariatePolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            if not self.is_monomial():
                raise ValueError("negative power of a non-monomial polynomial")
            ((a, b), c), = self._terms.items()
            return BivariatePolynomial({(a * n, b * n): c ** n})
        result = BivariatePolynomial.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "BivariatePolynomial":
        c = _frac(c)
        return BivariatePolynomial({m: v * c for m, v in self._terms.items()})

    def shift_monomial(self, da: int, db: int) -> "BivariatePolynomial":
        return BivariatePolynomial({(a + da, b + db): c for (a, b), c in self._terms.items()})

    def substitute_Q_shift(self, j: int) -> "BivariatePolynomial":
        """Substitute ``Q -> q^j Q`` (what moving ``E^j`` past a coefficient does)."""
        return BivariatePolynomial({(a, b + j * a): c for (a, b), c in self._terms.items()})

    def at_q1(self) -> "UPoly":
        out: dict[int, Fraction] = {}
        for (a, _), c in self._terms.items():
            out[a] = out.get(a, 0) + c
        return UPoly(out)

    def d_dq(self) -> "BivariatePolynomial":
        return BivariatePolynomial({(a, b - 1): c * b for (a, b), c in self._terms.items() if b})

    def eps_series(self, Q: complex, order: int) -> list[complex]:
        """Taylor coefficients in eps of ``p(Q, exp(2 pi i eps))`` at eps = 0."""
        import math

        out = [0j] * (order + 1)
        for (a, b), c in self._terms.items():
            base = float(c) * Q ** a
            w = 2j * math.pi * b
            term = base
            for s in range(order + 1):
                out[s] += term
                term = term * w / (s + 1)
        return out

    def __call__(self, Q: complex, q: complex) -> complex:
        # Horner in q inside Horner in Q, on the nonnegative-shifted polynomial
        if not self._terms:
            return 0j
        amin, bmin = self.min_exponents()
        rows: dict[int, dict[int, Fraction]] = {}
        for (a, b), c in self._terms.items():
            rows.setdefault(a - amin, {})[b - bmin] = c
        amax = max(rows)
        acc = 0j
        for a in range(amax, -1, -1):
            row = rows.get(a)
            inner = 0j
            if row:
                for b in range(max(row), -1, -1):
                    inner = inner * q + float(row.get(b, 0))
            acc = acc * Q + inner
        return acc * (Q ** amin) * (q ** bmin)

    # normalization
    def primitive(self) -> tuple[Fraction, Monomial, "BivariatePolynomial"]:
        """Split into ``unit * Q^a q^b * p`` with ``p`` having min exponents 0 and leading coefficient 1."""
        if not self._terms:
            raise ZeroDivisionError("primitive part of zero polynomial")
        amin, bmin = self.min_exponents()
        lead = self.leading_coefficient()
        p = BivariatePolynomial(
            {(a - amin, b - bmin): c / lead for (a, b), c in self._terms.items()}
        )
        return lead, (amin, bmin), p

    # comparison
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BivariatePolynomial.constant(other)
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (a, b), c in self.sorted_terms():
            factors = []
            if a:
                factors.append("Q" if a == 1 else f"Q^{a}")
            if b:
                factors.append("q" if b == 1 else f"q^{b}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"BivariatePolynomial({self.to_text()!r})"


def _as_poly(x) -> BivariatePolynomial:
    if isinstance(x, BivariatePolynomial):
        return x
    return BivariatePolynomial.constant(x)


class UPoly:
    """Univariate Laurent polynomial in v with exact coefficients."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        self._c = {int(k): _frac(v) for k, v in (coeffs or {}).items() if v}

    @classmethod
    def from_dense(cls, coeffs: Iterable) -> "UPoly":
        return cls({k: c for k, c in enumerate(coeffs)})

    def is_zero(self) -> bool:
        return not self._c

    @property
    def coeffs(self) -> dict[int, Fraction]:
        return dict(self._c)

    def min_exp(self) -> int:
        return min(self._c) if self._c else 0

    def max_exp(self) -> int:
        return max(self._c) if self._c else 0

    def degree(self) -> int:
        return self.max_exp() - self.min_exp() if self._c else -1

    def lead(self) -> Fraction:
        return self._c[self.max_exp()] if self._c else Fraction(0)

    def __add__(self, o):
        o = o if isinstance(o, UPoly) else UPoly({0: o})
        out = dict(self._c)
        for k, v in o._c.items():
            out[k] = out.get(k, 0) + v
        return UPoly(out)

    def __neg__(self):
        return UPoly({k: -v for k, v in self._c.items()})

    def __sub__(self, o):
        return self + (-(o if isinstance(o, UPoly) else UPoly({0: o})))

    def __mul__(self, o):
        if not isinstance(o, UPoly):
            return UPoly({k: v * _frac(o) for k, v in self._c.items()})
        out: dict[int, Fraction] = {}
        for k1, v1 in self._c.items():
            for k2, v2 in o._c.items():
                out[k1 + k2] = out.get(k1 + k2, 0) + v1 * v2
        return UPoly(out)

    __rmul__ = __mul__

    def __eq__(self, o):
        return isinstance(o, UPoly) and self._c == o._c

    def __hash__(self):
        return hash(frozenset(self._c.items()))

    def shift(self, k: int) -> "UPoly":
        return UPoly({e + k: v for e, v in self._c.items()})

    def normalized(self) -> "UPoly":
        """Min exponent 0 and leading coefficient 1."""
        if not self._c:
            return self
        m, lead = self.min_exp(), self.lead()
        return UPoly({e - m: v / lead for e, v in self._c.items()})

    def dense(self) -> list[Fraction]:
        """Ascending coefficients of the nonnegative-shifted polynomial."""
        if not self._c:
            return [Fraction(0)]
        m = self.min_exp()
        out = [Fraction(0)] * (self.max_exp() - m + 1)
        for e, v in self._c.items():
            out[e - m] = v
        return out

    def __call__(self, v):
        if not self._c:
            return 0j
        acc = 0j
        for c in reversed(self.dense()):
            acc = acc * v + float(c)
        return acc * v ** self.min_exp()

    def divmod(self, o: "UPoly") -> tuple["UPoly", "UPoly"]:
        """Polynomial division of the shifted (ordinary) polynomials."""
        a = self.dense()
        b = o.dense()
        while len(b) > 1 and b[-1] == 0:
            b.pop()
        if not any(b):
            raise ZeroDivisionError("division by zero polynomial")
        a = a[:]
        quot = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
        while len(a) >= len(b) and any(a):
            shift = len(a) - len(b)
            f = a[-1] / b[-1]
            quot[shift] = f
            for i, bc in enumerate(b):
                a[shift + i] -= f * bc
            a.pop()
            while a and a[-1] == 0:
                a.pop()
        return UPoly.from_dense(quot), UPoly.from_dense(a)

    def unit_circle_roots(self, tol: float = 1e-9) -> list[complex]:
        """Numerical roots of modulus 1 (within ``tol``)."""
        import numpy as np

        dense = [float(c) for c in self.normalized().dense()]
        if len(dense) < 2:
            return []
        r = np.roots(dense[::-1])
        return [complex(z) for z in r if abs(abs(z) - 1.0) < tol]

    def to_text(self, var: str = "v") -> str:
        if not self._c:
            return "0"
        parts = []
        for e in sorted(self._c, reverse=True):
            c = self._c[e]
            mono = "" if e == 0 else (var if e == 1 else f"{var}^{e}")
            mag = abs(c)
            body = str(mag) if not mono else (mono if mag == 1 else f"{mag}*{mono}")
            parts.append(("-" if c < 0 else "+", body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for s, b in parts[1:]:
            text += f" {s} {b}"
        return text

    def __repr__(self):
        return f"UPoly({self.to_text()!r})"


def upoly_gcd(a: UPoly, b: UPoly) -> UPoly:
    """Monic gcd of the ordinary (shifted) polynomials; monomial factors ignored."""
    a, b = a.normalized(), b.normalized()
    if a.is_zero():
        return b
    while not b.is_zero():
        _, r = a.divmod(b)
        a, b = b, r.normalized()
    return a.normalized()


def upoly_exact_div(a: UPoly, b: UPoly) -> UPoly:
    """Quotient a / b for b dividing a, keeping Laurent exponents."""
    q, r = a.divmod(b)
    if not r.is_zero():
        raise ArithmeticError("inexact polynomial division")
    return q.shift(a.min_exp() - b.min_exp())


def upoly_lcm(polys: Iterable[UPoly]) -> UPoly:
    """Monic lcm of ordinary polynomials (monomial factors ignored)."""
    out = UPoly({0: 1})
    for p in polys:
        p = p.normalized()
        if p.degree() <= 0:
            continue
        g = upoly_gcd(out, p)
        out = upoly_exact_div(out * p, g).normalized()
    return out


def multiset_lcm(factor_lists: Iterable[Iterable]) -> list:
    """lcm of factored quantities: every factor with its largest multiplicity."""
    best: Counter = Counter()
    for fl in factor_lists:
        for f, n in Counter(fl).items():
            best[f] = max(best[f], n)
    return list(best.elements())


class RationalFunction2:
    """Ratio of two bivariate polynomials kept as ``unit * prod(num) / prod(den)``.

    ``unit`` is a Fraction times a Laurent monomial; the factor tuples hold
    primitive polynomials (min exponents 0, leading coefficient 1).
    """

    __slots__ = ("coef", "mono", "num_factors", "den_factors")

    def __init__(self, coef=0, mono: Monomial = (0, 0), num_factors=(), den_factors=()):
        self.coef = _frac(coef)
        self.mono = (int(mono[0]), int(mono[1])) if self.coef else (0, 0)
        if not self.coef:
            num_factors, den_factors = (), ()
        nums = Counter(num_factors)
        dens = Counter(den_factors)
        common = nums & dens
        nums -= common
        dens -= common
        self.num_factors = tuple(sorted(nums.elements(), key=_factor_key))
        self.den_factors = tuple(sorted(dens.elements(), key=_factor_key))

    @classmethod
    def from_poly(cls, p: BivariatePolynomial) -> "RationalFunction2":
        if p.is_zero():
            return cls(0)
        unit, mono, prim = p.primitive()
        if prim.is_constant():
            return cls(unit, mono)
        return cls(unit, mono, (prim,))

    @classmethod
    def constant(cls, c) -> "RationalFunction2":
        return cls(c)

    @classmethod
    def monomial(cls, a: int, b: int, c=1) -> "RationalFunction2":
        return cls(c, (a, b))

    def is_zero(self) -> bool:
        return self.coef == 0

    def is_polynomial(self) -> bool:
        return not self.den_factors and self.mono[0] >= 0 and self.mono[1] >= 0

    @property
    def numerator(self) -> BivariatePolynomial:
        p = BivariatePolynomial.monomial(max(self.mono[0], 0), max(self.mono[1], 0), self.coef)
        for f in self.num_factors:
            p = p * f
        return p

    @property
    def denominator(self) -> BivariatePolynomial:
        p = BivariatePolynomial.monomial(max(-self.mono[0], 0), max(-self.mono[1], 0))
        for f in self.den_factors:
            p = p * f
        return p

    def __mul__(self, o):
        o = _as_rat(o)
        return RationalFunction2(
            self.coef * o.coef,
            (self.mono[0] + o.mono[0], self.mono[1] + o.mono[1]),
            self.num_factors + o.num_factors,
            self.den_factors + o.den_factors,
        )

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction2":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero rational function")
        return RationalFunction2(
            1 / self.coef, (-self.mono[0], -self.mono[1]), self.den_factors, self.num_factors
        )

    def __truediv__(self, o):
        return self * _as_rat(o).inverse()

    def __neg__(self):
        return RationalFunction2(-self.coef, self.mono, self.num_factors, self.den_factors)

    def __add__(self, o):
        o = _as_rat(o)
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        common = multiset_lcm([self.den_factors, o.den_factors])
        amin = min(self.mono[0], o.mono[0])
        bmin = min(self.mono[1], o.mono[1])

        def lifted(r: RationalFunction2) -> BivariatePolynomial:
            missing = Counter(common) - Counter(r.den_factors)
            p = BivariatePolynomial.monomial(r.mono[0] - amin, r.mono[1] - bmin, r.coef)
            for f in list(r.num_factors) + list(missing.elements()):
                p = p * f
            return p

        total = lifted(self) + lifted(o)
        if total.is_zero():
            return RationalFunction2(0)
        unit, (da, db), prim = total.primitive()
        nums = () if prim.is_constant() else (prim,)
        return RationalFunction2(unit, (amin + da, bmin + db), nums, tuple(common))

    __radd__ = __add__

    def __sub__(self, o):
        return self + (-_as_rat(o))

    def __rsub__(self, o):
        return _as_rat(o) - self

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = RationalFunction2(1)
        for _ in range(n):
            out = out * self
        return out

    def substitute_Q_shift(self, j: int) -> "RationalFunction2":
        """Substitute ``Q -> q^j Q`` keeping the factor structure."""
        if j == 0 or self.is_zero():
            return self
        r = RationalFunction2(self.coef, (self.mono[0], self.mono[1] + j * self.mono[0]))
        for f in self.num_factors:
            r = r * RationalFunction2.from_poly(f.substitute_Q_shift(j))
        for f in self.den_factors:
            r = r / RationalFunction2.from_poly(f.substitute_Q_shift(j))
        return r

    def cross_equal(self, o) -> bool:
        """Equality by cross-multiplication of expanded numerators and denominators."""
        o = _as_rat(o)
        return self.numerator * o.denominator == o.numerator * self.denominator

    __eq__ = cross_equal

    def __hash__(self):
        return id(self)

    def __call__(self, Q: complex, q: complex) -> tuple[complex, complex]:
        """(numerator, denominator) values; the caller decides about singularity."""
        return self.numerator(Q, q), self.denominator(Q, q)

    def to_text(self) -> str:
        num = self.numerator.to_text()
        den = self.denominator
        if den == BivariatePolynomial.constant(1):
            return num
        return f"({num}) / ({den.to_text()})"

    def __repr__(self):
        return f"RationalFunction2({self.to_text()!r})"


def _factor_key(p: BivariatePolynomial):
    return tuple((m, c.numerator, c.denominator) for m, c in p.sorted_terms())


def _as_rat(x) -> RationalFunction2:
    if isinstance(x, RationalFunction2):
        return x
    if isinstance(x, BivariatePolynomial):
        return RationalFunction2.from_poly(x)
    return RationalFunction2(x)


def product(items, start):
    return reduce(lambda a, b: a * b, items, start)
