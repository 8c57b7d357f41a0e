"""Eigenvalues of characteristic polynomials along the unit circle.

A :class:`CharPoly` is ``sum_j c_j(v) lambda^j`` with a parametrization
``t -> v(t)``.  :func:`track_eigenpaths` follows the d roots continuously,
:func:`check_regularity` looks for collisions, vanishing roots and singular
coefficients, and :func:`partition_arcs` splits the parameter range into arcs
of constant magnitude order.
"""

from __future__ import annotations

import csv
import io
import json
import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .operator import ClassicalCoefficient, SingularEvaluationError
from .poly import UPoly, upoly_exact_div, upoly_gcd, upoly_lcm
from .roots import DegreeDropError, aberth, match, min_separation

TWO_PI = 2 * math.pi

COLLISION_TOL = 1e-8
BISECT_TOL = 1e-10
TIE_TOL = 1e-9
MAX_HALVINGS = 12


# --------------------------------------------------------------------------
# parametrizations


@dataclass(frozen=True)
class Parametrization:
    """Map from a real parameter t to the circle variable v.

    kinds: ``circle`` (v = e^{2 pi i t}, t in [0,1]), ``angle`` (v = e^{it},
    t in [0, 2pi]), ``half-angle`` (v = e^{it/2}, t in [0, 2pi]),
    ``interval`` (v = e^{2 pi i x} on [lo, hi]).
    """

    kind: str = "circle"
    lo: float = 0.0
    hi: float = 1.0
    periodic: bool = True

    @classmethod
    def make(cls, kind: str, interval: Sequence[float] | None = None, periodic: bool | None = None):
        if kind == "circle":
            lo, hi, per = 0.0, 1.0, True
        elif kind == "angle":
            lo, hi, per = 0.0, TWO_PI, True
        elif kind == "half-angle":
            lo, hi, per = 0.0, TWO_PI, False
        elif kind == "interval":
            if interval is None:
                raise ValueError("interval parametrization needs bounds")
            lo, hi, per = float(interval[0]), float(interval[1]), False
        else:
            raise ValueError(f"unknown parametrization {kind!r}")
        if periodic is not None:
            per = periodic
        return cls(kind, lo, hi, per)

    def _scale(self) -> float:
        return {"circle": TWO_PI, "angle": 1.0, "half-angle": 0.5, "interval": TWO_PI}[self.kind]

    def v(self, t):
        return np.exp(1j * self._scale() * np.asarray(t, dtype=float))

    def t_of_v(self, v: complex) -> list[float]:
        """All parameters in [lo, hi] mapping to the unit-circle point v."""
        s = self._scale()
        theta = math.atan2(v.imag, v.real) % TWO_PI
        period = TWO_PI / s
        base = theta / s
        out = []
        k = math.floor((self.lo - base) / period) - 1
        while True:
            t = base + k * period
            if t > self.hi + 1e-12:
                break
            if t >= self.lo - 1e-12:
                out.append(min(max(t, self.lo), self.hi))
            k += 1
        return out

    def describe(self) -> str:
        return {
            "circle": "v = exp(2 pi i t), t in [0, 1]",
            "angle": "v = exp(i t), t in [0, 2 pi]",
            "half-angle": "v = exp(i t / 2), t in [0, 2 pi]",
            "interval": f"v = exp(2 pi i x), x in [{self.lo:g}, {self.hi:g}]",
        }[self.kind]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi, "periodic": self.periodic,
                "description": self.describe()}


# --------------------------------------------------------------------------
# characteristic polynomial


def _primitive_dense(coeffs: Sequence[ClassicalCoefficient]) -> list[UPoly]:
    """Clear denominators, remove the common monomial and polynomial content."""
    live = [c for c in coeffs if not c.is_zero()]
    lcm = upoly_lcm(c.denominator for c in live)
    cleared = []
    for c in coeffs:
        if c.is_zero():
            cleared.append(UPoly())
            continue
        cleared.append(upoly_exact_div(c.numerator * lcm, c.denominator))
    nz = [p for p in cleared if not p.is_zero()]
    shift = min(p.min_exp() for p in nz)
    cleared = [p.shift(-shift) for p in cleared]
    g = nz[0].normalized()
    for p in nz[1:]:
        g = upoly_gcd(g, p)
        if g.degree() == 0:
            break
    if g.degree() > 0:
        cleared = [upoly_exact_div(p, g) if not p.is_zero() else p for p in cleared]
    big = max(abs(v) for p in cleared for v in p.coeffs.values())
    return [p * (1 / big) for p in cleared]


class CharPoly:
    """``sum_j c_j(v) lambda^j`` on a parametrized arc of the unit circle.

    Built either from exact univariate rational coefficients
    (:meth:`from_rational`, :meth:`from_upolys`) or from numeric coefficient
    functions of the parameter (:meth:`from_functions`).
    """

    def __init__(self, degree: int, param: Parametrization, rational=None, fn=None, name: str = ""):
        self.degree = degree
        self.param = param
        self.rational: tuple[ClassicalCoefficient, ...] | None = rational
        self.fn: Callable[[float], np.ndarray] | None = fn
        self.name = name
        self._dense: list[UPoly] | None = None
        self._dense_float: list[tuple[int, np.ndarray]] | None = None
        if rational is not None:
            self._dense = _primitive_dense(rational)
            self._dense_float = [
                (p.min_exp(), np.array([float(c) for c in p.dense()]) if not p.is_zero() else None)
                for p in self._dense
            ]
            if self._dense[-1].is_zero():
                raise ValueError("leading coefficient vanishes identically")
            self._factors = _factor_in_lambda(self._dense)
            self._factors_float = [
                [(p.min_exp(), np.array([float(c) for c in p.dense()]) if not p.is_zero() else None) for p in f]
                for f in self._factors
            ]
        self._singular_cache = None

    # constructors -------------------------------------------------------

    @classmethod
    def from_rational(cls, coeffs: Sequence[ClassicalCoefficient], param: Parametrization | None = None, name: str = ""):
        return cls(len(coeffs) - 1, param or Parametrization.make("circle"), rational=tuple(coeffs), name=name)

    @classmethod
    def from_upolys(cls, coeffs: Sequence[UPoly], param: Parametrization | None = None, name: str = ""):
        rat = []
        for p in coeffs:
            if p.is_zero():
                rat.append(ClassicalCoefficient(0, 0, (), ()))
            else:
                rat.append(ClassicalCoefficient(1, 0, (p,), ()))
        return cls.from_rational(rat, param, name)

    @classmethod
    def from_functions(cls, fn: Callable[[float], Sequence[complex]], degree: int,
                       interval: Sequence[float], name: str = ""):
        param = Parametrization.make("interval", interval)
        return cls(degree, param, fn=lambda t: np.asarray(fn(t), dtype=complex), name=name)

    def with_parametrization(self, kind: str, interval: Sequence[float] | None = None) -> "CharPoly":
        periodic = None
        if kind == "half-angle" and self._dense is not None:
            # v = e^{it/2} closes up on [0, 2 pi] when only even powers of v occur
            periodic = all(e % 2 == 0 for p in self._dense for e in p.coeffs)
        param = Parametrization.make(kind, interval, periodic)
        out = CharPoly.__new__(CharPoly)
        out.__dict__.update(self.__dict__)
        out.param = param
        out._singular_cache = None
        return out

    # evaluation ---------------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self._dense is not None

    @property
    def primitive(self) -> list[UPoly]:
        return list(self._dense) if self._dense is not None else []

    @property
    def factors(self) -> list[list[UPoly]]:
        """Irreducible factors over Q[v] (with multiplicity), coefficients ascending in lambda."""
        return [list(f) for f in self._factors] if self._dense is not None else []

    def factor_coeffs_at(self, t: float) -> list[np.ndarray]:
        v = complex(self.param.v(t))
        out = []
        for f in self._factors_float:
            out.append(np.array([0j if arr is None else np.polyval(arr[::-1], v) * v ** m for m, arr in f]))
        return out

    def coeffs_at(self, t: float) -> np.ndarray:
        """Coefficients (ascending in lambda) used for root finding.

        For exact input these are the cleared primitive coefficients, which
        have the same roots wherever the original ones are finite.
        """
        if self.fn is not None:
            return self.fn(t)
        v = complex(self.param.v(t))
        out = np.zeros(self.degree + 1, dtype=complex)
        for j, (m, arr) in enumerate(self._dense_float):
            if arr is not None:
                out[j] = np.polyval(arr[::-1], v) * v ** m
        return out

    def original_coeffs_at(self, t: float) -> np.ndarray:
        """The uncleared coefficients; raises at singular points."""
        if self.fn is not None:
            return self.fn(t)
        v = complex(self.param.v(t))
        out = np.zeros(self.degree + 1, dtype=complex)
        for j, c in enumerate(self.rational):
            if c.is_zero():
                continue
            num, den = c(v)
            if abs(den) < 1e-13 * (1 + abs(num)):
                raise SingularEvaluationError(f"coefficient c_{j} singular at t={t}", t, j)
            out[j] = num / den
        return out

    def singular_points(self) -> list[tuple[float, str]]:
        """Parameters where a denominator, c_d or c_0 vanishes (exact input only)."""
        if self._dense is None:
            return []
        if self._singular_cache is None:
            self._singular_cache = self._find_singular()
        return list(self._singular_cache)

    def _find_singular(self) -> list[tuple[float, str]]:
        found: list[tuple[float, str]] = []
        seen: set = set()
        for j, c in enumerate(self.rational):
            for f in c.den_factors:
                if f in seen:
                    continue
                seen.add(f)
                for v in f.unit_circle_roots(1e-6):
                    found += [(t, f"denominator {f.to_text()} of c_{j} vanishes") for t in self.param.t_of_v(v)]
        for j, label in ((self.degree, "leading coefficient c_d"), (0, "trailing coefficient c_0")):
            p = self._dense[j]
            if p.is_zero():
                found.append((math.nan, f"{label} vanishes identically"))
                continue
            for v in p.unit_circle_roots(1e-6):
                found += [(t, f"{label} vanishes") for t in self.param.t_of_v(v)]
        found.sort(key=lambda x: x[0])
        out: list[tuple[float, str]] = []
        for t, why in found:
            if out and abs(out[-1][0] - t) < 1e-9:
                if why not in out[-1][1]:
                    out[-1] = (out[-1][0], out[-1][1] + "; " + why)
            else:
                out.append((t, why))
        return out

    def residual(self, t: float, lam: complex) -> float:
        c = self.coeffs_at(t)
        return abs(np.polyval(c[::-1], lam)) / np.sum(np.abs(c))

    def to_text(self, var: str = "v", lam: str = "L") -> str:
        if self._dense is None:
            return f"<numeric characteristic polynomial {self.name}>"
        parts = []
        for j in range(self.degree, -1, -1):
            p = self._dense[j]
            if p.is_zero():
                continue
            mono = "" if j == 0 else (lam if j == 1 else f"{lam}^{j}")
            body = p.to_text(var)
            parts.append(f"({body})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def original_text(self, var: str = "v", lam: str = "L") -> str:
        if self.rational is None:
            return self.to_text(var, lam)
        parts = []
        for j in range(self.degree, -1, -1):
            c = self.rational[j]
            if c.is_zero():
                continue
            num = c.numerator.to_text(var)
            den = c.denominator
            body = f"({num})" if den == UPoly({0: 1}) else f"({num})/({den.to_text(var)})"
            parts.append(body + ("" if j == 0 else f"*{lam}^{j}"))
        return " + ".join(parts)


def roots_at(P: CharPoly, t: float, seeds=None, strict: bool = True) -> np.ndarray:
    """All d roots of ``P(v(t), .)``, polished.

    With ``strict`` a singular coefficient at t raises
    :class:`SingularEvaluationError`; a vanishing leading coefficient always
    raises :class:`DegreeDropError`.
    """
    if strict and P.is_exact:
        for ts, why in P.singular_points():
            if abs(ts - t) < 1e-12 * max(1.0, abs(t)) and "denominator" in why:
                raise SingularEvaluationError(f"coefficient singular at t={t}: {why}", t)
    if P.is_exact:
        return _factored_roots(P.factor_coeffs_at(t), seeds, t)
    c = P.coeffs_at(t)
    if not np.all(np.isfinite(c)):
        raise SingularEvaluationError(f"coefficient singular at t={t}", t)
    if abs(c[-1]) < 1e-13 * np.max(np.abs(c)):
        raise DegreeDropError(f"degree drop at t={t}")
    return aberth(c, seeds)


def _quadratic_roots(c: np.ndarray) -> np.ndarray:
    # cancellation-free formula; the second root from Vieta keeps x1*x2 = c0/c2 exact
    c0, c1, c2 = (complex(x) for x in c)
    s = cmath.sqrt(c1 * c1 - 4 * c2 * c0)
    if (c1.conjugate() * s).real < 0:
        s = -s
    w = -(c1 + s) / 2
    if w == 0:
        return np.zeros(2, dtype=complex)
    return np.array([w / c2, c0 / w])


def _factored_roots(factors: list[np.ndarray], seeds, t: float) -> np.ndarray:
    slots = []
    for k, c in enumerate(factors):
        if abs(c[-1]) < 1e-13 * np.max(np.abs(c)):
            raise DegreeDropError(f"degree drop at t={t}")
        slots += [k] * (len(c) - 1)
    if len(factors) == 1:
        c = factors[0]
        return _quadratic_roots(c) if len(c) == 3 else aberth(c, seeds)
    per_factor: list = [None] * len(factors)
    if seeds is not None and len(seeds) == len(slots):
        # give each factor the seeds where it is smallest
        seeds = np.asarray(seeds, dtype=complex)
        cost = np.empty((len(seeds), len(slots)))
        for col, k in enumerate(slots):
            c = factors[k]
            val = np.abs(np.polyval(c[::-1], seeds)) / np.sum(np.abs(c))
            cost[:, col] = np.log(val + 1e-300)
        rows, cols = linear_sum_assignment(cost)
        for k in range(len(factors)):
            per_factor[k] = seeds[[r for r, c in zip(rows, cols) if slots[c] == k]]
    out = []
    for k, c in enumerate(factors):
        if len(c) == 2:
            out.append(np.array([-c[0] / c[1]]))
        elif len(c) == 3:
            out.append(_quadratic_roots(c))
        else:
            out.append(aberth(c, per_factor[k]))
    return np.concatenate(out)


def _factor_in_lambda(dense: list[UPoly]) -> list[list[UPoly]]:
    """Factor sum_j dense[j](v) lambda^j over Q[v]; drop factors free of lambda."""
    import sympy

    v, lam = sympy.symbols("v lam")
    expr = sum(
        sympy.Rational(c.numerator, c.denominator) * v ** e * lam ** j
        for j, p in enumerate(dense)
        for e, c in p.coeffs.items()
    )
    _, factors = sympy.factor_list(sympy.expand(expr), lam, v)
    out = []
    for f, mult in factors:
        poly = sympy.Poly(f, lam, v)
        if poly.degree(lam) < 1:
            continue
        coeffs = [UPoly() for _ in range(poly.degree(lam) + 1)]
        for (j, e), c in poly.terms():
            coeffs[j] = coeffs[j] + UPoly({e: Fraction(int(c.p), int(c.q))})
        out += [coeffs] * mult
    return out


# --------------------------------------------------------------------------
# tracking


@dataclass
class EigenGrid:
    t: np.ndarray
    values: np.ndarray  # (d, N)
    logs: np.ndarray  # (d, N)
    poly: CharPoly = field(repr=False)
    min_separation: float = math.inf
    min_modulus: float = math.inf
    collision_events: list = field(default_factory=list)
    singular_events: list = field(default_factory=list)
    seam: float | None = None

    @property
    def degree(self) -> int:
        return self.values.shape[0]

    def column_index(self, t: float) -> int:
        return int(np.clip(np.searchsorted(self.t, t), 1, len(self.t) - 1))

    def roots_near(self, t: float) -> np.ndarray:
        """Roots at an arbitrary t, ordered to match the tracked rows."""
        i = self.column_index(t)
        t0, t1 = self.t[i - 1], self.t[i]
        w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
        ref = (1 - w) * self.values[:, i - 1] + w * self.values[:, i]
        z = roots_at(self.poly, t, seeds=ref, strict=False)
        return z[match(ref, z)]

    def roots_near_seed(self, t: float) -> np.ndarray:
        return self.values[:, self.column_index(t)]

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def to_dict(self) -> dict:
        return {
            "parametrization": self.poly.param.to_dict(),
            "t": self.t.tolist(),
            "values": [[[z.real, z.imag] for z in row] for row in self.values],
            "logs": [[[z.real, z.imag] for z in row] for row in self.logs],
            "min_separation": self.min_separation,
            "min_modulus": self.min_modulus,
            "collision_events": list(self.collision_events),
            "seam": self.seam,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "m", "re", "im", "abs", "log_re", "log_im"])
        for i, t in enumerate(self.t):
            for m in range(self.degree):
                z, lz = self.values[m, i], self.logs[m, i]
                w.writerow([repr(float(t)), m + 1, repr(z.real), repr(z.imag), repr(abs(z)),
                            repr(lz.real), repr(lz.imag)])
        return buf.getvalue()


def _predict(cols: list[np.ndarray], ts: list[float], t: float) -> np.ndarray:
    if len(cols) < 2 or ts[-1] == ts[-2]:
        return cols[-1]
    return cols[-1] + (cols[-1] - cols[-2]) * (t - ts[-1]) / (ts[-1] - ts[-2])


def _continuous_logs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(values))
    ang = np.unwrap(np.angle(values), axis=1)
    return mag + 1j * ang


def _canonical_order(values: np.ndarray, scale: float) -> np.ndarray:
    """Row order: varying rows by descending |lambda| then arg, constant rows last."""
    d, n = values.shape
    ref = 0
    for i in range(n):
        col = values[:, i]
        if min_separation(col) > 1e-6 * scale and np.min(np.abs(col)) > 1e-6 * scale:
            ref = i
            break
    col = values[:, ref]
    const = np.max(np.abs(values - col[:, None]), axis=1) < 1e-9 * scale
    mags = np.round(np.abs(col), 9)
    keys = [(bool(const[m]), -mags[m], round(float(np.angle(col[m])), 9), m) for m in range(d)]
    return np.array([k[-1] for k in sorted(keys)])


def track_eigenpaths(P: CharPoly, N: int = 512, max_halvings: int = MAX_HALVINGS) -> EigenGrid:
    """Follow the d roots continuously over the parameter range."""
    if N < 16:
        raise ValueError("grid size must be at least 16")
    lo, hi = P.param.lo, P.param.hi
    span = hi - lo
    base = np.linspace(lo, hi, N)
    ts: list[float] = []
    cols: list[np.ndarray] = []
    collisions: list[float] = []
    singular: list[tuple[float, str]] = []

    def solve(t: float, seeds):
        try:
            return t, roots_at(P, t, seeds=seeds, strict=False)
        except (DegreeDropError, SingularEvaluationError) as exc:
            # nudge into the interior; the point itself is reported singular
            singular.append((t, str(exc)))
            tn = t + 1e-9 * span if t < hi else t - 1e-9 * span
            return tn, roots_at(P, tn, seeds=seeds, strict=False)

    t0, z0 = solve(base[0], None)
    ts.append(t0)
    cols.append(z0)

    def step(tb: float, depth: int):
        ta, za = ts[-1], cols[-1]
        pred = _predict(cols, ts, tb)
        tb_eff, zb = solve(tb, pred)
        zb = zb[match(pred, zb)]
        disp = np.max(np.abs(zb - za))
        if disp > 0.5 * min_separation(za):
            if depth < max_halvings:
                step(0.5 * (ta + tb), depth + 1)
                step(tb, depth + 1)
                return
            collisions.append(float(ta))
        ts.append(tb_eff)
        cols.append(zb)

    for tb in base[1:]:
        step(float(tb), 0)

    t_arr = np.array(ts)
    values = np.array(cols).T
    seam = None
    if P.param.periodic and values.shape[0] > 1 and len(ts) > 3:
        values, seam = _wrap_merge(t_arr, values, lo, hi)

    scale = max(1.0, float(np.max(np.abs(values))))
    order = _canonical_order(values, scale)
    values = values[order]
    logs = _continuous_logs(values)
    seps = [min_separation(values[:, i]) for i in range(values.shape[1])]
    return EigenGrid(
        t=t_arr,
        values=values,
        logs=logs,
        poly=P,
        min_separation=float(np.min(seps)),
        min_modulus=float(np.min(np.abs(values))),
        collision_events=_dedupe(collisions, 1e-6 * span),
        singular_events=singular,
        seam=seam,
    )


def _wrap_merge(t: np.ndarray, fwd: np.ndarray, lo: float, hi: float):
    """Re-label the tail by continuing the head backwards through the wrap point.

    The forward sweep gives labels that are arbitrary after an unresolvable
    (square-root type) collision.  A backward sweep seeded by continuing the
    first forward columns through t = lo = hi fixes labels near the end of
    the range; the two are joined where they disagree least.
    """
    n = fwd.shape[1]
    cols = [fwd[:, 2], fwd[:, 1]]
    ts = [hi + (t[2] - lo), hi + (t[1] - lo)]
    bwd = np.empty_like(fwd)
    for i in range(n - 1, -1, -1):
        pred = _predict(cols, ts, t[i])
        z = fwd[:, i]
        z = z[match(pred, z)]
        bwd[:, i] = z
        cols.append(z)
        ts.append(t[i])
    mismatch = np.max(np.abs(fwd - bwd), axis=0)
    scale = max(1.0, float(np.max(np.abs(fwd))))
    if np.max(mismatch) < 1e-9 * scale:
        return fwd, None
    inner = mismatch[1:-1]
    s = 1 + int(np.argmin(inner))
    merged = np.concatenate([fwd[:, : s + 1], bwd[:, s + 1 :]], axis=1)
    return merged, float(t[s])


# --------------------------------------------------------------------------
# regularity


def golden_minimize(f: Callable[[float], float], a: float, b: float, tol: float = 1e-13) -> tuple[float, float]:
    """Golden-section search for a minimum of f on [a, b]."""
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    best = [(f(a), a), (f(b), b), (fc, c), (fd, d)]
    fx, x = min(best)
    return x, fx


def _local_minima(y: np.ndarray) -> list[int]:
    n = len(y)
    out = []
    for i in range(n):
        left = y[i - 1] if i > 0 else np.inf
        right = y[i + 1] if i < n - 1 else np.inf
        if y[i] <= left and y[i] <= right and np.isfinite(y[i]):
            out.append(i)
    return out


@dataclass
class RegularityReport:
    regular: bool
    min_separation: float
    min_modulus: float
    min_c0: float
    min_cd: float
    collisions: list[float]
    vanishing: list[float]
    singular: list[tuple[float, str]]
    tolerance: float
    parametrization: dict

    def to_dict(self) -> dict:
        return {
            "verdict": "regular" if self.regular else "irregular",
            "min_separation": self.min_separation,
            "min_modulus": self.min_modulus,
            "min_abs_c0": self.min_c0,
            "min_abs_cd": self.min_cd,
            "collisions": self.collisions,
            "vanishing": self.vanishing,
            "singular": [{"t": t, "reason": r} for t, r in self.singular],
            "tolerance": self.tolerance,
            "parametrization": self.parametrization,
        }


def _dedupe(ts: list[float], tol: float) -> list[float]:
    out: list[float] = []
    for t in sorted(ts):
        if not out or abs(t - out[-1]) > tol:
            out.append(t)
    return out


def check_regularity(P: CharPoly, grid: EigenGrid, tol: float = COLLISION_TOL) -> RegularityReport:
    """Collisions, vanishing roots and vanishing c_0 / c_d over the range.

    Collisions are judged on the squared pairwise separation relative to the
    root scale (double roots are only resolved to about sqrt(machine eps)),
    and must be a genuine dip of the separation, localized by golden section.
    """
    t = grid.t
    lo, hi = P.param.lo, P.param.hi
    scale = max(1.0, float(np.max(np.abs(grid.values))))
    seps = np.array([min_separation(grid.values[:, i]) for i in range(len(t))])
    mods = np.min(np.abs(grid.values), axis=0)
    coeff_mag = []
    for ti in t:
        c = P.coeffs_at(ti)
        s = np.sum(np.abs(c))
        coeff_mag.append((abs(c[0]) / s, abs(c[-1]) / s))
    coeff_mag = np.array(coeff_mag)

    def sep_at(x: float) -> float:
        try:
            return min_separation(roots_at(P, x, seeds=grid.roots_near_seed(x), strict=False))
        except DegreeDropError:
            return 0.0

    def mod_at(x: float) -> float:
        try:
            return float(np.min(np.abs(roots_at(P, x, seeds=grid.roots_near_seed(x), strict=False))))
        except DegreeDropError:
            return 0.0

    def bracket(i: int) -> tuple[float, float]:
        return float(t[max(i - 1, 0)]), float(t[min(i + 1, len(t) - 1)])

    def dip(f, i: int, thresh: float) -> float | None:
        # a genuine zero of f: deep relative to the bracket ends, unless the
        # minimum sits on an end of the whole range
        a, b = bracket(i)
        x, fx = golden_minimize(f, a, b)
        if fx >= thresh:
            return None
        ends = [f(e) for e in (a, b) if e not in (lo, hi)]
        if ends and fx > 0.1 * min(ends):
            return None
        return x

    collisions = []
    for i in sorted(set(_local_minima(seps)) | {grid.column_index(c) for c in grid.collision_events}):
        x = dip(sep_at, i, math.sqrt(tol) * scale)
        if x is not None:
            collisions.append(x)
    vanishing = []
    for i in _local_minima(mods):
        if mods[i] > 0.5:
            continue
        x = dip(mod_at, i, tol * scale)
        if x is not None:
            vanishing.append(x)
    singular = list(P.singular_points())
    if not P.is_exact:
        for col, label in ((0, "trailing coefficient c_0 vanishes"), (1, "leading coefficient c_d vanishes")):
            for i in _local_minima(coeff_mag[:, col]):
                a, b = bracket(i)

                def g(x, col=col):
                    c = P.coeffs_at(x)
                    return abs(c[0 if col == 0 else -1]) / np.sum(np.abs(c))

                x, fx = golden_minimize(g, a, b)
                if fx < tol:
                    singular.append((x, label))
    span = hi - lo
    report = RegularityReport(
        regular=False,
        min_separation=float(np.min(seps)),
        min_modulus=float(np.min(mods)),
        min_c0=float(np.min(coeff_mag[:, 0])),
        min_cd=float(np.min(coeff_mag[:, 1])),
        collisions=_dedupe(collisions, 1e-6 * span),
        vanishing=_dedupe(vanishing, 1e-6 * span),
        singular=[s for s in singular if lo - 1e-12 <= s[0] <= hi + 1e-12],
        tolerance=tol,
        parametrization=P.param.to_dict(),
    )
    report.regular = not (report.collisions or report.vanishing or report.singular)
    return report


# --------------------------------------------------------------------------
# arc partition


@dataclass
class Arc:
    lo: float
    hi: float
    sigma: tuple[int, ...]  # sigma[pos] = row index (0-based), descending |lambda|
    resonance: list[tuple[int, ...]] = field(default_factory=list)
    collisions: list[float] = field(default_factory=list)
    singular: list[tuple[float, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "sigma": [s + 1 for s in self.sigma],
            "resonance": [[s + 1 for s in grp] for grp in self.resonance],
            "collision": self.collisions,
            "singular": [{"t": t, "reason": r} for t, r in self.singular],
        }


@dataclass
class ArcPartition:
    breakpoints: np.ndarray
    arcs: list[Arc]
    parametrization: dict
    regularity: RegularityReport | None = None

    def arc_index(self, t: float) -> int:
        """Arc containing t; a breakpoint belongs to the arc on its left."""
        b = self.breakpoints
        if t <= b[0]:
            return 0
        i = int(np.searchsorted(b, t, side="left")) - 1
        return int(min(max(i, 0), len(self.arcs) - 1))

    def resonance_intervals(self) -> list[tuple[float, float, tuple[int, ...]]]:
        out = []
        for a in self.arcs:
            for grp in a.resonance:
                out.append((a.lo, a.hi, grp))
        return out

    def to_dict(self) -> dict:
        return {
            "parametrization": self.parametrization,
            "breakpoints": self.breakpoints.tolist(),
            "arcs": [a.to_dict() for a in self.arcs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _bisect(pred: Callable[[float], bool], a: float, b: float, tol: float) -> float:
    """Boundary between pred(a) and not pred(a) on [a, b]."""
    pa = pred(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        if pred(m) == pa:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


def partition_arcs(grid: EigenGrid, tie_tol: float = TIE_TOL, bisect_tol: float = BISECT_TOL,
                   regularity: RegularityReport | None = None) -> ArcPartition:
    """Split the range where the magnitude order of the tracked rows changes."""
    P = grid.poly
    t = grid.t
    d = grid.degree
    lo, hi = P.param.lo, P.param.hi
    mags = grid.magnitudes()
    if regularity is None:
        regularity = check_regularity(P, grid)

    def tied(gv: float, ref: float) -> bool:
        return abs(gv) < tie_tol * max(1.0, ref)

    breaks: list[float] = []
    tie_intervals: dict[tuple[int, int], list[tuple[float, float]]] = {}
    for i in range(d):
        for j in range(i + 1, d):
            g = mags[i] - mags[j]
            ref = np.maximum(mags[i], mags[j])
            tie = np.array([tied(g[k], ref[k]) for k in range(len(t))])

            def gap(x, i=i, j=j):
                z = np.abs(grid.roots_near(x))
                return z[i] - z[j], max(z[i], z[j])

            def is_tie(x):
                gv, r = gap(x)
                return tied(gv, r)

            # runs of ties with at least three grid points
            runs = []
            k = 0
            while k < len(t):
                if tie[k]:
                    s = k
                    while k + 1 < len(t) and tie[k + 1]:
                        k += 1
                    if k - s + 1 >= 3:
                        runs.append((s, k))
                k += 1
            in_run = np.zeros(len(t), dtype=bool)
            ivs = []
            for s, e in runs:
                in_run[s : e + 1] = True
                a = lo if s == 0 else _bisect(is_tie, float(t[s - 1]), float(t[s]), bisect_tol)
                b = hi if e == len(t) - 1 else _bisect(is_tie, float(t[e]), float(t[e + 1]), bisect_tol)
                ivs.append((a, b))
                breaks += [a, b]
            tie_intervals[(i, j)] = ivs
            # sign changes outside tie runs
            valid = [k for k in range(len(t)) if not in_run[k] and not tie[k]]
            for k1, k2 in zip(valid, valid[1:]):
                if in_run[k1:k2].any():
                    continue
                if np.sign(g[k1]) != np.sign(g[k2]):
                    x = _bisect(lambda x: gap(x)[0] > 0, float(t[k1]), float(t[k2]), bisect_tol)
                    breaks.append(x)

    breaks = [b for b in breaks if lo + bisect_tol < b < hi - bisect_tol]
    pts = [lo] + _dedupe(breaks, 2 * bisect_tol) + [hi]

    def arc_data(a: float, b: float):
        inside = [k for k in range(len(t)) if a < t[k] < b]
        samples = mags[:, inside] if inside else np.abs(grid.roots_near(0.5 * (a + b)))[:, None]
        mid = samples[:, len(inside) // 2] if inside else samples[:, 0]
        sigma = tuple(sorted(range(d), key=lambda m: (-round(float(mid[m]), 9), m)))
        groups = []
        parent = list(range(d))

        def find(x):
            while parent[x] != x:
                x = parent[x]
            return x

        for (i, j), ivs in tie_intervals.items():
            if any(x0 <= a + 1e-9 and b - 1e-9 <= x1 for x0, x1 in ivs):
                parent[find(j)] = find(i)
        comps: dict[int, list[int]] = {}
        for m in range(d):
            comps.setdefault(find(m), []).append(m)
        groups = [tuple(sorted(c)) for c in comps.values() if len(c) > 1]
        return sigma, sorted(groups)

    arcs: list[Arc] = []
    for a, b in zip(pts, pts[1:]):
        sigma, groups = arc_data(a, b)
        if arcs and arcs[-1].sigma == sigma and arcs[-1].resonance == groups:
            arcs[-1].hi = b
            continue
        arcs.append(Arc(a, b, sigma, groups))
    span = hi - lo
    for arc in arcs:
        arc.collisions = [c for c in regularity.collisions
                          if abs(c - arc.lo) < 1e-6 * span or abs(c - arc.hi) < 1e-6 * span
                          or arc.lo < c < arc.hi]
        arc.singular = [s for s in regularity.singular if arc.lo - 1e-12 <= s[0] <= arc.hi + 1e-12]
    bps = np.array([arcs[0].lo] + [a.hi for a in arcs])
    return ArcPartition(bps, arcs, P.param.to_dict(), regularity)
