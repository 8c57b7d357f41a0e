"""S-entropies, A-entropies and Mahler measures from tracked eigenvalues."""

from __future__ import annotations

import csv
import enum
import io
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .operator import SingularEvaluationError
from .parser import parse_expression
from .poly import UPoly
from .spectral import (
    ArcPartition,
    CharPoly,
    EigenGrid,
    check_regularity,
    partition_arcs,
    roots_at,
    track_eigenpaths,
)

TWO_PI = 2 * math.pi
QUAD_TOL = 1e-7


class QuadratureError(ArithmeticError):
    pass


class Normalization(str, enum.Enum):
    """How the integral of log chi over the parameter range is scaled.

    With ``m(alpha)`` the mean of ``log chi`` over ``[lo, lo + alpha*(hi-lo)]``:

    * ``unit-interval``: ``m(alpha)`` (integral over [0,1] of log chi(alpha s))
    * ``per-2pi``: ``m(alpha)`` as well, written as ``(1/2pi) int_0^{2pi}``
    * ``raw``: ``(hi - lo) * m(alpha)``, e.g. ``int_0^{2pi} log chi(alpha t) dt``
    * ``interval``: ``alpha * (hi - lo) * m(alpha)``, the integral from lo to
      ``lo + alpha (hi - lo)``; this is the form used on eps-difference intervals.
    """

    UNIT_INTERVAL = "unit-interval"
    PER_2PI = "per-2pi"
    RAW = "raw"
    INTERVAL = "interval"

    @classmethod
    def parse(cls, name: str | "Normalization") -> "Normalization":
        if isinstance(name, Normalization):
            return name
        key = name.strip().lower().replace("π", "pi").replace("_", "-")
        aliases = {"raw-[0,2pi]": "raw", "per-2-pi": "per-2pi", "unit": "unit-interval"}
        return cls(aliases.get(key, key))

    def describe(self) -> str:
        return {
            "unit-interval": "sigma(alpha) = int_0^1 log chi(lo + alpha*s*(hi-lo)) ds",
            "per-2pi": "sigma(alpha) = (1/2pi) int_0^{2pi} log chi(alpha*t) dt (mean over the range)",
            "raw": "sigma(alpha) = int_0^{2pi} log chi(alpha*t) dt (range length times mean)",
            "interval": "sigma(alpha) = int_lo^{lo+alpha*(hi-lo)} log chi(t) dt",
        }[self.value]


# --------------------------------------------------------------------------
# subset selections


@dataclass(frozen=True)
class SubsetSelection:
    """Per-arc sets of magnitude positions (1-based)."""

    sets: tuple[frozenset, ...]
    label: str = ""

    def __post_init__(self):
        for s in self.sets:
            if not s:
                raise ValueError("every arc needs a nonempty subset")

    @classmethod
    def uniform(cls, partition: ArcPartition, positions: Iterable[int], d: int | None = None):
        pos = frozenset(int(p) for p in positions)
        d = d or len(partition.arcs[0].sigma)
        if not pos or min(pos) < 1 or max(pos) > d:
            raise ValueError(f"positions must lie in 1..{d}")
        return cls(tuple(pos for _ in partition.arcs), "positions " + ",".join(map(str, sorted(pos))))

    @classmethod
    def from_branches(cls, partition: ArcPartition, branches: Iterable[int]):
        """Selection following fixed branch labels (rows of the eigen grid, 1-based)."""
        br = sorted({int(b) for b in branches})
        d = len(partition.arcs[0].sigma)
        if not br or br[0] < 1 or br[-1] > d:
            raise ValueError(f"branch labels must lie in 1..{d}")
        sets = []
        for arc in partition.arcs:
            sets.append(frozenset(arc.sigma.index(b - 1) + 1 for b in br))
        return cls(tuple(sets), "branches " + ",".join(map(str, br)))

    def at(self, p: int) -> frozenset:
        return self.sets[p]


# --------------------------------------------------------------------------
# chi and sigma


def _check_not_singular(partition: ArcPartition, t: float):
    for arc in partition.arcs:
        for ts, why in arc.singular:
            if abs(ts - t) < 1e-12 * max(1.0, abs(t)):
                raise SingularEvaluationError(f"chi evaluated at singular point t={ts}: {why}", ts)


def chi_S(partition: ArcPartition, grid: EigenGrid, S: SubsetSelection, t: float) -> float:
    """Largest |lambda| among the selected magnitude positions of the arc containing t.

    Roots are recomputed at t (seeded from the grid) rather than interpolated.
    """
    _check_not_singular(partition, t)
    p = partition.arc_index(t)
    z = roots_at(grid.poly, t, seeds=grid.roots_near_seed(t), strict=False)
    mags = np.sort(np.abs(z))[::-1]
    return float(max(mags[j - 1] for j in S.at(p)))


def _panel_points(partition: ArcPartition, a: float, b: float) -> list[float]:
    singular = {ts for arc in partition.arcs for ts, _ in arc.singular}
    pts = set(partition.breakpoints.tolist()) | singular
    for arc in partition.arcs:
        pts.update(arc.collisions)
    guard = 1e-9 * max(1.0, abs(a), abs(b))
    out: list[float] = []
    # near-coincident points would leave sliver panels; a singular point wins
    for x in sorted(pts):
        if out and x - out[-1] < guard:
            if x in singular:
                out[-1] = x
            continue
        out.append(x)
    return [x for x in out if a + guard < x < b - guard]


def _integrate(f, a: float, b: float, points: Sequence[float], tol: float = QUAD_TOL,
               max_depth: int = 8, epsabs: float = 1e-11) -> tuple[float, float]:
    """Panelwise adaptive Gauss-Kronrod; panels are halved while the estimate is poor."""
    edges = [a, *points, b]
    total, err = 0.0, 0.0

    def panel(lo, hi, depth):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, e = quad(f, lo, hi, epsabs=epsabs, epsrel=1e-10, limit=200)
        if e > tol * 0.1 and depth < max_depth:
            m = 0.5 * (lo + hi)
            v1, e1 = panel(lo, m, depth + 1)
            v2, e2 = panel(m, hi, depth + 1)
            return v1 + v2, e1 + e2
        return val, e

    for lo, hi in zip(edges, edges[1:]):
        if hi > lo:
            v, e = panel(lo, hi, 0)
            total += v
            err += e
    return total, err


def sigma_S(partition: ArcPartition, grid: EigenGrid, S: SubsetSelection, alpha: float,
            normalization: Normalization | str = Normalization.RAW) -> tuple[float, float]:
    """S-entropy at alpha and its quadrature error estimate."""
    norm = Normalization.parse(normalization)
    lo, hi = grid.poly.param.lo, grid.poly.param.hi
    span = hi - lo
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0:
        if norm is Normalization.INTERVAL:
            return 0.0, 0.0
        mean, err = math.log(chi_S(partition, grid, S, lo)), 0.0
    else:
        b = lo + alpha * span
        val, err = _integrate(lambda t: math.log(chi_S(partition, grid, S, t)), lo, b,
                              _panel_points(partition, lo, b))
        if err > QUAD_TOL:
            raise QuadratureError(f"quadrature error estimate {err:.2e} above {QUAD_TOL:g}")
        mean, err = val / (alpha * span), err / (alpha * span)
    if norm in (Normalization.UNIT_INTERVAL, Normalization.PER_2PI):
        return mean, err
    if norm is Normalization.RAW:
        return span * mean, span * err
    return alpha * span * mean, alpha * span * err


@dataclass
class EntropyProfile:
    selection: SubsetSelection
    alphas: np.ndarray
    sigmas: np.ndarray
    errors: np.ndarray
    normalization: Normalization
    integrand_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    integrand_log_chi: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duplicates: list[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.selection.label

    def value_at(self, alpha: float) -> float:
        return float(np.interp(alpha, self.alphas, self.sigmas))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["alpha", "sigma"])
        for a, s in zip(self.alphas, self.sigmas):
            w.writerow([repr(float(a)), repr(float(s))])
        return buf.getvalue()

    def integrand_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "chi"])
        for t, lc in zip(self.integrand_t, self.integrand_log_chi):
            w.writerow([repr(float(t)), repr(float(math.exp(lc)))])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "selection": self.label,
            "sets_per_arc": [sorted(s) for s in self.selection.sets],
            "sigma_at_1": float(self.sigmas[-1]) if self.alphas[-1] == 1 else None,
            "normalization": self.normalization.value,
            "normalization_formula": self.normalization.describe(),
            "max_quadrature_error": float(np.max(self.errors)) if len(self.errors) else 0.0,
            "duplicates": self.duplicates,
        }


def _sample_ts(partition: ArcPartition, grid: EigenGrid, n: int = 257) -> np.ndarray:
    lo, hi = grid.poly.param.lo, grid.poly.param.hi
    # offset midpoints avoid breakpoints and singular points
    return lo + (hi - lo) * (np.arange(n) + 0.5 + 1e-3 * math.pi) / n


def entropy_profile(partition: ArcPartition, grid: EigenGrid, S: SubsetSelection,
                    alphas: Sequence[float] | None = None,
                    normalization: Normalization | str = Normalization.RAW) -> EntropyProfile:
    alphas = np.linspace(0, 1, 101) if alphas is None else np.asarray(alphas, dtype=float)
    norm = Normalization.parse(normalization)
    vals, errs = [], []
    for a in alphas:
        v, e = sigma_S(partition, grid, S, float(a), norm)
        vals.append(v)
        errs.append(e)
    ts = _sample_ts(partition, grid)
    logs = np.array([math.log(chi_S(partition, grid, S, t)) for t in ts])
    return EntropyProfile(S, alphas, np.array(vals), np.array(errs), norm, ts, logs)


def entropy_set(partition: ArcPartition, grid: EigenGrid, alphas: Sequence[float] | None = None,
                subsets: Sequence[Iterable[int]] | None = None,
                normalization: Normalization | str = Normalization.RAW,
                max_degree: int = 12) -> list[EntropyProfile]:
    """One profile per distinct chi_S over branch-label subsets.

    Without ``subsets`` all nonempty subsets of the d branch labels are used
    (guarded at ``d <= max_degree``).  Subsets giving the same chi_S samples
    are merged; the merged labels are listed in ``duplicates``.
    """
    d = grid.degree
    if subsets is None:
        if d > max_degree:
            raise ValueError(f"2^{d}-1 subsets exceed the guard (d <= {max_degree}); pass subsets")
        subsets = [c for r in range(1, d + 1) for c in itertools.combinations(range(1, d + 1), r)]
    ts = _sample_ts(partition, grid)
    kept: list[tuple[SubsetSelection, np.ndarray, list[str]]] = []
    for sub in subsets:
        S = SubsetSelection.from_branches(partition, sub)
        sample = np.array([chi_S(partition, grid, S, t) for t in ts])
        for sel, ref, dup in kept:
            if np.allclose(sample, ref, rtol=1e-12, atol=1e-12):
                dup.append(S.label)
                break
        else:
            kept.append((S, sample, []))
    out = []
    for S, _, dup in kept:
        prof = entropy_profile(partition, grid, S, alphas, normalization)
        prof.duplicates = dup
        out.append(prof)
    return out


# --------------------------------------------------------------------------
# A-polynomials


class APolynomial:
    """Polynomial in commuting variables L, M with exact coefficients."""

    def __init__(self, terms: dict[tuple[int, int], object]):
        self.terms = {k: Fraction(v) for k, v in terms.items() if v}
        if not self.terms:
            raise ValueError("zero polynomial")

    @classmethod
    def parse(cls, text: str) -> "APolynomial":
        # reuse the operator grammar with L and M in place of Q and q
        if any(ch in text for ch in "qQE"):
            raise ValueError("A-polynomial text uses the variables L and M")
        elem = parse_expression(text.replace("L", "Q").replace("M", "q"))
        if not elem.is_E_free():
            raise ValueError("not a polynomial")
        r = elem.coeffs.get(0)
        if r is None:
            raise ValueError("zero polynomial")
        if r.den_factors or r.mono[0] < 0 or r.mono[1] < 0:
            raise ValueError("A-polynomial must be a polynomial in L and M")
        return cls(r.numerator.terms)

    @property
    def L_degree(self) -> int:
        return max(a for a, _ in self.terms)

    def L_coefficients(self) -> list[UPoly]:
        out = [UPoly() for _ in range(self.L_degree + 1)]
        for (a, b), c in self.terms.items():
            out[a] = out[a] + UPoly({b: c})
        return out

    def __call__(self, L: complex, M: complex) -> complex:
        return sum(float(c) * L ** a * M ** b for (a, b), c in self.terms.items())

    def to_text(self) -> str:
        parts = []
        for (a, b), c in sorted(self.terms.items(), key=lambda kv: (-kv[0][0], -kv[0][1])):
            mono = "*".join(x for x in ((f"L^{a}" if a > 1 else "L" if a == 1 else ""),
                                        (f"M^{b}" if b > 1 else "M" if b == 1 else "")) if x)
            mag = abs(c)
            body = mono if mono and mag == 1 else (f"{mag}*{mono}" if mono else str(mag))
            parts.append(("-" if c < 0 else "+", body))
        text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        return text + "".join(f" {s} {b}" for s, b in parts[1:])

    def char_poly(self, kind: str = "half-angle") -> CharPoly:
        if self.L_degree < 1:
            raise ValueError("A-polynomial needs positive L-degree")
        return CharPoly.from_upolys(self.L_coefficients(), name="A").with_parametrization(kind)


@dataclass
class SpectralAnalysis:
    poly: CharPoly
    grid: EigenGrid
    partition: ArcPartition


def analyze_poly(P: CharPoly, N: int = 2048) -> SpectralAnalysis:
    grid = track_eigenpaths(P, N)
    report = check_regularity(P, grid)
    return SpectralAnalysis(P, grid, partition_arcs(grid, regularity=report))


def a_entropy(A: APolynomial | str, S: Iterable[int] | SubsetSelection, alpha: float = 1.0,
              normalization: Normalization | str = Normalization.RAW, N: int = 2048) -> float:
    """S-entropy of an A-polynomial with M = e^{it/2}, t in [0, 2pi].

    ``S`` is a set of branch labels (or a ready selection).
    """
    if isinstance(A, str):
        A = APolynomial.parse(A)
    an = analyze_poly(A.char_poly("half-angle"), N)
    sel = S if isinstance(S, SubsetSelection) else SubsetSelection.from_branches(an.partition, S)
    return sigma_S(an.partition, an.grid, sel, alpha, normalization)[0]


# --------------------------------------------------------------------------
# Mahler measure


@dataclass
class MahlerResult:
    value: float
    nested: float
    jensen: float | None
    agree: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "nested_quadrature": self.nested, "jensen": self.jensen,
                "agree": self.agree, "note": self.note}


def _univariate_mahler(p: UPoly) -> float:
    dense = [float(c) for c in p.dense()]
    lead = dense[-1]
    out = math.log(abs(lead))
    if len(dense) > 1:
        for r in np.roots(dense[::-1]):
            out += max(0.0, math.log(abs(r)))
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def _graded_nodes(a: float, b: float, levels: int = 14, ratio: float = 0.2):
    """Gauss-Legendre nodes on [a, b], geometrically graded toward both ends.

    Integrable log singularities at the ends are resolved by the grading.
    """
    m = 0.5 * (a + b)
    cuts = [a + (m - a) * ratio ** k for k in range(levels, 0, -1)]
    edges = [a, *cuts, m, *[b - (x - a) for x in reversed(cuts)], b]
    lo = np.array(edges[:-1])[:, None]
    hi = np.array(edges[1:])[:, None]
    x = 0.5 * (hi - lo) * _GL_X + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * _GL_W
    return x.ravel(), w.ravel()


def _mahler_nested(A: APolynomial) -> float:
    Lc = [[float(c) for c in p.dense()] if not p.is_zero() else [0.0] for p in A.L_coefficients()]
    mins = [p.min_exp() for p in A.L_coefficients()]

    def coeffs(M):
        return np.array([np.polyval(c[::-1], M) * M ** m for c, m in zip(Lc, mins)])

    def inner(phi: float) -> float:
        c = coeffs(np.exp(1j * phi))
        while len(c) > 1 and abs(c[-1]) < 1e-14 * np.max(np.abs(c)):
            c = c[:-1]
        if len(c) == 1:
            return math.log(abs(c[0])) * TWO_PI
        roots = np.roots(c[::-1])
        on = sorted(np.angle(r) % TWO_PI for r in roots if abs(abs(r) - 1) < 1e-6)
        edges = [0.0, *on, TWO_PI] if on else [0.0, math.pi, TWO_PI]
        total = 0.0
        for a, b in zip(edges, edges[1:]):
            if b - a < 1e-14:
                continue
            x, w = _graded_nodes(a, b)
            val = np.abs(np.polyval(c[::-1], np.exp(1j * x)))
            total += float(np.dot(w, np.log(np.maximum(val, 1e-300))))
        return total

    outer, _ = _integrate(inner, 0.0, TWO_PI, [], tol=1e-7, epsabs=1e-9)
    return outer / TWO_PI ** 2


def _mahler_jensen(A: APolynomial, N: int) -> float:
    coeffs = A.L_coefficients()
    lead = _univariate_mahler(coeffs[-1])
    P = CharPoly.from_upolys(coeffs, name="A").with_parametrization("angle")
    an = analyze_poly(P, N)

    def f(t):
        z = roots_at(P, t, seeds=an.grid.roots_near_seed(t), strict=False)
        return float(np.sum(np.maximum(np.log(np.abs(z)), 0.0)))

    pts = _panel_points(an.partition, 0.0, TWO_PI)
    val, _ = _integrate(f, 0.0, TWO_PI, pts, tol=1e-9)
    return lead + val / TWO_PI


def mahler_measure(A: APolynomial | str, N: int = 1024, tol: float = 1e-5) -> MahlerResult:
    """Mahler measure by nested torus quadrature and by Jensen's formula on tracked roots."""
    if isinstance(A, str):
        A = APolynomial.parse(A)
    nested = _mahler_nested(A)
    if A.L_degree < 1:
        return MahlerResult(nested, nested, None, True, "no L dependence; nested quadrature only")
    try:
        jensen = _mahler_jensen(A, N)
    except Exception as exc:  # tracking failure: fall back to the torus integral
        return MahlerResult(nested, nested, None, False, f"root tracking failed ({exc}); nested quadrature only")
    agree = abs(nested - jensen) < tol
    note = "" if agree else f"methods differ by {abs(nested - jensen):.2e}"
    return MahlerResult(jensen, nested, jensen, agree, note)
