"""WKB formal solutions of regular eps-difference equations.

A formal solution is ``exp(eps^-1 sum_s phi_s(x) eps^s)`` with
``phi_0' = log lambda_m``.  Substituting it into
``sum_j a_j(x, eps) psi(x + j eps) = 0`` and expanding in eps gives one
linear equation for ``phi_s'`` per order, with divisor
``sum_j j a_j(x, 0) lambda_m^j``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.interpolate import CubicSpline

from .operator import EpsilonEquation
from .spectral import EigenGrid, check_regularity, track_eigenpaths

NOISE_TOL = 1e-3
DIVISOR_TOL = 1e-8


class IrregularEquationError(ValueError):
    """The equation is not regular on the interval; ``report`` has the evidence."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ResidualError(ValueError):
    pass


@dataclass
class FormalJet:
    """Samples of phi_{m,s} on an x-grid; ``phi[s]`` for s = 0..order."""

    m: int
    x: np.ndarray
    phi: list[np.ndarray]
    reliable: list[bool] = field(default_factory=list)
    dphi: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def order(self) -> int:
        return len(self.phi) - 1

    def __call__(self, s: int, x) -> np.ndarray:
        """Cubic-spline evaluation of phi_s off the grid."""
        return CubicSpline(self.x, self.phi[s])(x)

    def derivative(self, s: int, x) -> np.ndarray:
        return CubicSpline(self.x, self.phi[s])(x, 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["x", "s", "re", "im"])
        for s, vals in enumerate(self.phi):
            for xi, v in zip(self.x, vals):
                w.writerow([repr(float(xi)), s, repr(float(v.real)), repr(float(v.imag))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "branch": self.m + 1,
            "x": self.x.tolist(),
            "phi": [[[v.real, v.imag] for v in vals] for vals in self.phi],
            "reliable": self.reliable,
        })


# --------------------------------------------------------------------------
# helpers


def _derivative(x: np.ndarray, y: np.ndarray, k: int, deg: int = 64) -> np.ndarray:
    """k-th derivative of grid data through a Chebyshev least-squares fit."""
    if k == 0:
        return y
    deg = min(deg, len(x) // 2)
    dom = [x[0], x[-1]]
    re = Chebyshev.fit(x, y.real, deg, domain=dom).deriv(k)(x)
    im = Chebyshev.fit(x, y.imag, deg, domain=dom).deriv(k)(x)
    return re + 1j * im


def _integrate_from_left(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    F = CubicSpline(x, dy).antiderivative()
    return F(x) - F(x[0])


def _series_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n + 1,) + a.shape[1:], dtype=complex)
    for i in range(n + 1):
        for k in range(i + 1):
            out[i] += a[k] * b[i - k]
    return out


def _series_exp(b: np.ndarray, n: int) -> np.ndarray:
    """exp of a series with zero constant term, truncated at order n."""
    out = np.zeros((n + 1,) + b.shape[1:], dtype=complex)
    out[0] = 1.0
    for i in range(1, n + 1):
        acc = np.zeros(b.shape[1:], dtype=complex)
        for k in range(1, i + 1):
            acc += k * b[k] * out[i - k]
        out[i] = acc / i
    return out


def eigen_grid(eq: EpsilonEquation, N: int = 1024) -> EigenGrid:
    return track_eigenpaths(eq.char_poly(), N)


def _require_regular(eq: EpsilonEquation, grid: EigenGrid, m: int):
    if not 0 <= m < grid.degree:
        raise IndexError(f"branch {m + 1} out of range 1..{grid.degree}")
    report = check_regularity(grid.poly, grid)
    if not report.regular:
        bits = []
        if report.collisions:
            bits.append(f"collisions at {report.collisions}")
        if report.vanishing:
            bits.append(f"vanishing eigenvalues at {report.vanishing}")
        if report.singular:
            bits.append(f"singular points {[t for t, _ in report.singular]}")
        raise IrregularEquationError("equation is not regular on the interval: " + "; ".join(bits), report)
    return report


def _divisor(a0: np.ndarray, lam: np.ndarray) -> np.ndarray:
    d = a0.shape[0] - 1
    return sum(j * a0[j] * lam ** j for j in range(1, d + 1))


# --------------------------------------------------------------------------
# orders 0 and 1


def phi0(eq: EpsilonEquation, grid: EigenGrid, m: int, check: bool = True) -> FormalJet:
    """phi_0(x) = int_{x_lo}^x log lambda_m(t) dt along the continuous branch."""
    if check:
        _require_regular(eq, grid, m)
    x = grid.t
    return FormalJet(m, x, [_integrate_from_left(x, grid.logs[m])], [True], [grid.logs[m]])


def phi1(eq: EpsilonEquation, grid: EigenGrid, m: int, check: bool = True) -> FormalJet:
    """Order-one correction.

    phi_1' = -(phi_0'' / 2 * sum_j j^2 a_j lambda^j + sum_j (d a_j / d eps) lambda^j)
             / sum_j j a_j lambda^j,
    all at eps = 0 and lambda = lambda_m(x), with phi_0'' = lambda_m' / lambda_m.
    """
    jet = phi0(eq, grid, m, check)
    x = grid.t
    lam = grid.values[m]
    a0 = np.array([eq.coefficients(xi, 0.0) for xi in x]).T
    da = np.array([eq.d_eps(xi) for xi in x]).T
    d = eq.degree
    j = np.arange(d + 1)[:, None]
    powers = lam[None, :] ** j
    div = np.sum(j * a0 * powers, axis=0)
    if np.min(np.abs(div)) < DIVISOR_TOL:
        raise IrregularEquationError("divisor sum_j j a_j lambda^j vanishes on the interval")
    ddlog = _derivative(x, grid.logs[m], 1)
    num = 0.5 * ddlog * np.sum(j ** 2 * a0 * powers, axis=0) + np.sum(da * powers, axis=0)
    dphi1 = -num / div
    jet.phi.append(_integrate_from_left(x, dphi1))
    jet.reliable.append(True)
    jet.dphi.append(dphi1)
    return jet


# --------------------------------------------------------------------------
# higher orders


def _hierarchy(eq: EpsilonEquation, x: np.ndarray, lam: np.ndarray, loglam: np.ndarray,
               S_max: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    d = eq.degree
    ser = np.array([eq.eps_series(xi, S_max) for xi in x])  # (N, d+1, S+1)
    a = np.transpose(ser, (1, 2, 0))  # (d+1, S+1, N)
    div = _divisor(a[:, 0], lam)
    if np.min(np.abs(div)) < DIVISOR_TOL:
        raise IrregularEquationError("divisor sum_j j a_j lambda^j vanishes on the interval")
    dphi = [loglam]
    cache: dict[tuple[int, int], np.ndarray] = {}

    def deriv(s: int, r: int) -> np.ndarray:
        # r-th derivative of phi_s, r >= 1
        if (s, r) not in cache:
            cache[(s, r)] = _derivative(x, dphi[s], r - 1)
        return cache[(s, r)]

    N = len(x)
    for n in range(1, S_max + 1):
        total = np.zeros((n + 1, N), dtype=complex)
        for jj in range(d + 1):
            B = np.zeros((n + 1, N), dtype=complex)
            if jj > 0:
                for k in range(1, n + 1):
                    if k < n:
                        B[k] += jj * dphi[k]
                    for r in range(2, k + 2):
                        B[k] += jj ** r / math.factorial(r) * deriv(k + 1 - r, r)
            coef = a[jj, : n + 1] * lam ** jj
            total += _series_mul(coef, _series_exp(B, n), n)
        dphi.append(-total[n] / div)
    phis = [_integrate_from_left(x, dp) for dp in dphi]
    return phis, dphi


def phi_higher(eq: EpsilonEquation, grid: EigenGrid, m: int, S_max: int = 6,
               check: bool = True, noise_guard: bool = True) -> FormalJet:
    """phi_0 .. phi_{S_max} by the order-by-order hierarchy on the grid.

    Derivatives of lower orders come from Chebyshev fits.  An order is marked
    unreliable when the same computation on every other grid point changes
    it by more than 1e-3 in sup-norm.
    """
    if S_max < 1:
        raise ValueError("S_max must be at least 1")
    if check:
        _require_regular(eq, grid, m)
    x = grid.t
    phis, dphi = _hierarchy(eq, x, grid.values[m], grid.logs[m], S_max)
    reliable = [True] * (S_max + 1)
    if noise_guard and len(x) >= 64:
        half, _ = _hierarchy(eq, x[::2], grid.values[m][::2], grid.logs[m][::2], S_max)
        for s in range(1, S_max + 1):
            reliable[s] = bool(np.max(np.abs(phis[s][::2] - half[s])) <= NOISE_TOL)
    return FormalJet(m, x, phis, reliable, dphi)


# --------------------------------------------------------------------------
# seeds and deflation


def wkb_seed(jet: FormalJet, eps: float, ks, orders: int = 1) -> np.ndarray:
    """Complex logarithms of exp(eps^-1 sum_{s <= orders} phi_s(k eps) eps^s).

    Returned as logs, the log-scaled form consumed by the simulator.
    """
    ks = np.asarray(list(ks), dtype=float)
    xs = jet.x[0] + ks * eps
    if np.any(xs < jet.x[0] - 1e-12) or np.any(xs > jet.x[-1] + 1e-12):
        raise ValueError("seed range leaves the interval of the jet")
    out = np.zeros(len(ks), dtype=complex)
    for s in range(min(orders, jet.order) + 1):
        out += jet(s, xs) * eps ** (s - 1)
    return out


@dataclass(frozen=True)
class DeflatedTable:
    """Tabulated coefficients c_s(k eps) of a deflated equation."""

    eps: float
    x_lo: float
    table: np.ndarray  # (K, d) for k = 0..K-1

    def __call__(self, x: float, eps: complex) -> np.ndarray:
        if abs(complex(eps) - self.eps) > 1e-15 and complex(eps) != 0:
            raise ValueError(f"deflated coefficients are tabulated at eps={self.eps} only")
        k = int(round((x - self.x_lo) / self.eps))
        k = min(max(k, 0), len(self.table) - 1)
        return self.table[k]


def deflate(eq: EpsilonEquation, eps: float, dominant_log: np.ndarray, tol: float = 1e-8) -> EpsilonEquation:
    """Reduce the degree by one using a known solution.

    ``dominant_log[k]`` is log psi_1(x_lo + k eps).  With
    ``b_j = a_j psi_1(x + j eps) / psi_1(x)`` one has ``sum_j b_j = 0`` and
    the new coefficients are ``c_s = sum_{j > s} b_j``; they act on the
    differences of ``psi / psi_1``.
    """
    dominant_log = np.asarray(dominant_log, dtype=complex)
    if not np.all(np.isfinite(dominant_log)):
        raise ValueError("dominant solution has zero or non-finite values")
    d = eq.degree
    lo = eq.interval[0]
    K = len(dominant_log) - d
    if K < 1:
        raise ValueError("dominant solution too short")
    rows = []
    for k in range(K):
        x = lo + k * eps
        a = eq.coefficients(x, eps)
        b = a * np.exp(dominant_log[k : k + d + 1] - dominant_log[k])
        scale = np.sum(np.abs(b))
        if abs(np.sum(b)) > tol * scale:
            raise ResidualError(
                f"sum_j b_j = {abs(np.sum(b)):.2e} at k={k}: dominant input is not a solution"
            )
        c = np.array([np.sum(b[s + 1 :]) for s in range(d)])
        # identity sum_j b_j mu^j = (mu - 1) sum_s c_s mu^s at a test point
        mu = 0.37 + 0.81j
        lhs = np.polyval(b[::-1], mu)
        rhs = (mu - 1) * np.polyval(c[::-1], mu)
        if abs(lhs - rhs) > 1e-9 * (1 + scale):
            raise ResidualError("deflation identity violated")
        rows.append(c)
    table = DeflatedTable(eps, lo, np.array(rows))
    hi = lo + (K - 1) * eps
    name = f"deflated({eq.name or 'equation'}, eps={eps:g})"
    out = EpsilonEquation(d - 1, table, (lo, hi), None, None, name)
    return out


def deflated_to_json(eq: EpsilonEquation) -> str:
    table: DeflatedTable = eq.coeff_fn
    return json.dumps({
        "provenance": eq.name,
        "degree": eq.degree,
        "eps": table.eps,
        "x_lo": table.x_lo,
        "coefficients": [[[c.real, c.imag] for c in row] for row in table.table],
    })
