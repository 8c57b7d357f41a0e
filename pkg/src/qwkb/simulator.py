"""Iteration of q- and eps-difference equations in log-scaled arithmetic.

Also: growth-rate extraction with Richardson extrapolation, decomposition of
a solution in a basis of solutions, and numerical checks of the companion
matrix / Vandermonde identities used in the asymptotic analysis.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .logscaled import LogScaledValue, log_sum
from .operator import EpsilonEquation, QOperator, SingularEvaluationError, eval_coefficients
from .roots import min_separation

RESIDUAL_TOL = 1e-8
CANCEL_TOL = 1e-8
LEAD_TOL = 1e-13
COND_LIMIT = 1e12
PUNCTURE_SHIFT = 1e-6


class SingularStepError(ArithmeticError):
    """Leading coefficient vanishes or a coefficient is singular at step k.

    ``trace`` holds the values computed before the abort.
    """

    def __init__(self, message: str, k: int, trace=None):
        super().__init__(message)
        self.k = k
        self.trace = trace


class IllConditionedError(np.linalg.LinAlgError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class RecursionTrace:
    """Values ``f(k)`` (q-mode) or ``psi(x_lo + k eps)`` (eps-mode) as complex logs."""

    mode: str  # "q" or "eps"
    params: dict
    k: np.ndarray
    logs: np.ndarray
    init: tuple
    events: tuple = ()
    complete: bool = True

    @property
    def log_abs(self) -> np.ndarray:
        return self.logs.real

    @property
    def phase(self) -> np.ndarray:
        return np.angle(np.exp(1j * self.logs.imag))

    def value(self, k: int) -> LogScaledValue:
        return LogScaledValue.from_log(complex(self.logs[k]))

    @property
    def x(self) -> np.ndarray:
        if self.mode != "eps":
            raise AttributeError("x-grid only exists for eps-mode traces")
        return self.params["x_lo"] + self.k * self.params["eps"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["k", "log_abs", "phase"])
        for k, la, ph in zip(self.k, self.log_abs, self.phase):
            w.writerow([int(k), repr(float(la)), repr(float(ph))])
        return buf.getvalue()


# --------------------------------------------------------------------------
# iteration core


def _prepare_init(init, d: int) -> np.ndarray:
    if init is None:
        return np.zeros(d, dtype=complex)
    init = list(init)
    if len(init) != d:
        raise ValueError(f"need {d} initial values, got {len(init)}")
    out = []
    for v in init:
        if isinstance(v, LogScaledValue):
            out.append(v.log())
            continue
        z = complex(v)
        if not cmath.isfinite(z):
            raise ValueError("non-finite initial data")
        out.append(cmath.log(z) if z != 0 else complex(-math.inf, 0))
    return np.array(out, dtype=complex)


def _log_coeffs(a: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(a != 0, np.log(a.astype(complex)), complex(-np.inf, 0))


def _run(coeff_at: Callable[[int, float], np.ndarray], d: int, steps: int, init_logs: np.ndarray,
         puncture: bool, prec: int | None):
    """Solve for the top term at k = 0..steps-1; returns logs and events."""
    logs = np.empty(steps + d, dtype=complex)
    logs[:d] = init_logs
    events = []
    mp_vals = None
    if prec is not None:
        mpmath.mp.prec = prec
        mp_vals = [mpmath.exp(mpmath.mpc(z.real, z.imag)) if np.isfinite(z.real) else mpmath.mpc(0)
                   for z in init_logs]
    for k in range(steps):
        try:
            a = coeff_at(k, 0.0)
            lead_ok = abs(a[d]) >= LEAD_TOL * np.max(np.abs(a))
        except SingularEvaluationError:
            a, lead_ok = None, False
        if not lead_ok:
            if not puncture:
                raise SingularStepError(f"singular leading coefficient at step k={k}", k, logs[: k + d].copy())
            a = coeff_at(k, PUNCTURE_SHIFT)
            events.append((k, "punctured: coefficients evaluated at k + 1e-6"))
        if mp_vals is not None:
            s = sum(mpmath.mpc(a[j]) * mp_vals[k + j] for j in range(d))
            new = -s / mpmath.mpc(a[d])
            mp_vals.append(new)
            logs[k + d] = complex(mpmath.log(new)) if new != 0 else complex(-math.inf, 0)
            continue
        la = _log_coeffs(a)
        terms = la[:d] + logs[k : k + d]
        s, ratio = log_sum(terms)
        if ratio < CANCEL_TOL:
            events.append((k, f"cancellation: |sum|/sum|terms| = {ratio:.1e}"))
        logs[k + d] = s + cmath.log(-1 / a[d])
        # residual of the full relation, relative to its largest term
        full = la + logs[k : k + d + 1]
        r, _ = log_sum(full)
        if np.isfinite(r.real) and r.real - np.max(full.real) > math.log(RESIDUAL_TOL):
            raise ArithmeticError(f"recursion residual too large at k={k}")
    return logs, events


def iterate_q(op: QOperator, n: int, alpha: float = 1.0, init=None, puncture: bool = False,
              prec: int | None = None) -> RecursionTrace:
    """f(0..n) for ``sum_j b_j(q^k, q) f(k+j) = 0`` at ``q = exp(2 pi i alpha / n)``.

    ``init`` defaults to all ones.  With ``puncture`` a singular step is
    evaluated at the shifted index k + 1e-6 and recorded, otherwise it
    aborts with :class:`SingularStepError`.  ``prec`` switches to mpmath
    with that many mantissa bits.
    """
    d = op.degree
    if n < d:
        raise ValueError(f"target index n={n} below the degree {d}")
    step = alpha / n
    q = cmath.exp(2j * math.pi * step)

    def coeff_at(k, shift):
        x = 0.0 + (k + shift) * step  # the eps-mode abscissa, same rounding
        Q = cmath.exp(2j * math.pi * x)
        return eval_coefficients(op, Q, q)

    init_logs = _prepare_init(init, d)
    params = {"n": n, "alpha": alpha}
    try:
        logs, events = _run(coeff_at, d, n + 1 - d, init_logs, puncture, prec)
    except SingularStepError as err:
        partial = RecursionTrace("q", params, np.arange(len(err.trace)), err.trace, tuple(init_logs),
                                 complete=False)
        raise SingularStepError(f"{err} (q-mode, n={n}, alpha={alpha})", err.k, partial) from None
    return RecursionTrace("q", params, np.arange(n + 1), logs, tuple(init_logs), tuple(events))


def iterate_eps(eq: EpsilonEquation, eps: float, init=None, puncture: bool = False,
                prec: int | None = None, steps: int | None = None) -> RecursionTrace:
    """psi(x_lo + k eps) for all k with x_lo + k eps in the interval."""
    d = eq.degree
    lo, hi = eq.interval
    K = int(math.floor((hi - lo) / eps + 1e-9))
    if steps is not None:
        if steps > K:
            raise ValueError("requested steps leave the interval")
        K = steps
    if K < d:
        raise ValueError("interval too short for the degree at this eps")

    def coeff_at(k, shift):
        return eq.coefficients(lo + (k + shift) * eps, eps)

    init_logs = _prepare_init(init, d)
    params = {"eps": eps, "x_lo": lo, "x_hi": lo + K * eps}
    try:
        logs, events = _run(coeff_at, d, K + 1 - d, init_logs, puncture, prec)
    except SingularStepError as err:
        partial = RecursionTrace("eps", params, np.arange(len(err.trace)), err.trace, tuple(init_logs),
                                 complete=False)
        raise SingularStepError(f"{err} (eps-mode, eps={eps}, x={lo + err.k * eps:g})", err.k, partial) from None
    return RecursionTrace("eps", params, np.arange(K + 1), logs, tuple(init_logs), tuple(events))


# --------------------------------------------------------------------------
# growth rates


def growth_rate(trace: RecursionTrace) -> float:
    if not trace.complete:
        raise ValueError("trace did not reach its target index")
    last = float(trace.logs[-1].real)
    if trace.mode == "q":
        return last / trace.params["n"]
    return trace.params["eps"] * last


@dataclass
class ConvergenceTable:
    """Rates along a doubling sequence of n (or halving eps) with Richardson limits."""

    params: list[float]
    rates: list[float]
    extrapolated: list[float]
    err_est: list[float]

    @property
    def limit(self) -> float:
        return self.extrapolated[-1]

    @property
    def error(self) -> float:
        return self.err_est[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["n_or_eps", "rate", "extrapolated", "err_est"])
        for row in zip(self.params, self.rates, self.extrapolated, self.err_est):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def richardson(params: Sequence[float], rates: Sequence[float]) -> ConvergenceTable:
    """First-order Richardson extrapolation for a refinement ratio of 2."""
    ext = [float(rates[0])]
    err = [math.nan]
    for i in range(1, len(rates)):
        ext.append(2.0 * rates[i] - rates[i - 1])
        err.append(abs(ext[i] - ext[i - 1]) if i > 1 else abs(rates[i] - rates[i - 1]))
    return ConvergenceTable(list(map(float, params)), list(map(float, rates)), ext, err)


def growth_study(make_trace: Callable[[float], RecursionTrace], params: Sequence[float]) -> ConvergenceTable:
    """Run ``make_trace`` on each parameter (n doubling or eps halving)."""
    return richardson(params, [growth_rate(make_trace(p)) for p in params])


# --------------------------------------------------------------------------
# decomposition in a basis of solutions


@dataclass
class Decomposition:
    coefficients: np.ndarray
    log_coefficients: np.ndarray
    residual: float
    condition: float
    determinant_ratio: float  # |det W / (prod psi_m * Vandermonde)| - 1 -> O(eps)


def _basis_logs(basis, k: int, d: int, eps: float | None) -> np.ndarray:
    out = np.empty((d, len(basis)), dtype=complex)
    for m, b in enumerate(basis):
        if isinstance(b, RecursionTrace):
            out[:, m] = b.logs[k : k + d]
        else:  # a FormalJet
            from .wkb import wkb_seed

            if eps is None:
                raise ValueError("jets need an eps-mode trace")
            out[:, m] = wkb_seed(b, eps, range(k, k + d), orders=b.order)
    return out


def decompose_in_basis(trace: RecursionTrace, basis: Sequence, k: int = 0) -> Decomposition:
    """Coefficients c with ``psi = sum_m c_m psi_m`` from d consecutive values at k.

    ``basis`` holds d solutions as traces or WKB jets.  The linear solve is
    done on rows and columns rescaled by their largest magnitude.
    """
    d = len(basis)
    if len(trace.logs) < k + d:
        raise ValueError("trace too short for the requested index")
    eps = trace.params.get("eps") if trace.mode == "eps" else None
    WL = _basis_logs(basis, k, d, eps)
    rhsL = trace.logs[k : k + d]
    col = np.max(WL.real, axis=0)
    rs = np.max(rhsL.real)
    W = np.exp(WL - col[None, :])
    rhs = np.exp(rhsL - rs)
    cond = float(np.linalg.cond(W))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(f"basis matrix ill-conditioned near collision/resonance (cond={cond:.2e})")
    c = np.linalg.solve(W, rhs)
    residual = float(np.max(np.abs(W @ c - rhs)))
    with np.errstate(divide="ignore"):
        logc = np.where(c != 0, np.log(c.astype(complex)), complex(-np.inf, 0)) + (rs - col)
    coeffs = np.exp(logc)
    # det W against the Vandermonde of the local ratios psi_m(k+1)/psi_m(k)
    det = np.linalg.det(W)
    lam = np.exp(WL[1] - WL[0]) if d > 1 else np.ones(1)
    vand = np.prod([lam[j] - lam[i] for i in range(d) for j in range(i + 1, d)]) if d > 1 else 1.0
    pred = np.exp(np.sum(WL[0] - col)) * vand
    det_ratio = float(abs(det / pred) - 1.0) if pred != 0 else math.inf
    return Decomposition(coeffs, logc, residual, cond, det_ratio)


# --------------------------------------------------------------------------
# linear-algebra identities


def companion(coeffs_monic: Sequence[complex]) -> np.ndarray:
    """Companion matrix of ``z^d + sum_{j<d} c_j z^j`` (ascending c, length d)."""
    c = np.asarray(coeffs_monic, dtype=complex)
    d = len(c)
    A = np.zeros((d, d), dtype=complex)
    A[:-1, 1:] = np.eye(d - 1)
    A[-1] = -c
    return A


def companion_diagonalize(roots: Sequence[complex]) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """``A = M D M^-1`` with M the Vandermonde matrix ``M[i, j] = roots[j]^i``.

    Returns (A, M, D, residual) and raises when roots repeat or the
    reconstruction misses by more than 1e-10.
    """
    r = np.asarray(roots, dtype=complex)
    if len(r) > 1 and min_separation(r) <= 1e-10:
        raise ValueError("companion_diagonalize needs pairwise distinct roots")
    poly = np.poly(r)[::-1]  # ascending, monic
    A = companion(poly[:-1])
    M = np.vander(r, increasing=True).T
    D = np.diag(r)
    recon = M @ D @ np.linalg.inv(M)
    resid = float(np.max(np.abs(recon - A)))
    if resid > 1e-10:
        raise ArithmeticError(f"A = M D M^-1 violated: residual {resid:.2e}")
    return A, M, D, resid


def vandermonde_ratio(x: Sequence[complex], y: Sequence[complex]) -> np.ndarray:
    """``M(x)^-1 M(y)`` entrywise as Lagrange basis values ``prod_{l != i} (y_j - x_l)/(x_i - x_l)``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    d = len(x)
    if len(y) != d:
        raise ValueError("node sets must have equal size")
    if d > 1 and min_separation(x) == 0:
        raise ValueError("coincident x nodes")
    out = np.ones((d, d), dtype=complex)
    for i in range(d):
        for l in range(d):
            if l != i:
                out[i] *= (y - x[l]) / (x[i] - x[l])
    return out


def transfer_matrix(eq: EpsilonEquation, x: float, eps: float) -> np.ndarray:
    a = eq.coefficients(x, eps)
    if abs(a[-1]) < LEAD_TOL * np.max(np.abs(a)):
        raise SingularStepError(f"leading coefficient vanishes at x={x}", 0)
    return companion(a[:-1] / a[-1])


def transfer_norm_probe(eq: EpsilonEquation, eps_list: Sequence[float], span: tuple[float, float] | None = None,
                        C: float = 1.0, N: int = 256) -> dict[float, float]:
    """sup over n of the 2-norm of ``A(n eps) ... A(m eps)`` for each eps.

    The products start at ``span[0]`` and run to ``span[1]``.  Requires the
    eigenvalue magnitudes of the characteristic polynomial to stay below
    ``1 + C eps`` on a grid of N points.
    """
    lo, hi = span if span is not None else eq.interval
    xs = np.linspace(eq.interval[0], eq.interval[1], N)
    radius = max(np.max(np.abs(np.roots(eq.characteristic(x)[::-1]))) for x in xs)
    bound = 1 + C * min(eps_list) + 1e-9
    if radius > bound:
        raise PreconditionError(f"spectral radius {radius:.6g} exceeds 1 + C eps = {bound:.6g}")
    out = {}
    for eps in eps_list:
        m = int(round((lo - eq.interval[0]) / eps))
        n = int(math.floor((hi - eq.interval[0]) / eps + 1e-9))
        P = np.eye(eq.degree, dtype=complex)
        sup = 0.0
        for k in range(m, n):
            P = transfer_matrix(eq, eq.interval[0] + k * eps, eps) @ P
            sup = max(sup, float(np.linalg.norm(P, 2)))
        out[eps] = sup
    return out


# --------------------------------------------------------------------------
# involutions: f(n+2) = f(n+1) + (n+1) f(n), f(1) = 1, f(2) = 2


def involutions_exact(n: int) -> int:
    if n < 1:
        raise ValueError("n must be at least 1")
    a, b = 1, 2  # f(1), f(2)
    if n == 1:
        return a
    for m in range(1, n - 1):
        a, b = b, b + (m + 1) * a
    return b


def involutions_log(n: int) -> float:
    """log f(n) by log-scaled float iteration."""
    if n < 1:
        raise ValueError("n must be at least 1")
    la, lb = 0.0, math.log(2.0)
    if n == 1:
        return la
    for m in range(1, n - 1):
        M = max(lb, math.log(m + 1) + la)
        la, lb = lb, M + math.log(math.exp(lb - M) + math.exp(math.log(m + 1) + la - M))
    return lb


def involution_ratio_log(n: int, exact: bool = True) -> float:
    """log r(n) with r(n) = f(n) / (n^(n/2) exp(-n/2 + sqrt n))."""
    lf = math.log(involutions_exact(n)) if exact else involutions_log(n)
    return lf - (0.5 * n * math.log(n) - 0.5 * n + math.sqrt(n))
