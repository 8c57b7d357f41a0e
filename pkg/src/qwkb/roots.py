"""Simultaneous polynomial root finding (Aberth-Ehrlich) and root matching."""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment


class DegreeDropError(ArithmeticError):
    """Leading coefficient vanishes, so fewer than d finite roots exist."""


def _initial_guesses(c: np.ndarray) -> np.ndarray:
    # points on a circle around the centroid, radius from the Fujiwara bound
    d = len(c) - 1
    lead = c[-1]
    center = -c[-2] / (d * lead)
    mags = np.abs(c[:-1] / lead)
    k = np.arange(d, 0, -1)
    bound = 2.0 * np.max(mags ** (1.0 / k)) if np.any(mags) else 1.0
    radius = max(bound / 2.0, 1e-3)
    angles = 2 * np.pi * np.arange(d) / d + 0.4
    return center + radius * np.exp(1j * angles)


def aberth(coeffs, seeds=None, maxiter: int = 200, tol: float = 1e-15) -> np.ndarray:
    """All roots of ``sum_j coeffs[j] * z^j``.

    ``coeffs`` is ascending.  ``seeds`` (length d) speeds up continuation.
    Raises :class:`DegreeDropError` when the leading coefficient is
    negligible relative to the others.
    """
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0:
        raise DegreeDropError("zero polynomial")
    c = c / scale
    d = len(c) - 1
    if abs(c[-1]) < 1e-13:
        raise DegreeDropError("leading coefficient vanishes")
    if d == 1:
        return np.array([-c[0] / c[1]])
    p = c[::-1]
    dp = np.polyder(p)
    if seeds is None or len(seeds) != d or not np.all(np.isfinite(seeds)):
        z = _initial_guesses(c)
    else:
        z = np.array(seeds, dtype=complex)
        # break exact coincidences, which stall the Aberth correction
        for i, j in itertools.combinations(range(d), 2):
            if z[i] == z[j]:
                z[j] += 1e-7 * (1 + abs(z[j])) * np.exp(1j * (0.3 + j))
    eye = np.eye(d, dtype=bool)
    for _ in range(maxiter):
        pv = np.polyval(p, z)
        dpv = np.polyval(dp, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dpv != 0, pv / dpv, 0)
            diff = z[:, None] - z[None, :]
            diff[eye] = 1.0
            inv = 1.0 / diff
            inv[eye] = 0.0
            s = inv.sum(axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0)
        z = z - w
        if np.all(np.abs(w) <= tol * (1 + np.abs(z))):
            break
    return polish(c, z)


def polish(coeffs, roots, steps: int = 3) -> np.ndarray:
    """Newton polishing; a step is kept only if it lowers the residual."""
    c = np.asarray(coeffs, dtype=complex)
    p = c[::-1]
    dp = np.polyder(p)
    z = np.array(roots, dtype=complex)
    for _ in range(steps):
        pv = np.polyval(p, z)
        dpv = np.polyval(dp, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - pv / dpv
        ok = np.isfinite(cand) & (np.abs(np.polyval(p, cand)) < np.abs(pv))
        if not np.any(ok):
            break
        z = np.where(ok, cand, z)
    return z


def residual(coeffs, roots) -> np.ndarray:
    c = np.asarray(coeffs, dtype=complex)
    return np.abs(np.polyval(c[::-1], np.asarray(roots)))


def match(reference: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Permutation ``perm`` with ``candidates[perm]`` closest to ``reference`` in total."""
    cost = np.abs(reference[:, None] - candidates[None, :])
    _, cols = linear_sum_assignment(cost)
    return cols


def min_separation(z: np.ndarray) -> float:
    if len(z) < 2:
        return np.inf
    diff = np.abs(z[:, None] - z[None, :])
    diff[np.eye(len(z), dtype=bool)] = np.inf
    return float(diff.min())
