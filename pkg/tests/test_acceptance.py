"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS`` or ``FAIL`` line before asserting, so
``pytest -s`` gives a readable summary.
"""

from __future__ import annotations

import json
import math
import time

import numpy as np
import pytest

from qwkb.builtins import FIGURE8_A, resolve
from qwkb.cli import main
from qwkb.entropy import SubsetSelection, entropy_set, mahler_measure, sigma_S
from qwkb.operator import equation_from_functions, parse_operator, specialize_classical, to_epsilon_form
from qwkb.simulator import (
    SingularStepError,
    companion_diagonalize,
    decompose_in_basis,
    growth_rate,
    involution_ratio_log,
    involutions_exact,
    iterate_eps,
    iterate_q,
    transfer_norm_probe,
    vandermonde_ratio,
)
from qwkb.spectral import check_regularity, roots_at, track_eigenpaths
from qwkb.wkb import deflate, eigen_grid, phi1, phi_higher, wkb_seed

RNG = np.random.default_rng(20240601)


VERDICTS: list[str] = []


def verdict(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    VERDICTS.append(line)
    print("\n" + line)
    assert ok, detail


def constant_eq(coeffs):
    return equation_from_functions(lambda x, e: list(coeffs), len(coeffs) - 1, (0.0, 1.0), None)


def random_roots(d, lo=0.3, hi=3.0):
    # distinct moduli so that every instance is regular
    mags = np.sort(RNG.uniform(lo, hi, d))[::-1]
    while d > 1 and np.min(-np.diff(mags)) < 0.05:
        mags = np.sort(RNG.uniform(lo, hi, d))[::-1]
    return mags * np.exp(2j * np.pi * RNG.random(d))


# --------------------------------------------------------------------------


def test_c01_figure8_entropy(tmp_path):
    t0 = time.perf_counter()
    code = main(["entropy", "figure8", "--subsets", "1,3", "--alpha", "1", "--grid", "2048",
                 "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    sigma = json.loads((tmp_path / "entropy_summary.json").read_text())["selections"][0]["sigma"]
    ok = code == 0 and abs(sigma - 2.029883) < 1e-3 and elapsed < 30
    verdict(1, ok, f"sigma_(1,3)(1) = {sigma:.9f} vs 2.029883, {elapsed:.1f} s")


def test_c02_figure8_full_set(figure8):
    part, grid = figure8.partition, figure8.grid
    s13 = sigma_S(part, grid, SubsetSelection.from_branches(part, [1, 3]), 1.0)[0]
    sall = sigma_S(part, grid, SubsetSelection.from_branches(part, [1, 2, 3]), 1.0)[0]
    ok = abs(sall - 4.05977) < 2e-3 and abs(sall - 2 * s13) < 1e-6
    verdict(2, ok, f"sigma_all = {sall:.9f}, |sigma_all - 2 sigma_13| = {abs(sall - 2 * s13):.1e}")


def test_c03_trefoil_zero(trefoil):
    profs = entropy_set(trefoil.partition, trefoil.grid, [1.0])
    worst = max(abs(p.sigmas[-1]) for p in profs)
    count = sum(1 + len(p.duplicates) for p in profs)
    verdict(3, worst < 1e-9, f"max |sigma_S(1)| over {count} subsets ({len(profs)} distinct) = {worst:.1e}")


def test_c04_figure8_spectral(figure8):
    P, grid, part = figure8.poly, figure8.grid, figure8.partition
    rep = check_regularity(P, grid)
    res = part.resonance_intervals()
    lo, hi, grp = res[0]
    targets = [0.0, lo, hi, 2 * math.pi]
    found = all(min(abs(c - t) for c in rep.collisions) < 1e-6 for t in targets)
    bounds_ok = abs(lo - 2 * math.pi / 3) < 1e-6 and abs(hi - 4 * math.pi / 3) < 1e-6
    worst = 0.0
    for t in np.linspace(lo, hi, 41)[1:-1]:
        if abs(t - math.pi) < 1e-3:
            continue  # singular point of the operator
        mods = np.sort(np.abs(np.abs(roots_at(P, t)) - 1))[: len(grp)]
        worst = max(worst, float(np.max(mods)))
    recorded = rep.parametrization.get("kind") == "angle" and part.parametrization is not None
    ok = found and bounds_ok and len(grp) >= 2 and worst < 1e-8 and recorded
    verdict(4, ok, f"collisions {[round(c, 8) for c in rep.collisions]}, resonance [{lo:.8f}, {hi:.8f}] "
                   f"size {len(grp)}, max ||lambda|-1| = {worst:.1e}")


def test_c05_regularity_classification():
    results = {}
    for name in ("trefoil", "figure8"):
        P = resolve(name).char_poly("angle")
        rep = check_regularity(P, track_eigenpaths(P, 1024))
        results[name] = (rep.regular, bool(rep.collisions or rep.singular or rep.vanishing))
    synth = specialize_classical(parse_operator("E^2 - (Q+1)*E + Q")).with_parametrization("circle")
    rep = check_regularity(synth, track_eigenpaths(synth, 1024))
    results["(l-1)(l-v)"] = (rep.regular, bool(rep.collisions))
    reg = specialize_classical(parse_operator("E^2 - 3*E + 2")).with_parametrization("circle")
    rep = check_regularity(reg, track_eigenpaths(reg, 1024))
    ok = all(not r and ev for r, ev in results.values()) and rep.regular
    verdict(5, ok, f"irregular with evidence: {results}; E^2-3E+2 regular: {rep.regular}")


def test_c06_growth_rates():
    eq = resolve("const-d2").epsilon_equation()
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        tr = iterate_eps(eq, eps, init=[1.0, 0.3 + 0.1j])
        errs.append(float(abs(eps * tr.log_abs[-1] - math.log(2)) / eps))
    first = resolve("synthetic-firstorder").epsilon_equation()
    rate = growth_rate(iterate_eps(first, 1e-4))
    exact = 3 * math.log(3) - 2 * math.log(2) - 1
    ok = max(errs) <= 5 and abs(rate - exact) < 2e-3
    verdict(6, ok, f"const-d2 error/eps = {[round(e, 4) for e in errs]}; first-order rate {rate:.7f} "
                   f"vs {exact:.7f}")


def test_c07_translation_identity():
    n, alpha = 1000, 1.0
    notes, worst = [], 0.0
    for name in ("trefoil", "figure8", "const-d2"):
        op = resolve(name).operator
        eq = to_epsilon_form(op)
        try:
            a = iterate_q(op, n, alpha)
            b = iterate_eps(eq, alpha / n, steps=n)
            worst = max(worst, float(np.max(np.abs(a.log_abs - b.log_abs))))
            notes.append(f"{name}: full run")
        except SingularStepError as err_q:
            # both modes must stop at the same step with the same prefix
            with pytest.raises(SingularStepError) as err_e:
                iterate_eps(eq, alpha / n, steps=n)
            assert err_q.k == err_e.value.k
            pa, pb = err_q.trace.log_abs, err_e.value.trace.log_abs
            worst = max(worst, float(np.max(np.abs(pa - pb))))
            a = iterate_q(op, n, alpha, puncture=True)
            b = iterate_eps(eq, alpha / n, steps=n, puncture=True)
            worst = max(worst, float(np.max(np.abs(a.log_abs - b.log_abs))))
            notes.append(f"{name}: singular at k={err_q.k}, punctured runs compared")
    verdict(7, worst < 1e-9, f"max log-magnitude difference {worst:.1e} ({'; '.join(notes)})")


def _phi1_oracle(xs):
    # Richardson over eps of log|psi| - phi_0/eps for the dominant solution of synthetic-2x
    eq = resolve("synthetic-2x").epsilon_equation()
    grid = eigen_grid(eq, 1024)
    m = int(np.argmin([abs(grid.values[j][0] - 2) for j in range(2)]))
    jet0 = phi1(eq, grid, m)

    def phi0(x):
        return (2 + x) * np.log(2 + x) - (2 + x) - 2 * math.log(2) + 2

    cols = []
    epss = [1e-2, 5e-3, 2.5e-3, 1.25e-3]
    for eps in epss:
        init = np.exp(wkb_seed(jet0, eps, [0, 1], orders=0))
        tr = iterate_eps(eq, eps, init=init)
        idx = np.rint(xs / eps).astype(int)
        cols.append(tr.log_abs[idx] - phi0(xs) / eps)
    table = [np.array(c) for c in cols]
    while len(table) > 1:
        table = [2 * table[i + 1] - table[i] for i in range(len(table) - 1)]
    return table[0], eq, grid, m


def test_c08_wkb_order_one():
    xs = np.round(np.arange(0, 0.9 + 1e-9, 0.05), 10)
    oracle, eq, grid, m = _phi1_oracle(xs)
    jet = phi1(eq, grid, m)
    module_err = float(np.max(np.abs(jet(1, xs).real - oracle)))
    literal_err = float(np.max(np.abs(-0.5 * np.log1p(xs) - oracle)))
    hier = phi_higher(eq, grid, m, S_max=1)
    hier_err = float(np.max(np.abs(hier.phi[1] - jet.phi[1])))
    detail = (f"closed form -1/2 ln(1+x) vs oracle sup {literal_err:.3e}; computed phi_1 vs oracle "
              f"{module_err:.1e}; phi_higher vs phi1 {hier_err:.1e}")
    verdict(8, literal_err < 1e-3 and hier_err < 1e-8, detail)


def test_c09_linear_algebra():
    worst0 = worst2 = 0.0
    for _ in range(100):
        d = int(RNG.integers(1, 7))
        r = np.exp(2j * np.pi * (np.arange(d) + 0.4 * RNG.random(d)) / d) * RNG.uniform(0.7, 1.3, d)
        _, _, _, resid = companion_diagonalize(r)
        worst0 = max(worst0, resid)
        x = RNG.normal(size=d) + 1j * RNG.normal(size=d)
        y = RNG.normal(size=d) + 1j * RNG.normal(size=d)
        Mx = np.vander(x, increasing=True).T
        My = np.vander(y, increasing=True).T
        R = vandermonde_ratio(x, y)
        worst2 = max(worst2, float(np.max(np.abs(Mx @ R - My)) / np.max(np.abs(My))))
    eq = resolve("synthetic-2x-normalized").epsilon_equation()
    sups = list(transfer_norm_probe(eq, [1e-2, 1e-3, 1e-4]).values())
    spread = max(sups) / min(sups) - 1
    ok = worst0 < 1e-10 and worst2 < 1e-10 and spread < 0.05
    verdict(9, ok, f"reconstruction {worst0:.1e}, Vandermonde identity {worst2:.1e}, "
                   f"probe sups {[round(s, 4) for s in sups]} spread {spread:.2%}")


def test_c10_deflation():
    worst = 0.0
    for _ in range(25):
        lam = random_roots(3)
        coeffs = np.poly(lam)[::-1] * (RNG.normal() + 1j * RNG.normal())
        eq = constant_eq(coeffs)
        eps = 0.02
        red = deflate(eq, eps, np.log(lam[0]) * np.arange(40))
        c = red.coefficients(0.2, eps)
        got = np.roots(c[::-1])
        want = lam[1:] / lam[0]
        err = max(min(abs(g - w) for g in got) for w in want)
        worst = max(worst, err)
    verdict(10, worst < 1e-8, f"max root error {worst:.1e} over 25 random d=3 equations")


def test_c11_decomposition():
    worst = 0.0
    for _ in range(25):
        lam = random_roots(3, 0.5, 2.0)
        eq = constant_eq(np.poly(lam)[::-1])
        eps = 0.05
        basis = [iterate_eps(eq, eps, init=[1, r, r * r]) for r in lam]
        c = RNG.normal(size=3) + 1j * RNG.normal(size=3)
        init = [sum(c[m] * lam[m] ** i for m in range(3)) for i in range(3)]
        k = int(RNG.integers(0, 6))
        dec = decompose_in_basis(iterate_eps(eq, eps, init=init), basis, k=k)
        worst = max(worst, float(np.max(np.abs(dec.coefficients - c) / np.abs(c))))
    verdict(11, worst < 1e-6, f"max relative coefficient error {worst:.1e}")


def test_c12_involutions():
    f10 = involutions_exact(10)
    dev = abs(math.expm1(involution_ratio_log(4000) - involution_ratio_log(2000)))
    prev = abs(math.expm1(involution_ratio_log(2000) - involution_ratio_log(1000)))
    ok = f10 == 9496 and dev < 0.05 and dev < prev
    verdict(12, ok, f"f(10) = {f10}; |r(4000)/r(2000) - 1| = {dev:.2e} (previous doubling {prev:.2e})")


def test_c13_mahler():
    rows = []
    ok = True
    for text in ("L - 2", "L - 1", FIGURE8_A):
        res = mahler_measure(text)
        diff = abs(res.nested - res.jensen)
        ok &= diff < 1e-5
        rows.append(f"{text[:12]}: {res.value:.8f} (diff {diff:.1e})")
    verdict(13, ok, "; ".join(rows))
