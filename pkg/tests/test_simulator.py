from __future__ import annotations

import math

import numpy as np
import pytest

from qwkb.builtins import resolve
from qwkb.operator import equation_from_functions, parse_operator, to_epsilon_form
from qwkb.simulator import (
    IllConditionedError,
    PreconditionError,
    SingularStepError,
    companion,
    companion_diagonalize,
    decompose_in_basis,
    growth_rate,
    growth_study,
    involution_ratio_log,
    involutions_exact,
    involutions_log,
    iterate_eps,
    iterate_q,
    richardson,
    transfer_norm_probe,
    vandermonde_ratio,
)

LOG2 = math.log(2)


def test_powers_of_two_q_mode():
    tr = iterate_q(parse_operator("E - 2"), 50)
    assert np.allclose(tr.log_abs, np.arange(51) * LOG2, atol=1e-12)
    assert growth_rate(tr) == pytest.approx(LOG2)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "k,log_abs,phase" and len(lines) == 52


def test_constant_solution():
    # E^2 - (Q+1) E + Q annihilates constants
    tr = iterate_q(parse_operator("E^2 - (Q+1)*E + Q"), 200, init=[1, 1])
    assert np.max(np.abs(np.exp(tr.logs) - 1)) < 1e-10


def test_q_and_eps_modes_agree():
    op = resolve("figure8").operator
    n = 64
    a = iterate_q(op, n, alpha=0.3)
    eq = to_epsilon_form(op)
    b = iterate_eps(eq, 0.3 / n, steps=n)
    assert np.array_equal(a.logs, b.logs)


def test_singular_step_reports_prefix():
    with pytest.raises(SingularStepError) as exc:
        iterate_q(resolve("figure8").operator, 250)
    err = exc.value
    assert err.k == 123
    assert not err.trace.complete
    assert len(err.trace.logs) == err.k + 3


def test_puncture_records_event():
    tr = iterate_q(resolve("figure8").operator, 250, puncture=True)
    assert tr.complete
    assert any("punctured" in msg for _, msg in tr.events)


def test_mpmath_matches_float():
    op = parse_operator("E^2 - (Q+1)*E + Q")
    a = iterate_q(op, 40, init=[1, 2])
    b = iterate_q(op, 40, init=[1, 2], prec=120)
    assert np.allclose(np.exp(a.logs), np.exp(b.logs), rtol=1e-10)


def test_init_length_checked():
    with pytest.raises(ValueError):
        iterate_q(parse_operator("E - 2"), 10, init=[1, 2])


def test_huge_values_no_overflow():
    tr = iterate_q(parse_operator("E - 1000"), 200)
    assert tr.log_abs[-1] == pytest.approx(200 * math.log(1000), rel=1e-12)
    assert tr.value(200).exponent > 1000


def test_eps_growth_firstorder():
    eq = resolve("synthetic-firstorder").epsilon_equation()
    exact = 3 * math.log(3) - 2 * math.log(2) - 1
    table = growth_study(lambda e: iterate_eps(eq, e), [4e-3, 2e-3, 1e-3])
    assert abs(table.limit - exact) < 1e-5
    assert table.to_csv().splitlines()[0] == "n_or_eps,rate,extrapolated,err_est"


def test_richardson_linear_error():
    t = richardson([4, 2, 1], [1 + 4 * 0.1, 1 + 2 * 0.1, 1 + 0.1])
    assert t.limit == pytest.approx(1.0)


# -- decomposition


def constant_eq(coeffs):
    return equation_from_functions(lambda x, e: list(coeffs), len(coeffs) - 1, (0.0, 1.0), None)


def test_decompose_two_basis():
    eq = constant_eq([2, -3, 1])  # roots 1 and 2
    ones = iterate_eps(eq, 0.01, init=[1, 1])
    pow2 = iterate_eps(eq, 0.01, init=[1, 2])
    mix = iterate_eps(eq, 0.01, init=[3 + 5, 3 + 10])
    for k in (0, 10):
        dec = decompose_in_basis(mix, [ones, pow2], k=k)
        assert np.allclose(dec.coefficients, [3, 5], rtol=1e-10)
        assert abs(dec.determinant_ratio) < 1e-10


def test_decompose_random_third_order():
    rng = np.random.default_rng(3)
    roots = [0.5, 1.5, -2.0]
    eq = constant_eq(np.poly(roots)[::-1])
    basis = [iterate_eps(eq, 0.05, init=[1, r, r * r]) for r in roots]
    c = rng.normal(size=3) + 1j * rng.normal(size=3)
    init = [sum(c[m] * roots[m] ** i for m in range(3)) for i in range(3)]
    dec = decompose_in_basis(iterate_eps(eq, 0.05, init=init), basis, k=5)
    assert np.allclose(dec.coefficients, c, rtol=1e-9)


def test_decompose_ill_conditioned():
    eq = constant_eq([2, -3, 1])
    a = iterate_eps(eq, 0.01, init=[1, 1])
    with pytest.raises(IllConditionedError):
        decompose_in_basis(a, [a, a])


# -- matrices


def test_companion_example():
    A = companion([2, -3])
    assert np.allclose(np.sort(np.linalg.eigvals(A).real), [1, 2])


@pytest.mark.parametrize("roots", [[1, 2], [0.5j, -1, 3], [np.exp(0.1j), np.exp(2j), 0.3, 4]])
def test_companion_diagonalize(roots):
    A, M, D, resid = companion_diagonalize(roots)
    assert resid < 1e-10
    assert np.allclose(A @ M, M @ D)


def test_companion_repeated_roots():
    with pytest.raises(ValueError):
        companion_diagonalize([1, 1, 2])


def test_vandermonde_ratio():
    x = np.array([0.3, -1.2, 2.0 + 1j])
    y = np.array([1.1, 0.4j, -0.7])
    V = lambda z: np.vander(z, increasing=True).T  # noqa: E731
    assert np.allclose(vandermonde_ratio(x, y), np.linalg.solve(V(x), V(y)))
    assert np.allclose(vandermonde_ratio(x, x), np.eye(3))


def test_transfer_probe_bounded():
    eq = resolve("synthetic-2x-normalized").epsilon_equation()
    sups = transfer_norm_probe(eq, [0.01, 0.005, 0.0025])
    vals = list(sups.values())
    assert max(vals) / min(vals) < 1.05


def test_transfer_probe_precondition():
    eq = resolve("synthetic-2x").epsilon_equation()
    with pytest.raises(PreconditionError):
        transfer_norm_probe(eq, [0.01])


# -- involutions


def test_involutions_small():
    assert [involutions_exact(n) for n in range(1, 11)] == [1, 2, 4, 10, 26, 76, 232, 764, 2620, 9496]
    assert involutions_log(10) == pytest.approx(math.log(9496), rel=1e-14)


def test_involution_ratio_decreasing():
    dev = [abs(math.expm1(involution_ratio_log(2 * n) - involution_ratio_log(n))) for n in (250, 500, 1000)]
    assert dev[0] > dev[1] > dev[2]
    assert involution_ratio_log(1000, exact=False) == pytest.approx(involution_ratio_log(1000), abs=1e-9)
