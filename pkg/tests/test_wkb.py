from __future__ import annotations

import math

import numpy as np
import pytest

from qwkb.builtins import resolve
from qwkb.operator import equation_from_functions, parse_operator, to_epsilon_form
from qwkb.simulator import iterate_eps
from qwkb.wkb import (
    IrregularEquationError,
    ResidualError,
    deflate,
    deflated_to_json,
    eigen_grid,
    phi0,
    phi1,
    phi_higher,
    wkb_seed,
)

LOG2 = math.log(2)


def branch_of(grid, value_at_zero):
    return int(np.argmin([abs(grid.values[m][0] - value_at_zero) for m in range(grid.degree)]))


@pytest.fixture(scope="module")
def firstorder():
    eq = resolve("synthetic-firstorder").epsilon_equation()
    return eq, eigen_grid(eq, 512)


@pytest.fixture(scope="module")
def two_x():
    eq = resolve("synthetic-2x").epsilon_equation()
    return eq, eigen_grid(eq, 512)


def test_phi0_constant():
    eq = to_epsilon_form(parse_operator("E - 2"))
    jet = phi0(eq, eigen_grid(eq, 128), 0)
    assert np.allclose(jet.phi[0], jet.x * LOG2, atol=1e-12)


def test_phi0_firstorder(firstorder):
    eq, grid = firstorder
    jet = phi0(eq, grid, 0)
    exact = 3 * math.log(3) - 2 * math.log(2) - 1
    assert jet.phi[0][-1].real == pytest.approx(exact, abs=1e-9)
    assert jet.phi[0][0] == 0


def test_phi0_derivative_is_log(two_x):
    eq, grid = two_x
    m = branch_of(grid, 2.0)
    jet = phi0(eq, grid, m)
    inner = slice(20, -20)
    assert np.allclose(jet.derivative(0, jet.x)[inner], np.log(2 + jet.x)[inner], atol=1e-6)


def test_phi1_firstorder(firstorder):
    eq, grid = firstorder
    jet = phi1(eq, grid, 0)
    x = jet.x
    assert np.allclose(jet.phi[1], -0.5 * np.log(1 + x / 2), atol=1e-7)


def test_phi1_two_x(two_x):
    eq, grid = two_x
    m = branch_of(grid, 2.0)
    x = grid.t
    got = phi1(eq, grid, m).phi[1]
    assert np.allclose(got, -np.log(1 + x) - 0.5 * np.log(1 + x / 2), atol=1e-6)
    # the unit branch has no correction
    assert np.allclose(phi1(eq, grid, 1 - m).phi[1], 0, atol=1e-9)


def test_phi1_against_simulation(firstorder):
    eq, grid = firstorder
    jet = phi1(eq, grid, 0)
    eps = 1e-4
    tr = iterate_eps(eq, eps)
    K = len(tr.logs) - 1
    x = K * eps
    pred = (jet(0, x) / eps + jet(1, x)).real
    assert abs(tr.logs[-1].real - pred) < 1e-3


def test_phi_higher_matches_phi1(two_x):
    eq, grid = two_x
    m = branch_of(grid, 2.0)
    a = phi1(eq, grid, m)
    b = phi_higher(eq, grid, m, S_max=3)
    assert np.max(np.abs(a.phi[1] - b.phi[1])) < 1e-10
    assert b.order == 3


def test_euler_maclaurin_orders(firstorder):
    # f(k+1) = g(k eps) f(k): phi_2 = (g'/g(x) - g'/g(0)) / 12, phi_3 = 0
    eq, grid = firstorder
    jet = phi_higher(eq, grid, 0, S_max=3)
    x = jet.x
    inner = slice(10, -10)
    assert np.allclose(jet.phi[2][inner], ((1 / (2 + x) - 0.5) / 12)[inner], atol=1e-6)
    assert np.max(np.abs(jet.phi[3][inner])) < 1e-5
    assert jet.reliable[:3] == [True, True, True]


def test_irregular_rejected():
    eq = resolve("figure8").epsilon_equation()
    grid = eigen_grid(eq, 256)
    with pytest.raises(IrregularEquationError) as exc:
        phi0(eq, grid, 0)
    assert exc.value.report is not None


def test_branch_range(firstorder):
    eq, grid = firstorder
    with pytest.raises(IndexError):
        phi0(eq, grid, 3)


def test_phi_higher_requires_order(firstorder):
    eq, grid = firstorder
    with pytest.raises(ValueError):
        phi_higher(eq, grid, 0, S_max=0)


def test_seed(firstorder):
    eq, grid = firstorder
    jet = phi1(eq, grid, 0)
    logs = wkb_seed(jet, 0.01, [0, 1, 2], orders=0)
    assert logs[0] == 0
    assert logs[1].real == pytest.approx(jet(0, 0.01).real / 0.01, rel=1e-9)
    with pytest.raises(ValueError):
        wkb_seed(jet, 0.01, [200])


def test_jet_serialization(firstorder):
    eq, grid = firstorder
    jet = phi1(eq, grid, 0)
    text = jet.to_csv()
    assert text.splitlines()[0] == "x,s,re,im"
    assert len(text.splitlines()) == 1 + 2 * len(jet.x)
    assert '"branch": 1' in jet.to_json()


# -- deflation


def constant_eq(coeffs, name="const"):
    return equation_from_functions(lambda x, e: list(coeffs), len(coeffs) - 1, (0.0, 1.0), None, name=name)


def test_deflate_constant():
    # (E - 2)(E - 1/2)(E - 1/3) scaled; dominant solution 2^k
    c = np.poly([2, 0.5, 1 / 3])[::-1]
    eq = constant_eq(c)
    eps = 0.01
    dom = np.arange(104) * LOG2 + 0j
    red = deflate(eq, eps, dom)
    assert red.degree == 2
    row = red.coefficients(0.5, eps)
    assert np.allclose(sorted(np.roots(row[::-1]).real), [1 / 6, 1 / 4])
    assert '"degree": 2' in deflated_to_json(red)


def test_deflate_second_order():
    eq = constant_eq([3, 1, 0.5])  # not monic on purpose
    lam = np.roots([0.5, 1, 3])
    dom = np.log(lam[0]) * np.arange(20)
    red = deflate(eq, 0.1, dom)
    r = -red.coefficients(0.0, 0.1)[0] / red.coefficients(0.0, 0.1)[1]
    assert r == pytest.approx(lam[1] / lam[0])


def test_deflate_rejects_non_solution():
    eq = constant_eq(np.poly([2, 0.5])[::-1])
    with pytest.raises(ResidualError):
        deflate(eq, 0.01, np.arange(10) * math.log(3) + 0j)


def test_deflated_table_fixed_eps():
    eq = constant_eq(np.poly([2, 0.5])[::-1])
    red = deflate(eq, 0.01, np.arange(10) * LOG2 + 0j)
    with pytest.raises(ValueError):
        red.coefficients(0.0, 0.02)
