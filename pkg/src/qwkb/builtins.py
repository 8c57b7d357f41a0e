"""Named example equations shipped with the package."""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .entropy import APolynomial
from .operator import EpsilonEquation, QOperator, equation_from_functions, parse_operator, to_epsilon_form

TREFOIL_A = "(L-1)*(L+M^6)"
FIGURE8_A = "(L-1)*(L - L*M^2 - M^4 - 2*L*M^4 - L^2*M^4 - L*M^6 + L*M^8)"


@dataclass
class Target:
    """What a command operates on: an operator, an eps-equation, or both."""

    name: str
    operator: QOperator | None = None
    equation: EpsilonEquation | None = None
    apoly: APolynomial | None = None
    parametrization: str = "circle"
    special: str | None = None  # "involutions"

    def epsilon_equation(self, interval=(0.0, 1.0)) -> EpsilonEquation:
        if self.equation is not None:
            return self.equation
        if self.operator is None:
            raise ValueError(f"{self.name} has no difference equation")
        return replace(to_epsilon_form(self.operator, interval), name=self.name)

    def char_poly(self, parametrization: str | None = None, interval=None):
        kind = parametrization or self.parametrization
        if self.operator is not None:
            from .operator import specialize_classical

            return specialize_classical(self.operator).with_parametrization(kind, interval)
        if self.equation is not None:
            return self.equation.char_poly()
        raise ValueError(f"{self.name} has no characteristic polynomial")


def _data(name: str) -> str:
    return resources.files("qwkb").joinpath("data", name).read_text()


def _synthetic_2x() -> EpsilonEquation:
    # (E - (2+x)) (E - 1) with eps-independent coefficients
    def series(x, order):
        out = np.zeros((3, order + 1), dtype=complex)
        out[:, 0] = [2 + x, -(3 + x), 1]
        return out

    return equation_from_functions(lambda x, e: [2 + x, -(3 + x), 1], 2, (0.0, 1.0), series,
                                   name="synthetic-2x")


def _synthetic_2x_normalized() -> EpsilonEquation:
    # roots 1 and 1/(2+x): synthetic-2x divided through by its dominant root
    def coeffs(x, e):
        r = 1.0 / (2 + x)
        return [r, -(1 + r), 1]

    def series(x, order):
        out = np.zeros((3, order + 1), dtype=complex)
        out[:, 0] = coeffs(x, 0)
        return out

    return equation_from_functions(coeffs, 2, (0.0, 1.0), series, name="synthetic-2x-normalized")


def _synthetic_firstorder() -> EpsilonEquation:
    # f(k+1) = (2 + k eps) f(k)
    def series(x, order):
        out = np.zeros((2, order + 1), dtype=complex)
        out[:, 0] = [-(2 + x), 1]
        return out

    return equation_from_functions(lambda x, e: [-(2 + x), 1], 1, (0.0, 1.0), series,
                                   name="synthetic-firstorder")


def _load(name: str) -> Target:
    if name == "trefoil":
        return Target(name, parse_operator(_data("trefoil.qop")), apoly=APolynomial.parse(TREFOIL_A),
                      parametrization="angle")
    if name == "figure8":
        return Target(name, parse_operator(_data("figure8.qop")), apoly=APolynomial.parse(FIGURE8_A),
                      parametrization="angle")
    if name == "involutions":
        return Target(name, special="involutions")
    if name == "synthetic-2x":
        return Target(name, equation=_synthetic_2x(), parametrization="interval")
    if name == "synthetic-2x-normalized":
        return Target(name, equation=_synthetic_2x_normalized(), parametrization="interval")
    if name == "synthetic-firstorder":
        return Target(name, equation=_synthetic_firstorder(), parametrization="interval")
    if name == "const-d2":
        # eigenvalues 2 and 1/2
        return Target(name, parse_operator("2*E^2 - 5*E + 2"))
    raise KeyError(name)


BUILTINS = ("trefoil", "figure8", "involutions", "synthetic-2x", "synthetic-2x-normalized",
            "synthetic-firstorder", "const-d2")


def resolve(spec: str) -> Target:
    """Builtin name, path to a ``.qop`` file, or inline operator text."""
    if spec in BUILTINS:
        return _load(spec)
    path = Path(spec)
    if path.suffix in (".qop", ".txt") or path.is_file():
        if not path.is_file():
            raise FileNotFoundError(f"no such operator file: {spec}")
        return Target(path.stem, parse_operator(path.read_text()))
    return Target(spec, parse_operator(spec))
