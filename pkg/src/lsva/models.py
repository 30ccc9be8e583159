"""Model specifications and their coefficient jets.

Every model is written in log-price ``x`` and an auxiliary factor ``y`` with
generator ``a (dxx - dx) + f dy + b dyy + c dxdy``.  The meaning of ``y`` is
model specific:

* CEV: unused.
* Heston: ``y`` is the variance ``v`` of the transformed factor ``V = e^{kappa t} Z``.
* 3/2: ``y`` is the log variance.
* SABR: ``y`` is the log volatility.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Tuple

from .timefunc import ExpPoly, ZERO

COEFF_NAMES = ("a", "b", "c", "f")


class ModelParameterError(ValueError):
    """Invalid model parameters."""


@dataclass(frozen=True)
class CoefficientJet:
    """Spatial Taylor data of ``(a, b, c, f)`` around an expansion centre.

    ``tables[name][(i, j)]`` holds ``dx^i dy^j name`` at the centre, as an
    ExpPoly in time (plain derivatives, no factorials).  Missing entries are zero.
    """

    tables: Dict[str, Dict[Tuple[int, int], ExpPoly]]
    order: int
    x_center: ExpPoly
    y_center: ExpPoly
    time_dependent_center: bool = False
    key: tuple = field(default=(), compare=False)

    def value(self, name: str, i: int, j: int) -> ExpPoly:
        if i + j > self.order:
            from .opalgebra import JetOrderError

            raise JetOrderError(f"jet of order {self.order} has no entry ({i}, {j})")
        return self.tables[name].get((i, j), ZERO)

    def cache_key(self) -> tuple:
        if self.key:
            return self.key
        items = tuple(
            (name, tuple(sorted((k, v.terms) for k, v in self.tables[name].items())))
            for name in COEFF_NAMES
        )
        return (items, self.order, self.x_center.terms, self.y_center.terms)


def _const(v: float) -> ExpPoly:
    return ExpPoly.const(v)


def make_jet(tables, order, x_center=0.0, y_center=0.0, key=()) -> CoefficientJet:
    """Build a jet from scalar or ExpPoly entries with constant centres."""
    full = {}
    for name in COEFF_NAMES:
        full[name] = {
            ij: (v if isinstance(v, ExpPoly) else _const(v))
            for ij, v in tables.get(name, {}).items()
            if sum(ij) <= order
        }
    xc = x_center if isinstance(x_center, ExpPoly) else _const(x_center)
    yc = y_center if isinstance(y_center, ExpPoly) else _const(y_center)
    tdc = not (xc.is_constant() and yc.is_constant())
    return CoefficientJet(full, order, xc, yc, tdc, key)


def _check_common(delta, rho=0.0):
    if not delta > 0:
        raise ModelParameterError("delta must be positive")
    if not abs(rho) < 1:
        raise ModelParameterError("|rho| must be below 1")


@dataclass(frozen=True)
class ConstantVol:
    """Black-Scholes model; the degenerate case of every expansion.

    ``sigma = 0`` is accepted as a deterministic model for simulation checks;
    the expansion rejects it because the integrated variance vanishes.
    """

    sigma: float

    name = "constant"

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ModelParameterError("sigma must be nonnegative")

    def coefficients(self, t, x, y):
        return 0.5 * self.sigma**2, 0.0, 0.0, 0.0

    def jet(self, x: float, y: float, order: int) -> CoefficientJet:
        return make_jet({"a": {(0, 0): 0.5 * self.sigma**2}}, order, x, y,
                        key=("constant", self.sigma, x, y, order))


@dataclass(frozen=True)
class CEV:
    """Constant elasticity of variance: ``a = delta^2 exp(2(beta-1)x) / 2``."""

    delta: float
    beta: float

    name = "cev"

    def __post_init__(self):
        _check_common(self.delta)

    def coefficients(self, t, x, y):
        return 0.5 * self.delta**2 * math.exp(2 * (self.beta - 1) * x), 0.0, 0.0, 0.0

    def jet(self, x: float, y: float, order: int) -> CoefficientJet:
        return _jet_cev(self.delta, self.beta, float(x), order)


@lru_cache(maxsize=256)
def _jet_cev(delta, beta, x, order):
    a = 0.5 * delta**2 * math.exp(2 * (beta - 1) * x)
    g = 2 * (beta - 1)
    return make_jet({"a": {(i, 0): g**i * a for i in range(order + 1)}}, order, x, 0.0,
                    key=("cev", delta, beta, x, order))


def jet_cev(params: CEV, xbar: float, N: int) -> CoefficientJet:
    return params.jet(xbar, 0.0, N)


@dataclass(frozen=True)
class Heston:
    """Heston model in the factor ``V_t = e^{kappa t} Z_t``.

    The Taylor centre in ``v`` follows the mean ``theta (e^{kappa t} - 1) + v``
    of the transformed factor, which makes every jet entry an ExpPoly with
    rates in ``{-kappa, 0, kappa, 2 kappa}``.
    """

    kappa: float
    theta: float
    delta: float
    rho: float

    name = "heston"

    def __post_init__(self):
        _check_common(self.delta, self.rho)
        if not (self.kappa > 0 and self.theta > 0):
            raise ModelParameterError("kappa and theta must be positive")
        if self.rho >= 0:
            warnings.warn("Heston with rho >= 0 may suffer moment explosion", stacklevel=2)

    def coefficients(self, t, x, v):
        e = math.exp(self.kappa * t)
        return (
            0.5 * v / e,
            0.5 * self.delta**2 * e * v,
            self.rho * self.delta * v,
            self.theta * self.kappa * e,
        )

    def v_center(self, v: float) -> ExpPoly:
        th, kap = self.theta, self.kappa
        return ExpPoly([(th, 0, kap), (v - th, 0, 0.0)])

    def jet(self, x: float, v: float, order: int) -> CoefficientJet:
        return _jet_heston(self.kappa, self.theta, self.delta, self.rho, float(x), float(v), order)


@lru_cache(maxsize=256)
def _jet_heston(kappa, theta, delta, rho, x, v, order):
    if not v > 0:
        raise ModelParameterError("Heston variance must be positive")
    th, kap, d2 = theta, kappa, delta**2
    tables = {
        "a": {(0, 0): ExpPoly([(0.5 * th, 0, 0.0), (0.5 * (v - th), 0, -kap)])},
        "b": {(0, 0): ExpPoly([(0.5 * d2 * th, 0, 2 * kap), (0.5 * d2 * (v - th), 0, kap)])},
        "c": {(0, 0): ExpPoly([(rho * delta * th, 0, kap), (rho * delta * (v - th), 0, 0.0)])},
        "f": {(0, 0): ExpPoly.monomial(th * kap, 0, kap)},
    }
    if order >= 1:
        tables["a"][(0, 1)] = ExpPoly.monomial(0.5, 0, -kap)
        tables["b"][(0, 1)] = ExpPoly.monomial(0.5 * d2, 0, kap)
        tables["c"][(0, 1)] = _const(rho * delta)
    ycen = ExpPoly([(th, 0, kap), (v - th, 0, 0.0)])
    return make_jet(tables, order, _const(x), ycen,
                    key=("heston", kappa, theta, delta, rho, x, v, order))


def jet_heston(params: Heston, x: float, v: float, N: int) -> CoefficientJet:
    return params.jet(x, v, N)


@dataclass(frozen=True)
class ThreeHalves:
    """3/2 stochastic volatility model with ``y`` the log variance."""

    kappa: float
    theta: float
    delta: float
    rho: float

    name = "three_halves"

    def __post_init__(self):
        _check_common(self.delta, self.rho)
        if not (self.kappa > 0 and self.theta > 0):
            raise ModelParameterError("kappa and theta must be positive")

    def coefficients(self, t, x, y):
        e = math.exp(y)
        return (
            0.5 * e,
            0.5 * self.delta**2 * e,
            self.rho * self.delta * e,
            self.kappa * self.theta - (self.kappa + 0.5 * self.delta**2) * e,
        )

    def jet(self, x: float, y: float, order: int) -> CoefficientJet:
        return _jet_three_halves(self.kappa, self.theta, self.delta, self.rho,
                                 float(x), float(y), order)


@lru_cache(maxsize=256)
def _jet_three_halves(kappa, theta, delta, rho, x, y, order):
    e = math.exp(y)
    tables = {"a": {}, "b": {}, "c": {}, "f": {}}
    for j in range(order + 1):
        tables["a"][(0, j)] = 0.5 * e
        tables["b"][(0, j)] = 0.5 * delta**2 * e
        tables["c"][(0, j)] = rho * delta * e
        tables["f"][(0, j)] = -(kappa + 0.5 * delta**2) * e
    tables["f"][(0, 0)] += kappa * theta
    return make_jet(tables, order, x, y,
                    key=("three_halves", kappa, theta, delta, rho, x, y, order))


def jet_three_halves(params: ThreeHalves, xbar: float, ybar: float, N: int) -> CoefficientJet:
    return params.jet(xbar, ybar, N)


@dataclass(frozen=True)
class SABR:
    """SABR model in log price ``x`` and log volatility ``y``."""

    beta: float
    delta: float
    rho: float

    name = "sabr"

    def __post_init__(self):
        _check_common(self.delta, self.rho)

    def coefficients(self, t, x, y):
        g = self.beta - 1
        return (
            0.5 * math.exp(2 * y + 2 * g * x),
            0.5 * self.delta**2,
            self.rho * self.delta * math.exp(y + g * x),
            -0.5 * self.delta**2,
        )

    def jet(self, x: float, y: float, order: int) -> CoefficientJet:
        return _jet_sabr(self.beta, self.delta, self.rho, float(x), float(y), order)


@lru_cache(maxsize=256)
def _jet_sabr(beta, delta, rho, x, y, order):
    g = beta - 1
    a = 0.5 * math.exp(2 * y + 2 * g * x)
    c = rho * delta * math.exp(y + g * x)
    tables = {"a": {}, "b": {(0, 0): 0.5 * delta**2}, "c": {}, "f": {(0, 0): -0.5 * delta**2}}
    for i in range(order + 1):
        for j in range(order + 1 - i):
            tables["a"][(i, j)] = (2 * g) ** i * 2**j * a
            if c != 0.0:
                tables["c"][(i, j)] = g**i * c
    return make_jet(tables, order, x, y, key=("sabr", beta, delta, rho, x, y, order))


def jet_sabr(params: SABR, xbar: float, ybar: float, N: int) -> CoefficientJet:
    return params.jet(xbar, ybar, N)


MODEL_TYPES = {
    "constant": ConstantVol,
    "cev": CEV,
    "heston": Heston,
    "three_halves": ThreeHalves,
    "sabr": SABR,
}


def model_from_dict(d: dict):
    """Build a model from ``{"variant": name, **params}``."""
    d = dict(d)
    variant = str(d.pop("variant", d.pop("name", ""))).lower().replace("-", "_").replace("/", "_")
    aliases = {"3_2": "three_halves", "threehalves": "three_halves", "bs": "constant"}
    variant = aliases.get(variant, variant)
    if variant not in MODEL_TYPES:
        raise ModelParameterError(f"unknown model variant {variant!r}")
    try:
        return MODEL_TYPES[variant](**{k: float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ModelParameterError(str(exc)) from exc
