"""Exponential-polynomial functions of one time variable.

An :class:`ExpPoly` is a finite sum ``sum c * t**m * exp(g * t)``.  The class is
closed under addition, multiplication and integration with a numeric or a
symbolic bound, which is all the nested time integrals of the Dyson series need.
"""

from __future__ import annotations

import math
from typing import Iterable, Optional, Tuple, Union

Number = Union[int, float]

# rates are built from sums of model constants; the tolerance is defensive only
RATE_TOL = 1e-14


def _snap_rate(rate: float, known: dict) -> float:
    for r in known:
        if r == rate or abs(r - rate) <= RATE_TOL:
            return r
    return rate


class ExpPoly:
    """Immutable sum of ``coeff * t**power * exp(rate * t)`` terms."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Iterable[Tuple[Number, int, Number]] = ()):
        acc: dict = {}
        rates: dict = {}
        for coeff, power, rate in terms:
            power = int(power)
            if power < 0:
                raise ValueError("powers must be nonnegative")
            rate = _snap_rate(float(rate), rates)
            rates[rate] = None
            key = (power, rate)
            acc[key] = acc.get(key, 0.0) + coeff
        self._terms = tuple(
            sorted((k, c) for k, c in acc.items() if c != 0)
        )

    # -- constructors -------------------------------------------------------
    @classmethod
    def const(cls, c: Number) -> "ExpPoly":
        return cls([(c, 0, 0.0)])

    @classmethod
    def monomial(cls, c: Number, power: int = 0, rate: Number = 0.0) -> "ExpPoly":
        return cls([(c, power, rate)])

    @classmethod
    def t(cls) -> "ExpPoly":
        return cls([(1.0, 1, 0.0)])

    # -- introspection ------------------------------------------------------
    @property
    def terms(self) -> Tuple[Tuple[float, int, float], ...]:
        """Normalized ``(coeff, power, rate)`` triples ordered by (power, rate)."""
        return tuple((c, p, r) for (p, r), c in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(p == 0 and r == 0.0 for (p, r), _ in self._terms)

    def constant_value(self) -> float:
        if not self.is_constant():
            raise ValueError("ExpPoly is not constant")
        return self._terms[0][1] if self._terms else 0.0

    def normalized(self) -> "ExpPoly":
        return ExpPoly(self.terms)

    def __repr__(self) -> str:
        if not self._terms:
            return "ExpPoly(0)"
        parts = []
        for (p, r), c in self._terms:
            s = f"{c:.6g}"
            if p:
                s += f"*t^{p}" if p > 1 else "*t"
            if r:
                s += f"*e^({r:.6g}t)"
            parts.append(s)
        return "ExpPoly(" + " + ".join(parts) + ")"

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = ExpPoly.const(other)
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(self._terms)

    # -- evaluation ---------------------------------------------------------
    def __call__(self, t: Number) -> float:
        total = 0.0
        for (p, r), c in self._terms:
            v = c
            if p:
                v = v * t**p
            if r:
                v = v * math.exp(r * t)
            total += v
        return total

    # -- ring operations ----------------------------------------------------
    def __add__(self, other) -> "ExpPoly":
        if isinstance(other, (int, float)):
            other = ExpPoly.const(other)
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return ExpPoly(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "ExpPoly":
        return ExpPoly((-c, p, r) for c, p, r in self.terms)

    def __sub__(self, other) -> "ExpPoly":
        if isinstance(other, (int, float)):
            other = ExpPoly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "ExpPoly":
        return (-self) + other

    def __mul__(self, other) -> "ExpPoly":
        if isinstance(other, (int, float)):
            if other == 0:
                return ZERO
            return ExpPoly((c * other, p, r) for c, p, r in self.terms)
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return ExpPoly(
            (c1 * c2, p1 + p2, r1 + r2)
            for c1, p1, r1 in self.terms
            for c2, p2, r2 in other.terms
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "ExpPoly":
        return self * (1.0 / other)

    def __pow__(self, n: int) -> "ExpPoly":
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    # -- calculus -----------------------------------------------------------
    def antiderivative(self) -> "ExpPoly":
        """A primitive with no added constant."""
        out = []
        for c, m, g in self.terms:
            if g == 0.0:
                out.append((c / (m + 1), m + 1, 0.0))
                continue
            # d/dt of e^{gt} sum_j (-1)^j m!/(m-j)! t^{m-j} / g^{j+1} is t^m e^{gt}
            fall = 1.0
            for j in range(m + 1):
                out.append(((-1) ** j * fall * c / g ** (j + 1), m - j, g))
                fall *= m - j
        return ExpPoly(out)

    def derivative(self) -> "ExpPoly":
        out = []
        for c, m, g in self.terms:
            if m:
                out.append((c * m, m - 1, g))
            if g:
                out.append((c * g, m, g))
        return ExpPoly(out)

    def integral(self, lower: Optional[Number], upper: Optional[Number]) -> "ExpPoly":
        """Definite integral; a ``None`` bound stands for the free variable."""
        prim = self.antiderivative()
        hi = ExpPoly.const(prim(upper)) if upper is not None else prim
        lo = ExpPoly.const(prim(lower)) if lower is not None else prim
        return hi - lo


ZERO = ExpPoly()
ONE = ExpPoly.const(1.0)


def ep_add(p: ExpPoly, q: ExpPoly) -> ExpPoly:
    return p + q


def ep_mul(p: ExpPoly, q: ExpPoly) -> ExpPoly:
    return p * q


def ep_integral(p: ExpPoly, lower: Optional[Number], upper: Number) -> ExpPoly:
    """``int_lower^upper p(t) dt`` with a numeric upper limit.

    ``lower=None`` leaves the lower limit symbolic, so the result is an
    ExpPoly in the next-outer integration variable.
    """
    if upper is None:
        raise ValueError("upper limit must be numeric")
    return p.integral(lower, upper)
