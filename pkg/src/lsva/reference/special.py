"""Special functions for the exact pricers."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special as sc


class SeriesConvergenceError(ArithmeticError):
    """A series did not meet its termination criterion."""


@dataclass(frozen=True)
class SpecialFnConfig:
    series_tol: float = 1e-16
    max_terms: int = 100_000


DEFAULT_CFG = SpecialFnConfig()


def ln_gamma(z):
    """Principal branch of ``log Gamma`` for real or complex ``z``."""
    return complex(sc.loggamma(complex(z))) if isinstance(z, complex) else float(sc.gammaln(z))


def reg_upper_inc_gamma(a, x):
    """Regularized upper incomplete gamma ``Gamma(a, x) / Gamma(a)``."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(a <= 0) or np.any(x < 0):
        raise ValueError("need a > 0 and x >= 0")
    out = sc.gammaincc(a, x)
    return float(out) if out.ndim == 0 else out


def _taylor(a, b, z, cfg: SpecialFnConfig):
    """Direct series; returns (sum, largest term magnitude)."""
    term = 1.0 + 0j
    total = term
    biggest = 1.0
    small_run = 0
    for n in range(cfg.max_terms):
        term *= (a + n) / ((b + n) * (n + 1)) * z
        total += term
        mag = abs(term)
        biggest = max(biggest, mag)
        if mag <= cfg.series_tol * abs(total):
            small_run += 1
            if small_run >= 3:
                return total, biggest
        else:
            small_run = 0
        if term == 0:
            return total, biggest
    raise SeriesConvergenceError("Kummer series did not converge")


def log_kummer_m(a, b, z, cfg: SpecialFnConfig = DEFAULT_CFG, *, rtol: float = 1e-12):
    """``log M(a, b, z)`` for complex arguments.

    Uses the Taylor series, after the Kummer transform
    ``M(a, b, z) = e^z M(b - a, b, -z)`` when ``Re z < 0``.  When the series
    loses more than ``rtol`` to cancellation the value is taken from mpmath.
    """
    a, b, z = complex(a), complex(b), complex(z)
    if b.imag == 0 and b.real <= 0 and b.real == int(b.real):
        raise ValueError("b must not be a nonpositive integer")
    shift = 0.0 + 0j
    aa, zz = a, z
    if z.real < 0:
        aa, zz, shift = b - a, -z, z
    try:
        s, biggest = _taylor(aa, b, zz, cfg)
        if s != 0 and biggest / abs(s) * 2.2e-16 <= rtol and math.isfinite(abs(s)):
            return cmath.log(s) + shift
    except (SeriesConvergenceError, OverflowError, ZeroDivisionError):
        pass
    with mpmath.workdps(30):
        return complex(mpmath.log(mpmath.hyp1f1(a, b, z)))


def kummer_m(a, b, z, cfg: SpecialFnConfig = DEFAULT_CFG):
    """Confluent hypergeometric ``M(a, b, z)`` for complex arguments."""
    return cmath.exp(log_kummer_m(a, b, z, cfg))
