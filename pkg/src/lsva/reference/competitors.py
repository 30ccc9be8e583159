"""Competing closed-form implied-volatility expansions.

* ``hagan_woodward_iv``: CEV, three-term formula around the midpoint forward.
* ``fjl_iv``: short-time near-the-money Heston expansion; ``y`` is the log of
  the instantaneous variance.
* ``hklw_iv``: the corrected SABR formula; ``y`` is the log volatility.
"""

from __future__ import annotations

import math


class CompetitorDomainError(ValueError):
    """Formula evaluated outside its domain of validity."""


def hagan_woodward_iv(params, t: float, x: float, k: float) -> float:
    beta, delta = params.beta, params.delta
    f = 0.5 * (math.exp(x) + math.exp(k))
    om = 1.0 - beta
    m = (math.exp(x) - math.exp(k)) / f
    return delta / f**om * (1.0 + om * (2.0 + beta) / 24.0 * m * m
                            + om * om / 24.0 * delta * delta * t / f ** (2 * om))


def fjl_iv(params, t: float, x: float, y: float, k: float) -> float:
    kap, th, d, rho = params.kappa, params.theta, params.delta, params.rho
    rb2 = 1.0 - rho * rho
    e = math.exp(y)
    m = k - x
    g0 = math.exp(0.5 * y) * (1.0 + 0.25 * rho * d * m / e
                              + (1.0 - 2.5 * rho * rho) * d * d * m * m / (24.0 * e * e))
    g1 = (-d * d / 12.0 * (1.0 - 0.25 * rho * rho) + 0.25 * e * rho * d + 0.5 * kap * (th - e)
          + rho * d / (24.0 * e) * (d * d * rb2 - 2 * kap * (th + e) + rho * d * e) * m
          + d * d / (7680.0 * e * e) * (
              176 * d**2 - 480 * kap * th - 712 * rho**2 * d**2 + 521 * rho**4 * d**2
              + 40 * rho**3 * d * e + 1040 * kap * th * rho**2 - 80 * kap * rho**2 * e) * m * m)
    rad = g0 * g0 + g1 * t
    if not rad > 0:
        raise CompetitorDomainError(f"negative radicand {rad!r}")
    return math.sqrt(rad)


def _zeta_over_d(z: float, rho: float) -> float:
    """``z / D(z)`` with its Taylor limit near zero."""
    if abs(z) < 1e-5:
        return 1.0 - 0.5 * rho * z + (2.0 - 3.0 * rho * rho) * z * z / 12.0
    dz = math.log((math.sqrt(1.0 - 2.0 * rho * z + z * z) + z - rho) / (1.0 - rho))
    return z / dz


def hklw_iv(params, t: float, x: float, y: float, k: float) -> float:
    beta, d, rho = params.beta, params.delta, params.rho
    om = 1.0 - beta
    f = 0.5 * (math.exp(x) + math.exp(k))
    ey = math.exp(y)
    h = x - k
    # (e^{om x} - e^{om k}) / (x - k), finite at the money
    if om == 0.0:
        slope = 0.0
    elif h == 0.0:
        slope = om * math.exp(om * k)
    else:
        slope = math.exp(om * k) * math.expm1(om * h) / h
    z = d / (ey * om) * slope * h if om else d / ey * h
    # (x - k) / z without the 0/0 at the money
    h_over_z = ey * om / (d * slope) if om else ey / d
    lead = d * h_over_z * _zeta_over_d(z, rho)
    g1 = beta / f
    g2 = beta * (beta - 1.0) / f**2
    loc = ey * f**beta / d
    corr = ((2 * g2 - g1 * g1 + 1.0 / f**2) / 24.0 * loc * loc
            + rho * g1 * loc / 4.0 + (2.0 - 3.0 * rho * rho) / 24.0)
    return lead * (1.0 + t * d * d * corr)
