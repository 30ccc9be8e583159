"""Zero-correlation SABR call prices.

``sabr_exact_call_rho0`` evaluates the double-integral representation over the
hyperbolic half-plane (volatility ``V`` and an angle/rapidity variable).
``sabr_conditional_call_rho0`` is an independent oracle: with zero
correlation the price is the CEV price evaluated at the random clock
``int_0^t Z_s^2 ds``, averaged over simulated volatility paths.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from ..models import CEV
from .cev import cev_exact_call


def _check(params):
    if params.rho != 0.0:
        raise ValueError("the exact SABR price requires rho = 0")
    if not params.beta < 1:
        raise ValueError("the exact SABR price requires beta < 1")


def sabr_exact_call_rho0(params, t, x, y, k, quad_tol: float = 1e-10) -> float:
    """Undiscounted call price for ``rho = 0``."""
    return sabr_time_value_rho0(params, t, x, y, k, quad_tol) + max(math.exp(x) - math.exp(k), 0.0)


def sabr_time_value_rho0(params, t, x, y, k, quad_tol: float = 1e-10) -> float:
    """Call price minus intrinsic value, which is also the out-of-the-money price."""
    _check(params)
    de, om = params.delta, 1.0 - params.beta
    qh = math.exp(om * k) / om
    qx = math.exp(om * x) / om
    nu = 1.0 / (2.0 * om)
    v0 = math.exp(y) / de
    b = (qh * qh + qx * qx) / (2 * qh * qx)
    var = de * de * t
    base = (qh * qh + qx * qx) / (2 * v0 * v0)
    cross = qh * qx / (v0 * v0)

    def dist(u, c):
        # V = v0 e^u; hyperbolic distance between (qx, v0) and (qh reflected by c, V)
        arg = math.exp(-u) * (base - c * cross) + math.cosh(u)
        return math.acosh(max(arg, 1.0))

    # beyond distance dmax the Gaussian factor is below e^-45; the distance is
    # at least |u| and grows with the angle, which bounds every range
    dmax = math.sqrt(90.0 * var)
    umax = dmax
    slack = math.exp(umax) * (math.cosh(dmax) - 1.0)
    cmin = (base - slack) / cross
    phimax = math.pi if cmin <= -1.0 else (0.0 if cmin >= 1.0 else math.acos(cmin))
    psimax = min(45.0 / nu, math.acosh(max((slack - base) / cross, 1.0)))

    def f_phi(phi, u):
        d = dist(u, math.cos(phi))
        return (math.exp(-0.5 * u) * math.sin(phi) * math.sin(nu * phi) / (b - math.cos(phi))
                * math.exp(-d * d / (2 * var)))

    def f_psi(psi, u):
        d = dist(u, -math.cosh(psi))
        return (math.exp(-0.5 * u) * math.sinh(psi) / (b + math.cosh(psi)) * math.exp(-nu * psi)
                * math.exp(-d * d / (2 * var)))

    i1 = i2 = 0.0
    if phimax > 0.0:
        i1, _ = integrate.dblquad(f_phi, -umax, umax, 0.0, phimax, epsabs=0.0, epsrel=quad_tol)
    if psimax > 0.0:
        i2, _ = integrate.dblquad(f_psi, -umax, umax, 0.0, psimax, epsabs=0.0, epsrel=quad_tol)
    pref = math.exp(0.5 * (x + k)) * math.exp(-var / 8) / math.sqrt(2 * math.pi * var)
    val = pref * (i1 / math.pi + math.sin(nu * math.pi) / math.pi * i2)
    return val


def sabr_conditional_call_rho0(params, t, x, y, k, paths: int = 100_000, steps: int = 400,
                               seed: int = 0):
    """``(price, std_error)`` averaging exact CEV prices over the volatility clock."""
    _check(params)
    de = params.delta
    rng = np.random.default_rng(seed)
    half = paths // 2
    dt = t / steps
    s = np.arange(1, steps + 1) * dt
    z = rng.standard_normal((half, steps)) * math.sqrt(dt)
    clocks = []
    for sign in (1.0, -1.0):
        w = np.cumsum(sign * z, axis=1)
        z2 = np.exp(2 * y + 2 * de * w - de * de * s)
        z2 = np.hstack([np.full((half, 1), math.exp(2 * y)), z2])
        clocks.append(integrate.trapezoid(z2, dx=dt, axis=1))
    unit = CEV(1.0, params.beta)
    vals = np.array([[cev_exact_call(unit, a, x, k) for a in c] for c in clocks])
    pair = vals.mean(axis=0)
    return float(pair.mean()), float(pair.std(ddof=1) / math.sqrt(half))
