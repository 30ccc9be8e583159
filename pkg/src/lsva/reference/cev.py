"""Exact CEV call price through noncentral chi-square tails.

For ``dS = delta S^beta dW`` with ``beta < 1`` and absorption at zero, the
undiscounted call is::

    e^x Q(a; 2 + 1/(1-beta), c) - e^k (1 - Q(c; 1/(1-beta), a))

with ``c = e^{2(1-beta)x} / ((1-beta)^2 delta^2 t)``, ``a`` the same with ``k``,
and ``Q(w; v, mu)`` the upper tail of a noncentral chi-square with ``v``
degrees of freedom and noncentrality ``mu`` at ``w``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammainc, gammaincc, gammaln

from .special import DEFAULT_CFG, SeriesConvergenceError, SpecialFnConfig


def noncentral_chi2_sf(w: float, v: float, mu: float, cfg: SpecialFnConfig = DEFAULT_CFG) -> float:
    """``sum_n Poisson(n; mu/2) Gamma(v/2 + n, w/2) / Gamma(v/2 + n)``.

    Summed outward from the Poisson mode so large noncentralities neither
    underflow nor waste terms.
    """
    return _noncentral_chi2_tail(w, v, mu, cfg, gammaincc)


def noncentral_chi2_cdf(w: float, v: float, mu: float, cfg: SpecialFnConfig = DEFAULT_CFG) -> float:
    """Lower tail, summed directly so small values keep full relative accuracy."""
    return _noncentral_chi2_tail(w, v, mu, cfg, gammainc)


def _noncentral_chi2_tail(w, v, mu, cfg, reg_gamma) -> float:
    if w < 0 or v <= 0 or mu < 0:
        raise ValueError("invalid noncentral chi-square arguments")
    lam = 0.5 * mu
    if lam == 0.0:
        return float(reg_gamma(0.5 * v, 0.5 * w))
    mode = int(math.floor(lam))
    total = 0.0
    block = 64
    # sweep upward then downward from the mode in vectorized blocks
    for direction in (1, -1):
        start = mode if direction == 1 else mode - 1
        n_done = 0
        while True:
            if direction == 1:
                ns = np.arange(start, start + block)
            else:
                ns = np.arange(start, start - block, -1)
                ns = ns[ns >= 0]
                if ns.size == 0:
                    break
            logw = ns * math.log(lam) - lam - gammaln(ns + 1.0)
            terms = np.exp(logw) * reg_gamma(0.5 * v + ns, 0.5 * w)
            total += float(np.sum(terms))
            n_done += ns.size
            # Poisson weights alone bound every remaining term
            if np.exp(logw[-1]) * (lam + 1) <= cfg.series_tol * max(total, 1e-300):
                break
            if n_done > cfg.max_terms:
                raise SeriesConvergenceError("noncentral chi-square series did not converge")
            start = start + direction * block
    return min(max(total, 0.0), 1.0)


def _cev_args(params, t, x, k):
    beta, delta = params.beta, params.delta
    if not beta < 1:
        raise ValueError("exact CEV price implemented for beta < 1")
    if not t > 0:
        raise ValueError("t must be positive")
    om = 1.0 - beta
    scale = om**2 * delta**2 * t
    return math.exp(2 * om * k) / scale, 1.0 / om, math.exp(2 * om * x) / scale


def cev_exact_call(params, t: float, x: float, k: float, cfg: SpecialFnConfig = DEFAULT_CFG) -> float:
    a, b, c = _cev_args(params, t, x, k)
    price = (math.exp(x) * noncentral_chi2_sf(a, 2.0 + b, c, cfg)
             - math.exp(k) * noncentral_chi2_cdf(c, b, a, cfg))
    intrinsic = max(math.exp(x) - math.exp(k), 0.0)
    return min(max(price, intrinsic), math.exp(x))


def cev_exact_put(params, t: float, x: float, k: float, cfg: SpecialFnConfig = DEFAULT_CFG) -> float:
    """Put price including the mass absorbed at zero, built from complementary tails."""
    a, b, c = _cev_args(params, t, x, k)
    price = (math.exp(k) * noncentral_chi2_sf(c, b, a, cfg)
             - math.exp(x) * noncentral_chi2_cdf(a, 2.0 + b, c, cfg))
    intrinsic = max(math.exp(k) - math.exp(x), 0.0)
    return min(max(price, intrinsic), math.exp(k))


def cev_exact_otm(params, t: float, x: float, k: float, cfg: SpecialFnConfig = DEFAULT_CFG) -> float:
    """Put for ``k < x``, call otherwise."""
    if k < x:
        return cev_exact_put(params, t, x, k, cfg)
    return cev_exact_call(params, t, x, k, cfg)
