"""Price corrections, implied-volatility corrections and density approximations.

The pipeline for one query point is::

    jet at (x, y) -> sigma_0 -> Dyson weights w_m -> u_n / vega -> sigma_n

Time is measured from the valuation date, so coefficients are evaluated on
``[0, tau]``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import opalgebra
from .blackscholes import (
    BsQuote,
    bell_polynomial,
    bs_price,
    default_table,
    gamma_term,
    vega_ratio,
    xratio,
)
from .timefunc import ExpPoly


class ExpansionDomainError(ValueError):
    """Query outside the domain of the expansion."""


@dataclass(frozen=True)
class QueryPoint:
    """Time to maturity, log spot, auxiliary factor, log strike.

    ``rate_integral`` is ``int r(s) ds`` over the life of the option; it
    shifts the strike to ``k - rate_integral``.
    """

    tau: float
    x: float
    y: float
    k: float
    rate_integral: float = 0.0

    @property
    def k_eff(self) -> float:
        return self.k - self.rate_integral


@dataclass(frozen=True)
class ChiCoefficients:
    """``u_n / vega = sum_m chi_m (-1/(sigma_0 sqrt(2 tau)))^m H_m(zeta)``."""

    n: int
    entries: Tuple[Tuple[int, float], ...]

    def ratio(self, q: BsQuote) -> float:
        return sum(chi * xratio(m, q) for m, chi in self.entries)


@dataclass
class IvExpansion:
    sigma0: float
    corrections: List[float]
    price_terms: List[float]
    chi: List[ChiCoefficients] = field(default_factory=list)

    @property
    def total(self) -> float:
        return self.sigma0 + sum(self.corrections)

    @property
    def price_total(self) -> float:
        return sum(self.price_terms)

    def partial(self, n: int) -> float:
        """``sigma_0 + sigma_1 + ... + sigma_n``."""
        return self.sigma0 + sum(self.corrections[:n])


def sigma0(jet, tau: float, t0: float = 0.0) -> float:
    """Root-mean-square volatility from the order-zero ``a`` coefficient."""
    if not tau > 0:
        raise ExpansionDomainError("tau must be positive")
    integral = jet.value("a", 0, 0).integral(t0, t0 + tau).constant_value()
    if not integral > 0:
        raise ExpansionDomainError("integrated variance is not positive")
    return math.sqrt(2.0 * integral / tau)


def chi_coefficients(jet, n: int, tau: float, s0: float, t0: float = 0.0) -> ChiCoefficients:
    w = opalgebra.dyson_ltilde(jet, n, t0 + tau, t0)
    return ChiCoefficients(n, tuple((m, wm / (tau * s0)) for m, wm in w))


def price_correction(jet, n: int, q: BsQuote, t0: float = 0.0):
    """``(u_n, chi)`` for the quote ``q`` built with ``sigma = sigma_0``."""
    if n < 1:
        raise ValueError("n must be positive")
    chi = chi_coefficients(jet, n, q.tau, q.sigma, t0)
    u = chi.ratio(q) * q.sigma * q.tau * gamma_term(q)
    return u, chi


def sigma_correction(n: int, u_ratios: Sequence[float], prior: Sequence[float], q: BsQuote,
                     table=None) -> float:
    """``sigma_n`` from ``u_n / vega`` and the lower-order corrections.

    ``u_ratios`` and ``prior`` are 1-based sequences stored from index 0,
    i.e. ``u_ratios[n-1] = u_n / vega`` and ``prior[i-1] = sigma_i``.
    """
    table = table or default_table(max(8, n))
    out = u_ratios[n - 1]
    if n == 1:
        return out
    args = [math.factorial(i) * prior[i - 1] for i in range(1, n)]
    acc = 0.0
    for h in range(2, n + 1):
        acc += bell_polynomial(n, h, args[: n - h + 1]) * vega_ratio(h, q, table)
    return out - acc / math.factorial(n)


def expand(model, point: QueryPoint, N: int, *, max_order: int = opalgebra.DEFAULT_MAX_ORDER
           ) -> IvExpansion:
    """Order-``N`` implied-volatility and price expansion at ``point``."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    if N > max_order:
        raise opalgebra.OrderCapError(f"order {N} exceeds the cap {max_order}")
    jet = model.jet(point.x, point.y, max(N, 1))
    return expand_jet(jet, point.tau, point.x, point.k_eff, N, max_order=max_order)


def expand_jet(jet, tau: float, x: float, k: float, N: int, *,
               max_order: int = opalgebra.DEFAULT_MAX_ORDER) -> IvExpansion:
    s0 = sigma0(jet, tau)
    q = BsQuote(s0, tau, x, k)
    vega = s0 * tau * gamma_term(q)
    price_terms = [bs_price(q)]
    ratios: List[float] = []
    sig: List[float] = []
    chis: List[ChiCoefficients] = []
    for n in range(1, N + 1):
        w = opalgebra.dyson_ltilde(jet, n, tau, 0.0, max_order=max_order)
        chi = ChiCoefficients(n, tuple((m, wm / (tau * s0)) for m, wm in w))
        r = chi.ratio(q)
        chis.append(chi)
        ratios.append(r)
        price_terms.append(r * vega)
        sig.append(sigma_correction(n, ratios, sig, q))
    return IvExpansion(s0, sig, price_terms, chis)


def implied_vol_approx(model, point: QueryPoint, N: int) -> float:
    return expand(model, point, N).total


# -- off-centre evaluation -----------------------------------------------------

def price_correction_offcenter(jet, n: int, t0: float, T: float, x: float, k: float,
                               y: Optional[float] = None) -> float:
    """``u_n(t0, x, y)`` with the Taylor centre fixed at the jet's centre.

    Offsets ``xi = x - xbar`` and ``ups = y - ybar`` are retained, which makes
    the result a smooth function of ``(t0, x, y)`` suitable for checking the
    nested Cauchy problems.  ``y=None`` evaluates at the centre in ``y``.
    """
    xbar = jet.x_center(t0)
    ybar = jet.y_center(t0)
    ups = 0.0 if y is None else y - ybar
    tau = T - t0
    s0 = sigma0(jet, tau, t0)
    q = BsQuote(s0, tau, x, k)
    op = opalgebra.dyson_operator(jet, n, T, t0, reduced=True)
    xi = x - xbar
    g = gamma_term(q)
    total = 0.0
    for (p, qy, r, s), c in op.items():
        if s:
            continue
        total += c.constant_value() * xi**p * ups**qy * xratio(r, q) * g
    return total


# -- transition density ---------------------------------------------------------

def _gaussian_moments(jet, t0: float, T: float):
    a0 = jet.value("a", 0, 0)
    b0 = jet.value("b", 0, 0)
    c0 = jet.value("c", 0, 0)
    f0 = jet.value("f", 0, 0)

    def integ(p: ExpPoly) -> float:
        return p.integral(t0, T).constant_value()

    mean = np.array([-integ(a0), integ(f0)])
    cov = np.array([[2 * integ(a0), integ(c0)], [integ(c0), 2 * integ(b0)]])
    return mean, cov


def _is_local_vol(jet) -> bool:
    for name in ("b", "c", "f"):
        if any(not v.is_zero() for v in jet.tables[name].values()):
            return False
    for (i, j), v in jet.tables["a"].items():
        if j > 0 and not v.is_zero():
            return False
    return True


def _gaussian_derivative_polys(prec: np.ndarray, max_r: int, max_s: int):
    """Polynomials ``P_rs(w)`` with ``d^r_w1 d^s_w2 g = P_rs(w) g`` for the centred Gaussian."""
    dim = prec.shape[0]
    out: Dict[Tuple[int, int], Dict[Tuple[int, int], float]] = {(0, 0): {(0, 0): 1.0}}

    def deriv(poly, axis):
        res: Dict[Tuple[int, int], float] = {}
        for (e1, e2), c in poly.items():
            e = (e1, e2)
            if e[axis]:
                ne = list(e)
                ne[axis] -= 1
                res[tuple(ne)] = res.get(tuple(ne), 0.0) + c * e[axis]
            # minus (P w)_axis times poly
            for j in range(dim):
                pij = prec[axis, j]
                if pij == 0.0:
                    continue
                ne = list(e)
                ne[j] += 1
                res[tuple(ne)] = res.get(tuple(ne), 0.0) - c * pij
        return res

    for r in range(max_r + 1):
        if r > 0:
            out[(r, 0)] = deriv(out[(r - 1, 0)], 0)
        for s in range(1, max_s + 1):
            out[(r, s)] = deriv(out[(r, s - 1)], 1)
    return out


_density_lock = threading.Lock()
_density_cache: Dict[tuple, tuple] = {}


def _density_setup(jet, t: float, T: float, N: int):
    """Gaussian moments, operators and derivative polynomials for one (jet, t, T, N)."""
    key = (jet.cache_key(), float(t), float(T), N)
    with _density_lock:
        hit = _density_cache.get(key)
    if hit is not None:
        return hit
    mean, cov = _gaussian_moments(jet, t, T)
    one_d = _is_local_vol(jet)
    if one_d:
        if not cov[0, 0] > 0:
            raise ExpansionDomainError("non-positive variance")
        prec = np.array([[1.0 / cov[0, 0]]])
        norm = 1.0 / math.sqrt(2 * math.pi * cov[0, 0])
    else:
        det = np.linalg.det(cov)
        if not (det > 0 and cov[0, 0] > 0):
            raise ExpansionDomainError("covariance is not positive definite")
        prec = np.linalg.inv(cov)
        norm = 1.0 / (2 * math.pi * math.sqrt(det))
    ops = [opalgebra.cached_operator(jet, n, T, t, reduced=False) for n in range(1, N + 1)]
    # keep only monomials evaluated at the centre, with their derivative polynomials
    terms = []
    if ops:
        max_r = max((r for op in ops for (_, _, r, _) in op.monomials), default=0)
        max_s = 0 if one_d else max((s for op in ops for (_, _, _, s) in op.monomials), default=0)
        polys = _gaussian_derivative_polys(prec, max_r, max_s)
        for op in ops:
            for (p, q, r, s), c in op.items():
                if p or q or (one_d and s):
                    continue
                poly = tuple((e1, e2, pc) for (e1, e2), pc in polys[(r, s)].items()
                             if not (one_d and e2))
                # derivative in the start point is minus the derivative in w
                terms.append((c.constant_value() * (-1) ** (r + s), poly))
    out = (mean, prec, norm, one_d, tuple(terms))
    with _density_lock:
        if len(_density_cache) >= 256:
            _density_cache.pop(next(iter(_density_cache)))
        _density_cache[key] = out
    return out


def density_approx(model, t: float, z: Tuple[float, float], T: float,
                   zeta_pt: Tuple[float, float], N: int, *, jet=None) -> float:
    """Order-``N`` transition density from ``z`` at time ``t`` to ``zeta_pt`` at ``T``.

    For local-volatility models the density is one dimensional in ``x`` and
    the second coordinate of ``zeta_pt`` is ignored.
    """
    if not T > t:
        raise ExpansionDomainError("T must exceed t")
    x, y = z
    if jet is None:
        jet = model.jet(x, y, max(N, 1))
    mean, prec, norm, one_d, terms = _density_setup(jet, t, T, N)
    w0 = zeta_pt[0] - x - mean[0]
    w1 = 0.0 if one_d else zeta_pt[1] - y - mean[1]
    if one_d:
        base = norm * math.exp(-0.5 * prec[0, 0] * w0 * w0)
    else:
        quad = prec[0, 0] * w0 * w0 + 2 * prec[0, 1] * w0 * w1 + prec[1, 1] * w1 * w1
        base = norm * math.exp(-0.5 * quad)
    total = 1.0
    for c, poly in terms:
        val = 0.0
        for e1, e2, pc in poly:
            val += pc * w0**e1 * w1**e2
        total += c * val
    return base * total
