"""Black-Scholes prices, Hermite ratios of x-derivatives, vega ratios and
implied-volatility inversion, all in log coordinates ``(x, k)`` with zero rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from scipy import integrate
from scipy.special import ndtr

TAU_MIN = 1e-12
SIGMA_LO, SIGMA_HI = 1e-8, 10.0
HERMITE_CAP = 64


class BsDomainError(ValueError):
    """Inputs outside the domain of a Black-Scholes routine."""


@dataclass(frozen=True)
class BsQuote:
    sigma: float
    tau: float
    x: float
    k: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise BsDomainError("sigma must be positive")
        if not self.tau >= TAU_MIN:
            raise BsDomainError(f"tau must be at least {TAU_MIN}")

    @property
    def sqrt_tau(self) -> float:
        return math.sqrt(self.tau)

    @property
    def d_plus(self) -> float:
        s = self.sigma * self.sqrt_tau
        return (self.x - self.k) / s + 0.5 * s

    @property
    def d_minus(self) -> float:
        return self.d_plus - self.sigma * self.sqrt_tau

    @property
    def zeta(self) -> float:
        return (self.x - self.k - 0.5 * self.sigma**2 * self.tau) / (
            self.sigma * math.sqrt(2 * self.tau))


def bs_price(q: BsQuote) -> float:
    """Undiscounted call ``e^x N(d+) - e^k N(d-)``."""
    return math.exp(q.x) * ndtr(q.d_plus) - math.exp(q.k) * ndtr(q.d_minus)


def bs_vega(q: BsQuote) -> float:
    """``d price / d sigma``."""
    return math.exp(q.x) * math.sqrt(q.tau) * math.exp(-0.5 * q.d_plus**2) / math.sqrt(2 * math.pi)


def gamma_term(q: BsQuote) -> float:
    """``(dxx - dx) u_BS`` in closed Gaussian form."""
    s = q.sigma * math.sqrt(2 * math.pi * q.tau)
    return math.exp(q.k - q.zeta**2) / s


def bs_price_roper(q: BsQuote, quad_tol: float = 1e-13) -> float:
    """Price as intrinsic value plus an integral of vega over volatility."""
    intrinsic = max(math.exp(q.x) - math.exp(q.k), 0.0)
    m = q.x - q.k
    st = q.sqrt_tau

    def integrand(w):
        if w == 0.0:
            return 0.0
        return math.exp(-0.5 * (m / (w * st) + 0.5 * w * st) ** 2)

    # the integrand switches on near w ~ |m|/sqrt(tau) and peaks at sqrt(2|m|/tau);
    # splitting there keeps small-moneyness cases from being skipped
    cuts = sorted({c for c in (abs(m) / st, 10 * abs(m) / st, math.sqrt(2 * abs(m)) / st)
                   if 0.0 < c < q.sigma})
    edges = [0.0] + cuts + [q.sigma]
    val = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=quad_tol, limit=200)
        val += v
        err += e
    if not math.isfinite(val) or err > max(1e3 * quad_tol * abs(val), 1e-300):
        raise ArithmeticError("quadrature did not converge")
    return intrinsic + math.exp(q.x) * math.sqrt(q.tau / (2 * math.pi)) * val


def hermite(n: int, zeta: float) -> float:
    """Physicists' Hermite polynomial by three-term recurrence."""
    if n < 0 or n > HERMITE_CAP:
        raise ValueError("Hermite order out of range")
    h0, h1 = 1.0, 2.0 * zeta
    if n == 0:
        return h0
    for m in range(1, n):
        h0, h1 = h1, 2.0 * zeta * h1 - 2.0 * m * h0
    return h1


def xratio(m: int, q: BsQuote) -> float:
    """``dx^m (dxx - dx) u_BS / (dxx - dx) u_BS``."""
    return (-1.0 / (q.sigma * math.sqrt(2 * q.tau))) ** m * hermite(m, q.zeta)


class SigmaDerivTable:
    """Coefficients expressing ``d^n_sigma u`` through powers of ``tau (dxx - dx)``.

    ``coeff(n, q)`` is the coefficient of ``sigma^(n-2q)`` in the n-th
    sigma-derivative; ``coeff(n, 0) = 1``.
    """

    def __init__(self, n_max: int = 8):
        self.n_max = n_max
        c = {(1, 0): 1.0}
        for n in range(2, n_max + 1):
            for qq in range(0, n // 2 + 1):
                j = n - 2 * qq
                c[(n, qq)] = (j + 1) * c.get((n - 1, qq - 1), 0.0) if qq >= 1 else 0.0
                # entry c_{n-1, j-1} sits at q index qq in row n-1
                c[(n, qq)] += c.get((n - 1, qq), 0.0)
        self._c = c

    def coeff(self, n: int, q: int) -> float:
        if n > self.n_max:
            raise ValueError("table does not cover this order")
        return self._c.get((n, q), 0.0)


@lru_cache(maxsize=8)
def default_table(n_max: int = 8) -> SigmaDerivTable:
    return SigmaDerivTable(n_max)


def vega_ratio(n: int, q: BsQuote, table: SigmaDerivTable | None = None) -> float:
    """``d^n_sigma u_BS / d_sigma u_BS`` for ``n >= 2`` in closed Hermite form."""
    if n < 2:
        raise ValueError("vega_ratio needs n >= 2")
    table = table or default_table(max(8, n))
    s, t = q.sigma, q.tau
    total = 0.0
    for qq in range(0, n // 2 + 1):
        j = n - 2 * qq
        c = table.coeff(n, qq)
        if c == 0.0:
            continue
        pref = c * s ** (j - 1) * t ** (n - qq - 1)
        base = n - qq - 1
        inner = 0.0
        # (dxx - dx)^base expanded binomially; the dx factors carry a sign
        for p in range(base + 1):
            inner += math.comb(base, p) * (-1) ** (base - p) * xratio(p + base, q)
        total += pref * inner
    return total


def bs_otm_price(q: BsQuote) -> float:
    """Out-of-the-money option price: put for ``k < x``, call otherwise.

    Avoids the cancellation of a deep in-the-money call against its
    intrinsic value.
    """
    if q.k < q.x:
        return math.exp(q.k) * ndtr(-q.d_minus) - math.exp(q.x) * ndtr(-q.d_plus)
    return bs_price(q)


def implied_vol(price: float, tau: float, x: float, k: float, *, tol: float = 1e-14,
                max_iter: int = 200) -> float:
    """Invert the call price ``price`` for sigma.

    In-the-money calls are converted to out-of-the-money puts by parity; see
    ``implied_vol_otm``.
    """
    if not tau >= TAU_MIN:
        raise BsDomainError("tau below the supported minimum")
    ex, ek = math.exp(x), math.exp(k)
    lower = max(ex - ek, 0.0)
    if not price > lower:
        raise BsDomainError(f"price {price!r} at or below the lower bound {lower!r}")
    if not price < ex:
        raise BsDomainError(f"price {price!r} at or above the upper bound {ex!r}")
    return implied_vol_otm(price - lower, tau, x, k, tol=tol, max_iter=max_iter)


def implied_vol_otm(otm_price: float, tau: float, x: float, k: float, *, tol: float = 1e-14,
                    max_iter: int = 200) -> float:
    """Invert an out-of-the-money price (put if ``k < x``, else call) for sigma.

    Safeguarded Newton on ``log price`` over ``[1e-8, 10]``; the log makes the
    step scale-free for far out-of-the-money quotes.
    """
    if not tau >= TAU_MIN:
        raise BsDomainError("tau below the supported minimum")
    upper = math.exp(k) if k < x else math.exp(x)
    if not otm_price > 0:
        raise BsDomainError(f"out-of-the-money price {otm_price!r} is not positive")
    if not otm_price < upper:
        raise BsDomainError(f"price {otm_price!r} at or above the upper bound {upper!r}")
    target = math.log(otm_price)

    def g(s):
        v = bs_otm_price(BsQuote(s, tau, x, k))
        return (math.log(v) if v > 0 else -math.inf) - target

    lo, hi = SIGMA_LO, SIGMA_HI
    if g(lo) > 0 or g(hi) < 0:
        raise BsDomainError("price not attainable on the volatility bracket")
    s = min(max(math.sqrt(2 * abs(x - k) / tau), 0.05), 2.0)
    for _ in range(max_iter):
        gs = g(s)
        if abs(gs) <= tol:
            return s
        if gs > 0:
            hi = s
        else:
            lo = s
        q = BsQuote(s, tau, x, k)
        val = bs_otm_price(q)
        s_new = math.nan
        if val > 0:
            s_new = s - gs * val / bs_vega(q)
        if not lo < s_new < hi:
            s_new = 0.5 * (lo + hi)
        if abs(s_new - s) <= 1e-15 * s:
            return s_new
        s = s_new
    return s


def bell_polynomial(n: int, h: int, args: Sequence[float]) -> float:
    """Partial Bell polynomial ``B_{n,h}(z_1, ..., z_{n-h+1})``."""
    if not (1 <= h <= n):
        raise ValueError("need 1 <= h <= n")
    m = n - h + 1
    if len(args) < m:
        raise ValueError("need n-h+1 arguments")
    total = 0.0
    for js in _bell_index_sets(n, h):
        term = float(math.factorial(n))
        for i, j in enumerate(js, start=1):
            if j:
                term *= (args[i - 1] / math.factorial(i)) ** j / math.factorial(j)
        total += term
    return total


@lru_cache(maxsize=None)
def _bell_index_sets(n: int, h: int):
    """Tuples ``(j_1..j_m)`` with ``sum j = h`` and ``sum i j_i = n``."""
    m = n - h + 1
    out = []

    def rec(i, remaining_h, remaining_n, acc):
        if i > m:
            if remaining_h == 0 and remaining_n == 0:
                out.append(tuple(acc))
            return
        for j in range(0, min(remaining_h, remaining_n // i) + 1):
            acc.append(j)
            rec(i + 1, remaining_h - j, remaining_n - i * j, acc)
            acc.pop()

    rec(1, h, n, [])
    return tuple(out)
