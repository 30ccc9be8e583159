"""Fourier call pricing for the Heston and 3/2 models.

Prices are ``(1/pi) Re int_0^inf E[e^{i lam X_t}] phi_hat(lam) d lam_r`` on the
line ``lam = lam_r + i lam_i`` with ``lam_i < -1``, where
``phi_hat(lam) = -e^{k - i k lam} / (i lam + lam^2)`` is the generalized
transform of the call payoff.  Moving the line above both poles
(``lam_i > 0``) turns the same integral into the put price, which is used
for out-of-the-money quotes below the spot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from scipy.special import loggamma, roots_legendre

from .special import log_kummer_m


class QuadratureError(ArithmeticError):
    """Integral did not converge to the requested tolerance."""


@dataclass(frozen=True)
class FourierContour:
    lambda_i: float = -1.5
    truncation: float | None = None
    quad_tol: float = 1e-9

    def __post_init__(self):
        if not self.lambda_i < -1:
            raise ValueError("lambda_i must be below -1 for call payoffs")


_NODES = {n: roots_legendre(n) for n in (24, 48)}


def payoff_transform(lam: np.ndarray, k: float) -> np.ndarray:
    return -np.exp(k - 1j * k * lam) / (1j * lam + lam**2)


class FourierPricer:
    """Call prices from a vectorized characteristic function.

    ``cf(lam)`` returns ``E[exp(i lam X_t)]`` for complex arrays ``lam``.
    Characteristic-function values are cached per panel so that a strike
    grid reuses them.
    """

    def __init__(self, cf: Callable[[np.ndarray], np.ndarray], scale: float,
                 contour: FourierContour = FourierContour(), max_panels: int = 4000,
                 put_lambda_i: float = 0.5):
        if not put_lambda_i > 0:
            raise ValueError("put_lambda_i must be positive")
        self.cf = cf
        self.contour = contour
        self.put_lambda_i = put_lambda_i
        # panel width from the characteristic decay scale 1/(sigma sqrt t)
        self.width = max(min(1.0 / scale, 50.0), 0.05)
        self.max_panels = max_panels
        self._cache: Dict[tuple, Tuple[np.ndarray, np.ndarray]] = {}
        self._edge_cache: Dict[Tuple[float, float], list] = {}

    @staticmethod
    def _edges(h0: float, width: float, count: int):
        """Panel edges: widths double from ``h0`` up to ``width``."""
        edges = [0.0]
        h = h0
        for _ in range(count):
            edges.append(edges[-1] + h)
            h = min(2 * h, width)
        return edges

    def _panel(self, li: float, j: int, n: int, h0: float, width: float):
        key = (li, j, n, h0, width)
        hit = self._cache.get(key)
        if hit is None:
            x, w = _NODES[n]
            edges = self._edge_cache.get((h0, width))
            if edges is None or len(edges) <= j + 1:
                edges = self._edges(h0, width, max(2 * (j + 1), 64))
                self._edge_cache[(h0, width)] = edges
            a, b = edges[j], edges[j + 1]
            lr = a + 0.5 * (b - a) * (x + 1.0)
            lam = lr + 1j * li
            vals = np.asarray(self.cf(lam), dtype=complex)
            hit = (lam, vals * (0.5 * (b - a) * w))
            self._cache[key] = hit
        return hit

    def _integrate(self, li: float, k: float, n: int, h0: float, width: float) -> float:
        tol = self.contour.quad_tol
        total = 0.0
        quiet = 0
        limit = self.contour.truncation
        for j in range(self.max_panels):
            lam, wv = self._panel(li, j, n, h0, width)
            if limit is not None and lam.real.min() >= limit:
                return total
            contrib = float(np.real(np.sum(wv * payoff_transform(lam, k))))
            total += contrib
            if limit is None:
                if abs(contrib) <= tol * 1e-2 * max(abs(total), 1e-300):
                    quiet += 1
                    if quiet >= 3:
                        return total
                else:
                    quiet = 0
        if limit is None:
            raise QuadratureError("Fourier integral tail did not decay")
        return total

    def _price(self, li: float, k: float) -> float:
        width = self.width
        # the payoff transform has poles at lam = 0 and lam = -i; the first
        # panel resolves the peak they leave on the contour
        h0 = min(width, 2.0 * min(abs(li), abs(li + 1.0)))
        for _ in range(6):
            coarse = self._integrate(li, k, 24, h0, width) / math.pi
            fine = self._integrate(li, k, 48, h0, width) / math.pi
            if abs(fine - coarse) <= self.contour.quad_tol * max(abs(fine), math.exp(k) * 1e-6):
                return fine
            width *= 0.5
            h0 *= 0.5
        raise QuadratureError("Fourier integral did not converge")

    def call(self, x: float, k: float) -> float:
        """Undiscounted call price, clipped to the no-arbitrage bounds."""
        lo = max(math.exp(x) - math.exp(k), 0.0)
        return min(max(self._price(self.contour.lambda_i, k), lo), math.exp(x))

    def put(self, x: float, k: float) -> float:
        """Undiscounted put price from the contour above the poles."""
        lo = max(math.exp(k) - math.exp(x), 0.0)
        return min(max(self._price(self.put_lambda_i, k), lo), math.exp(k))

    def otm(self, x: float, k: float) -> float:
        """Put for ``k < x``, call otherwise."""
        return self.put(x, k) if k < x else self.call(x, k)


# -- Heston -------------------------------------------------------------------

def heston_cf(kappa, theta, delta, rho, t, x, v, lam):
    """``E[exp(i lam X_t)]`` in the numerically stable rotation-free form."""
    lam = np.asarray(lam, dtype=complex)
    il = 1j * lam
    beta = kappa - rho * delta * il
    d = np.sqrt(beta**2 + delta**2 * (il + lam**2))
    g = (beta - d) / (beta + d)
    e = np.exp(-d * t)
    C = kappa * theta / delta**2 * ((beta - d) * t - 2.0 * np.log((1 - g * e) / (1 - g)))
    D = (beta - d) / delta**2 * (1 - e) / (1 - g * e)
    return np.exp(il * x + C + D * v)


def heston_call_fourier(params, t, x, v, k, contour: FourierContour = FourierContour()):
    pricer = heston_pricer(params, t, x, v, contour)
    return pricer.call(x, k)


def heston_pricer(params, t, x, v, contour: FourierContour = FourierContour()) -> FourierPricer:
    kap, th, de, rho = params.kappa, params.theta, params.delta, params.rho
    vol = math.sqrt(max(th + (v - th) * (1 - math.exp(-kap * t)) / (kap * t), 1e-8))
    return FourierPricer(lambda lam: heston_cf(kap, th, de, rho, t, x, v, lam),
                         vol * math.sqrt(t), contour)


# -- 3/2 ------------------------------------------------------------------------

def three_halves_cf(params, t, x, y, lam):
    """``E[exp(i lam X_t)]`` for the 3/2 model; ``y`` is the log variance."""
    kap, th, de, rho = params.kappa, params.theta, params.delta, params.rho
    z = math.exp(y) / (kap * th) * math.expm1(kap * th * t)
    X = 2.0 / (de**2 * z)
    lam_arr = np.atleast_1d(np.asarray(lam, dtype=complex))
    out = np.empty(lam_arr.shape, dtype=complex)
    for idx, l in np.ndenumerate(lam_arr):
        p = -kap + 1j * de * rho * l
        q = 0.5 * (1j * l + l * l)
        h = 0.5 - p / de**2
        root = np.sqrt(h * h + 2 * q / de**2)
        if root.real < 0:
            root = -root
        f = -h + root
        gam = 2 * (f + 1 - p / de**2)
        logv = (complex(loggamma(gam - f)) - complex(loggamma(gam)) + f * math.log(X)
                + log_kummer_m(f, gam, -X))
        out[idx] = np.exp(1j * l * x + logv)
    return out if np.ndim(lam) else out[0]


def three_halves_put_contour(params) -> float:
    """Imaginary part for the put contour, inside the strip where ``E[S^-u]`` stays finite.

    On ``lam = i u`` the square root in the transform has the radicand
    ``(1/2 + (kappa + delta rho u)/delta^2)^2 - (u + u^2)/delta^2``, a downward
    parabola in ``u`` that is positive at zero.  Past its positive root the
    negative moment explodes in finite time, so the contour stays at half
    that root (capped at 0.5).
    """
    kap, d, rho = params.kappa, params.delta, params.rho
    A, B = rho / d, 0.5 + kap / d**2
    qa = A * A - 1.0 / d**2
    qb = 2 * A * B - 1.0 / d**2
    qc = B * B
    root = (-qb - math.sqrt(qb * qb - 4 * qa * qc)) / (2 * qa)
    return min(0.5, 0.5 * root)


def three_halves_pricer(params, t, x, y, contour: FourierContour = FourierContour()
                        ) -> FourierPricer:
    vol = math.exp(0.5 * y)
    return FourierPricer(lambda lam: three_halves_cf(params, t, x, y, lam),
                         vol * math.sqrt(t), contour,
                         put_lambda_i=three_halves_put_contour(params))


def three_halves_call_fourier(params, t, x, y, k, contour: FourierContour = FourierContour()):
    return three_halves_pricer(params, t, x, y, contour).call(x, k)
