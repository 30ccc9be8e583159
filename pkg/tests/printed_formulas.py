"""Closed-form implied-volatility corrections transcribed for the golden tests.

Each function returns ``[sigma_0, sigma_1, ...]`` with ``t`` the time to
maturity and ``m = k - x`` the log-moneyness.
"""

import math


def cev_sigmas(delta, beta, x, t, k):
    b1 = beta - 1
    s0 = delta * math.exp(b1 * x)
    m = k - x
    s1 = 0.5 * b1 * s0 * m
    s2 = t / 24 * b1**2 * s0**3 - t**2 / 96 * b1**2 * s0**5 + b1**2 * s0 * m**2 / 12
    s3 = t / 16 * b1**3 * s0**3 * m - 5 * t**2 / 192 * b1**3 * s0**5 * m
    return [s0, s1, s2, s3]


def heston_sigmas(kappa, theta, delta, rho, x, v, t, k):
    th, ka, de = theta, kappa, delta
    kt = ka * t
    s0 = math.sqrt((-th + th * kt + math.exp(-kt) * (th - v) + v) / kt)
    z = (x - k - s0**2 * t / 2) / (s0 * math.sqrt(2 * t))
    big = -2 * th - th * kt - math.exp(kt) * (th * (kt - 2) + v) + kt * v + v
    s1 = de * rho * z * math.exp(-kt) * big / (math.sqrt(2) * ka**2 * s0**2 * t**1.5)
    e1, e2 = math.exp(kt), math.exp(2 * kt)
    bracket = (
        -2 * math.sqrt(2) * ka * s0**3 * t**1.5 * z
        * (-th - 4 * e1 * (th + kt * (th - v)) + e2 * (th * (5 - 2 * kt) - 2 * v) + 2 * v)
        + ka * s0**2 * t * (4 * z**2 - 2)
        * (th + e2 * (-5 * th + 2 * th * kt + 8 * rho**2 * (th * (kt - 3) + v) + 2 * v))
        + ka * s0**2 * t * (4 * z**2 - 2)
        * (4 * e1 * (th + th * kt + rho**2 * (th * (kt * (kt + 4) + 6) - v * (kt * (kt + 2) + 2))
                     - kt * v) - 2 * v)
        + 4 * math.sqrt(2) * rho**2 * s0 * math.sqrt(t) * z * (2 * z**2 - 3) * big**2
        + 4 * rho**2 * (4 * (z**2 - 3) * z**2 + 3) * big**2
    )
    s2 = (de**2 * math.exp(-2 * kt) / (32 * ka**4 * s0**5 * t**3) * bracket
          - s1**2 * (4 * (x - k) ** 2 - s0**4 * t**2) / (8 * s0**3 * t))
    return [s0, s1, s2]


def three_halves_sigmas(kappa, theta, delta, rho, x, y, t, k):
    ka, th, de = kappa, theta, delta
    s0 = math.exp(y / 2)
    m = k - x
    A = de**2 - de * rho + 2 * ka
    s1 = t / 8 * (2 * th * ka * s0 - s0**3 * A) + 0.25 * de * rho * s0 * m
    B = 13 * de**4 - 26 * de**3 * rho + 4 * de**2 * (13 * ka + 4 * rho**2 - 1) - 52 * de * ka * rho + 52 * ka**2
    s2 = (
        t / 96 * de**2 * (8 - 7 * rho**2) * s0**3
        + t**2 / 384 * (-36 * th * ka * s0**3 * A + s0**5 * B + 20 * th**2 * ka**2 * s0)
        + t / 96 * de * rho * s0 * (6 * th * ka - 7 * s0**2 * A) * m
        - de**2 * (rho**2 - 2) * s0 * m**2 / 48
    )
    C = 35 * de**4 - 70 * de**3 * rho + 2 * de**2 * (70 * ka + 29 * rho**2 - 16) - 140 * de * ka * rho + 140 * ka**2
    D = 45 * de**4 - 90 * de**3 * rho + 4 * de**2 * (45 * ka + 14 * rho**2 - 4) - 180 * de * ka * rho + 180 * ka**2
    s3 = (
        t**2 / 256 * de**2 * s0**3 * (5 * (3 * rho**2 - 4) * s0**2 * A + 2 * th * ka * (8 - 7 * rho**2))
        + t**3 / 3072 * (-132 * th**2 * ka**2 * s0**3 * A + 10 * th * ka * s0**5 * B
                         + 24 * th**3 * ka**3 * s0 - s0**7 * A * C)
        + t / 128 * de**3 * rho * (4 - 3 * rho**2) * s0**3 * m
        + t**2 * de * rho * s0 / 1536 * (-84 * th * ka * s0**2 * A) * m
        + t**2 * de * rho * s0 / 1536 * (s0**4 * D + 20 * th**2 * ka**2) * m
        + t / 384 * de**2 * s0 * ((rho**2 - 8) * s0**2 * A - 2 * th * ka * (rho**2 - 2)) * m**2
    )
    return [s0, s1, s2, s3]


def sabr_sigmas(beta, delta, rho, x, y, t, k, sigma30_sign=-1.0):
    """``sigma30_sign`` selects the sign of the ``t^2`` term in the pure-CEV third-order part."""
    b1, de = beta - 1, delta
    s0 = math.exp(y + b1 * x)
    m = k - x
    s10 = 0.5 * m * b1 * s0
    s01 = 0.25 * de * (2 * m * rho + t * s0 * (-de + rho * s0))
    s20 = t / 24 * b1**2 * s0**3 - t**2 / 96 * b1**2 * s0**5 + b1**2 * s0 * m**2 / 12
    s11 = (t / 12 * b1 * de * rho * s0**2 - t**2 / 48 * b1 * de * rho * s0**4
           + t / 24 * b1 * de * s0 * (de + rho * s0) * m - b1 * de * rho * m**2 / 3)
    s02 = (t / 24 * de**2 * (8 - 3 * rho**2) * s0
           + t**2 / 96 * de**2 * s0 * (5 * de**2 + 2 * s0 * ((6 * rho**2 - 2) * s0 - 7 * de * rho))
           - t / 24 * de**2 * rho * (de - 3 * rho * s0) * m
           + de**2 * (2 - 3 * rho**2) / (12 * s0) * m**2)
    s30 = t / 16 * b1**3 * s0**3 * m + sigma30_sign * 5 * t**2 / 192 * b1**3 * s0**5 * m
    s21 = (t**2 / 288 * b1**2 * de * s0**3 * (17 * rho * s0 - 11 * de)
           + t**3 / 384 * b1**2 * de * s0**5 * (3 * de - 5 * rho * s0)
           + t / 16 * b1**2 * de * rho * s0**2 * m
           - 3 * t**2 / 64 * b1**2 * de * rho * s0**4 * m
           + t / 48 * b1**2 * de * s0 * (rho * s0 - 2 * de) * m**2
           + 5 / 24 * b1**2 * de * rho * m**3)
    s12 = (-t**2 / 72 * b1 * de**2 * rho * s0**2 * (de - 7 * rho * s0)
           + t**3 / 96 * b1 * de**2 * rho * s0**4 * (2 * de - 3 * rho * s0)
           + t / 144 * b1 * de**2 * (2 - 17 * rho**2) * s0 * m
           + t**2 / 192 * b1 * de**2 * s0 * (de**2 - 6 * de * rho * s0 + 2 * (rho**2 - 1) * s0**2) * m
           + t / 48 * b1 * de**2 * rho * (5 * rho * s0 - 7 * de) * m**2
           + b1 * de**2 * (16 * rho**2 - 7) / (24 * s0) * m**3)
    s03 = (t**2 / 96 * de**3 * s0 * (3 * de * (rho**2 - 4) + rho * (26 - 9 * rho**2) * s0)
           + t**3 / 384 * de**3 * s0 * (s0 * (19 * de**2 * rho + 2 * s0 * (de * (8 - 21 * rho**2)
                                                                       + rho * (15 * rho**2 - 11) * s0))
                                         - 3 * de**3)
           + t / 48 * de**3 * rho * (3 * rho**2 - 2) * m
           - t**2 / 192 * de**3 * rho * (de**2 + 6 * s0 * (de * rho + (1 - 2 * rho**2) * s0)) * m
           - t / 16 * de**3 * rho * (rho**2 - 1) * m**2
           + de**3 * rho * (6 * rho**2 - 5) / (24 * s0**2) * m**3)
    return [s0, s10 + s01, s20 + s11 + s02, s30 + s21 + s12 + s03]


def generic_sigmas(eta, tau, m):
    """Second-order closed forms for a time-homogeneous jet.

    ``eta[name][(i, j)]`` holds ``C(i+j, i) dx^i dy^j name`` at the expansion
    point (mixed second derivatives doubled, everything else plain).  Returns
    the five groups
    ``(s10, s01, s20, s11, s02)`` plus ``s0``.
    """

    def g(name, i, j):
        return eta.get(name, {}).get((i, j), 0.0)

    a00, a10, a01, a20, a11, a02 = (g("a", 0, 0), g("a", 1, 0), g("a", 0, 1),
                                    g("a", 2, 0), g("a", 1, 1), g("a", 0, 2))
    b00 = g("b", 0, 0)
    c00, c10, c01 = g("c", 0, 0), g("c", 1, 0), g("c", 0, 1)
    f00, f10, f01 = g("f", 0, 0), g("f", 1, 0), g("f", 0, 1)
    s0 = math.sqrt(2 * a00)
    s10 = a10 / (2 * s0) * m
    s01 = tau * a01 * (c00 + 2 * f00) / (4 * s0) + a01 * c00 / (2 * s0**3) * m
    s20 = (tau * (s0 * a20 / 12 - a10**2 / (8 * s0)) + tau**2 * (-s0 * a10**2 / 96)
           + (2 * s0**2 * a20 - 3 * a10**2) / (12 * s0**3) * m**2)
    s11 = (tau / (12 * s0**3) * (s0**2 * a11 * c00 + a01 * (a10 * c00 - 2 * s0**2 * c10))
           + tau**2 / (48 * s0) * (-a01 * a10 * c00)
           + tau / (24 * s0**3) * (2 * s0**2 * a11 * (c00 + 2 * f00)
                                   + a01 * (2 * s0**2 * (c10 + 2 * f10) - 5 * a10 * (c00 + 2 * f00))) * m
           + 1 / (6 * s0**5) * (s0**2 * a11 * c00 + a01 * (s0**2 * c10 - 5 * a10 * c00)) * m**2)
    s02 = (tau / (24 * s0**5) * (4 * s0**2 * a02 * (3 * s0**2 * b00 - c00**2)
                                 + a01 * (a01 * (9 * c00**2 - 8 * s0**2 * b00) - 4 * s0**2 * c00 * c01))
           + tau**2 / (24 * s0**3) * (a01 * (-2 * s0**2 * a01 * b00
                                             + c00 * (s0**2 * (c01 + 2 * f01) - 3 * a01 * f00))
                                      + a01 * f00 * (2 * s0**2 * (c01 + 2 * f01) - 3 * a01 * f00)
                                      + s0**2 * a02 * (c00 + 2 * f00) ** 2)
           + tau / (24 * s0**5) * (a01 * (c00 * (4 * s0**2 * (c01 + f01) - 18 * a01 * f00)
                                          - 9 * a01 * c00**2 + 4 * s0**2 * c01 * f00)
                                   + 4 * s0**2 * a02 * c00 * (c00 + 2 * f00)) * m
           + 1 / (12 * s0**7) * (a01 * (a01 * (4 * s0**2 * b00 - 9 * c00**2) + 2 * s0**2 * c00 * c01)
                                 + 2 * s0**2 * a02 * c00**2) * m**2)
    return s0, s10, s01, s20, s11, s02
