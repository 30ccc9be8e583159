"""Monte Carlo call prices for every model, used as a last-resort oracle.

Paths are generated in fixed-size blocks, each with its own substream spawned
from the master seed, so results do not depend on the number of threads.
Antithetic pairs share one normal draw; the standard error is computed from
the pair averages.

Schemes (all in the model's own state variables):

* constant volatility: exact lognormal step;
* CEV and SABR: Euler on the price ``S = e^x`` absorbed at zero, SABR log
  volatility sampled exactly;
* Heston: full-truncation Euler on the untransformed variance;
* 3/2: log-Euler on the price and Euler on the log variance.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..models import CEV, SABR, ConstantVol, Heston, ThreeHalves

BLOCK_PAIRS = 50_000


def _payoff_sums(model, t, x, y, k, pairs, steps, rng):
    dt = t / steps
    sq = math.sqrt(dt)
    shape = (2, pairs)

    def normals():
        z = rng.standard_normal(pairs)
        return np.stack([z, -z])

    if isinstance(model, ConstantVol):
        s2 = model.sigma**2
        xt = x - 0.5 * s2 * t + model.sigma * math.sqrt(t) * normals()
        st = np.exp(xt)
    elif isinstance(model, CEV):
        st = np.full(shape, math.exp(x))
        for _ in range(steps):
            dw = sq * normals()
            alive = st > 0
            st = np.where(alive, st + model.delta * np.power(np.maximum(st, 0.0), model.beta) * dw,
                          0.0)
            st = np.maximum(st, 0.0)
    elif isinstance(model, SABR):
        rb = math.sqrt(1 - model.rho**2)
        d = model.delta
        st = np.full(shape, math.exp(x))
        yy = np.full(shape, float(y))
        for _ in range(steps):
            z1, z2 = normals(), normals()
            vol = np.exp(yy)
            st = st + vol * np.power(st, model.beta) * sq * z1
            st = np.maximum(st, 0.0)
            yy = yy - 0.5 * d * d * dt + d * sq * (model.rho * z1 + rb * z2)
    elif isinstance(model, Heston):
        rb = math.sqrt(1 - model.rho**2)
        kap, th, d = model.kappa, model.theta, model.delta
        xx = np.full(shape, float(x))
        v = np.full(shape, float(y))
        for _ in range(steps):
            z1, z2 = normals(), normals()
            vp = np.maximum(v, 0.0)
            sv = np.sqrt(vp)
            xx = xx - 0.5 * vp * dt + sv * sq * z1
            v = v + kap * (th - vp) * dt + d * sv * sq * (model.rho * z1 + rb * z2)
        st = np.exp(xx)
    elif isinstance(model, ThreeHalves):
        rb = math.sqrt(1 - model.rho**2)
        kap, th, d = model.kappa, model.theta, model.delta
        xx = np.full(shape, float(x))
        yy = np.full(shape, float(y))
        for _ in range(steps):
            z1, z2 = normals(), normals()
            e = np.exp(yy)
            se = np.sqrt(e)
            xx = xx - 0.5 * e * dt + se * sq * z1
            yy = yy + (kap * th - (kap + 0.5 * d * d) * e) * dt + d * se * sq * (
                model.rho * z1 + rb * z2)
        st = np.exp(xx)
    else:
        raise TypeError(f"no simulation scheme for {type(model).__name__}")
    pay = np.maximum(st - math.exp(k), 0.0)
    pair = 0.5 * (pay[0] + pay[1])
    # shifted moments keep a constant sample at exactly zero variance
    d = pair - pair[0]
    sd = float(d.sum())
    m2 = float((d * d).sum()) - sd * sd / pairs
    return pairs, float(pair[0]) + sd / pairs, max(m2, 0.0)


def mc_price(model, t: float, x: float, y: float, k: float, paths: int = 1_000_000,
             steps: int = 500, seed: int = 0, threads: int = 1):
    """``(price, std_error)`` of the undiscounted call by simulation."""
    if paths < 2 or steps < 1:
        raise ValueError("paths must be at least 2 and steps positive")
    if not t > 0:
        raise ValueError("t must be positive")
    total_pairs = paths // 2
    sizes = [BLOCK_PAIRS] * (total_pairs // BLOCK_PAIRS)
    if total_pairs % BLOCK_PAIRS:
        sizes.append(total_pairs % BLOCK_PAIRS)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(i):
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        return _payoff_sums(model, t, x, y, k, sizes[i], steps, rng)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(i) for i in range(len(sizes))]
    # block results are combined in block order, independent of scheduling
    n, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    var = m2 / max(n - 1, 1)
    return mean, math.sqrt(var / n)
