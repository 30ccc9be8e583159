import math
import random

import numpy as np
import pytest
from scipy import integrate

from lsva import opalgebra
from lsva.models import CEV, SABR, ConstantVol, Heston, make_jet
from lsva.opalgebra import (
    DX, DY, DiffOp, OrderCapError, JetOrderError, build_g_operator, build_m_operators,
    dyson_ltilde, dyson_operator, enumerate_compositions, normal_order_product,
)
from lsva.timefunc import ExpPoly


def op(d):
    return DiffOp({k: float(v) for k, v in d.items()})


# -- compositions --------------------------------------------------------------

def test_compositions_small():
    c = enumerate_compositions(2)
    assert c[1] == [(2,)] and c[2] == [(1, 1)]
    assert sorted(enumerate_compositions(3)[2]) == [(1, 2), (2, 1)]


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_composition_count_matches_brute_force(n):
    import itertools
    brute = {t for k in range(1, n + 1) for t in itertools.product(range(1, n + 1), repeat=k)
             if sum(t) == n}
    got = [t for ts in enumerate_compositions(n).values() for t in ts]
    assert len(got) == len(brute) == 2 ** (n - 1)
    assert set(got) == brute


def test_composition_rejects_zero():
    with pytest.raises(ValueError):
        enumerate_compositions(0)


# -- normal ordering -------------------------------------------------------------

def test_canonical_commutators():
    xi = DiffOp.monomial(p=1)
    ups = DiffOp.monomial(q=1)
    assert normal_order_product(DX, xi) == op({(1, 0, 1, 0): 1, (0, 0, 0, 0): 1})
    dyy = DiffOp.monomial(s=2)
    assert normal_order_product(dyy, ups) == op({(0, 1, 0, 2): 1, (0, 0, 0, 1): 2})
    xdx = DiffOp.monomial(p=1, r=1)
    assert normal_order_product(xdx, xdx) == op({(2, 0, 2, 0): 1, (1, 0, 1, 0): 1})
    # offsets and derivatives in different variables commute
    assert normal_order_product(DY, xi) == DiffOp.monomial(p=1, s=1)


def random_op(rng, max_deg=3, n_terms=4):
    d = {}
    for _ in range(n_terms):
        key = tuple(rng.randint(0, max_deg) for _ in range(4))
        d[key] = d.get(key, 0) + rng.randint(-5, 5)
    return DiffOp({k: float(v) for k, v in d.items() if v})


@pytest.mark.parametrize("seed", range(25))
def test_action_equivalence_on_polynomials(seed):
    rng = random.Random(seed)
    a, b = random_op(rng), random_op(rng)
    prod = normal_order_product(a, b)
    for ea in range(5):
        for eb in range(5):
            phi = {(ea, eb): 1.0}
            seq = a.apply_polynomial(b.apply_polynomial(phi))
            # integer coefficients keep every step exact in floating point
            assert prod.apply_polynomial(phi) == seq


def test_product_is_associative():
    rng = random.Random(7)
    a, b, c = random_op(rng), random_op(rng), random_op(rng)
    assert normal_order_product(normal_order_product(a, b), c) == normal_order_product(
        a, normal_order_product(b, c))


# -- M and G operators -------------------------------------------------------------

def test_m_operators_constant_coefficients():
    A, F = 0.02, 0.3
    jet = make_jet({"a": {(0, 0): A}, "f": {(0, 0): F}}, 2, 0.1, -0.2)
    mx, my = build_m_operators(jet, 0.5)
    s = 1.7
    vx = mx.evaluate_coefficients(s)
    assert vx[(1, 0, 0, 0)] == 1.0
    assert vx[(0, 0, 0, 0)] == pytest.approx(-A * (s - 0.5))
    assert vx[(0, 0, 1, 0)] == pytest.approx(2 * A * (s - 0.5))
    assert vx.get((0, 0, 0, 1), 0.0) == 0.0
    vy = my.evaluate_coefficients(s)
    assert vy[(0, 0, 0, 0)] == pytest.approx(F * (s - 0.5))


def test_m_operators_zero_jet_are_offsets():
    jet = make_jet({}, 2, 0.0, 0.0)
    mx, my = build_m_operators(jet)
    assert mx == DiffOp.monomial(p=1)
    assert my == DiffOp.monomial(q=1)


def test_m_operators_commute():
    jet = SABR(0.4, 0.25, -0.5).jet(0.1, -1.3, 3)
    mx, my = build_m_operators(jet, 0.0)
    lhs = normal_order_product(mx, my)
    rhs = normal_order_product(my, mx)
    for k in set(lhs.monomials) | set(rhs.monomials):
        d = lhs.monomials.get(k, ExpPoly()) - rhs.monomials.get(k, ExpPoly())
        for s in (0.0, 0.7, 2.0):
            assert d(s) == pytest.approx(0.0, abs=1e-15)


def test_g1_local_vol_hand_expansion():
    A, A1 = 0.03, -0.04
    jet = make_jet({"a": {(0, 0): A, (1, 0): A1}}, 1, 0.0, 0.0)
    g = build_g_operator(jet, 1, 0.0)
    s = 0.8
    ia = A * s
    # A1 (xi - ia + 2 ia dx)(dxx - dx), normal ordered by hand
    expected = {
        (1, 0, 2, 0): A1, (1, 0, 1, 0): -A1,
        (0, 0, 2, 0): -A1 * ia - 2 * A1 * ia, (0, 0, 1, 0): A1 * ia,
        (0, 0, 3, 0): 2 * A1 * ia,
    }
    got = g.evaluate_coefficients(s)
    assert set(k for k, v in got.items() if v) == set(expected)
    for k, v in expected.items():
        assert got[k] == pytest.approx(v, rel=1e-14)


def test_g_vanishes_for_constant_coefficients():
    jet = ConstantVol(0.3).jet(0.0, 0.0, 3)
    for i in (1, 2, 3):
        assert build_g_operator(jet, i).is_zero()
    assert dyson_ltilde(jet, 2, 1.0) == []


def test_g1_pure_drift_dependence():
    F1 = 0.7
    jet = make_jet({"a": {(0, 0): 0.02}, "f": {(0, 1): F1}}, 1, 0.0, 0.0)
    _, my = build_m_operators(jet)
    g = build_g_operator(jet, 1)
    assert g == normal_order_product(my.scale(F1), DY)


@pytest.mark.parametrize("model, x, y", [
    (CEV(0.2, 0.3), 0.1, 0.0),
    (SABR(0.4, 0.25, -0.5), 0.0, -1.3),
    (Heston(1.15, 0.04, 0.2, -0.4), 0.0, 0.04),
])
def test_g_annihilates_constants(model, x, y):
    jet = model.jet(x, y, 3)
    for i in (1, 2, 3):
        out = build_g_operator(jet, i).apply_polynomial({(0, 0): 1.0}, 0.6)
        assert all(abs(v) < 1e-15 for v in out.values())


def test_jet_order_insufficient():
    jet = CEV(0.2, 0.3).jet(0.0, 0.0, 1)
    with pytest.raises(JetOrderError):
        build_g_operator(jet, 2)


def test_order_cap():
    jet = CEV(0.2, 0.3).jet(0.0, 0.0, 5)
    with pytest.raises(OrderCapError):
        dyson_operator(jet, 5, 1.0)


# -- Dyson weights ---------------------------------------------------------------------

def test_weights_vs_nested_quadrature_local_vol():
    """n = 2 weights for a local-vol jet against brute-force double integrals."""
    jet = CEV(0.2, 0.3).jet(0.0, 0.0, 2)
    T = 1.0
    w = dict(dyson_ltilde(jet, 2, T))
    b = opalgebra._OperatorBuilder(jet, 0.0)
    g1 = b.g_operator(1)
    a1, a2 = b.taylor_term("a", 1), b.taylor_term("a", 2)

    def coeff_at(d, key, t):
        return d.monomials.get(key, ExpPoly())(t)

    prod = normal_order_product(g1, a1)
    keys = {k for k in prod.monomials if k[0] == k[1] == k[3] == 0}
    ref = {}
    for key in keys:
        # the inner integrand is a product of two operators evaluated at different times
        def f(t2, t1, key=key):
            left = DiffOp({k: ExpPoly.const(v(t1)) for k, v in g1.monomials.items()})
            right = DiffOp({k: ExpPoly.const(v(t2)) for k, v in a1.monomials.items()})
            return coeff_at(normal_order_product(left, right), key, 0.0)
        val, _ = integrate.dblquad(f, 0.0, T, lambda t1: t1, lambda t1: T, epsabs=1e-13,
                                   epsrel=1e-11)
        ref[key[2]] = ref.get(key[2], 0.0) + val
    for key, v in a2.monomials.items():
        if key[0] == key[1] == key[3] == 0:
            ref[key[2]] = ref.get(key[2], 0.0) + integrate.quad(v, 0.0, T, epsabs=1e-14)[0]
    ref = {m: v for m, v in ref.items() if abs(v) > 1e-15}
    assert set(ref) == set(w)
    for m in ref:
        assert w[m] == pytest.approx(ref[m], rel=1e-8)


@pytest.mark.parametrize("model, x, y, n", [
    (CEV(0.2, 0.3), 0.0, 0.0, 2),
    (CEV(0.2, 0.3), 0.0, 0.0, 3),
    (SABR(0.4, 0.25, -0.3), 0.0, -1.3, 2),
])
def test_full_and_reduced_operators_agree_on_y_independent_targets(model, x, y, n):
    """``L_n = Lt_n (dxx - dx)`` on functions of x alone.

    With ``v_r`` the full-operator weights and ``w_m`` the reduced ones,
    ``sum v_r dx^r = sum w_m dx^m (dx^2 - dx)`` gives ``v_r = w_{r-2} - w_{r-1}``.
    """
    jet = model.jet(x, y, n)
    full = dyson_operator(jet, n, 1.0, reduced=False)
    v = {}
    for (p, q, r, s), c in full.items():
        if p or q or s:
            continue
        v[r] = v.get(r, 0.0) + c.constant_value()
    w = dict(dyson_ltilde(jet, n, 1.0))
    top = max(list(v) + [m + 2 for m in w])
    for r in range(top + 1):
        expected = w.get(r - 2, 0.0) - w.get(r - 1, 0.0)
        assert v.get(r, 0.0) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_degree_bound():
    jet = SABR(0.4, 0.25, -0.5).jet(0.0, -1.3, 4)
    for n in range(1, 5):
        red = dyson_operator(jet, n, 1.0)
        assert red.max_derivative_order() <= 2 + 2 * n


def test_forward_payoff_annihilated():
    """Every full L_n kills e^x: the coefficient sums over r vanish for each (p, q)."""
    jet = CEV(0.2, 0.3).jet(0.0, 0.0, 3)
    for n in (1, 2, 3):
        full = dyson_operator(jet, n, 1.0, reduced=False)
        sums, scale = {}, {}
        for (p, q, r, s), c in full.items():
            if s:
                continue
            v = c.constant_value()
            sums[(p, q)] = sums.get((p, q), 0.0) + v
            scale[(p, q)] = scale.get((p, q), 0.0) + abs(v)
        for key in sums:
            assert abs(sums[key]) <= 1e-13 * scale[key]


def test_weight_cache_thread_safe():
    from concurrent.futures import ThreadPoolExecutor
    opalgebra.clear_cache()
    jet = SABR(0.4, 0.25, -0.2).jet(0.0, -1.3, 3)
    with ThreadPoolExecutor(4) as pool:
        res = list(pool.map(lambda _: dyson_ltilde(jet, 3, 1.0), range(8)))
    assert all(r == res[0] for r in res)
