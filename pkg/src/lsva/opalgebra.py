"""Normal-ordered differential operators and the Dyson-series operators.

Operators act on functions of ``(x, y)``.  A monomial ``xi^p ups^q dx^r dy^s``
means multiplication by ``(x - xbar)^p (y - ybar)^q`` applied *after*
``d^r/dx^r d^s/dy^s`` (offsets to the left of derivatives).  Coefficients are
:class:`~lsva.timefunc.ExpPoly` functions of one pending time variable.
"""

from __future__ import annotations

import itertools
import threading
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .timefunc import ONE, ZERO, ExpPoly

Key = Tuple[int, int, int, int]

DEFAULT_MAX_ORDER = 4
# guard rail on operator size; order 4 two-factor models stay well below this
MAX_MONOMIALS = 200_000


class OrderCapError(ValueError):
    """Requested expansion order above the configured cap."""


class JetOrderError(ValueError):
    """Coefficient jet does not carry enough spatial derivatives."""


def _falling(n: int, j: int) -> int:
    out = 1
    for i in range(j):
        out *= n - i
    return out


class DiffOp:
    """Immutable sum of normal-ordered monomials with ExpPoly coefficients."""

    __slots__ = ("_mono",)

    def __init__(self, monomials: Optional[Dict[Key, ExpPoly]] = None):
        mono = {}
        if monomials:
            for k, c in monomials.items():
                if not isinstance(c, ExpPoly):
                    c = ExpPoly.const(c)
                if not c.is_zero():
                    mono[tuple(int(v) for v in k)] = c
        self._mono = dict(sorted(mono.items()))

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[Key, object]]) -> "DiffOp":
        acc: Dict[Key, list] = {}
        for k, c in terms:
            if not isinstance(c, ExpPoly):
                c = ExpPoly.const(c)
            acc.setdefault(k, []).extend(c.terms)
        return cls({k: ExpPoly(v) for k, v in acc.items()})

    @classmethod
    def scalar(cls, c) -> "DiffOp":
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def monomial(cls, p=0, q=0, r=0, s=0, coeff=1.0) -> "DiffOp":
        return cls({(p, q, r, s): coeff})

    @property
    def monomials(self) -> Dict[Key, ExpPoly]:
        return dict(self._mono)

    def items(self):
        return self._mono.items()

    def __len__(self) -> int:
        return len(self._mono)

    def is_zero(self) -> bool:
        return not self._mono

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self._mono == other._mono

    def __repr__(self) -> str:
        if not self._mono:
            return "DiffOp(0)"
        parts = [f"{c!r}*[{k}]" for k, c in self._mono.items()]
        return "DiffOp(" + " + ".join(parts) + ")"

    def __add__(self, other: "DiffOp") -> "DiffOp":
        return DiffOp.from_terms(itertools.chain(self._mono.items(), other._mono.items()))

    def __neg__(self) -> "DiffOp":
        return DiffOp({k: -c for k, c in self._mono.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, c) -> "DiffOp":
        """Multiply every coefficient by a scalar or an ExpPoly."""
        if isinstance(c, (int, float)) and c == 0:
            return DiffOp()
        return DiffOp({k: v * c for k, v in self._mono.items()})

    def __matmul__(self, other: "DiffOp") -> "DiffOp":
        return normal_order_product(self, other)

    def map_coefficients(self, fn) -> "DiffOp":
        return DiffOp({k: fn(c) for k, c in self._mono.items()})

    def integrate(self, lower, upper) -> "DiffOp":
        return self.map_coefficients(lambda c: c.integral(lower, upper))

    def evaluate_coefficients(self, t: float) -> Dict[Key, float]:
        return {k: c(t) for k, c in self._mono.items()}

    def max_derivative_order(self) -> int:
        return max((r + s for (_, _, r, s) in self._mono), default=0)

    def apply_polynomial(self, poly: Dict[Tuple[int, int], float], t: float = 0.0):
        """Act on ``sum c_ab x^a y^b`` with ``xbar = ybar = 0``; coefficients at ``t``."""
        out: Dict[Tuple[int, int], float] = {}
        for (p, q, r, s), coeff in self._mono.items():
            cv = coeff(t)
            for (a, b), c in poly.items():
                if r > a or s > b:
                    continue
                val = cv * c * _falling(a, r) * _falling(b, s)
                key = (a - r + p, b - s + q)
                out[key] = out.get(key, 0.0) + val
        return {k: v for k, v in out.items() if v != 0}


def normal_order_product(left: DiffOp, right: DiffOp) -> DiffOp:
    """Composition ``left o right`` rewritten in normal order.

    Uses ``dx^r xi^p = sum_j C(r,j) p!/(p-j)! xi^(p-j) dx^(r-j)`` and the same
    rule in ``y``; offsets in different variables commute.
    """
    acc: Dict[Key, list] = {}
    for (p1, q1, r1, s1), c1 in left._mono.items():
        for (p2, q2, r2, s2), c2 in right._mono.items():
            prod = None
            for j in range(min(r1, p2) + 1):
                wx = comb(r1, j) * _falling(p2, j)
                for l in range(min(s1, q2) + 1):
                    w = wx * comb(s1, l) * _falling(q2, l)
                    key = (p1 + p2 - j, q1 + q2 - l, r1 - j + r2, s1 - l + s2)
                    if prod is None:
                        prod = (c1 * c2).terms
                    bucket = acc.setdefault(key, [])
                    if w == 1:
                        bucket.extend(prod)
                    else:
                        bucket.extend((c * w, m, g) for c, m, g in prod)
    if len(acc) > MAX_MONOMIALS:
        raise OrderCapError(f"operator grew to {len(acc)} monomials")
    return DiffOp({k: ExpPoly(v) for k, v in acc.items()})


def enumerate_compositions(n: int) -> Dict[int, List[Tuple[int, ...]]]:
    """Compositions of ``n`` into ``k`` positive parts, for every ``k``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    out: Dict[int, List[Tuple[int, ...]]] = {k: [] for k in range(1, n + 1)}
    for k in range(1, n + 1):
        # choose k-1 cut points among n-1 gaps
        for cuts in itertools.combinations(range(1, n), k - 1):
            bounds = (0,) + cuts + (n,)
            out[k].append(tuple(bounds[i + 1] - bounds[i] for i in range(k)))
    return out


DX = DiffOp.monomial(r=1)
DY = DiffOp.monomial(s=1)
DXX_MINUS_DX = DiffOp({(0, 0, 2, 0): 1.0, (0, 0, 1, 0): -1.0})
DYY = DiffOp.monomial(s=2)
DXDY = DiffOp.monomial(r=1, s=1)


def build_m_operators(jet, t0: float = 0.0):
    """Offset operators ``Mx(t0, s) - xbar(s)`` and ``My(t0, s) - ybar(s)``.

    Both are first-order DiffOps with ExpPoly coefficients in ``s``.  The
    constant centre ``xbar`` itself is carried by the jet, so the returned
    operators start with the offset ``xi`` rather than with ``x``.
    """
    a0 = jet.value("a", 0, 0)
    b0 = jet.value("b", 0, 0)
    c0 = jet.value("c", 0, 0)
    f0 = jet.value("f", 0, 0)
    int_a = a0.integral(t0, None)
    int_b = b0.integral(t0, None)
    int_c = c0.integral(t0, None)
    int_f = f0.integral(t0, None)
    shift_x = ExpPoly.const(jet.x_center(t0)) - jet.x_center
    shift_y = ExpPoly.const(jet.y_center(t0)) - jet.y_center
    mx = DiffOp.from_terms([
        ((1, 0, 0, 0), ONE),
        ((0, 0, 0, 0), shift_x - int_a),
        ((0, 0, 1, 0), int_a * 2.0),
        ((0, 0, 0, 1), int_c),
    ])
    my = DiffOp.from_terms([
        ((0, 1, 0, 0), ONE),
        ((0, 0, 0, 0), shift_y + int_f),
        ((0, 0, 0, 1), int_b * 2.0),
        ((0, 0, 1, 0), int_c),
    ])
    return mx, my


class _OperatorBuilder:
    """Caches powers of the M operators and the G_i for one jet and ``t0``."""

    def __init__(self, jet, t0: float):
        self.jet = jet
        self.t0 = t0
        self.mx, self.my = build_m_operators(jet, t0)
        self._px = [DiffOp.scalar(1.0)]
        self._py = [DiffOp.scalar(1.0)]
        self._taylor: Dict[Tuple[str, int], DiffOp] = {}
        self._g: Dict[int, DiffOp] = {}

    def _pow(self, which: str, n: int) -> DiffOp:
        cache, base = (self._px, self.mx) if which == "x" else (self._py, self.my)
        while len(cache) <= n:
            cache.append(normal_order_product(cache[-1], base))
        return cache[n]

    def taylor_term(self, name: str, i: int) -> DiffOp:
        """Order-``i`` Taylor term of coefficient ``name`` with M substituted."""
        key = (name, i)
        if key in self._taylor:
            return self._taylor[key]
        if i > self.jet.order:
            raise JetOrderError(f"jet of order {self.jet.order} cannot supply order {i}")
        out = DiffOp()
        for alpha in range(i + 1):
            beta = i - alpha
            d = self.jet.value(name, alpha, beta)
            if d.is_zero():
                continue
            d = d * (1.0 / (factorial(alpha) * factorial(beta)))
            term = normal_order_product(self._pow("x", alpha), self._pow("y", beta))
            out = out + term.scale(d)
        self._taylor[key] = out
        return out

    def g_operator(self, i: int) -> DiffOp:
        if i in self._g:
            return self._g[i]
        g = (
            normal_order_product(self.taylor_term("a", i), DXX_MINUS_DX)
            + normal_order_product(self.taylor_term("f", i), DY)
            + normal_order_product(self.taylor_term("b", i), DYY)
            + normal_order_product(self.taylor_term("c", i), DXDY)
        )
        self._g[i] = g
        return g


def build_g_operator(jet, i: int, t0: float = 0.0) -> DiffOp:
    """``G_i(t0, s)`` as a DiffOp whose coefficients are ExpPolys in ``s``."""
    if i < 1:
        raise ValueError("i must be positive")
    return _OperatorBuilder(jet, t0).g_operator(i)


def dyson_operator(jet, n: int, T: float, t0: float = 0.0, *, reduced: bool = True,
                   max_order: int = DEFAULT_MAX_ORDER) -> DiffOp:
    """The n-th Dyson operator with all time integrals performed.

    ``reduced=True`` builds the operator whose rightmost factor is the bare
    ``a_{i_k}(M)`` (the trailing ``dx^2 - dx`` stripped); ``reduced=False``
    builds the full operator with every factor a complete ``G_i``.
    Coefficients of the result are constants.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > max_order:
        raise OrderCapError(f"order {n} exceeds the cap {max_order}")
    if T <= t0:
        raise ValueError("T must exceed t0")
    builder = _OperatorBuilder(jet, t0)
    suffix_cache: Dict[Tuple[int, ...], DiffOp] = {}

    def inner(suffix: Tuple[int, ...]) -> DiffOp:
        # integral over t_j in [t_{j-1}, T] of G_{i_j}(t_j) o inner(rest)(t_j),
        # returned as a DiffOp in the symbolic lower limit t_{j-1}
        if suffix in suffix_cache:
            return suffix_cache[suffix]
        head, rest = suffix[0], suffix[1:]
        if rest:
            integrand = normal_order_product(builder.g_operator(head), inner(rest))
        elif reduced:
            integrand = builder.taylor_term("a", head)
        else:
            integrand = builder.g_operator(head)
        res = integrand.integrate(None, T)
        suffix_cache[suffix] = res
        return res

    total = DiffOp()
    for k, comps in enumerate_compositions(n).items():
        for comp in comps:
            head, rest = comp[0], comp[1:]
            if rest:
                integrand = normal_order_product(builder.g_operator(head), inner(rest))
            elif reduced:
                integrand = builder.taylor_term("a", head)
            else:
                integrand = builder.g_operator(head)
            total = total + integrand.integrate(t0, T)
    # each G_i carries at most i + 2 derivatives; the reduced tail drops 2
    limit = 3 * n if not reduced else 3 * n - 2
    if total.max_derivative_order() > limit:
        raise AssertionError("derivative degree bookkeeping violated")
    return total


def dyson_ltilde(jet, n: int, T: float, t0: float = 0.0,
                 max_order: int = DEFAULT_MAX_ORDER) -> List[Tuple[int, float]]:
    """Weights ``w_m`` with ``u_n = sum_m w_m dx^m (dx^2 - dx) u_BS``.

    Offsets are evaluated at the expansion point and ``dy`` monomials are
    dropped since the Black-Scholes target does not depend on ``y``.
    """
    op = _cached_reduced(jet, n, float(T), float(t0), max_order)
    w: Dict[int, float] = {}
    for (p, q, r, s), c in op.items():
        if p or q or s:
            continue
        w[r] = w.get(r, 0.0) + c.constant_value()
    return sorted((m, v) for m, v in w.items() if v != 0.0)


_cache_lock = threading.Lock()
_operator_cache: Dict[tuple, DiffOp] = {}
_CACHE_MAX = 512


def _cached_reduced(jet, n, T, t0, max_order) -> DiffOp:
    return cached_operator(jet, n, T, t0, reduced=True, max_order=max_order)


def cached_operator(jet, n: int, T: float, t0: float = 0.0, *, reduced: bool = True,
                    max_order: int = DEFAULT_MAX_ORDER) -> DiffOp:
    """``dyson_operator`` memoized per (jet, n, T, t0, reduced)."""
    key = (jet.cache_key(), n, float(T), float(t0), reduced)
    with _cache_lock:
        hit = _operator_cache.get(key)
    if hit is not None:
        return hit
    op = dyson_operator(jet, n, T, t0, reduced=reduced, max_order=max_order)
    with _cache_lock:
        if len(_operator_cache) >= _CACHE_MAX:
            _operator_cache.pop(next(iter(_operator_cache)))
        _operator_cache[key] = op
    return op


def clear_cache() -> None:
    with _cache_lock:
        _operator_cache.clear()
