"""Scaled lattice windows, counting measures and discrete norms.

A window ``E_n(eps)`` holds the points ``q^(k/n) >= eps``.  Membership is
decided exactly: ``q^(k/n) >= eps`` iff ``q^k >= eps^n`` in rational
arithmetic, so window boundaries never depend on rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import families as fm
from .errors import DomainError
from .qnum import PrecisionContext, parse_rational


def _last_index(n: int, eps: Fraction, q: Fraction) -> int:
    """Largest ``k >= 0`` with ``q^k >= eps^n``, or -1 if none."""
    if eps > 1:
        return -1
    guess = math.floor(n * math.log(eps) / math.log(q)) if eps > 0 else 0
    target = eps**n
    k = max(guess, 0)
    while k > 0 and q**k < target:
        k -= 1
    while q ** (k + 1) >= target:
        k += 1
    return k if q**k >= target else -1


@dataclass(frozen=True)
class LatticeWindow:
    n: int
    eps: Fraction
    q: Fraction
    exponents: tuple  # k = 0, 1, ..., K; point k is q^(k/n)

    def points(self, ctx: PrecisionContext):
        return [ctx.qpow(Fraction(k, self.n)) for k in self.exponents]

    def __len__(self):
        return len(self.exponents)


def build_window(n: int, eps, ctx: PrecisionContext) -> LatticeWindow:
    eps = parse_rational(eps)
    if n < 1:
        raise DomainError(f"n = {n} must be at least 1")
    if not 0 < eps < 1:
        raise DomainError(f"eps = {eps} violates 0 < eps < 1")
    last = _last_index(n, eps, ctx.q)
    return LatticeWindow(n, eps, ctx.q, tuple(range(last + 1)))


def counting_measure(n: int, a, b, ctx: PrecisionContext) -> Fraction:
    """``#{k : a <= q^(k/n) <= b} / n`` as an exact rational."""
    a = parse_rational(a)
    b = parse_rational(b)
    if not 0 < a < b <= 1:
        raise DomainError("counting_measure needs 0 < a < b <= 1")
    q = ctx.q
    hi = _last_index(n, a, q)
    # smallest k with q^k <= b^n
    target = b**n
    lo = max(math.ceil(n * math.log(b) / math.log(q)) if b < 1 else 0, 0)
    while lo > 0 and q ** (lo - 1) <= target:
        lo -= 1
    while q**lo > target:
        lo += 1
    return Fraction(max(hi - lo + 1, 0), n)


def discrete_l2_norm(values, ctx: PrecisionContext, n: int = 1):
    """Windowed norm ``(sum (1 - q) y^n |f(y)|^2)^(1/2)`` over ``(y, f(y))`` pairs.

    The cell weight ``(1 - q) y^n`` is the Jackson weight of the unscaled point
    ``y^n = q^k``, so the norm of ``f(x^n)`` on ``E_n`` equals the norm of ``f``
    on ``E_1``.
    """
    values = list(values)
    if not values:
        raise DomainError("norm over an empty window")
    mp = ctx.mp
    one_minus_q = 1 - ctx.qf
    s = mp.mpf(0)
    for y, fy in values:
        y = ctx.mpf(y)
        s += one_minus_q * y**n * abs(fy) ** 2
    return mp.sqrt(s)


def lattice_l2_norm(f, ctx: PrecisionContext, decay=None, max_terms: int = 1_000_000):
    """Full-lattice norm ``((1 - q) sum_k q^k |f(q^k)|^2)^(1/2)``.

    The sum stops at the first ``K`` where the summand, and ``decay(K)`` when
    supplied (an upper bound on every later summand), fall below
    ``tail_tol`` times the running total.  Returns ``(norm, K)``.
    """
    mp = ctx.mp
    one_minus_q = 1 - ctx.qf
    tol = ctx.tail_tol
    s = mp.mpf(0)
    small_run = 0
    for k in range(max_terms):
        x = ctx.qpow(k)
        term = one_minus_q * x * abs(f(x)) ** 2
        s += term
        bound_ok = decay is None or decay(k) <= tol * s
        if term <= tol * s and bound_ok:
            small_run += 1
            # a few consecutive negligible terms guard against isolated zeros of f
            if decay is not None or small_run >= 4:
                return mp.sqrt(s), k
        else:
            small_run = 0
    raise DomainError("lattice norm did not reach tail_tol")


def sup_norm(values):
    values = list(values)
    if not values:
        raise DomainError("sup norm over an empty set")
    return max(abs(v) for v in values)


def norm_ratio_trend(fam: fm.FamilySpec, field, eps, n_list, ctx: PrecisionContext):
    """``(||w^(1/2)(x^n) P_n(x^n)|| / ||g_n(x) P_n(x^n)||)^(1/n^2)`` per ``n``.

    Norms are taken over the window ``E_n(eps)`` with ``P_n`` the monic
    polynomial of the family.  ``g_n = 1`` when ``field`` is None and
    ``g_n = exp(-n^2 Q(x))`` otherwise.
    """
    out = []
    for n in n_list:
        wctx = fm.working_context(fam, n, ctx)
        mp = wctx.mp
        window = build_window(n, eps, wctx)
        num = []
        den = []
        for k, y in zip(window.exponents, window.points(wctx)):
            x = wctx.qpow(k)
            p = fm.monic_eval(fam, n, x, wctx)
            num.append((y, mp.sqrt(fm.weight(fam, n, x, wctx)) * p))
            if field is None:
                den.append((y, p))
            else:
                Q = field.value_log(mp.log(y))
                den.append((y, mp.exp(-n * n * Q) * p))
        top = discrete_l2_norm(num, wctx, n)
        bottom = discrete_l2_norm(den, wctx, n)
        if top == 0 or bottom == 0:
            raise DomainError(f"all samples vanish at n = {n}")
        out.append(float(mp.power(top / bottom, mp.mpf(1) / (n * n))))
    return out
