"""Little q-Laguerre, q-Bessel and little q-Jacobi polynomials.

Each family is a terminating basic hypergeometric series
``2phi1(q^-n, A; B | q, q x)`` whose degree-``n`` instance is orthogonal on the
lattice ``{q^k}`` with point masses ``q^k w(q^k)``:

=================  ==================  ============
family             A                   B
=================  ==================  ============
little q-Laguerre  0                   a q
q-Bessel           -a q^n              0
little q-Jacobi    a b q^(n+1)         a q
=================  ==================  ============

Parameters are either fixed numbers or exponents ``alpha, beta`` with
``a = q^(2 n alpha)`` and ``b = sign_b * q^(2 n beta)`` instantiated per degree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import mpmath

from .errors import DomainError, PrecisionError
from .qnum import PrecisionContext, parse_rational, poch_finite, poch_infinite, precision_for


class Kind(enum.Enum):
    LITTLE_Q_LAGUERRE = "little-q-laguerre"
    Q_BESSEL = "q-bessel"
    LITTLE_Q_JACOBI = "little-q-jacobi"


@dataclass(frozen=True)
class Fixed:
    a: Fraction
    b: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "a", parse_rational(self.a))
        object.__setattr__(self, "b", parse_rational(self.b))


@dataclass(frozen=True)
class Scaled:
    """``a = q^(2 n alpha)``, ``b = sign_b q^(2 n beta)`` at degree ``n``."""

    alpha: Fraction
    beta: Fraction = Fraction(0)
    sign_b: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_rational(self.alpha))
        object.__setattr__(self, "beta", parse_rational(self.beta))
        if self.sign_b not in (1, -1):
            raise DomainError(f"sign_b = {self.sign_b} must be +1 or -1")


@dataclass(frozen=True)
class FamilySpec:
    kind: Kind
    params: Union[Fixed, Scaled]

    def validate(self, q: Fraction):
        """Raise DomainError naming the violated parameter inequality."""
        p = self.params
        kind = self.kind
        if isinstance(p, Fixed):
            if kind is Kind.Q_BESSEL:
                if not p.a > 0:
                    raise DomainError(f"a = {p.a} violates a > 0")
            elif not 0 < p.a * q < 1:
                raise DomainError(f"a = {p.a} violates 0 < a q < 1")
            if kind is Kind.LITTLE_Q_JACOBI and not p.b * q < 1:
                raise DomainError(f"b = {p.b} violates b q < 1")
        else:
            # a = q^(2 n alpha) < 1/q for every n only if alpha >= 0
            if kind is not Kind.Q_BESSEL and p.alpha < 0:
                raise DomainError(f"alpha = {p.alpha} violates alpha >= 0 (0 < a q < 1 for all n)")
            if kind is Kind.LITTLE_Q_JACOBI and p.sign_b > 0 and p.beta < 0:
                raise DomainError(f"beta = {p.beta} violates beta >= 0 (b q < 1 for all n) when b > 0")
        return self

    def parameters(self, n: int, ctx: PrecisionContext):
        """Numerical ``(a, b)`` at degree ``n``."""
        p = self.params
        if isinstance(p, Fixed):
            return ctx.mpf(p.a), ctx.mpf(p.b)
        a = ctx.qpow(2 * n * p.alpha)
        if self.kind is Kind.LITTLE_Q_JACOBI:
            b = p.sign_b * ctx.qpow(2 * n * p.beta)
        else:
            b = ctx.mpf(0)
        return a, b

    def label(self) -> str:
        p = self.params
        if isinstance(p, Fixed):
            s = f"a={p.a}"
            if self.kind is Kind.LITTLE_Q_JACOBI:
                s += f",b={p.b}"
        else:
            s = f"alpha={p.alpha}"
            if self.kind is Kind.LITTLE_Q_JACOBI:
                s += f",beta={p.beta},sign_b={p.sign_b:+d}"
        return f"{self.kind.value}({s})"


def laguerre(a) -> FamilySpec:
    return FamilySpec(Kind.LITTLE_Q_LAGUERRE, Fixed(a))


def bessel(a) -> FamilySpec:
    return FamilySpec(Kind.Q_BESSEL, Fixed(a))


def jacobi(a, b) -> FamilySpec:
    return FamilySpec(Kind.LITTLE_Q_JACOBI, Fixed(a, b))


def _series_parameters(fam: FamilySpec, n: int, ctx: PrecisionContext):
    a, b = fam.parameters(n, ctx)
    qn = ctx.qpow(n)
    if fam.kind is Kind.LITTLE_Q_LAGUERRE:
        return ctx.mpf(0), a * ctx.qf
    if fam.kind is Kind.Q_BESSEL:
        return -a * qn, ctx.mpf(0)
    return a * b * qn * ctx.qf, a * ctx.qf


@lru_cache(maxsize=512)
def coefficients(fam: FamilySpec, n: int, ctx: PrecisionContext):
    """Power-basis coefficients ``c_0, ..., c_n`` of the 2phi1 polynomial."""
    fam.validate(ctx.q)
    upper, lower = _series_parameters(fam, n, ctx)
    q = ctx.qf
    coeffs = [ctx.mpf(1)]
    c = ctx.mpf(1)
    qk = ctx.mpf(1)
    for k in range(n):
        # ratio of consecutive terms of 2phi1(q^-n, upper; lower | q, q x)
        c = c * (1 - ctx.qpow(k - n)) * (1 - upper * qk) / ((1 - lower * qk) * (1 - qk * q)) * q
        coeffs.append(c)
        qk *= q
    return tuple(coeffs)


def _check_precision(n: int, ctx: PrecisionContext):
    need = precision_for(n, ctx, margin=1.0)
    if ctx.bits < need:
        raise PrecisionError(
            f"degree {n} over q = {ctx.q} needs at least {need} bits, context has {ctx.bits}"
        )


def eval_poly(fam: FamilySpec, n: int, x, ctx: PrecisionContext):
    """Value of the 2phi1-normalised polynomial of degree ``n`` at ``x``."""
    if n < 0:
        raise DomainError(f"degree n = {n} must be non-negative")
    _check_precision(n, ctx)
    coeffs = coefficients(fam, n, ctx)
    x = ctx.mpf(x)
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def series_leading_coeff(fam: FamilySpec, n: int, ctx: PrecisionContext):
    """Closed form of the ``x^n`` coefficient of the 2phi1 polynomial."""
    fam.validate(ctx.q)
    a, b = fam.parameters(n, ctx)
    sign = -1 if n % 2 else 1
    base = sign * ctx.qpow(Fraction(-n * (n - 1), 2))
    q = ctx.qf
    if fam.kind is Kind.LITTLE_Q_LAGUERRE:
        return base / poch_finite(a * q, n, ctx)
    if fam.kind is Kind.Q_BESSEL:
        return base * poch_finite(-a * ctx.qpow(n), n, ctx)
    return base * poch_finite(a * b * ctx.qpow(n + 1), n, ctx) / poch_finite(a * q, n, ctx)


def monic_eval(fam: FamilySpec, n: int, x, ctx: PrecisionContext):
    return eval_poly(fam, n, x, ctx) / series_leading_coeff(fam, n, ctx)


def lattice_weight(fam: FamilySpec, n: int, k: int, ctx: PrecisionContext):
    """``w(q^k)``: the point mass at ``q^k`` is ``q^k w(q^k)``."""
    a, b = fam.parameters(n, ctx)
    q = ctx.qf
    w = a**k / poch_finite(q, k, ctx)
    if fam.kind is Kind.Q_BESSEL:
        w *= ctx.qpow(Fraction(k * (k - 1), 2))
    elif fam.kind is Kind.LITTLE_Q_JACOBI:
        w *= poch_finite(b * q, k, ctx)
    return w


def lattice_mass(fam: FamilySpec, n: int, k: int, ctx: PrecisionContext):
    return ctx.qpow(k) * lattice_weight(fam, n, k, ctx)


def weight(fam: FamilySpec, n: int, x, ctx: PrecisionContext):
    """Continuous weight on ``(0, 1]`` matching :func:`lattice_weight` at ``q^k``.

    ``x**alpha`` with ``q**alpha = a`` is evaluated as ``exp(log a log x / log q)``.
    """
    mp = ctx.mp
    x = ctx.mpf(x)
    if not x > 0:
        raise DomainError(f"weight is defined on (0, 1], got x = {x}")
    a, b = fam.parameters(n, ctx)
    q = ctx.qf
    lx = mp.log(x)
    power = mp.exp(mp.log(a) * lx / ctx.log_q)
    w = poch_infinite(q * x, ctx) * power
    if fam.kind is Kind.Q_BESSEL:
        w *= mp.exp(lx * lx / (2 * ctx.log_q)) / mp.sqrt(x) / poch_infinite(q, ctx)
    elif fam.kind is Kind.LITTLE_Q_JACOBI:
        w /= poch_infinite(b * q * x, ctx)
    return w


def l2_norm_sq(fam: FamilySpec, n: int, ctx: PrecisionContext):
    """``sum_k q^k w(q^k) p_n(q^k)^2`` for the 2phi1-normalised ``p_n``."""
    fam.validate(ctx.q)
    a, b = fam.parameters(n, ctx)
    q = ctx.qf
    if fam.kind is Kind.LITTLE_Q_LAGUERRE:
        return (a * q) ** n / poch_infinite(a * q, ctx) * poch_finite(q, n, ctx) / poch_finite(a * q, n, ctx)
    if fam.kind is Kind.Q_BESSEL:
        qn = ctx.qpow(n)
        return (
            poch_finite(q, n, ctx)
            * poch_infinite(-a * qn, ctx)
            * (a * q) ** n
            * ctx.qpow(Fraction(n * (n - 1), 2))
            / (1 + a * qn * qn)
        )
    ab = a * b
    num = poch_infinite(ab * q * q, ctx) * (1 - ab * q) * (a * q) ** n * poch_finite(q, n, ctx) * poch_finite(b * q, n, ctx)
    den = poch_infinite(a * q, ctx) * (1 - ab * ctx.qpow(2 * n + 1)) * poch_finite(a * q, n, ctx) * poch_finite(ab * q, n, ctx)
    return num / den


def leading_coeff(fam: FamilySpec, n: int, ctx: PrecisionContext):
    """Leading coefficient ``gamma_n > 0`` of the orthonormal polynomial."""
    fam.validate(ctx.q)
    mp = ctx.mp
    a, b = fam.parameters(n, ctx)
    q = ctx.qf
    if fam.kind is Kind.LITTLE_Q_LAGUERRE:
        aq = a * q
        return ctx.qpow(Fraction(-n * (n - 1), 2)) * mp.sqrt(
            poch_infinite(aq, ctx) / (poch_finite(aq, n, ctx) * aq**n * poch_finite(q, n, ctx))
        )
    if fam.kind is Kind.Q_BESSEL:
        return (
            ctx.qpow(Fraction(-3 * n * (n - 1), 4))
            * poch_finite(-a, 2 * n, ctx)
            * mp.sqrt(
                (1 + a * ctx.qpow(2 * n))
                / (poch_finite(q, n, ctx) * poch_infinite(-a, ctx) * (a * q) ** n * poch_finite(-a, n, ctx))
            )
        )
    ab = a * b
    abq = ab * q
    return (
        ctx.qpow(Fraction(-n * (n - 1), 2))
        * poch_finite(abq, 2 * n, ctx)
        / mp.sqrt(poch_finite(abq, n, ctx) * poch_finite(a * q, n, ctx))
        * mp.sqrt(
            poch_infinite(a * q, ctx)
            * (1 - ab * ctx.qpow(2 * n + 1))
            / (
                poch_infinite(abq * q, ctx)
                * (1 - abq)
                * (a * q) ** n
                * poch_finite(q, n, ctx)
                * poch_finite(b * q, n, ctx)
            )
        )
    )


def orthonormal_eval(fam: FamilySpec, n: int, x, ctx: PrecisionContext):
    return leading_coeff(fam, n, ctx) * monic_eval(fam, n, x, ctx)


def working_context(fam: FamilySpec, n: int, ctx: PrecisionContext, margin: float = 1.5) -> PrecisionContext:
    """Context wide enough for cancellation-free evaluation at degree ``n``.

    Scaled parameters inflate the series coefficients beyond the generic
    ``q**(-n*n/2)`` growth, so the budget also covers four times the bit size
    of the largest coefficient.
    """
    need = precision_for(n, ctx, margin)
    probe = PrecisionContext(ctx.q, 128)
    big = 0.0
    for c in coefficients(fam, n, probe):
        if c != 0:
            big = max(big, float(probe.mp.log(abs(c), 2)))
    need = max(need, math.ceil(margin * 4 * big))
    if need <= ctx.bits:
        return ctx
    return ctx.with_bits(need)


@dataclass(frozen=True)
class FieldPiece:
    """``Q(x) = u (log x)^2 + v log x + k`` for ``log_lo <= log x <= log_hi``."""

    log_lo: object
    log_hi: object
    u: object
    v: object
    k: object

    @property
    def x_lo(self):
        return 0 if self.log_lo == float("-inf") else _exp(self.log_lo)

    @property
    def x_hi(self):
        return _exp(self.log_hi)

    def value(self, L):
        return (self.u * L + self.v) * L + self.k

    def slope(self, L):
        return 2 * self.u * L + self.v


def _exp(L):
    return mpmath.exp(L)


@dataclass(frozen=True)
class FieldSpec:
    """Piecewise log-quadratic external field on ``(0, 1]``.

    Pieces are stored in log-coordinates, ordered from the origin outwards.
    """

    pieces: tuple

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise DomainError("a field needs at least one piece")
        if pieces[0].log_lo != float("-inf") or pieces[-1].log_hi != 0:
            raise DomainError("field pieces must cover (0, 1]")
        for left, right in zip(pieces, pieces[1:]):
            if left.log_hi != right.log_lo:
                raise DomainError("field pieces must tile (0, 1] without gaps or overlaps")
            if not left.log_lo < left.log_hi:
                raise DomainError("empty field piece")

    def piece_at(self, L):
        for p in self.pieces:
            if L <= p.log_hi:
                return p
        raise DomainError("x outside (0, 1]")

    def value_log(self, L):
        return self.piece_at(L).value(L)

    def slope_log(self, L):
        return self.piece_at(L).slope(L)

    def continuity_gaps(self):
        """Jumps of ``Q`` and of ``x Q'(x)`` at each breakpoint."""
        out = []
        for left, right in zip(self.pieces, self.pieces[1:]):
            L = left.log_hi
            out.append((L, right.value(L) - left.value(L), right.slope(L) - left.slope(L)))
        return out

    @property
    def is_zero(self):
        return all(p.u == 0 and p.v == 0 and p.k == 0 for p in self.pieces)


def zero_field(ctx: PrecisionContext) -> FieldSpec:
    z = ctx.mpf(0)
    return FieldSpec((FieldPiece(ctx.mp.ninf, z, z, z, z),))


def log_quadratic_field(u, v, ctx: PrecisionContext) -> FieldSpec:
    return FieldSpec((FieldPiece(ctx.mp.ninf, ctx.mpf(0), ctx.mpf(u), ctx.mpf(v), ctx.mpf(0)),))


def external_field(fam: FamilySpec, ctx: PrecisionContext) -> FieldSpec:
    """Limit field ``Q`` with ``-(1/n^2) log w(x^n) -> 2 Q(x)``.

    Fixed-parameter little q-Laguerre/Jacobi weights give ``Q = 0``; the
    q-Bessel weight always carries the Gaussian factor in ``log x``.
    """
    fam.validate(ctx.q)
    mp = ctx.mp
    lq = ctx.log_q
    p = fam.params
    if isinstance(p, Fixed):
        if fam.kind is Kind.Q_BESSEL:
            return log_quadratic_field(-1 / (4 * lq), 0, ctx)
        return zero_field(ctx)
    alpha = ctx.mpf(p.alpha)
    if fam.kind is Kind.LITTLE_Q_LAGUERRE:
        return log_quadratic_field(0, -alpha, ctx)
    if fam.kind is Kind.Q_BESSEL:
        return log_quadratic_field(-1 / (4 * lq), -alpha, ctx)
    if p.sign_b > 0 or p.beta >= 0:
        return log_quadratic_field(0, -alpha, ctx)
    beta = ctx.mpf(p.beta)
    brk = -2 * beta * lq
    zero = ctx.mpf(0)
    inner = FieldPiece(mp.ninf, brk, zero, -alpha, zero)
    # -alpha L - (L/log q + 2 beta)^2 log q / 4, expanded in powers of L
    outer = FieldPiece(brk, zero, -1 / (4 * lq), -alpha - beta, -beta * beta * lq)
    return FieldSpec((inner, outer))


def field_discrepancy(fam: FamilySpec, n: int, xs, ctx: PrecisionContext):
    """``max_x |-(1/n^2) log w(x^n) - 2 Q(x)|`` over the sample points ``xs``."""
    field = external_field(fam, ctx)
    mp = ctx.mp
    worst = ctx.mpf(0)
    for x in xs:
        x = ctx.mpf(x)
        lhs = -mp.log(weight(fam, n, x**n, ctx)) / (n * n)
        rhs = 2 * field.value_log(mp.log(x))
        worst = max(worst, abs(lhs - rhs))
    return worst
