"""High-precision context and q-Pochhammer primitives.

Every quantity in this package that depends on the base ``q`` is computed
through a :class:`PrecisionContext`.  The context fixes ``q`` as an exact
rational together with a mantissa width; powers ``q**e`` for rational ``e``
are evaluated as ``exp(e * log q)`` with ``log q`` cached per context.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from mpmath.ctx_mp import MPContext

from .errors import ConvergenceError, DomainError

DEFAULT_BITS = 256
MIN_BITS = 64
POCH_MAX_TERMS = 2_000_000


def parse_rational(text) -> Fraction:
    """Parse ``"p/r"``, an integer, a decimal string or a number into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, (int, float)):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"cannot parse {text!r} as a rational number") from exc


def parse_q(text) -> Fraction:
    q = parse_rational(text)
    if not 0 < q < 1:
        raise DomainError(f"q = {q} violates the constraint 0 < q < 1")
    return q


@dataclass(frozen=True)
class PrecisionContext:
    """Base ``q``, mantissa width and truncation tolerance.

    ``tail_tol`` defaults to ``10**(-bits/4)``.  Instances are immutable and
    hashable; use :meth:`with_bits` to derive a context with the same ``q``.
    """

    q: Fraction
    bits: int = DEFAULT_BITS
    tail_tol: object = None
    mp: MPContext = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        q = parse_q(self.q)
        object.__setattr__(self, "q", q)
        if int(self.bits) != self.bits or self.bits < MIN_BITS:
            raise DomainError(f"bits = {self.bits} violates bits >= {MIN_BITS}")
        object.__setattr__(self, "bits", int(self.bits))
        mp = MPContext()
        mp.prec = self.bits
        object.__setattr__(self, "mp", mp)
        if self.tail_tol is None:
            tol = mp.power(10, -mp.mpf(self.bits) / 4)
        else:
            tol = self.mpf(self.tail_tol)
        if not 0 < tol < 1:
            raise DomainError("tail_tol must satisfy 0 < tail_tol < 1")
        object.__setattr__(self, "tail_tol", tol)

    def __hash__(self):
        return hash((self.q, self.bits, str(self.tail_tol)))

    def __eq__(self, other):
        if not isinstance(other, PrecisionContext):
            return NotImplemented
        return (self.q, self.bits, str(self.tail_tol)) == (other.q, other.bits, str(other.tail_tol))

    def with_bits(self, bits: int) -> "PrecisionContext":
        # tail_tol follows the new width unless it was pinned explicitly
        return PrecisionContext(self.q, bits)

    def mpf(self, x):
        if isinstance(x, Fraction):
            return self.mp.mpf(x.numerator) / x.denominator
        if isinstance(x, str) and "/" in x:
            return self.mpf(parse_rational(x))
        return self.mp.mpf(x)

    def check_same_base(self, other: "PrecisionContext"):
        if other.q != self.q:
            raise DomainError(f"mixing contexts with q = {self.q} and q = {other.q}")

    @cached_property
    def qf(self):
        return self.mpf(self.q)

    @cached_property
    def log_q(self):
        return self.mp.log(self.qf)

    def qpow(self, e):
        """``q**e``; exact rational arithmetic for integer ``e``."""
        e = parse_rational(e)
        if e.denominator == 1:
            return self.mpf(self.q ** int(e))
        return self.mp.exp(self.mpf(e) * self.log_q)


def poch_finite(z, k: int, ctx: PrecisionContext):
    """``(z; q)_k``; the empty product for ``k = 0`` is exactly 1."""
    if k < 0:
        raise DomainError(f"k = {k} must be non-negative")
    mp = ctx.mp
    z = ctx.mpf(z)
    q = ctx.qf
    p = mp.mpf(1)
    t = z
    for _ in range(k):
        p *= 1 - t
        t *= q
    return p


def poch_infinite(z, ctx: PrecisionContext, max_terms: int = POCH_MAX_TERMS):
    """``(z; q)_inf`` truncated once ``|z q^N| < tail_tol``.

    The discarded tail ``prod_{i>=N} (1 - z q^i)`` is replaced by its
    first-order value ``exp(-z q^N / (1 - q))``, leaving an error of order
    ``(z q^N)**2``.
    """
    mp = ctx.mp
    z = ctx.mpf(z)
    if z == 0:
        return mp.mpf(1)
    q = ctx.qf
    tol = ctx.tail_tol
    p = mp.mpf(1)
    t = z
    for _ in range(max_terms):
        if abs(t) < tol:
            return p * mp.exp(-t / (1 - q))
        p *= 1 - t
        if p == 0:
            return p
        t *= q
    raise ConvergenceError(
        f"(z;q)_inf with |z| = {mp.nstr(abs(z), 5)} did not reach tail_tol "
        f"within {max_terms} factors"
    )


def precision_for(n: int, ctx: PrecisionContext, margin: float = 1.5) -> int:
    """Bits needed to evaluate degree-``n`` polynomials over base ``ctx.q``.

    Leading coefficients grow like ``q**(-n*n/2)``, so the bit budget grows
    quadratically in ``n``.  The floor is 128 bits or ``QZERO_DEFAULT_BITS``.
    """
    if n < 0:
        raise DomainError(f"degree n = {n} must be non-negative")
    floor = int(os.environ.get("QZERO_DEFAULT_BITS", 128))
    need = margin * 2 * n * n * math.log2(1 / ctx.q)
    # guard against float noise pushing an exact integer up by one
    need_bits = math.ceil(need - 1e-9)
    return max(floor, need_bits)
