"""Zeros of the lattice polynomials and an independent eigenvalue oracle.

Between two consecutive lattice points ``q^(k+1) < x <= q^k`` a polynomial
orthogonal on ``{q^k}`` has at most one zero, so a sign change of ``p_n``
across a lattice gap certifies exactly one zero there.  Scanning
``p_n(q^k)`` for ``k = 0, 1, 2, ...`` until ``n`` sign changes are seen finds
every zero without global root isolation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import families as fm
from .errors import ConvergenceError, DomainError
from .qnum import PrecisionContext, precision_for

log = logging.getLogger(__name__)

ORACLE_CAP = 16
_TINY = 1e-300


@dataclass(frozen=True)
class ZeroSet:
    n: int
    zeros: tuple
    certified_bits: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    def as_floats(self):
        return np.array([float(z) for z in self.zeros])


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Equal masses ``1/n`` on ``support``."""

    support: tuple

    @property
    def masses(self):
        n = len(self.support)
        return np.full(n, 1.0 / n) if n else np.zeros(0)

    def as_floats(self):
        return np.array([float(s) for s in self.support])


def _scan_cap(fam: fm.FamilySpec, n: int, q: Fraction) -> int:
    p = fam.params
    shift = 0
    if isinstance(p, fm.Scaled):
        shift = 2 * abs(float(p.alpha)) + 2 * abs(float(p.beta))
    # scaled zeros live in [q^s, 1] with s of order 1 + shift
    return math.ceil(n * (4 * max(1.0, math.log(1 / q)) + 2 * shift)) + 16


def bracket_zeros(fam: fm.FamilySpec, n: int, ctx: PrecisionContext, cap: int | None = None):
    """Lattice gaps ``(q^(k+1), q^k)`` each holding one sign change of ``p_n``.

    Returns a list of ``(lo, hi)`` pairs, largest zero first.  A zero that
    falls exactly on a lattice point is returned as ``(x, x)``.
    """
    if n < 0:
        raise DomainError(f"degree n = {n} must be non-negative")
    if n == 0:
        return []
    if ctx.bits < precision_for(n, ctx):
        raise DomainError(f"context has {ctx.bits} bits, degree {n} needs {precision_for(n, ctx)}")
    cap = _scan_cap(fam, n, ctx.q) if cap is None else cap
    brackets = []
    prev_x = ctx.mpf(1)
    prev_v = fm.eval_poly(fam, n, prev_x, ctx)
    if prev_v == 0:
        brackets.append((prev_x, prev_x))
    k = 0
    while len(brackets) < n and k < cap:
        k += 1
        x = ctx.qpow(k)
        v = fm.eval_poly(fam, n, x, ctx)
        if v == 0:
            brackets.append((x, x))
        elif prev_v != 0 and (v > 0) != (prev_v > 0):
            brackets.append((x, prev_x))
        prev_x, prev_v = x, v
    if len(brackets) < n:
        raise ConvergenceError(
            f"found {len(brackets)} of {n} sign changes within {cap} lattice steps"
        )
    return brackets


def refine_zero(fam: fm.FamilySpec, n: int, bracket, ctx: PrecisionContext, rel_tol=None, max_iter: int = 10_000):
    """Shrink a sign-change bracket to relative width ``rel_tol``.

    Illinois false-position steps, with a bisection step whenever an
    iteration fails to halve the bracket.  The returned point ``z`` has
    opposite signs of ``p_n`` at ``z(1 - rel_tol)`` and ``z(1 + rel_tol)``.
    """
    mp = ctx.mp
    rel_tol = mp.power(2, -mp.mpf(ctx.bits) / 4) if rel_tol is None else ctx.mpf(rel_tol)
    lo, hi = (ctx.mpf(b) for b in bracket)
    if lo == hi:
        return lo
    f = lambda x: fm.eval_poly(fam, n, x, ctx)
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise DomainError("bracket endpoints have the same sign")
    side = 0
    for _ in range(max_iter):
        width = hi - lo
        if width <= rel_tol * lo:
            break
        c = (lo * fhi - hi * flo) / (fhi - flo)
        if not lo < c < hi:
            c = (lo + hi) / 2
        fc = f(c)
        if fc == 0:
            return c
        if (fc > 0) == (flo > 0):
            lo, flo = c, fc
            if side == -1:
                fhi /= 2
            side = -1
        else:
            hi, fhi = c, fc
            if side == 1:
                flo /= 2
            side = 1
        if hi - lo > width / 2:
            mid = (lo + hi) / 2
            fm_ = f(mid)
            if fm_ == 0:
                return mid
            if (fm_ > 0) == (flo > 0):
                lo, flo = mid, fm_
            else:
                hi, fhi = mid, fm_
            side = 0
    else:
        raise ConvergenceError(f"zero refinement stalled at relative width {mp.nstr((hi - lo) / lo, 5)}")
    # secant polish inside the certified bracket
    z = (lo * fhi - hi * flo) / (fhi - flo)
    if not lo <= z <= hi:
        z = (lo + hi) / 2
    d = rel_tol * z
    a, b = f(z - d), f(z + d)
    if a != 0 and b != 0 and (a > 0) == (b > 0):
        z = (lo + hi) / 2
    return z


def compute_zeros(fam: fm.FamilySpec, n: int, ctx: PrecisionContext, rel_tol=None, retries: int = 2) -> ZeroSet:
    """All ``n`` zeros, ascending, with precision escalation on failure."""
    wctx = fm.working_context(fam, n, ctx)
    cap = _scan_cap(fam, n, ctx.q)
    escalations = 0
    while True:
        try:
            brackets = bracket_zeros(fam, n, wctx, cap=cap)
            break
        except ConvergenceError:
            if escalations >= retries:
                raise
            escalations += 1
            log.warning("degree %d: too few sign changes, doubling bits to %d", n, 2 * wctx.bits)
            wctx = wctx.with_bits(2 * wctx.bits)
            cap *= 2
    zs = sorted(refine_zero(fam, n, b, wctx, rel_tol) for b in brackets)
    diag = {"scan_steps": cap, "escalations": escalations, "lowest_gap": None}
    if zs:
        diag["lowest_gap"] = int(math.floor(float(wctx.mp.log(zs[0]) / wctx.log_q)))
    return ZeroSet(n, tuple(zs), wctx.bits, diag)


def lattice_gap_index(x, ctx: PrecisionContext) -> int:
    """``k`` with ``q^(k+1) < x <= q^k``."""
    k = int(math.floor(float(ctx.mp.log(x) / ctx.log_q)))
    while ctx.qpow(k) < x:
        k -= 1
    while ctx.qpow(k + 1) >= x:
        k += 1
    return k


def check_zero_set(zs: ZeroSet, ctx: PrecisionContext, probes=None):
    """Return a list of invariant violations (empty when all hold)."""
    problems = []
    z = list(zs.zeros)
    if len(z) != zs.n:
        problems.append(f"expected {zs.n} zeros, got {len(z)}")
    if any(not a < b for a, b in zip(z, z[1:])):
        problems.append("zeros are not strictly increasing")
    if any(not 0 < x <= 1 for x in z):
        problems.append("zero outside (0, 1]")
    gaps = [lattice_gap_index(x, ctx) for x in z]
    if len(set(gaps)) != len(gaps):
        problems.append("two zeros share a lattice gap")
    if probes is None:
        probes = sorted({float(ctx.qpow(Fraction(j, 2))) for j in range(1, 2 * (max(gaps, default=0) + 2))})
    for a in probes:
        bound = math.ceil(math.log(a) / math.log(ctx.q))
        count = sum(1 for x in z if x >= a)
        if count > bound:
            problems.append(f"{count} zeros in [{a:.4g}, 1] exceeds ceil(log a/log q) = {bound}")
    return problems


def scaled_zeros(zs: ZeroSet) -> EmpiricalMeasure:
    """Support ``x^(1/n)`` of the scaled zero counting measure."""
    if zs.n == 0:
        return EmpiricalMeasure(())
    return EmpiricalMeasure(tuple(z.context.root(z, zs.n) for z in zs.zeros))


def unit_roots(n: int) -> np.ndarray:
    """``exp(2 pi i k / n)`` with exact conjugate pairs and exact axis points."""
    k = np.arange(n)
    w = np.exp(2j * np.pi * k / n)
    half = n // 2
    for j in range(1, (n + 1) // 2):
        w[n - j] = np.conj(w[j])
    w[0] = 1.0
    if n % 2 == 0:
        w[half] = -1.0
    if n % 4 == 0:
        w[n // 4] = 1j
        w[3 * n // 4] = -1j
    return w


def zero_cloud(zs: ZeroSet) -> np.ndarray:
    """The ``n^2`` zeros of ``p_n(x^n)``: each scaled zero times every n-th root of unity."""
    radii = scaled_zeros(zs).as_floats()
    if zs.n == 0:
        return np.zeros(0, dtype=complex)
    return np.outer(radii, unit_roots(zs.n)).ravel()


def ks_distance(emp: EmpiricalMeasure, cdf) -> float:
    x = np.sort(emp.as_floats())
    n = len(x)
    if n == 0:
        return 0.0
    F = np.array([float(cdf(t)) for t in x])
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(F - i / n)), np.max(np.abs(F - (i - 1) / n))))


def lattice_moments(fam: fm.FamilySpec, n: int, count: int, ctx: PrecisionContext):
    """``m_j = (1 - q) sum_k q^(k(j+1)) w(q^k)`` for ``j < count``."""
    mp = ctx.mp
    q = ctx.qf
    tol = mp.power(2, -ctx.bits - 16)
    moments = [mp.mpf(0)] * count
    a, b = fam.parameters(n, ctx)
    # running lattice weight w_k, updated by its ratio
    w = mp.mpf(1)
    x = mp.mpf(1)
    k = 0
    while True:
        mass = (1 - q) * x * w
        xp = mass
        for j in range(count):
            moments[j] += xp
            xp *= x
        if k > 8 and mass < tol * moments[0]:
            break
        ratio = a / (1 - q ** (k + 1))
        if fam.kind is fm.Kind.Q_BESSEL:
            ratio *= q**k
        elif fam.kind is fm.Kind.LITTLE_Q_JACOBI:
            ratio *= 1 - b * q ** (k + 1)
        w *= ratio
        x *= q
        k += 1
        if k > 10_000_000:
            raise ConvergenceError("moment sums did not converge")
    return moments


def chebyshev_recurrence(moments, n: int, ctx: PrecisionContext):
    """Recurrence coefficients ``alpha_k, beta_k`` (k < n) from ``2n`` moments."""
    mp = ctx.mp
    if len(moments) < 2 * n:
        raise DomainError("need 2n moments")
    alpha = [mp.mpf(0)] * n
    beta = [mp.mpf(0)] * n
    sig_prev = [mp.mpf(0)] * (2 * n)
    sig = list(moments[: 2 * n])
    alpha[0] = moments[1] / moments[0]
    beta[0] = moments[0]
    for k in range(1, n):
        new = [mp.mpf(0)] * (2 * n)
        for l in range(k, 2 * n - k):
            new[l] = sig[l + 1] - alpha[k - 1] * sig[l] - beta[k - 1] * sig_prev[l]
        if not new[k] > 0:
            raise ConvergenceError(f"moment recursion lost positivity at step {k}")
        alpha[k] = new[k + 1] / new[k] - sig[k] / sig[k - 1]
        beta[k] = new[k] / sig[k - 1]
        sig_prev, sig = sig, new
    return alpha, beta


def sturm_count(alpha, beta, x) -> int:
    """Number of eigenvalues of the Jacobi matrix below ``x``."""
    count = 0
    d = alpha[0] - x
    if d < 0:
        count += 1
    for k in range(1, len(alpha)):
        if d == 0:
            # exact pivot breakdown: perturb to the positive side
            d = _TINY
        d = alpha[k] - x - beta[k] / d
        if d < 0:
            count += 1
    return count


def tridiagonal_eigenvalues(alpha, beta, ctx: PrecisionContext, rel_tol=None):
    """Eigenvalues of the symmetric tridiagonal matrix by Sturm bisection.

    ``beta[k]`` (k >= 1) are squared off-diagonal entries.  Bisection runs on
    the geometric midpoint once both ends are positive so that tiny
    eigenvalues are resolved to relative accuracy.
    """
    mp = ctx.mp
    n = len(alpha)
    rel_tol = mp.power(2, -mp.mpf(ctx.bits) / 3) if rel_tol is None else ctx.mpf(rel_tol)
    # Gershgorin bounds
    off = [mp.sqrt(b) for b in beta[1:]] + [mp.mpf(0)]
    lo_all = min(alpha[i] - (off[i - 1] if i else 0) - off[i] for i in range(n))
    hi_all = max(alpha[i] + (off[i - 1] if i else 0) + off[i] for i in range(n))
    out = []
    for i in range(n):
        lo, hi = lo_all, hi_all
        if lo <= 0 and sturm_count(alpha, beta, mp.mpf(0)) == 0:
            lo = mp.mpf(0)
        for _ in range(100_000):
            if lo > 0:
                if hi - lo <= rel_tol * lo:
                    break
                mid = mp.sqrt(lo * hi)
            else:
                if hi - lo <= rel_tol * abs(hi) or hi - lo < mp.power(2, -ctx.bits):
                    break
                mid = (lo + hi) / 2 if lo < 0 else hi * mp.power(2, -64)
            if sturm_count(alpha, beta, mid) > i:
                hi = mid
            else:
                lo = mid
        out.append((lo + hi) / 2)
    return out


def jacobi_oracle(fam: fm.FamilySpec, n: int, ctx: PrecisionContext, cap: int = ORACLE_CAP, retries: int = 2):
    """Zeros of ``p_n`` as eigenvalues of the Jacobi matrix built from moments."""
    if n > cap:
        raise DomainError(f"oracle limited to n <= {cap}; moment maps are ill-conditioned beyond")
    if n == 0:
        return []
    bits = 4 * max(ctx.bits, fm.working_context(fam, n, ctx).bits)
    for attempt in range(retries + 1):
        octx = ctx.with_bits(bits)
        try:
            moments = lattice_moments(fam, n, 2 * n, octx)
            alpha, beta = chebyshev_recurrence(moments, n, octx)
            return tridiagonal_eigenvalues(alpha, beta, octx)
        except ConvergenceError:
            if attempt == retries:
                raise
            bits *= 2
