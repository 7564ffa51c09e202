"""Circular-symmetric logarithmic potentials and constrained equilibria.

A circular-symmetric measure is determined by its radial part.  The
potential of the uniform unit mass on the circle ``|z| = s`` at ``|z| = r`` is
``-log max(r, s)``, so every potential here is a one-dimensional integral of
that kernel.  All radial parts are finite sums of ``c/r`` densities and
atoms, for which the integral has a closed form.  Radii are handled in
log-coordinates ``L = log r`` throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from .errors import DomainError, UnsupportedRegime
from .families import FieldSpec, zero_field
from .qnum import PrecisionContext

DEFAULT_BITS = 128


def _ctx(q, bits=DEFAULT_BITS) -> PrecisionContext:
    if isinstance(q, PrecisionContext):
        return q
    return PrecisionContext(q, bits)


@dataclass(frozen=True)
class Piece:
    """Density ``c / r`` on ``[exp(lo), exp(hi)]``."""

    c: object
    lo: object
    hi: object

    @property
    def A(self):
        return mpmath.exp(self.lo)

    @property
    def B(self):
        return mpmath.exp(self.hi)

    @property
    def mass(self):
        return self.c * (self.hi - self.lo)

    def potential(self, L):
        c, a, b = self.c, self.lo, self.hi
        if L <= a:
            return -c * (b * b - a * a) / 2
        if L >= b:
            return -c * L * (b - a)
        return -c * L * (L - a) - c * (b * b - L * L) / 2

    def cdf(self, L):
        if L <= self.lo:
            return 0 * self.c
        return self.c * (min(L, self.hi) - self.lo)


@dataclass(frozen=True)
class RadialMeasure:
    """``sum c/r`` pieces plus atoms ``(log s, m)`` on ``(0, 1]``."""

    pieces: tuple = ()
    atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "atoms", tuple(self.atoms))
        for p in self.pieces:
            if not (p.lo < p.hi <= 0) or p.c < 0:
                raise DomainError(f"invalid piece c={p.c} on [{p.lo}, {p.hi}] (log-radii)")
        for s, m in self.atoms:
            if s > 0 or m < 0:
                raise DomainError("atoms need radius in (0, 1] and non-negative mass")

    @property
    def mass(self):
        total = sum((p.mass for p in self.pieces), 0)
        return total + sum((m for _, m in self.atoms), 0)

    def potential_log(self, L):
        """``U`` at radius ``exp(L)``."""
        u = sum((p.potential(L) for p in self.pieces), 0)
        for s, m in self.atoms:
            u -= m * max(L, s)
        return u

    def density_log(self, L):
        """Coefficient ``c(L)`` of the total density ``c(L)/r`` (pieces only)."""
        return sum((p.c for p in self.pieces if p.lo <= L <= p.hi), 0)

    def cdf_log(self, L):
        total = sum((p.cdf(L) for p in self.pieces), 0)
        return total + sum((m for s, m in self.atoms if s <= L), 0)

    def breakpoints(self):
        pts = set()
        for p in self.pieces:
            pts.add(p.lo)
            pts.add(p.hi)
        return sorted(pts)

    def segments(self):
        """Non-overlapping ``(lo, hi, c)`` segments of the merged density."""
        pts = self.breakpoints()
        out = []
        for a, b in zip(pts, pts[1:]):
            c = sum((p.c for p in self.pieces if p.lo <= a and b <= p.hi), 0)
            if out and out[-1][2] == c and out[-1][1] == a:
                out[-1] = (out[-1][0], b, c)
            else:
                out.append((a, b, c))
        return out

    def support_log(self):
        """Closed support intervals of the absolutely continuous part."""
        out = []
        for a, b, c in self.segments():
            if c > 0:
                if out and out[-1][1] == a:
                    out[-1] = (out[-1][0], b)
                else:
                    out.append((a, b))
        return out


def kernel(r, s):
    """Potential at radius ``r`` of the unit uniform mass on ``|z| = s``."""
    if r <= 0 or s <= 0:
        raise DomainError("radii must be positive")
    return -math.log(max(r, s))


def sigma_density(q) -> object:
    """Coefficient ``c_sigma = -1/log q`` of the constraint density ``c_sigma / t``."""
    ctx = _ctx(q)
    return -1 / ctx.log_q


constraint_sigma = sigma_density


def sigma_mass(q, a, b=1):
    """``sigma([a, b]) = (log b - log a) / (-log q)``."""
    ctx = _ctx(q)
    mp = ctx.mp
    a, b = ctx.mpf(a), ctx.mpf(b)
    if not 0 < a <= b:
        raise DomainError("sigma mass needs 0 < a <= b")
    return (mp.log(b) - mp.log(a)) / (-ctx.log_q)


@dataclass(frozen=True)
class EquilibriumSolution:
    measure: RadialMeasure
    w: object
    field: FieldSpec
    support_kind: str
    q: object = None
    c_sigma: object = None
    free_region: tuple = field(default=None)

    def total_log(self, L):
        """``U + Q`` at radius ``exp(L)``."""
        return self.measure.potential_log(L) + self.field.value_log(L)


def potential(mu: RadialMeasure, r):
    """Logarithmic potential of the circular-symmetric measure at radius ``r``."""
    if not r > 0:
        raise DomainError(f"potential needs r > 0, got {r}")
    L = r.context.log(r) if hasattr(r, "context") else mpmath.log(r)
    return mu.potential_log(L)


def field_eval(Q: FieldSpec, x):
    L = _log_in_unit(x)
    return Q.value_log(L)


def field_slope(Q: FieldSpec, x):
    """``x Q'(x)``."""
    L = _log_in_unit(x)
    return Q.slope_log(L)


def _log_in_unit(x):
    if not 0 < x <= 1:
        raise DomainError(f"field is defined on (0, 1], got x = {x}")
    return x.context.log(x) if hasattr(x, "context") else mpmath.log(x)


def _saturated(ctx: PrecisionContext) -> RadialMeasure:
    return RadialMeasure((Piece(-1 / ctx.log_q, ctx.log_q, ctx.mpf(0)),))


def equilibrium_no_field(q, bits: int = DEFAULT_BITS) -> EquilibriumSolution:
    ctx = _ctx(q, bits)
    mu = _saturated(ctx)
    return EquilibriumSolution(mu, -ctx.log_q / 2, zero_field(ctx), "full-constraint", ctx.q, -1 / ctx.log_q)


def _check_field_class(Q: FieldSpec, c_sigma):
    for p in Q.pieces:
        if p.u < 0:
            raise UnsupportedRegime("x Q'(x) must be non-decreasing (u >= 0 on every piece)")
        if 2 * p.u > c_sigma * (1 + 1e-12):
            raise UnsupportedRegime("band density (tQ'(t))' = 2u/t exceeds the constraint density")
    scale = max(abs(p.v) + abs(p.k) + abs(p.u) for p in Q.pieces) + 1
    for L, jump_q, jump_slope in Q.continuity_gaps():
        if abs(jump_q) > 1e-20 * scale or abs(jump_slope) > 1e-20 * scale:
            raise UnsupportedRegime("field or x Q'(x) discontinuous at a breakpoint")
    first = Q.pieces[0]
    if first.u == 0 and first.v > 0:
        raise UnsupportedRegime("Q must be decreasing near the origin")


def _last_nonpositive(Q: FieldSpec):
    """``log r_0``: sup of ``L`` with ``x Q'(x) <= 0``; None if the slope is never <= 0."""
    best = None
    for p in Q.pieces:
        if p.u == 0:
            if p.v <= 0:
                best = p.log_hi
        else:
            Lz = -p.v / (2 * p.u)
            if Lz >= p.log_lo:
                cand = min(Lz, p.log_hi)
                best = cand if best is None else max(best, cand)
    return best


def _first_reaching_one(Q: FieldSpec):
    """``log R_0``: smallest ``L`` with ``x Q'(x) = 1``; None if ``R_0 > 1``."""
    for p in Q.pieces:
        if p.slope(p.log_hi) >= 1:
            if p.u == 0:
                return p.log_lo
            return max(p.log_lo, (1 - p.v) / (2 * p.u))
    return None


def _band_segments(Q: FieldSpec, lo, hi):
    """``(lo, hi, 2u)`` segments of ``(t Q'(t))'`` tiling ``[lo, hi]``."""
    out = []
    for p in Q.pieces:
        a = max(lo, p.log_lo)
        b = min(hi, p.log_hi)
        if a < b:
            out.append((a, b, 2 * p.u))
    return out


def equilibrium_with_field(Q: FieldSpec, q, bits: int = DEFAULT_BITS) -> EquilibriumSolution:
    """Closed-form constrained equilibrium for a log-quadratic field.

    Fields with ``x Q'(x)`` non-decreasing and band density below the
    constraint are handled: a decreasing field keeps the saturated measure,
    otherwise the unconstrained band ``[r_0, R_0]`` with density
    ``(t Q'(t))'`` is built and any mass missing inside the unit disk is
    swept under the constraint next to ``r = 1``.
    """
    ctx = _ctx(q, bits)
    lq = ctx.log_q
    c_sigma = -1 / lq
    if Q.is_zero:
        sol = equilibrium_no_field(ctx)
        return sol
    _check_field_class(Q, c_sigma)
    zero = ctx.mpf(0)
    slope_at_one = Q.slope_log(zero)
    if slope_at_one <= 0:
        mu = _saturated(ctx)
        w = mu.potential_log(lq) + Q.value_log(lq)
        return EquilibriumSolution(mu, w, Q, "decreasing-Q", ctx.q, c_sigma, None)
    L0 = _last_nonpositive(Q)
    if L0 is None:
        raise UnsupportedRegime("Q must be decreasing near the origin")
    L1 = _first_reaching_one(Q)
    if L1 is not None:
        segs = _band_segments(Q, L0, L1)
        mu = RadialMeasure(tuple(Piece(c, a, b) for a, b, c in segs if c > 0))
        kind = "band"
        free = (L0, L1)
    else:
        segs = _band_segments(Q, L0, zero)
        # the missing mass 1 - slope(0) is swept inwards from r = 1 under the constraint
        need = 1 - slope_at_one
        hi = zero
        sweep = []
        for a, b, c in reversed(segs):
            room = c_sigma - c
            if room <= 0:
                hi = a
                continue
            if room * (b - a) >= need:
                lo = b - need / room
                sweep.append(Piece(room, lo, b))
                need = 0
                hi = lo
                break
            sweep.append(Piece(room, a, b))
            need -= room * (b - a)
            hi = a
        if need > 0 or hi <= L0:
            # the swept part reaches r_0: the whole support saturates
            mu = _saturated(ctx)
            w = mu.potential_log(lq) + Q.value_log(lq)
            return EquilibriumSolution(mu, w, Q, "full-constraint", ctx.q, c_sigma, None)
        band = tuple(Piece(c, a, b) for a, b, c in segs if c > 0)
        mu = RadialMeasure(band + tuple(reversed(sweep)))
        kind = "band-plus-sweep"
        free = (L0, hi)
    mid = (free[0] + free[1]) / 2
    w = mu.potential_log(mid) + Q.value_log(mid)
    return EquilibriumSolution(mu, w, Q, kind, ctx.q, c_sigma, free)


def radial_cdf(mu: RadialMeasure, t):
    if not 0 < t <= 1:
        raise DomainError(f"cdf argument must lie in (0, 1], got {t}")
    L = t.context.log(t) if hasattr(t, "context") else mpmath.log(t)
    return mu.cdf_log(L)


@dataclass
class VariationalReport:
    ok: bool
    w: object
    tol: float
    rows: list
    violations: list

    def profile(self):
        return [(r["r"], r["U"], r["U+Q"]) for r in self.rows]


def classify_log(sol: EquilibriumSolution, L, rel=1e-12):
    """``(in_support, in_slack)`` for the closed sets supp(mu) and supp(sigma - mu)."""
    mu = sol.measure
    in_support = any(a <= L <= b for a, b in mu.support_log()) or any(s == L for s, _ in mu.atoms)
    c_sigma = sol.c_sigma
    saturated = [(a, b) for a, b, c in mu.segments() if c >= c_sigma * (1 - rel)]
    merged = []
    for a, b in saturated:
        if merged and merged[-1][1] == a:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    # sigma lives on (0, 1], so a saturated interval ending at r = 1 is open only on the left
    in_slack = not any(a < L < b or (b == 0 and L == 0 and a < 0) for a, b in merged)
    return in_support, in_slack


def variational_check(sol: EquilibriumSolution, grid, tol: float = 1e-6) -> VariationalReport:
    """Verify ``U + Q >= w`` on supp(sigma - mu) and ``U + Q <= w`` on supp(mu)."""
    rows = []
    violations = []
    w = sol.w
    for r in grid:
        if not 0 < r <= 1:
            raise DomainError(f"grid radius {r} outside (0, 1]")
        L = r.context.log(r) if hasattr(r, "context") else mpmath.log(r)
        U = sol.measure.potential_log(L)
        Q = sol.field.value_log(L)
        total = U + Q
        in_support, in_slack = classify_log(sol, L)
        row = {"r": r, "U": U, "Q": Q, "U+Q": total, "support": in_support, "slack": in_slack}
        rows.append(row)
        if in_slack and total < w - tol:
            violations.append({"r": r, "kind": "below w off the saturated set", "slack": total - w})
        if in_support and total > w + tol:
            violations.append({"r": r, "kind": "above w on the support", "slack": total - w})
    return VariationalReport(not violations, w, tol, rows, violations)
