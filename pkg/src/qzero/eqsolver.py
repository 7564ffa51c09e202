"""Numerical constrained equilibrium on radial grids.

Minimizes ``I_Q(mu) = iint -log max(r, s) dmu dmu + 2 int Q dmu`` over
circular-symmetric measures of unit mass whose radial part stays below the
constraint ``sigma``.  Each grid cell carries a log-uniform density, so the
kernel averages between distinct cells are exact at the cell log-midpoints
and the cell self-energy has a closed form.  The problem becomes a convex
quadratic program over a box intersected with the simplex.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError
from .families import FieldSpec
from .qnum import parse_q

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RadialGrid:
    """Cells ``[exp(edges[i]), exp(edges[i+1])]`` with nodes at log-midpoints."""

    q: object
    edges: np.ndarray
    nodes_log: np.ndarray = field(default=None)

    def __post_init__(self):
        q = parse_q(self.q)
        object.__setattr__(self, "q", q)
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or len(edges) < 2:
            raise DomainError("a grid needs at least one cell")
        if not np.all(np.diff(edges) > 0):
            raise DomainError("cell edges must be strictly increasing")
        if edges[-1] > 1e-15:
            raise DomainError("cells must lie in (0, 1]")
        object.__setattr__(self, "edges", edges)
        if self.nodes_log is None:
            nodes = 0.5 * (edges[:-1] + edges[1:])
        else:
            nodes = np.asarray(self.nodes_log, dtype=float)
            if nodes.shape != (len(edges) - 1,):
                raise DomainError("one node per cell required")
            if np.any(nodes < edges[:-1]) or np.any(nodes > edges[1:]):
                raise DomainError("each node must lie in its cell")
        object.__setattr__(self, "nodes_log", nodes)

    @classmethod
    def log_uniform(cls, q, r_min, m: int) -> "RadialGrid":
        if m < 1:
            raise DomainError("m must be positive")
        r_min = float(r_min)
        if not 0 < r_min < 1:
            raise DomainError("r_min must lie in (0, 1)")
        return cls(q, np.linspace(math.log(r_min), 0.0, m + 1))

    @property
    def m(self) -> int:
        return len(self.nodes_log)

    @property
    def nodes(self):
        return np.exp(self.nodes_log)

    @property
    def widths(self):
        return np.diff(self.edges)

    @property
    def c_sigma(self) -> float:
        return -1.0 / math.log(self.q)

    @property
    def caps(self):
        return self.c_sigma * self.widths

    def self_energy(self):
        """``E[-max(L, L')]`` for two independent log-uniform points in each cell."""
        return -(self.edges[:-1] + 2.0 * self.widths / 3.0)

    def kernel_matrix(self):
        L = self.nodes_log
        K = -np.maximum.outer(L, L)
        np.fill_diagonal(K, self.self_energy())
        return K

    def field_averages(self, Q: FieldSpec):
        """Cell averages of ``Q`` in the log variable, exact for log-quadratic pieces."""
        out = np.zeros(self.m)
        lo_all, hi_all = self.edges[:-1], self.edges[1:]
        for p in Q.pieces:
            plo, phi = float(p.log_lo), float(p.log_hi)
            u, v, k = float(p.u), float(p.v), float(p.k)
            a = np.maximum(lo_all, plo)
            b = np.minimum(hi_all, phi)
            mask = b > a
            if not np.any(mask):
                continue
            a, b = a[mask], b[mask]
            integral = u * (b**3 - a**3) / 3 + v * (b**2 - a**2) / 2 + k * (b - a)
            out[mask] += integral
        return out / self.widths

    def potential(self, masses):
        """Cell-averaged potential of the grid measure, in O(m)."""
        x = np.asarray(masses, dtype=float)
        L = self.nodes_log
        order = np.argsort(L, kind="stable")
        xs, Ls = x[order], L[order]
        below = np.cumsum(xs) - xs  # mass strictly inside
        above = np.cumsum((xs * Ls)[::-1])[::-1] - xs * Ls
        u_sorted = -(Ls * below + above)
        out = np.empty_like(x)
        out[order] = u_sorted
        return out + self.self_energy() * x


@dataclass
class DiscreteMeasure:
    masses: np.ndarray
    grid: RadialGrid

    @property
    def total(self) -> float:
        return float(np.sum(self.masses))

    def density(self):
        """Coefficient ``c_i`` of the cell density ``c_i / r``."""
        return self.masses / self.grid.widths


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 50_000
    kkt_tol: float = 1e-7
    mass_tol: float = 1e-12
    backtrack: float = 0.5
    grow: float = 1.25
    polish: bool = True

    def __post_init__(self):
        if self.max_iter <= 0 or self.kkt_tol <= 0 or self.mass_tol <= 0:
            raise DomainError("solver settings must be positive")
        if not 0 < self.backtrack < 1 or self.grow < 1:
            raise DomainError("need 0 < backtrack < 1 and grow >= 1")


@dataclass
class SolveResult:
    measure: DiscreteMeasure
    w: float
    residual: float
    iterations: int
    history: list
    regions: np.ndarray  # -1 zero, 0 free, +1 saturated

    def __iter__(self):
        # allows ``measure, w = solve(...)``
        yield self.measure
        yield self.w


def energy(m, Q: FieldSpec, grid: RadialGrid, _qavg=None) -> float:
    x = m.masses if isinstance(m, DiscreteMeasure) else np.asarray(m, dtype=float)
    qavg = grid.field_averages(Q) if _qavg is None else _qavg
    return float(x @ grid.potential(x) + 2.0 * x @ qavg)


def project(y, caps, total: float = 1.0, tol: float = 1e-15):
    """Euclidean projection onto ``{0 <= x <= caps, sum x = total}``.

    Bounded water-filling: ``x = clip(y - tau, 0, caps)`` with ``tau`` found
    by bisection on the monotone mass function.
    """
    y = np.asarray(y, dtype=float)
    caps = np.asarray(caps, dtype=float)
    if caps.sum() < total * (1 - 1e-14):
        raise DomainError(f"infeasible: total cap {caps.sum():.6g} < {total}")
    lo = float(np.min(y - caps)) - 1.0
    hi = float(np.max(y)) + 1.0
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        s = np.clip(y - tau, 0, caps).sum()
        if s > total:
            lo = tau
        else:
            hi = tau
        if hi - lo <= tol * max(1.0, abs(tau)):
            break
    x = np.clip(y - 0.5 * (lo + hi), 0, caps)
    # spread the rounding defect over the free coordinates
    defect = total - x.sum()
    free = (x > 0) & (x < caps)
    if free.any() and defect != 0:
        x[free] += defect / free.sum()
        x = np.clip(x, 0, caps)
    return x


def classify(x, caps, tol: float = 0.0):
    regions = np.zeros(len(x), dtype=int)
    regions[x <= tol] = -1
    regions[x >= caps - tol] = 1
    return regions


def kkt_residual(g, regions) -> float:
    """Smallest ``t`` admitting a ``w`` with the three-region inequalities up to ``t``."""
    upper = g[regions >= 0]  # must be <= w + t
    lower = g[regions <= 0]  # must be >= w - t
    if len(upper) == 0 or len(lower) == 0:
        return 0.0
    return max(0.0, (float(upper.max()) - float(lower.min())) / 2)


def w_estimate(g, regions) -> float:
    free = regions == 0
    if free.any():
        return float(np.median(g[free]))
    # saturated nodes next to empty ones: equality holds at the support edge
    edge = []
    for i, r in enumerate(regions):
        if r == 1 and ((i > 0 and regions[i - 1] == -1) or (i + 1 < len(regions) and regions[i + 1] == -1)):
            edge.append(g[i])
    if edge:
        return float(np.median(edge))
    return float(np.median(g))


def _polish(grid, qavg, x, caps, K):
    """Solve the equality-constrained QP on the current free set exactly."""
    regions = classify(x, caps)
    free = np.flatnonzero(regions == 0)
    if len(free) == 0:
        return None
    sat = regions == 1
    rest = 1.0 - caps[sat].sum()
    Kff = K[np.ix_(free, free)]
    rhs = -(K[np.ix_(free, np.flatnonzero(sat))] @ caps[sat] + qavg[free])
    n = len(free)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = Kff
    A[:n, n] = -1.0
    A[n, :n] = 1.0
    b = np.append(rhs, rest)
    try:
        sol = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return None
    xf = sol[:n]
    if np.any(xf < 0) or np.any(xf > caps[free]):
        return None
    y = x.copy()
    y[free] = xf
    return y


def solve(Q: FieldSpec, grid: RadialGrid, cfg: SolverConfig | None = None, x0=None) -> SolveResult:
    """Accelerated projected gradient with backtracking and monotone restarts.

    Returns a :class:`SolveResult`; it unpacks as ``(measure, w_estimate)``.
    """
    cfg = cfg or SolverConfig()
    caps = grid.caps
    if caps.sum() < 1 - cfg.mass_tol:
        raise DomainError(f"infeasible grid: total sigma-mass {caps.sum():.6g} < 1")
    qavg = grid.field_averages(Q)

    def f(x):
        return float(x @ grid.potential(x) + 2.0 * x @ qavg)

    def grad(x):
        return 2.0 * (grid.potential(x) + qavg)

    if x0 is None:
        x = project(caps / caps.sum(), caps)
    else:
        x = project(np.asarray(x0, dtype=float), caps)
    K = grid.kernel_matrix() if cfg.polish and grid.m <= 4000 else None
    step = 1.0 / (2.0 * max(1e-12, float(np.abs(grid.self_energy()).max() + abs(grid.edges[0]) * 1.0)))
    y, t = x.copy(), 1.0
    fx = f(x)
    history = [fx]
    residual = math.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if it % 25 == 1:
            g = 0.5 * grad(x)
            residual = kkt_residual(g, classify(x, caps))
            if residual <= cfg.kkt_tol:
                break
            if K is not None and residual < 1e-2:
                z = _polish(grid, qavg, x, caps, K)
                if z is not None:
                    fz = f(z)
                    rz = kkt_residual(0.5 * grad(z), classify(z, caps))
                    if fz <= fx + 1e-14 * abs(fx) and rz < residual:
                        x, fx, y, t = z, fz, z.copy(), 1.0
                        history.append(fx)
                        if rz <= cfg.kkt_tol:
                            break
        gy = grad(y)
        fy = f(y)
        while True:
            x_new = project(y - step * gy, caps)
            d = x_new - y
            f_new = f(x_new)
            if f_new <= fy + gy @ d + (d @ d) / (2 * step) + 1e-15 * abs(fy):
                break
            step *= cfg.backtrack
        if f_new > fx:
            # monotone restart: drop momentum and retry from x
            y, t = x.copy(), 1.0
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, fx, t = x_new, f_new, t_new
        history.append(fx)
        step *= cfg.grow
    g = 0.5 * grad(x)
    regions = classify(x, caps)
    residual = kkt_residual(g, regions)
    if residual > cfg.kkt_tol:
        raise ConvergenceError(f"KKT residual {residual:.3e} above {cfg.kkt_tol:.1e} after {it} iterations")
    if abs(x.sum() - 1) > cfg.mass_tol:
        raise ConvergenceError(f"mass defect {abs(x.sum() - 1):.3e}")
    log.debug("solve: m=%d iterations=%d residual=%.2e", grid.m, it, residual)
    return SolveResult(DiscreteMeasure(x, grid), w_estimate(g, regions), residual, it, history, regions)


def discretize(target, grid: RadialGrid):
    """Cell masses of a closed-form radial measure."""
    edges = grid.edges
    cdf = np.array([float(target.cdf_log(e)) for e in edges])
    masses = np.diff(cdf)
    # atoms at the left edge of the grid belong to the first cell
    masses[0] += cdf[0]
    return masses


def compare_to_closed_form(m, target, grid: RadialGrid | None = None, w=None, target_w=None):
    """``(l1_error, w_gap)`` between grid masses and a closed-form radial measure.

    ``target`` is a :class:`potential.RadialMeasure` or an
    :class:`potential.EquilibriumSolution`; ``w`` may be a
    :class:`SolveResult` estimate.
    """
    if isinstance(m, SolveResult):
        if w is None:
            w = m.w
        m = m.measure
    grid = grid or m.grid
    measure = getattr(target, "measure", target)
    if target_w is None:
        target_w = getattr(target, "w", None)
    ref = discretize(measure, grid)
    l1 = float(np.abs(m.masses - ref).sum() + abs(float(measure.mass) - ref.sum()))
    gap = None if w is None or target_w is None else abs(float(w) - float(target_w))
    return l1, gap
