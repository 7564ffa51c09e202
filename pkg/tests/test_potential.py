import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import integrate

from qzero import families as fm
from qzero import potential as pt
from qzero.errors import DomainError, UnsupportedRegime
from qzero.qnum import PrecisionContext

Q34 = PrecisionContext(Fraction(3, 4), 128)


def bessel(alpha, ctx=Q34):
    return fm.external_field(fm.FamilySpec(fm.Kind.Q_BESSEL, fm.Scaled(alpha)), ctx)


def solution(alpha, ctx=Q34):
    return pt.equilibrium_with_field(bessel(alpha, ctx), ctx)


def _quad_potential(mu, r):
    """``-int log max(r, s) dmu(s)`` by adaptive quadrature in s."""
    total = 0.0
    for a, b, c in mu.segments():
        if c == 0:
            continue
        lo, hi = math.exp(float(a)), math.exp(float(b))
        cut = [r] if lo < r < hi else None
        val, _ = integrate.quad(lambda s: -math.log(max(r, s)) * float(c) / s, lo, hi, points=cut, epsabs=1e-13, epsrel=1e-13)
        total += val
    for s, m in mu.atoms:
        total += -float(m) * math.log(max(r, math.exp(float(s))))
    return total


@pytest.mark.parametrize("alpha", [Fraction(-2), Fraction(-3, 4), Fraction(1)])
def test_potential_matches_quadrature(alpha):
    sol = solution(alpha)
    for r in np.geomspace(0.05, 1.0, 50):
        exact = pt.potential(sol.measure, Q34.mpf(float(r)))
        assert abs(float(exact) - _quad_potential(sol.measure, float(r))) <= 1e-8


def test_potential_with_atoms():
    mu = pt.RadialMeasure((), ((mpmath.log(0.5), 0.25), (mpmath.mpf(0), 0.75)))
    assert mu.mass == 1
    for r in (0.1, 0.5, 0.7, 1.0):
        assert abs(float(pt.potential(mu, r)) - _quad_potential(mu, r)) < 1e-12


@pytest.mark.parametrize("r", list(np.linspace(0.05, 1.5, 12)))
def test_kernel_is_circle_average_of_log(r):
    s = 0.6
    val, _ = integrate.quad(lambda t: -math.log(abs(r - s * np.exp(1j * t))), 0, 2 * math.pi, limit=200, points=[0.0])
    assert abs(val / (2 * math.pi) - pt.kernel(r, s)) <= 1e-6


def test_kernel_domain():
    with pytest.raises(DomainError):
        pt.kernel(0, 1)


def test_sigma_masses():
    ctx = PrecisionContext(Fraction(1, 4), 128)
    assert abs(pt.sigma_mass(ctx, Fraction(1, 4)) - 1) < 1e-35
    assert abs(pt.sigma_mass(ctx, Fraction(1, 16), Fraction(1, 4)) - 1) < 1e-35
    assert abs(pt.sigma_mass(ctx, Fraction(1, 2)) - Fraction(1, 2)) < 1e-35
    assert abs(pt.sigma_density(ctx) - 1 / ctx.mp.log(4)) < 1e-35
    with pytest.raises(DomainError):
        pt.sigma_mass(ctx, Fraction(1, 2), Fraction(1, 4))


def test_no_field_is_saturated_sigma():
    ctx = PrecisionContext(Fraction(1, 4), 128)
    sol = pt.equilibrium_no_field(ctx)
    assert sol.support_kind == "full-constraint"
    (piece,) = sol.measure.pieces
    assert abs(piece.A - Fraction(1, 4)) < 1e-35 and piece.B == 1
    assert abs(sol.w - ctx.mp.log(4) / 2) < 1e-35
    assert abs(sol.measure.potential_log(ctx.log_q) - sol.w) < 1e-35
    assert pt.variational_check(sol, np.geomspace(0.01, 1, 200)).ok


def test_field_slope_landmarks():
    for alpha in (Fraction(-2), Fraction(-3, 2), Fraction(-1)):
        Q = bessel(alpha)
        assert abs(pt.field_slope(Q, Q34.qpow(-2 * alpha))) < 1e-30
        assert abs(pt.field_slope(Q, Q34.qpow(-2 * (1 + alpha))) - 1) < 1e-30
    with pytest.raises(DomainError):
        pt.field_eval(bessel(Fraction(-2)), Q34.mpf(2))


def test_radial_cdf_examples():
    sol = solution(Fraction(-2))
    q = Q34.qf
    assert pt.radial_cdf(sol.measure, q**4 / 2) == 0
    assert abs(pt.radial_cdf(sol.measure, q**3) - Fraction(1, 2)) < 1e-30
    assert abs(pt.radial_cdf(sol.measure, 1) - 1) < 1e-30
    with pytest.raises(DomainError):
        pt.radial_cdf(sol.measure, 0)


@pytest.mark.parametrize("alpha", [Fraction(-3), Fraction(-2), Fraction(-1), Fraction(-3, 4), Fraction(-1, 2), 0, 1])
def test_total_mass_is_one(alpha):
    assert abs(solution(alpha).measure.mass - 1) <= 1e-30


def test_mu_below_sigma_everywhere():
    for alpha in (Fraction(-2), Fraction(-3, 4), Fraction(-1, 10)):
        sol = solution(alpha)
        for a, b, c in sol.measure.segments():
            assert c <= sol.c_sigma * (1 + 1e-25)


@pytest.mark.parametrize("boundary", [Fraction(-1, 2), Fraction(-1)])
def test_regimes_join_continuously(boundary):
    Ls = [Q34.log_q * Fraction(j, 50) for j in range(51)]
    prev = None
    for d in (Fraction(1, 100), Fraction(1, 10000)):
        a, b = solution(boundary - d), solution(boundary + d)
        gap = max(abs(a.measure.cdf_log(L) - b.measure.cdf_log(L)) for L in Ls) + abs(a.w - b.w)
        if prev is not None:
            assert gap < prev / 50
        prev = gap


def test_expected_kinds():
    assert solution(Fraction(-2)).support_kind == "band"
    assert solution(Fraction(-3, 4)).support_kind == "band-plus-sweep"
    assert solution(Fraction(-1, 4)).support_kind == "full-constraint"
    assert solution(Fraction(1)).support_kind == "decreasing-Q"


def test_bessel_band_closed_form():
    sol = solution(Fraction(-2))
    q = Q34.qf
    ((lo, hi),) = sol.measure.support_log()
    assert abs(mpmath.exp(lo) - q**4) < 1e-30 and abs(mpmath.exp(hi) - q**2) < 1e-30
    assert abs(sol.w - Q34.mp.log(q)) < 1e-30


def test_jacobi_and_bessel_share_the_measure():
    ctx = PrecisionContext(Fraction(1, 4), 128)
    jac = fm.external_field(fm.FamilySpec(fm.Kind.LITTLE_Q_JACOBI, fm.Scaled(Fraction(1, 4), -1, -1)), ctx)
    sj = pt.equilibrium_with_field(jac, ctx)
    sb = solution(Fraction(-3, 4), ctx)
    for (a1, b1, c1), (a2, b2, c2) in zip(sj.measure.segments(), sb.measure.segments()):
        assert abs(a1 - a2) < 1e-30 and abs(b1 - b2) < 1e-30 and abs(c1 - c2) < 1e-30
    assert len(sj.measure.segments()) == len(sb.measure.segments())
    assert abs((sj.w - sb.w) + ctx.log_q) < 1e-30


def test_variational_inequalities_hold():
    radii = [Q34.qpow(Fraction(j, 100)) for j in range(0, 801)]
    for alpha in (Fraction(-2), Fraction(-3, 4), Fraction(-1, 4), Fraction(1)):
        rep = pt.variational_check(solution(alpha), radii)
        assert rep.ok, rep.violations[:3]


def test_variational_check_detects_wrong_measure():
    good = solution(Fraction(-2))
    moved = pt.RadialMeasure(tuple(pt.Piece(p.c, p.lo - Q34.log_q / 2, p.hi - Q34.log_q / 2) for p in good.measure.pieces))
    bad = pt.EquilibriumSolution(moved, good.w, good.field, "band", good.q, good.c_sigma, None)
    rep = pt.variational_check(bad, [Q34.qpow(Fraction(j, 40)) for j in range(0, 321)])
    assert not rep.ok and rep.violations


def _field(u, v, ctx=Q34):
    return fm.log_quadratic_field(u, v, ctx)


def test_unsupported_fields_rejected():
    c_sigma = pt.sigma_density(Q34)
    with pytest.raises(UnsupportedRegime):
        pt.equilibrium_with_field(_field(-1, 0), Q34)
    with pytest.raises(UnsupportedRegime):
        pt.equilibrium_with_field(_field(c_sigma, -1), Q34)
    with pytest.raises(UnsupportedRegime):
        pt.equilibrium_with_field(_field(0, 1), Q34)
    z = Q34.mpf(0)
    jump = fm.FieldSpec(
        (
            fm.FieldPiece(Q34.mp.ninf, Q34.log_q, z, z, z),
            fm.FieldPiece(Q34.log_q, z, z, z, Q34.mpf(1)),
        )
    )
    with pytest.raises(UnsupportedRegime):
        pt.equilibrium_with_field(jump, Q34)


def test_measure_validation():
    with pytest.raises(DomainError):
        pt.RadialMeasure((pt.Piece(1, -1, 0.5),))
    with pytest.raises(DomainError):
        pt.RadialMeasure((pt.Piece(-1, -1, 0),))
    with pytest.raises(DomainError):
        pt.RadialMeasure((), ((0.1, 1),))
