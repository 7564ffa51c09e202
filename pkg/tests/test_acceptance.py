"""End-to-end acceptance criteria, each at its stated tolerance and time budget."""

import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import integrate

from qzero import cli
from qzero import families as fm
from qzero import potential as pt
from qzero import verify as vf
from qzero import zeros as zr
from qzero.qnum import PrecisionContext


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.t0


def _fmt(xs):
    return ", ".join(f"{x:.3g}" for x in xs)


def test_gamma_limit_no_field(acceptance):
    with Timer() as t:
        rep = vf.gamma_suite(fm.laguerre(Fraction(1, 2)), PrecisionContext(Fraction(1, 4), 256), ns=(8, 16, 32), tol=0.03)
    errs = [r["error"] for r in rep["rows"]]
    # target 2 = q^(-1/2)
    target_ok = abs(rep["target"] - 2) < 1e-15
    ok = rep["pass"] and rep["checks"]["strictly_decreasing"] and target_ok and t.seconds <= 5
    acceptance(1, "gamma limit, little q-Laguerre q=1/4 a=1/2", ok, f"e_n = {_fmt(errs)}; {t.seconds:.2f}s")
    assert ok


def test_gamma_limit_with_field(acceptance):
    fam = fm.FamilySpec(fm.Kind.LITTLE_Q_LAGUERRE, fm.Scaled(1))
    ctx = PrecisionContext(Fraction(1, 4), 256)
    with Timer() as t:
        rep = vf.gamma_suite(fam, ctx, ns=(8, 16, 32), tol=0.03)
    errs = [r["error"] for r in rep["rows"]]
    # -(1/2 + alpha) log q with alpha = 1
    target_ok = abs(rep["target_log"] - 1.5 * math.log(4)) < 1e-12
    ok = rep["pass"] and rep["checks"]["strictly_decreasing"] and target_ok and t.seconds <= 5
    acceptance(2, "gamma limit with field, a = q^(2n), q=1/4", ok, f"e_n = {_fmt(errs)}; {t.seconds:.2f}s")
    assert ok


def test_gamma_limit_q_bessel(acceptance):
    ctx = PrecisionContext(Fraction(3, 4), 256)
    details = []
    ok = True
    with Timer() as t:
        for alpha in (Fraction(1), Fraction(-3, 4), Fraction(-2)):
            fam = fm.FamilySpec(fm.Kind.Q_BESSEL, fm.Scaled(alpha))
            rep = vf.gamma_suite(fam, ctx, ns=(8, 16, 32, 64, 128), require_monotone=False)
            ok &= rep["pass"] and rep["stated_matches_closed_form"]
            msg = f"alpha={alpha}: e_128={rep['rows'][-1]['error']:.2g}"
            if "sign_check" in rep:
                msg += f", measured sign {rep['sign_check']['closer_to']}"
                ok &= rep["sign_check"]["closer_to"] == "stated"
            details.append(msg)
    ok = bool(ok) and t.seconds <= 10
    acceptance(3, "gamma limit, q-Bessel q=3/4, three regimes", ok, "; ".join(details) + f"; {t.seconds:.2f}s")
    assert ok


def test_ks_convergence(acceptance):
    with Timer() as t:
        rep = vf.ks_suite(fm.laguerre(Fraction(1, 2)), PrecisionContext(Fraction(1, 4), 256), ns=(10, 20, 40), tol=0.12)
    ks = [r["ks"] for r in rep["rows"]]
    ok = rep["pass"] and ks[-1] < ks[0] and ks[-1] <= 0.12 and t.seconds <= 60
    acceptance(4, "KS distance of scaled zeros, q=1/4 a=1/2", ok, f"KS = {_fmt(ks)}; {t.seconds:.2f}s")
    assert ok


def _quad_potential(mu, r):
    total = 0.0
    for a, b, c in mu.segments():
        if c == 0:
            continue
        lo, hi = math.exp(float(a)), math.exp(float(b))
        cut = [r] if lo < r < hi else None
        val, _ = integrate.quad(lambda s: -math.log(max(r, s)) * float(c) / s, lo, hi, points=cut, epsabs=1e-13, epsrel=1e-13)
        total += val
    return total


def test_potential_closed_forms(acceptance):
    with Timer() as t:
        q34 = PrecisionContext(Fraction(3, 4), 128)
        measures = [pt.equilibrium_no_field(PrecisionContext(Fraction(1, 4), 128)).measure]
        for alpha in (Fraction(-2), Fraction(-3, 4)):
            Q = fm.external_field(fm.FamilySpec(fm.Kind.Q_BESSEL, fm.Scaled(alpha)), q34)
            measures.append(pt.equilibrium_with_field(Q, q34).measure)
        worst = 0.0
        for mu in measures:
            for r in np.geomspace(0.02, 1.0, 50):
                worst = max(worst, abs(float(pt.potential(mu, mpmath.mpf(r))) - _quad_potential(mu, float(r))))
        kernel_worst = 0.0
        for r in (0.1, 0.3, 0.59, 0.61, 0.9, 1.3):
            for s in (0.25, 0.6, 1.0):
                val, _ = integrate.quad(lambda th: -math.log(abs(r - s * np.exp(1j * th))), 0, 2 * math.pi, limit=400)
                kernel_worst = max(kernel_worst, abs(val / (2 * math.pi) - pt.kernel(r, s)))
    ok = worst <= 1e-8 and kernel_worst <= 1e-6 and t.seconds <= 5
    acceptance(5, "potential closed forms vs quadrature", ok, f"max |diff| {worst:.1e}, kernel {kernel_worst:.1e}; {t.seconds:.2f}s")
    assert ok


def test_variational_inequalities(acceptance):
    with Timer() as t:
        rep = vf.variational_suite(nodes=1000, tol=1e-6)
    bad = [r["case"] for r in rep["rows"] if not r["ok"]]
    ok = rep["pass"] and t.seconds <= 5
    acceptance(6, "variational inequalities and profile shapes", ok, f"{len(rep['rows'])} cases, failing: {bad or 'none'}; {t.seconds:.2f}s")
    assert ok


def test_solver_against_closed_forms(acceptance):
    with Timer() as t:
        rep = vf.solver_suite(m=400, fine=800, l1_tol=0.05, w_tol=0.02)
    worst_l1 = max(r["l1"] for r in rep["rows"])
    worst_w = max(r["w_gap"] for r in rep["rows"])
    ok = rep["pass"] and t.seconds <= 120
    acceptance(7, "grid solver vs closed forms", ok, f"max L1 {worst_l1:.3g}, max w gap {worst_w:.2g}; {t.seconds:.1f}s")
    assert ok


def test_pochhammer_growth(acceptance):
    with Timer() as t:
        rep = vf.pochhammer_suite(PrecisionContext(Fraction(1, 2), 256), cs=(1, 0, -1, -2), n=200, tol=0.02)
    errs = [r["error"] for r in rep["rows"]]
    ok = rep["pass"] and t.seconds <= 5
    acceptance(8, "q-Pochhammer growth at n=200, q=1/2", ok, f"errors {_fmt(errs)}; {t.seconds:.2f}s")
    assert ok


def test_norm_ratios(acceptance):
    with Timer() as t:
        rep = vf.norm_ratio_suite(ns=(8, 16, 24), eps=Fraction(1, 10), tol=0.1)
    devs = "; ".join(f"{r['case']}: {_fmt(r['deviation'])}" for r in rep["rows"])
    ok = rep["pass"] and t.seconds <= 60
    acceptance(9, "weighted/unweighted norm ratios", ok, f"{devs}; {t.seconds:.1f}s")
    assert ok


def _cloud_rows(capsys):
    argv = ["cloud", "--family", "little-q-jacobi", "--q", "1/4", "--a", "1/2", "--b", "1/2", "--n", "20"]
    assert cli.main(argv) == 0
    out = capsys.readouterr().out.splitlines()
    return np.array([[float(v) for v in line.split(",")] for line in out[2:]])


def test_structural_invariants(acceptance, capsys):
    ctx = PrecisionContext(Fraction(1, 4), 256)
    fams = [fm.laguerre(Fraction(1, 2)), fm.bessel(1), fm.jacobi(Fraction(1, 2), Fraction(1, 2))]
    problems = []
    worst_oracle = mpmath.mpf(0)
    with Timer() as t:
        for fam in fams:
            for n in range(1, 31):
                zs = zr.compute_zeros(fam, n, ctx)
                problems += [f"{fam.label()} n={n}: {p}" for p in zr.check_zero_set(zs, ctx)]
            for n in range(1, 13):
                zs = zr.compute_zeros(fam, n, ctx, rel_tol=Fraction(1, 10**40))
                orc = sorted(zr.jacobi_oracle(fam, n, ctx))
                for a, b in zip(zs.zeros, orc):
                    worst_oracle = max(worst_oracle, abs(a - b) / b)
        pts = _cloud_rows(capsys)
        z = pts[:, 0] + 1j * pts[:, 1]
        # 20 rings of 20 points; each ring is a radius times the 20th roots of unity
        rings = z.reshape(20, 20)
        roots = zr.unit_roots(20)
        sym = max(float(np.max(np.abs(ring - abs(ring[0]) * roots))) for ring in rings)
    ok = not problems and worst_oracle <= 1e-20 and len(pts) == 400 and sym <= 1e-15 and t.seconds <= 120
    detail = f"{len(problems)} invariant failures, oracle rel diff {float(worst_oracle):.1e}, cloud rows {len(pts)}, symmetry {sym:.0e}; {t.seconds:.1f}s"
    acceptance(10, "zero-set invariants, oracle agreement, zero cloud", ok, detail)
    assert ok, problems[:5]
