"""Command-line front end.

Every command writes either CSV (first line ``# meta: {...}``) or JSON (a
``"meta"`` key) so that runs are self-describing and reproducible.

Exit codes: 0 success, 1 verification failure, 2 usage or domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import sys
from fractions import Fraction

import mpmath

from . import __version__
from . import eqsolver as es
from . import families as fm
from . import potential as pt
from . import verify as vf
from . import zeros as zr
from .errors import QZeroError
from .qnum import PrecisionContext, parse_q, parse_rational

log = logging.getLogger("qzero")

FAMILIES = {k.value: k for k in fm.Kind}
VALUE_OPTS = {"--q", "--a", "--b", "--alpha", "--beta", "--sign-b", "--c", "--eps", "--window"}
_NEG_RATIONAL = re.compile(r"^-\d+(/\d+)?$|^-\d*\.\d+$")


class UsageError(QZeroError):
    pass


def _join_negative(argv):
    """Rewrite ``--alpha -3/4`` as ``--alpha=-3/4`` so argparse accepts it."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_OPTS and i + 1 < len(argv) and _NEG_RATIONAL.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def family_from_args(args) -> fm.FamilySpec | None:
    if args.family is None:
        return None
    kind = FAMILIES[args.family]
    if args.alpha is not None:
        beta = parse_rational(args.beta) if args.beta is not None else Fraction(0)
        params = fm.Scaled(parse_rational(args.alpha), beta, int(args.sign_b))
    else:
        a = parse_rational(args.a) if args.a is not None else Fraction(1, 2)
        b = parse_rational(args.b) if args.b is not None else Fraction(1, 2)
        params = fm.Fixed(a, b if kind is fm.Kind.LITTLE_Q_JACOBI else 0)
    return fm.FamilySpec(kind, params)


def context_from_args(args) -> PrecisionContext:
    return PrecisionContext(parse_q(args.q), args.bits)


def meta(args, command, fam=None, **extra):
    m = {
        "tool": "qzero",
        "version": f"qzero {__version__}",
        "command": command,
        "q": str(parse_q(args.q)),
        "family": fam.label() if fam else None,
        "bits": args.bits,
        "digits": args.digits,
    }
    m.update(extra)
    return m


def fmt(x, digits):
    if isinstance(x, (int, str)) or x is None:
        return x
    if isinstance(x, mpmath.mpf) or hasattr(x, "context"):
        return mpmath.nstr(x, digits, min_fixed=-5, max_fixed=5) if x != 0 else "0"
    return repr(float(x))


def emit(args, meta_obj, columns, rows):
    fmt_rows = [[fmt(v, args.digits) for v in row] for row in rows]
    if args.format == "json":
        body = json.dumps({"meta": meta_obj, "columns": columns, "rows": fmt_rows}, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        buf.write("# meta: " + json.dumps(meta_obj, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        w.writerows(fmt_rows)
        body = buf.getvalue()
    write_out(args, body)


def write_out(args, body):
    if args.out in (None, "-"):
        sys.stdout.write(body)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body)


def _require_family(args):
    fam = family_from_args(args)
    if fam is None:
        raise UsageError("--family is required for this command")
    return fam


def _window_radii(ctx, power, count):
    if count < 2:
        raise UsageError("--grid must be at least 2")
    return vf.log_grid(ctx, parse_rational(power), count)


def _solution(args, ctx):
    fam = family_from_args(args)
    if fam is None:
        return None, pt.equilibrium_no_field(ctx)
    return fam, pt.equilibrium_with_field(fm.external_field(fam, ctx), ctx)


# --- commands --------------------------------------------------------------


def cmd_zeros(args):
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    # p_0 has no zeros whatever the family, so degree 0 needs no --family
    fam = family_from_args(args) if args.n == 0 else _require_family(args)
    ctx = context_from_args(args)
    if fam is None:
        emit(args, meta(args, "zeros", None, n=0, certified_bits=ctx.bits), ["index", "zero", "scaled_zero"], [])
        return 0
    fam.validate(ctx.q)
    zs = zr.compute_zeros(fam, args.n, ctx)
    rows = []
    if args.n:
        for i, (z, s) in enumerate(zip(zs.zeros, zr.scaled_zeros(zs).support), 1):
            rows.append([i, z, s])
    m = meta(args, "zeros", fam, n=args.n, certified_bits=zs.certified_bits, diagnostics=zs.diagnostics)
    emit(args, m, ["index", "zero", "scaled_zero"], rows)
    return 0


def cmd_cloud(args):
    fam = _require_family(args)
    ctx = context_from_args(args)
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    zs = zr.compute_zeros(fam, args.n, ctx)
    pts = zr.zero_cloud(zs)
    rows = [[float(z.real), float(z.imag)] for z in pts]
    emit(args, meta(args, "cloud", fam, n=args.n, points=len(rows), certified_bits=zs.certified_bits), ["re", "im"], rows)
    return 0


def cmd_density(args):
    ctx = context_from_args(args)
    fam, sol = _solution(args, ctx)
    c_sigma = -1 / ctx.log_q
    rows = []
    for r in _window_radii(ctx, args.window, args.grid):
        L = ctx.mp.log(r)
        rows.append([r, sol.measure.density_log(L) / r, c_sigma / r])
    m = meta(args, "density", fam, support_kind=sol.support_kind, w=fmt(sol.w, args.digits), window=f"q^{args.window}")
    emit(args, m, ["r", "density", "constraint"], rows)
    return 0


def cmd_potential_profile(args):
    ctx = context_from_args(args)
    fam, sol = _solution(args, ctx)
    rows = []
    for r in _window_radii(ctx, args.window, args.grid):
        L = ctx.mp.log(r)
        U = sol.measure.potential_log(L)
        rows.append([r, U, U + sol.field.value_log(L), sol.w])
    m = meta(args, "potential-profile", fam, support_kind=sol.support_kind, window=f"q^{args.window}")
    emit(args, m, ["r", "U", "U+Q", "w"], rows)
    return 0


def cmd_solve(args):
    ctx = context_from_args(args)
    fam, sol = _solution(args, ctx)
    grid = es.RadialGrid.log_uniform(ctx.q, float(ctx.qpow(parse_rational(args.window))), args.grid)
    res = es.solve(sol.field, grid)
    l1, gap = es.compare_to_closed_form(res, sol)
    rows = []
    for r, x, c, reg in zip(grid.nodes, res.measure.masses, grid.caps, res.regions):
        rows.append([float(r), float(x), float(x / c * grid.c_sigma / r), float(grid.c_sigma / r), int(reg)])
    m = meta(
        args,
        "solve",
        fam,
        m=grid.m,
        window=f"q^{args.window}",
        w_estimate=res.w,
        w_closed_form=float(sol.w),
        l1_error=l1,
        w_gap=gap,
        kkt_residual=res.residual,
        iterations=res.iterations,
    )
    emit(args, m, ["r", "mass", "density", "constraint", "region"], rows)
    return 0


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items() if k != "seconds"}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def cmd_verify(args):
    fam = family_from_args(args)
    kw = {}
    ctx = context_from_args(args) if (fam is not None or args.q_given) else None
    suite = args.suite
    if suite == "lemmas":
        kw["lemma"] = args.lemma
        if args.lemma in ("6.2", "pochhammer"):
            if args.c is not None:
                kw["cs"] = tuple(parse_rational(c) for c in args.c)
            if args.n is not None:
                kw["n"] = args.n
    elif suite == "gamma" and fam is not None and fam.kind is fm.Kind.Q_BESSEL:
        kw.update(ns=(8, 16, 32, 64, 128), require_monotone=False)
    report = vf.run_suite(suite, fam, ctx, **kw)
    if not args.timing:
        report = _strip_timing(report)
    m = meta(args, "verify", fam, suite=suite)
    body = json.dumps({"meta": m, "report": report, "pass": report["pass"]}, indent=2, sort_keys=True, default=str)
    write_out(args, body + "\n")
    return 0 if report["pass"] else 1


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", choices=sorted(FAMILIES))
    common.add_argument("--q", default=None, help='base as a rational, e.g. "1/4" (default 1/4)')
    common.add_argument("--a", help="fixed parameter a")
    common.add_argument("--b", help="fixed parameter b (little q-Jacobi)")
    common.add_argument("--alpha", help="exponent: a = q^(2 n alpha)")
    common.add_argument("--beta", help="exponent: b = sign_b q^(2 n beta)")
    common.add_argument("--sign-b", type=int, default=1, choices=(1, -1))
    common.add_argument("--n", type=int)
    common.add_argument("--bits", type=int, default=256)
    common.add_argument("--digits", type=int, default=30, help="significant digits in output")
    common.add_argument("--grid", type=int, default=400)
    common.add_argument("--window", default="6", help="sample radii in [q^window, 1]")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qzero", description="Orthogonal polynomials on the q-lattice and their zero asymptotics.")
    p.add_argument("--version", action="version", version=f"qzero {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("zeros", parents=[common], help="zeros and scaled zeros of p_n").set_defaults(func=cmd_zeros)
    sub.add_parser("cloud", parents=[common], help="the n^2 zeros of p_n(x^n)").set_defaults(func=cmd_cloud)
    sub.add_parser("density", parents=[common], help="equilibrium density and constraint").set_defaults(func=cmd_density)
    sub.add_parser("potential-profile", parents=[common], help="U and U + Q on a radial grid").set_defaults(
        func=cmd_potential_profile
    )
    sub.add_parser("solve", parents=[common], help="numerical equilibrium on a radial grid").set_defaults(func=cmd_solve)
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=vf.SUITES, required=True)
    v.add_argument("--lemma", default="6.2", choices=sorted(vf.LEMMAS))
    v.add_argument("--c", action="append", help="exponent c in (-q^(n c); q)_inf; repeatable")
    v.add_argument("--timing", action="store_true", help="include wall-clock seconds")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    argv = _join_negative(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args.q_given = args.q is not None
    if args.q is None:
        args.q = "1/4"
    if args.n is None and args.command in ("zeros", "cloud"):
        args.n = 1
    try:
        return args.func(args)
    except QZeroError as exc:
        print(f"qzero: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
