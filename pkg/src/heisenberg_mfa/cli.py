"""Command-line interface.

Exit codes: 0 success, 1 analytic failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import carnot, lattice, synthesis, taylor, verify
from .analysis import coefficient_counting, counting_spectrum, pointwise_exponent, uniform_precondition
from .synthesis import BesovParams

THREADS_ENV = "HEISENBERG_MFA_THREADS"
SPECTRUM_TOL = 0.15


class UsageError(Exception):
    """Configuration problem detected before any computation (exit 2)."""


def fmt(v) -> str:
    """17 significant digits, '.' decimal point, inf/nan spelled out."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_csv(out, header, rows, meta=()) -> None:
    for m in meta:
        out.write(f"# {m}\n")
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join(c if isinstance(c, str) else fmt(c) for c in r) + "\n")


def _open_out(path):
    if path in (None, "-"):
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


def _threads(value) -> int:
    if value is None:
        value = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(value)
    except ValueError:
        raise UsageError(f"thread count must be an integer, got {value!r}") from None
    if n < 1:
        raise UsageError("thread count must be >= 1")
    return n


def _load(path):
    try:
        return synthesis.load_field(path)
    except FileNotFoundError:
        raise UsageError(f"field file not found: {path}") from None
    except ValueError as e:
        raise UsageError(f"cannot read field file {path}: {e}") from None


def _params(args, fallback: BesovParams | None) -> BesovParams:
    s = args.s if args.s is not None else (fallback.s if fallback else None)
    p = args.p if args.p is not None else (fallback.p if fallback else None)
    q = args.q if args.q is not None else (fallback.q if fallback else None)
    if s is not None and p is not None and p > 0 and s < 4 / p:
        raise UsageError(f"need s >= Q/p = {4 / p:g}, got s = {s:g}")
    if s is None or p is None or q is None:
        raise UsageError("parameters s, p, q are required (field file has no params line)")
    try:
        return BesovParams(s, p, q)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _gnuplot(path, data_file, xcol, ycol, xlabel, ylabel) -> None:
    Path(path).write_text(
        "set datafile separator ','\n"
        f"set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n"
        f"plot '{data_file}' using {xcol}:{ycol} skip 1 with linespoints title '{ylabel}'\n")


# ---------------------------------------------------------------- commands


def cmd_verify(args) -> int:
    spec = None
    if args.spec:
        try:
            spec = carnot.load_spec(args.spec)
        except (OSError, ValueError) as e:
            raise UsageError(f"cannot read structure file {args.spec}: {e}") from None
    try:
        checks = verify.run(args.suite, full=not args.quick, spec=spec)
    except ValueError as e:
        raise UsageError(str(e)) from None
    print(verify.format_table(checks))
    return 0 if all(c.passed for c in checks) else 1


def cmd_synth(args) -> int:
    if args.kind == "besov-saturating":
        P = _params(args, None)
        fld = synthesis.besov_saturating_field(P, args.jmax)
    elif args.kind == "zero":
        P = None
        fld = synthesis.zero_field(args.support)
    else:
        if not args.base:
            raise UsageError("monofractal-round needs --base FIELD")
        base, P = _load(args.base)
        if args.s is None or args.N is None:
            raise UsageError("monofractal-round needs --s and --N")
        if args.N < 1:
            raise UsageError("N must be >= 1")
        fld = synthesis.monofractal_round(base, args.s, args.N)
    with _open_out(args.out) as out:
        out.write(synthesis.dumps_field(fld, P))
    return 0


def _probe_points(args) -> tuple[list, list[str]]:
    if args.points:
        try:
            data = np.loadtxt(args.points, ndmin=2)
        except OSError as e:
            raise UsageError(f"cannot read points file: {e}") from None
        if data.shape[1] != 3:
            raise UsageError("points file needs three columns p q r")
        return [tuple(r) for r in data], [f"points file {args.points}"]
    if args.rate:
        pts, meta = [], []
        for tok in args.rate:
            xi = math.inf if tok in ("inf", "infinity") else float(tok)
            if not xi >= 1:
                raise UsageError(f"rate must be >= 1, got {tok}")
            depth = args.depth if args.depth is not None else lattice.probe_depth(xi, args.jmax)
            pts.append(lattice.point_with_rate(xi, depth))
            meta.append(f"rate {tok}: point_with_rate(xi={tok}, depth={depth}, a1=2)")
        return pts, meta
    raise UsageError("give --points FILE or --rate XI")


def cmd_exponent(args) -> int:
    fld, P = _load(args.field)
    if args.jmin < 0:
        raise UsageError("scales must be >= 0")
    # too few scales is an analytic failure (exit 1), reported below
    jw = (args.jmin, args.jmax)
    pts, meta = _probe_points(args)
    rows = []
    for x in pts:
        try:
            est = pointwise_exponent(fld, x, jw, args.mode, args.leaders, args.delta)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        rows.append([fmt(float(c)) for c in x] + [est.value, est.residual])
    meta = [f"mode {args.mode}", f"leaders {args.leaders}", f"window {jw[0]} {jw[1]}"] + meta
    try:
        pre = uniform_precondition(fld, jw)
        meta.append(f"uniform_sigma {fmt(pre['sigma'])} holds {pre['holds'] and pre['positive']}")
    except NotImplementedError:
        meta.append("uniform_sigma unavailable")
    with _open_out(args.out) as out:
        write_csv(out, ["x_p", "x_q", "x_r", "h_hat", "residual"], rows, meta)
    return 0


def _h_grid(args, P) -> np.ndarray:
    if args.h:
        return np.array(args.h, dtype=float)
    n = args.n_h
    if n < 2:
        raise UsageError("--n-h must be >= 2")
    return P.t + (P.s - P.t) * (np.arange(n) + 0.5) / n


def cmd_spectrum(args) -> int:
    fld, P0 = _load(args.field)
    P = _params(args, P0)
    jw = (args.jmin, args.jmax)
    if jw[1] - jw[0] < 1 or jw[0] < 1:
        raise UsageError("spectrum window needs 1 <= jmin < jmax")
    sp = counting_spectrum(fld, P, _h_grid(args, P), jw, log_correction=not args.raw)
    rows = [[h, d, b] for h, d, b in zip(sp.h, sp.d_hat, sp.bound)]
    finite = np.isfinite(sp.d_hat)
    dev = float(np.max(np.abs(sp.d_hat[finite] - sp.bound[finite]))) if finite.any() else math.nan
    meta = [f"params {P.s!r} {P.p!r} {P.q!r}", f"window {jw[0]} {jw[1]}", f"C0 {fmt(sp.C0)}",
            f"count_constant {fmt(sp.count_constant)}", f"count_bound_holds {sp.count_bound_holds}"]
    with _open_out(args.out) as out:
        write_csv(out, ["h", "d_hat", "bound"], rows, meta)
        out.write(f"# max_deviation {fmt(dev)} finite_points {int(finite.sum())}\n")
    if args.gnuplot:
        if args.out in (None, "-"):
            raise UsageError("--gnuplot needs -o FILE for the data")
        _gnuplot(args.gnuplot, args.out, 1, 2, "h", "d_hat")
    if args.check:
        return 0 if sp.count_bound_holds and finite.all() and dev <= SPECTRUM_TOL else 1
    return 0


def cmd_counting(args) -> int:
    fld, P0 = _load(args.field)
    if args.jmin > args.jmax or args.jmin < 1:
        raise UsageError("counting needs 1 <= jmin <= jmax")
    beta = 0.0
    if args.log:
        beta = _params(args, P0).beta
    rows = [[j, h, coefficient_counting(fld, j, h, args.C0, beta)]
            for h in args.h for j in range(args.jmin, args.jmax + 1)]
    with _open_out(args.out) as out:
        write_csv(out, ["j", "h", "count"], rows, [f"C0 {fmt(args.C0)}", f"beta {fmt(beta)}"])
    return 0


def cmd_rate(args) -> int:
    if args.point is not None:
        x = tuple(Fraction(c) for c in args.point) if args.exact else tuple(float(c) for c in args.point)
        scales = list(lattice.default_rate_scales(args.jmax))
        meta = [f"point {' '.join(args.point)}"]
    elif args.xi is not None:
        xi = math.inf if args.xi in ("inf", "infinity") else float(args.xi)
        if not xi >= 1:
            raise UsageError("xi must be >= 1")
        x = lattice.point_with_rate(xi, args.depth)
        scales = (lattice.liouville_rate_scales(xi, args.depth) if math.isfinite(xi)
                  else list(lattice.default_rate_scales(args.jmax)))
        meta = [f"point_with_rate(xi={args.xi}, depth={args.depth}, a1=2)"]
    else:
        raise UsageError("give --point P Q R or --xi XI")
    if args.scales:
        scales = args.scales
    est = lattice.approx_rate(x, scales, args.window)
    rows = [[j, m, lg, (-(lg - math.log2(lattice.COVERING_CONSTANT)) / j) if j > 0 else math.nan]
            for j, m, lg in zip(est.scales, est.min_dist, est.log2_min_dist)]
    with _open_out(args.out) as out:
        write_csv(out, ["j", "m_j", "log2_m_j", "rate"], rows,
                  meta + [f"rate_estimate {fmt(est.rate)}"])
    return 0


def cmd_taylor(args) -> int:
    if args.order not in (0, 1, 2, 3):
        raise UsageError(f"order must be 0..3, got {args.order}")
    f = taylor.FUNCTIONS[args.function]
    coef = taylor.taylor_poly(taylor.derivative_table(f, args.x0, args.order), args.order)
    radii = np.geomspace(args.rmax, args.rmin, args.n_radii)
    slope = taylor.taylor_remainder_slope(f, args.x0, args.order, radii)
    print("monomial p^a q^b r^c,coefficient")
    for (a, b, c), v in sorted(coef.items()):
        print(f"{a} {b} {c},{fmt(v)}")
    print(f"# remainder_slope {fmt(slope)} required {fmt(args.order + 1 - 0.1)}")
    return 0 if slope >= args.order + 1 - 0.1 else 1


def cmd_carnot(args) -> int:
    try:
        spec = carnot.load_spec(args.file)
    except OSError as e:
        raise UsageError(f"cannot read structure file: {e}") from None
    except ValueError as e:
        print(f"invalid: {e}")
        return 1
    errs = carnot.validate_spec(spec)
    print(f"layers {list(spec.layer_dims)}")
    print(f"dimension {spec.dim}")
    print(f"step {spec.step}")
    print(f"homogeneous_dimension {spec.hom_dim}")
    for e in errs:
        print(f"error: {e}")
    print("valid" if not errs else "invalid")
    return 0 if not errs else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="heisenberg-mfa", description=__doc__.splitlines()[0])
    ap.add_argument("--threads", default=None,
                    help=f"worker threads (default ${THREADS_ENV} or 1); results do not depend on it")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run an oracle suite")
    v.add_argument("suite", choices=["lattice", "group", "carnot", "besov", "all"])
    v.add_argument("--spec", help="extra stratification file for the carnot suite")
    v.add_argument("--quick", action="store_true", help="smaller sample sizes")
    v.set_defaults(func=cmd_verify)

    def besov_args(p):
        p.add_argument("--s", type=float)
        p.add_argument("--p", type=float)
        p.add_argument("--q", type=float)

    s = sub.add_parser("synth", help="write a field file")
    s.add_argument("kind", choices=["besov-saturating", "monofractal-round", "zero"])
    besov_args(s)
    s.add_argument("--N", type=int)
    s.add_argument("--base")
    s.add_argument("--jmax", type=int)
    s.add_argument("--support", choices=["L0", "all"], default="L0")
    s.add_argument("-o", "--out")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("exponent", help="pointwise exponents at probe points")
    e.add_argument("field")
    e.add_argument("--points")
    e.add_argument("--rate", nargs="+")
    e.add_argument("--depth", type=int, help="construction depth (default: from --jmax)")
    e.add_argument("--jmin", type=int, default=4)
    e.add_argument("--jmax", type=int, default=16)
    e.add_argument("--mode", choices=["raw", "log"], default="log")
    e.add_argument("--leaders", choices=["auto", "exact", "windowed"], default="auto")
    e.add_argument("--delta", type=int, default=4)
    e.add_argument("-o", "--out")
    e.set_defaults(func=cmd_exponent)

    sp = sub.add_parser("spectrum", help="counting spectrum on an h grid")
    sp.add_argument("field")
    besov_args(sp)
    sp.add_argument("--h", type=float, nargs="+")
    sp.add_argument("--n-h", type=int, default=8)
    sp.add_argument("--jmin", type=int, default=2)
    sp.add_argument("--jmax", type=int, default=14)
    sp.add_argument("--raw", action="store_true", help="no logarithmic threshold correction")
    sp.add_argument("--check", action="store_true",
                    help=f"exit 1 unless deviation <= {SPECTRUM_TOL} and the counting inequality holds")
    sp.add_argument("--gnuplot", help="write a gnuplot script stub for the CSV")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("counting", help="coefficient counts above C0 2^{-jh}")
    c.add_argument("field")
    besov_args(c)
    c.add_argument("--h", type=float, nargs="+", required=True)
    c.add_argument("--jmin", type=int, default=1)
    c.add_argument("--jmax", type=int, default=10)
    c.add_argument("--C0", type=float, default=1.0)
    c.add_argument("--log", action="store_true", help="divide the threshold by j^beta")
    c.add_argument("-o", "--out")
    c.set_defaults(func=cmd_counting)

    r = sub.add_parser("rate", help="dyadic approximation rate, CSV of (j, m_j, rate)")
    r.add_argument("--point", nargs=3)
    r.add_argument("--exact", action="store_true", help="read --point coordinates as fractions")
    r.add_argument("--xi")
    r.add_argument("--depth", type=int, default=6)
    r.add_argument("--jmax", type=int, default=20)
    r.add_argument("--scales", type=int, nargs="+")
    r.add_argument("--window", type=int, default=3)
    r.add_argument("-o", "--out")
    r.set_defaults(func=cmd_rate)

    t = sub.add_parser("taylor", help="Taylor polynomial and remainder slope")
    t.add_argument("function", choices=sorted(taylor.FUNCTIONS))
    t.add_argument("--x0", type=float, nargs=3, default=[0.0, 0.0, 0.0])
    t.add_argument("--order", type=int, default=2)
    t.add_argument("--rmax", type=float, default=0.3)
    t.add_argument("--rmin", type=float, default=0.003)
    t.add_argument("--n-radii", type=int, default=9)
    t.set_defaults(func=cmd_taylor)

    cg = sub.add_parser("carnot", help="stratified group tools")
    csub = cg.add_subparsers(dest="carnot_command", required=True)
    ck = csub.add_parser("check", help="validate a stratification file")
    ck.add_argument("file")
    ck.set_defaults(func=cmd_carnot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        _threads(args.threads)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
