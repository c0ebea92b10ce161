"""Command-line front end: ``specband <subcommand> ...``.

Exit codes: 0 success, 1 numerical failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings

import numpy as np

FMT = "%.12e"


class UsageError(ValueError):
    pass


# ------------------------------------------------------------------ helpers

def make_potential(spec: str, n: int):
    """Potential with at least n sites from a spec string.

    const:<v> | fib:<lambda> | file:<path> | periodic:<path>:<q>
    """
    from .potential import constant_potential, fibonacci_potential, load_potential, periodize

    kind, _, rest = spec.partition(":")
    if not rest:
        raise UsageError("bad potential spec %r" % spec)
    try:
        if kind == "const":
            return constant_potential(float(rest), n)
        if kind == "fib":
            return fibonacci_potential(float(rest), n)
        if kind == "file":
            V = load_potential(rest)
            if len(V) < n:
                raise UsageError("%s has %d values, need %d" % (rest, len(V), n))
            return V
        if kind == "periodic":
            path, _, q = rest.rpartition(":")
            V = load_potential(path)
            return periodize(V, int(q), max(n, int(q)))
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    raise UsageError("unknown potential kind %r" % kind)


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError("cannot parse number list %r" % text) from None


def _emit(args, text):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(_strict(obj), indent=1, allow_nan=False)


def _strict(o):
    """Plain JSON types only: NaN becomes null, +-inf the strings "inf"/"-inf"."""
    if isinstance(o, dict):
        return {k: _strict(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_strict(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_strict(v) for v in o.tolist()]
    if isinstance(o, np.generic):
        o = o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None if math.isnan(o) else ("inf" if o > 0 else "-inf")
    if o is None or isinstance(o, (bool, int, float, str)):
        return o
    raise TypeError("not serialisable: %r" % type(o))


def _require(cond, msg):
    if not cond:
        raise UsageError(msg)


# ------------------------------------------------------------- subcommands

def cmd_spectrum(args):
    from .discriminant import band_structure

    _require(args.q >= 1, "--q must be >= 1")
    V = make_potential(args.potential, args.q)
    data = band_structure(V, args.q, refine=args.refine)
    if args.format == "csv":
        buf = io.StringIO()
        buf.write("j,left,right,zero,width,dprime\n")
        for j, b in enumerate(data.bands):
            buf.write("%d,%s\n" % (j, ",".join(FMT % x for x in
                                               (b.left, b.right, b.zero, b.width,
                                                data.dprime_at_zeros[j]))))
        _emit(args, buf.getvalue())
    else:
        _emit(args, _json(data.to_dict()))
    return 0


def cmd_bound(args):
    from . import bounds
    from .discriminant import band_structure

    _require(args.q >= 1, "--q must be >= 1")
    V = make_potential(args.potential, args.q)
    if args.T is None:
        _require(args.T_from_alpha is not None, "give --T or --T-from-alpha")
        T = args.q ** (1.0 / args.T_from_alpha)
    else:
        T = args.T
    _require(T > 0, "T must be positive")
    data = band_structure(V, args.q)
    s = V.sup_norm if args.sup_norm is None else args.sup_norm
    if args.kind == "thouless":
        rep = bounds.thouless_bound(data, s, T)
    elif args.kind == "central":
        rep = bounds.central_bound(data, s, T)
    elif args.kind == "cluster":
        _require(args.alpha is not None and args.xi is not None, "cluster needs --alpha and --xi")
        rep = bounds.cluster_bound(data, s, T, args.alpha, args.xi, C=args.C, delta=args.delta)
    else:  # lemma33
        from .clustering import greedy_cover

        _require(args.alpha is not None and args.xi is not None, "lemma33 needs --alpha and --xi")
        cov = greedy_cover(data.zeros, args.q ** (-1.0 / args.alpha))
        ctx = bounds.PolyContext(data.zeros, cov, data.dprime_at_zeros, data.b_tilde(),
                                 data.pm2_points())
        rep = bounds.lemma33_bound(data.zeros, cov, args.alpha, args.xi, C=args.C,
                                   delta=args.delta, ctx=ctx)
    out = rep.to_dict()
    out["log_value"] = rep.log_value
    out["linear_value"] = rep.linear
    _emit(args, _json(out))
    return 0


def cmd_cluster(args):
    from .clustering import check_clustered, dp_cover
    from .discriminant import band_structure

    _require(args.eps > 0, "--eps must be positive")
    if args.points:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty file: reported below
            pts = np.sort(np.loadtxt(args.points, ndmin=1, comments="#"))
    else:
        _require(args.potential and args.q, "give --points or --potential with --q")
        pts = band_structure(make_potential(args.potential, args.q), args.q).zeros
    ok, cov = check_clustered(pts, args.eps, args.xi)
    out = {"clustered": ok, "xi_target": args.xi, "greedy": cov.to_dict()}
    if args.dp:
        _require(pts.size <= 64, "--dp is limited to 64 points")
        out["dp"] = dp_cover(pts, args.eps).to_dict()
    _emit(args, _json(out))
    return 0


def cmd_dynamics(args):
    from .bounds import full_line_bound
    from .dynamics import evolve_profile, moment, p_tail, p_tail_resolvent, required_size, \
        sized_profile

    _require(args.T > 0, "--T must be positive")
    _require(args.q >= 0, "--q must be >= 0")
    if args.N:
        N = args.N + (args.geometry == "full" and args.N % 2 == 0)
        _require(N <= 10_000, "N=%d exceeds the 10^4 cap" % N)
        _require(N >= required_size(args.q, args.T) * (2 if args.geometry == "full" else 1) - 1,
                 "N=%d is below the sizing rule q + 10T + 100" % N)
        pot = make_potential(args.potential, N)
        prof = evolve_profile(pot, args.T, N, args.geometry)
    else:
        pot = make_potential(args.potential, 1)
        prof = sized_profile(pot, args.T, args.q, args.geometry)
        N = prof.N
    out = prof.to_dict()
    out["sum_a"] = prof.total
    out["reliable"] = prof.reliable
    out["q"] = args.q
    out["p_tail"] = p_tail(prof, args.q)
    out["moment2"] = moment(prof, 2)
    if args.geometry == "full":
        # half-line tails through the resolvent: they can sit below the
        # eigenbasis rounding floor
        half = (N - 1) // 2
        pf = p_tail_resolvent(pot, args.T, args.q, N, "full")
        pp = p_tail_resolvent(pot, args.T, args.q, half)
        pm = p_tail_resolvent(pot, args.T, args.q, half, side=-1)
        out["p_tail_resolvent"] = pf
        out["p_plus"], out["p_minus"] = pp, pm
        out["full_line_bound"] = full_line_bound(pp, pm, args.T)
    _emit(args, _json(out))
    return 0 if prof.reliable else 1


def cmd_fibonacci(args):
    from . import fibonacci as fb

    lam = args.lam
    if args.report == "constants":
        c = fb.fib_constants(lam)
        lo, hi, ok = fb.admissible_t(c)
        out = c.to_dict()
        out["admissible_t"] = {"lower": lo, "upper": hi, "nonempty": ok}
    elif args.report == "hierarchy":
        h = fb.build_hierarchy(lam, args.depth)
        bad = fb.check_structure(h)
        out = h.to_dict()
        out["counts"] = [len(b) for b in h.levels]
        out["structure_violations"] = bad
    elif args.report == "derivatives":
        out = [fb.verify_derivative_bounds(lam, k) for k in range(args.k_min, args.depth + 1)]
    else:  # pipeline
        _require(args.t is not None, "pipeline needs --t")
        lo = args.ell_min if args.ell_min is not None else max(args.depth - 6, 2)
        out = fb.fib_cluster_pipeline(lam, args.t, range(lo, args.depth + 1))
    _emit(args, _json(out))
    return 0


def cmd_exponents(args):
    from .bounds import exponents_from_bounds
    from .dynamics import exponent_scan, scan_csv

    if args.bounds:
        tab = np.genfromtxt(args.bounds, delimiter=",", comments="#", ndmin=2)
        tab = tab[~np.isnan(tab).all(axis=1)]  # header row
        _require(tab.shape[1] >= 2 and not np.isnan(tab).any(), "bounds file needs numeric columns q,bound")
        _require(args.alpha is not None, "--alpha is required with --bounds")
        res = exponents_from_bounds(tab[:, 0], tab[:, 1], args.alpha, args.mode, args.eps)
        _emit(args, _json(res))
        return 0
    alphas = _floats(args.alphas)
    Ts = _floats(args.Ts)
    _require(alphas and Ts, "need --alphas and --Ts")
    # rule-based potentials extend on demand; file potentials must be long enough
    pot = make_potential(args.potential, 1)
    beta, summary = exponent_scan(pot, alphas, Ts, args.geometry)
    _emit(args, scan_csv(alphas, Ts, beta))
    for row in summary:
        sys.stderr.write("alpha=%s trend=%s change=%s\n" % (FMT % row["alpha"], row["trend"],
                                                            FMT % row["change"]))
    return 0


def cmd_verify(args):
    from .verify import run_suite

    rows = run_suite(args.suite, args.seed)
    w = max(len(r[0]) for r in rows)
    lines = ["%-*s  %s  %s" % (w, name, "PASS" if ok else "FAIL", detail) for name, ok, detail in rows]
    _emit(args, "\n".join(lines))
    return 0 if all(ok for _, ok, _ in rows) else 1


# -------------------------------------------------------------------- parser

def build_parser():
    p = argparse.ArgumentParser(prog="specband", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS/LAPACK worker threads (default: library default)")
    sub = p.add_subparsers(dest="cmd", required=True)

    def common(sp, potential=True):
        if potential:
            sp.add_argument("--potential", required=True,
                            help="const:<v> | fib:<lambda> | file:<path> | periodic:<path>:<q>")
        sp.add_argument("--out", help="write output here instead of stdout")

    sp = sub.add_parser("spectrum", help="bands, zeros and D' of the q-periodic approximant")
    common(sp)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--format", choices=("json", "csv"), default="json")
    sp.add_argument("--refine", choices=("auto", "never", "always"), default="auto")
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("bound", help="evaluate a bound on P(q, T)")
    common(sp)
    sp.add_argument("--kind", choices=("thouless", "central", "cluster", "lemma33"), required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--T", type=float)
    sp.add_argument("--T-from-alpha", type=float, dest="T_from_alpha",
                    help="use T = q^(1/alpha)")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--xi", type=float)
    sp.add_argument("--C", type=float, default=1.0 / 8.0)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--sup-norm", type=float, dest="sup_norm",
                    help="override the sup norm (default: of the stored period)")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("cluster", help="greedy (eps, xi) clustering of a zero set")
    sp.add_argument("--potential")
    sp.add_argument("--out")
    sp.add_argument("--q", type=int)
    sp.add_argument("--points", help="file with one point per line instead of a potential")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--xi", type=float, default=0.0)
    sp.add_argument("--dp", action="store_true", help="also report the exact DP cover (q <= 64)")
    sp.set_defaults(func=cmd_cluster)

    sp = sub.add_parser("dynamics", help="time-averaged profile and tail probability")
    common(sp)
    sp.add_argument("--T", type=float, required=True)
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--N", type=int, help="truncation size (default: q + 10T + 100, grown until the edge mass is below 1e-8)")
    sp.add_argument("--geometry", choices=("half", "full"), default="half")
    sp.set_defaults(func=cmd_dynamics)

    sp = sub.add_parser("fibonacci", help="Fibonacci band hierarchy, constants and pipeline")
    sp.add_argument("--lambda", type=float, dest="lam", required=True)
    sp.add_argument("--depth", type=int, default=12)
    sp.add_argument("--report", choices=("hierarchy", "constants", "derivatives", "pipeline"),
                    default="hierarchy")
    sp.add_argument("--t", type=float)
    sp.add_argument("--ell-min", type=int, dest="ell_min")
    sp.add_argument("--k-min", type=int, dest="k_min", default=3)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_fibonacci)

    sp = sub.add_parser("exponents", help="beta(alpha, T) scan, or exponents from a bound table")
    sp.add_argument("--potential")
    sp.add_argument("--alphas", default="")
    sp.add_argument("--Ts", default="")
    sp.add_argument("--geometry", choices=("half", "full"), default="half")
    sp.add_argument("--bounds", help="CSV file with columns q,bound")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--mode", choices=("polynomial", "superpolynomial"), default="polynomial")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_exponents)

    sp = sub.add_parser("verify", help="run the invariant suite and print a pass/fail table")
    sp.add_argument("--suite", choices=("all", "quick"), default="all")
    sp.add_argument("--seed", type=int, default=7)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.cmd == "exponents" and not args.bounds and not args.potential:
        parser.error("exponents needs --potential or --bounds")
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise UsageError("--threads must be >= 1")
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except (UsageError, ValueError) as exc:
        sys.stderr.write("specband %s: error: %s\n" % (args.cmd, exc))
        return 2
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        sys.stderr.write("specband %s: numerical failure: %s\n" % (args.cmd, exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
