"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is run on the same inputs with both backends; the script checks
that the results agree before reporting timings.
"""

from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from specband import kernels


def cases(rng):
    # (name, kernel, args) at sizes typical of band-structure and bound evaluations
    v200 = rng.uniform(-2, 2, 200)
    v987 = rng.uniform(-2, 2, 987)
    e = np.linspace(-4, 4, 2000)
    z = e + 1j / 50
    zeros = np.sort(rng.uniform(-4, 4, 987))
    return [
        ("trace_real q=200, 2000 E", kernels.trace_real, (v200, e)),
        ("trace_real q=987, 2000 E", kernels.trace_real, (v987, e)),
        ("trace_complex q=987, 2000 z", kernels.trace_complex, (v987, z)),
        ("log_abs_product 987 zeros, 2000 z", kernels.log_abs_product, (zeros, z)),
        ("inverse_sum 987 zeros, 2000 x", kernels.inverse_sum, (zeros, e + 1e-3)),
    ]


def _close(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    for x, y in zip(a, b):
        # compare real and imaginary parts separately: overflowed entries keep
        # a finite component next to an infinite one
        for u, w in ((np.real(x), np.real(y)), (np.imag(x), np.imag(y))):
            u, w = np.asarray(u, dtype=np.float64), np.asarray(w, dtype=np.float64)
            if not np.allclose(u, w, rtol=1e-9, atol=1e-12, equal_nan=True):
                return False
    return True


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write results to this file")
    args = ap.parse_args(argv)

    impls = kernels.implementations()
    if "cython" not in impls:
        print("compiled extension not importable; only the python backend is timed", file=sys.stderr)
    rows = []
    for name, fn, fargs in cases(np.random.default_rng(args.seed)):
        ref = fn(*fargs, impl=impls["python"])
        row = {"kernel": name}
        for label, impl in impls.items():
            if label != "python" and not _close(fn(*fargs, impl=impl), ref):
                raise SystemExit("backend %s disagrees on %s" % (label, name))
            t = min(timeit.repeat(lambda: fn(*fargs, impl=impl), number=1, repeat=args.repeat))
            row[label] = t
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)

    print("%-36s %12s %12s %9s" % ("kernel", "python [s]", "cython [s]", "speedup"))
    for r in rows:
        print("%-36s %12.4g %12s %9s" % (
            r["kernel"], r["python"],
            "%.4g" % r["cython"] if "cython" in r else "-",
            "%.1fx" % r["speedup"] if "speedup" in r else "-"))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
