"""Multiprecision (gmpy2 mpfr) evaluation and refinement for narrow bands.

Bands narrower than double precision can resolve still have well separated
zeros, so the double zero and D'(zero) give a good Newton start; the edges
then sit near zero +- 2/D'.  All loops are vectorised over bands with numpy
object arrays of mpfr.
"""

from __future__ import annotations

import math

import gmpy2
import numpy as np
from gmpy2 import mpfr

_mpfr_vec = np.frompyfunc(mpfr, 1, 1)
_float_vec = np.frompyfunc(float, 1, 1)


def ctx(prec):
    """Context manager running mpfr arithmetic at ``prec`` bits."""
    return gmpy2.context(gmpy2.get_context(), precision=prec)


def precision_for(dprime_abs):
    """Bits needed to separate edges ~2/|D'| from the zero, with margin."""
    mag = max(2.0, float(np.max(np.abs(dprime_abs)))) if np.size(dprime_abs) else 2.0
    if not math.isfinite(mag):
        mag = 1e300
    return int(math.ceil(math.log2(mag)) + 96)


def to_mp(x, prec):
    with ctx(prec):
        return _mpfr_vec(np.asarray(x, dtype=object))


def to_float(x):
    return np.asarray(_float_vec(np.asarray(x, dtype=object)), dtype=np.float64)


def trace_with_derivative(v, x, prec):
    """D(x), D'(x) in mpfr for an object array of mpfr energies."""
    with ctx(prec):
        x = np.asarray(x, dtype=object)
        one = mpfr(1)
        zero = mpfr(0)
        m00 = np.full(x.shape, one, dtype=object)
        m01 = np.full(x.shape, zero, dtype=object)
        m10 = np.full(x.shape, zero, dtype=object)
        m11 = np.full(x.shape, one, dtype=object)
        d00 = np.full(x.shape, zero, dtype=object)
        d01 = np.full(x.shape, zero, dtype=object)
        d10 = np.full(x.shape, zero, dtype=object)
        d11 = np.full(x.shape, zero, dtype=object)
        for vn in v:
            a = x - mpfr(float(vn))
            d00, d01, d10, d11 = a * d00 - d10 + m00, a * d01 - d11 + m01, d00, d01
            m00, m01, m10, m11 = a * m00 - m10, a * m01 - m11, m00, m01
        return m00 + m11, d00 + d11


def _newton(v, x, level, prec, maxit=80, dscale=None):
    """Newton on D = level.  ``dscale`` (|D'| at the band's zero) sets the
    evaluation-noise scale for the residual test."""
    with ctx(prec):
        lev = mpfr(level)
        x = np.asarray(x, dtype=object).copy()
        active = np.ones(x.shape, dtype=bool)
        tol_bits = prec - 16
        for _ in range(maxit):
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            d, dp = trace_with_derivative(v, x[idx], prec)
            res = d - lev
            step = res / dp
            x[idx] = x[idx] - step
            for k, i in enumerate(idx):
                s = step[k]
                scale = max(abs(x[i]), mpfr(1))
                # the residual test catches double roots (touching bands),
                # where the step stalls near sqrt(ulp) instead of ulp
                noise = max(abs(dp[k]) if dscale is None else dscale[i], mpfr(1)) * scale
                if (s == 0 or abs(s) <= scale * gmpy2.exp2(-tol_bits)
                        or abs(res[k]) <= noise * gmpy2.exp2(-tol_bits)):
                    active[i] = False
        return x, ~active


def refine(v, zeros, dprime, prec=None, plus_start=None, minus_start=None):
    """Refine zeros and both D=+-2 edges for the given bands.

    ``zeros`` and ``dprime`` are double estimates for the selected bands.
    Edge Newton runs start at zero +- 2/D' for bands below ~1e-6 relative
    width and at the supplied double edges otherwise.  Returns (left, zero, right, dprime_mp, prec, converged) with mpfr object
    arrays.  The edge where D=-2 lies on the side where D decreases.
    """
    zeros = np.asarray(zeros, dtype=np.float64)
    dprime = np.asarray(dprime, dtype=np.float64)
    if prec is None:
        prec = precision_for(dprime)
    z0 = to_mp(zeros, prec)
    z, okz = _newton(v, z0, 0, prec)
    with ctx(prec):
        _, dpz = trace_with_derivative(v, z, prec)
        start_plus = z + mpfr(2) / dpz
        start_minus = z - mpfr(2) / dpz
        if plus_start is not None:
            wide = 4.0 / np.abs(dprime) > 1e-6 * np.maximum(1.0, np.abs(zeros))
            for i in np.nonzero(wide)[0]:
                start_plus[i] = mpfr(float(plus_start[i]))
                start_minus[i] = mpfr(float(minus_start[i]))
    # touching bands make D -+ 2 a double root: Newton halves the error per
    # step there, so allow about one iteration per bit
    dabs = np.array([abs(x) for x in dpz], dtype=object)
    xp, okp = _newton(v, start_plus, 2, prec, maxit=prec + 64, dscale=dabs)
    xm, okm = _newton(v, start_minus, -2, prec, maxit=prec + 64, dscale=dabs)
    inc = np.array([d > 0 for d in dpz])
    left = np.where(inc, xm, xp)
    right = np.where(inc, xp, xm)
    return left, z, right, dpz, prec, okz & okp & okm


def widths_stable(v, zeros, dprime, prec):
    """Relative change of the band widths when precision grows by 64 bits."""
    a = refine(v, zeros, dprime, prec)
    b = refine(v, zeros, dprime, prec + 64)
    with ctx(prec + 64):
        wa = a[2] - a[0]
        wb = b[2] - b[0]
        rel = [abs(x - y) / abs(y) if y != 0 else mpfr("inf") for x, y in zip(wa, wb)]
    return np.array([float(r) for r in rel])
