# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transfer-matrix and log-product kernels.

Mirrors ``specband._pykernels`` function for function; ``specband.kernels``
picks whichever is importable.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, ldexp, log, hypot, INFINITY

cnp.import_array()

cdef double _BIG = 1.0e120
cdef int _SHIFT = 400


def trace_real(const double[::1] v, const double[::1] energies):
    """Trace of the one-period transfer matrix and its energy derivative.

    Returns ``(d, dprime, overflow)`` arrays.  Intermediate products are
    rescaled by powers of two, so only a final magnitude above 1e300 is
    reported as overflow (the value is then +-inf).
    """
    cdef Py_ssize_t q = v.shape[0]
    cdef Py_ssize_t m = energies.shape[0]
    cdef Py_ssize_t i, n
    cdef double e, a
    cdef double m00, m01, m10, m11, d00, d01, d10, d11
    cdef double t00, t01, t0d, t1d, big
    cdef long expo
    cdef double tr, dtr
    out = np.empty(m, dtype=np.float64)
    outd = np.empty(m, dtype=np.float64)
    flag = np.zeros(m, dtype=np.bool_)
    cdef double[::1] o = out
    cdef double[::1] od = outd
    cdef cnp.npy_bool[::1] f = flag
    for i in range(m):
        e = energies[i]
        m00 = 1.0; m01 = 0.0; m10 = 0.0; m11 = 1.0
        d00 = 0.0; d01 = 0.0; d10 = 0.0; d11 = 0.0
        expo = 0
        for n in range(q):
            a = e - v[n]
            # row0' = a*row0 - row1, row1' = row0; derivative picks up row0
            t0d = a * d00 - d10 + m00
            t1d = a * d01 - d11 + m01
            d10 = d00; d11 = d01
            d00 = t0d; d01 = t1d
            t00 = a * m00 - m10
            t01 = a * m01 - m11
            m10 = m00; m11 = m01
            m00 = t00; m01 = t01
            big = fabs(m00)
            if fabs(m01) > big: big = fabs(m01)
            if fabs(d00) > big: big = fabs(d00)
            if fabs(d01) > big: big = fabs(d01)
            if big > _BIG:
                m00 = ldexp(m00, -_SHIFT); m01 = ldexp(m01, -_SHIFT)
                m10 = ldexp(m10, -_SHIFT); m11 = ldexp(m11, -_SHIFT)
                d00 = ldexp(d00, -_SHIFT); d01 = ldexp(d01, -_SHIFT)
                d10 = ldexp(d10, -_SHIFT); d11 = ldexp(d11, -_SHIFT)
                expo += _SHIFT
        tr = m00 + m11
        dtr = d00 + d11
        if expo > 0:
            if expo > 1100:
                tr = INFINITY if tr > 0 else (-INFINITY if tr < 0 else 0.0)
                dtr = INFINITY if dtr > 0 else (-INFINITY if dtr < 0 else 0.0)
            else:
                tr = ldexp(tr, expo)
                dtr = ldexp(dtr, expo)
        o[i] = tr
        od[i] = dtr
        f[i] = fabs(tr) > 1e300 or fabs(dtr) > 1e300
    return out, outd, flag


def trace_complex(const double[::1] v, const double complex[::1] z):
    """Trace of the transfer product at complex energies, ``(d, overflow)``."""
    cdef Py_ssize_t q = v.shape[0]
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t i, n
    cdef double complex e, a, m00, m01, m10, m11, t00, t01, tr
    cdef double big
    cdef long expo
    out = np.empty(m, dtype=np.complex128)
    flag = np.zeros(m, dtype=np.bool_)
    cdef double complex[::1] o = out
    cdef cnp.npy_bool[::1] f = flag
    for i in range(m):
        e = z[i]
        m00 = 1.0; m01 = 0.0; m10 = 0.0; m11 = 1.0
        expo = 0
        for n in range(q):
            a = e - v[n]
            t00 = a * m00 - m10
            t01 = a * m01 - m11
            m10 = m00; m11 = m01
            m00 = t00; m01 = t01
            big = fabs(m00.real) + fabs(m00.imag)
            if fabs(m01.real) + fabs(m01.imag) > big:
                big = fabs(m01.real) + fabs(m01.imag)
            if big > _BIG:
                m00 = m00 * ldexp(1.0, -_SHIFT); m01 = m01 * ldexp(1.0, -_SHIFT)
                m10 = m10 * ldexp(1.0, -_SHIFT); m11 = m11 * ldexp(1.0, -_SHIFT)
                expo += _SHIFT
        tr = m00 + m11
        if expo > 0:
            if expo > 1100:
                tr = INFINITY
            else:
                tr = tr * ldexp(1.0, expo)
        o[i] = tr
        f[i] = not (hypot(tr.real, tr.imag) <= 1e300)
    return out, flag


def log_abs_product(const double[::1] zeros, const double complex[::1] z):
    """``sum_j log|z - zeros[j]|`` for every entry of ``z``."""
    cdef Py_ssize_t q = zeros.shape[0]
    cdef Py_ssize_t m = z.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc, x, y, r
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(m):
        x = z[i].real
        y = z[i].imag
        acc = 0.0
        for j in range(q):
            r = hypot(x - zeros[j], y)
            if r == 0.0:
                acc = -INFINITY
                break
            acc += log(r)
        o[i] = acc
    return out


def inverse_sum(const double[::1] zeros, const double[::1] x):
    """``sum_j 1/(x - zeros[j])``, the logarithmic derivative of the monic product."""
    cdef Py_ssize_t q = zeros.shape[0]
    cdef Py_ssize_t m = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double acc
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    for i in range(m):
        acc = 0.0
        for j in range(q):
            acc += 1.0 / (x[i] - zeros[j])
        o[i] = acc
    return out
