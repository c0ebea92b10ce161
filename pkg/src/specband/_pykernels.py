"""Pure numpy versions of the kernels in ``_ckernels.pyx``.

Same signatures and return conventions; vectorised over the energy axis and
looping over sites.
"""

from __future__ import annotations

import numpy as np

_BIG = 1.0e120
_SHIFT = 400


def _finish(tr, expo):
    ok = expo <= 1100
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.where(ok, 0.0, np.sign(tr) * np.inf)
        out[ok] = np.ldexp(tr[ok], expo[ok])
    return out


def trace_real(v, energies):
    v = np.ascontiguousarray(v, dtype=np.float64)
    e = np.ascontiguousarray(energies, dtype=np.float64)
    m00 = np.ones_like(e)
    m01 = np.zeros_like(e)
    m10 = np.zeros_like(e)
    m11 = np.ones_like(e)
    d00 = np.zeros_like(e)
    d01 = np.zeros_like(e)
    d10 = np.zeros_like(e)
    d11 = np.zeros_like(e)
    expo = np.zeros(e.shape, dtype=np.int64)
    for vn in v:
        a = e - vn
        d00, d01, d10, d11 = a * d00 - d10 + m00, a * d01 - d11 + m01, d00, d01
        m00, m01, m10, m11 = a * m00 - m10, a * m01 - m11, m00, m01
        big = np.maximum.reduce([np.abs(m00), np.abs(m01), np.abs(d00), np.abs(d01)])
        hit = big > _BIG
        if hit.any():
            for arr in (m00, m01, m10, m11, d00, d01, d10, d11):
                arr[hit] = np.ldexp(arr[hit], -_SHIFT)
            expo[hit] += _SHIFT
    tr = _finish(m00 + m11, expo)
    dtr = _finish(d00 + d11, expo)
    flag = (np.abs(tr) > 1e300) | (np.abs(dtr) > 1e300)
    return tr, dtr, flag


def trace_complex(v, z):
    v = np.ascontiguousarray(v, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.complex128)
    m00 = np.ones_like(z)
    m01 = np.zeros_like(z)
    m10 = np.zeros_like(z)
    m11 = np.ones_like(z)
    expo = np.zeros(z.shape, dtype=np.int64)
    scale = np.ldexp(1.0, -_SHIFT)
    for vn in v:
        a = z - vn
        m00, m01, m10, m11 = a * m00 - m10, a * m01 - m11, m00, m01
        big = np.maximum(np.abs(m00.real) + np.abs(m00.imag), np.abs(m01.real) + np.abs(m01.imag))
        hit = big > _BIG
        if hit.any():
            for arr in (m00, m01, m10, m11):
                arr[hit] *= scale
            expo[hit] += _SHIFT
    tr = m00 + m11
    ok = expo <= 1100
    with np.errstate(over="ignore", invalid="ignore"):
        tr = np.where(ok, tr * np.exp2(np.where(ok, expo, 0).astype(np.float64)), np.inf)
    flag = ~(np.abs(tr) <= 1e300)
    return tr, flag


def log_abs_product(zeros, z):
    zeros = np.asarray(zeros, dtype=np.float64)
    z = np.asarray(z, dtype=np.complex128)
    out = np.empty(z.shape, dtype=np.float64)
    # chunk to bound the (m, q) temporary
    step = max(1, 2_000_000 // max(1, zeros.size))
    for s in range(0, z.size, step):
        zz = z[s:s + step]
        r = np.hypot(zz.real[:, None] - zeros[None, :], zz.imag[:, None])
        with np.errstate(divide="ignore"):
            out[s:s + step] = np.log(r).sum(axis=1)
    return out


def inverse_sum(zeros, x):
    zeros = np.asarray(zeros, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape, dtype=np.float64)
    step = max(1, 2_000_000 // max(1, zeros.size))
    for s in range(0, x.size, step):
        with np.errstate(divide="ignore"):
            out[s:s + step] = (1.0 / (x[s:s + step, None] - zeros[None, :])).sum(axis=1)
    return out
