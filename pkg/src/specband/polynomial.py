"""Monic polynomials with real simple zeros, handled through their zero set.

Q(z) = prod_j (z - z_j).  Everything here works in log space so that
degrees in the thousands do not overflow.
"""

from __future__ import annotations

import numpy as np

from . import kernels

_MAXIT = 200


def _check_zeros(zeros):
    z = np.asarray(zeros, dtype=np.float64).ravel()
    if z.size == 0:
        raise ValueError("empty zero set")
    if z.size > 1 and not np.all(np.diff(z) > 0):
        raise ValueError("zeros must be strictly increasing")
    return z


def log_abs(zeros, x):
    """log|Q(x)| for real or complex x (array-valued)."""
    x = np.asarray(x)
    out = kernels.log_abs_product(zeros, x.ravel())
    return out.reshape(x.shape)


def log_abs_derivative_at_zeros(zeros):
    """(sign, log|Q'(z_j)|) with Q'(z_j) = prod_{i != j}(z_j - z_i)."""
    z = _check_zeros(zeros)
    q = z.size
    logs = np.empty(q)
    for j in range(q):
        d = z[j] - np.delete(z, j)
        logs[j] = np.sum(np.log(np.abs(d)))
    # (z_j - z_i) < 0 for every i > j
    sign = np.where((q - 1 - np.arange(q)) % 2 == 0, 1.0, -1.0)
    return sign, logs


def critical_points(zeros):
    """The q-1 zeros of Q', one strictly between consecutive zeros.

    Bisection on sum_i 1/(x - z_i), which decreases from +inf to -inf on
    each gap.
    """
    z = _check_zeros(zeros)
    if z.size < 2:
        return np.empty(0)
    lo = z[:-1].copy()
    hi = z[1:].copy()
    for _ in range(_MAXIT):
        mid = 0.5 * (lo + hi)
        active = (mid > lo) & (mid < hi)
        if not active.any():
            break
        g = kernels.inverse_sum(z, mid)
        pos = g > 0
        lo = np.where(active & pos, mid, lo)
        hi = np.where(active & ~pos, mid, hi)
    return 0.5 * (lo + hi)


def zero_index(E, zeros, crit=None):
    """Index j of the zero z(E) associated with each E.

    The real line is split at the critical points; each piece holds exactly
    one zero.  A critical point itself goes with the piece to its right.
    """
    if crit is None:
        crit = critical_points(zeros)
    return np.searchsorted(crit, np.asarray(E, dtype=np.float64), side="right")


def level_points(zeros, level=2.0, crit=None):
    """All real x with |Q(x)| = level, as (x, owning zero index).

    For each zero the search runs toward both neighbouring critical points
    (or to +-inf at the ends); a side contributes a point only when |Q|
    reaches ``level`` before the critical point.
    """
    z = _check_zeros(zeros)
    if crit is None:
        crit = critical_points(z)
    target = np.log(level)
    q = z.size
    xs, owner = [], []
    for side in (-1, 1):
        if side < 0:
            far = np.concatenate(([np.nan], crit))
        else:
            far = np.concatenate((crit, [np.nan]))
        ends = np.isnan(far)
        if ends.any():
            # unbounded side: walk outward until |Q| exceeds the level
            step = 1.0
            while True:
                cand = z[ends] + side * step
                if np.all(log_abs(z, cand) >= target):
                    break
                step *= 2.0
            far = far.copy()
            far[ends] = cand
        top = log_abs(z, far)
        has = top >= target
        idx = np.nonzero(has)[0]
        if idx.size == 0:
            continue
        a = z[idx].copy()
        b = far[idx].copy()
        for _ in range(_MAXIT):
            mid = 0.5 * (a + b)
            active = (mid != a) & (mid != b)
            if not active.any():
                break
            up = log_abs(z, mid) >= target
            b = np.where(active & up, mid, b)
            a = np.where(active & ~up, mid, a)
        xs.append(b)
        owner.append(idx)
    if not xs:
        return np.empty(0), np.empty(0, dtype=int)
    x = np.concatenate(xs)
    o = np.concatenate(owner)
    order = np.argsort(x, kind="stable")
    return x[order], o[order]


def b_tilde(zeros, points=None, crit=None):
    """sup over level points x of |x - z(x)|."""
    z = _check_zeros(zeros)
    if crit is None:
        crit = critical_points(z)
    if points is None:
        points, _ = level_points(z, 2.0, crit)
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return float("nan")
    j = zero_index(points, z, crit)
    return float(np.max(np.abs(points - z[j])))
