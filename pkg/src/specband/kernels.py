"""Backend selection for the scalar hot loops.

The compiled module is used when it imports; set ``SPECBAND_PURE_PYTHON=1``
to force the numpy fallback (used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels

if os.environ.get("SPECBAND_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # no compiler at install time
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"


def _f64(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))


def _c128(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.complex128)))


def trace_real(v, energies, impl=None):
    """(D, D', overflow) at real energies for the period ``v``."""
    impl = impl or _impl
    return impl.trace_real(_f64(v), _f64(energies))


def trace_complex(v, z, impl=None):
    impl = impl or _impl
    return impl.trace_complex(_f64(v), _c128(z))


def log_abs_product(zeros, z, impl=None):
    impl = impl or _impl
    return impl.log_abs_product(_f64(zeros), _c128(z))


def inverse_sum(zeros, x, impl=None):
    impl = impl or _impl
    return impl.inverse_sum(_f64(zeros), _f64(x))


def implementations():
    """Both backends keyed by name (the compiled one only if importable)."""
    out = {"python": _pykernels}
    if BACKEND == "cython":
        out["cython"] = _impl
    else:
        try:
            from . import _ckernels
            out["cython"] = _ckernels
        except ImportError:
            pass
    return out
