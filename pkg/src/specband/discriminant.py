"""Discriminant D^q of a q-periodic approximant: zeros, band edges, bands.

D^q(z) is the trace of A_q ... A_1 with A_j = [[z - V_j, -1], [1, 0]], a
monic polynomial of degree q.  Band edges are eigenvalues of the k=0 and
k=pi boundary-condition matrices; zeros are bracketed inside each band and
polished by safeguarded Newton.  Bands too narrow for double precision are
re-solved in mpfr (see ``_highprec``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from . import _highprec, kernels, polynomial
from .potential import Potential

OVERFLOW = 1e300
_NARROW = 1e-10  # relative width below which a band is re-solved in mpfr


class DiscriminantOverflow(ArithmeticError):
    """|D| or a transfer-matrix entry exceeded 1e300; use log-space paths."""


class BracketError(RuntimeError):
    pass


def _period(V, q):
    if isinstance(V, Potential):
        return np.array(V.prefix(int(q)))
    v = np.asarray(V, dtype=np.float64).ravel()
    if q < 1 or q > v.size:
        raise ValueError("q=%d outside stored range 1..%d" % (q, v.size))
    return v[: int(q)]


# ---------------------------------------------------------------- evaluation

def transfer_product(V, q: int, z) -> np.ndarray:
    """A_q ... A_1 at a single (complex) energy z."""
    v = _period(V, q)
    M = np.eye(2, dtype=np.complex128)
    for vn in v:
        a = z - vn
        M = np.array([[a * M[0, 0] - M[1, 0], a * M[0, 1] - M[1, 1]], [M[0, 0], M[0, 1]]])
        if not np.all(np.abs(M) <= OVERFLOW):
            raise DiscriminantOverflow("transfer product entry exceeds 1e300 (q=%d, z=%r)" % (q, z))
    return M


def discriminant_eval(V, q: int, z, on_overflow: str = "raise"):
    """D^q(z).  Real input gives real output; complex gives complex.

    With ``on_overflow='inf'`` overflowed entries come back as +-inf instead
    of raising.
    """
    v = _period(V, q)
    zarr = np.asarray(z)
    if np.iscomplexobj(zarr):
        d, flag = kernels.trace_complex(v, zarr.ravel())
    else:
        d, _, flag = kernels.trace_real(v, zarr.ravel())
    if flag.any() and on_overflow == "raise":
        raise DiscriminantOverflow("|D^%d| exceeds 1e300 at %d point(s)" % (q, int(flag.sum())))
    d = d.reshape(zarr.shape)
    return d[()] if d.ndim == 0 else d


def discriminant_derivative(V, q: int, E, on_overflow: str = "raise"):
    """(D^q)'(E) by product-rule propagation through the transfer product."""
    v = _period(V, q)
    e = np.asarray(E, dtype=np.float64)
    _, dp, flag = kernels.trace_real(v, e.ravel())
    if flag.any() and on_overflow == "raise":
        raise DiscriminantOverflow("|D'| exceeds 1e300")
    dp = dp.reshape(e.shape)
    return dp[()] if dp.ndim == 0 else dp


def discriminant_log_abs(zeros, z):
    """sum_j log|z - zeros_j|; -inf when z hits a zero."""
    zarr = np.asarray(z)
    out = kernels.log_abs_product(zeros, zarr.ravel()).reshape(zarr.shape)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------- matrices

def bloch_matrix(V, q: int, k: float) -> np.ndarray:
    """H^q(k): tridiagonal plus the corner couplings e^{-ik}, e^{ik}."""
    v = _period(V, q)
    H = np.diag(v.astype(np.complex128))
    idx = np.arange(q - 1)
    H[idx, idx + 1] += 1.0
    H[idx + 1, idx] += 1.0
    H[0, q - 1] += np.exp(-1j * k)
    H[q - 1, 0] += np.exp(1j * k)
    return H


def _eig(H, q, k):
    try:
        if k == 0.0 or k == math.pi:
            return linalg.eigvalsh(H.real)
        return linalg.eigvalsh(H)
    except linalg.LinAlgError as exc:
        raise RuntimeError("eigensolver failed for q=%d, k=%g: %s" % (q, k, exc)) from exc


def band_edges(V, q: int):
    """(edges_plus, edges_minus): sorted eigenvalues of H^q(0) and H^q(pi)."""
    q = int(q)
    plus = _eig(bloch_matrix(V, q, 0.0), q, 0.0)
    minus = _eig(bloch_matrix(V, q, math.pi), q, math.pi)
    return np.sort(plus), np.sort(minus)


# ---------------------------------------------------------------- root solves

def _solve_level(v, lo, hi, level):
    """Solve D(E) = level in each bracket [lo, hi] (vectorised).

    Returns (root, dprime, bracketed).  Unbracketed entries get a Newton
    polish from the midpoint only.
    """
    lo = np.array(lo, dtype=np.float64)
    hi = np.array(hi, dtype=np.float64)
    flo = kernels.trace_real(v, lo)[0] - level
    fhi = kernels.trace_real(v, hi)[0] - level
    bracketed = (np.sign(flo) * np.sign(fhi) <= 0) & (hi >= lo)
    x = 0.5 * (lo + hi)
    active = np.ones(x.size, dtype=bool)
    for _ in range(200):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        f, fp, _ = kernels.trace_real(v, x[idx])
        f = f - level
        hit = f == 0
        same = np.sign(f) == np.sign(flo[idx])
        br = bracketed[idx]
        lo[idx] = np.where(br & same & ~hit, x[idx], lo[idx])
        flo[idx] = np.where(br & same & ~hit, f, flo[idx])
        hi[idx] = np.where(br & ~same & ~hit, x[idx], hi[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = x[idx] - f / fp
        inside = (xn > lo[idx]) & (xn < hi[idx])
        xn = np.where(br & ~inside, 0.5 * (lo[idx] + hi[idx]), xn)
        xn = np.where(np.isfinite(xn), xn, x[idx])
        step = np.abs(xn - x[idx])
        tiny = step <= 2e-16 * np.maximum(1.0, np.abs(x[idx]))
        collapsed = br & (hi[idx] - lo[idx] <= 4e-16 * np.maximum(1.0, np.abs(x[idx])))
        x[idx] = np.where(hit, x[idx], xn)
        active[idx] = ~(hit | tiny | collapsed)
    _, fp, _ = kernels.trace_real(v, x)
    return x, fp, bracketed


@dataclass
class Band:
    left: float
    right: float
    zero: float
    width: float
    left_k: str
    right_k: str

    def to_dict(self):
        return {
            "left": self.left,
            "right": self.right,
            "zero": self.zero,
            "width": self.width,
            "left_k": self.left_k,
            "right_k": self.right_k,
        }


@dataclass
class DiscriminantData:
    q: int
    zeros: np.ndarray
    edges_plus: np.ndarray
    edges_minus: np.ndarray
    bands: list
    dprime_at_zeros: np.ndarray
    period: np.ndarray = field(repr=False, default=None)
    # band index -> (left, zero, right, dprime, prec) as mpfr, for narrow bands
    hp: dict = field(repr=False, default_factory=dict)

    @property
    def widths(self) -> np.ndarray:
        return np.array([b.width for b in self.bands])

    @property
    def lefts(self) -> np.ndarray:
        return np.array([b.left for b in self.bands])

    @property
    def rights(self) -> np.ndarray:
        return np.array([b.right for b in self.bands])

    def to_dict(self):
        return {
            "q": self.q,
            "zeros": [float(x) for x in self.zeros],
            "bands": [b.to_dict() for b in self.bands],
            "dprime": [float(x) for x in self.dprime_at_zeros],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def pm2_points(self):
        """All D=+-2 points (both edges of every band)."""
        return np.sort(np.concatenate([self.lefts, self.rights]))

    def b_tilde(self) -> float:
        """sup over +-2 points x of |x - z(x)|; each edge belongs to its band's zero."""
        best = 0.0
        for j, b in enumerate(self.bands):
            if j in self.hp:
                l, z, r = self.hp[j][:3]
                best = max(best, float(max(z - l, r - z)))
            else:
                best = max(best, b.zero - b.left, b.right - b.zero)
        return best


def zeros(V, q: int, edges=None) -> np.ndarray:
    """The q simple zeros of D^q, one per band."""
    return band_structure(V, q, edges=edges).zeros


def _narrow(width, scale):
    return width < _NARROW * np.maximum(1.0, scale)


def band_structure(V, q: int, edges=None, refine: str = "auto") -> DiscriminantData:
    """Bands B_{q,j} from the j-th sorted +2 and -2 edges, zeros and D' at zeros.

    ``refine``: 'auto' re-solves narrow or unbracketed bands in mpfr,
    'never' keeps the double results, 'always' refines every band.
    """
    q = int(q)
    v = _period(V, q)
    plus, minus = band_edges(v, q) if edges is None else edges
    lo = np.minimum(plus, minus)
    hi = np.maximum(plus, minus)
    z, dp, bracketed = _solve_level(v, lo, hi, 0.0)

    # zeros from H(pi/2) are an independent estimate for unbracketed bands
    if not bracketed.all():
        alt = np.sort(_eig(bloch_matrix(v, q, math.pi / 2), q, math.pi / 2))
        z = np.where(bracketed, z, alt)
        dp = kernels.trace_real(v, z)[1]

    # which side carries D=+2: D increasing through the zero means the
    # -2 edge is on the left
    plus_left = np.where(plus != minus, plus < minus, dp < 0)
    scale = np.abs(z)
    res_plus = np.abs(kernels.trace_real(v, plus)[0] - 2.0)
    res_minus = np.abs(kernels.trace_real(v, minus)[0] + 2.0)
    bad = ~bracketed | (res_plus > 0.5) | (res_minus > 0.5)
    if refine == "always":
        todo = np.ones(q, dtype=bool)
    elif refine == "never":
        todo = np.zeros(q, dtype=bool)
    else:
        todo = _narrow(hi - lo, scale) | bad

    hp = {}
    left = lo.copy()
    right = hi.copy()
    width = hi - lo
    if todo.any():
        idx = np.nonzero(todo)[0]
        l_mp, z_mp, r_mp, dp_mp, prec, ok = _highprec.refine(
            v, z[idx], dp[idx], plus_start=plus[idx], minus_start=minus[idx]
        )
        if not ok.all():
            raise BracketError("multiprecision refinement did not converge for bands %s" % idx[~ok].tolist())
        lf = _highprec.to_float(l_mp)
        rf = _highprec.to_float(r_mp)
        wf = _highprec.to_float(r_mp - l_mp)
        zf = _highprec.to_float(z_mp)
        dpf = _highprec.to_float(dp_mp)
        for n, j in enumerate(idx):
            hp[int(j)] = (l_mp[n], z_mp[n], r_mp[n], dp_mp[n], prec)
        left[idx] = lf
        right[idx] = rf
        width[idx] = wf
        z[idx] = zf
        dp[idx] = dpf
        plus_left[idx] = dpf < 0

    if np.any(~np.isfinite(z)) or (q > 1 and not np.all(np.diff(z) > 0)):
        raise BracketError("zeros not strictly increasing for q=%d" % q)
    tol = 1e-10 * np.maximum(1.0, np.abs(dp))
    resid = np.abs(kernels.trace_real(v, z)[0])
    off = np.nonzero((resid >= tol) & ~todo)[0]
    if off.size:
        raise BracketError("zero residual above tolerance in bands %s" % off.tolist())

    bands = []
    for j in range(q):
        lk, rk = ("0", "pi") if plus_left[j] else ("pi", "0")
        bands.append(Band(float(left[j]), float(right[j]), float(z[j]), float(width[j]), lk, rk))
    e_plus = np.sort(np.where(plus_left, left, right))
    e_minus = np.sort(np.where(plus_left, right, left))
    return DiscriminantData(q, z, e_plus, e_minus, bands, dp, period=v, hp=hp)


def eigenvalues_at_k(V, q: int, k: float, data: DiscriminantData | None = None) -> np.ndarray:
    """The q solutions of D^q(E) = 2cos k, one per band."""
    if not 0.0 <= k <= math.pi:
        raise ValueError("k must lie in [0, pi]")
    q = int(q)
    v = _period(V, q)
    if k == 0.0 or k == math.pi:
        plus, minus = band_edges(v, q)
        return plus if k == 0.0 else minus
    if data is None:
        data = band_structure(v, q)
    level = 2.0 * math.cos(k)
    x, _, br = _solve_level(v, data.lefts, data.rights, level)
    if not br.all():
        # bands below double resolution: linearise around the zero
        miss = ~br
        x[miss] = data.zeros[miss] + level / data.dprime_at_zeros[miss]
    return np.sort(x)


def critical_points(data: DiscriminantData) -> np.ndarray:
    return polynomial.critical_points(data.zeros)


def min_abs_disc_on_line(data: DiscriminantData, eps: float):
    """(E*, min |D(E + i eps)|) over [zeros[0]-1, zeros[-1]+1].

    Coarse grid of max(10q, 1000) points (plus the zeros themselves), then a
    golden-section search around the 20 smallest grid values that are local
    minima.  Returns the value as a float; use ``min_log_abs_disc_on_line``
    when it may overflow.
    """
    e, logv = min_log_abs_disc_on_line(data, eps)
    return e, float(np.exp(logv)) if logv < 700 else float("inf")


def min_log_abs_disc_on_line(data: DiscriminantData, eps: float):
    if not eps > 0:
        raise ValueError("eps must be positive")
    zs = np.asarray(data.zeros, dtype=np.float64)
    a, b = zs[0] - 1.0, zs[-1] + 1.0
    n = max(10 * zs.size, 1000)
    grid = np.union1d(np.linspace(a, b, n), zs)
    vals = kernels.log_abs_product(zs, grid + 1j * eps)

    def f(x):
        return float(kernels.log_abs_product(zs, np.array([x + 1j * eps]))[0])

    best_i = int(np.argmin(vals))
    best_x, best_v = float(grid[best_i]), float(vals[best_i])
    order = np.argsort(vals, kind="stable")
    tried = 0
    for i in order:
        if tried >= 20:
            break
        if i == 0 or i == grid.size - 1:
            continue
        if not (vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]):
            continue
        tried += 1
        try:
            res = optimize.minimize_scalar(
                f, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", tol=1e-12
            )
        except ValueError:
            continue
        if a <= res.x <= b and res.fun < best_v:
            best_x, best_v = float(res.x), float(res.fun)
    return best_x, best_v


def interior_fractions(n: int) -> np.ndarray:
    """n interior sample positions in (0, 1), kept off the band centre.

    For very narrow bands the zero sits at the centre to relative accuracy
    ~q/|D'|, so a centred sample would need twice the working precision.
    """
    fr = np.arange(1, n + 1) / (n + 1.0)
    if n % 2:
        fr = fr + 0.25 / (n + 1.0)
    return fr


def derivative_inequality_check(data: DiscriminantData, n_interior: int = 5):
    """Check e|D(E)/(E - z_j)| >= |D'(z_j)| >= (sqrt5+1)/b_j band by band.

    The left inequality is sampled at ``n_interior`` equally spaced interior
    points of each band, through the product over the other zeros in double
    and through the mpfr transfer product for refined bands.  Returns a list of
    violation records (empty when both sides hold everywhere).
    """
    import gmpy2

    v = data.period
    golden = math.sqrt(5.0) + 1.0
    out = []
    fr = interior_fractions(n_interior)
    plain = [j for j in range(data.q) if j not in data.hp]
    for j in range(data.q):
        b = data.bands[j]
        if j in data.hp:
            l, z, r, dpz, prec = data.hp[j]
            with _highprec.ctx(prec):
                ok = abs(dpz) * (r - l) >= golden
        else:
            ok = abs(data.dprime_at_zeros[j]) * b.width >= golden * (1 - 1e-12)
        if not ok:
            out.append({"band": j, "side": "lower", "E": b.zero, "width": b.width,
                        "dprime": float(data.dprime_at_zeros[j])})
    if plain:
        # |D(E)/(E - z_j)| = prod_{i != j}|E - z_i|: no cancellation near z_j
        for j in plain:
            b = data.bands[j]
            E = b.left + fr * b.width
            others = np.delete(data.zeros, j)
            lhs = math.e * np.exp(kernels.log_abs_product(others, E.astype(np.complex128)))
            dz = abs(data.dprime_at_zeros[j])
            for k in np.nonzero(~(lhs >= dz * (1 - 1e-9)))[0]:
                out.append({"band": j, "side": "upper", "E": float(E[k]),
                            "lhs": float(lhs[k]), "dprime": float(dz)})
    if data.hp:
        keys = sorted(data.hp)
        prec = max(data.hp[j][4] for j in keys)
        with _highprec.ctx(prec):
            pts, zs, dps, owner = [], [], [], []
            for j in keys:
                l, z, r, dpz, _ = data.hp[j]
                for f in fr:
                    pts.append(l + (r - l) * gmpy2.mpfr(float(f)))
                    zs.append(z)
                    dps.append(abs(dpz))
                    owner.append(j)
            d, _ = _highprec.trace_with_derivative(v, np.array(pts, dtype=object), prec)
            e = gmpy2.exp(1)
            for k in range(len(pts)):
                if pts[k] == zs[k]:
                    continue
                lhs = e * abs(d[k] / (pts[k] - zs[k]))
                if not lhs >= dps[k]:
                    out.append({"band": owner[k], "side": "upper", "E": float(pts[k]),
                                "lhs": float(lhs), "dprime": float(dps[k])})
    return out


def critical_values(data: DiscriminantData):
    """(critical points, D there): property 4 says |D| >= 2 at each."""
    c = polynomial.critical_points(data.zeros)
    return c, kernels.trace_real(data.period, c)[0]
