"""Band hierarchy of the Fibonacci periodic approximants and derived constants.

Level l is the spectrum sigma_l of the F_l-periodic approximant, with
F_0 = F_1 = 1.  sigma_{-1} = R and sigma_0 = [-2, 2] by convention.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _highprec, kernels
from .bounds import multiscale_hypothesis
from .clustering import Level, ScalingFamily, all_pass, check_nice_scaling, check_uniform, \
    cover_from_intervals
from .discriminant import band_structure
from .potential import fibonacci_potential

ETA = (math.sqrt(5.0) + 1.0) / 2.0
LEVEL_CAP = 25
DEFAULT_CAP = 18
CACHE_ENV = "SPECBAND_CACHE_DIR"
_CACHE_VERSION = 1


class StructureError(RuntimeError):
    """The band hierarchy violates the expected A/B structure."""


def fib(n: int) -> int:
    """F_n with F_0 = F_1 = 1."""
    if n < 0:
        raise ValueError("negative index")
    a, b = 1, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def _tol(lam, width=None):
    """Containment slack: 1e-10 (1+lambda), capped at 5% of the inner band width.

    The cap matters at depth >= 16 for lambda ~ 10, where widths drop below
    the fixed slack; the floor covers LAPACK edge error.
    """
    base = 1e-10 * (1.0 + lam)
    if width is None:
        return base
    return np.minimum(base, np.maximum(1e-13 * (1.0 + lam), 0.05 * np.asarray(width)))


def sigma_data(lam: float, ell: int, refine: str = "never", cap: int = DEFAULT_CAP):
    """DiscriminantData of the F_ell-periodic approximant (ell >= 1)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if ell < 1:
        raise ValueError("sigma_data needs ell >= 1")
    if ell > min(cap, LEVEL_CAP):
        raise ValueError("ell=%d exceeds the level cap %d" % (ell, min(cap, LEVEL_CAP)))
    q = fib(ell)
    return band_structure(fibonacci_potential(lam, q), q, refine=refine)


def sigma_bands(lam: float, ell: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Bands of sigma_ell as an (F_ell, 2) array of [left, right]."""
    if ell == 0:
        return np.array([[-2.0, 2.0]])
    d = sigma_data(lam, ell, cap=cap)
    return np.column_stack([d.lefts, d.rights])


# ---------------------------------------------------------------- hierarchy

@dataclass
class TypedBand:
    level: int
    index: int
    l: float
    r: float
    zero: float
    width: float
    band_type: str  # "A" or "B"
    parent: tuple | None  # (level, index)

    def to_dict(self):
        return {
            "l": self.l,
            "r": self.r,
            "zero": self.zero,
            "width": self.width,
            "type": self.band_type,
            "parent": None if self.parent is None else {"ell": self.parent[0], "idx": self.parent[1]},
        }


@dataclass
class FibonacciHierarchy:
    lam: float
    levels: list = field(default_factory=list)  # levels[l] = [TypedBand, ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def intervals(self, ell) -> np.ndarray:
        return np.array([[b.l, b.r] for b in self.levels[ell]])

    def zeros(self, ell) -> np.ndarray:
        return np.array([b.zero for b in self.levels[ell]])

    def children(self, ell, idx):
        """Bands whose parent link is (ell, idx), as (level, index) pairs."""
        out = []
        for lv in (ell + 1, ell + 2):
            if lv <= self.depth:
                out += [(lv, b.index) for b in self.levels[lv] if b.parent == (ell, idx)]
        return out

    def to_dict(self):
        return {
            "lambda": self.lam,
            "levels": [
                {"ell": ell, "bands": [b.to_dict() for b in bands]}
                for ell, bands in enumerate(self.levels)
            ],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d):
        h = cls(float(d["lambda"]))
        for lv in d["levels"]:
            ell = int(lv["ell"])
            bands = []
            for i, b in enumerate(lv["bands"]):
                p = b["parent"]
                bands.append(TypedBand(ell, i, b["l"], b["r"], b["zero"], b["width"], b["type"],
                                       None if p is None else (int(p["ell"]), int(p["idx"]))))
            h.levels.append(bands)
        return h


def _container(outer: np.ndarray, inner: np.ndarray, tol: float):
    """Index of the outer interval containing each inner one, -1 if none."""
    j = np.searchsorted(outer[:, 0], inner[:, 0] + tol, side="right") - 1
    jj = np.clip(j, 0, None)
    ok = (j >= 0) & (inner[:, 0] >= outer[jj, 0] - tol) & (inner[:, 1] <= outer[jj, 1] + tol)
    return np.where(ok, jj, -1)


def _cache_path(lam, L):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / ("fib_hierarchy_lam%r_L%d.json" % (float(lam), int(L)))


def build_hierarchy(lam: float, L: int, cap: int = DEFAULT_CAP, use_cache: bool = True):
    """Typed band tree for levels 0..L.

    A band of sigma_l is type A if it lies in a band of sigma_{l-1} and type B
    if it lies in a band of sigma_{l-2}; exactly one must hold.  Persisted as
    JSON under $SPECBAND_CACHE_DIR when that is set.
    """
    if not lam > 4:
        raise ValueError("the A/B hierarchy needs lambda > 4")
    if L < 1 or L > min(cap, LEVEL_CAP):
        raise ValueError("depth L=%d outside 1..%d" % (L, min(cap, LEVEL_CAP)))
    path = _cache_path(lam, L) if use_cache else None
    if path is not None and path.exists():
        d = json.loads(path.read_text())
        if d.get("version") == _CACHE_VERSION:
            return FibonacciHierarchy.from_dict(d)
    h = FibonacciHierarchy(float(lam))
    h.levels.append([TypedBand(0, 0, -2.0, 2.0, 0.0, 4.0, "A", None)])
    for ell in range(1, L + 1):
        d = sigma_data(lam, ell, cap=cap)
        iv = np.column_stack([d.lefts, d.rights])
        tol = _tol(lam, d.widths)
        in_a = _container(h.intervals(ell - 1), iv, tol)
        if ell >= 2:
            in_b = _container(h.intervals(ell - 2), iv, tol)
        else:
            in_b = np.zeros(iv.shape[0], dtype=int)  # sigma_{-1} = R
        bands = []
        for i in range(iv.shape[0]):
            a, b = in_a[i] >= 0, in_b[i] >= 0
            if a == b:
                raise StructureError(
                    "level %d band %d [%.17g, %.17g] is %s" % (
                        ell, i, iv[i, 0], iv[i, 1], "both A and B" if a else "neither A nor B")
                )
            parent = (ell - 1, int(in_a[i])) if a else ((ell - 2, int(in_b[i])) if ell >= 2 else None)
            bands.append(TypedBand(ell, i, float(iv[i, 0]), float(iv[i, 1]), float(d.zeros[i]),
                                   float(d.widths[i]), "A" if a else "B", parent))
        h.levels.append(bands)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        d = h.to_dict()
        d["version"] = _CACHE_VERSION
        path.write_text(json.dumps(d))
    return h


def check_structure(h: FibonacciHierarchy):
    """Level counts F_l and the child multiplicities of each A and B band.

    Returns a list of violation strings (empty when the structure is exact).
    """
    bad = []
    for ell, bands in enumerate(h.levels):
        if len(bands) != fib(ell):
            bad.append("level %d has %d bands, expected %d" % (ell, len(bands), fib(ell)))
    for ell in range(h.depth - 1):
        kids = {}
        for lv in (ell + 1, ell + 2):
            for b in h.levels[lv]:
                if b.parent is not None and b.parent[0] == ell:
                    kids.setdefault(b.parent[1], []).append(b)
        for b in h.levels[ell]:
            ch = kids.get(b.index, [])
            a1 = [c for c in ch if c.level == ell + 1 and c.band_type == "A"]
            b2 = [c for c in ch if c.level == ell + 2 and c.band_type == "B"]
            other = len(ch) - len(a1) - len(b2)
            if b.band_type == "A":
                ok = not a1 and len(b2) == 1 and other == 0
            else:
                ok = len(a1) == 1 and len(b2) == 2 and other == 0
                if ok:
                    # one B child on each side of the A child
                    x = a1[0].zero
                    ok = min(c.zero for c in b2) < x < max(c.zero for c in b2)
            if not ok:
                bad.append("level %d %s-band %d has children %s" % (
                    ell, b.band_type, b.index, [(c.level, c.band_type) for c in ch]))
    return bad


def count_descendants(h: FibonacciHierarchy, k: int, idx: int, m: int):
    """(count of level-m bands inside band (k, idx), closed-form value).

    The closed form is F_{m-k} for type B and F_{m-k-2} for type A (0 when
    m = k + 1).
    """
    if m > h.depth:
        raise ValueError("level %d beyond built depth %d" % (m, h.depth))
    if m < k:
        raise ValueError("m must be >= k")
    b = h.levels[k][idx]
    iv = h.intervals(m)
    tol = _tol(h.lam, iv[:, 1] - iv[:, 0])
    n = int(np.sum((iv[:, 0] >= b.l - tol) & (iv[:, 1] <= b.r + tol)))
    if b.band_type == "B":
        expect = fib(m - k)
    elif m == k:
        expect = 1
    elif m == k + 1:
        expect = 0
    else:
        expect = fib(m - k - 2)
    return n, expect


def descendant_table(h: FibonacciHierarchy):
    """All (k, idx, m, count, expected) with m > k, vectorised per level pair."""
    rows = []
    for k in range(h.depth):
        par = h.intervals(k)
        types = [b.band_type for b in h.levels[k]]
        for m in range(k + 1, h.depth + 1):
            ch = h.intervals(m)
            tol = float(np.min(_tol(h.lam, ch[:, 1] - ch[:, 0])))
            lo = np.searchsorted(ch[:, 0], par[:, 0] - tol, side="left")
            hi = np.searchsorted(ch[:, 1], par[:, 1] + tol, side="right")
            cnt = np.maximum(hi - lo, 0)
            for i, t in enumerate(types):
                if t == "B":
                    e = fib(m - k)
                else:
                    e = 0 if m == k + 1 else fib(m - k - 2)
                rows.append((k, i, m, int(cnt[i]), e))
    return rows


def cover_Um(h: FibonacciHierarchy, m: int, check_levels=None) -> np.ndarray:
    """Bands of sigma_m plus the type-B bands of sigma_{m+1}, sorted.

    Coverage of the zeros of D^{F_k} is asserted for every k in
    ``check_levels`` (default m..depth); an orphan raises StructureError.
    """
    if m + 1 > h.depth:
        raise ValueError("cover_Um(%d) needs depth >= %d" % (m, m + 1))
    ivs = [h.intervals(m)]
    bb = [[b.l, b.r] for b in h.levels[m + 1] if b.band_type == "B"]
    if bb:
        ivs.append(np.array(bb))
    iv = np.concatenate(ivs)
    iv = iv[np.argsort(iv[:, 0], kind="stable")]
    if iv.shape[0] > 1 and np.any(iv[1:, 0] <= iv[:-1, 1]):
        i = int(np.nonzero(iv[1:, 0] <= iv[:-1, 1])[0][0])
        raise StructureError("U~_%d intervals %d and %d overlap" % (m, i, i + 1))
    levels = range(m, h.depth + 1) if check_levels is None else check_levels
    for k in levels:
        z = h.zeros(k)
        tol = _tol(h.lam, np.array([b.width for b in h.levels[k]]))
        j = np.searchsorted(iv[:, 0], z + tol, side="right") - 1
        jj = np.clip(j, 0, None)
        ok = (j >= 0) & (z >= iv[jj, 0] - tol) & (z <= iv[jj, 1] + tol)
        if not ok.all():
            raise StructureError("zero %.17g of D^{F_%d} is not covered by U~_%d" % (z[~ok][0], k, m))
    return iv


# ---------------------------------------------------------------- constants

@dataclass(frozen=True)
class FibConstants:
    lam: float
    eta: float
    zeta: float
    r: float
    omega: float
    mu_prime: float
    prefactor: float
    alpha_bound: float
    applicable: bool  # lambda > 8

    def eps(self, m):
        """eps_m = 4e zeta^{-m/2}."""
        return 4 * math.e * self.zeta ** (-m / 2.0)

    def to_dict(self):
        return {k: getattr(self, k) for k in
                ("lam", "eta", "zeta", "r", "omega", "mu_prime", "prefactor", "alpha_bound",
                 "applicable")}


def zeta_of(lam: float) -> float:
    disc = (lam - 4.0) ** 2 - 12.0
    if disc < 0:
        return float("nan")
    return (lam - 4.0 + math.sqrt(disc)) / 2.0


def fib_constants(lam: float) -> FibConstants:
    if not lam > 4:
        raise ValueError("constants need lambda > 4")
    zeta = zeta_of(lam)
    r = 2 * lam + 22
    ok = lam > 8
    if zeta > 1:
        lz = math.log(zeta)
        omega = 2 * math.log(ETA) / lz
        mu = 2 * math.log(r) / lz
        pref = (3 * math.log(r) - math.log(zeta * ETA)) / math.log(r * ETA)
        alpha = pref * omega
    else:
        omega = mu = pref = alpha = float("nan")
    return FibConstants(float(lam), ETA, zeta, r, omega, mu, pref, alpha, ok)


def admissible_t(c: FibConstants):
    """(omega, (mu'-omega)/(3mu'-2-omega)) and whether it is nonempty."""
    lo = c.omega
    hi = (c.mu_prime - c.omega) / (3 * c.mu_prime - 2 - c.omega)
    return lo, hi, bool(c.applicable and lo < hi)


def length_sandwich(h: FibonacciHierarchy, c: FibConstants | None = None, m_min: int = 3):
    """Band lengths at level m against [C eps_m^mu, eps_m].

    mu is the least-squares slope of log(min length) on log eps_m over levels
    m_min+1..depth (eps_m is close to 1 at the first levels, where the ratio
    of logs is meaningless); C is then the largest constant that works.
    """
    c = c or fib_constants(h.lam)
    ms = np.arange(m_min, h.depth + 1)
    if ms.size < 3:
        raise ValueError("need at least three levels from m=%d" % m_min)
    log_eps = np.array([math.log(c.eps(m)) for m in ms])
    w = [h.intervals(m)[:, 1] - h.intervals(m)[:, 0] for m in ms]
    log_min = np.log([x.min() for x in w])
    ratio_max = np.array([x.max() for x in w]) / np.exp(log_eps)
    mu_fit = float(np.polyfit(log_eps[1:], log_min[1:], 1)[0])
    C_fit = float(np.exp(np.min(log_min - mu_fit * log_eps)))
    bound = c.mu_prime + 0.5
    return {
        "levels": ms.tolist(),
        "max_len_over_eps": ratio_max.tolist(),
        "upper_ok": bool(np.all(ratio_max <= 1.0)),
        "mu_fit": mu_fit,
        "C_fit": C_fit,
        "mu_bound": bound,
        "lower_ok": bool(C_fit > 0 and mu_fit <= bound),
    }


def verify_derivative_bounds(lam: float, k: int):
    """|(D^{F_k})'| at all zeros and band edges of sigma_k against zeta^{k/2}.

    Also fits the smallest C with max |D'| <= C (2 lambda + 22)^k.
    """
    c = fib_constants(lam)
    d = sigma_data(lam, k, refine="auto")
    v = d.period
    pts = np.concatenate([d.zeros, d.lefts, d.rights])
    absd = np.abs(kernels.trace_real(v, pts)[1])
    # narrow bands: derivatives from the mpfr edges and zeros
    for j, (l, z, r, dpz, prec) in d.hp.items():
        _, dps = _highprec.trace_with_derivative(v, np.array([z, l, r], dtype=object), prec)
        vals = np.abs(_highprec.to_float(dps))
        absd[j], absd[d.q + j], absd[2 * d.q + j] = vals
    lower = c.zeta ** (k / 2.0)
    viol = [{"E": float(pts[i]), "abs_dprime": float(absd[i])}
            for i in np.nonzero(~(absd >= lower))[0]] if k >= 3 else []
    return {
        "lambda": float(lam),
        "k": int(k),
        "q": d.q,
        "points": int(pts.size),
        "min_abs_dprime": float(np.min(absd)),
        "lower_bound": lower,
        "lower_ok": not viol,
        "violations": viol,
        "max_abs_dprime": float(np.max(absd)),
        "C_fit": float(np.max(absd) / c.r**k),
    }


# ---------------------------------------------------------------- pipeline

def fib_cluster_pipeline(lam: float, t: float, ell_range, h: FibonacciHierarchy | None = None,
                         mu: float | None = None, zeta_margin: float = 1e-3):
    """Clustering chain for the Fibonacci zero sets at levels ell_range.

    Structural failures (uncovered zeros, broken hierarchy) raise.  Failed
    numerical conditions are reported, including an inadmissible t.
    """
    c = fib_constants(lam)
    ells = [int(x) for x in ell_range]
    L = max(ells)
    if h is None:
        h = build_hierarchy(lam, L)
    if h.depth < L:
        raise ValueError("hierarchy depth %d < %d" % (h.depth, L))
    lo, hi, nonempty = admissible_t(c)
    if mu is None:
        mu = c.mu_prime + 0.05
    rows, seq = [], []
    for ell in ells:
        m = int(math.floor(t * ell))
        if m < 1 or ell - m - 2 < 0:
            raise ValueError("level %d gives m=%d outside the usable range" % (ell, m))
        q = fib(ell)
        eps = c.eps(m)
        alpha = -math.log(q) / math.log(eps)
        xi = math.log(fib(ell - m - 2)) / math.log(q)
        iv = cover_Um(h, m, check_levels=[ell])
        cov = cover_from_intervals(h.zeros(ell), iv, eps=eps, provenance="U~_%d" % m)
        seq.append(Level(q, cov, alpha, xi, label=ell))
        rows.append({"ell": ell, "q": q, "m": m, "eps": eps, "alpha": alpha, "xi": xi,
                     "cover_xi": cov.xi, "cover_xi_bar": cov.xi_bar, "k": cov.k,
                     "min_count": int(cov.occupancy.min()), "F_l_m_2": fib(ell - m - 2)})
    uniform = check_uniform(seq, mu)
    ms = sorted({r["m"] for r in rows})
    if len(ms) < 2:
        ms = [ms[0], ms[0] + 1]
    ms = list(range(ms[0], ms[-1] + 1))
    fam = ScalingFamily([(c.eps(m), cover_Um(h, m, check_levels=[])) for m in ms],
                        mu=mu, omega=c.omega, labels=ms)
    nice = check_nice_scaling(fam)
    hyp = multiscale_hypothesis([(r["alpha"], r["xi"]) for r in rows], mu, c.omega, zeta_margin) \
        if c.omega < 1 else [False] * len(rows)
    chain = nonempty and lo < t < hi and all_pass(uniform) and all_pass(nice) and all(hyp)
    return {
        "lambda": float(lam),
        "t": t,
        "admissible_t": [lo, hi],
        "t_admissible": bool(nonempty and lo < t < hi),
        "mu": mu,
        "omega": c.omega,
        "zeta_margin": zeta_margin,
        "levels": rows,
        "uniform": uniform,
        "nice_scaling": nice,
        "hypothesis": hyp,
        "chain_holds": bool(chain),
        "conclusion": ("alpha_u^+ <= %.6f" % c.alpha_bound) if chain else None,
    }
