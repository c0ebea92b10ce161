"""Single-scale covers, uniform multiscale clustering and nice scaling checks."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DELTA_FLOOR = 1e-3
_XI_RTOL = 1e-12


def _exponent(count, q):
    if q <= 1:
        return 1.0
    return math.log(count) / math.log(q)


@dataclass(frozen=True)
class ClusterCover:
    """Disjoint closed intervals covering a point set, with occupancy counts."""

    eps: float
    intervals: np.ndarray  # shape (k, 2), sorted, disjoint
    occupancy: np.ndarray  # points per interval
    provenance: str = "greedy"

    @property
    def q(self) -> int:
        return int(np.sum(self.occupancy))

    @property
    def k(self) -> int:
        return int(len(self.occupancy))

    @property
    def xi(self) -> float:
        return _exponent(int(np.min(self.occupancy)), self.q)

    @property
    def xi_bar(self) -> float:
        return _exponent(int(np.max(self.occupancy)), self.q)

    @property
    def lengths(self) -> np.ndarray:
        return self.intervals[:, 1] - self.intervals[:, 0]

    def validate(self):
        iv = self.intervals
        if np.any(iv[:, 1] < iv[:, 0]):
            raise ValueError("interval with right < left")
        if np.any(self.lengths > self.eps * (1 + 1e-12)):
            raise ValueError("interval longer than eps")
        if len(iv) > 1 and np.any(iv[1:, 0] <= iv[:-1, 1]):
            i = int(np.nonzero(iv[1:, 0] <= iv[:-1, 1])[0][0])
            raise ValueError("intervals %d and %d overlap or are unsorted" % (i, i + 1))
        if np.any(self.occupancy < 1):
            raise ValueError("empty interval in cover")
        return self

    def to_dict(self):
        return {
            "eps": self.eps,
            "q": self.q,
            "xi": self.xi,
            "xi_bar": self.xi_bar,
            "intervals": [
                {"l": float(a), "r": float(b), "count": int(c)}
                for (a, b), c in zip(self.intervals, self.occupancy)
            ],
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _points(points):
    p = np.asarray(points, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("empty point set")
    if p.size > 1 and np.any(np.diff(p) < 0):
        raise ValueError("points must be sorted")
    return p


def greedy_cover(points, eps: float) -> ClusterCover:
    """Left-to-right grouping: a group absorbs points while its diameter stays <= eps."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    p = _points(points)
    starts = []
    i = 0
    n = p.size
    while i < n:
        starts.append(i)
        # last index whose point is within eps of p[i]
        i = int(np.searchsorted(p, p[i] + eps, side="right"))
    starts = np.array(starts)
    ends = np.append(starts[1:], n) - 1
    iv = np.column_stack([p[starts], p[ends]])
    return ClusterCover(float(eps), iv, (ends - starts + 1).astype(int), "greedy")


def dp_cover(points, eps: float) -> ClusterCover:
    """Exact max-min-occupancy cover by contiguous groups of diameter <= eps.

    O(q^2); intended as a test oracle for q <= 64.  Ties prefer fewer groups.
    """
    p = _points(points)
    n = p.size
    best = [(-1, 0)] * (n + 1)  # (min occupancy, -group count)
    back = [0] * (n + 1)
    best[0] = (n + 1, 0)
    for i in range(1, n + 1):
        cand = None
        for j in range(i - 1, -1, -1):
            if p[i - 1] - p[j] > eps:
                break
            val = (min(best[j][0], i - j), best[j][1] - 1)
            if cand is None or val > cand:
                cand, back[i] = val, j
        best[i] = cand
    cuts = []
    i = n
    while i > 0:
        cuts.append((back[i], i))
        i = back[i]
    cuts.reverse()
    iv = np.array([[p[a], p[b - 1]] for a, b in cuts])
    occ = np.array([b - a for a, b in cuts], dtype=int)
    return ClusterCover(float(eps), iv, occ, "dp")


def check_clustered(points, eps: float, xi_target: float):
    """(min occupancy of the greedy cover >= q^xi_target, witness cover)."""
    cov = greedy_cover(points, eps)
    need = cov.q ** xi_target
    return bool(np.min(cov.occupancy) >= need * (1 - _XI_RTOL)), cov


def cover_from_intervals(points, intervals, eps: float | None = None, provenance="supplied"):
    """Occupancy of a supplied family of closed intervals.

    Every point must land in exactly one interval; orphans raise with the
    offending value.  ``eps`` defaults to the longest interval.
    """
    p = _points(points)
    iv = np.asarray(intervals, dtype=np.float64).reshape(-1, 2)
    iv = iv[np.argsort(iv[:, 0], kind="stable")]
    if eps is None:
        eps = float(np.max(iv[:, 1] - iv[:, 0]))
    j = np.searchsorted(iv[:, 0], p, side="right") - 1
    inside = (j >= 0) & (p <= iv[np.clip(j, 0, None), 1])
    if not inside.all():
        bad = p[~inside][0]
        raise ValueError("point %.17g is not covered by any interval" % bad)
    occ = np.bincount(j, minlength=len(iv)).astype(int)
    return ClusterCover(float(eps), iv, occ, provenance).validate()


def extend_to_level_points(cover: ClusterCover, level_points):
    """Stretch intervals that hold no level point toward the nearest one.

    Used to turn a zero cover into an eps-covered witness (each interval
    must also contain a point where |Q| = 2).  Extensions keep length <= eps
    and disjointness; returns (cover, all_contain_level_point).
    """
    lp = np.sort(np.asarray(level_points, dtype=np.float64))
    iv = cover.intervals.copy()
    k = len(iv)
    ok = np.ones(k, dtype=bool)
    for i in range(k):
        a, b = iv[i]
        lo_i = np.searchsorted(lp, a, side="left")
        if lo_i < lp.size and lp[lo_i] <= b:
            continue
        left_nb = iv[i - 1, 1] if i > 0 else -np.inf
        right_nb = iv[i + 1, 0] if i + 1 < k else np.inf
        opts = []
        if lo_i > 0:
            x = lp[lo_i - 1]
            if x > left_nb and b - x <= cover.eps:
                opts.append((a - x, x, b))
        if lo_i < lp.size:
            x = lp[lo_i]
            if x < right_nb and x - a <= cover.eps:
                opts.append((x - b, a, x))
        if opts:
            _, na, nb = min(opts)
            iv[i] = (na, nb)
        else:
            ok[i] = False
    out = ClusterCover(cover.eps, iv, cover.occupancy.copy(), cover.provenance + "+level")
    return out.validate(), bool(ok.all())


# ------------------------------------------------------------ multiscale checks

def _entry(name, ok, worst=None, witness=None):
    return {"condition": name, "pass": bool(ok), "worst_level": worst, "witness": witness or {}}


@dataclass
class Level:
    """One scale of a uniformly clustered sequence."""

    q: int
    cover: ClusterCover
    alpha: float
    xi: float | None = None  # defaults to the cover's own exponent
    label: object = None

    @property
    def eps(self):
        return float(self.q) ** (-1.0 / self.alpha)


def check_uniform(seq, mu: float, C1: float | None = None, C2: float | None = None):
    """Conditions (i)-(iv) of uniform clustering on a finite sequence.

    Unset constants are fitted from the data and reported in the witness.
    Returns a list of {condition, pass, worst_level, witness} entries; the
    first entry checks that each cover is (eps_l, xi_l)-clustered.
    """
    seq = [s if isinstance(s, Level) else Level(*s) for s in seq]
    if not seq:
        raise ValueError("empty sequence")
    labels = [s.label if s.label is not None else i for i, s in enumerate(seq)]
    for s, lab in zip(seq, labels):
        if not math.isclose(s.cover.eps, s.eps, rel_tol=1e-9):
            raise ValueError(
                "level %s: cover eps %.6g does not match q^(-1/alpha) = %.6g" % (lab, s.cover.eps, s.eps)
            )
    xis = np.array([s.xi if s.xi is not None else s.cover.xi for s in seq])
    alphas = np.array([s.alpha for s in seq])
    qs = np.array([s.q for s in seq], dtype=float)
    report = []

    # each cover is a valid witness at its own (eps, xi)
    worst, ok = None, True
    for s, x, lab in zip(seq, xis, labels):
        good = np.min(s.cover.occupancy) >= s.q ** x * (1 - _XI_RTOL) and np.all(
            s.cover.lengths <= s.eps * (1 + 1e-12)
        )
        if not good and ok:
            ok, worst = False, lab
    report.append(_entry("clustered", ok, worst))

    eps = np.array([s.eps for s in seq])
    dec = np.diff(eps) < 0
    worst = None if dec.all() else labels[int(np.nonzero(~dec)[0][0]) + 1]
    report.append(_entry("(i) scale monotonicity", dec.all(), worst, {"eps": eps.tolist()}))

    minlen = np.array([np.min(s.cover.lengths) for s in seq])
    floor = qs ** (-mu / alphas)
    ratios = minlen / floor
    c1_fit = float(np.min(ratios))
    i_w = int(np.argmin(ratios))
    ok = c1_fit > 0 and (C1 is None or c1_fit >= C1 * (1 - 1e-12))
    report.append(
        _entry("(ii) interval length floor", ok, labels[i_w], {"mu": mu, "C1": C1, "C1_fit": c1_fit})
    )

    parts = np.column_stack([xis, 1 - xis, alphas, 1 - alphas])
    delta = float(np.min(parts))
    i_w = int(np.argmin(np.min(parts, axis=1)))
    report.append(
        _entry("(iii) exponent window", delta > DELTA_FLOOR, labels[i_w], {"delta": max(delta, 0.0)})
    )

    xibar = np.array([s.cover.xi_bar for s in seq])
    gap = (xibar - xis) * np.log(qs)
    c2_fit = float(np.max(gap))
    i_w = int(np.argmax(gap))
    ok = math.isfinite(c2_fit) and (C2 is None or c2_fit <= C2 * (1 + 1e-12))
    report.append(_entry("(iv) occupancy spread", ok, labels[i_w], {"C2": C2, "C2_fit": c2_fit}))
    return report


@dataclass
class ScalingFamily:
    """Anchor levels (eps_l, intervals) of a candidate nicely scaling family."""

    levels: list  # [(eps, array (k, 2)), ...]
    mu: float | None = None
    omega: float | None = None
    C1: float | None = None
    C3: float | None = None
    labels: list = field(default_factory=list)


def _sorted_disjoint(iv, lab):
    iv = np.asarray(iv, dtype=np.float64).reshape(-1, 2)
    if len(iv) > 1:
        if np.any(np.diff(iv[:, 0]) < 0):
            i = int(np.nonzero(np.diff(iv[:, 0]) < 0)[0][0])
            raise ValueError("level %s: intervals %d, %d unsorted" % (lab, i, i + 1))
        ov = iv[1:, 0] <= iv[:-1, 1]
        if ov.any():
            i = int(np.nonzero(ov)[0][0])
            raise ValueError("level %s: intervals %d and %d overlap" % (lab, i, i + 1))
    return iv


def check_nice_scaling(fam: ScalingFamily, tol: float = 1e-12):
    """Length sandwich, nesting (i) and child counts (ii) over all level pairs.

    Also fits the smallest exponents that hold with unit constants:
    mu_fit = max log|I| / log eps and omega_fit = max log N / log(eps1/eps2).
    """
    if len(fam.levels) < 2:
        raise ValueError("need at least two levels")
    labels = fam.labels or list(range(len(fam.levels)))
    eps = np.array([float(e) for e, _ in fam.levels])
    ivs = [_sorted_disjoint(iv, lab) for (_, iv), lab in zip(fam.levels, labels)]
    report = []

    dec = np.all(np.diff(eps) < 0)
    report.append(_entry("scales decreasing", dec, None, {"eps": eps.tolist()}))

    # length sandwich
    c1_vals, mu_vals, too_long = [], [], None
    for e, iv, lab in zip(eps, ivs, labels):
        ln = iv[:, 1] - iv[:, 0]
        if np.any(ln > e * (1 + tol)) and too_long is None:
            too_long = lab
        if fam.mu is not None:
            c1_vals.append(float(np.min(ln / e ** fam.mu)))
        if e < 1:
            with np.errstate(divide="ignore"):
                mu_vals.append(float(np.max(np.log(ln) / math.log(e))))
    c1_fit = min(c1_vals) if c1_vals else None
    mu_fit = max(mu_vals) if mu_vals else None
    ok = too_long is None
    if fam.mu is not None:
        ok = ok and c1_fit > 0 and (fam.C1 is None or c1_fit >= fam.C1 * (1 - tol))
    report.append(
        _entry("length sandwich", ok, too_long,
               {"mu": fam.mu, "C1": fam.C1, "C1_fit": c1_fit, "mu_fit": mu_fit})
    )

    # (i) nesting and (ii) counts
    nest_fail = None
    c3_fit, om_fit, worst_c = 0.0, 0.0, None
    count_fail = None
    for a in range(len(ivs)):
        pa = ivs[a]
        for b in range(a + 1, len(ivs)):
            ch = ivs[b]
            slack = tol * max(1.0, float(np.max(np.abs(pa))))
            j = np.searchsorted(pa[:, 0], ch[:, 0] + slack, side="right") - 1
            jj = np.clip(j, 0, None)
            inside = (j >= 0) & (ch[:, 0] >= pa[jj, 0] - slack) & (ch[:, 1] <= pa[jj, 1] + slack)
            if not inside.all() and nest_fail is None:
                c = int(np.nonzero(~inside)[0][0])
                nest_fail = {"levels": [labels[a], labels[b]], "child": c,
                             "interval": ch[c].tolist()}
            # number of level-b intervals meeting each level-a interval
            lo = np.searchsorted(ch[:, 1], pa[:, 0], side="left")
            hi = np.searchsorted(ch[:, 0], pa[:, 1], side="right")
            n = np.maximum(hi - lo, 0)
            ratio = eps[a] / eps[b]
            if fam.omega is not None:
                c3 = float(np.max(n) / ratio ** fam.omega)
                if c3 > c3_fit:
                    c3_fit, worst_c = c3, [labels[a], labels[b]]
                if fam.C3 is not None and c3 > fam.C3 * (1 + tol) and count_fail is None:
                    count_fail = [labels[a], labels[b]]
            if ratio > 1 and np.max(n) > 0:
                om_fit = max(om_fit, math.log(np.max(n)) / math.log(ratio))
    report.append(_entry("(i) nesting", nest_fail is None,
                         nest_fail["levels"] if nest_fail else None, nest_fail))
    ok = count_fail is None
    if fam.omega is not None:
        ok = ok and 0 < fam.omega < 1
    report.append(
        _entry("(ii) child count", ok, count_fail or worst_c,
               {"omega": fam.omega, "C3": fam.C3, "C3_fit": c3_fit if fam.omega is not None else None,
                "omega_fit": om_fit})
    )
    return report


def all_pass(report) -> bool:
    return all(r["pass"] for r in report)
