"""Upper bounds on the outside probability P(q, T) and their hypotheses.

Large quantities are carried as natural logs.  A report whose hypotheses
fail has ``value = None`` and ``applicable = False``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import polynomial
from .clustering import ClusterCover, check_clustered
from .discriminant import DiscriminantData, min_log_abs_disc_on_line

GOLDEN = math.sqrt(5.0) + 1.0
C_DEFAULT = 1.0 / 8.0
_REL = 1e-12


@dataclass
class BoundReport:
    kind: str
    inputs: dict
    value: float | None
    log_scale: bool
    hypotheses: list = field(default_factory=list)  # [(name, bool)]
    notes: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def applicable(self) -> bool:
        return all(ok for _, ok in self.hypotheses)

    @property
    def log_value(self):
        if self.value is None:
            return None
        if self.log_scale:
            return self.value
        return math.log(self.value) if self.value > 0 else -math.inf

    @property
    def linear(self):
        lv = self.log_value
        if lv is None:
            return None
        return math.exp(lv) if lv < 709 else math.inf

    def to_dict(self):
        return {
            "kind": self.kind,
            "inputs": _plain(self.inputs),
            "value": self.value,
            "log_scale": self.log_scale,
            "applicable": self.applicable,
            "hypotheses": [{"name": n, "satisfied": bool(ok)} for n, ok in self.hypotheses],
            "notes": self.notes,
            "extra": _plain(self.extra),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _report(kind, inputs, value, log_scale, hyps, notes="", extra=None):
    rep = BoundReport(kind, inputs, None, log_scale, hyps, notes, extra or {})
    if rep.applicable and value is not None:
        rep.value = float(value)
    return rep


def _sup_b(data: DiscriminantData) -> float:
    return float(np.max(data.widths))


# ------------------------------------------------------------- global bounds

def thouless_bound(data: DiscriminantData, sup_norm: float, T: float) -> BoundReport:
    """(4e^2/(sqrt5+1)^2)(1+2|V|)^2 T^6 (sup_j b_j)^2."""
    b = _sup_b(data)
    val = 4 * math.e**2 / GOLDEN**2 * (1 + 2 * sup_norm) ** 2 * T**6 * b**2
    return _report(
        "thouless",
        {"q": data.q, "T": T, "sup_norm": sup_norm, "sup_b": b},
        val, False, [("T > 0", T > 0)],
    )


def central_bound(data, sup_norm: float, T: float) -> BoundReport:
    """4 T^4 (1+2|V|)^2 / inf_E |D(E + i/T)|^2, in log space.

    ``data`` may also be a bare array of zeros of a monic polynomial.
    """
    if not T > 0:
        return _report("central", {"T": T}, None, True, [("T > 0", False)])
    if not isinstance(data, DiscriminantData):
        data = _zeros_only(data)
    e_star, logmin = min_log_abs_disc_on_line(data, 1.0 / T)
    val = math.log(4.0) + 4 * math.log(T) + 2 * math.log1p(2 * sup_norm) - 2 * logmin
    return _report(
        "central",
        {"q": data.q, "T": T, "sup_norm": sup_norm},
        val, True, [("T > 0", True)],
        extra={"E_star": e_star, "log_min_abs_D": logmin},
    )


def _zeros_only(zeros):
    z = polynomial._check_zeros(zeros)
    return DiscriminantData(z.size, z, np.empty(0), np.empty(0), [], np.empty(0))


# ------------------------------------------------------- polynomial lemmas

class PolyContext:
    """Zeros of Q with the data the lemma bounds need, computed once.

    ``level_pts`` are the points where |Q| = 2; they default to a numerical
    search on the zero product and should be the band edges for Q = D^q.
    """

    def __init__(self, zeros, cover: ClusterCover, dprime_at_zeros=None, b_tilde=None,
                 level_pts=None):
        self.zeros = polynomial._check_zeros(zeros)
        self.q = self.zeros.size
        self.cover = cover
        self.crit = polynomial.critical_points(self.zeros)
        if dprime_at_zeros is None:
            _, self.log_dp = polynomial.log_abs_derivative_at_zeros(self.zeros)
        else:
            with np.errstate(divide="ignore"):
                self.log_dp = np.log(np.abs(np.asarray(dprime_at_zeros, dtype=np.float64)))
        if level_pts is None:
            level_pts, _ = polynomial.level_points(self.zeros, 2.0, self.crit)
        self.level_pts = np.sort(np.asarray(level_pts, dtype=np.float64))
        self.b_tilde = (polynomial.b_tilde(self.zeros, self.level_pts, self.crit)
                        if b_tilde is None else float(b_tilde))
        iv = cover.intervals
        k = np.searchsorted(iv[:, 0], self.zeros, side="right") - 1
        kk = np.clip(k, 0, None)
        self.covered = bool(np.all((k >= 0) & (self.zeros <= iv[kk, 1])))
        self.interval_of_zero = kk
        # #(Z cap I) per interval, counted from the zeros themselves
        self.count = np.bincount(kk, minlength=len(iv))
        lo = np.searchsorted(self.level_pts, iv[:, 0], side="left")
        hi = np.searchsorted(self.level_pts, iv[:, 1], side="right")
        self.has_level_point = hi > lo

    def cover_valid(self, eps) -> bool:
        """Every zero covered by an interval of length <= eps."""
        return bool(self.covered and np.all(self.cover.lengths <= eps * (1 + _REL)))

    def eps_covered(self, eps) -> bool:
        """cover_valid plus a |Q| = 2 point in every interval."""
        return self.cover_valid(eps) and bool(np.all(self.has_level_point))

    def level_point_near(self, E):
        """Whether I_E holds a |Q| = 2 point (needed only in the B regime)."""
        j = polynomial.zero_index(np.asarray(E, dtype=np.float64), self.zeros, self.crit)
        return self.has_level_point[self.interval_of_zero[j]]

    def locate(self, E):
        E = np.asarray(E, dtype=np.float64)
        j = polynomial.zero_index(E, self.zeros, self.crit)
        d = np.abs(E - self.zeros[j])
        n = self.count[self.interval_of_zero[j]]
        return j, d, n

    def direct_log_abs_sq(self, E, eps):
        """2 log|Q(E + i eps)| by the product over zeros."""
        z = np.asarray(E, dtype=np.float64) + 1j * eps
        return 2.0 * polynomial.log_abs(self.zeros, z)


def lemma31_values(ctx: PolyContext, eps: float, E):
    """Vectorised right-hand sides (log |Q(E+i eps)|^2 lower bounds) and regimes."""
    j, d, n = ctx.locate(E)
    a_val = 2 * (math.log(eps) + ctx.log_dp[j] - 1.0) + n * math.log(82.0 / 81.0)
    b_val = 2 * (math.log(eps) - math.log(ctx.b_tilde)) + n * math.log(9.0) - ctx.q * math.log(4.0)
    in_a = d <= 8 * eps
    return np.where(in_a, a_val, b_val), np.where(in_a, "A", "B")


def lemma32_hypotheses(eps, phi):
    return [
        ("0 < eps < 1/5", 0 < eps < 0.2),
        ("0 < phi < 1", 0 < phi < 1),
        ("eps^(phi-1) > 5", eps > 0 and eps ** (phi - 1) > 5),
    ]


def lemma32_values(ctx: PolyContext, eps: float, phi: float, E):
    j, d, n = ctx.locate(E)
    x = eps ** (1 - phi)
    a_val = 2 * (math.log(eps) + ctx.log_dp[j] - 1.0) + n * math.log1p(x * x / 4)
    b_val = (2 * (math.log(eps) - math.log(ctx.b_tilde)) + n * math.log(9.0)
             + 2 * ctx.q * math.log1p(-4 * x))
    in_a = d <= eps**phi
    return np.where(in_a, a_val, b_val), np.where(in_a, "A", "B")


def _ctx(zeros, cover, dprime_at_zeros, b_tilde, ctx):
    return ctx if ctx is not None else PolyContext(zeros, cover, dprime_at_zeros, b_tilde)


def lemma31_bound(zeros, cover: ClusterCover, eps: float, E: float, dprime_at_zeros=None,
                  b_tilde=None, ctx: PolyContext | None = None) -> BoundReport:
    """Lower bound on log|Q(E + i eps)|^2 for an eps-covered Q.

    The A-regime argument only uses the interval lengths and zero counts;
    the |Q| = 2 point in I_E is required only when E falls in the B regime.
    """
    ctx = _ctx(zeros, cover, dprime_at_zeros, b_tilde, ctx)
    hyps = [("eps > 0", eps > 0), ("cover valid at scale eps", eps > 0 and ctx.cover_valid(eps))]
    val, reg = (None, None)
    if eps > 0:
        v, r = lemma31_values(ctx, eps, np.array([E]))
        val, reg = float(v[0]), str(r[0])
        if reg == "B":
            hyps.append(("I_E contains a |Q|=2 point", bool(ctx.level_point_near(E))))
    return _report("lemma31", {"q": ctx.q, "eps": eps, "E": E, "b_tilde": ctx.b_tilde},
                   val, True, hyps, extra={"regime": reg})


def lemma32_bound(zeros, cover: ClusterCover, eps: float, phi: float, E: float,
                  dprime_at_zeros=None, b_tilde=None,
                  ctx: PolyContext | None = None) -> BoundReport:
    ctx = _ctx(zeros, cover, dprime_at_zeros, b_tilde, ctx)
    hyps = lemma32_hypotheses(eps, phi) + [
        ("cover valid at scale eps", eps > 0 and ctx.cover_valid(eps))]
    val, reg = None, None
    if all(ok for _, ok in hyps):
        v, r = lemma32_values(ctx, eps, phi, np.array([E]))
        val, reg = float(v[0]), str(r[0])
        if reg == "B":
            hyps.append(("I_E contains a |Q|=2 point", bool(ctx.level_point_near(E))))
    return _report("lemma32", {"q": ctx.q, "eps": eps, "phi": phi, "E": E,
                               "b_tilde": ctx.b_tilde},
                   val, True, hyps, extra={"regime": reg})


def default_delta(xi: float) -> float:
    """0.9 * min(3xi/2 - 1, 1 - xi); 0.9 when xi = 1."""
    if xi >= 1:
        return 0.9
    return 0.9 * min(1.5 * xi - 1.0, 1.0 - xi)


def large_q_conditions(q: int, alpha: float, xi: float, delta: float, C: float = C_DEFAULT):
    """The finitely many 'q sufficiently large' steps of the proof, at this q.

    Returned as {name: bool}; all true means q >= q0 for these (alpha, xi, delta, C).
    """
    lq = math.log(q)
    if xi >= 1:
        return {
            "A: q log(82/81) - (2/alpha) log q >= C q^delta":
                q * math.log(82 / 81) - 2 / alpha * lq >= C * q**delta,
            "B: q log(9/4) - (2/alpha) log q + 2 >= C q^delta":
                q * math.log(9 / 4) - 2 / alpha * lq + 2 >= C * q**delta,
        }
    return {
        "q^(-1/alpha) < 1/5": q ** (-1 / alpha) < 0.2,
        "q^(xi/2-delta) > 5": q ** (xi / 2 - delta) > 5,
        "4 q^(delta-xi/2) <= 1/2": 4 * q ** (delta - xi / 2) <= 0.5,
        "16 q^(1+delta-3xi/2) <= 1/2": 16 * q ** (1 + delta - 1.5 * xi) <= 0.5,
        "A: q^(2delta)/8 - C q^delta >= (2/alpha) log q":
            q ** (2 * delta) / 8 - C * q**delta >= 2 / alpha * lq,
        "B: q^xi/2 - C q^delta - (2/alpha) log q + 2 >= 0":
            q**xi / 2 - C * q**delta - 2 / alpha * lq + 2 >= 0,
    }


def lemma33_bound(zeros, cover: ClusterCover, alpha: float, xi: float, dprime_at_zeros=None,
                  b_tilde=None, C: float = C_DEFAULT, delta: float | None = None,
                  ctx: PolyContext | None = None) -> BoundReport:
    """log of (1/e^2) min(min|Q'|, 1/b~)^2 e^(C q^delta) for a (q^(-1/alpha), xi)-clustered Q.

    The proof's large-q requirements are reported in ``extra['q_ge_q0']``
    (informational); the stated hypotheses are alpha, xi and clustering.
    """
    ctx = _ctx(zeros, cover, dprime_at_zeros, b_tilde, ctx)
    q = ctx.q
    hyps = [("0 < alpha < 1", 0 < alpha < 1), ("2/3 < xi <= 1", 2 / 3 < xi <= 1)]
    if delta is None:
        delta = default_delta(xi) if hyps[1][1] else float("nan")
    eps = q ** (-1 / alpha) if alpha > 0 else float("nan")
    ok_cl = bool(
        hyps[0][1]
        and ctx.eps_covered(eps)
        and np.min(ctx.count) >= q**xi * (1 - _REL)
    )
    hyps.append(("(q^(-1/alpha), xi)-clustered", ok_cl))
    val = None
    conds = {}
    if all(ok for _, ok in hyps):
        m = min(float(np.min(ctx.log_dp)), -math.log(ctx.b_tilde))
        val = -2.0 + 2 * m + C * q**delta
        conds = large_q_conditions(q, alpha, xi, delta, C) if q > 1 else {}
    return _report(
        "lemma33",
        {"q": q, "alpha": alpha, "xi": xi, "delta": delta, "C": C, "eps": eps,
         "b_tilde": ctx.b_tilde},
        val, True, hyps,
        extra={"q_ge_q0": bool(conds) and all(conds.values()), "large_q": conds},
    )


def cluster_bound(data: DiscriminantData, sup_norm: float, T: float, alpha: float, xi: float,
                  C: float = C_DEFAULT, delta: float | None = None) -> BoundReport:
    """log[4e^2(1+2|V|)^2 T^4 (sup b)^2] - C q^delta under the clustering hypotheses."""
    q = data.q
    hyps = [
        ("T > 0", T > 0),
        ("0 < alpha < 1", 0 < alpha < 1),
        ("xi > 2/3", 2 / 3 < xi <= 1),
    ]
    eps = q ** (-1 / alpha) if alpha > 0 else float("nan")
    hyps.append(("T <= q^(1/alpha)", alpha > 0 and T <= q ** (1 / alpha) * (1 + _REL)))
    clustered, cov = (False, None)
    if alpha > 0:
        clustered, cov = check_clustered(data.zeros, eps, xi)
    hyps.append(("(q^(-1/alpha), xi)-clustered", clustered))
    if delta is None:
        delta = default_delta(xi) if 2 / 3 < xi <= 1 else float("nan")
    b = _sup_b(data)
    val = None
    extra = {}
    if all(ok for _, ok in hyps):
        val = (math.log(4.0) + 2.0 + 2 * math.log1p(2 * sup_norm) + 4 * math.log(T)
               + 2 * math.log(b) - C * q**delta)
        conds = large_q_conditions(q, alpha, xi, delta, C)
        extra = {"q_ge_q0": all(conds.values()), "large_q": conds,
                 "cover_xi": cov.xi, "cover_k": cov.k}
    return _report(
        "cluster",
        {"q": q, "T": T, "sup_norm": sup_norm, "alpha": alpha, "xi": xi, "delta": delta,
         "C": C, "eps": eps, "sup_b": b},
        val, True, hyps, extra=extra,
    )


# ------------------------------------------------------------ multiscale etc.

def multiscale_lhs(mu: float, omega: float, zeta_margin: float) -> float:
    if not mu >= 1:
        raise ValueError("mu must be >= 1")
    if not 0 < omega < 1:
        raise ValueError("omega must lie in (0, 1)")
    if omega >= mu:
        raise ValueError("omega must be < mu")
    return 2 * omega * (mu - 1) / (mu - omega) + zeta_margin


def multiscale_hypothesis(exponents, mu: float, omega: float, zeta_margin: float):
    """Per level: 2 omega (mu-1)/(mu-omega) + zeta < xi_l alpha_l.

    ``exponents`` is a sequence of (alpha_l, xi_l) pairs.
    """
    lhs = multiscale_lhs(mu, omega, zeta_margin)
    return [bool(lhs < a * x) for a, x in exponents]


def full_line_bound(p_plus: float, p_minus: float, T: float) -> float:
    """T^2 (P+ + P-)."""
    for name, p in (("p_plus", p_plus), ("p_minus", p_minus)):
        if not -1e-12 <= p <= 1 + 1e-12:
            raise ValueError("%s must lie in [0, 1]" % name)
    if not T > 0:
        raise ValueError("T must be positive")
    return T * T * (p_plus + p_minus)


def exponentially_growing(q, min_ratio: float = 1.1) -> bool:
    """Finite-data stand-in for inf q_{l+1}/q_l > 1 (sup is automatic on finite data)."""
    q = np.asarray(q, dtype=np.float64)
    return bool(q.size >= 2 and np.min(q[1:] / q[:-1]) >= min_ratio)


def exponents_from_bounds(q, bounds, alpha: float, mode: str = "polynomial",
                          eps: float | None = None, growth_factor: float = 1.2):
    """Which transport exponents the bound sequence caps at alpha.

    polynomial: least-squares slope of log bound against log q must be <= -eps.
    superpolynomial: -log bound / log q must be nondecreasing over the second
    half of the data and grow by at least ``growth_factor`` there.
    The plus-exponent conclusions also need exponential growth of q.
    """
    q = np.asarray(q, dtype=np.float64)
    b = np.asarray(bounds, dtype=np.float64)
    if q.shape != b.shape or q.size < 3:
        raise ValueError("need at least three (q, bound) pairs")
    if np.any(np.diff(q) <= 0):
        raise ValueError("q_l must be strictly increasing")
    if np.any(q <= 1):
        raise ValueError("q_l must exceed 1")
    if np.any(~(b > 0)):
        raise ValueError("bounds must be positive")
    expo = exponentially_growing(q)
    out = {"alpha": alpha, "mode": mode, "exponentially_growing": expo,
           "T": (q ** (1.0 / alpha)).tolist(), "concluded": []}
    lq, lb = np.log(q), np.log(b)
    if mode == "polynomial":
        if eps is None or not eps > 0:
            raise ValueError("polynomial mode needs eps > 0")
        slope = float(np.polyfit(lq, lb, 1)[0])
        out["slope"] = slope
        ok = slope <= -eps * (1 - 1e-9)
        out["pattern"] = bool(ok)
        if ok:
            out["concluded"].append("alpha_l^-")
            if expo:
                out["concluded"].append("alpha_l^+")
    elif mode == "superpolynomial":
        rate = -lb / lq
        tail = rate[rate.size // 2:]
        mono = bool(np.all(np.diff(tail) >= -1e-12 * np.abs(tail[1:])))
        grows = bool(tail[0] > 0 and tail[-1] >= growth_factor * tail[0])
        out["rate"] = rate.tolist()
        out["pattern"] = mono and grows
        if out["pattern"]:
            out["concluded"] += ["alpha_u^-", "alpha_l^-"]
            if expo:
                out["concluded"] += ["alpha_u^+", "alpha_l^+"]
    else:
        raise ValueError("mode must be 'polynomial' or 'superpolynomial'")
    return out
