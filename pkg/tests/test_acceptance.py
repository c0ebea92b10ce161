"""Acceptance criteria 1-12, each at its stated tolerance, one verdict line per criterion."""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.integrate import quad_vec, simpson

from specband import bounds as B
from specband import dynamics as Dy
from specband import fibonacci as F
from specband.clustering import cover_from_intervals, greedy_cover
from specband.discriminant import band_structure, derivative_inequality_check, discriminant_eval
from specband.fibonacci import fib
from specband.potential import Potential, fibonacci_potential, periodize

SEED = 20240611


@pytest.fixture(scope="module")
def random_ensemble():
    """50 potentials with sup-norm <= 2 for each q in {10, 50, 200}, with timing."""
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    out = []
    for q in (10, 50, 200):
        for _ in range(50):
            v = rng.uniform(-2, 2, q)
            out.append((q, band_structure(v, q)))
    return out, time.perf_counter() - t0


def test_criterion_01_free_closed_forms(record_criterion):
    t0 = time.perf_counter()
    worst_z = worst_d = 0.0
    for q in range(2, 65):
        d = band_structure(np.zeros(q), q)
        j = np.arange(1, q + 1)
        ref = np.sort(2 * np.cos((2 * j - 1) * np.pi / (2 * q)))
        worst_z = max(worst_z, float(np.max(np.abs(d.zeros - ref))))
        E = np.linspace(-2, 2, 100)
        D = discriminant_eval(np.zeros(q), q, E)
        worst_d = max(worst_d, float(np.max(np.abs(D - 2 * np.cos(q * np.arccos(E / 2))))))
    dt = time.perf_counter() - t0
    ok = worst_z <= 1e-9 and worst_d <= 1e-9 and dt < 10
    record_criterion(1, ok, "max zero err %.1e, max D err %.1e, %.1f s" % (worst_z, worst_d, dt))
    assert ok


def test_criterion_02_width_bound(record_criterion, random_ensemble):
    ens, dt = random_ensemble
    viol = sum(int(np.sum(d.widths > 2 * math.pi / q)) for q, d in ens)
    worst = max(float(np.max(d.widths) * q / (2 * math.pi)) for q, d in ens)
    ok = viol == 0 and dt < 120
    record_criterion(2, ok, "%d potentials, violations %d, max width*q/2pi %.4f, %.1f s"
                     % (len(ens), viol, worst, dt))
    assert ok


def test_criterion_03_derivative_double_inequality(record_criterion, random_ensemble):
    ens, _ = random_ensemble
    viol = []
    for q, d in ens:
        viol += derivative_inequality_check(d, 5)
    checked = sum(q * 6 for q, _ in ens)
    ok = not viol
    record_criterion(3, ok, "%d zero/interior checks, violations %d" % (checked, len(viol)))
    assert ok, viol[:3]


def test_criterion_04_oracle_consistency(record_criterion):
    t0 = time.perf_counter()
    # normalization over a spread of potentials, sizes and geometries
    rng = np.random.default_rng(SEED)
    worst_norm = 0.0
    for _ in range(20):
        N = int(rng.integers(10, 400)) | 1
        V = Potential(rng.uniform(-3, 3, 50), "periodic", 50)
        for geom in ("half", "full"):
            p = Dy.evolve_profile(V, float(rng.uniform(0.5, 50)), N, geom)
            worst_norm = max(worst_norm, abs(p.total - 1))
    # time quadrature, V = 0, N = 60, T = 5
    N, T = 60, 5.0
    H = np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
    E, U = np.linalg.eigh(H)
    t = np.arange(0, 20 * T + 1e-12, T / 200)
    amp = U @ (np.exp(-1j * np.outer(E, t)) * U[0][:, None])
    ref = simpson(np.abs(amp) ** 2 * np.exp(-2 * t / T) * (2 / T), x=t, axis=1)
    prof = Dy.evolve_profile(np.zeros(N), T, N)
    sites = rng.choice(N, 10, replace=False)
    err_time = float(np.max(np.abs(prof.a[sites] - ref[sites])))
    # resolvent (Parseval) route, N = 40
    N, T = 40, 3.0
    d = rng.uniform(-2, 2, N)
    H = np.diag(d) + np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)
    e1 = np.zeros(N)
    e1[0] = 1.0
    val, _ = quad_vec(lambda x: np.abs(np.linalg.solve(H - (x + 1j / T) * np.eye(N), e1)) ** 2,
                      -np.inf, np.inf, epsabs=1e-11, epsrel=1e-11)
    err_res = float(np.max(np.abs(Dy.evolve_profile(d, T, N).a - val / (math.pi * T))))
    dt = time.perf_counter() - t0
    ok = worst_norm < 1e-8 and err_time < 1e-6 and err_res < 1e-6 and dt < 300
    record_criterion(4, ok, "norm %.1e, time quadrature %.1e, Parseval %.1e, %.1f s"
                     % (worst_norm, err_time, err_res, dt))
    assert ok


def _central_triples():
    rng = np.random.default_rng(SEED + 5)
    out = []
    for i in range(20):
        q = int(rng.integers(2, 61))
        T = float(rng.uniform(1, 20))
        if i % 2 == 0:
            base = Potential(rng.uniform(-2, 2, q))
            label = "random periodic"
        else:
            lam = float(rng.choice([2.0, 5.0, 10.0]))
            base = fibonacci_potential(lam, q)
            label = "Fibonacci %g" % lam
        out.append((periodize(base, q, q), q, T, label))
    return out


def test_criterion_05_central_inequality(record_criterion):
    viol, ratios = [], []
    for V, q, T, label in _central_triples():
        N = q + int(40 * T) + 200
        P = Dy.p_tail_resolvent(V, T, q, N)
        rep = B.central_bound(band_structure(V.values, q), V.sup_norm, T)
        if not math.log(P) <= rep.log_value:
            viol.append((label, q, T, P, rep.log_value))
        ratios.append(rep.log_value - math.log(P))
    ok = not viol
    record_criterion(5, ok, "20 triples, violations %d, min log(bound/P) %.2f" % (len(viol), min(ratios)))
    assert ok, viol


def _dominance(ctx, eps, E, phi=None):
    direct = ctx.direct_log_abs_sq(E, eps)
    if phi is None:
        v, reg = B.lemma31_values(ctx, eps, E)
    else:
        v, reg = B.lemma32_values(ctx, eps, phi, E)
    use = ctx.cover_valid(eps) & ((reg == "A") | ctx.level_point_near(E))
    bad = use & (v > direct + 1e-9 * np.abs(direct))
    return int(use.sum()), int(bad.sum())


def test_criterion_06_lemma_dominance(record_criterion):
    rng = np.random.default_rng(SEED + 6)
    evals = viol = 0
    # free discriminants: bands touch, so covers come from the zeros
    for q in range(1, 35):
        d = band_structure(np.zeros(q), q)
        edges = np.concatenate([d.lefts, d.rights])
        E = np.linspace(-2.5, 2.5, 100)
        for eps in (0.01, 0.1, 0.5):
            ctx = B.PolyContext(d.zeros, greedy_cover(d.zeros, eps), d.dprime_at_zeros, d.b_tilde(),
                                level_pts=edges)
            for phi in (None, 0.5):
                if phi is None or all(ok for _, ok in B.lemma32_hypotheses(eps, phi)):
                    n, b = _dominance(ctx, eps, E, phi)
                    evals, viol = evals + n, viol + b
    # Fibonacci discriminants covered by their own bands
    for lam in (5.0, 10.0):
        for ell in range(2, 9):
            q = fib(ell)
            d = band_structure(fibonacci_potential(lam, q), q)
            iv = np.column_stack([d.lefts, d.rights])
            eps = float(np.max(d.widths))
            cov = cover_from_intervals(d.zeros, iv, eps)
            ctx = B.PolyContext(d.zeros, cov, d.dprime_at_zeros, d.b_tilde(),
                                level_pts=np.concatenate([d.lefts, d.rights]))
            E = rng.uniform(d.lefts[0] - 0.5, d.rights[-1] + 0.5, 100)
            for phi in (None, 0.5):
                if phi is None or all(ok for _, ok in B.lemma32_hypotheses(eps, phi)):
                    n, b = _dominance(ctx, eps, E, phi)
                    evals, viol = evals + n, viol + b
    # synthetic clustered zero sets
    for _ in range(20):
        k = int(rng.integers(2, 25))
        centres = np.sort(rng.uniform(-2, 2, k))
        z = np.unique(np.concatenate([c + rng.uniform(-1e-3, 1e-3, 4) for c in centres]))
        eps = 2.5e-3
        ctx = B.PolyContext(z, greedy_cover(z, eps))
        E = rng.uniform(z[0] - 0.2, z[-1] + 0.2, 100)
        for phi in (None, 0.5):
            n, b = _dominance(ctx, eps, E, phi)
            evals, viol = evals + n, viol + b
    ok = viol == 0 and evals > 0
    record_criterion(6, ok, "%d applicable evaluations, violations %d" % (evals, viol))
    assert ok


def test_criterion_07_full_line_reduction(record_criterion):
    viol, rows = 0, []
    for lam in (5.0, 10.0):
        V = fibonacci_potential(lam, 3000)
        for q in (20, 40):
            for T in (5.0, 10.0):
                N = Dy.required_size(q, T)
                pf = Dy.p_tail_resolvent(V, T, q, 2 * N + 1, "full")
                pp = Dy.p_tail_resolvent(V, T, q, N)
                pm = Dy.p_tail_resolvent(V, T, q, N, side=-1)
                rhs = B.full_line_bound(pp, pm, T)
                viol += not pf <= rhs
                rows.append(pf / rhs if rhs > 0 else math.inf)
    ok = viol == 0
    record_criterion(7, ok, "8 cases, violations %d, max P0/(T^2(P+ + P-)) %.3g" % (viol, max(rows)))
    assert ok


def test_criterion_08_hierarchy(record_criterion):
    t0 = time.perf_counter()
    h = F.build_hierarchy(10.0, 12, use_cache=False)  # raises unless typing is total and exclusive
    counts_ok = [len(lv) for lv in h.levels] == [fib(n) for n in range(13)]
    struct = F.check_structure(h)
    rows = F.descendant_table(h)
    bad = [r for r in rows if r[3] != r[4]]
    dt = time.perf_counter() - t0
    ok = counts_ok and not struct and not bad and dt < 600
    record_criterion(8, ok, "counts %s, child violations %d, descendant pairs %d (mismatch %d), %.1f s"
                     % ("exact" if counts_ok else "WRONG", len(struct), len(rows), len(bad), dt))
    assert ok


def test_criterion_09_derivative_lower_bound(record_criterion):
    fails = []
    for lam in (9.0, 10.0, 17.0):
        for k in range(3, 11):
            rep = F.verify_derivative_bounds(lam, k)
            if not rep["lower_ok"]:
                fails.append("lambda=%g k=%d min|D'|=%.4g < %.4g"
                             % (lam, k, rep["min_abs_dprime"], rep["lower_bound"]))
    ok = not fails
    record_criterion(9, ok, "24 (lambda, k) cells; failing: %s" % ("; ".join(fails) or "none"))
    assert ok, fails


def test_criterion_10_constants(record_criterion):
    z8 = F.zeta_of(8.0)
    a17 = F.fib_constants(17.0).alpha_bound
    pre = F.fib_constants(1e6).prefactor
    _, _, t_ok = F.admissible_t(F.fib_constants(17.0))
    parts = {"zeta(8) == 3": z8 == 3.0, "alpha(17) < 1": a17 < 1,
             "|prefactor(1e6) - 2| <= 0.05": abs(pre - 2) <= 0.05, "admissible_t(17) nonempty": t_ok}
    ok = all(parts.values())
    record_criterion(10, ok, "zeta(8)=%r, alpha(17)=%.5f, prefactor(1e6)=%.6f, t-window %s; failing: %s"
                     % (z8, a17, pre, t_ok, [k for k, v in parts.items() if not v] or "none"))
    assert ok


def test_criterion_11_pipeline(record_criterion):
    t0 = time.perf_counter()
    h = F.build_hierarchy(10.0, 16, use_cache=False)
    out = F.fib_cluster_pipeline(10.0, 0.3, range(10, 17), h=h)  # raises on an uncovered zero
    dt = time.perf_counter() - t0
    last = out["levels"][-1]
    target_a = out["omega"] / 0.3
    parts = {
        "coverage": True,
        "|xi_16 - 0.7| < 0.05": abs(last["xi"] - 0.7) < 0.05,
        "|alpha_16 - omega/t| < 0.1": abs(last["alpha"] - target_a) < 0.1,
        "uniform (i)-(iv)": all(e["pass"] for e in out["uniform"]),
        "nice scaling (i)-(ii)": all(e["pass"] for e in out["nice_scaling"]),
        "hypothesis emitted": len(out["hypothesis"]) == 7,
        "runtime < 15 min": dt < 900,
    }
    ok = all(parts.values())
    failing = [e["condition"] for e in out["uniform"] + out["nice_scaling"] if not e["pass"]]
    record_criterion(11, ok, "xi_16=%.4f, alpha_16=%.3f (target %.3f), t admissible %s, failed checks %s, "
                     "failing: %s, %.1f s" % (last["xi"], last["alpha"], target_a, out["t_admissible"],
                                              failing, [k for k, v in parts.items() if not v] or "none", dt))
    assert ok


def test_criterion_12_transport_separation(record_criterion):
    V = fibonacci_potential(10.0, Dy.MAX_N)
    beta, _ = Dy.exponent_scan(V, [0.2, 0.9], [64.0])
    b2, b9 = float(beta[0, 0]), float(beta[1, 0])
    ok = b9 < b2 - 0.3
    record_criterion(12, ok, "beta(0.2, 64)=%.4f, beta(0.9, 64)=%.4f" % (b2, b9))
    assert ok
