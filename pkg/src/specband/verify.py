"""Seeded invariant suite behind ``specband verify``.

Each check returns (name, passed, detail).  The ``quick`` suite uses smaller
ensembles; ``all`` runs every check at the sizes used by the test suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import bounds, clustering, discriminant, dynamics, fibonacci, kernels, potential


def _potentials(rng, n, q):
    return [potential.Potential(rng.uniform(-2, 2, q)) for _ in range(n)]


def check_fibonacci_word(rng, big):
    lam = 3.0
    top = 20 if big else 14
    V = potential.fibonacci_potential(lam, fibonacci.fib(top)).values
    vals_ok = bool(np.all((V == 0) | (V == lam)))
    bad = [l for l in range(3, top + 1)
           if not np.array_equal(V[:fibonacci.fib(l)],
                                 np.concatenate([V[:fibonacci.fib(l - 1)], V[:fibonacci.fib(l - 2)]]))]
    return "potential: values in {0, lambda}, word substitution", vals_ok and not bad, \
        "levels 3..%d, failures %s" % (top, bad)


def check_periodize(rng, big):
    bad = 0
    for _ in range(10):
        q = int(rng.integers(1, 20))
        N = int(rng.integers(q, 200))
        V = potential.Potential(rng.normal(size=q))
        P = potential.periodize(V, q, N)
        bad += not np.array_equal(potential.periodize(P, q, N).values, P.values)
    return "potential: periodize idempotent", bad == 0, "%d failures / 10" % bad


def check_kernel_parity(rng, big):
    impl = kernels.implementations()
    if len(impl) < 2:
        return "kernels: compiled vs python parity", True, "compiled backend absent, skipped"
    v = rng.uniform(-2, 2, 50)
    E = rng.uniform(-4, 4, 200)
    z = E + 1j * rng.uniform(0.01, 1, 200)
    zs = np.sort(rng.uniform(-3, 3, 40))
    err = 0.0
    for f, args in ((kernels.trace_real, (v, E)), (kernels.trace_complex, (v, z)),
                    (kernels.log_abs_product, (zs, z)), (kernels.inverse_sum, (zs, E + 0.5))):
        a = f(*args, impl=impl["python"])
        b = f(*args, impl=impl["cython"])
        for x, y in zip(np.atleast_1d(a) if not isinstance(a, tuple) else a,
                        np.atleast_1d(b) if not isinstance(b, tuple) else b):
            x, y = np.asarray(x), np.asarray(y)
            if x.dtype == bool:
                err = max(err, float(np.any(x != y)))
                continue
            err = max(err, float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(x)))))
    return "kernels: compiled vs python parity", err < 1e-12, "max rel diff %.2e" % err


def check_free_closed_form(rng, big):
    err = 0.0
    for q in range(2, 65 if big else 17):
        d = discriminant.band_structure(potential.constant_potential(0.0, q), q)
        j = np.arange(1, q + 1)
        err = max(err, float(np.max(np.abs(np.sort(d.zeros) - np.sort(2 * np.cos((2 * j - 1) * np.pi / (2 * q)))))))
        E = np.linspace(-2, 2, 100)
        D = discriminant.discriminant_eval(d.period, q, E)
        err = max(err, float(np.max(np.abs(D - 2 * np.cos(q * np.arccos(E / 2))))))
    return "discriminant: free Laplacian closed forms", err < 1e-9, "max abs err %.2e" % err


def check_monic_and_two_path(rng, big):
    worst_monic, worst_path = 0.0, 0.0
    for V in _potentials(rng, 5, 12):
        q = 12
        d = discriminant.band_structure(V, q)
        for R in (1e3, 1e4):
            worst_monic = max(worst_monic, abs(discriminant.discriminant_eval(V, q, R) / R**q - 1))
        E = rng.uniform(-4, 4, 50)
        a = np.abs(discriminant.discriminant_eval(V, q, E))
        b = np.exp(kernels.log_abs_product(d.zeros, E.astype(np.complex128)))
        ok = a > 1e-6
        worst_path = max(worst_path, float(np.max(np.abs(a[ok] - b[ok]) / a[ok])))
    ok = worst_monic < 0.05 and worst_path < 1e-8
    return "discriminant: monic leading term, trace vs product", ok, \
        "monic %.2e, two-path %.2e" % (worst_monic, worst_path)


def check_widths_and_derivative(rng, big):
    qs = (10, 50, 200) if big else (10, 50)
    n = 10 if big else 4
    width_viol, deriv_viol, crit_viol, count_bad = 0, 0, 0, 0
    for q in qs:
        for V in _potentials(rng, n, q):
            d = discriminant.band_structure(V, q)
            width_viol += int(np.sum(d.widths > 2 * math.pi / q * (1 + 1e-12)))
            deriv_viol += len(discriminant.derivative_inequality_check(d, 5))
            _, cv = discriminant.critical_values(d)
            crit_viol += int(np.sum(np.abs(cv) < 2 * (1 - 1e-9)))
            count_bad += not (d.zeros.size == d.edges_plus.size == d.edges_minus.size == q)
    ok = width_viol == deriv_viol == crit_viol == count_bad == 0
    return "discriminant: widths <= 2pi/q, derivative bounds, |D| >= 2 at criticals", ok, \
        "violations: width %d, derivative %d, critical %d, count %d" % (
            width_viol, deriv_viol, crit_viol, count_bad)


def check_greedy_cover(rng, big):
    # count is monotone for the greedy cover; min occupancy only for the
    # optimal (DP) cover, since greedy can strand a single trailing point
    bad = 0
    for _ in range(30 if big else 10):
        pts = np.sort(rng.uniform(0, 1, int(rng.integers(2, 40))))
        eps_grid = np.sort(rng.uniform(1e-3, 0.5, 50 if big else 10))
        prev = prev_dp = None
        for eps in eps_grid:
            cov = clustering.greedy_cover(pts, eps)
            dp = clustering.dp_cover(pts, eps)
            try:
                cov.validate()
            except ValueError:
                bad += 1
            ok, _ = clustering.check_clustered(pts, eps, cov.xi)
            bad += not ok
            if prev is not None:
                bad += cov.k > prev.k or dp.occupancy.min() < prev_dp.occupancy.min()
            prev, prev_dp = cov, dp
    return "clustering: greedy validity and count, optimal occupancy monotone", bad == 0, \
        "%d failures" % bad


def check_cantor(rng, big):
    levels = []
    iv = np.array([[0.0, 1.0]])
    for _ in range(6):
        iv = np.concatenate([np.column_stack([l, l + (r - l) / 3]) for l, r in iv] +
                            [np.column_stack([r - (r - l) / 3, r]) for l, r in iv])
        iv = iv[np.argsort(iv[:, 0])]
        levels.append((float(iv[0, 1] - iv[0, 0]), iv.copy()))
    fam = clustering.ScalingFamily(levels, mu=1.0, omega=math.log(2) / math.log(3))
    rep = clustering.check_nice_scaling(fam)
    fit = {e["condition"]: e for e in rep}
    mu_fit = fit["length sandwich"]["witness"]["mu_fit"]
    om_fit = fit["(ii) child count"]["witness"]["omega_fit"]
    ok = clustering.all_pass(rep) and abs(mu_fit - 1) < 1e-12 and abs(om_fit - math.log(2) / math.log(3)) < 1e-12
    return "clustering: Cantor family scales nicely", ok, "mu_fit %.15f, omega_fit %.15f" % (mu_fit, om_fit)


def check_lemma_dominance(rng, big):
    viol, evals = 0, 0
    for _ in range(20 if big else 6):
        q = int(rng.integers(5, 60))
        centres = np.sort(rng.uniform(-2, 2, max(1, q // 4)))
        zs = np.sort(np.concatenate([c + rng.uniform(-1e-3, 1e-3, 4) for c in centres]))[:q]
        zs = np.unique(zs)
        eps = 2.5e-3
        cov = clustering.greedy_cover(zs, eps)
        ctx = bounds.PolyContext(zs, cov)
        E = rng.uniform(zs[0] - 0.2, zs[-1] + 0.2, 100)
        direct = ctx.direct_log_abs_sq(E, eps)
        v31, reg = bounds.lemma31_values(ctx, eps, E)
        use = ctx.cover_valid(eps) & ((reg == "A") | ctx.level_point_near(E))
        viol += int(np.sum(use & (v31 > direct + 1e-9 * np.abs(direct))))
        evals += int(np.sum(use))
        phi = 0.5
        if all(ok for _, ok in bounds.lemma32_hypotheses(eps, phi)):
            v32, reg = bounds.lemma32_values(ctx, eps, phi, E)
            use = ctx.cover_valid(eps) & ((reg == "A") | ctx.level_point_near(E))
            viol += int(np.sum(use & (v32 > direct + 1e-9 * np.abs(direct))))
            evals += int(np.sum(use))
    return "bounds: single-scale lemma values below direct log|Q|^2", viol == 0, \
        "%d violations / %d evaluations" % (viol, evals)


def check_shift_and_determinism(rng, big):
    worst = 0.0
    same = True
    for V in _potentials(rng, 3, 20):
        c = 0.7
        d0 = discriminant.band_structure(V, 20)
        d1 = discriminant.band_structure(potential.Potential(V.values + c), 20)
        for f in (bounds.thouless_bound, bounds.central_bound):
            a = f(d0, 2.0, 5.0)
            b = f(d1, 2.0, 5.0)
            worst = max(worst, abs(a.value - b.value) / max(abs(a.value), 1e-300))
            same &= a.to_json() == f(d0, 2.0, 5.0).to_json()
    return "bounds: shift invariance, bit-identical reports", worst < 1e-8 and same, \
        "max rel change %.2e" % worst


def check_dynamics(rng, big):
    worst_norm, worst_trunc, full_viol = 0.0, 0.0, 0
    for lam in (5.0, 10.0):
        V = potential.fibonacci_potential(lam, 2000)
        for T in (5.0, 10.0):
            N = dynamics.required_size(40, T)
            p = dynamics.evolve_profile(V, T, N)
            p2 = dynamics.evolve_profile(V, T, 2 * N)
            worst_norm = max(worst_norm, abs(p.total - 1), abs(p2.total - 1))
            worst_trunc = max(worst_trunc, abs(dynamics.p_tail(p, 40) - dynamics.p_tail(p2, 40)))
            if big:
                # tails here sit below the eigenbasis rounding floor
                for q in (20, 40):
                    pf = dynamics.p_tail_resolvent(V, T, q, 2 * N + 1, "full")
                    pp = dynamics.p_tail_resolvent(V, T, q, N)
                    pm = dynamics.p_tail_resolvent(V, T, q, N, side=-1)
                    full_viol += pf > bounds.full_line_bound(pp, pm, T)
    ok = worst_norm < 1e-8 and worst_trunc < 1e-8 and full_viol == 0
    return "dynamics: normalization, truncation stability, full-line reduction", ok, \
        "norm %.1e, doubling %.1e, full-line violations %d" % (worst_norm, worst_trunc, full_viol)


def check_hierarchy(rng, big):
    L = 12 if big else 9
    h = fibonacci.build_hierarchy(10.0, L, use_cache=False)
    bad = fibonacci.check_structure(h)
    mism = [r for r in fibonacci.descendant_table(h) if r[3] != r[4]]
    ok = not bad and not mism
    return "fibonacci: level counts, A/B typing, descendant counts", ok, \
        "depth %d, structure violations %d, descendant mismatches %d" % (L, len(bad), len(mism))


def check_length_sandwich(rng, big):
    h = fibonacci.build_hierarchy(10.0, 12 if big else 9)
    rep = fibonacci.length_sandwich(h)
    return "fibonacci: band lengths in [C eps_m^mu, eps_m]", rep["upper_ok"] and rep["lower_ok"], \
        "mu_fit %.3f <= %.3f, C_fit %.3e" % (rep["mu_fit"], rep["mu_bound"], rep["C_fit"])


def check_constants(rng, big):
    ok = fibonacci.zeta_of(8.0) == 3.0 and fibonacci.fib_constants(17.0).alpha_bound < 1
    c = fibonacci.fib_constants(20.0)
    ok &= c.zeta > 1 and 0 < c.omega < 1 and c.mu_prime > 1
    return "fibonacci: constants zeta(8)=3, alpha(17)<1, ranges", bool(ok), \
        "zeta(8)=%r" % fibonacci.zeta_of(8.0)


CHECKS = [check_fibonacci_word, check_periodize, check_kernel_parity, check_free_closed_form,
          check_monic_and_two_path, check_widths_and_derivative, check_greedy_cover, check_cantor,
          check_lemma_dominance, check_shift_and_determinism, check_dynamics, check_hierarchy,
          check_length_sandwich, check_constants]


def run_suite(suite: str = "all", seed: int = 7):
    if suite not in ("all", "quick"):
        raise ValueError("suite must be 'all' or 'quick'")
    big = suite == "all"
    rows = []
    for i, chk in enumerate(CHECKS):
        rng = np.random.default_rng([seed, i])
        try:
            rows.append(chk(rng, big))
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            rows.append((chk.__name__, False, "raised %s: %s" % (type(exc).__name__, exc)))
    return rows
