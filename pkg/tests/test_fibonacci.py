"""Fibonacci approximants: band hierarchy, descendants, covers, constants, pipeline."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specband import fibonacci as F
from specband.fibonacci import fib


@pytest.fixture(scope="module")
def h10():
    return F.build_hierarchy(10.0, 14, use_cache=False)


def test_fib_convention():
    assert [fib(n) for n in range(9)] == [1, 1, 2, 3, 5, 8, 13, 21, 34]
    assert fib(16) == 1597
    with pytest.raises(ValueError):
        fib(-1)


def test_sigma_small_levels():
    np.testing.assert_allclose(F.sigma_bands(7.0, 1), [[5.0, 9.0]], atol=1e-14)
    np.testing.assert_allclose(F.sigma_bands(7.0, 0), [[-2.0, 2.0]])
    b = F.sigma_bands(5.0, 5)
    assert b.shape == (8, 2)
    assert np.all(b[1:, 0] > b[:-1, 1])
    with pytest.raises(ValueError):
        F.sigma_bands(5.0, F.DEFAULT_CAP + 1)


def test_band_counts_and_typing(h10):
    assert [len(lv) for lv in h10.levels] == [fib(n) for n in range(15)]
    assert [b.band_type for b in h10.levels[0]] == ["A"]
    assert [b.band_type for b in h10.levels[1]] == ["B"]
    assert F.check_structure(h10) == []
    for ell in range(2, 15):
        types = [b.band_type for b in h10.levels[ell]]
        assert types.count("B") == fib(ell - 1)
        assert types.count("A") == fib(ell - 2)


def test_children_multiplicities(h10):
    for ell in range(0, 10):
        for b in h10.levels[ell]:
            kids = h10.children(ell, b.index)
            kinds = sorted((lv - ell, h10.levels[lv][i].band_type) for lv, i in kids)
            if b.band_type == "A":
                assert kinds == [(2, "B")]
            else:
                assert kinds == [(1, "A"), (2, "B"), (2, "B")]
                a = [h10.levels[lv][i] for lv, i in kids if lv == ell + 1][0]
                bz = [h10.levels[lv][i].zero for lv, i in kids if lv == ell + 2]
                assert min(bz) < a.zero < max(bz)


def test_bands_inside_spectrum_box(h10):
    for lv in h10.levels[1:]:
        iv = np.array([[b.l, b.r] for b in lv])
        assert iv.min() >= -2 - 10 and iv.max() <= 2 + 10
        assert np.all(iv[1:, 0] > iv[:-1, 1])


def test_descendant_examples(h10):
    b_band = next(b for b in h10.levels[4] if b.band_type == "B")
    a_band = next(b for b in h10.levels[4] if b.band_type == "A")
    assert F.count_descendants(h10, 4, b_band.index, 5) == (1, 1)
    assert F.count_descendants(h10, 4, b_band.index, 6) == (2, 2)
    assert F.count_descendants(h10, 4, a_band.index, 5) == (0, 0)
    with pytest.raises(ValueError):
        F.count_descendants(h10, 4, 0, 15)


def test_descendant_table_closed_forms(h10):
    rows = F.descendant_table(h10)
    assert rows
    bad = [r for r in rows if r[3] != r[4]]
    assert bad == []


@pytest.mark.parametrize("m", range(1, 10))
def test_cover_size(h10, m):
    # U~_m = F_m bands of sigma_m plus F_m type-B bands of sigma_(m+1)
    assert F.cover_Um(h10, m).shape[0] == 2 * fib(m)


def test_cover_holds_deeper_zeros(h10):
    iv = F.cover_Um(h10, 8, check_levels=[11])
    z = h10.zeros(11)
    # independent membership scan
    inside = [(np.sum((z >= l) & (z <= r))) for l, r in iv]
    assert sum(inside) == z.size == fib(11)
    with pytest.raises(ValueError):
        F.cover_Um(h10, 14)


def test_hierarchy_json_round_trip(h10, tmp_path, monkeypatch):
    back = F.FibonacciHierarchy.from_dict(h10.to_dict())
    assert back.depth == h10.depth
    for ell in range(h10.depth + 1):
        np.testing.assert_array_equal(back.intervals(ell), h10.intervals(ell))
        assert [b.band_type for b in back.levels[ell]] == [b.band_type for b in h10.levels[ell]]
    monkeypatch.setenv(F.CACHE_ENV, str(tmp_path))
    first = F.build_hierarchy(10.0, 6)
    assert list(tmp_path.iterdir())
    second = F.build_hierarchy(10.0, 6)
    np.testing.assert_array_equal(first.intervals(6), second.intervals(6))


def test_hierarchy_rejects_small_lambda():
    with pytest.raises(ValueError):
        F.build_hierarchy(3.0, 5, use_cache=False)


def test_constants_examples():
    assert F.zeta_of(8.0) == pytest.approx(3.0, abs=1e-15)
    c17 = F.fib_constants(17.0)
    assert c17.alpha_bound == pytest.approx(0.759, abs=5e-4)
    assert c17.alpha_bound < 1
    eta = (1 + math.sqrt(5)) / 2
    z = F.zeta_of(17.0)
    r = 2 * 17 + 22
    expect = (3 * math.log(r) - math.log(z * eta)) / math.log(r * eta) * 2 * math.log(eta) / math.log(z)
    assert c17.alpha_bound == pytest.approx(expect, rel=1e-14)
    assert not F.fib_constants(6.0).applicable


@settings(max_examples=50, deadline=None)
@given(st.floats(8.001, 1e6))
def test_constants_ranges(lam):
    c = F.fib_constants(lam)
    assert c.zeta > 1 and 0 < c.omega < 1 and c.mu_prime > 1
    assert all(math.isfinite(getattr(c, k)) for k in ("omega", "mu_prime", "prefactor", "alpha_bound"))


def test_prefactor_grows_toward_two():
    # from below once lambda is large; near lambda = 10 it sits above 2
    assert F.fib_constants(10.0).prefactor > 2
    pre = [F.fib_constants(lam).prefactor for lam in (1e2, 1e4, 1e6, 1e12)]
    assert np.all(np.diff(pre) > 0) and pre[-1] < 2


def test_eps_m():
    c = F.fib_constants(10.0)
    assert c.eps(4) == pytest.approx(4 * math.e / c.zeta**2, rel=1e-15)


def test_admissible_t():
    lo, hi, ok = F.admissible_t(F.fib_constants(17.0))
    assert ok and lo == pytest.approx(0.3779, abs=1e-4) and hi == pytest.approx(0.3917, abs=1e-4)
    lo, hi, ok = F.admissible_t(F.fib_constants(9.0))
    assert not ok and lo > hi
    for lam in (17.0, 100.0, 1e6):
        assert F.admissible_t(F.fib_constants(lam))[1] < 0.5


def test_derivative_bounds_lambda_10():
    reps = [F.verify_derivative_bounds(10.0, k) for k in range(3, 11)]
    for k, rep in zip(range(3, 11), reps):
        assert rep["lower_ok"], rep["violations"][:3]
        assert rep["points"] == 3 * fib(k)
        assert rep["min_abs_dprime"] >= F.fib_constants(10.0).zeta ** (k / 2)
    C = [r["C_fit"] for r in reps]
    assert np.all(np.diff(C) <= 0)


def test_derivative_bound_threshold_lambda_8_5():
    rep = F.verify_derivative_bounds(8.5, 3)
    zeta = (4.5 + math.sqrt(8.25)) / 2
    assert rep["lower_bound"] == pytest.approx(zeta**1.5, rel=1e-14)


def test_derivative_at_zero_matches_finite_difference():
    from specband.discriminant import discriminant_eval

    d = F.sigma_data(10.0, 5)
    rep = F.verify_derivative_bounds(10.0, 5)
    v = d.period
    h = 1e-7
    fd = [abs(discriminant_eval(v, d.q, x + h) - discriminant_eval(v, d.q, x - h)) / (2 * h)
          for x in d.zeros]
    assert min(fd) == pytest.approx(min(np.abs(d.dprime_at_zeros)), rel=1e-5)
    assert rep["min_abs_dprime"] <= min(fd) * (1 + 1e-5)


def test_length_sandwich(h10):
    out = F.length_sandwich(h10)
    assert out["upper_ok"] and out["lower_ok"]
    assert 1 < out["mu_fit"] < out["mu_bound"]
    assert out["levels"][0] == 3


def test_pipeline_outputs(h10):
    out = F.fib_cluster_pipeline(10.0, 0.3, range(10, 15), h=h10)
    assert not out["t_admissible"] and out["conclusion"] is None and not out["chain_holds"]
    for row in out["levels"]:
        m = int(math.floor(0.3 * row["ell"]))
        assert row["m"] == m
        assert row["min_count"] == fib(row["ell"] - m - 2) == row["F_l_m_2"]
        assert row["xi"] == pytest.approx(math.log(fib(row["ell"] - m - 2)) / math.log(fib(row["ell"])))
        c = F.fib_constants(10.0)
        assert row["alpha"] == pytest.approx(-math.log(fib(row["ell"])) / math.log(c.eps(m)))
    nice = {e["condition"]: e["pass"] for e in out["nice_scaling"]}
    assert all(nice.values())
    uni = {e["condition"]: e["pass"] for e in out["uniform"]}
    assert uni["clustered"] and not uni["(i) scale monotonicity"]
    assert len(out["hypothesis"]) == 5


def test_pipeline_rejects_unusable_levels(h10):
    with pytest.raises(ValueError):
        F.fib_cluster_pipeline(10.0, 0.05, [5], h=h10)
