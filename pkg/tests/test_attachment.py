import itertools
import json
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from geoapprox.models.preferential_attachment import (pa_coupling_sampler, pa_degree_dist,
                                                      pa_degree_dists,
                                                      pa_fixed_vertex_experiment, pa_k_law,
                                                      pa_mean, pa_mixture,
                                                      pa_mixture_experiment,
                                                      yule_mixture_check)
from geoapprox.models.uniform_attachment import (ua_degree_dist, ua_equilibrium_mixture,
                                                 ua_experiment)
from geoapprox.pmf import Pmf, from_samples, geometric, point_mass, tv, yule_simon
from geoapprox.rng import SeededRng
from geoapprox.transforms import equilibrium_nonneg

BASELINES = json.loads((Path(__file__).parent / "baselines.json").read_text())


# -- uniform attachment --------------------------------------------------------


def enumerate_ua(n):
    """Brute force over N and every Bernoulli outcome."""
    law = {}
    for N in range(1, n + 1):
        rates = [1 / (n - i + 1) for i in range(1, N + 1)]
        for bits in itertools.product((0, 1), repeat=N):
            p = math.prod(r if b else 1 - r for r, b in zip(rates, bits)) / n
            law[sum(bits)] = law.get(sum(bits), 0.0) + p
    return law


def test_single_vertex_has_degree_one():
    assert tv(ua_degree_dist(1), point_mass(1)) == 0


@pytest.mark.parametrize("n", [2, 3, 6])
def test_ua_against_enumeration(n):
    law = ua_degree_dist(n)
    for k, p in enumerate_ua(n).items():
        assert law(k) == pytest.approx(p, abs=1e-15)


@pytest.mark.parametrize("n", [1, 4, 30])
def test_ua_mean_is_harmonic(n):
    oracle = sum(sum(1 / (n - i + 1) for i in range(1, m + 1)) for m in range(1, n + 1)) / n
    assert ua_degree_dist(n).mean == pytest.approx(oracle, rel=1e-12)


def test_ua_bound_rows():
    rows = ua_experiment([1, 10, 100])
    assert rows[0].lhs_value == pytest.approx(0.75, abs=1e-11)
    assert rows[1].lhs_value <= 0.1 and rows[2].lhs_value <= 0.01
    assert all(r.passed for r in rows)
    assert rows[2].params["coupling_rhs"] == pytest.approx(0.01)


@pytest.mark.parametrize("n", [2, 5, 40])
def test_ua_coupled_variable_has_equilibrium_law(n):
    assert tv(ua_equilibrium_mixture(n), equilibrium_nonneg(ua_degree_dist(n))) <= 1e-14


# -- preferential attachment ---------------------------------------------------


def test_newest_vertex_two_point_law():
    n = 9
    law = pa_degree_dist(n, n)
    assert law(1) == pytest.approx((2 * n - 2) / (2 * n - 1))
    assert law(2) == pytest.approx(1 / (2 * n - 1))


@pytest.mark.parametrize("n", [1, 7, 60])
def test_joint_dp_matches_single_vertex_dp(n):
    for i, law in enumerate(pa_degree_dists(n), start=1):
        assert tv(law, pa_degree_dist(n, i)) <= 1e-14
        assert law.hi <= n - i + 2


def test_dp_mean_matches_product_formula():
    for n in (10, 200):
        for i in range(1, n + 1):
            assert pa_degree_dist(n, i).mean == pytest.approx(pa_mean(n, i), abs=1e-9)


def test_mean_close_to_square_root_law():
    n = 400
    ratios = [abs(pa_mean(n, i) - math.sqrt(n / i)) / math.sqrt(n / i**3)
              for i in (1, 2, 4, 16, 64, 256, 400)]
    assert max(ratios) < 2.0


def test_fixed_vertex_constants_match_baseline():
    grid = [1, 2, 4, 8, 16, 32, 64, 128, 200]
    rows = pa_fixed_vertex_experiment(200, grid)
    for row in rows:
        expected = BASELINES["pa_fixed_i_tv_n200"][str(row.params["i"])]
        assert row.empirical_c == pytest.approx(expected, rel=1e-9)
        assert row.status == "SOFT"
    by_i = {r.params["i"]: r.lhs_value for r in pa_fixed_vertex_experiment(200, [4, 100])}
    assert by_i[100] < by_i[4]


def test_mixture_rows():
    rows = pa_mixture_experiment([50, 100, 200, 400])
    tvs = [r.lhs_value for r in rows]
    assert all(b < a for a, b in zip(tvs, tvs[1:]))
    for row in rows:
        expected = BASELINES["pa_mixture_n_tv_over_log_n"][str(row.params["n"])]
        assert row.empirical_c == pytest.approx(expected, rel=1e-9)
        # Mixing can only bring the law closer than the average fixed vertex.
        assert row.lhs_value <= row.params["mean_fixed_tv"] + 1e-12
    gaps = [abs(r.params["p1"] - 2 / 3) for r in rows]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_k_law():
    n, i = 30, 4
    law = pa_k_law(n, i)
    assert law.lo == i and law.hi == n
    assert law(i) == pytest.approx((1 / (2 * i - 1)) / (pa_mean(n, i) - 1))
    k = 10
    assert law(k) == pytest.approx(pa_mean(k - 1, i) / (2 * k - 1) / (pa_mean(n, i) - 1))


def exact_coupled_law(n, i):
    """Law of W^K by dynamic programming over the coupled chain."""
    k_law = pa_k_law(n, i)
    acc = np.zeros(n + 4)
    deg = np.arange(n + 4, dtype=float)
    for k, pk in zip(k_law.support, k_law.probs):
        w = np.zeros(n + 4)
        w[1] = 1.0
        for j in range(i, n + 1):
            rate = deg / (2 * j) if j < k else (0 * deg if j == k else deg / (2 * j - 1))
            move = w * rate
            w = w - move
            w[1:] += move[:-1]
        acc += pk * w
    return Pmf(0, acc)


@pytest.mark.parametrize("n,i", [(6, 2), (30, 3), (120, 11), (50, 50)])
def test_coupled_variable_has_equilibrium_law(n, i):
    w = pa_degree_dist(n, i)
    assert tv(exact_coupled_law(n, i).shift(-1), equilibrium_nonneg(w.shift(-1))) <= 1e-12


@pytest.mark.parametrize("n,i", [(200, 2), (200, 40), (60, 60)])
def test_coupling_sampler_marginals(n, i):
    batch = pa_coupling_sampler(n, i, SeededRng(8), 100_000)
    w = pa_degree_dist(n, i)
    assert tv(from_samples(batch.w_tilde), w) <= 0.02
    assert tv(from_samples(batch.w_k - 1), equilibrium_nonneg(w.shift(-1))) <= 0.02
    assert np.all(batch.w_k <= batch.w_tilde)


def test_coupling_mismatch_rate_scales_like_one_over_i():
    rates = [pa_coupling_sampler(200, i, SeededRng(i), 20_000).neq.mean() * i
             for i in (2, 8, 32, 128)]
    assert max(rates) < 1.0


def test_yule_mixture_check():
    assert yule_mixture_check(1) <= 1e-12
    assert yule_mixture_check(2) <= 1e-12
    assert yule_mixture_check(100) <= 1e-8
    with pytest.raises(ValueError):
        yule_mixture_check(0)


def test_uniform_vertex_law_near_yule_simon():
    assert tv(pa_mixture(400), yule_simon()) < 0.01


def test_fixed_vertex_trend_statistic():
    grid = [1, 2, 4, 8, 16, 32, 64, 128, 200]
    c = [r.empirical_c for r in pa_fixed_vertex_experiment(200, grid)]
    assert stats.spearmanr(grid, c).statistic < 0
