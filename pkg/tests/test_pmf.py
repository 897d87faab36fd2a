import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoapprox.errors import InvalidDistribution, SupportCapError, TruncationError
from geoapprox.pmf import (Pmf, bernoulli, condition_positive, convolve, distances,
                           from_samples, geometric, mixture, moment, moment_tail_bound,
                           normalize, point_mass, truncate_above, tv, uniform, yule_simon)
from strategies import pmfs


def assert_pmf(P, expected: dict, tol=1e-15):
    got = {k: v for k, v in P.as_dict().items() if v != 0}
    assert set(got) == set(expected)
    for k, v in expected.items():
        assert got[k] == pytest.approx(v, abs=tol)


# -- construction -----------------------------------------------------------


def test_normalize_scales_and_trims_margins():
    assert_pmf(normalize([0, 2, 2], 0), {1: 0.5, 2: 0.5})
    assert_pmf(normalize([1], 7), {7: 1.0})
    assert_pmf(normalize([1, 1, 2], -1), {-1: 0.25, 0: 0.25, 1: 0.5})


@pytest.mark.parametrize("raw", [[0, 0], [1, -1], []])
def test_normalize_rejects_bad_weights(raw):
    with pytest.raises(InvalidDistribution):
        normalize(raw)


def test_pmf_invariants_enforced():
    with pytest.raises(InvalidDistribution):
        Pmf(0, [0.5, 0.4])
    with pytest.raises(InvalidDistribution):
        Pmf(0, [1.2, -0.2])
    P = Pmf(3, [0.0, 0.5, 0.5, 0.0])
    assert (P.lo, P.hi) == (4, 5)
    with pytest.raises(ValueError):
        P.probs[0] = 1.0


def test_geometric_examples():
    assert_pmf(geometric(1.0, 1), {1: 1.0})
    g = geometric(0.5, 1)
    assert g(1) == 0.5 and g(2) == 0.25 and g(3) == 0.125
    g0 = geometric(0.5, 0)
    assert g0(0) == 0.5 and g0(1) == 0.25
    assert g.tail_mass <= 1e-12


@pytest.mark.parametrize("p", [0.0, -0.1, 1.5])
def test_geometric_rejects_parameter(p):
    with pytest.raises(InvalidDistribution):
        geometric(p)


def test_geometric_support_cap():
    with pytest.raises(SupportCapError):
        geometric(1e-9, 1, 1e-12)


def test_yule_simon_values_and_tail():
    ys = yule_simon(50)
    assert ys(1) == pytest.approx(2 / 3, abs=1e-15)
    assert ys(2) == pytest.approx(1 / 6, abs=1e-15)
    # Telescoping oracle: partial fractions 2/(k(k+1)) - 2/((k+1)(k+2)).
    tail = sum(2 / (k * (k + 1)) - 2 / ((k + 1) * (k + 2)) for k in range(51, 200_000))
    tail += 2 / (200_000 * 200_001)
    assert ys.tail_mass == pytest.approx(tail, rel=1e-9)
    with pytest.raises(InvalidDistribution):
        yule_simon(0)


def test_yule_simon_default_window_meets_budget():
    assert yule_simon(eps=1e-8).tail_mass <= 1e-8


# -- arithmetic -------------------------------------------------------------


def test_convolve_examples():
    P = uniform(2, 6)
    assert tv(convolve(point_mass(0), P), P) == 0.0
    assert_pmf(convolve(bernoulli(0.5), bernoulli(0.5)), {0: 0.25, 1: 0.5, 2: 0.25})


def test_convolve_geometric_is_negative_binomial():
    a = 0.3
    g = geometric(a, 1, 1e-15)
    s = convolve(g, g)
    for n in range(2, 60):
        assert s(n) == pytest.approx((n - 1) * a * a * (1 - a) ** (n - 2), rel=1e-12)


def test_convolve_tail_is_conservative():
    g = geometric(0.4, 1, 1e-6)
    s = convolve(g, g)
    assert s.tail_mass >= g.tail_mass
    assert math.fsum(s.probs) + s.tail_mass == pytest.approx(1.0, abs=1e-12)


def test_convolve_cap():
    with pytest.raises(SupportCapError):
        convolve(uniform(0, 10), uniform(0, 10), cap=15)


def test_mixture_examples():
    P = uniform(1, 4)
    assert tv(mixture([1.0], [P]), P) == 0.0
    assert_pmf(mixture([0.5, 0.5], [point_mass(0), point_mass(1)]), {0: 0.5, 1: 0.5})
    m = 7
    u = mixture(np.full(m, 1 / m), [point_mass(k) for k in range(1, m + 1)])
    assert tv(u, uniform(1, m)) < 1e-15


@pytest.mark.parametrize("weights", [[0.5], [0.7, 0.7], [-0.5, 1.5]])
def test_mixture_rejects_bad_weights(weights):
    with pytest.raises(InvalidDistribution):
        mixture(weights, [point_mass(0), point_mass(1)])


def test_condition_positive_examples():
    P = uniform(1, 3)
    assert tv(condition_positive(P), P) == 0.0
    assert_pmf(condition_positive(Pmf(0, [0.5, 0.25, 0.25])), {1: 0.5, 2: 0.5})
    p = 0.3
    cond = condition_positive(geometric(p, 0, 1e-14))
    k = np.arange(1, 40)
    assert np.allclose(cond(k), p * (1 - p) ** (k - 1), rtol=1e-12)
    with pytest.raises(InvalidDistribution):
        condition_positive(point_mass(0))


def test_truncate_above_moves_mass_to_tail():
    P = truncate_above(uniform(0, 9), 4)
    assert P.hi == 4 and P.tail_mass == pytest.approx(0.5)
    with pytest.raises(TruncationError):
        truncate_above(uniform(3, 5), 1)


def test_moment_examples():
    assert moment(point_mass(5), 1) == 5
    p = 0.2
    g = geometric(p, 1)
    assert moment(g, 1) + moment_tail_bound(g, 1) == pytest.approx(1 / p, rel=1e-12)
    assert g.mean == pytest.approx(1 / p, rel=1e-12)
    g0 = geometric(0.4, 0, 1e-15)
    oracle = math.fsum(k * k * 0.4 * 0.6**k for k in range(400))
    assert moment(g0, 2) + moment_tail_bound(g0, 2) == pytest.approx(oracle, rel=1e-12)


def test_moment_tail_without_decay_raises():
    P = Pmf(0, [0.3, 0.3], 0.4)
    with pytest.raises(TruncationError):
        moment_tail_bound(P, 1)


# -- distances ------------------------------------------------------------


def test_distance_of_law_with_itself():
    d = distances(uniform(0, 5), uniform(0, 5))
    assert (d.tv, d.kolmogorov, d.local) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("n", [1, 3, 10, 50])
def test_evens_against_odds(n):
    evens = normalize([1 if k % 2 == 0 else 0 for k in range(1, 2 * n + 1)], 1)
    odds = normalize([1 if k % 2 == 1 else 0 for k in range(1, 2 * n + 1)], 1)
    d = distances(evens, odds)
    assert d.tv == pytest.approx(1.0)
    assert d.kolmogorov == pytest.approx(1 / n)


def test_geometric_pair_against_summation_oracle():
    a, b = 0.5, 1 / 3
    oracle = 0.5 * math.fsum(abs(a * (1 - a) ** k - b * (1 - b) ** k) for k in range(2000))
    d = distances(geometric(a, 0), geometric(b, 0))
    assert abs(d.tv - oracle) <= d.truncation_slack + 1e-15
    lo, hi = d.tv_interval
    assert lo <= oracle <= hi


@settings(max_examples=200, deadline=None)
@given(pmfs(), pmfs())
def test_kolmogorov_below_tv(P, Q):
    d = distances(P, Q)
    assert 0 <= d.kolmogorov <= d.tv + 1e-15 <= 1 + 1e-15
    assert 0 <= d.local <= 1


@settings(max_examples=200, deadline=None)
@given(pmfs(), pmfs(), pmfs())
def test_tv_is_a_metric(P, Q, R):
    assert tv(P, Q) == pytest.approx(tv(Q, P), abs=1e-15)
    assert tv(P, R) <= tv(P, Q) + tv(Q, R) + 1e-14


@settings(max_examples=100, deadline=None)
@given(pmfs(), pmfs(), pmfs())
def test_convolve_commutative_associative(P, Q, R):
    assert tv(convolve(P, Q), convolve(Q, P)) <= 1e-12
    assert tv(convolve(convolve(P, Q), R), convolve(P, convolve(Q, R))) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(pmfs(), pmfs())
def test_mean_is_additive(P, Q):
    assert moment(convolve(P, Q), 1) == pytest.approx(moment(P, 1) + moment(Q, 1), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(pmfs(), min_size=1, max_size=4), st.data())
def test_mixture_tv_at_most_weighted_tv(components, data):
    w = np.array(data.draw(st.lists(st.floats(0.05, 1), min_size=len(components),
                                    max_size=len(components))))
    w /= w.sum()
    target = data.draw(pmfs())
    mixed = tv(mixture(w, components), target)
    assert mixed <= math.fsum(wi * tv(c, target) for wi, c in zip(w, components)) + 1e-12


# -- serialization --------------------------------------------------------


def test_json_round_trip():
    g = geometric(0.3, 0, 1e-6)
    back = Pmf.from_json(g.to_json())
    assert back.offset == g.offset and back.tail_mass == g.tail_mass
    assert np.array_equal(back.probs, g.probs)
    assert set(json.loads(g.to_json())) == {"offset", "probs", "tail_mass"}


def test_csv_round_trip():
    P = Pmf(-2, [0.25, 0.0, 0.75])
    text = P.to_csv()
    assert text.splitlines()[0] == "k,p"
    assert tv(Pmf.from_csv(text), P) == 0.0


def test_from_samples():
    assert_pmf(from_samples([1, 1, 3, 3]), {1: 0.5, 3: 0.5})
