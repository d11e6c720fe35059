import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, stats as sps

from drwalk.stats import hill_index, ks_two_sample
from drwalk.waiting import (LIGHT, StableReference, TailNotAvailable, WaitingTimeModel,
                            norming, sample_stable, sample_waiting)

HEAVY = [WaitingTimeModel.pareto(0.5), WaitingTimeModel.pareto(1.2), WaitingTimeModel.pareto(1.5, 2.0),
         WaitingTimeModel.pareto(1.9), WaitingTimeModel.pareto_mixture([0.3, 0.7], [1.5, 1.8], [1.0, 0.5])]


def test_deterministic_sample():
    m = WaitingTimeModel.deterministic(2.5)
    assert sample_waiting(m, np.random.default_rng(0)) == 2.5
    assert m.tail_index == LIGHT and m.mean == 2.5


def test_pareto_mean():
    x = WaitingTimeModel.pareto(1.5).sample(np.random.default_rng(1), 10**6)
    assert abs(x.mean() - 3.0) <= 3 * x.std() / math.sqrt(x.size)


def test_exponential_tail():
    x = WaitingTimeModel.exponential(1).sample(np.random.default_rng(2), 10**6)
    p = (x > 1).mean()
    assert abs(p - math.exp(-1)) <= 3 * math.sqrt(p * (1 - p) / x.size)


@pytest.mark.parametrize("model", [WaitingTimeModel.pareto(1.5, 2.0), WaitingTimeModel.exponential(2.0),
                                   WaitingTimeModel.lognormal(0.3, 0.8),
                                   WaitingTimeModel.pareto_mixture([0.3, 0.7], [1.5, 1.8], [1.0, 0.5])])
def test_sampler_matches_tail_function(model):
    # the sampler and the analytic tail are independent code paths
    x = model.sample(np.random.default_rng(3), 2 * 10**5)
    for q in np.quantile(x, [0.1, 0.5, 0.9, 0.99]):
        emp = (x > q).mean()
        assert abs(emp - float(model.tail(q))) <= 4 * math.sqrt(emp * (1 - emp) / x.size) + 1e-12


def test_lognormal_matches_scipy():
    m = WaitingTimeModel.lognormal(0.2, 0.7)
    s = np.array([0.5, 1.0, 3.0])
    assert np.allclose(m.tail(s), sps.lognorm(0.7, scale=math.exp(0.2)).sf(s))


def test_means():
    assert WaitingTimeModel.pareto(0.8).mean == math.inf
    assert WaitingTimeModel.pareto(2.0, 3.0).mean == pytest.approx(6.0)
    assert WaitingTimeModel.lognormal(0, 1).mean == pytest.approx(math.exp(0.5))


def test_dict_roundtrip():
    m = WaitingTimeModel.pareto_mixture([0.5, 0.5], [1.5, 1.8], [1, 2])
    assert WaitingTimeModel.from_dict(m.to_dict()) == m


def test_invalid_models():
    with pytest.raises(ValueError):
        WaitingTimeModel.pareto(2.5)
    with pytest.raises(ValueError):
        WaitingTimeModel("gamma", {})
    with pytest.raises(ValueError):
        WaitingTimeModel("exponential", {})


def test_truncated_second_moment_matches_quadrature():
    from scipy.integrate import quad
    for a in (1.5, 2.0):
        m = WaitingTimeModel.pareto(a, 1.5)
        dens = lambda x: a * 1.5 ** a * x ** (-a - 1)
        num, _ = quad(lambda x: x * x * dens(x), 1.5, 40.0)
        assert float(m.truncated_second_moment(40.0)) == pytest.approx(num, rel=1e-9)


# --- norming -------------------------------------------------------------

def test_norming_examples():
    assert norming(WaitingTimeModel.pareto(1.5), 1e6) == pytest.approx(1e4, rel=1e-6)
    assert norming(WaitingTimeModel.pareto(0.5), 100) == pytest.approx(1e4, rel=1e-6)
    for a in (0.5, 1.5):
        assert norming(WaitingTimeModel.pareto(a), 1) == pytest.approx(1.0, rel=1e-12)


def test_norming_rejects_light():
    with pytest.raises(TailNotAvailable):
        norming(WaitingTimeModel.exponential(1), 10)


@pytest.mark.parametrize("alpha", [0.5, 1.2, 1.5, 1.9])
@pytest.mark.parametrize("scale", [1.0, 3.0])
def test_norming_consistency(alpha, scale):
    m = WaitingTimeModel.pareto(alpha, scale)
    for t in (1e3, 1e4, 1e5, 1e6):
        assert norming(m, t) == pytest.approx(scale * t ** (1 / alpha), rel=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.5, 1.9])
@pytest.mark.parametrize("lam", [2, 10])
def test_regular_variation(alpha, lam):
    m = WaitingTimeModel.pareto(alpha, 1.7)
    t = 1e6
    assert norming(m, lam * t) / norming(m, t) == pytest.approx(lam ** (1 / alpha), rel=0.01)


@pytest.mark.parametrize("model", HEAVY)
@settings(max_examples=30, deadline=None)
@given(logt=st.floats(0.5, 8.0))
def test_infimum_property(model, logt):
    t = 10 ** logt
    a = norming(model, t)
    assert t * float(model.tail(a)) <= 1 + 1e-12
    assert t * float(model.tail(a * (1 - 1e-6))) > 1


@pytest.mark.parametrize("t", [1e3, 1e5, 1e7])
def test_norming_alpha2_second_branch(t):
    # oracle: larger root of s^2 = 2 t ln s, independent of the bisection
    root = optimize.brentq(lambda s: s * s - 2 * t * math.log(s), math.sqrt(t), t)
    assert norming(WaitingTimeModel.pareto(2.0), t) == pytest.approx(root, rel=1e-9)


def test_norming_alpha2_scaled():
    # with scale c the criterion is t * 2 c^2 ln(s/c) / s^2 = 1
    c, t = 2.0, 1e5
    root = optimize.brentq(lambda s: s * s - 2 * t * c * c * math.log(s / c), c * math.sqrt(t), c * t)
    assert norming(WaitingTimeModel.pareto(2.0, c), t) == pytest.approx(root, rel=1e-9)


def test_sampling_deterministic_given_seed():
    m = WaitingTimeModel.pareto(1.5)
    a = m.sample(np.random.default_rng(11), 100)
    b = m.sample(np.random.default_rng(11), 100)
    assert np.array_equal(a, b)


# --- stable reference ----------------------------------------------------

def test_stable_alpha2_variance():
    x = sample_stable(StableReference(2.0), np.random.default_rng(12), 10**6)
    se = x.var() * math.sqrt(2 / x.size)
    assert abs(x.var() - 2.0) <= 3 * se


def test_stable_symmetric_median():
    x = sample_stable(StableReference(1.5), np.random.default_rng(13), 10**6)
    # sd of the median is 1 / (2 f(0) sqrt(n)); f(0) from scipy's density
    f0 = sps.levy_stable.pdf(0.0, 1.5, 0.0)
    assert abs(np.median(x)) <= 3 / (2 * f0 * math.sqrt(x.size))


def test_stable_hill_index():
    x = np.abs(sample_stable(StableReference(1.5), np.random.default_rng(14), 10**6))
    assert hill_index(x, k=x.size // 100) == pytest.approx(1.5, abs=0.15)


@pytest.mark.parametrize("alpha,beta", [(1.5, 0.0), (0.8, 0.5), (1.0, 0.0)])
def test_stable_matches_scipy(alpha, beta):
    ours = sample_stable(StableReference(alpha, beta), np.random.default_rng(15), 20000)
    ref = sps.levy_stable.rvs(alpha, beta, size=20000, random_state=np.random.default_rng(16))
    assert ks_two_sample(ours, ref).p_value > 1e-3


def test_stable_scale():
    a = sample_stable(StableReference(1.5, scale=3.0), np.random.default_rng(17), 1000)
    b = sample_stable(StableReference(1.5), np.random.default_rng(17), 1000)
    assert np.allclose(a, 3 * b)
