import math

import numpy as np
import pytest
from scipy import stats

from ordloc.family import (ObservationPair, custom_family, exponential_family, find_mlr_violation,
                           make_family, mlr_check, normal_family)

X = np.linspace(-4, 4, 15)
ETA = np.linspace(-3, 3, 9)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 10.73])
def test_normal_matches_scipy(sigma):
    fam = normal_family(sigma)
    ref = stats.norm(scale=sigma)
    for x in (-3 * sigma, -0.1, 0.0, 2.2 * sigma):
        assert fam.pdf(x) == pytest.approx(ref.pdf(x), rel=1e-13)
        assert fam.cdf(x) == pytest.approx(ref.cdf(x), rel=1e-13)
        assert fam.survival(x) == pytest.approx(ref.sf(x), rel=1e-13)
    assert fam.quantile(0.9) == pytest.approx(ref.ppf(0.9), rel=1e-13)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 10.73])
def test_exponential_matches_scipy(sigma):
    fam = exponential_family(sigma)
    ref = stats.expon(scale=sigma)
    for x in (-1.0, 0.0, 0.3 * sigma, 5 * sigma):
        assert fam.pdf(x) == pytest.approx(ref.pdf(x), rel=1e-13)
        assert fam.cdf(x) == pytest.approx(ref.cdf(x), rel=1e-13)
    assert fam.median == pytest.approx(sigma * math.log(2), rel=1e-14)


@pytest.mark.parametrize("fam,ref", [(normal_family(2.0), stats.norm(scale=2.0)),
                                     (exponential_family(3.0), stats.expon(scale=3.0))])
def test_sampler_distribution(fam, ref):
    draws = fam.sampler(np.random.default_rng(1), 20000)
    assert stats.kstest(draws, ref.cdf).pvalue > 1e-3


def test_prob_is_tail_stable():
    fam = normal_family(1.0)
    assert fam.prob(9.0, 10.0) == pytest.approx(stats.norm.sf(9) - stats.norm.sf(10), rel=1e-10)
    assert fam.prob(2.0, 1.0) == 0.0


def test_sigma_validation():
    for bad in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            normal_family(bad)
    with pytest.raises(ValueError):
        make_family("cauchy", 1.0)


def test_builtin_families_have_mlr():
    assert mlr_check(normal_family(1.0), X, ETA)
    assert mlr_check(exponential_family(1.0), np.linspace(0, 5, 12), ETA)


def test_cauchy_violates_mlr():
    cauchy = custom_family("cauchy", lambda x: 1.0 / (math.pi * (1 + x * x)),
                           cdf=lambda x: 0.5 + math.atan(x) / math.pi,
                           quantile=lambda p: math.tan(math.pi * (p - 0.5)))
    bad = find_mlr_violation(cauchy, X, ETA)
    assert bad is not None
    x1, x2, e1, e2 = bad
    assert cauchy.pdf(x1 - e1) * cauchy.pdf(x2 - e2) < cauchy.pdf(x1 - e2) * cauchy.pdf(x2 - e1)


def test_custom_family_builds_cdf_and_quantile():
    logistic = custom_family("logistic", lambda x: math.exp(-abs(x)) / (1 + math.exp(-abs(x))) ** 2)
    assert logistic.cdf(1.3) == pytest.approx(stats.logistic.cdf(1.3), abs=1e-9)
    assert logistic.quantile(0.8) == pytest.approx(stats.logistic.ppf(0.8), abs=1e-8)
    draws = logistic.sampler(np.random.default_rng(3), 2000)
    assert stats.kstest(draws, stats.logistic.cdf).pvalue > 1e-3


def test_observation_pair():
    obs = ObservationPair(43.93, 42.66)
    assert obs.x_max == 43.93 and obs.x_min == 42.66
    assert obs.u == pytest.approx(1.27, abs=1e-12)
