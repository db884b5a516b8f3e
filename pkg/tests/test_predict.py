import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, special, stats

from frailcure import ParamSet, Weibull
from frailcure.data import Family, SubjectRecord
from frailcure.predict import (
    classify,
    gamma_median,
    high_risk_score,
    posterior_mean,
    posterior_median,
    posterior_params,
    posterior_risk,
    predict_cohort,
    prior_upper_quantile,
)
from frailcure.validate import random_family, random_params

PI5 = ParamSet(5.0, 0.85, Weibull(8.0, 6.0))
ONE_EVENT = Family("E", (SubjectRecord(6.0, 1, "main"),))
PRIOR_LIKE = Family("P", (SubjectRecord(0.0, 0, "main"), SubjectRecord(0.0, 0, "mother"), SubjectRecord(0.0, 0)))


def test_prior_equivalent_family():
    assert posterior_params(PRIOR_LIKE, PI5) == (5.0, 5.0)
    assert posterior_mean(PRIOR_LIKE, PI5) == 1.0
    for alpha in (0.01, 0.05, 0.3):
        assert high_risk_score(PRIOR_LIKE, PI5, alpha) == alpha
    assert classify(high_risk_score(PRIOR_LIKE, PI5, 0.05), 0.05) == 0


def test_single_event_reference():
    shape, rate = posterior_params(ONE_EVENT, PI5)
    assert shape == 6.0
    exact_rate = 5.0 - math.log(0.85 + 0.15 * math.exp(-1.0))
    assert rate == pytest.approx(exact_rate, rel=1e-15)
    # the rounded reference values 5.099612 and 1.176560 are off in the sixth decimal
    assert rate == pytest.approx(5.099612, abs=1e-5)
    assert posterior_mean(ONE_EVENT, PI5) == pytest.approx(6.0 / exact_rate, rel=1e-15)
    assert posterior_mean(ONE_EVENT, PI5) == pytest.approx(1.176560, abs=1e-5)
    q = stats.gamma(5.0, scale=1 / 5.0).ppf(0.95)
    assert high_risk_score(ONE_EVENT, PI5) == pytest.approx(stats.gamma(6.0, scale=1 / rate).sf(q), rel=1e-12)


def test_censored_member_lowers_mean():
    more = Family("E2", ONE_EVENT.members + (SubjectRecord(30.0, 0, "mother"),))
    assert posterior_mean(more, PI5) < posterior_mean(ONE_EVENT, PI5)


def test_exponential_median():
    assert gamma_median(1.0, 2.5) == pytest.approx(math.log(2) / 2.5, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(shape=st.floats(0.05, 500), rate=st.floats(0.05, 500))
def test_median_against_bisection(shape, rate):
    ref = optimize.brentq(lambda z: special.gammainc(shape, z) - 0.5, 1e-300, 10 * shape + 10, xtol=1e-300, rtol=1e-15)
    assert gamma_median(shape, rate) == pytest.approx(ref / rate, rel=1e-9)
    assert shape / rate > gamma_median(shape, rate)


def test_prior_quantile():
    assert prior_upper_quantile(0.5, 0.05) == pytest.approx(stats.gamma(0.5, scale=2.0).isf(0.05), rel=1e-12)
    with pytest.raises(ValueError):
        prior_upper_quantile(0.5, 1.0)


def test_score_tends_to_one_as_alpha_grows():
    assert high_risk_score(ONE_EVENT, PI5, 1 - 1e-12) == pytest.approx(1.0, abs=1e-6)


def test_classify_threshold():
    assert classify(1.0, 0.5) == 1
    np.testing.assert_array_equal(classify(np.array([0.05, 0.0500001]), 0.05), [0, 1])
    with pytest.raises(ValueError):
        classify(0.2, 0.0)


def test_cohort_matches_per_family():
    rng = np.random.default_rng(8)
    pi = random_params(rng)
    fams = [random_family(rng, pi) for _ in range(40)]
    out = predict_cohort(fams, pi)
    for i, f in enumerate(fams):
        risk = posterior_risk(f, pi)
        assert out["mean"][i] == pytest.approx(risk.mean, rel=1e-14)
        assert out["median"][i] == pytest.approx(posterior_median(f, pi), rel=1e-12)
        assert out["score"][i] == pytest.approx(risk.high_risk_score, rel=1e-12)
        assert risk.mean > risk.median
