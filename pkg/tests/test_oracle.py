import numpy as np
import pytest
from scipy import integrate, special, stats

from frailcure import ParamSet, Weibull
from frailcure.data import Family, SubjectRecord
from frailcure.oracle import (
    brute_auc,
    brute_pairs_c,
    gen_laguerre,
    quad_marginal_loglik,
    quad_posterior_density,
    trapezoid_marginal_loglik,
)
from frailcure.predict import posterior_params

PI = ParamSet(2.0, 0.85, Weibull(8.0, 6.0))
FAM = Family("Q", (SubjectRecord(5.0, 1, "main"), SubjectRecord(7.0, 0, "mother"), SubjectRecord(6.0, 1)))


def test_laguerre_rule_integrates_moments():
    s, logw = gen_laguerre(64, 0.7)
    w = np.exp(logw)
    for k in range(6):
        assert np.sum(w * s**k) == pytest.approx(special.gamma(0.7 + k + 1), rel=1e-12)


def test_laguerre_large_rule_is_finite():
    s, logw = gen_laguerre(1024, -0.8)
    assert np.all(np.isfinite(s))
    # the outermost weights underflow to zero, which is harmless in log-sum-exp form
    assert np.exp(special.logsumexp(logw)) == pytest.approx(special.gamma(0.2), rel=1e-10)


def test_censored_singleton_at_origin():
    assert quad_marginal_loglik(PI, Family("Z", (SubjectRecord(0.0, 0),))) == pytest.approx(0.0, abs=1e-13)


def test_trapezoid_backstop_agrees():
    assert trapezoid_marginal_loglik(PI, FAM) == pytest.approx(quad_marginal_loglik(PI, FAM), abs=1e-6)


def test_prior_equivalent_posterior_is_prior():
    f = Family("P", (SubjectRecord(0.0, 0), SubjectRecord(0.0, 0)))
    r = np.linspace(0.05, 4, 30)
    np.testing.assert_allclose(quad_posterior_density(PI, f, r), stats.gamma(2.0, scale=0.5).pdf(r), rtol=1e-12)


def test_posterior_density_matches_conjugate_form():
    shape, rate = posterior_params(FAM, PI)
    r = np.linspace(0.05, 6, 50)
    np.testing.assert_allclose(quad_posterior_density(PI, FAM, r), stats.gamma(shape, scale=1 / rate).pdf(r),
                               rtol=1e-8)


def test_posterior_density_normalises():
    shape, rate = posterior_params(FAM, PI)
    hi = stats.gamma(shape, scale=1 / rate).ppf(0.99999)
    r = np.linspace(1e-9, hi, 20001)
    # the grid stops at the 0.99999 quantile, so the integral is 0.99999 rather than 1
    assert integrate.simpson(quad_posterior_density(PI, FAM, r), x=r) == pytest.approx(0.99999, abs=1e-9)


def test_posterior_grid_must_be_positive():
    with pytest.raises(ValueError):
        quad_posterior_density(PI, FAM, [0.0, 1.0])


def test_single_pair_enumeration():
    # concordant when the longer-lived subject has the lower predicted risk
    assert brute_pairs_c([1.0, 2.0], [10.0, 5.0], [0, 1], ["a", "b"]) == 1.0
    assert brute_pairs_c([2.0, 1.0], [10.0, 5.0], [0, 1], ["a", "b"]) == 0.0
    assert brute_pairs_c([1.0, 1.0], [10.0, 5.0], [0, 1], ["a", "b"], ties="half") == 0.5
    # same family: excluded unless all pairs are requested
    assert brute_pairs_c([1.0, 2.0], [10.0, 5.0], [0, 1], ["a", "a"]) is None
    assert brute_pairs_c([1.0, 2.0], [10.0, 5.0], [0, 1], ["a", "a"], all_pairs=True) == 1.0
    # no event: no comparable pair
    assert brute_pairs_c([2.0, 1.0], [10.0, 5.0], [0, 0], ["a", "b"]) is None


def test_brute_auc_simple():
    assert brute_auc([0.1, 0.9], [0, 1]) == 1.0
    assert brute_auc([0.5, 0.5], [0, 1]) == 0.5
    assert brute_auc([0.5, 0.5], [1, 1]) is None
