"""Posterior familial risk under the conjugate Gamma frailty posterior.

The high-risk score is ``P(R > q | data)`` with ``q`` the prior upper-alpha
quantile, so larger scores always mean riskier families.  It is the
complement of the posterior CDF evaluated at that quantile.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

from .data import Cohort, Family, ParamSet, pack

__all__ = [
    "PosteriorRisk",
    "posterior_params",
    "posterior_mean",
    "posterior_median",
    "gamma_median",
    "prior_upper_quantile",
    "high_risk_score",
    "classify",
    "posterior_risk",
    "predict_cohort",
]


@dataclass(frozen=True)
class PosteriorRisk:
    shape: float
    rate: float
    mean: float
    median: float
    high_risk_score: float


def _shape_rate(coh: Cohort, pi: ParamSet) -> tuple[np.ndarray, np.ndarray]:
    ls0 = pi.cure._log_s0(coh.x)
    return pi.theta + coh.events, pi.theta - coh.family_sum(ls0)


def posterior_params(f: Family, pi: ParamSet) -> tuple[float, float]:
    """Gamma(shape, rate) posterior of the family frailty."""
    shape, rate = _shape_rate(pack([f]), pi)
    return float(shape[0]), float(rate[0])


def posterior_mean(f: Family, pi: ParamSet) -> float:
    shape, rate = posterior_params(f, pi)
    return shape / rate


def gamma_median(shape, rate, tol: float = 1e-10):
    """Median of Gamma(shape, rate), polished by Newton steps on the CDF."""
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    z = special.gammaincinv(shape, 0.5)
    for _ in range(3):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            dens = np.exp((shape - 1.0) * np.log(z) - z - special.gammaln(shape))
            step = (special.gammainc(shape, z) - 0.5) / dens
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.all(np.abs(step) <= tol * np.abs(z)):
            break
    out = z / rate
    return float(out) if out.ndim == 0 else out


def posterior_median(f: Family, pi: ParamSet) -> float:
    shape, rate = posterior_params(f, pi)
    return gamma_median(shape, rate)


def prior_upper_quantile(theta: float, alpha: float) -> float:
    """``q`` with ``P(R > q) = alpha`` under Gamma(theta, theta)."""
    _check_alpha(alpha)
    return float(special.gammainccinv(theta, alpha)) / theta


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _score(shape, rate, theta, alpha):
    q = prior_upper_quantile(theta, alpha)
    out = special.gammaincc(shape, rate * q)
    # no information: the posterior is the prior, whose upper tail is alpha
    return np.where((shape == theta) & (rate == theta), alpha, out)


def high_risk_score(f: Family, pi: ParamSet, alpha: float = 0.05) -> float:
    """Posterior probability that the family frailty exceeds the prior upper-alpha quantile."""
    shape, rate = posterior_params(f, pi)
    return float(_score(shape, rate, pi.theta, alpha))


def classify(score, tau: float = 0.05):
    """1 where ``score > tau`` (strict)."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    out = (np.asarray(score) > tau).astype(int)
    return int(out) if out.ndim == 0 else out


def posterior_risk(f: Family, pi: ParamSet, alpha: float = 0.05) -> PosteriorRisk:
    shape, rate = posterior_params(f, pi)
    return PosteriorRisk(
        shape=shape,
        rate=rate,
        mean=shape / rate,
        median=gamma_median(shape, rate),
        high_risk_score=float(_score(shape, rate, pi.theta, alpha)),
    )


def predict_cohort(data: Sequence[Family] | Cohort, pi: ParamSet, alpha: float = 0.05) -> dict[str, np.ndarray]:
    """Vectorised posterior summaries for every family, in input order."""
    coh = pack(data)
    shape, rate = _shape_rate(coh, pi)
    return {
        "shape": shape,
        "rate": rate,
        "mean": shape / rate,
        "median": np.asarray(gamma_median(shape, rate)),
        "score": np.asarray(_score(shape, rate, pi.theta, alpha), dtype=float),
    }
