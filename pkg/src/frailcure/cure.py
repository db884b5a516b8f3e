"""Cure-rate survival and its Lehmann (power) family.

``S0(t) = p + (1 - p) * S~(t)`` is the population survival; conditional on a
frailty ``r`` the survival is ``S0(t) ** r``, which is again a cure-rate model
with cure fraction ``p ** r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .baseline import BaselineParams, _check_times, _out

__all__ = [
    "CureRateParams",
    "FrailtyPrior",
    "s0",
    "log_s0",
    "lehmann_survival",
    "conditional_cure",
    "susceptible_survival_r",
    "susceptible_density_r",
    "hazard0",
    "marginal_cure",
]


def _check_p(p: float) -> None:
    if not 0.0 < p < 1.0:
        raise ValueError(f"cure fraction p must lie strictly in (0, 1), got {p}")


def _check_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(~(r > 0)) or not np.all(np.isfinite(r)):
        raise ValueError("frailty r must be positive and finite")
    return r


@dataclass(frozen=True)
class CureRateParams:
    p: float
    baseline: BaselineParams

    def __post_init__(self):
        _check_p(self.p)

    # array kernels without input validation, shared with the likelihood
    def _log_s0(self, t):
        lsf = self.baseline._log_sf(t)
        out = np.logaddexp(math.log(self.p), math.log1p(-self.p) + lsf)
        # exact where the susceptible survival is exactly 1 (logaddexp rounds)
        return np.where(lsf == 0.0, 0.0, out)

    def _log_event(self, t):
        """log[(1 - p) f~(t)]."""
        return math.log1p(-self.p) + self.baseline._log_pdf(t)


@dataclass(frozen=True)
class FrailtyPrior:
    """Gamma(theta, theta) prior on the shared frailty: mean 1, variance 1/theta."""

    theta: float

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be positive and finite, got {self.theta}")

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def variance(self) -> float:
        return 1.0 / self.theta

    def log_density(self, r):
        r = np.asarray(r, dtype=float)
        th = self.theta
        with np.errstate(divide="ignore"):
            out = th * math.log(th) - special.gammaln(th) + special.xlogy(th - 1.0, r) - th * r
        return _out(np.where(r > 0, out, -np.inf))


def s0(c: CureRateParams, t):
    return _out(np.exp(c._log_s0(_check_times(t))))


def log_s0(c: CureRateParams, t):
    return _out(c._log_s0(_check_times(t)))


def lehmann_survival(c: CureRateParams, t, r):
    r = _check_r(r)
    return _out(np.exp(r * c._log_s0(_check_times(t))))


def conditional_cure(c: CureRateParams, r):
    r = _check_r(r)
    return _out(np.exp(r * math.log(c.p)))


def susceptible_survival_r(c: CureRateParams, t, r):
    """Proper survival of susceptibles given frailty ``r``."""
    r = _check_r(r)
    t = _check_times(t)
    log_p = math.log(c.p)
    pr = np.exp(r * log_p)
    # s0^r - p^r, computed as p^r * expm1(r * (log s0 - log p)) to limit cancellation
    num = pr * np.expm1(r * (c._log_s0(t) - log_p))
    out = num / (-np.expm1(r * log_p))
    out = np.where((out < 0) & (out >= -1e-12), 0.0, out)
    return _out(out)


def susceptible_density_r(c: CureRateParams, t, r):
    r = _check_r(r)
    t = _check_times(t)
    log_out = (
        math.log1p(-c.p)
        - np.log(-np.expm1(r * math.log(c.p)))
        + np.log(r)
        + (r - 1.0) * c._log_s0(t)
        + c.baseline._log_pdf(t)
    )
    return _out(np.exp(log_out))


def hazard0(c: CureRateParams, t):
    """Population hazard ``(1-p) f~(t) / S0(t)``, evaluated in log space."""
    t = _check_times(t)
    with np.errstate(divide="ignore"):
        return _out(np.exp(c._log_event(t) - c._log_s0(t)))


def marginal_cure(theta: float, p: float) -> float:
    """Marginal non-susceptible fraction ``E[p**R]`` under Gamma(theta, theta)."""
    FrailtyPrior(theta)
    _check_p(p)
    return math.exp(-theta * math.log1p(-math.log(p) / theta))
