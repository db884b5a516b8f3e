"""Exact log-likelihoods of the shared-frailty cure-rate family.

All terms are evaluated in log space.  Censoring-distribution factors are
dropped, so every log-likelihood here is defined up to an additive constant
that does not depend on the model parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .baseline import BaselineParams
from .cure import CureRateParams, _check_r
from .data import Cohort, DataError, Family, FhLabel, ParamSet, SubjectRecord, pack

__all__ = [
    "FhParamSet",
    "conditional_contribution_log",
    "family_loglik",
    "family_logliks",
    "total_loglik",
    "univariate_loglik",
    "cr_loglik",
    "fh_loglik",
    "fh_arrays",
]


@dataclass(frozen=True)
class FhParamSet:
    """Parameters of the univariate family-history cure-rate model."""

    beta: float
    p: float
    gamma: BaselineParams

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        CureRateParams(self.p, self.gamma)

    @property
    def cure(self) -> CureRateParams:
        return CureRateParams(self.p, self.gamma)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "p": self.p,
            "distribution": self.gamma.name,
            **dict(zip(self.gamma.param_names(), self.gamma.params)),
        }


def _event_terms(c: CureRateParams, x: np.ndarray, delta: np.ndarray, log_s0: np.ndarray):
    """Per-subject ``delta * log[(1-p) f~(x) / S0(x)]`` (zero when censored)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        hz = c._log_event(x) - log_s0
    return np.where(delta > 0, hz, 0.0)


def conditional_contribution_log(c: CureRateParams, rec: SubjectRecord, r: float) -> float:
    """Log of one subject's observed-data kernel given frailty ``r``."""
    r = float(_check_r(r))
    x = np.asarray(rec.x, dtype=float)
    ls0 = float(c._log_s0(x))
    out = r * ls0
    if rec.delta:
        with np.errstate(divide="ignore"):
            out += math.log(r) + float(c._log_event(x)) - ls0
    return out


def family_logliks(pi: ParamSet, data: Sequence[Family] | Cohort) -> np.ndarray:
    """Marginal log-likelihood of each family, with the frailty integrated out."""
    coh = pack(data)
    theta = pi.theta
    c = pi.cure
    ls0 = c._log_s0(coh.x)
    ev = coh.family_sum(_event_terms(c, coh.x, coh.delta, ls0))
    log_h = coh.family_sum(ls0)
    d = coh.events
    return ev + log_rising_ratio(theta, d) - (theta + d) * np.log1p(-log_h / theta)


def log_rising_ratio(theta: float, d) -> np.ndarray:
    """``log[Gamma(theta + d) / (Gamma(theta) theta**d)]`` for integer ``d >= 0``.

    Summed as ``sum_{k<d} log1p(k / theta)``, which stays accurate for huge
    ``theta`` where the gammaln difference cancels catastrophically.
    """
    d = np.asarray(d, dtype=np.int64)
    top = int(d.max(initial=0))
    table = np.concatenate(([0.0], np.cumsum(np.log1p(np.arange(top) / theta))))
    return table[d]


def family_loglik(pi: ParamSet, f: Family) -> float:
    return float(family_logliks(pi, [f])[0])


def total_loglik(pi: ParamSet, data: Sequence[Family] | Cohort) -> float:
    """Sum of family log-likelihoods (compensated summation)."""
    terms = family_logliks(pi, data)
    if np.any(np.isneginf(terms)):
        return -math.inf
    return math.fsum(terms.tolist())


def univariate_loglik(pi: ParamSet, data: Sequence[Family] | Cohort) -> float:
    """Likelihood for one subject per family; same formula as ``total_loglik``."""
    coh = pack(data)
    if np.any(coh.sizes != 1):
        raise DataError("univariate likelihood requires exactly one subject per family")
    return total_loglik(pi, coh)


def cr_loglik(c: CureRateParams, x, delta) -> float:
    """Plain cure-rate observed-data log-likelihood, no frailty and no covariate."""
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    ls0 = c._log_s0(x)
    with np.errstate(divide="ignore"):
        terms = np.where(delta > 0, c._log_event(x), ls0)
    if np.any(np.isneginf(terms)):
        return -math.inf
    return math.fsum(terms.tolist())


def fh_arrays(data: Sequence[tuple[SubjectRecord, FhLabel]]):
    x = np.array([rec.x for rec, _ in data], dtype=float)
    delta = np.array([rec.delta for rec, _ in data], dtype=float)
    fh = np.array([lab.fh_end for _, lab in data], dtype=float)
    return x, delta, fh


def _fh_terms(pifh: FhParamSet, x, delta, fh) -> np.ndarray:
    c = pifh.cure
    e = fh * (pifh.beta - 1.0) + 1.0
    ls0 = c._log_s0(x)
    with np.errstate(divide="ignore"):
        # event: (1 - p^e) f~_FH = e * S0^(e-1) * (1-p) f~ ; censored: S0^e
        event = np.log(e) + (e - 1.0) * ls0 + c._log_event(x)
    return np.where(delta > 0, event, e * ls0)


def fh_loglik(pifh: FhParamSet, data) -> float:
    """Univariate family-history cure-rate log-likelihood.

    ``data`` is a sequence of ``(SubjectRecord, FhLabel)`` pairs for main
    subjects, or a tuple of arrays ``(x, delta, fh)``.
    """
    if isinstance(data, tuple) and len(data) == 3 and isinstance(data[0], np.ndarray):
        x, delta, fh = data
    else:
        x, delta, fh = fh_arrays(data)
    terms = _fh_terms(pifh, x, delta, fh)
    if np.any(np.isneginf(terms)):
        return -math.inf
    return math.fsum(terms.tolist())
