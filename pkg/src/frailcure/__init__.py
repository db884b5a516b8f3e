"""Shared-frailty cure-rate models for family registry data."""

from .baseline import DISTRIBUTIONS, GammaDist, Lognormal, ThreeParamGamma, Weibull, make_baseline
from .cure import CureRateParams, FrailtyPrior, hazard0, lehmann_survival, marginal_cure, s0
from .data import Cohort, DataError, Family, FhLabel, ParamSet, SubjectRecord, fh_indicator, read_csv, write_csv
from .estimate import FitOptions, FitResult, fit_mle, observed_information
from .likelihood import FhParamSet, family_loglik, fh_loglik, total_loglik
from .metrics import EvalReport, auc, evaluate, harrell_c
from .predict import high_risk_score, posterior_mean, posterior_median, posterior_params, predict_cohort
from .simulate import Scenario, simulate_registry

__version__ = "0.1.0"

__all__ = [
    "DISTRIBUTIONS",
    "GammaDist",
    "Lognormal",
    "ThreeParamGamma",
    "Weibull",
    "make_baseline",
    "CureRateParams",
    "FrailtyPrior",
    "hazard0",
    "lehmann_survival",
    "marginal_cure",
    "s0",
    "Cohort",
    "DataError",
    "Family",
    "FhLabel",
    "ParamSet",
    "SubjectRecord",
    "fh_indicator",
    "read_csv",
    "write_csv",
    "FitOptions",
    "FitResult",
    "fit_mle",
    "observed_information",
    "FhParamSet",
    "family_loglik",
    "fh_loglik",
    "total_loglik",
    "EvalReport",
    "auc",
    "evaluate",
    "harrell_c",
    "high_risk_score",
    "posterior_mean",
    "posterior_median",
    "posterior_params",
    "predict_cohort",
    "Scenario",
    "simulate_registry",
]
