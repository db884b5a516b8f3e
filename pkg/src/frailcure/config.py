"""YAML configuration for scenarios and fit options.

Example::

    scenario:
      n_families: 5000
      n_F: 5
      lambda_F: 0.8
      theta: 0.5
      p: 0.85
      distribution: weibull
      params: [8, 6]
    fit:
      n_starts: 5
      tol: 1.0e-8
    model: multivariate
    alpha: 0.05
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import yaml

from .baseline import make_baseline
from .data import ParamSet
from .estimate import MODELS, FitOptions
from .simulate import Scenario

__all__ = ["Config", "ConfigError", "load_config", "parse_config", "env_seed", "env_threads"]

SCENARIO_KEYS = {f.name for f in fields(Scenario)} - {"true_params"}
FIT_KEYS = {f.name for f in fields(FitOptions)}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    scenario: Scenario = field(default_factory=Scenario)
    fit: FitOptions = field(default_factory=FitOptions)
    model: str = "multivariate"
    distribution: str = "weibull"
    alpha: float = 0.05
    tau: float | None = None

    @property
    def threshold(self) -> float:
        return self.alpha if self.tau is None else self.tau


def _scenario(d: dict) -> Scenario:
    d = dict(d)
    dist = d.pop("distribution", "weibull")
    params = d.pop("params", [8.0, 6.0])
    theta = d.pop("theta", 0.5)
    p = d.pop("p", 0.85)
    unknown = set(d) - SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    for key in ("mother_birth_range", "maternal_age_range"):
        if key in d:
            d[key] = tuple(float(v) for v in d[key])
    return Scenario(true_params=ParamSet(float(theta), float(p), make_baseline(dist, params)), **d)


def parse_config(doc: dict | None) -> Config:
    doc = dict(doc or {})
    unknown = set(doc) - {"scenario", "fit", "model", "distribution", "alpha", "tau"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    try:
        sc_doc = doc.get("scenario") or {}
        sc = _scenario(sc_doc)
        fit_doc = doc.get("fit") or {}
        bad = set(fit_doc) - FIT_KEYS
        if bad:
            raise ConfigError(f"unknown fit keys: {sorted(bad)}")
        fit = FitOptions(**fit_doc)
        model = doc.get("model", "multivariate")
        if model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}")
        dist = doc.get("distribution", sc_doc.get("distribution", "weibull"))
        cfg = Config(sc, fit, model, dist, float(doc.get("alpha", 0.05)), doc.get("tau"))
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    return cfg


def load_config(path) -> Config:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError(f"{path}: {where}{e}") from None
    if doc is not None and not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(doc)


def env_seed(default: int | None) -> int | None:
    v = os.environ.get("FRAILCURE_SEED")
    return int(v) if v else default


def env_threads(default: int = 1) -> int:
    v = os.environ.get("FRAILCURE_THREADS")
    return max(int(v), 1) if v else default
