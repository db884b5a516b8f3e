"""Proper survival distributions for the susceptible sub-population.

Every distribution exposes vectorised ``survival``, ``log_survival``,
``density``, ``log_density`` and ``quantile`` methods.  ``quantile`` is
defined on the survival scale: ``survival(quantile(u)) == u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import ClassVar

import numpy as np
from scipy import special

__all__ = [
    "BaselineParams",
    "Weibull",
    "GammaDist",
    "Lognormal",
    "ThreeParamGamma",
    "DISTRIBUTIONS",
    "make_baseline",
    "survival",
    "density",
    "quantile",
]


def _check_times(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("times must be finite")
    if np.any(t < 0):
        raise ValueError("times must be non-negative")
    return t


def _check_probs(u):
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0) | ~(u < 1)):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    return u


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass(frozen=True)
class BaselineParams:
    """Base class; concrete variants implement the ``_`` hooks on arrays."""

    name: ClassVar[str] = ""
    positive: ClassVar[tuple[str, ...]] = ()

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v):
                raise ValueError(f"{self.name}: {f.name} must be finite, got {v}")
            if f.name in self.positive and not v > 0:
                raise ValueError(f"{self.name}: {f.name} must be > 0, got {v}")

    @property
    def params(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, f.name)) for f in fields(self))

    @classmethod
    def param_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    # public, validated API
    def survival(self, t):
        return _out(np.exp(self._log_sf(_check_times(t))))

    def log_survival(self, t):
        return _out(self._log_sf(_check_times(t)))

    def density(self, t):
        return _out(np.exp(self._log_pdf(_check_times(t))))

    def log_density(self, t):
        return _out(self._log_pdf(_check_times(t)))

    def quantile(self, u):
        """Time ``t`` with ``survival(t) == u``."""
        u = _check_probs(u)
        t = self._isf(u)
        # one Newton step on the survival scale tightens the inverse
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            f = np.exp(self._log_pdf(t))
            step = (np.exp(self._log_sf(t)) - u) / f
            t_new = t + step
            ok = np.isfinite(t_new) & (f > 0) & (np.abs(step) < 1e-3 * np.maximum(t, 1e-300))
        t = np.where(ok, t_new, t)
        return _out(t)

    def _log_sf(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def _log_pdf(self, t):  # pragma: no cover - abstract
        raise NotImplementedError

    def _isf(self, u):  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class Weibull(BaselineParams):
    shape: float
    scale: float

    name: ClassVar[str] = "weibull"
    positive: ClassVar[tuple[str, ...]] = ("shape", "scale")

    def _log_sf(self, t):
        return -((t / self.scale) ** self.shape)

    def _log_pdf(self, t):
        z = t / self.scale
        with np.errstate(divide="ignore"):
            return (
                math.log(self.shape / self.scale)
                + special.xlogy(self.shape - 1.0, z)
                - z**self.shape
            )

    def _isf(self, u):
        return self.scale * (-np.log(u)) ** (1.0 / self.shape)


@dataclass(frozen=True)
class GammaDist(BaselineParams):
    shape: float
    scale: float

    name: ClassVar[str] = "gamma"
    positive: ClassVar[tuple[str, ...]] = ("shape", "scale")

    def _log_sf(self, t):
        z = t / self.scale
        with np.errstate(divide="ignore"):
            out = np.log(special.gammaincc(self.shape, z))
        # deep tail: asymptotic log Q(a, z) ~ (a-1) log z - z - lgamma(a)
        deep = ~np.isfinite(out)
        if np.any(deep):
            zd = np.broadcast_to(z, out.shape)[deep]
            out = np.array(out, copy=True)
            out[deep] = (
                (self.shape - 1.0) * np.log(zd)
                - zd
                - special.gammaln(self.shape)
                + np.log1p((self.shape - 1.0) / zd)
            )
        return out

    def _log_pdf(self, t):
        z = t / self.scale
        with np.errstate(divide="ignore"):
            return (
                special.xlogy(self.shape - 1.0, z)
                - z
                - special.gammaln(self.shape)
                - math.log(self.scale)
            )

    def _isf(self, u):
        return self.scale * special.gammainccinv(self.shape, u)


@dataclass(frozen=True)
class Lognormal(BaselineParams):
    """Lognormal with ``mu`` and ``sigma`` on the log-time scale."""

    mu: float
    sigma: float

    name: ClassVar[str] = "lognormal"
    positive: ClassVar[tuple[str, ...]] = ("sigma",)

    def _log_sf(self, t):
        with np.errstate(divide="ignore"):
            z = (np.log(t) - self.mu) / self.sigma
        return special.log_ndtr(-z)

    def _log_pdf(self, t):
        with np.errstate(divide="ignore", invalid="ignore"):
            logt = np.log(t)
            z = (logt - self.mu) / self.sigma
            out = -0.5 * z * z - logt - math.log(self.sigma) - 0.5 * math.log(2 * math.pi)
        return np.where(t > 0, out, -np.inf)

    def _isf(self, u):
        return np.exp(self.mu - self.sigma * special.ndtri(u))


@dataclass(frozen=True)
class ThreeParamGamma(BaselineParams):
    """Gamma shifted by a threshold ``location``; survival is 1 below it."""

    shape: float
    scale: float
    location: float

    name: ClassVar[str] = "gamma3"
    positive: ClassVar[tuple[str, ...]] = ("shape", "scale")

    def __post_init__(self):
        super().__post_init__()
        if self.location < 0:
            raise ValueError(f"gamma3: location must be >= 0, got {self.location}")

    @property
    def _core(self) -> GammaDist:
        return GammaDist(self.shape, self.scale)

    def _log_sf(self, t):
        return self._core._log_sf(np.maximum(t - self.location, 0.0))

    def _log_pdf(self, t):
        s = t - self.location
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self._core._log_pdf(np.maximum(s, 0.0))
        return np.where(s > 0, out, -np.inf)

    def _isf(self, u):
        return self.location + self._core._isf(u)


DISTRIBUTIONS: dict[str, type[BaselineParams]] = {
    cls.name: cls for cls in (Weibull, GammaDist, Lognormal, ThreeParamGamma)
}


def make_baseline(name: str, params) -> BaselineParams:
    """Build a baseline from its config name and ordered parameter list."""
    try:
        cls = DISTRIBUTIONS[name.lower()]
    except KeyError:
        raise ValueError(
            f"unknown distribution {name!r}; expected one of {sorted(DISTRIBUTIONS)}"
        ) from None
    params = [float(v) for v in params]
    if len(params) != len(cls.param_names()):
        raise ValueError(f"{name} takes parameters {cls.param_names()}, got {params}")
    return cls(*params)


def survival(d: BaselineParams, t):
    return d.survival(t)


def density(d: BaselineParams, t):
    return d.density(t)


def quantile(d: BaselineParams, u):
    return d.quantile(u)
