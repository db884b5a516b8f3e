"""Synthetic multi-generational family registries.

Each family gets its own random stream derived from ``(seed, family index)``,
so output does not depend on generation order or worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .baseline import Weibull
from .cure import CureRateParams
from .data import Family, FhLabel, ParamSet, SubjectRecord, fh_indicator

__all__ = [
    "Scenario",
    "UNLIMITED_AGE",
    "family_rng",
    "draw_family_size",
    "draw_frailty",
    "draw_event_time",
    "draw_calendar",
    "simulate_family",
    "simulate_registry",
]

# censoring age used when censoring is switched off; far beyond any baseline scale
UNLIMITED_AGE = 1e6


@dataclass(frozen=True)
class Scenario:
    n_families: int = 5000
    n_F: int = 5
    lambda_F: float = 0.8
    true_params: ParamSet = field(default_factory=lambda: ParamSet(0.5, 0.85, Weibull(8.0, 6.0)))
    follow_up_end: float = 2020.0
    mother_birth_range: tuple[float, float] = (1905.0, 1945.0)
    maternal_age_range: tuple[float, float] = (25.0, 35.0)
    seed: int = 0
    # death age ~ Lognormal(log(death_median), death_log_sd) truncated to [0, death_max]
    death_median: float = 82.0
    death_log_sd: float = 0.15
    death_max: float = 110.0
    # loss to follow-up ~ Exponential(mean lost_mean); None disables it
    lost_mean: float | None = 200.0
    censoring: bool = True

    def __post_init__(self):
        if self.n_families < 1:
            raise ValueError("n_families must be >= 1")
        if self.n_F < 1:
            raise ValueError("n_F must be >= 1")
        if not self.lambda_F > 0:
            raise ValueError("lambda_F must be positive")
        for name in ("mother_birth_range", "maternal_age_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} must be ordered (lo <= hi)")
        if not self.death_max > 0 or not self.death_log_sd >= 0:
            raise ValueError("invalid death-age configuration")

    def with_(self, **kw) -> "Scenario":
        return replace(self, **kw)


def family_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def draw_family_size(rng: np.random.Generator, n_F: int, lambda_F: float) -> int:
    """``1 + min(n_F - 1, Poisson(lambda_F))``."""
    if n_F < 1:
        raise ValueError("n_F must be >= 1")
    return 1 + min(n_F - 1, int(rng.poisson(lambda_F)))


def draw_frailty(rng: np.random.Generator, theta: float, size=None):
    """Gamma(shape=theta, rate=theta) draw(s)."""
    return rng.gamma(theta, 1.0 / theta, size=size)


def draw_event_time(rng: np.random.Generator, c: CureRateParams, r: float, size=None):
    """Latent event time(s) given frailty ``r``; ``inf`` marks a non-susceptible.

    ``u <= p**r`` gives a non-susceptible, otherwise
    ``t = S~^{-1}((u**(1/r) - p) / (1 - p))``.
    """
    if not r > 0:
        raise ValueError("frailty must be positive")
    u = rng.random(size)
    cured = u <= c.p**r
    arg = (np.power(u, 1.0 / r) - c.p) / (1.0 - c.p)
    arg = np.clip(arg, 1e-300, 1.0 - 1e-16)
    t = np.where(cured, math.inf, c.baseline.quantile(np.where(cured, 0.5, arg)))
    return float(t) if np.ndim(t) == 0 else t


def _death_ages(rng, sc: Scenario, n: int) -> np.ndarray:
    out = np.empty(n)
    filled = 0
    while filled < n:
        draw = sc.death_median * np.exp(sc.death_log_sd * rng.standard_normal(n - filled))
        draw = draw[draw <= sc.death_max]
        out[filled : filled + draw.size] = draw
        filled += draw.size
    return out


def draw_calendar(rng: np.random.Generator, sc: Scenario, family_size: int):
    """Birth years and censoring ages for ``[main, mother, sister, ...]``.

    Returns ``(birth_year, censor_age, admin_age)`` arrays.  A family of size
    one holds only the main subject; the mother's birth is still drawn to
    anchor her daughters.
    """
    if family_size < 1:
        raise ValueError("family_size must be >= 1")
    mother = rng.uniform(*sc.mother_birth_range)
    n_daughters = family_size - 1 if family_size > 1 else 1
    daughters = mother + rng.uniform(*sc.maternal_age_range, size=n_daughters)
    if family_size == 1:
        birth = daughters
    else:
        birth = np.concatenate(([daughters[0], mother], daughters[1:]))
    admin = np.maximum(sc.follow_up_end - birth, 0.0)
    death = _death_ages(rng, sc, family_size)
    if sc.lost_mean is not None:
        lost = rng.exponential(sc.lost_mean, size=family_size)
    else:
        lost = np.full(family_size, math.inf)
    censor = np.minimum(np.minimum(death, lost), admin)
    if not sc.censoring:
        censor = np.full(family_size, UNLIMITED_AGE)
    return birth, censor, admin


def simulate_family(sc: Scenario, index: int) -> tuple[Family, FhLabel]:
    rng = family_rng(sc.seed, index)
    pi = sc.true_params
    size = draw_family_size(rng, sc.n_F, sc.lambda_F)
    r = float(draw_frailty(rng, pi.theta))
    birth, censor, _ = draw_calendar(rng, sc, size)
    t = draw_event_time(rng, pi.cure, r, size=size)
    roles = ["main", "mother"] + ["sister"] * (size - 2) if size > 1 else ["main"]
    fid = f"F{index + 1}"
    members = []
    for j in range(size):
        event = bool(t[j] <= censor[j])
        x = float(t[j]) if event else float(censor[j])
        members.append(
            SubjectRecord(
                x=x,
                delta=int(event),
                role=roles[j],
                subject_id=f"{fid}.{j}",
                birth_year=float(birth[j]),
                event_year=float(birth[j] + t[j]) if event else None,
            )
        )
    fam = Family(fid, tuple(members), r)
    return fam, fh_indicator(fam, 0)


def simulate_registry(sc: Scenario) -> tuple[list[Family], list[FhLabel]]:
    """Generate ``sc.n_families`` families and the main subjects' FH labels."""
    fams, labels = [], []
    for i in range(sc.n_families):
        f, lab = simulate_family(sc, i)
        fams.append(f)
        labels.append(lab)
    return fams, labels
