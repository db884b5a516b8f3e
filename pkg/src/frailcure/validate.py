"""Oracle suite: closed forms checked against independent numerics.

Used by the ``validate`` subcommand and by the test suite.  Every check is
seeded and single-threaded, so reports are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .baseline import GammaDist, Lognormal, ThreeParamGamma, Weibull
from .data import Family, ParamSet, SubjectRecord
from .likelihood import family_loglik
from .metrics import auc, confusion, harrell_c
from .oracle import brute_auc, brute_pairs_c, brute_tally, quad_marginal_loglik, quad_posterior_density
from .predict import posterior_params

__all__ = [
    "CheckResult",
    "random_params",
    "random_family",
    "random_metric_instance",
    "check_likelihood",
    "check_posterior",
    "check_metrics",
    "run_suite",
]


@dataclass
class CheckResult:
    name: str
    cases: int
    worst: float
    tolerance: float

    def __post_init__(self):
        self.worst = float(self.worst)

    @property
    def passed(self) -> bool:
        return self.worst < self.tolerance

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": bool(self.passed)}


def random_params(rng: np.random.Generator) -> ParamSet:
    """A random but well-posed parameter set over all four baselines."""
    theta = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    p = float(rng.uniform(0.05, 0.95))
    kind = int(rng.integers(4))
    if kind == 0:
        g = Weibull(float(rng.uniform(0.5, 10.0)), float(rng.uniform(1.0, 80.0)))
    elif kind == 1:
        g = GammaDist(float(rng.uniform(0.5, 10.0)), float(rng.uniform(0.5, 10.0)))
    elif kind == 2:
        g = Lognormal(float(rng.uniform(1.0, 4.5)), float(rng.uniform(0.1, 1.5)))
    else:
        g = ThreeParamGamma(float(rng.uniform(0.5, 8.0)), float(rng.uniform(0.5, 8.0)), float(rng.uniform(0.0, 20.0)))
    return ParamSet(theta, p, g)


def random_family(rng: np.random.Generator, pi: ParamSet, max_size: int = 8) -> Family:
    """Ages drawn around the baseline bulk; event indicators at random."""
    n = int(rng.integers(1, max_size + 1))
    hi = float(pi.gamma.quantile(0.995))
    members = []
    for j in range(n):
        x = float(rng.uniform(0.0, 1.2 * hi))
        delta = int(rng.random() < 0.4) if x > 0 else 0
        if delta and pi.gamma.density(x) <= 0:
            delta = 0
        members.append(SubjectRecord(x, delta, "main" if j == 0 else "sister"))
    return Family(f"V{n}", tuple(members))


def random_metric_instance(rng: np.random.Generator, max_n: int = 200):
    """Predictions with deliberate ties, tied times and several families."""
    n = int(rng.integers(2, max_n + 1))
    pred = rng.integers(0, max(2, n // 3), n).astype(float)
    x = rng.integers(1, max(2, n // 2), n).astype(float)
    delta = rng.integers(0, 2, n)
    fam = rng.integers(0, max(1, n // 3), n)
    labels = rng.integers(0, 2, n)
    return pred, x, delta, fam, labels


def check_likelihood(n_cases: int = 1000, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_cases):
        pi = random_params(rng)
        f = random_family(rng, pi)
        q = quad_marginal_loglik(pi, f)
        worst = max(worst, abs(family_loglik(pi, f) - q) / (1.0 + abs(q)))
    return CheckResult("likelihood vs quadrature", n_cases, worst, 1e-8)


def check_posterior(n_families: int = 200, n_grid: int = 50, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_families):
        pi = random_params(rng)
        f = random_family(rng, pi)
        shape, rate = posterior_params(f, pi)
        post = stats.gamma(shape, scale=1.0 / rate)
        grid = np.linspace(post.ppf(1e-4), post.ppf(1 - 1e-4), n_grid)
        grid = grid[grid > 0]
        closed = post.pdf(grid)
        quad = quad_posterior_density(pi, f, grid)
        worst = max(worst, float(np.max(np.abs(closed - quad) / np.maximum(1.0, closed))))
    return CheckResult("posterior vs quadrature", n_families, worst, 1e-8)


def check_metrics(n_instances: int = 200, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        pred, x, delta, fam, labels = random_metric_instance(rng)
        for ties in ("strict", "half"):
            for all_pairs in (False, True):
                a = harrell_c(pred, x, delta, fam, ties, all_pairs)
                b = brute_pairs_c(pred, x, delta, fam, ties, all_pairs)
                worst = max(worst, _gap(a, b))
        worst = max(worst, _gap(auc(pred, labels), brute_auc(pred, labels)))
        cls = (pred > np.median(pred)).astype(int)
        if confusion(cls, labels) != brute_tally(cls, labels):
            worst = math.inf
    return CheckResult("metrics vs enumeration", n_instances, worst, 1e-15)


def _gap(a, b) -> float:
    if a is None or b is None:
        return 0.0 if a is b else math.inf
    return abs(a - b)


def run_suite(scale: float = 1.0, seed: int = 0) -> list[CheckResult]:
    """All oracle checks; ``scale`` shrinks case counts for quick runs."""
    k = max(scale, 0.01)
    return [
        check_likelihood(max(int(1000 * k), 1), seed + 1),
        check_posterior(max(int(200 * k), 1), seed=seed + 2),
        check_metrics(max(int(200 * k), 1), seed + 3),
    ]
