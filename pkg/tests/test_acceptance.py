"""Acceptance criteria, each run at its stated tolerance.

Every test records a one-line verdict that is printed in the terminal
summary (see ``conftest.py``); running this file as a script prints the same
lines directly.
"""

from __future__ import annotations


import numpy as np
import pytest
from scipy import stats

from frailcure import CureRateParams, GammaDist, Lognormal, ParamSet, Weibull, marginal_cure
from frailcure.cure import hazard0, log_s0
from frailcure.data import Family, SubjectRecord
from frailcure.estimate import FitOptions
from frailcure.likelihood import FhParamSet, cr_loglik, fh_loglik
from frailcure.predict import high_risk_score, predict_cohort
from frailcure.simulate import Scenario, draw_event_time, simulate_registry
from frailcure.study import estimation_rep, fh_rep, prediction_rep, replicate_seed
from frailcure.validate import check_likelihood, check_metrics, check_posterior

try:
    from conftest import ACCEPTANCE
except ImportError:  # pragma: no cover - script use without pytest's rootdir on sys.path
    ACCEPTANCE = {}

THETAS = (0.2, 0.5, 0.8)
REPS = 20
N_FAMILIES = 5000
FIT = FitOptions(n_starts=3)


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _recovery(baseline, tag: int) -> tuple[bool, list[str]]:
    """Replicate-mean recovery over the theta grid at design (5, 0.8)."""
    ok = True
    lines = []
    for ti, theta in enumerate(THETAS):
        truth = ParamSet(theta, 0.85, baseline)
        ests = []
        for k in range(REPS):
            sc = Scenario(n_families=N_FAMILIES, n_F=5, lambda_F=0.8, true_params=truth,
                          seed=replicate_seed(2024, tag, ti, k))
            ests.append(estimation_rep(sc, FIT)["estimates"])
        mean = {key: float(np.mean([e[key] for e in ests])) for key in ests[0] if key != "distribution"}
        checks = {"theta": abs(mean["theta"] / theta - 1) <= 0.10, "p": abs(mean["p"] - 0.85) <= 0.02}
        for name, true_v in zip(baseline.param_names(), baseline.params):
            checks[name] = abs(mean[name] / true_v - 1) <= 0.05
        ok &= all(checks.values())
        lines.append(
            f"theta={theta}: " + ", ".join(f"{k}={mean[k]:.3f}{'' if v else '(x)'}" for k, v in checks.items())
        )
    return ok, lines


# ---------------------------------------------------------------------------


def test_c01_likelihood_matches_quadrature():
    res = check_likelihood(1000, seed=11)
    record(1, res.passed, f"1000 cases, worst relative gap {res.worst:.2e} (< 1e-8)")


def test_c02_posterior_matches_bayes_numerator():
    res = check_posterior(200, 50, seed=12)
    record(2, res.passed, f"200 families x 50 points, worst gap {res.worst:.2e} (< 1e-8)")


def test_c03_marginal_cure_fraction():
    v = marginal_cure(5.0, 0.85)
    lim = marginal_cure(1e6, 0.85) - 0.85
    ok = round(v, 4) == 0.8522 and 0 <= lim < 1e-5
    record(3, ok, f"marginal_cure(5, 0.85)={v:.6f}, marginal_cure(1e6, 0.85)-0.85={lim:.2e}")


@pytest.mark.slow
def test_c04_weibull_parameter_recovery():
    ok, lines = _recovery(Weibull(8.0, 6.0), 4)
    record(4, ok, f"Weibull(8,6), {REPS} reps, n={N_FAMILIES}: " + "; ".join(lines))


@pytest.mark.slow
@pytest.mark.parametrize("baseline", [GammaDist(8.0, 6.0), Lognormal(8.0, 6.0)], ids=["gamma", "lognormal"])
def test_c05_distribution_robustness(baseline):
    ok, lines = _recovery(baseline, 5 if baseline.name == "gamma" else 6)
    prev = ACCEPTANCE.get(5)
    detail = f"{baseline.name}: " + "; ".join(lines)
    if prev is not None:
        ok_all = prev[0] and ok
        ACCEPTANCE[5] = (ok_all, prev[1] + " | " + detail)
        print(f"criterion  5: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    else:
        record(5, ok, detail)


def _pit(rng, t, c: CureRateParams, r: float) -> np.ndarray:
    """Probability-integral transform of T against 1 - s0^r, randomised on the cure atom."""
    finite = np.isfinite(t)
    u = np.empty_like(t)
    u[finite] = -np.expm1(r * log_s0(c, t[finite]))
    cured_mass = c.p**r
    u[~finite] = 1.0 - cured_mass * rng.random(int((~finite).sum()))
    return u


def test_c06_generator_law():
    rng = np.random.default_rng(6)
    c = CureRateParams(0.85, Weibull(8.0, 6.0))
    pvals = {}
    for r in (0.5, 1.0, 2.0):
        t = draw_event_time(rng, c, r, size=100_000)
        pvals[f"s0^{r}"] = stats.kstest(_pit(rng, t, c, r), "uniform").pvalue
    tiny = CureRateParams(1e-12, Weibull(8.0, 6.0))
    for r in (0.5, 2.0):
        t = draw_event_time(rng, tiny, r, size=100_000)
        # S~^r with Weibull(k, lam) is Weibull(k, lam * r**(-1/k))
        pvals[f"weibull r={r}"] = stats.kstest(t, stats.weibull_min(8.0, scale=6.0 * r ** (-1 / 8.0)).cdf).pvalue
    ok = all(p > 0.01 for p in pvals.values())
    record(6, ok, "KS p-values " + ", ".join(f"{k}: {v:.3f}" for k, v in pvals.items()))


def test_c07_metric_oracles():
    res = check_metrics(200, seed=17)
    record(7, res.worst == 0.0, f"200 instances (n <= 200), worst |C or AUC gap| = {res.worst:.1e}")


@pytest.mark.slow
def test_c08_prediction_accuracy_direction():
    designs = {(2, 0.8): [], (5, 0.8): [], (20, 10.0): []}
    truth = ParamSet(0.2, 0.85, Weibull(8.0, 6.0))
    for gi, (n_F, lam) in enumerate(designs):
        for k in range(10):
            sc = Scenario(n_families=N_FAMILIES, n_F=n_F, lambda_F=lam, true_params=truth,
                          seed=replicate_seed(2024, 8, gi, k))
            designs[(n_F, lam)].append(prediction_rep(sc, FitOptions(n_starts=2))["mean"])
    rho = {d: float(np.mean([m["pearson_rho"] for m in v])) for d, v in designs.items()}
    err = {d: float(np.mean([m["mspe"] for m in v])) for d, v in designs.items()}
    gap = rho[(20, 10.0)] - rho[(2, 0.8)]
    ok = gap >= 0.2 and err[(20, 10.0)] < err[(5, 0.8)]
    record(8, ok, f"rho(2,0.8)={rho[(2, 0.8)]:.3f}, rho(20,10)={rho[(20, 10.0)]:.3f}, gap={gap:.3f}; "
                  f"MSPE(5,0.8)={err[(5, 0.8)]:.3f}, MSPE(20,10)={err[(20, 10.0)]:.3f}")


@pytest.mark.slow
def test_c09_fh_model():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(50):
        g = Weibull(float(rng.uniform(1, 10)), float(rng.uniform(1, 20)))
        p = float(rng.uniform(0.05, 0.95))
        n = int(rng.integers(1, 3000))
        x = rng.uniform(0.0, 3 * g.scale, n)
        delta = (rng.random(n) < 0.3).astype(float) * (x > 0)
        fh = rng.integers(0, 2, n).astype(float)
        a = fh_loglik(FhParamSet(1.0, p, g), (x, delta, fh))
        b = cr_loglik(CureRateParams(p, g), x, delta)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    betas = []
    for k in range(5):
        sc = Scenario(n_families=N_FAMILIES, true_params=ParamSet(0.5, 0.85, Weibull(8.0, 6.0)),
                      seed=replicate_seed(2024, 9, k))
        betas.append(fh_rep(sc, FitOptions(n_starts=2))["estimates"]["beta"])
    ok = worst <= 1e-12 and float(np.mean(betas)) > 1.0
    record(9, ok, f"beta=1 gap {worst:.1e} (<= 1e-12); beta_hat over 5 reps: "
                  + ", ".join(f"{b:.2f}" for b in betas))


def test_c10_hazard_properties():
    worst = 0.0
    cases = [CureRateParams(p, g) for p in (0.1, 0.5, 0.85)
             for g in (Weibull(8.0, 6.0), GammaDist(8.0, 6.0), Lognormal(1.5, 0.4), Weibull(1.3, 3.0))]
    h = 1e-6
    for c in cases:
        # the bulk of the susceptible law, where the hazard is resolvable at this step
        grid = np.linspace(c.baseline.quantile(0.999), c.baseline.quantile(0.001), 40)
        fd = -(log_s0(c, grid + h) - log_s0(c, grid - h)) / (2 * h)
        closed = hazard0(c, grid)
        worst = max(worst, float(np.max(np.abs(fd - closed) / closed)))
    t = np.array([2.0, 4.0, 6.0, 8.0, 10.0])
    base = Weibull(8.0, 6.0)
    ratio = hazard0(CureRateParams(0.6, base), t) / hazard0(CureRateParams(0.85, base), t)
    case3 = float(ratio.max() / ratio.min())
    case4 = float(np.max(np.abs(hazard0(CureRateParams(0.85, base), t)
                                / hazard0(CureRateParams(0.85, Weibull(8.0, 6.0)), t) - 1.0)))
    ok = worst < 1e-5 and case3 > 1 + 1e-6 and case4 == 0.0
    record(10, ok, f"finite-difference gap {worst:.1e}; case III max/min ratio {case3:.4f}; case IV |ratio-1| {case4:.1e}")


def test_c11_posterior_inequalities():
    sc = Scenario(n_families=10_000, true_params=ParamSet(0.5, 0.85, Weibull(8.0, 6.0)), seed=11)
    fams, _ = simulate_registry(sc)
    n_bad = 0
    for theta in (0.2, 0.5, 5.0):
        pred = predict_cohort(fams, ParamSet(theta, 0.85, Weibull(8.0, 6.0)))
        n_bad += int(np.sum(~(pred["mean"] > pred["median"])))
    prior_fam = Family("P", (SubjectRecord(0.0, 0), SubjectRecord(0.0, 0, "mother")))
    exact = all(
        high_risk_score(prior_fam, ParamSet(theta, 0.85, Weibull(8.0, 6.0)), alpha) == alpha
        for theta in (0.2, 0.5, 5.0)
        for alpha in (0.01, 0.05, 0.2)
    )
    record(11, n_bad == 0 and exact, f"3 x 10^4 posteriors with mean <= median: {n_bad}; prior-equivalent score == alpha: {exact}")


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
