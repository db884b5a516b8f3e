"""Desk-scale replication of the simulation study.

Three experiments, each repeated over independent seeded datasets:

* estimation accuracy of the multivariate model (per distribution and theta),
* estimation of the univariate family-history model on the same designs,
* prediction accuracy of posterior summaries over family-size designs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baseline import GammaDist, Lognormal, ThreeParamGamma, Weibull
from .data import ParamSet, pack
from .estimate import FitOptions, fit_mle, make_objective, to_unconstrained
from .metrics import auc, concordance_counts, mspe, pearson, ppv_npv, r_squared, rank_corr
from .predict import classify, predict_cohort, prior_upper_quantile
from .simulate import Scenario, simulate_registry

__all__ = [
    "GRIDS",
    "StudyGrid",
    "replicate_seed",
    "estimation_rep",
    "fh_rep",
    "prediction_rep",
    "mean_se",
    "run_study",
    "format_tables",
]

STUDY_BASELINES = {
    "weibull": Weibull(8.0, 6.0),
    "gamma": GammaDist(8.0, 6.0),
    "lognormal": Lognormal(8.0, 6.0),
    "gamma3": ThreeParamGamma(8.0, 6.0, 15.0),
}
DESIGNS = ((2, 0.8), (5, 0.8), (10, 5.0), (20, 10.0))


@dataclass(frozen=True)
class StudyGrid:
    distributions: tuple[str, ...] = ("weibull",)
    thetas: tuple[float, ...] = (0.2, 0.5, 0.8)
    estimation_design: tuple[int, float] = (5, 0.8)
    prediction_designs: tuple[tuple[int, float], ...] = DESIGNS
    prediction_theta: float = 0.2
    p: float = 0.85
    fh: bool = True


GRIDS = {
    "small": StudyGrid(),
    "full": StudyGrid(distributions=("weibull", "gamma", "lognormal", "gamma3")),
    "tiny": StudyGrid(thetas=(0.5,), prediction_designs=((2, 0.8), (20, 10.0)), fh=True),
}


def replicate_seed(master: int, *keys: int) -> int:
    return int(np.random.SeedSequence([master, *keys]).generate_state(1)[0])


def mean_se(values) -> tuple[float, float]:
    v = np.asarray([x for x in values if x is not None and math.isfinite(x)], dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


def estimation_rep(sc: Scenario, opts: FitOptions) -> dict:
    """Simulate once and fit the multivariate model with the true baseline family."""
    fams, _ = simulate_registry(sc)
    coh = pack(fams)
    dist = type(sc.true_params.gamma)
    res = fit_mle(coh, "multivariate", opts, dist=dist)
    true_ll = make_objective(coh, "multivariate", dist)(to_unconstrained(sc.true_params))
    return {
        "estimates": res.estimates.as_dict(),
        "loglik_at_max": res.loglik_at_max,
        "loglik_at_truth": true_ll,
        "converged": res.converged,
        "event_fraction": float(coh.delta.mean()),
    }


def fh_rep(sc: Scenario, opts: FitOptions) -> dict:
    fams, labels = simulate_registry(sc)
    x = np.array([f.members[0].x for f in fams])
    delta = np.array([f.members[0].delta for f in fams], dtype=float)
    fh = np.array([lab.fh_end for lab in labels], dtype=float)
    res = fit_mle((x, delta, fh), "fh", opts, dist=type(sc.true_params.gamma))
    return {"estimates": res.estimates.as_dict(), "converged": res.converged, "fh_fraction": float(fh.mean())}


def prediction_rep(sc: Scenario, opts: FitOptions, alpha: float = 0.05, tau: float | None = None) -> dict:
    """Fit, predict every family and score predictions against the true frailties."""
    fams, labels = simulate_registry(sc)
    coh = pack(fams)
    res = fit_mle(coh, "multivariate", opts, dist=type(sc.true_params.gamma))
    pred = predict_cohort(coh, res.estimates, alpha)
    true_r = np.array([f.true_frailty for f in fams])
    true_class = (true_r > prior_upper_quantile(sc.true_params.theta, alpha)).astype(int)
    pred_class = classify(pred["score"], alpha if tau is None else tau)
    ppv, npv = ppv_npv(pred_class, true_class)
    out = {"theta_hat": res.estimates.theta, "converged": res.converged}
    for key in ("mean", "median"):
        r_hat = pred[key]
        out[key] = {
            "mspe": mspe(true_r, r_hat),
            "r_squared": r_squared(true_r, r_hat),
            "pearson_rho": pearson(true_r, r_hat),
            "rank_rho": rank_corr(true_r, r_hat),
        }
    den, lt, _ = concordance_counts(pred["mean"][coh.family_index], coh.x, coh.delta, coh.family_index)
    fh = np.array([lab.fh_end for lab in labels], dtype=float)
    out["binary"] = {
        "harrell_c": lt / den if den else None,
        "auc": auc(pred["score"], true_class),
        "ppv": ppv,
        "npv": npv,
        "auc_fh": auc(fh, true_class),
    }
    return out


def _call(job):
    kind, sc, opts, alpha, tau = job
    if kind == "estimation":
        return estimation_rep(sc, opts)
    if kind == "fh":
        return fh_rep(sc, opts)
    return prediction_rep(sc, opts, alpha, tau)


@dataclass
class StudyResult:
    reps: int
    n_families: int
    estimation: dict = field(default_factory=dict)
    fh: dict = field(default_factory=dict)
    prediction: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "reps": self.reps,
            "n_families": self.n_families,
            "estimation": self.estimation,
            "fh": self.fh,
            "prediction": self.prediction,
        }


def _summarise(rows: list[dict], keys: list[str]) -> dict:
    return {k: mean_se([r[k] for r in rows]) for k in keys}


def run_study(
    grid: StudyGrid,
    reps: int,
    n_families: int = 5000,
    seed: int = 0,
    opts: FitOptions | None = None,
    alpha: float = 0.05,
    tau: float | None = None,
    threads: int = 1,
) -> StudyResult:
    """Run every experiment of ``grid``; aggregation order is fixed by the grid."""
    opts = opts or FitOptions(n_starts=2)
    jobs, tags = [], []
    for di, dist in enumerate(grid.distributions):
        for ti, theta in enumerate(grid.thetas):
            for k in range(reps):
                sc = Scenario(
                    n_families=n_families,
                    n_F=grid.estimation_design[0],
                    lambda_F=grid.estimation_design[1],
                    true_params=ParamSet(theta, grid.p, STUDY_BASELINES[dist]),
                    seed=replicate_seed(seed, 1, di, ti, k),
                )
                jobs.append(("estimation", sc, opts, alpha, tau))
                tags.append(("estimation", f"{dist} theta={theta:g}"))
    if grid.fh:
        for ti, theta in enumerate(grid.thetas):
            for k in range(reps):
                sc = Scenario(
                    n_families=n_families,
                    n_F=grid.estimation_design[0],
                    lambda_F=grid.estimation_design[1],
                    true_params=ParamSet(theta, grid.p, STUDY_BASELINES["weibull"]),
                    seed=replicate_seed(seed, 2, ti, k),
                )
                jobs.append(("fh", sc, opts, alpha, tau))
                tags.append(("fh", f"theta={theta:g}"))
    for gi, (n_F, lam) in enumerate(grid.prediction_designs):
        for k in range(reps):
            sc = Scenario(
                n_families=n_families,
                n_F=n_F,
                lambda_F=lam,
                true_params=ParamSet(grid.prediction_theta, grid.p, STUDY_BASELINES["weibull"]),
                seed=replicate_seed(seed, 3, gi, k),
            )
            jobs.append(("prediction", sc, opts, alpha, tau))
            tags.append(("prediction", f"({n_F:g}, {lam:g})"))

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            outputs = list(ex.map(_call, jobs))
    else:
        outputs = [_call(j) for j in jobs]

    grouped: dict[tuple[str, str], list[dict]] = {}
    for tag, out in zip(tags, outputs):
        grouped.setdefault(tag, []).append(out)

    result = StudyResult(reps=reps, n_families=n_families)
    for (kind, label), rows in grouped.items():
        if kind in ("estimation", "fh"):
            names = [k for k in rows[0]["estimates"] if k != "distribution"]
            summary = _summarise([r["estimates"] for r in rows], names)
            summary["converged"] = sum(bool(r["converged"]) for r in rows)
            if kind == "estimation":
                summary["mle_dominates_truth"] = sum(
                    r["loglik_at_max"] >= r["loglik_at_truth"] - 1e-6 for r in rows
                )
            getattr(result, kind)[label] = summary
        else:
            entry = {}
            for key in ("mean", "median"):
                entry[key] = _summarise([r[key] for r in rows], list(rows[0][key]))
            entry["binary"] = _summarise([r["binary"] for r in rows], list(rows[0]["binary"]))
            result.prediction[label] = entry
    return result


def _fmt(ms: tuple[float, float], digits: int = 2) -> str:
    m, se = ms
    if not math.isfinite(m):
        return "-"
    se_txt = "-" if not math.isfinite(se) else (f"<{10**-3:.3f}" if se < 1e-3 else f"{se:.3f}")
    return f"{m:.{digits}f} ({se_txt})"


def _table(headers: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(headers, *rows)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths))  # noqa: E731
    sep = "  ".join("-" * w for w in widths)
    return "\n".join([line(headers), sep, *(line(r) for r in rows)])


def format_tables(res: StudyResult) -> str:
    """Aligned text tables: estimation, FH-model estimation, prediction accuracy."""
    parts = []
    if res.estimation:
        rows = []
        for label, s in res.estimation.items():
            names = [k for k in s if k not in ("converged", "mle_dominates_truth")]
            rows.append([label] + [f"{k}={_fmt(s[k])}" for k in names])
        width = max(len(r) for r in rows)
        rows = [r + [""] * (width - len(r)) for r in rows]
        parts.append(
            f"Estimation, multivariate model: mean (SE) over {res.reps} replicates, "
            f"n={res.n_families} families\n" + _table(["scenario"] + [""] * (width - 1), rows)
        )
    if res.fh:
        rows = [[label] + [f"{k}={_fmt(s[k])}" for k in s if k != "converged"] for label, s in res.fh.items()]
        width = max(len(r) for r in rows)
        parts.append(
            "Estimation, univariate FH model: mean (SE)\n" + _table(["scenario"] + [""] * (width - 1), rows)
        )
    if res.prediction:
        designs = list(res.prediction)
        rows = []
        for key, title in (("mean", "Mean"), ("median", "Median")):
            for idx, name in (("mspe", "MSPE"), ("r_squared", "R^2"), ("pearson_rho", "rho"), ("rank_rho", "Rank rho")):
                rows.append([title, name] + [_fmt(res.prediction[d][key][idx]) for d in designs])
        parts.append(
            "Prediction accuracy of posterior summaries: mean (SE)\n"
            + _table(["Frailty", "Index"] + designs, rows)
        )
        rows = []
        for idx, name in (("harrell_c", "C"), ("auc", "AUC"), ("ppv", "PPV"), ("npv", "NPV"), ("auc_fh", "AUC (FH)")):
            rows.append([name] + [_fmt(res.prediction[d]["binary"][idx]) for d in designs])
        parts.append("Concordance and binary classification: mean (SE)\n" + _table(["Index"] + designs, rows))
    return "\n\n".join(parts)
