"""Command-line entry point.

Subcommands: simulate, fit, predict, evaluate, validate, replicate.  Every
subcommand is a deterministic function of its inputs and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .baseline import DISTRIBUTIONS, make_baseline
from .config import Config, ConfigError, env_seed, env_threads, load_config
from .data import DataError, ParamSet, fh_indicator, pack, read_csv, write_csv
from .estimate import MODELS, EstimationError, fit_mle
from .likelihood import FhParamSet
from .metrics import evaluate
from .predict import classify, predict_cohort, prior_upper_quantile
from .simulate import simulate_registry
from .study import GRIDS, format_tables, run_study
from .validate import run_suite

__all__ = ["main", "run"]


class CliError(Exception):
    pass


def _dump_json(doc, path) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _finite_or_none(v):
    return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v


def _config(args) -> Config:
    return load_config(args.config) if getattr(args, "config", None) else Config()


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _config(args)
    seed = env_seed(args.seed)
    if seed is None:
        raise CliError("--seed is required (or set FRAILCURE_SEED)")
    sc = cfg.scenario.with_(seed=seed)
    if args.n_families is not None:
        sc = sc.with_(n_families=args.n_families)
    families, labels = simulate_registry(sc)
    write_csv(args.out, families, labels)
    return 0


def _fh_arrays(families, change_age):
    x, delta, fh = [], [], []
    for f in families:
        i = f.main_index
        if i is None:
            raise DataError(f"family {f.id!r} has no main subject; the FH model needs one per family")
        m = f.members[i]
        x.append(m.x)
        delta.append(m.delta)
        fh.append(fh_indicator(f, i).fh_end)
    return np.array(x), np.array(delta, dtype=float), np.array(fh, dtype=float)


def _main_only(families):
    out = []
    for f in families:
        i = f.main_index
        if i is None:
            raise DataError(f"family {f.id!r} has no main subject")
        out.append(replace(f, members=(f.members[i],)))
    return out


def cmd_fit(args) -> int:
    cfg = _config(args)
    model = args.model or cfg.model
    dist_name = args.dist or cfg.distribution
    if dist_name not in DISTRIBUTIONS:
        raise CliError(f"unknown distribution {dist_name!r}")
    dist = DISTRIBUTIONS[dist_name]
    families, change_age = read_csv(args.data)
    seed = env_seed(cfg.fit.seed)
    opts = replace(cfg.fit, seed=seed)
    if args.n_starts is not None:
        opts = replace(opts, n_starts=args.n_starts)
    if model == "fh":
        data = _fh_arrays(families, change_age)
    elif model == "univariate":
        if args.main_only:
            families = _main_only(families)
        if any(f.size > 1 for f in families):
            raise CliError("univariate model needs singleton families; pass --main-only")
        data = pack(families)
    else:
        data = pack(families)
    res = fit_mle(data, model, opts, dist=dist)
    doc = res.to_dict()
    doc["loglik_at_max"] = _finite_or_none(doc["loglik_at_max"])
    _dump_json(doc, args.out)
    return 0


def params_from_dict(d: dict) -> ParamSet | FhParamSet:
    """Rebuild a parameter set from the ``estimates`` block of a fit report."""
    est = d.get("estimates", d)
    dist = DISTRIBUTIONS.get(est.get("distribution", ""))
    if dist is None:
        raise CliError("parameter file lacks a known 'distribution'")
    try:
        g = make_baseline(dist.name, [est[k] for k in dist.param_names()])
        if "beta" in est:
            return FhParamSet(float(est["beta"]), float(est["p"]), g)
        return ParamSet(float(est["theta"]), float(est["p"]), g)
    except KeyError as e:
        raise CliError(f"parameter file missing {e}") from None


def cmd_predict(args) -> int:
    cfg = _config(args)
    with open(args.params) as fh:
        pi = params_from_dict(json.load(fh))
    if not isinstance(pi, ParamSet):
        raise CliError("predict needs multivariate-model parameters (theta, p, baseline)")
    families, _ = read_csv(args.data)
    alpha = args.alpha if args.alpha is not None else cfg.alpha
    tau = args.tau if args.tau is not None else (cfg.tau if cfg.tau is not None else alpha)
    pred = predict_cohort(families, pi, alpha)
    cls = classify(pred["score"], tau)
    with _open_out(args.out) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["family_id", "shape", "rate", "mean", "median", "score", "class"])
        for i, f in enumerate(families):
            w.writerow(
                [f.id]
                + [repr(float(pred[k][i])) for k in ("shape", "rate", "mean", "median", "score")]
                + [int(cls[i])]
            )
    return 0


class _open_out:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            return sys.stdout
        self.fh = open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.path not in (None, "-"):
            self.fh.close()


def _read_predictions(path) -> dict[str, dict]:
    out = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"family_id", "mean", "median", "score", "class"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataError(f"line 1: prediction header must contain {sorted(need)}")
        for row in reader:
            try:
                out[row["family_id"]] = {
                    "mean": float(row["mean"]),
                    "median": float(row["median"]),
                    "score": float(row["score"]),
                    "class": int(row["class"]),
                }
            except ValueError:
                raise DataError(f"line {reader.line_num}: malformed prediction row") from None
    return out


def cmd_evaluate(args) -> int:
    preds = _read_predictions(args.pred)
    families, _ = read_csv(args.truth)
    missing = [f.id for f in families if f.id not in preds]
    if missing:
        raise CliError(f"no prediction for families {missing[:5]}")
    if any(f.true_frailty is None for f in families):
        raise CliError("truth CSV lacks a true_frailty column")
    true_r = np.array([f.true_frailty for f in families])
    key = "median" if args.summary == "median" else "mean"
    pred_r = np.array([preds[f.id][key] for f in families])
    scores = np.array([preds[f.id]["score"] for f in families])
    pred_class = np.array([preds[f.id]["class"] for f in families])
    true_class = None
    if args.theta is not None:
        true_class = (true_r > prior_upper_quantile(args.theta, args.alpha)).astype(int)
    coh = pack(families)
    subjects = (pred_r[coh.family_index], coh.x, coh.delta, coh.family_index)
    rep = evaluate(true_r, pred_r, scores, true_class, pred_class if true_class is not None else None,
                   subjects, ties=args.ties, all_pairs=args.all_pairs)
    _dump_json(rep.to_dict(), args.out)
    return 0


def cmd_validate(args) -> int:
    results = run_suite(args.scale, args.seed)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name.ljust(width)}  cases={r.cases:<5d} worst={r.worst:.3e}  tol={r.tolerance:.0e}")
    if args.out:
        _dump_json([r.to_dict() for r in results], args.out)
    return 0 if all(r.passed for r in results) else 1


def cmd_replicate(args) -> int:
    cfg = _config(args)
    grid = GRIDS[args.grid]
    seed = env_seed(args.seed)
    threads = env_threads(args.threads)
    opts = replace(cfg.fit, n_starts=args.n_starts) if args.n_starts else replace(cfg.fit, n_starts=2)
    res = run_study(grid, args.reps, args.n_families, seed or 0, opts, cfg.alpha, cfg.tau, threads)
    print(format_tables(res))
    if args.out:
        _dump_json(res.to_dict(), args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frailcure", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate a synthetic family registry CSV")
    s.add_argument("--config")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--n-families", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="maximum-likelihood fit; writes a JSON report")
    f.add_argument("--data", required=True)
    f.add_argument("--config")
    f.add_argument("--model", choices=MODELS)
    f.add_argument("--dist", choices=sorted(DISTRIBUTIONS))
    f.add_argument("--main-only", action="store_true", help="keep only main subjects (univariate model)")
    f.add_argument("--n-starts", type=int)
    f.add_argument("--out", default="-")
    f.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="posterior frailty summaries per family")
    p.add_argument("--data", required=True)
    p.add_argument("--params", required=True, help="fit report JSON")
    p.add_argument("--config")
    p.add_argument("--alpha", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="score predictions against true frailties")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--theta", type=float, help="generating theta; enables AUC/PPV/NPV")
    e.add_argument("--alpha", type=float, default=0.05)
    e.add_argument("--summary", choices=("mean", "median"), default="mean")
    e.add_argument("--ties", choices=("strict", "half"), default="strict")
    e.add_argument("--all-pairs", action="store_true")
    e.add_argument("--out", default="-")
    e.set_defaults(func=cmd_evaluate)

    v = sub.add_parser("validate", help="run the oracle suite")
    v.add_argument("--scale", type=float, default=1.0, help="fraction of the default case counts")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("replicate", help="desk-scale simulation study")
    r.add_argument("--config")
    r.add_argument("--grid", choices=sorted(GRIDS), default="small")
    r.add_argument("--reps", type=int, default=20)
    r.add_argument("--n-families", type=int, default=5000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--n-starts", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_replicate)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (ConfigError, DataError, CliError, EstimationError, FileNotFoundError, ValueError) as e:
        print(f"frailcure {args.command}: error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
