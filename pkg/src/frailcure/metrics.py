"""Prediction-accuracy metrics for frailty predictions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

__all__ = [
    "EvalReport",
    "mspe",
    "pearson",
    "rank_corr",
    "r_squared",
    "harrell_c",
    "concordance_counts",
    "auc",
    "confusion",
    "ppv_npv",
    "evaluate",
]


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty input")
    return a, b


def mspe(true_r, pred_r) -> float:
    """Mean squared prediction error."""
    t, p = _pair(true_r, pred_r)
    return math.fsum(((t - p) ** 2).tolist()) / t.size


def pearson(a, b) -> float | None:
    a, b = _pair(a, b)
    da, db = a - a.mean(), b - b.mean()
    denom = math.sqrt(float(np.dot(da, da)) * float(np.dot(db, db)))
    if denom == 0:
        return None
    return float(np.dot(da, db)) / denom


def rank_corr(a, b) -> float | None:
    a, b = _pair(a, b)
    return pearson(stats.rankdata(a), stats.rankdata(b))


def r_squared(true_r, pred_r) -> float | None:
    """R^2 of the least-squares regression of true on predicted values."""
    t, p = _pair(true_r, pred_r)
    if t.size < 3:
        raise ValueError("r_squared needs at least 3 points")
    dp = p - p.mean()
    sxx = float(np.dot(dp, dp))
    if sxx == 0:
        return None
    dt = t - t.mean()
    slope = float(np.dot(dp, dt)) / sxx
    resid = dt - slope * dp
    sst = float(np.dot(dt, dt))
    if sst == 0:
        return None
    return min(max(1.0 - float(np.dot(resid, resid)) / sst, 0.0), 1.0)


class _Fenwick:
    def __init__(self, n: int):
        self.tree = [0] * (n + 1)

    def add(self, i: int) -> None:
        i += 1
        tree = self.tree
        while i < len(tree):
            tree[i] += 1
            i += i & -i

    def prefix(self, i: int) -> int:
        """Count of inserted ranks < i."""
        s = 0
        tree = self.tree
        while i > 0:
            s += tree[i]
            i -= i & -i
        return s


def _all_pair_counts(pred, x, delta) -> tuple[int, int, int]:
    """(comparable, lower-risk-outlives, tied-risk) over all ordered pairs."""
    ranks = stats.rankdata(pred, method="dense").astype(int) - 1
    order = np.argsort(-x, kind="stable")
    xs = x[order]
    bit = _Fenwick(int(ranks.max()) + 1)
    den = lt = eq = 0
    inserted = 0
    n = x.size
    i = 0
    while i < n:
        j = i
        while j < n and xs[j] == xs[i]:
            j += 1
        group = order[i:j]
        for b in group:
            if delta[b]:
                rb = ranks[b]
                below = bit.prefix(rb)
                den += inserted
                lt += below
                eq += bit.prefix(rb + 1) - below
        for b in group:
            bit.add(ranks[b])
        inserted += j - i
        i = j
    return den, lt, eq


def _within_family_counts(pred, x, delta, fam) -> tuple[int, int, int]:
    order = np.argsort(fam, kind="stable")
    bounds = np.flatnonzero(np.diff(fam[order])) + 1
    den = lt = eq = 0
    for idx in np.split(order, bounds):
        if idx.size < 2:
            continue
        xa, xb = x[idx][:, None], x[idx][None, :]
        pa, pb = pred[idx][:, None], pred[idx][None, :]
        comp = (xa > xb) & (delta[idx][None, :] > 0)
        den += int(comp.sum())
        lt += int((comp & (pa < pb)).sum())
        eq += int((comp & (pa == pb)).sum())
    return den, lt, eq


def concordance_counts(pred, x, delta, family_of=None, all_pairs: bool = False) -> tuple[int, int, int]:
    pred = np.asarray(pred, dtype=float)
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta).astype(int)
    if not (pred.shape == x.shape == delta.shape):
        raise ValueError("pred, x and delta must have equal lengths")
    den, lt, eq = _all_pair_counts(pred, x, delta)
    if not all_pairs and family_of is not None:
        _, fam = np.unique(np.asarray(family_of), return_inverse=True)
        d2, l2, e2 = _within_family_counts(pred, x, delta, fam)
        den, lt, eq = den - d2, lt - l2, eq - e2
    return den, lt, eq


def harrell_c(pred, x, delta, family_of=None, ties: str = "strict", all_pairs: bool = False) -> float | None:
    """Harrell's C over cross-family pairs.

    A pair ``(a, b)`` is comparable when ``x_a > x_b`` and ``b`` had the
    event; it is concordant when ``pred_a < pred_b``.  ``ties="half"`` counts
    tied predictions as one half.  Returns ``None`` with no comparable pair.
    """
    if ties not in ("strict", "half"):
        raise ValueError("ties must be 'strict' or 'half'")
    den, lt, eq = concordance_counts(pred, x, delta, family_of, all_pairs)
    if den == 0:
        return None
    num = lt + (0.5 * eq if ties == "half" else 0.0)
    return num / den


def auc(scores, labels) -> float | None:
    """Mann-Whitney AUC with ties counted as one half; ``None`` for one class."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(int)
    if s.shape != y.shape:
        raise ValueError("length mismatch")
    n1 = int(y.sum())
    n0 = y.size - n1
    if n1 == 0 or n0 == 0:
        return None
    ranks = stats.rankdata(s)
    u = float(ranks[y == 1].sum()) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n0)


def confusion(pred_class, true_class) -> dict[str, int]:
    pc = np.asarray(pred_class).astype(bool)
    tc = np.asarray(true_class).astype(bool)
    if pc.shape != tc.shape:
        raise ValueError("length mismatch")
    return {
        "tp": int(np.sum(pc & tc)),
        "fp": int(np.sum(pc & ~tc)),
        "tn": int(np.sum(~pc & ~tc)),
        "fn": int(np.sum(~pc & tc)),
    }


def ppv_npv(pred_class, true_class) -> tuple[float | None, float | None]:
    t = confusion(pred_class, true_class)
    ppv = t["tp"] / (t["tp"] + t["fp"]) if t["tp"] + t["fp"] else None
    npv = t["tn"] / (t["tn"] + t["fn"]) if t["tn"] + t["fn"] else None
    return ppv, npv


@dataclass
class EvalReport:
    mspe: float | None = None
    pearson_rho: float | None = None
    rank_rho: float | None = None
    r_squared: float | None = None
    harrell_c: float | None = None
    auc: float | None = None
    ppv: float | None = None
    npv: float | None = None
    n_pairs_compared: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(
    true_r,
    pred_r,
    scores=None,
    true_class=None,
    pred_class=None,
    subjects=None,
    ties: str = "strict",
    all_pairs: bool = False,
) -> EvalReport:
    """Family-level accuracy metrics plus optional concordance.

    ``subjects`` is ``(pred, x, delta, family_of)`` at subject level.
    """
    rep = EvalReport(
        mspe=mspe(true_r, pred_r),
        pearson_rho=pearson(true_r, pred_r),
        rank_rho=rank_corr(true_r, pred_r),
        r_squared=r_squared(true_r, pred_r) if len(true_r) >= 3 else None,
    )
    if scores is not None and true_class is not None:
        rep.auc = auc(scores, true_class)
    if pred_class is not None and true_class is not None:
        rep.ppv, rep.npv = ppv_npv(pred_class, true_class)
    if subjects is not None:
        pred, x, delta, fam = subjects
        den, lt, eq = concordance_counts(pred, x, delta, fam, all_pairs)
        rep.n_pairs_compared = den
        if den:
            rep.harrell_c = (lt + (0.5 * eq if ties == "half" else 0.0)) / den
    return rep
