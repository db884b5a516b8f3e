"""Independent numerical ground truth for the closed forms.

Nothing here uses the Gamma-function algebra of the marginal likelihood or
the conjugate posterior: marginal likelihoods are integrated numerically from
the per-subject conditional kernel, and metric oracles enumerate pairs
directly.  Single-threaded and deterministic.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, linalg, special

from . import cure
from .data import Family, ParamSet

__all__ = [
    "OracleError",
    "gen_laguerre",
    "log_conditional_kernel",
    "quad_marginal_loglik",
    "trapezoid_marginal_loglik",
    "quad_posterior_density",
    "brute_pairs_c",
    "brute_auc",
    "brute_tally",
]

BASE_NODES = 128
MAX_NODES = 1024
REL_TOL = 1e-10


class OracleError(RuntimeError):
    pass


@lru_cache(maxsize=64)
def gen_laguerre(n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and log-weights for weight ``s**alpha * exp(-s)`` (Golub-Welsch)."""
    k = np.arange(n, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    nodes, vecs = linalg.eigh_tridiagonal(diag, off)
    with np.errstate(divide="ignore"):
        logw = special.gammaln(alpha + 1.0) + 2.0 * np.log(np.abs(vecs[0]))
    return nodes, logw


def log_conditional_kernel(pi: ParamSet, f: Family, r) -> np.ndarray:
    """``log prod_j f(x_ij | r)`` on an array of frailty values ``r``."""
    r = np.asarray(r, dtype=float)
    c = pi.cure
    out = np.zeros_like(r)
    for m in f.members:
        ls0 = cure.log_s0(c, m.x)
        out = out + r * ls0
        if m.delta:
            log_event = math.log1p(-c.p) + c.baseline.log_density(m.x)
            with np.errstate(divide="ignore"):
                out = out + np.log(r) + log_event - ls0
    return out


def _tail_rate(pi: ParamSet, f: Family) -> float:
    # exponential decay rate of kernel * prior, probed numerically far out
    big = 1e3

    def g(r):
        return float(log_conditional_kernel(pi, f, np.array([r]))[0]) - pi.theta * r

    rate = -(g(2 * big) - g(big)) / big
    return max(rate, 1e-3 * pi.theta)


def _laguerre_estimate(pi: ParamSet, f: Family, n: int, scale: float) -> float:
    theta = pi.theta
    s, logw = gen_laguerre(n, theta - 1.0)
    r = s / scale
    log_h = log_conditional_kernel(pi, f, r) + s - theta * r
    with np.errstate(invalid="ignore"):
        body = special.logsumexp(logw + log_h)
    return theta * math.log(theta) - special.gammaln(theta) - theta * math.log(scale) + body


def quad_marginal_loglik(pi: ParamSet, f: Family, n_nodes: int = BASE_NODES) -> float:
    """``log int prod_j f(x_ij | r) g(r; theta) dr`` by generalized Gauss-Laguerre.

    Nodes double until successive estimates agree to ``REL_TOL``.
    """
    scale = _tail_rate(pi, f)
    prev = _laguerre_estimate(pi, f, n_nodes, scale)
    n = n_nodes
    while n < MAX_NODES:
        n *= 2
        cur = _laguerre_estimate(pi, f, n, scale)
        if cur == prev:
            return cur
        # relative agreement of the integrals, floored at log-scale rounding
        if abs(cur - prev) < REL_TOL + 8 * np.finfo(float).eps * abs(cur):
            return cur
        prev = cur
    raise OracleError(f"quadrature did not converge with {MAX_NODES} nodes")


def trapezoid_marginal_loglik(
    pi: ParamSet, f: Family, r_max: float = 50.0, n_points: int = 1_000_000
) -> float:
    """Second integrator: trapezoid rule on ``(0, r_max]``; for theta >= 1."""
    r = np.linspace(r_max / n_points, r_max, n_points)
    lg = log_conditional_kernel(pi, f, r) + pi.prior.log_density(r)
    m = lg.max()
    return m + math.log(integrate.trapezoid(np.exp(lg - m), r))


def quad_posterior_density(pi: ParamSet, f: Family, r_grid) -> np.ndarray:
    """Bayes numerator over the quadrature normaliser, pointwise on ``r_grid``."""
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r_grid must be positive")
    log_num = log_conditional_kernel(pi, f, r) + pi.prior.log_density(r)
    return np.exp(log_num - quad_marginal_loglik(pi, f))


# ---------------------------------------------------------------------------
# brute-force metric oracles


def brute_pairs_c(pred, x, delta, family_of, ties: str = "strict", all_pairs: bool = False):
    """Concordance by direct enumeration of ordered pairs; ``None`` if none comparable."""
    num = 0.0
    den = 0
    n = len(pred)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            if not all_pairs and family_of[a] == family_of[b]:
                continue
            if x[a] > x[b] and delta[b] == 1:
                den += 1
                if pred[a] < pred[b]:
                    num += 1.0
                elif pred[a] == pred[b] and ties == "half":
                    num += 0.5
    if den == 0:
        return None
    return num / den


def brute_auc(scores, labels):
    pos = [s for s, lab in zip(scores, labels) if lab == 1]
    neg = [s for s, lab in zip(scores, labels) if lab == 0]
    if not pos or not neg:
        return None
    count = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                count += 1.0
            elif sp == sn:
                count += 0.5
    return count / (len(pos) * len(neg))


def brute_tally(pred_class, true_class) -> dict[str, int]:
    t = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for pc, tc in zip(pred_class, true_class):
        if pc == 1 and tc == 1:
            t["tp"] += 1
        elif pc == 1:
            t["fp"] += 1
        elif tc == 0:
            t["tn"] += 1
        else:
            t["fn"] += 1
    return t
