"""Weight-vector constructors.

All constructors return a strictly decreasing float array ``w`` of length p
(mu = 1 units, i.e. directly comparable with eigenvalues).
"""

from __future__ import annotations

import numpy as np

from .errors import DegeneracyError, InfeasibleWeightError
from .matrix import SymmetricOperator


def _evenly(w1: float, wp: float, p: int) -> np.ndarray:
    if p == 1:
        return np.array([w1], dtype=float)
    return np.linspace(w1, wp, p)


def _check_descent(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(np.diff(w) >= 0):
        raise InfeasibleWeightError(f"weights are not strictly decreasing: {w}")
    return w


def uniform_weights(lambda1, lambda_p, lambda_p1, lambda_n, p: int) -> np.ndarray:
    """Evenly spaced weights from (lambda_1 + lambda_n)/2 down to (lambda_p + lambda_{p+1})/2."""
    if p < 1:
        raise ValueError("p must be positive")
    w1 = 0.5 * (lambda1 + lambda_n)
    wp = 0.5 * (lambda_p + lambda_p1)
    if p > 1 and not w1 > wp:
        raise InfeasibleWeightError(
            f"endpoint collapse: (l1+ln)/2={w1} is not above (lp+lp1)/2={wp}"
        )
    return _check_descent(_evenly(w1, wp, p))


def gap_weights(lambdas, lambda_n, p: int) -> np.ndarray:
    """Weights maximizing min_{i<j} (w_i - w_j)(lambda_j - lambda_i) between the same endpoints.

    Consecutive decrements are proportional to the inverse eigengaps.
    `lambdas` holds at least the first p+1 eigenvalues.
    """
    lam = np.asarray(lambdas, dtype=float)
    if len(lam) < p + 1:
        raise ValueError(f"need the first {p + 1} eigenvalues")
    gaps = np.diff(lam[: p + 1])
    if np.any(gaps <= 0):
        raise DegeneracyError("zero eigengap among the first p+1 eigenvalues")
    w1 = 0.5 * (lam[0] + lambda_n)
    wp = 0.5 * (lam[p - 1] + lam[p])
    if p == 1:
        return np.array([w1])
    if not w1 > wp:
        raise InfeasibleWeightError("endpoint collapse")
    inv = 1.0 / gaps[: p - 1]
    steps = (w1 - wp) * inv / inv.sum()
    w = np.empty(p)
    w[0] = w1
    w[1:] = w1 - np.cumsum(steps)
    w[-1] = wp
    return _check_descent(w)


def default_epsilon(rayleigh) -> float:
    r = np.asarray(rayleigh, dtype=float)
    return max(1e-3 * (r[-1] - r[0]), 1e-6 * abs(r[-1]), 1e-8)


def rayleigh_weights(rayleigh, epsilon: float | None = None) -> np.ndarray:
    """Weights from initial Rayleigh quotients r_1 <= ... <= r_p.

    w_p = r_p + epsilon, w_1 = 2 w_p - r_1, evenly spaced in between.  For
    p = 1 the single weight is 2(r_1 + epsilon) - r_1.
    """
    r = np.atleast_1d(np.asarray(rayleigh, dtype=float))
    if np.any(np.diff(r) < 0):
        raise ValueError(f"Rayleigh quotients must be ascending: {r}")
    eps = default_epsilon(r) if epsilon is None else float(epsilon)
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    wp = r[-1] + eps
    w1 = 2 * wp - r[0]
    return _check_descent(_evenly(w1, wp, len(r)))


def random_weights(lambdas, lambda_n, p: int, rng=None) -> np.ndarray:
    """Same endpoints as `uniform_weights`, interior entries uniform in (w_p, w_1)."""
    lam = np.asarray(lambdas, dtype=float)
    rng = np.random.default_rng(rng)
    w1 = 0.5 * (lam[0] + lambda_n)
    wp = 0.5 * (lam[p - 1] + lam[p])
    if p == 1:
        return np.array([w1])
    inner = np.sort(rng.uniform(wp, w1, size=p - 2))[::-1]
    return _check_descent(np.concatenate([[w1], inner, [wp]]))


def spread_score(weights, lambdas) -> float:
    """min_{i<j} (w_i - w_j)(lambda_j - lambda_i); +inf when p = 1 (no pair)."""
    w = np.asarray(weights, dtype=float)
    lam = np.asarray(lambdas, dtype=float)[: len(w)]
    if len(w) < 2:
        return float("inf")
    dw = w[:, None] - w[None, :]
    dl = lam[None, :] - lam[:, None]
    iu = np.triu_indices(len(w), 1)
    return float(np.min(dw[iu] * dl[iu]))


def satisfies_interval(weights, lambdas, lambda_n, slack: float = 1e-12) -> bool:
    """(lambda_1 + lambda_n)/2 >= w_1 and w_p >= (lambda_p + lambda_{p+1})/2."""
    w = np.asarray(weights, dtype=float)
    lam = np.asarray(lambdas, dtype=float)
    p = len(w)
    scale = max(1.0, abs(lambda_n), abs(lam[0]))
    return bool(
        0.5 * (lam[0] + lambda_n) >= w[0] - slack * scale
        and w[-1] >= 0.5 * (lam[p - 1] + lam[p]) - slack * scale
    )


def gershgorin_bounds(op: SymmetricOperator) -> tuple[float, float]:
    """(lower, upper) Gershgorin bounds on the spectrum, from columns."""
    lo, hi = np.inf, -np.inf
    for k in range(op.dim):
        idx, val = op.column(k)
        on = idx == k
        akk = float(val[on].sum())
        radius = float(np.abs(val[~on]).sum())
        lo = min(lo, akk - radius)
        hi = max(hi, akk + radius)
    return lo, hi
