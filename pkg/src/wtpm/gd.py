"""Full-gradient descent on the weighted trace-penalty objective, with fixed or
alternating Barzilai-Borwein stepsizes."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .matrix import block_apply
from .model import WeightedPenaltyProblem, _check_block, _value_and_gradient
from .oracle import eigen_error
from .trace import ConvergenceTrace, SolveResult, TraceRow
from .weights import gershgorin_bounds

BB_MIN, BB_MAX = 1e-12, 1e6


@dataclass
class GdConfig:
    max_iter: int = 10000
    tol_grad: float = 1e-8
    stepsize_mode: str = "bb"  # "bb" or "fixed"
    alpha: float | None = None  # fixed stepsize
    alpha0: float | None = None  # bootstrap / fallback stepsize
    checkpoint_every: int = 10

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.stepsize_mode not in ("bb", "fixed"):
            raise ValueError(f"unknown stepsize mode {self.stepsize_mode!r}")
        if self.stepsize_mode == "fixed" and not (self.alpha and self.alpha > 0):
            raise ValueError("fixed stepsize mode needs alpha > 0")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint_every must be >= 1")


def bb_stepsize(delta_x, delta_g, parity: str) -> float | None:
    """Barzilai-Borwein stepsize; None when the denominator vanishes.

    odd:  tr(dX^T dG) / ||dG||^2
    even: ||dX||^2 / tr(dX^T dG)
    """
    s = float(np.sum(delta_x * delta_g))
    if parity == "odd":
        den = float(np.sum(delta_g * delta_g))
        return s / den if den != 0.0 else None
    if parity == "even":
        return float(np.sum(delta_x * delta_x)) / s if s != 0.0 else None
    raise ValueError(f"parity must be 'odd' or 'even', got {parity!r}")


def default_alpha0(prob: WeightedPenaltyProblem) -> float:
    lo, hi = gershgorin_bounds(prob.operator)
    return 1e-2 / max(1.0, abs(hi))


def gd_solve(
    prob: WeightedPenaltyProblem,
    X0,
    cfg: GdConfig | None = None,
    reference=None,
    trace: ConvergenceTrace | None = None,
    record_time: bool = False,
) -> SolveResult:
    """Iterate X <- X - alpha * grad f(X) until ||grad f||_F <= tol_grad.

    `reference` (first p exact eigenvalues) adds an error column to the trace.
    """
    cfg = cfg or GdConfig()
    X = _check_block(prob, X0).copy()
    if not np.all(np.isfinite(X)):
        raise ValueError("initial iterate is not finite")
    p = prob.p
    trace = trace if trace is not None else ConvergenceTrace(p)
    ref = None if reference is None else np.asarray(reference, dtype=float)[:p]
    alpha0 = cfg.alpha0 if cfg.alpha0 is not None else default_alpha0(prob)
    t0 = time.perf_counter()

    def checkpoint(it, X, AX, f):
        with np.errstate(invalid="ignore", divide="ignore"):
            ritz = np.einsum("ij,ij->j", X, AX) / np.einsum("ij,ij->j", X, X)
        trace.record(
            TraceRow(
                update_count=it,
                relative_iteration=float(it),
                wall_ms=(time.perf_counter() - t0) * 1e3 if record_time else None,
                ritz=ritz.tolist(),
                err=eigen_error(ritz, ref) if ref is not None else None,
                nnz_x=int(np.count_nonzero(X)),
                nnz_y=int(np.count_nonzero(AX)),
                objective=float(f),
            )
        )
        return ritz

    AX = block_apply(prob.operator, X)
    f, G = _value_and_gradient(prob, X, AX)
    status = "max_iter"
    X_prev = G_prev = None
    it = 0
    last_cp = -1
    while True:
        if np.linalg.norm(G) <= cfg.tol_grad:
            status = "converged"
            break
        if it >= cfg.max_iter:
            break
        if it % cfg.checkpoint_every == 0:
            checkpoint(it, X, AX, f)
            last_cp = it

        if cfg.stepsize_mode == "fixed":
            alpha = cfg.alpha
        elif X_prev is None:
            alpha = alpha0
        else:
            parity = "odd" if it % 2 == 1 else "even"
            alpha = bb_stepsize(X - X_prev, G - G_prev, parity)
            if alpha is None or not np.isfinite(alpha) or alpha <= 0:
                alpha = alpha0
            alpha = min(max(alpha, BB_MIN), BB_MAX)

        X_new = X - alpha * G
        with np.errstate(over="ignore", invalid="ignore"):
            AX_new = block_apply(prob.operator, X_new)
            f_new, G_new = _value_and_gradient(prob, X_new, AX_new)
        it += 1
        if not (np.isfinite(f_new) and np.all(np.isfinite(G_new))):
            status = "diverged"
            break
        X_prev, G_prev = X, G
        X, AX, f, G = X_new, AX_new, f_new, G_new

    ritz = checkpoint(it, X, AX, f) if last_cp != it else trace.last.ritz
    return SolveResult(X=X, ritz=np.asarray(ritz), trace=trace, status=status, iterations=it)


def smallest_diagonal_start(prob: WeightedPenaltyProblem) -> np.ndarray:
    """Unit columns at the p smallest diagonal entries (ties by index)."""
    idx = np.sort(np.argsort(prob.operator.diagonal(), kind="stable")[: prob.p])
    X0 = np.zeros((prob.n, prob.p))
    X0[idx, np.arange(prob.p)] = 1.0
    return X0
