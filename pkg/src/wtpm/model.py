"""Weighted trace-penalty objective

    f(X) = 1/2 tr(X^T A X) + mu/4 ||X^T X - W||_F^2,    W = diag(w), w strictly decreasing,

its gradient and Hessian, the closed-form global minimizers and the exact
condition number of the Hessian at those minimizers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DegeneracyError, DimensionError, InfeasibleWeightError
from .matrix import SymmetricOperator, block_apply

DEGENERACY_RTOL = 1e-12


@dataclass
class Spectrum:
    """Ascending eigenvalues with optional orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")
        if self.eigenvectors is not None:
            self.eigenvectors = np.asarray(self.eigenvectors, dtype=float)
            if self.eigenvectors.shape[1] > len(self.eigenvalues):
                raise DimensionError("more eigenvectors than eigenvalues")


def check_separated(lambdas, count: int) -> None:
    """Raise `DegeneracyError` if the first `count` eigenvalues are not strictly separated."""
    lam = np.asarray(lambdas, dtype=float)
    head = lam[:count]
    scale = lam[-1] - lam[0]
    if scale <= 0:
        scale = max(abs(lam[0]), 1.0)
    gaps = np.diff(head)
    if np.any(gaps <= DEGENERACY_RTOL * scale):
        i = int(np.argmin(gaps))
        raise DegeneracyError(f"eigenvalues {i + 1} and {i + 2} are degenerate: gap {gaps[i]:.3g}")


@dataclass
class WeightedPenaltyProblem:
    operator: SymmetricOperator
    weights: np.ndarray
    mu: float = 1.0
    reference: Spectrum | None = field(default=None, repr=False)

    def __post_init__(self):
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if not self.mu > 0:
            raise ValueError(f"penalty parameter must be positive, got {self.mu}")
        if self.weights.ndim != 1 or len(self.weights) == 0:
            raise DimensionError("weights must be a nonempty vector")
        if np.any(np.diff(self.weights) >= 0):
            raise InfeasibleWeightError(f"weights must be strictly decreasing: {self.weights}")
        if self.p > self.operator.dim:
            raise DimensionError(f"p={self.p} exceeds dimension {self.operator.dim}")
        if self.reference is not None:
            lam = self.reference.eigenvalues
            if len(lam) >= self.p and not self.weights[-1] > lam[self.p - 1] / self.mu:
                raise InfeasibleWeightError(
                    f"w_p={self.weights[-1]} must exceed lambda_p/mu={lam[self.p - 1] / self.mu}"
                )

    @property
    def p(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return self.operator.dim


def _check_block(prob: WeightedPenaltyProblem, X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape != (prob.n, prob.p):
        raise DimensionError(f"{name} has shape {X.shape}, expected {(prob.n, prob.p)}")
    return X


def _value_and_gradient(prob, X, AX):
    G = X.T @ X
    np.fill_diagonal(G, np.diag(G) - prob.weights)
    f = 0.5 * np.sum(X * AX) + 0.25 * prob.mu * np.sum(G * G)
    return f, AX + prob.mu * (X @ G)


def objective(prob: WeightedPenaltyProblem, X) -> float:
    X = _check_block(prob, X)
    return _value_and_gradient(prob, X, block_apply(prob.operator, X))[0]


def gradient(prob: WeightedPenaltyProblem, X) -> np.ndarray:
    X = _check_block(prob, X)
    return _value_and_gradient(prob, X, block_apply(prob.operator, X))[1]


def objective_and_gradient(prob: WeightedPenaltyProblem, X):
    X = _check_block(prob, X)
    return _value_and_gradient(prob, X, block_apply(prob.operator, X))


def hessian_apply(prob: WeightedPenaltyProblem, X, Z) -> np.ndarray:
    """A Z + mu (Z X^T X + X Z^T X + X X^T Z - Z W)."""
    X = _check_block(prob, X)
    Z = _check_block(prob, Z, "Z")
    XtX = X.T @ X
    return block_apply(prob.operator, Z) + prob.mu * (
        Z @ XtX + X @ (Z.T @ X) + X @ (X.T @ Z) - Z * prob.weights
    )


def global_minimizer(spectrum: Spectrum, mu: float, weights, signs=None) -> np.ndarray:
    """V_p diag(sign_i * s_i) with s_i = sqrt(w_i - lambda_i / mu)."""
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    p = len(w)
    if np.any(np.diff(w) >= 0):
        raise InfeasibleWeightError("weights must be strictly decreasing")
    V = spectrum.eigenvectors
    if V is None or V.shape[1] < p:
        raise DimensionError(f"need {p} eigenvectors")
    lam = spectrum.eigenvalues[:p]
    sq = w - lam / mu
    if np.any(sq <= 0):
        i = int(np.argmin(sq))
        raise InfeasibleWeightError(f"mu*w_{i + 1} <= lambda_{i + 1}: column would vanish")
    signs = np.ones(p) if signs is None else np.asarray(signs, dtype=float)
    if signs.shape != (p,) or np.any(np.abs(signs) != 1):
        raise ValueError("signs must be a length-p array of +1/-1")
    return V[:, :p] * (signs * np.sqrt(sq))


def global_minimum_value(lambdas, mu: float, weights) -> float:
    """sum_i [mu w_i^2 / 4 - (lambda_i - mu w_i)^2 / (4 mu)]."""
    w = np.asarray(weights, dtype=float)
    lam = np.asarray(lambdas, dtype=float)[: len(w)]
    return float(np.sum(mu * w**2 / 4 - (lam - mu * w) ** 2 / (4 * mu)))


def mij_eigenvalues(lambda_i, lambda_j, w_i, w_j, mu=1.0) -> tuple[float, float]:
    """Eigenvalues (lo, hi) of the 2x2 block coupling columns i < j at the minimizer.

    The block is [[mu w_i - lambda_j, r], [r, mu w_j - lambda_i]] with
    r^2 = (mu w_i - lambda_i)(mu w_j - lambda_j); its determinant is
    mu (w_i - w_j)(lambda_j - lambda_i).
    """
    a = mu * w_i - lambda_j
    c = mu * w_j - lambda_i
    r2 = (mu * w_i - lambda_i) * (mu * w_j - lambda_j)
    if r2 < 0:
        raise InfeasibleWeightError("mu*w must exceed the paired eigenvalues")
    half_diff = 0.5 * (a - c)
    disc = half_diff * half_diff + r2
    if disc < 0:  # pragma: no cover - sum of squares
        raise ArithmeticError("negative discriminant")
    hi = 0.5 * (a + c) + np.sqrt(disc)
    det = mu * (w_i - w_j) * (lambda_j - lambda_i)
    lo = det / hi if hi != 0 else 0.0
    return float(lo), float(hi)


def condition_number(lambdas, mu: float, weights, p: int | None = None) -> float:
    """Exact condition number of the Hessian at a global minimizer.

    `lambdas` is the full ascending spectrum (n values).  Assumes
    w_1 > ... > w_p > lambda_p / mu.
    """
    lam = np.asarray(lambdas, dtype=float)
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    p = len(w) if p is None else p
    if len(w) != p:
        raise DimensionError("weights length differs from p")
    n = len(lam)
    if n <= p:
        raise ValueError(f"need more than p={p} eigenvalues, got {n}")
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be ascending")
    check_separated(lam, p + 1)
    if np.any(np.diff(w) >= 0):
        raise InfeasibleWeightError("weights must be strictly decreasing")
    if not mu * w[-1] > lam[p - 1]:
        raise InfeasibleWeightError("mu*w_p must exceed lambda_p")

    top = [lam[-1] - lam[0], 2 * (mu * w[0] - lam[0])]
    bottom = [lam[p] - lam[p - 1], 2 * (mu * w[-1] - lam[p - 1])]
    for i, j in combinations(range(p), 2):
        lo, hi = mij_eigenvalues(lam[i], lam[j], w[i], w[j], mu)
        top.append(hi)
        bottom.append(lo)
    return max(top) / min(bottom)


def ritz_values(X, AX) -> np.ndarray:
    """Column Rayleigh quotients diag(X^T A X) / diag(X^T X)."""
    return np.einsum("ij,ij->j", X, AX) / np.einsum("ij,ij->j", X, X)
