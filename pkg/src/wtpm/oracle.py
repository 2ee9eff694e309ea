"""Dense reference tools: a cyclic Jacobi eigensolver, the explicit Hessian
matrix of the objective and the max-abs eigenvalue error metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, DimensionError
from .matrix import SymmetricOperator
from .model import Spectrum, WeightedPenaltyProblem, hessian_apply

DEFAULT_CAP = 4000


@dataclass
class DenseSymmetric:
    values: np.ndarray
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        M = np.asarray(self.values, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {M.shape}")
        if M.shape[0] > self.cap:
            raise CapacityError(f"dimension {M.shape[0]} exceeds dense cap {self.cap}")
        scale = max(np.abs(M).max(initial=0.0), 1.0)
        if np.abs(M - M.T).max(initial=0.0) > 1e-14 * scale:
            raise ValueError("matrix is not symmetric")
        self.values = M

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_operator(cls, op: SymmetricOperator, cap: int = DEFAULT_CAP) -> "DenseSymmetric":
        if op.dim > cap:
            raise CapacityError(f"dimension {op.dim} exceeds dense cap {cap}")
        return cls(op.to_dense(), cap)


def _round_robin(m: int):
    """Tournament schedule: m-1 rounds of m/2 disjoint pairs covering every pair once."""
    players = list(range(m))
    for _ in range(m - 1):
        yield [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        players = [players[0]] + [players[-1]] + players[1:-1]


def dense_eig(M: DenseSymmetric | np.ndarray, tol: float = 1e-15, max_sweeps: int = 60) -> Spectrum:
    """Full eigendecomposition by cyclic Jacobi rotations.

    Each round applies n/2 disjoint rotations at once (round-robin ordering).
    Eigenvalues ascending; each eigenvector is signed so that its
    largest-magnitude entry is positive.
    """
    if not isinstance(M, DenseSymmetric):
        M = DenseSymmetric(M)
    A = M.values.copy()
    n = M.n
    V = np.eye(n)
    if n > 1:
        m = n + (n % 2)
        rounds = []
        for pairs in _round_robin(m):
            pr = np.array([(a, b) if a < b else (b, a) for a, b in pairs if a < n and b < n])
            rounds.append((pr[:, 0], pr[:, 1]))
        norm = np.linalg.norm(A)
        for _ in range(max_sweeps):
            off = np.linalg.norm(A - np.diag(np.diag(A)))
            if off <= tol * norm:
                break
            for p, q in rounds:
                apq = A[p, q]
                active = np.abs(apq) > 1e-300
                if not active.any():
                    continue
                p, q, apq = p[active], q[active], apq[active]
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                # hypot avoids overflow of theta^2 for tiny off-diagonal entries
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t[theta == 0] = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[p, :], A[q, :]
                A[p, :] = c[:, None] * Ap - s[:, None] * Aq
                A[q, :] = s[:, None] * Ap + c[:, None] * Aq
                Ap, Aq = A[:, p], A[:, q]
                A[:, p] = Ap * c - Aq * s
                A[:, q] = Ap * s + Aq * c
                A[p, q] = 0.0
                A[q, p] = 0.0
                Vp, Vq = V[:, p], V[:, q]
                V[:, p] = Vp * c - Vq * s
                V[:, q] = Vp * s + Vq * c
    lam = np.diag(A).copy()
    order = np.argsort(lam, kind="stable")
    lam, V = lam[order], V[:, order]
    big = np.argmax(np.abs(V), axis=0)
    V = V * np.where(V[big, np.arange(n)] < 0, -1.0, 1.0)
    return Spectrum(lam, V)


def operator_spectrum(op: SymmetricOperator, cap: int = DEFAULT_CAP) -> Spectrum:
    return dense_eig(DenseSymmetric.from_operator(op, cap))


def hessian_matrix(prob: WeightedPenaltyProblem, X, cap: int = DEFAULT_CAP) -> DenseSymmetric:
    """Materialize the Hessian on column-major flattened n x p blocks.

    Entry (ell*n + i) corresponds to the coordinate (i, ell).
    """
    n, p = prob.n, prob.p
    N = n * p
    if N > cap:
        raise CapacityError(f"Hessian size {N} exceeds cap {cap}")
    H = np.empty((N, N))
    E = np.zeros((n, p))
    for ell in range(p):
        for i in range(n):
            E[i, ell] = 1.0
            H[:, ell * n + i] = hessian_apply(prob, X, E).ravel(order="F")
            E[i, ell] = 0.0
    # symmetrize away rounding so the container's strict check holds
    asym = np.abs(H - H.T).max(initial=0.0)
    if asym > 1e-10 * max(np.abs(H).max(initial=0.0), 1.0):
        raise ArithmeticError(f"Hessian not symmetric (defect {asym:.3g})")
    return DenseSymmetric(0.5 * (H + H.T), cap=cap)


def eigen_error(ritz, reference) -> float:
    """max_l |lambda_l - d_l|."""
    r = np.asarray(ritz, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if r.shape != ref.shape:
        raise DimensionError(f"length mismatch: {r.shape} vs {ref.shape}")
    return float(np.max(np.abs(r - ref))) if r.size else 0.0
