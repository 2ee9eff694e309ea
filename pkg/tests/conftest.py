import functools

import numpy as np
import pytest

from wtpm.hamiltonian import HubbardSpec, hubbard_operator
from wtpm.matrix import SparseColumnMatrix
from wtpm.oracle import operator_spectrum

# criterion id -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def hubbard6():
    """Hubbard chain L=6, 3 up / 3 down, t=1, U=4 and its dense spectrum."""
    op = hubbard_operator(HubbardSpec(6, 3, 3, t=1.0, U=4.0))
    return op, operator_spectrum(op).eigenvalues


def ci_like(n, seed, deg=6, scale=0.3, spread=40.0):
    """Diagonally dominant sparse matrix: sorted diagonal, a few weak random couplings per row.

    Low eigenvectors decay quickly away from the smallest diagonal entries,
    like configuration-interaction Hamiltonians.
    """
    rng = np.random.default_rng(seed)
    M = np.diag(np.sort(rng.uniform(0, spread, n)))
    for k in range(n):
        for j in rng.choice(n, deg // 2, replace=False):
            if j != k:
                M[k, j] = M[j, k] = rng.normal(scale=scale)
    return M


def rotated_diagonal(lam, rng):
    """Q diag(lam) Q^T with a random orthogonal Q; returns (operator, Q)."""
    n = len(lam)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    M = (Q * lam) @ Q.T
    return SparseColumnMatrix.from_dense(0.5 * (M + M.T)), Q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
