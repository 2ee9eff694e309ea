"""Sparse symmetric storage, the matrix-free operator interface and Matrix Market I/O.

Every solver in the package talks to the matrix through `SymmetricOperator`:
a dimension, column access, the diagonal and a dense block product.  Columns
are returned as ``(indices, values)`` with 0-based, strictly increasing row
indices and nonzero values.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import DataError, DimensionError, FormatError, UnsupportedFormatError


class SymmetricOperator:
    """Minimal interface for a real symmetric n x n matrix.

    Subclasses implement `column` and `diagonal`; `apply` falls back to
    accumulating columns, which is only sensible for small or matrix-free
    operators.
    """

    dim: int

    def column(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def diagonal(self) -> np.ndarray:
        raise NotImplementedError

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = _as_block(X, self.dim)
        out = np.zeros_like(X, dtype=float)
        for k in range(self.dim):
            xk = X[k]
            if not xk.any():
                continue
            idx, val = self.column(k)
            out[idx] += np.outer(val, xk)
        return out

    @property
    def nnz(self) -> int:
        return sum(len(self.column(k)[0]) for k in range(self.dim))

    def to_sparse(self) -> "SparseColumnMatrix":
        starts = [0]
        rows, vals = [], []
        for k in range(self.dim):
            idx, val = self.column(k)
            rows.append(idx)
            vals.append(val)
            starts.append(starts[-1] + len(idx))
        return SparseColumnMatrix(
            self.dim,
            np.asarray(starts, dtype=np.int64),
            np.concatenate(rows).astype(np.int64) if rows else np.zeros(0, np.int64),
            np.concatenate(vals).astype(float) if vals else np.zeros(0),
        )

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.dim, self.dim))
        for k in range(self.dim):
            idx, val = self.column(k)
            M[idx, k] = val
        return M


def _as_block(X, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    squeeze = X.ndim == 1
    if squeeze:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != n:
        raise DimensionError(f"block of shape {X.shape} does not conform to dimension {n}")
    return X


class SparseColumnMatrix(SymmetricOperator):
    """Fully expanded symmetric matrix in compressed sparse column form."""

    def __init__(self, dim: int, col_start, row_idx, values, check: bool = True):
        self.dim = int(dim)
        self.col_start = np.asarray(col_start, dtype=np.int64)
        self.row_idx = np.asarray(row_idx, dtype=np.int64)
        self.values = np.asarray(values, dtype=float)
        if check:
            self._validate()
        self._csc = None
        self._diag = None

    def _validate(self):
        n, cs = self.dim, self.col_start
        if n < 1:
            raise DimensionError("dimension must be positive")
        if cs.shape != (n + 1,) or cs[0] != 0 or cs[-1] != len(self.row_idx):
            raise DataError("col_start must have length n+1, start at 0 and end at nnz")
        if len(self.row_idx) != len(self.values):
            raise DataError("row_idx and values differ in length")
        if np.any(np.diff(cs) < 0):
            raise DataError("col_start must be nondecreasing")
        if len(self.row_idx) and (self.row_idx.min() < 0 or self.row_idx.max() >= n):
            raise DataError("row index out of range")
        # strictly increasing rows inside each column
        inc = np.diff(self.row_idx) > 0
        boundary = np.zeros(len(inc), dtype=bool)
        ends = cs[1:-1] - 1
        boundary[ends[(ends >= 0) & (ends < len(inc))]] = True
        if not np.all(inc | boundary):
            raise DataError("row indices within a column must be strictly increasing")

    @classmethod
    def from_triplets(cls, n: int, rows, cols, vals) -> "SparseColumnMatrix":
        """Build from (row, col, value) triplets that already hold both triangles.

        Explicit zeros are dropped; duplicated coordinates are summed.
        """
        m = sp.coo_matrix(
            (np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))), shape=(n, n)
        ).tocsc()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        return cls(n, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, M) -> "SparseColumnMatrix":
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError("dense matrix must be square")
        r, c = np.nonzero(M)
        return cls.from_triplets(M.shape[0], r, c, M[r, c])

    @property
    def nnz(self) -> int:
        return len(self.values)

    def column(self, k: int):
        k = int(k)
        if not 0 <= k < self.dim:
            raise IndexError(f"column {k} out of range for dimension {self.dim}")
        a, b = self.col_start[k], self.col_start[k + 1]
        return self.row_idx[a:b], self.values[a:b]

    def diagonal(self) -> np.ndarray:
        if self._diag is None:
            d = np.zeros(self.dim)
            cols = np.repeat(np.arange(self.dim), np.diff(self.col_start))
            on = self.row_idx == cols
            d[cols[on]] = self.values[on]
            self._diag = d
        return self._diag

    def as_scipy(self) -> sp.csc_matrix:
        if self._csc is None:
            self._csc = sp.csc_matrix(
                (self.values, self.row_idx, self.col_start), shape=(self.dim, self.dim)
            )
        return self._csc

    def apply(self, X):
        X = np.asarray(X, dtype=float)
        squeeze = X.ndim == 1
        Xb = _as_block(X, self.dim)
        out = np.asarray(self.as_scipy() @ Xb)
        return out[:, 0] if squeeze else out

    def to_sparse(self):
        return self

    def to_dense(self) -> np.ndarray:
        return self.as_scipy().toarray()

    def is_symmetric(self, samples: int | None = None, rng=None, exhaustive_cap: int = 2000) -> bool:
        """Check structural and numerical symmetry.

        Exhaustive for ``dim <= exhaustive_cap``; otherwise `samples` random
        stored entries are mirrored.
        """
        if self.dim <= exhaustive_cap and samples is None:
            d = self.as_scipy() - self.as_scipy().T
            return d.count_nonzero() == 0
        rng = np.random.default_rng(rng)
        cols = np.repeat(np.arange(self.dim), np.diff(self.col_start))
        picks = rng.integers(0, self.nnz, size=samples or 1000) if self.nnz else []
        for e in picks:
            i, j, v = self.row_idx[e], cols[e], self.values[e]
            idx, val = self.column(i)
            pos = np.searchsorted(idx, j)
            if pos >= len(idx) or idx[pos] != j or val[pos] != v:
                return False
        return True


def column_access(A: SymmetricOperator, k: int):
    """Return ``(indices, values)`` of column `k`, indices ascending."""
    if not 0 <= k < A.dim:
        raise IndexError(f"column {k} out of range for dimension {A.dim}")
    return A.column(k)


def block_apply(A: SymmetricOperator, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim not in (1, 2) or X.shape[0] != A.dim:
        raise DimensionError(f"cannot apply {A.dim}x{A.dim} operator to shape {X.shape}")
    return A.apply(X)


def random_symmetric(n: int, density: float = 0.1, rng=None, diag_shift: float = 0.0) -> SparseColumnMatrix:
    """Random sparse symmetric matrix with a full nonzero diagonal.

    Off-diagonal entries are standard normal; the diagonal is normal plus
    `diag_shift`.  Used by tests and by the ``random:`` generator.
    """
    rng = np.random.default_rng(rng)
    mask = np.triu(rng.random((n, n)) < density, 1)
    r, c = np.nonzero(mask)
    v = rng.standard_normal(len(r))
    d = rng.standard_normal(n) + diag_shift
    rows = np.concatenate([r, c, np.arange(n)])
    cols = np.concatenate([c, r, np.arange(n)])
    vals = np.concatenate([v, v, d])
    return SparseColumnMatrix.from_triplets(n, rows, cols, vals)


# ---------------------------------------------------------------- Matrix Market

_BANNER = "%%matrixmarket"


def load_matrix_market(path) -> SparseColumnMatrix:
    """Read a coordinate real Matrix Market file into full symmetric storage.

    ``symmetric`` files are mirrored; ``general`` files are accepted only when
    their entries already form a symmetric matrix.  Explicit zeros are dropped.
    """
    with open(path, "r") as fh:
        header = fh.readline()
        tokens = header.strip().lower().split()
        if len(tokens) != 5 or tokens[0] != _BANNER:
            raise FormatError(f"malformed Matrix Market banner: {header.strip()!r}")
        obj, fmt, field, symm = tokens[1:]
        if obj != "matrix" or fmt != "coordinate":
            raise UnsupportedFormatError(f"only 'matrix coordinate' is supported, got {obj} {fmt}")
        if field not in ("real", "integer", "double"):
            raise UnsupportedFormatError(f"unsupported field {field!r}")
        if symm not in ("symmetric", "general"):
            raise UnsupportedFormatError(f"unsupported symmetry {symm!r}")

        line = fh.readline()
        while line and (line.startswith("%") or not line.strip()):
            line = fh.readline()
        try:
            nrows, ncols, nentries = (int(t) for t in line.split())
        except ValueError:
            raise FormatError(f"malformed size line: {line.strip()!r}") from None
        if nrows != ncols:
            raise DataError(f"matrix is not square: {nrows}x{ncols}")

        body = [ln for ln in fh if ln.strip() and not ln.startswith("%")]
    if len(body) != nentries:
        raise DataError(f"header declares {nentries} entries, found {len(body)}")
    try:
        data = np.array([ln.split()[:3] for ln in body], dtype=float).reshape(-1, 3)
    except ValueError:
        raise FormatError("malformed entry line") from None
    rows = data[:, 0].astype(np.int64) - 1
    cols = data[:, 1].astype(np.int64) - 1
    vals = data[:, 2]
    if len(rows) and (rows.min() < 0 or cols.min() < 0 or rows.max() >= nrows or cols.max() >= ncols):
        raise DataError("entry index outside declared bounds")
    key = np.minimum(rows, cols) * nrows + np.maximum(rows, cols) if symm == "symmetric" else rows * nrows + cols
    if len(np.unique(key)) != len(key):
        raise DataError("duplicate coordinates")

    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
        return SparseColumnMatrix.from_triplets(nrows, rows, cols, vals)

    A = SparseColumnMatrix.from_triplets(nrows, rows, cols, vals)
    if not A.is_symmetric():
        raise UnsupportedFormatError("'general' file does not hold a symmetric matrix")
    return A


def write_matrix_market(path, A: SymmetricOperator, comment: str | None = None) -> None:
    """Write the lower triangle as ``coordinate real symmetric`` with 17 significant digits."""
    entries = []
    for k in range(A.dim):
        idx, val = A.column(k)
        for i, v in zip(idx.tolist(), val.tolist()):
            if i >= k:
                entries.append(f"{i + 1} {k + 1} {v:.17g}")
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric\n")
        if comment:
            for ln in comment.splitlines():
                fh.write(f"% {ln}\n")
        fh.write(f"{A.dim} {A.dim} {len(entries)}\n")
        fh.write("\n".join(entries))
        if entries:
            fh.write("\n")
