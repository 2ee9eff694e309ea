"""Hubbard-model Hamiltonians in an occupation-bitstring basis, plus the 1D Laplacian.

Basis ordering: within each spin sector the occupation bitstrings (bit i set
when site i is occupied) are sorted ascending; the determinant index is
``up_index * n_down_states + down_index``.  A hop of one electron from site a
to site b picks up the sign ``(-1)**m`` where m counts occupied sites of the
same spin strictly between a and b.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import CapacityError, DimensionError
from .matrix import SparseColumnMatrix, SymmetricOperator

DEFAULT_CACHE_NNZ = 10**6
DEFAULT_MAX_DIM = 10**7


@dataclass(frozen=True)
class HubbardSpec:
    sites: int | tuple[int, int]
    n_up: int
    n_down: int
    t: float = 1.0
    U: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if isinstance(self.sites, (tuple, list)):
            object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
            if len(self.sites) != 2 or min(self.sites) < 1:
                raise ValueError(f"grid must be (Lx, Ly) with positive sizes, got {self.sites}")
        elif int(self.sites) < 1:
            raise ValueError("number of sites must be positive")
        n = self.n_sites
        if not (0 <= self.n_up <= n and 0 <= self.n_down <= n):
            raise ValueError(f"electron counts ({self.n_up}, {self.n_down}) invalid for {n} sites")
        if self.boundary not in ("open", "periodic"):
            raise ValueError(f"boundary must be 'open' or 'periodic', got {self.boundary!r}")

    @property
    def n_sites(self) -> int:
        if isinstance(self.sites, tuple):
            return self.sites[0] * self.sites[1]
        return int(self.sites)

    @property
    def dim(self) -> int:
        return comb(self.n_sites, self.n_up) * comb(self.n_sites, self.n_down)

    def bonds(self) -> list[tuple[int, int]]:
        periodic = self.boundary == "periodic"
        if isinstance(self.sites, tuple):
            Lx, Ly = self.sites
        else:
            Lx, Ly = self.n_sites, 1
        out = set()
        for y in range(Ly):
            for x in range(Lx):
                s = x + Lx * y
                if x + 1 < Lx:
                    out.add((s, s + 1))
                elif periodic and Lx > 2:
                    out.add((Lx * y, s))
                if y + 1 < Ly:
                    out.add((s, s + Lx))
                elif periodic and Ly > 2:
                    out.add((x, s))
        return sorted(out)


def _sector(n_sites: int, n_el: int) -> list[int]:
    return sorted(sum(1 << i for i in c) for c in itertools.combinations(range(n_sites), n_el))


def _hops(bits: int, bonds) -> list[tuple[int, int]]:
    """All single-electron hops from `bits` along `bonds`: (new_bits, sign)."""
    out = []
    for a, b in bonds:
        for src, dst in ((a, b), (b, a)):
            if (bits >> src) & 1 and not (bits >> dst) & 1:
                lo, hi = (src, dst) if src < dst else (dst, src)
                between = bits & ((1 << hi) - (1 << (lo + 1)))
                sign = -1 if bin(between).count("1") & 1 else 1
                out.append((bits ^ (1 << src) ^ (1 << dst), sign))
    return out


class HubbardOperator(SymmetricOperator):
    """Matrix-free Hubbard Hamiltonian; columns are generated on demand."""

    def __init__(self, spec: HubbardSpec):
        self.spec = spec
        L = spec.n_sites
        self.up_states = _sector(L, spec.n_up)
        self.down_states = _sector(L, spec.n_down)
        self._up_index = {b: i for i, b in enumerate(self.up_states)}
        self._down_index = {b: i for i, b in enumerate(self.down_states)}
        self._bonds = spec.bonds()
        self.dim = len(self.up_states) * len(self.down_states)

    def occupations(self, k: int) -> tuple[int, int]:
        a, b = divmod(int(k), len(self.down_states))
        return self.up_states[a], self.down_states[b]

    def index(self, up: int, down: int) -> int:
        return self._up_index[up] * len(self.down_states) + self._down_index[down]

    def column(self, k: int):
        if not 0 <= k < self.dim:
            raise IndexError(f"column {k} out of range for dimension {self.dim}")
        t, U = self.spec.t, self.spec.U
        nd = len(self.down_states)
        a, b = divmod(int(k), nd)
        up, down = self.up_states[a], self.down_states[b]
        entries: dict[int, float] = {}
        diag = U * bin(up & down).count("1")
        if diag != 0.0:
            entries[k] = diag
        if t != 0.0:
            for new, sign in _hops(up, self._bonds):
                i = self._up_index[new] * nd + b
                entries[i] = entries.get(i, 0.0) - t * sign
            for new, sign in _hops(down, self._bonds):
                i = a * nd + self._down_index[new]
                entries[i] = entries.get(i, 0.0) - t * sign
        idx = sorted(i for i, v in entries.items() if v != 0.0)
        return np.array(idx, dtype=np.int64), np.array([entries[i] for i in idx], dtype=float)

    def diagonal(self) -> np.ndarray:
        U = self.spec.U
        return np.array(
            [U * bin(u & d).count("1") for u in self.up_states for d in self.down_states], dtype=float
        )

    def max_column_nnz(self) -> int:
        L, s = self.spec.n_sites, self.spec
        return 1 + s.n_up * (L - s.n_up) + s.n_down * (L - s.n_down)


def hubbard_operator(
    spec: HubbardSpec,
    cache_nnz: int = DEFAULT_CACHE_NNZ,
    max_dim: int = DEFAULT_MAX_DIM,
) -> SymmetricOperator:
    """Hubbard Hamiltonian for `spec`.

    Returns a cached `SparseColumnMatrix` when the worst-case nonzero count is
    within `cache_nnz`, otherwise the matrix-free `HubbardOperator`.
    """
    if spec.dim > max_dim:
        raise CapacityError(f"basis dimension {spec.dim} exceeds cap {max_dim}")
    op = HubbardOperator(spec)
    if op.dim * op.max_column_nnz() <= cache_nnz:
        return op.to_sparse()
    return op


def laplacian_operator(n: int) -> SparseColumnMatrix:
    """Tridiagonal matrix with 2 on the diagonal and -1 on the off-diagonals."""
    if n < 2:
        raise DimensionError("laplacian needs n >= 2")
    i = np.arange(n)
    rows = np.concatenate([i, i[:-1], i[1:]])
    cols = np.concatenate([i, i[1:], i[:-1]])
    vals = np.concatenate([np.full(n, 2.0), np.full(2 * n - 2, -1.0)])
    return SparseColumnMatrix.from_triplets(n, rows, cols, vals)


def laplacian_eigenvalues(n: int) -> np.ndarray:
    k = np.arange(1, n + 1)
    return 2.0 - 2.0 * np.cos(k * np.pi / (n + 1))
