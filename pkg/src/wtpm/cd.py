"""Coordinate descent on the weighted trace-penalty objective with a compressed
sparse iterate.

State kept between updates:

* ``X[l]``, ``Y[l]``: dicts row -> value holding column l of the iterate and
  of Y ~ A X.  An increment to an absent entry of Y is stored only when its
  magnitude exceeds the compression threshold; with threshold 0, Y == A X.
* ``S``: upper triangle of X^T X (p x p).
* ``d``: diag(X^T A X).

One update touches column ``l = j mod p``: pick the row with the largest
gradient magnitude inside the nonzero pattern of the matrix column updated
for ``l`` last time, minimize the quartic restriction exactly, then update
X, Y, d and S incrementally.
"""

from __future__ import annotations

import math
import struct
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EmptyPatternError
from .matrix import SymmetricOperator
from .model import WeightedPenaltyProblem
from .oracle import eigen_error
from .trace import ConvergenceTrace, SolveResult, TraceRow


@dataclass
class CdConfig:
    tol: float
    h: int = 100
    gamma: float = 0.99
    eps_compress: float = 0.0
    max_updates: int = 10**7
    checkpoint_every: int = 1000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.h < 0:
            raise ValueError("h must be >= 0")
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if self.eps_compress < 0:
            raise ValueError("compression threshold must be >= 0")
        if self.max_updates < 1 or self.checkpoint_every < 1:
            raise ValueError("max_updates and checkpoint_every must be >= 1")


class ColumnCache:
    """Memoized operator columns as Python lists, plus the diagonal entry."""

    def __init__(self, op: SymmetricOperator, max_entries: int = 1 << 20):
        self.op = op
        self.max_entries = max_entries
        self._cols: dict[int, tuple[list[int], list[float], float]] = {}

    def __call__(self, k: int):
        hit = self._cols.get(k)
        if hit is None:
            idx, val = self.op.column(k)
            idx, val = idx.tolist(), val.tolist()
            akk = 0.0
            for i, v in zip(idx, val):
                if i == k:
                    akk = v
                    break
            hit = (idx, val, akk)
            if len(self._cols) >= self.max_entries:
                self._cols.clear()
            self._cols[k] = hit
        return hit


@dataclass
class CdState:
    n: int
    p: int
    X: list[dict]
    Y: list[dict]
    S: list[list[float]]  # upper triangle used, S[i][m] for i <= m
    d: list[float]
    last_rows: list[int]
    increments: deque
    update_count: int = 0
    op_count: int = 0
    columns: ColumnCache | None = field(default=None, repr=False)

    def s(self, i: int, m: int) -> float:
        return self.S[i][m] if i <= m else self.S[m][i]

    def gram(self) -> np.ndarray:
        G = np.array(self.S, dtype=float)
        return np.triu(G) + np.triu(G, 1).T

    @property
    def nnz_x(self) -> int:
        return sum(len(c) for c in self.X)

    @property
    def nnz_y(self) -> int:
        return sum(len(c) for c in self.Y)

    def dense(self, which: str = "X") -> np.ndarray:
        maps = self.X if which == "X" else self.Y
        out = np.zeros((self.n, self.p))
        for ell, col in enumerate(maps):
            if col:
                out[list(col.keys()), ell] = list(col.values())
        return out


def cd_init(prob: WeightedPenaltyProblem, cfg: CdConfig | None = None) -> CdState:
    """Unit columns at the p smallest diagonal entries (ties by index)."""
    op, p, n = prob.operator, prob.p, prob.n
    if n < p:
        raise DimensionError(f"dimension {n} smaller than p={p}")
    h = cfg.h if cfg is not None else 100
    rows = sorted(np.argsort(op.diagonal(), kind="stable")[:p].tolist())
    cols = ColumnCache(op)
    X, Y, d = [], [], []
    for i in rows:
        idx, val, akk = cols(i)
        X.append({i: 1.0})
        y = dict(zip(idx, val))
        y.setdefault(i, 0.0)
        Y.append(y)
        d.append(akk)
    S = [[1.0 if i == m else 0.0 for m in range(p)] for i in range(p)]
    return CdState(
        n=n, p=p, X=X, Y=Y, S=S, d=d, last_rows=list(rows),
        increments=deque(maxlen=h + 1), columns=cols,
    )


def _columns(state: CdState, prob) -> ColumnCache:
    if state.columns is None or state.columns.op is not prob.operator:
        state.columns = ColumnCache(prob.operator)
    return state.columns


def gradient_entry(state: CdState, prob: WeightedPenaltyProblem, i: int, ell: int) -> float:
    """(A X + mu X (X^T X - W))_{i, ell} using Y in place of A X."""
    acc = 0.0
    for m in range(state.p):
        x = state.X[m].get(i)
        if x:
            acc += x * state.s(m, ell)
    acc -= prob.weights[ell] * state.X[ell].get(i, 0.0)
    return state.Y[ell].get(i, 0.0) + prob.mu * acc


def pick_coordinate(state: CdState, prob: WeightedPenaltyProblem, j: int) -> tuple[int, int]:
    """Column j mod p; row of largest |gradient| in the pattern of the last updated column."""
    p = state.p
    ell = j % p
    idx, _, _ = _columns(state, prob)(state.last_rows[ell])
    if not idx:
        raise EmptyPatternError(f"column {state.last_rows[ell]} of the operator is empty")
    Xs = state.X
    Yl = state.Y[ell]
    Xl = Xs[ell]
    scol = [state.s(m, ell) for m in range(p)]
    w = prob.weights[ell]
    mu = prob.mu
    others = [(Xs[m], scol[m]) for m in range(p)]
    best_k, best = idx[0], -1.0
    for i in idx:
        acc = 0.0
        for Xm, sm in others:
            x = Xm.get(i)
            if x:
                acc += x * sm
        g = Yl.get(i, 0.0) + mu * (acc - w * Xl.get(i, 0.0))
        if g < 0:
            g = -g
        if g > best:
            best, best_k = g, i
    state.op_count += len(idx) * p
    return best_k, ell


def cubic_coefficients(state: CdState, prob: WeightedPenaltyProblem, k: int, ell: int,
                       eps_compress: float = 0.0) -> tuple[float, float]:
    """Coefficients of (alpha + x)^3 + c1 (alpha + x) + c0, the derivative of the
    single-coordinate restriction divided by mu."""
    idx, val, akk = _columns(state, prob)(k)
    mu = prob.mu
    p = state.p
    xk = [state.X[m].get(k, 0.0) for m in range(p)]
    x = xk[ell]
    row_sq = sum(v * v for v in xk)
    sll = state.S[ell][ell]
    if eps_compress == 0.0:
        yk = state.Y[ell].get(k, 0.0)
    else:
        Xl = state.X[ell]
        yk = 0.0
        for i, a in zip(idx, val):
            xi = Xl.get(i)
            if xi:
                yk += a * xi
    cross = sum(xk[s] * state.s(s, ell) for s in range(p))
    c1 = akk / mu - prob.weights[ell] + sll + row_sq - 2.0 * x * x
    c0 = (yk - akk * x) / mu + cross + x * x * x - x * (row_sq + sll)
    return c1, c0


def cubic_real_roots(c1: float, c0: float) -> list[float]:
    """Real roots of t^3 + c1 t + c0, each polished by one Newton step."""
    if c1 == 0.0 and c0 == 0.0:
        return [0.0]
    q = c0 / 2.0
    r = c1 / 3.0
    disc = q * q + r * r * r
    if disc < 0.0:
        # three distinct real roots
        m = 2.0 * math.sqrt(-r)
        arg = max(-1.0, min(1.0, -q / math.sqrt(-r * r * r)))
        phi = math.acos(arg) / 3.0
        roots = [m * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
    else:
        sq = math.sqrt(disc)
        u = -q - sq if q >= 0 else -q + sq
        u = math.copysign(abs(u) ** (1.0 / 3.0), u)
        if u == 0.0:
            roots = [0.0]
        else:
            t1 = u - r / u
            roots = [t1]
            if disc == 0.0:
                roots.append(-t1 / 2.0)
    out = []
    for t in roots:
        dp = 3.0 * t * t + c1
        if dp != 0.0:
            t_new = t - (t * t * t + c1 * t + c0) / dp
            if math.isfinite(t_new) and abs(t_new ** 3 + c1 * t_new + c0) <= abs(t ** 3 + c1 * t + c0):
                t = t_new
        out.append(t)
    return out


def quartic_value(t: float, c1: float, c0: float) -> float:
    return t ** 4 / 4.0 + c1 * t * t / 2.0 + c0 * t


def minimize_quartic(c1: float, c0: float, x_kl: float) -> float:
    """Increment alpha minimizing the quartic restriction; ties go to the smallest |alpha|."""
    best = None
    for t in cubic_real_roots(c1, c0):
        key = (quartic_value(t, c1, c0), abs(t - x_kl))
        if best is None or key < best[0]:
            best = (key, t - x_kl)
    return best[1]


def apply_update(state: CdState, prob: WeightedPenaltyProblem, k: int, ell: int, alpha: float,
                 eps_compress: float = 0.0) -> None:
    """X[l](k) += alpha with incremental maintenance of Y, d and S."""
    state.update_count += 1
    state.last_rows[ell] = k
    state.increments.append(abs(alpha))
    if alpha == 0.0:
        return
    p = state.p
    idx, val, akk = _columns(state, prob)(k)
    xk = [state.X[m].get(k, 0.0) for m in range(p)]
    Xl = state.X[ell]
    Xl[k] = xk[ell] + alpha

    Yl = state.Y[ell]
    for i, a in zip(idx, val):
        delta = alpha * a
        if i in Yl:
            Yl[i] += delta
        elif delta > eps_compress or -delta > eps_compress:
            Yl[i] = delta
    yk = 0.0
    for i, a in zip(idx, val):
        xi = Xl.get(i)
        if xi:
            yk += a * xi
    Yl[k] = yk
    state.op_count += 2 * len(idx) + p

    state.d[ell] += 2.0 * alpha * yk - alpha * alpha * akk
    S = state.S
    for i in range(ell):
        S[i][ell] += alpha * xk[i]
    S[ell][ell] += 2.0 * alpha * xk[ell] + alpha * alpha
    for m in range(ell + 1, p):
        S[ell][m] += alpha * xk[m]


def history_window(state: CdState, gamma: float) -> float:
    """sum_{i=0..h} gamma^i |alpha^(j-i)|, missing history counted as 0."""
    total = 0.0
    g = 1.0
    for a in reversed(state.increments):
        total += g * a
        g *= gamma
    return total


def should_stop(state: CdState, cfg: CdConfig) -> bool:
    if not state.increments:
        return False
    return history_window(state, cfg.gamma) < cfg.tol


def rayleigh_quotients(state: CdState, prob: WeightedPenaltyProblem) -> np.ndarray:
    """Exact x^T A x / x^T x per column from the sparse iterate."""
    cols = _columns(state, prob)
    out = np.empty(state.p)
    for ell, Xl in enumerate(state.X):
        num = den = 0.0
        for k, xk in Xl.items():
            if not xk:
                continue
            den += xk * xk
            idx, val, _ = cols(k)
            s = 0.0
            for i, a in zip(idx, val):
                xi = Xl.get(i)
                if xi:
                    s += a * xi
            num += xk * s
        out[ell] = num / den if den > 0 else np.nan
    return out


def relative_iteration(update_count: int, n: int, p: int) -> float:
    return update_count * (p + 2) / (n * p)


def cd_solve(
    prob: WeightedPenaltyProblem,
    cfg: CdConfig,
    reference=None,
    trace: ConvergenceTrace | None = None,
    callback=None,
    record_time: bool = False,
    state: CdState | None = None,
) -> SolveResult:
    """Run coordinate descent until the increment history drops below ``cfg.tol``.

    `callback(state, k, ell, alpha)` is invoked after every update.  Passing
    `state` resumes from a snapshot.
    """
    p, n = prob.p, prob.n
    state = state if state is not None else cd_init(prob, cfg)
    if state.increments.maxlen != cfg.h + 1:
        state.increments = deque(state.increments, maxlen=cfg.h + 1)
    trace = trace if trace is not None else ConvergenceTrace(p)
    ref = None if reference is None else np.asarray(reference, dtype=float)[:p]
    eps = cfg.eps_compress
    gamma = cfg.gamma
    tail = gamma ** (cfg.h + 1)
    t0 = time.perf_counter()

    def checkpoint():
        with np.errstate(invalid="ignore", divide="ignore"):
            ritz = np.array(state.d) / np.diag(state.gram())
        trace.record(
            TraceRow(
                update_count=state.update_count,
                relative_iteration=relative_iteration(state.update_count, n, p),
                wall_ms=(time.perf_counter() - t0) * 1e3 if record_time else None,
                ritz=ritz.tolist(),
                err=eigen_error(ritz, ref) if ref is not None else None,
                nnz_x=state.nnz_x,
                nnz_y=state.nnz_y,
            )
        )

    # running estimate of the stopping window; confirmed exactly before stopping
    window = history_window(state, gamma)
    status = "max_iter"
    start = state.update_count
    j = start
    if start == 0:
        checkpoint()
    while state.update_count - start < cfg.max_updates:
        k, ell = pick_coordinate(state, prob, j)
        c1, c0 = cubic_coefficients(state, prob, k, ell, eps)
        x = state.X[ell].get(k, 0.0)
        alpha = minimize_quartic(c1, c0, x)
        if not math.isfinite(alpha):
            status = "diverged"
            break
        inc = state.increments
        dropped = inc[0] if len(inc) == inc.maxlen else 0.0
        apply_update(state, prob, k, ell, alpha, eps)
        window = abs(alpha) + gamma * window - tail * dropped
        j += 1
        if callback is not None:
            callback(state, k, ell, alpha)
        if state.update_count % cfg.checkpoint_every == 0:
            checkpoint()
        if window < 2.0 * cfg.tol or state.update_count % (cfg.h + 1) == 0:
            window = history_window(state, gamma)
            if window < cfg.tol:
                status = "converged"
                break

    if trace.last is None or trace.last.update_count != state.update_count:
        checkpoint()
    if status == "converged" and any(state.S[l][l] == 0.0 for l in range(p)):
        status = "stalled"
    return SolveResult(
        X=state.dense("X"),
        ritz=rayleigh_quotients(state, prob),
        trace=trace,
        status=status,
        iterations=state.update_count,
        state=state,
    )


# ------------------------------------------------------------------ snapshots
#
# Layout (all little-endian):
#   magic   8 bytes  b"WTPMCD\x00\x01"
#   header  <IQIIQQ  version, n, p, h, update_count, n_increments
#   S       p*p float64 (row-major, full square; lower part unused)
#   d       p float64
#   rows    p int64 (last updated row per column)
#   incr    n_increments float64, oldest first
#   then for X and for Y, per column: <Q count, count int64 keys, count float64 values

SNAPSHOT_MAGIC = b"WTPMCD\x00\x01"
SNAPSHOT_VERSION = 1
_HEAD = struct.Struct("<IQIIQQ")


def save_state(state: CdState, path) -> None:
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(_HEAD.pack(SNAPSHOT_VERSION, state.n, state.p, state.increments.maxlen - 1,
                            state.update_count, len(state.increments)))
        fh.write(np.asarray(state.S, dtype="<f8").tobytes())
        fh.write(np.asarray(state.d, dtype="<f8").tobytes())
        fh.write(np.asarray(state.last_rows, dtype="<i8").tobytes())
        fh.write(np.asarray(list(state.increments), dtype="<f8").tobytes())
        for maps in (state.X, state.Y):
            for col in maps:
                fh.write(struct.pack("<Q", len(col)))
                fh.write(np.fromiter(col.keys(), dtype="<i8", count=len(col)).tobytes())
                fh.write(np.fromiter(col.values(), dtype="<f8", count=len(col)).tobytes())


def load_state(path) -> CdState:
    with open(path, "rb") as fh:
        if fh.read(8) != SNAPSHOT_MAGIC:
            raise ValueError("not a CD snapshot")
        version, n, p, h, count, ninc = _HEAD.unpack(fh.read(_HEAD.size))
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")

        def arr(dtype, k):
            return np.frombuffer(fh.read(8 * k), dtype=dtype, count=k)

        S = arr("<f8", p * p).reshape(p, p).tolist()
        d = arr("<f8", p).tolist()
        rows = arr("<i8", p).tolist()
        inc = deque(arr("<f8", ninc).tolist(), maxlen=h + 1)
        maps = []
        for _ in range(2 * p):
            (m,) = struct.unpack("<Q", fh.read(8))
            keys = arr("<i8", m).tolist()
            vals = arr("<f8", m).tolist()
            maps.append(dict(zip(keys, vals)))
    return CdState(n=n, p=p, X=maps[:p], Y=maps[p:], S=S, d=d, last_rows=rows,
                   increments=inc, update_count=count)
