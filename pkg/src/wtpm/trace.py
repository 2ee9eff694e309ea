"""Convergence traces and their CSV form.

Column order is fixed::

    update_count, relative_iteration, wall_ms, ritz_1..ritz_p, err, nnz_x, nnz_y, objective

Absent values (no timing, no reference spectrum, no objective) are written
as empty fields.  Floats use ``repr`` so a trace round-trips exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO

import numpy as np


def trace_header(p: int) -> list[str]:
    return (
        ["update_count", "relative_iteration", "wall_ms"]
        + [f"ritz_{i + 1}" for i in range(p)]
        + ["err", "nnz_x", "nnz_y", "objective"]
    )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class TraceRow:
    update_count: int
    relative_iteration: float
    wall_ms: float | None
    ritz: list[float]
    err: float | None
    nnz_x: int
    nnz_y: int
    objective: float | None = None

    def cells(self) -> list[str]:
        return [
            _fmt(self.update_count),
            _fmt(float(self.relative_iteration)),
            _fmt(self.wall_ms),
            *(_fmt(float(r)) for r in self.ritz),
            _fmt(self.err),
            _fmt(self.nnz_x),
            _fmt(self.nnz_y),
            _fmt(self.objective),
        ]


@dataclass
class ConvergenceTrace:
    """Checkpoint rows of a solver run, optionally streamed to an open CSV file."""

    p: int
    rows: list[TraceRow] = field(default_factory=list)
    sink: IO[str] | None = field(default=None, repr=False)

    def __post_init__(self):
        self._writer = None
        if self.sink is not None:
            self._writer = csv.writer(self.sink, lineterminator="\n")
            self._writer.writerow(trace_header(self.p))

    def record(self, row: TraceRow) -> None:
        if self.rows and row.update_count <= self.rows[-1].update_count:
            raise ValueError("update_count must increase strictly between rows")
        self.rows.append(row)
        if self._writer is not None:
            self._writer.writerow(row.cells())
            self.sink.flush()

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    @property
    def last(self) -> TraceRow | None:
        return self.rows[-1] if self.rows else None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(trace_header(self.p))
            for r in self.rows:
                w.writerow(r.cells())


def read_trace_csv(path) -> list[dict]:
    """Strict reader: every row must have exactly the header's field count."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh, strict=True)
        header = next(reader)
        out = []
        for line in reader:
            if len(line) != len(header):
                raise ValueError(f"row has {len(line)} fields, header has {len(header)}")
            out.append(dict(zip(header, line)))
    return out


@dataclass
class SolveResult:
    """Outcome of a solver run.

    `status` is one of ``converged``, ``max_iter``, ``diverged`` or
    ``stalled`` (a column collapsed to zero, a saddle the iteration cannot leave).
    """

    X: np.ndarray
    ritz: np.ndarray
    trace: ConvergenceTrace
    status: str
    iterations: int
    state: object = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"
