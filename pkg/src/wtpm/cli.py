"""Command-line harness: ``wtpm solve``, ``wtpm gen`` and ``wtpm bench``.

Exit codes: 0 converged, 1 iteration budget exhausted, 2 bad configuration
or unreadable input, 3 solver diverged or stalled (a column collapsed to zero).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cd import CdConfig, cd_solve, relative_iteration
from .errors import WtpmError
from .gd import GdConfig, gd_solve, smallest_diagonal_start
from .hamiltonian import HubbardSpec, hubbard_operator, laplacian_eigenvalues, laplacian_operator
from .matrix import SymmetricOperator, load_matrix_market, random_symmetric, write_matrix_market
from .model import WeightedPenaltyProblem
from .oracle import DEFAULT_CAP, eigen_error, operator_spectrum
from .trace import ConvergenceTrace
from .weights import gap_weights, gershgorin_bounds, random_weights, rayleigh_weights, uniform_weights

EXIT_OK, EXIT_MAXITER, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2, 3
WEIGHT_STRATEGIES = ("auto-uniform", "auto-gap", "auto-random", "rayleigh")


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ generators


def parse_generator(spec: str) -> tuple[str, dict]:
    """``laplacian:N``, ``hubbard:L,nu,nd[,t=..,U=..,bc=..]`` (L may be ``LxxLy``),
    ``random:N,DENSITY,SEED``."""
    name, _, rest = spec.partition(":")
    args = [a.strip() for a in rest.split(",")] if rest else []
    try:
        if name == "laplacian":
            if len(args) != 1:
                raise ConfigError("laplacian takes one argument N")
            return name, {"n": int(args[0])}
        if name == "hubbard":
            pos = [a for a in args if "=" not in a]
            kw = dict(a.split("=", 1) for a in args if "=" in a)
            if len(pos) != 3:
                raise ConfigError("hubbard takes L,nu,nd")
            unknown = set(kw) - {"t", "U", "bc"}
            if unknown:
                raise ConfigError(f"unknown hubbard option(s) {sorted(unknown)}")
            sites = tuple(int(s) for s in pos[0].split("x")) if "x" in pos[0] else int(pos[0])
            return name, {
                "spec": HubbardSpec(sites, int(pos[1]), int(pos[2]), t=float(kw.get("t", 1.0)),
                                    U=float(kw.get("U", 0.0)), boundary=kw.get("bc", "open"))
            }
        if name == "random":
            if len(args) != 3:
                raise ConfigError("random takes N,DENSITY,SEED")
            return name, {"n": int(args[0]), "density": float(args[1]), "seed": int(args[2])}
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad generator spec {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown generator {name!r}")


def build_operator(spec: str) -> SymmetricOperator:
    name, kw = parse_generator(spec)
    if name == "laplacian":
        return laplacian_operator(kw["n"])
    if name == "hubbard":
        return hubbard_operator(kw["spec"])
    return random_symmetric(kw["n"], kw["density"], np.random.default_rng(kw["seed"]))


def closed_form_spectrum(spec: str | None):
    if spec is None:
        return None
    name, kw = parse_generator(spec)
    return laplacian_eigenvalues(kw["n"]) if name == "laplacian" else None


# ------------------------------------------------------------------ run config


@dataclass
class RunConfig:
    matrix: str | None = None
    gen: str | None = None
    p: int = 1
    mu: float = 1.0
    weights: str = "auto-uniform"
    rayleigh_eps: float | None = None
    tol: float = 1e-8
    eps: float = 0.0
    solver: str = "cd"
    max_iter: int | None = None
    seed: int = 0
    trace: str | None = None
    reference: str | None = None
    checkpoint_every: int | None = None
    timing: bool = False
    lambda_max: float | None = None
    stepsize: str = "bb"
    alpha: float | None = None
    h: int = 100
    gamma: float = 0.99
    name: str | None = None

    def validate(self) -> None:
        if (self.matrix is None) == (self.gen is None):
            raise ConfigError("give exactly one of --matrix or --gen")
        if self.p < 1:
            raise ConfigError("p must be >= 1")
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        if self.eps < 0:
            raise ConfigError("eps must be >= 0")
        if self.solver not in ("gd", "cd"):
            raise ConfigError(f"solver must be gd or cd, got {self.solver!r}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError("max-iter must be >= 1")
        if self.checkpoint_every is not None and self.checkpoint_every < 1:
            raise ConfigError("checkpoint-every must be >= 1")
        if self.rayleigh_eps is not None and not self.rayleigh_eps > 0:
            raise ConfigError("rayleigh-eps must be positive")
        if self.stepsize not in ("bb", "fixed"):
            raise ConfigError("stepsize must be bb or fixed")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        norm = {k.replace("-", "_"): v for k, v in d.items()}
        unknown = set(norm) - names
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        return cls(**norm)


def read_reference(path: str) -> np.ndarray:
    try:
        vals = np.loadtxt(path, dtype=float, ndmin=1)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read reference spectrum {path}: {exc}") from exc
    if vals.size and np.any(np.diff(vals) < 0):
        raise ConfigError("reference eigenvalues must be ascending")
    return vals


def _reference(cfg: RunConfig, op: SymmetricOperator):
    """Exact eigenvalues for the err column: a file, or ``auto`` for closed form / dense oracle."""
    if cfg.reference is None:
        return None
    if cfg.reference == "auto":
        lam = closed_form_spectrum(cfg.gen)
        return lam if lam is not None else _dense(op)
    return read_reference(cfg.reference)


def _dense(op: SymmetricOperator) -> np.ndarray:
    if op.dim > DEFAULT_CAP:
        raise ConfigError(f"dimension {op.dim} too large for the dense oracle; supply --reference")
    return operator_spectrum(op).eigenvalues


def resolve_weights(cfg: RunConfig, op: SymmetricOperator, reference=None) -> np.ndarray:
    p, mu = cfg.p, cfg.mu
    strat = cfg.weights
    if strat == "rayleigh":
        diag = op.diagonal()
        r = np.sort(diag[np.sort(np.argsort(diag, kind="stable")[:p])])
        return rayleigh_weights(r / mu, cfg.rayleigh_eps)
    if strat not in WEIGHT_STRATEGIES:
        try:
            w = np.array([float(v) for v in strat.split(",")])
        except ValueError as exc:
            raise ConfigError(f"weights must be a strategy or a comma list, got {strat!r}") from exc
        if len(w) != p:
            raise ConfigError(f"{len(w)} weights given for p={p}")
        return w
    lam = reference
    if lam is None or len(lam) < p + 1:
        lam = closed_form_spectrum(cfg.gen)
    if lam is None or len(lam) < p + 1:
        lam = _dense(op)
    if op.dim < p + 1:
        raise ConfigError("automatic weights need dimension > p")
    if cfg.lambda_max is not None:
        ln = cfg.lambda_max
    elif len(lam) == op.dim:
        ln = lam[-1]
    else:
        ln = gershgorin_bounds(op)[1]
    lam = np.asarray(lam, dtype=float) / mu
    ln = ln / mu
    if strat == "auto-uniform":
        return uniform_weights(lam[0], lam[p - 1], lam[p], ln, p)
    if strat == "auto-gap":
        return gap_weights(lam, ln, p)
    return random_weights(lam, ln, p, np.random.default_rng(cfg.seed))


def load_operator(cfg: RunConfig) -> SymmetricOperator:
    if cfg.gen is not None:
        return build_operator(cfg.gen)
    return load_matrix_market(cfg.matrix)


def execute(cfg: RunConfig, out=None) -> dict:
    """Run one configuration; returns a summary dict (status, counts, err, ritz, ...)."""
    cfg.validate()
    op = load_operator(cfg)
    if cfg.p > op.dim:
        raise ConfigError(f"p={cfg.p} exceeds dimension {op.dim}")
    ref = _reference(cfg, op)
    if ref is not None and len(ref) < cfg.p:
        raise ConfigError(f"reference has {len(ref)} eigenvalues, need {cfg.p}")
    w = resolve_weights(cfg, op, ref)
    prob = WeightedPenaltyProblem(op, w, mu=cfg.mu)
    ref_p = None if ref is None else ref[: cfg.p]

    sink = open(cfg.trace, "w", newline="") if cfg.trace else None
    t0 = time.perf_counter()
    try:
        trace = ConvergenceTrace(cfg.p, sink=sink)
        if cfg.solver == "cd":
            res = cd_solve(
                prob,
                CdConfig(
                    tol=cfg.tol, h=cfg.h, gamma=cfg.gamma, eps_compress=cfg.eps,
                    max_updates=cfg.max_iter or 10**7, checkpoint_every=cfg.checkpoint_every or 1000,
                ),
                reference=ref_p, trace=trace, record_time=cfg.timing,
            )
            rel = relative_iteration(res.iterations, prob.n, prob.p)
        else:
            res = gd_solve(
                prob, smallest_diagonal_start(prob),
                GdConfig(
                    max_iter=cfg.max_iter or 10000, tol_grad=cfg.tol, stepsize_mode=cfg.stepsize,
                    alpha=cfg.alpha, checkpoint_every=cfg.checkpoint_every or 10,
                ),
                reference=ref_p, trace=trace, record_time=cfg.timing,
            )
            rel = float(res.iterations)
    finally:
        if sink is not None:
            sink.close()
    wall = (time.perf_counter() - t0) * 1e3
    last = res.trace.last
    return {
        "name": cfg.name or (cfg.gen or cfg.matrix),
        "solver": cfg.solver,
        "status": res.status,
        "updates": res.iterations,
        "relative_iteration": rel,
        "wall_ms": wall,
        "err": eigen_error(res.ritz, ref_p) if ref_p is not None else None,
        "nnz_x": last.nnz_x,
        "nnz_y": last.nnz_y,
        "ritz": [float(r) for r in res.ritz],
        "weights": [float(v) for v in w],
    }


def status_code(status: str) -> int:
    return {"converged": EXIT_OK, "max_iter": EXIT_MAXITER}.get(status, EXIT_FAILED)


# ------------------------------------------------------------------ commands


def _add_solve_args(sp):
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--matrix", help="Matrix Market file")
    src.add_argument("--gen", help="generator spec, e.g. laplacian:200 or hubbard:6,3,3,U=4")
    sp.add_argument("--p", type=int, required=True, help="number of eigenpairs")
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--weights", default="auto-uniform",
                    help="auto-uniform | auto-gap | auto-random | rayleigh | w1,...,wp")
    sp.add_argument("--rayleigh-eps", type=float, default=None)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--eps", type=float, default=0.0, help="compression threshold for Y (cd)")
    sp.add_argument("--solver", choices=("gd", "cd"), default="cd")
    sp.add_argument("--max-iter", type=int, default=None, help="iterations (gd) or updates (cd)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", default=None, help="trace CSV path")
    sp.add_argument("--reference", default=None,
                    help="ascending eigenvalues file, or 'auto' for closed form / dense oracle")
    sp.add_argument("--checkpoint-every", type=int, default=None)
    sp.add_argument("--timing", action="store_true", help="fill the wall_ms trace column")
    sp.add_argument("--lambda-max", type=float, default=None)
    sp.add_argument("--stepsize", choices=("bb", "fixed"), default="bb")
    sp.add_argument("--alpha", type=float, default=None, help="fixed gd stepsize")
    sp.add_argument("--h", type=int, default=100, help="stopping window length (cd)")
    sp.add_argument("--gamma", type=float, default=0.99, help="stopping window decay (cd)")


def cmd_solve(args) -> int:
    d = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    try:
        summary = execute(RunConfig.from_dict(d))
    except (ConfigError, WtpmError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"status: {summary['status']}")
    print(f"updates: {summary['updates']}")
    print(f"relative_iteration: {summary['relative_iteration']:.6g}")
    print("weights: " + " ".join(repr(v) for v in summary["weights"]))
    print("ritz: " + " ".join(repr(v) for v in summary["ritz"]))
    if summary["err"] is not None:
        print(f"err: {summary['err']!r}")
    return status_code(summary["status"])


def cmd_gen(args) -> int:
    try:
        op = build_operator(args.spec)
        A = op.to_sparse()
        write_matrix_market(args.out, A, comment=f"wtpm gen {args.spec}")
    except (ConfigError, WtpmError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"dim: {A.dim}")
    print(f"nnz: {A.nnz}")
    return EXIT_OK


SUMMARY_FIELDS = ["name", "solver", "status", "updates", "relative_iteration", "wall_ms",
                  "err", "nnz_x", "nnz_y"]


def _bench_one(d: dict) -> dict:
    try:
        return execute(RunConfig.from_dict(d))
    except Exception as exc:  # recorded per run
        return {"name": d.get("name") or d.get("gen") or d.get("matrix"),
                "solver": d.get("solver", "cd"), "status": f"error: {exc}"}


def load_bench_config(path) -> list[dict]:
    """A JSON list of run objects, or ``{"defaults": {...}, "runs": [...]}``."""
    with open(path) as fh:
        data = json.load(fh)
    defaults = {}
    if isinstance(data, dict):
        defaults = data.get("defaults", {})
        data = data.get("runs")
    if not isinstance(data, list) or not data:
        raise ConfigError("bench config must hold a non-empty list of runs")
    runs = [{**defaults, **r} for r in data]
    for r in runs:
        RunConfig.from_dict(r).validate()
    return runs


def run_bench(runs: list[dict], threads: int = 1) -> list[dict]:
    if threads <= 1 or len(runs) == 1:
        return [_bench_one(r) for r in runs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_bench_one, runs))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_bench(args) -> int:
    try:
        runs = load_bench_config(args.config)
    except (ConfigError, WtpmError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        threads = int(os.environ.get("WTPM_THREADS", "1"))
    except ValueError:
        threads = 1
    results = run_bench(runs, max(1, threads))
    if args.summary:
        with open(args.summary, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_FIELDS)
            for r in results:
                w.writerow([("" if r.get(k) is None else r.get(k)) for k in SUMMARY_FIELDS])
    rows = [[_cell(r.get(k)) for k in SUMMARY_FIELDS] for r in results]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(SUMMARY_FIELDS)]
    print("  ".join(h.ljust(wd) for h, wd in zip(SUMMARY_FIELDS, widths)))
    for row in rows:
        print("  ".join(c.ljust(wd) for c, wd in zip(row, widths)))
    return EXIT_OK if all(r["status"] == "converged" for r in results) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wtpm", description="Weighted trace-penalty eigensolvers")
    sub = ap.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="run GD or CD on one matrix")
    _add_solve_args(sp)
    sp.set_defaults(func=cmd_solve)
    gp = sub.add_parser("gen", help="write a generated matrix in Matrix Market format")
    gp.add_argument("spec")
    gp.add_argument("out")
    gp.set_defaults(func=cmd_gen)
    bp = sub.add_parser("bench", help="run a JSON list of solve configurations")
    bp.add_argument("config")
    bp.add_argument("--summary", default=None, help="summary CSV path")
    bp.set_defaults(func=cmd_bench)
    return ap


_NEGATIVE_VALUE = re.compile(r"^-[\d.]")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--flag -1.5,-2`` into ``--flag=-1.5,-2`` so argparse does not
    read a negative number list as an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    ap = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = ap.parse_args(_glue_negative_values(argv))
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
