"""Acceptance criteria; each test records one PASS/FAIL line for the terminal summary."""

import time

import numpy as np

from conftest import ACCEPTANCE, ci_like, hubbard6, rotated_diagonal
from wtpm.cd import (
    CdConfig,
    apply_update,
    cd_init,
    cd_solve,
    cubic_coefficients,
    cubic_real_roots,
    history_window,
    minimize_quartic,
    pick_coordinate,
    quartic_value,
)
from wtpm.cli import main
from wtpm.gd import GdConfig, gd_solve, smallest_diagonal_start
from wtpm.hamiltonian import laplacian_eigenvalues, laplacian_operator
from wtpm.matrix import SparseColumnMatrix, random_symmetric
from wtpm.model import (
    Spectrum,
    WeightedPenaltyProblem,
    condition_number,
    global_minimizer,
    gradient,
    hessian_apply,
    objective,
)
from wtpm.oracle import dense_eig, eigen_error, hessian_matrix
from wtpm.weights import gap_weights, rayleigh_weights, spread_score, uniform_weights


def record(key, ok, detail):
    ACCEPTANCE[str(key)] = (bool(ok), detail)
    assert ok, detail


def random_instances(count, seed=2024, n=40, p=3):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        A = random_symmetric(n, 0.1, rng)
        lam = dense_eig(A.to_dense()).eigenvalues
        w = np.sort(rng.uniform(lam[p - 1] + 0.1, lam[p - 1] + 5.0, size=p))[::-1]
        yield WeightedPenaltyProblem(A, w), rng.standard_normal((n, p))


def test_criterion_01_gradient():
    t0 = time.perf_counter()
    worst = 0.0
    for prob, X in random_instances(100):
        G = gradient(prob, X)
        h = 1e-5
        fd = np.empty_like(X)
        E = np.zeros_like(X)
        for idx in np.ndindex(*X.shape):
            E[idx] = h
            fd[idx] = (objective(prob, X + E) - objective(prob, X - E)) / (2 * h)
            E[idx] = 0.0
        worst = max(worst, np.linalg.norm(fd - G) / np.linalg.norm(G))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-6 and dt < 5.0, f"max rel err {worst:.2e}, {dt:.2f} s")


def test_criterion_02_hessian():
    rng = np.random.default_rng(7)
    worst = 0.0
    for prob, X in random_instances(100):
        Z = rng.standard_normal(X.shape)
        h = 1e-5
        fd = (gradient(prob, X + h * Z) - gradient(prob, X - h * Z)) / (2 * h)
        H = hessian_apply(prob, X, Z)
        worst = max(worst, np.linalg.norm(fd - H) / np.linalg.norm(H))
    record(2, worst <= 1e-5, f"max rel err {worst:.2e}")


def test_criterion_03_condition_number():
    rng = np.random.default_rng(3)
    cases = [(np.array([1.0, 2.0, 4.0, 8.0]), np.array([4.5, 3.0]))]
    while len(cases) < 20:
        n = int(rng.integers(4, 13))
        p = int(rng.integers(1, 4))
        lam = np.sort(rng.uniform(-5, 5, n))
        if np.min(np.diff(lam)) < 1e-2:
            continue
        w = np.sort(rng.uniform(lam[p - 1] + 0.05, lam[p - 1] + 8, p))[::-1]
        cases.append((lam, w))
    worst = 0.0
    for lam, w in cases:
        op, Q = rotated_diagonal(lam, rng)
        prob = WeightedPenaltyProblem(op, w)
        ev = dense_eig(hessian_matrix(prob, global_minimizer(Spectrum(lam, Q), 1.0, w))).eigenvalues
        kappa = condition_number(lam, 1.0, w)
        worst = max(worst, abs(ev[-1] / ev[0] - kappa) / kappa)
    worked = condition_number(cases[0][0], 1.0, cases[0][1])
    ok = worst <= 1e-10 and abs(worked - 19.308) <= 5e-4
    record(3, ok, f"max rel err {worst:.2e} over {len(cases)} spectra, worked case {worked:.4f}")


def _minimizer_report(X, lam, w):
    G = X.T @ X
    p = len(w)
    norm_err = np.max(np.abs(np.sqrt(np.diag(G)) - np.sqrt(w - lam[:p])))
    off = np.max(np.abs(G - np.diag(np.diag(G))))
    return norm_err, off


def test_criterion_04_laplacian_minimizer():
    n, p = 200, 4
    lam = laplacian_eigenvalues(n)
    w = uniform_weights(lam[0], lam[p - 1], lam[p], lam[-1], p)
    prob = WeightedPenaltyProblem(laplacian_operator(n), w)
    lines, ok = [], True

    t0 = time.perf_counter()
    gd = gd_solve(prob, smallest_diagonal_start(prob), GdConfig(max_iter=20000, tol_grad=1e-10))
    dt = time.perf_counter() - t0
    norm_err, off = _minimizer_report(gd.X, lam, w)
    ritz = eigen_error(gd.ritz, lam[:p])
    good = gd.converged and norm_err <= 1e-6 and ritz <= 1e-8 and off <= 1e-8 and dt < 30
    ok &= good
    lines.append(f"GD {gd.status} norms {norm_err:.1e} ritz {ritz:.1e} offdiag {off:.1e} {dt:.1f}s")

    t0 = time.perf_counter()
    cd = cd_solve(prob, CdConfig(tol=1e-10))
    dt = time.perf_counter() - t0
    norm_err, off = _minimizer_report(cd.X, lam, w)
    with np.errstate(invalid="ignore"):
        ritz = eigen_error(cd.ritz, lam[:p])
    good = cd.converged and norm_err <= 1e-6 and ritz <= 1e-8 and off <= 1e-8 and dt < 30
    ok &= good
    lines.append(f"CD {cd.status} after {cd.iterations} updates, norms err {norm_err:.2e} {dt:.1f}s")
    record(4, ok, "; ".join(lines))


def test_criterion_05_saddle_certificates():
    rng = np.random.default_rng(5)
    worst, all_negative = 0.0, True
    for _ in range(20):
        n, p = 8, 3
        lam = np.sort(rng.uniform(-3, 3, n))
        w = np.sort(rng.uniform(lam[-1] + 0.5, lam[-1] + 4, p))[::-1]
        prob = WeightedPenaltyProblem(SparseColumnMatrix.from_dense(np.diag(lam)), w)
        # swapped: column j holds eigenvector sigma > i while v_i stays unused
        used = list(range(p))
        j, sigma = int(rng.integers(p)), int(rng.integers(p, n))
        used[j] = sigma
        i = min(m for m in range(n) if m not in used)
        X = np.zeros((n, p))
        for col, m in enumerate(used):
            X[m, col] = np.sqrt(w[col] - lam[m])
        Z = np.zeros((n, p))
        Z[i, j] = 1.0
        stationary = np.linalg.norm(gradient(prob, X)) <= 1e-12
        val = float(np.sum(Z * hessian_apply(prob, X, Z)))
        worst = max(worst, abs(val - (lam[i] - lam[sigma])))
        all_negative &= stationary and val < 0
        # rank deficient: column j is zero
        X[:, j] = 0.0
        val = float(np.sum(Z * hessian_apply(prob, X, Z)))
        worst = max(worst, abs(val - (lam[i] - w[j])))
        all_negative &= np.linalg.norm(gradient(prob, X)) <= 1e-12 and val < 0
    record(5, worst <= 1e-12 and all_negative, f"max deviation {worst:.1e}, all negative: {all_negative}")


def test_criterion_06_weight_inequality():
    rng = np.random.default_rng(6)
    bad = 0
    for trial in range(100):
        p = 2 + trial % 5
        lam = np.cumsum(rng.uniform(0.01, 2.0, 20)) - 10
        F_hat = spread_score(gap_weights(lam, lam[-1], p), lam)
        F_uni = spread_score(uniform_weights(lam[0], lam[p - 1], lam[p], lam[-1], p), lam)
        if not (F_hat / (p - 1) <= F_uni + 1e-12 and F_uni <= F_hat + 1e-12):
            bad += 1
    record(6, bad == 0, f"{100 - bad}/100 spectra satisfy the bounds")


def test_criterion_07_cd_consistency():
    rng = np.random.default_rng(77)
    n, p = 100, 4
    A = random_symmetric(n, 0.08, rng)
    d = A.diagonal()
    r = np.sort(d[np.argsort(d, kind="stable")[:p]])
    prob = WeightedPenaltyProblem(A, rayleigh_weights(r, 1.0))
    st = cd_init(prob)
    grid = np.linspace(-1.0, 1.0, 2001)
    worst_line = 0.0
    for j in range(10**4):
        k, ell = pick_coordinate(st, prob, j)
        c1, c0 = cubic_coefficients(st, prob, k, ell)
        x = st.X[ell].get(k, 0.0)
        alpha = minimize_quartic(c1, c0, x)
        t = x + alpha
        q = quartic_value(t, c1, c0)
        span = 2.0 * max(1.0, abs(t), abs(x))
        pts = np.concatenate([t + span * grid, cubic_real_roots(c1, c0)])
        qmin = float(np.min(pts**4 / 4 + c1 * pts**2 / 2 + c0 * pts))
        worst_line = max(worst_line, (q - qmin) / max(1.0, abs(q)))
        apply_update(st, prob, k, ell, alpha)
    X = st.dense("X")
    AX = A.to_dense() @ X
    y_err = np.linalg.norm(st.dense("Y") - AX) / np.linalg.norm(AX)
    s_err = np.linalg.norm(st.gram() - X.T @ X)
    ok = y_err <= 1e-10 and s_err <= 1e-10 and worst_line <= 1e-12
    record(7, ok, f"Y rel {y_err:.1e}, S abs {s_err:.1e}, worst line-search excess {worst_line:.1e}")


def test_criterion_08_hubbard_cd():
    op, lam = hubbard6()
    p = 3
    w = uniform_weights(lam[0], lam[p - 1], lam[p], lam[-1], p)
    t0 = time.perf_counter()
    res = cd_solve(WeightedPenaltyProblem(op, w), CdConfig(tol=1e-10, max_updates=10**6), reference=lam[:p])
    dt = time.perf_counter() - t0
    err = eigen_error(res.ritz, lam[:p])
    ok = res.converged and err <= 1e-6 and res.iterations <= 10**6 and dt < 60
    record(8, ok, f"{res.status}, err {err:.1e} after {res.iterations} updates, {dt:.1f} s")


def test_criterion_09_compression():
    M = ci_like(600, 0)
    lam = np.linalg.eigvalsh(M)
    p = 3
    prob = WeightedPenaltyProblem(SparseColumnMatrix.from_dense(M), rayleigh_weights(np.sort(np.diag(M))[:p], 1.0))
    runs = {eps: cd_solve(prob, CdConfig(tol=1e-10, eps_compress=eps)) for eps in (0.0, 1e-6)}
    n0, n1 = runs[0.0].state.nnz_y, runs[1e-6].state.nnz_y
    err = eigen_error(runs[1e-6].ritz, lam[:p])
    ok = runs[1e-6].converged and n1 < n0 and err <= 1e-3
    record(9, ok, f"nnz(Y) {n1} compressed vs {n0} uncompressed, err {err:.1e}")


def test_criterion_10_rayleigh_fixture():
    # r_1 = -75.7 with w_p = r_p + epsilon = -75.35
    w = rayleigh_weights([-75.7, -75.5, -75.36], 0.01)
    target = np.array([-75.0, -75.175, -75.35])
    dev = float(np.max(np.abs(w - target)))
    record(10, dev <= 1e-12, f"weights {w.tolist()}, max deviation {dev:.1e}")


def test_criterion_11_geometric_window():
    prob = WeightedPenaltyProblem(SparseColumnMatrix.from_dense(np.diag([1.0, 2.0])), [3.0])
    st = cd_init(prob, CdConfig(tol=1.0, h=100, gamma=0.99))
    c = 2.5e-3
    for _ in range(500):
        st.increments.append(c)
    expect = c * (1 - 0.99**101) / 0.01
    rel = abs(history_window(st, 0.99) - expect) / expect
    record(11, rel <= 1e-12, f"relative deviation {rel:.1e}")


def test_criterion_12_reproducible_trace(tmp_path, capsys):
    argv = ["solve", "--gen", "hubbard:4,2,2,U=4", "--p", "3", "--weights", "auto-uniform", "--eps", "0",
            "--tol", "1e-10", "--checkpoint-every", "100", "--reference", "auto"]
    codes = [main(argv + ["--trace", str(tmp_path / f"{name}.csv")]) for name in "ab"]
    capsys.readouterr()
    a, b = (tmp_path / "a.csv").read_bytes(), (tmp_path / "b.csv").read_bytes()
    lines = len(a.splitlines())
    record(12, a == b and lines > 1, f"exit codes {codes}, {lines} lines, identical: {a == b}")
