"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL`` line (visible without
``-s``) with the measured quantities and runtime, then asserts.
"""

import json
import math
import time

import numpy as np
import pytest

from gzk.cli import main
from gzk.datasets import ball_uniform, blobs, smooth_regression
from gzk.features import build_features, feature_block, leverage_bound, leverage_scores, sample_sphere
from gzk.kernels import (
    exponential_model,
    gaussian_model,
    gram_exact,
    gram_truncated,
    kernel_exact,
    kernel_truncated,
    select_truncation,
)
from gzk.learning import approx_error_study, exact_krr, kernel_kmeans, kmeans_objective_exact, krr_fit
from gzk.special import alpha, eval_explicit, gegenbauer_table, quad_rule, sphere_surface
from gzk.spectral import achieved_epsilon, pcp_lambda, projection_cost_gap, statistical_dimension


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(number: int, ok: bool, detail: str, budget: float):
        elapsed = time.perf_counter() - start
        ok = bool(ok) and elapsed < budget
        with capsys.disabled():
            status = "PASS" if ok else "FAIL"
            print(f"\ncriterion {number}: {status}  {detail}  [{elapsed:.2f}s of {budget:g}s]")
        assert ok, detail

    return emit


def test_criterion_01_polynomials(report):
    grid = np.linspace(-1, 1, 41)
    worst = 0.0
    for d in (2, 3, 5, 10):
        table = gegenbauer_table(15, d, grid)
        for l in range(16):
            explicit = np.array([eval_explicit(l, d, t) for t in grid])
            worst = max(worst, float(np.max(np.abs(table[l] - explicit))))
    legendre = [
        np.ones_like(grid),
        grid,
        (3 * grid**2 - 1) / 2,
        (5 * grid**3 - 3 * grid) / 2,
        (35 * grid**4 - 30 * grid**2 + 3) / 8,
        (63 * grid**5 - 70 * grid**3 + 15 * grid) / 8,
    ]
    chebyshev = [np.cos(l * np.arccos(grid)) for l in range(6)]
    closed = max(
        float(np.max(np.abs(gegenbauer_table(5, 3, grid) - legendre))),
        float(np.max(np.abs(gegenbauer_table(5, 2, grid) - chebyshev))),
    )
    report(1, worst <= 1e-10 and closed <= 1e-10, f"recurrence-vs-explicit {worst:.1e}, closed forms {closed:.1e}", 1.0)


def test_criterion_02_orthogonality(report):
    worst = 0.0
    for d in (2, 3, 4, 8):
        rule = quad_rule(d, 32)
        P = gegenbauer_table(10, d, rule.nodes)
        integrals = (P * rule.weights) @ P.T
        expected = np.diag([sphere_surface(d) / (alpha(l, d) * sphere_surface(d - 1)) for l in range(11)])
        worst = max(worst, float(np.max(np.abs(integrals - expected))))
    report(2, worst <= 1e-8, f"max deviation {worst:.1e}", 5.0)


def test_criterion_03_reproducing_property(report):
    d = 3
    W = sample_sphere(d, 10**6, 2024)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10):
        xy = rng.standard_normal((d, 2))
        xy /= np.linalg.norm(xy, axis=0)
        P = gegenbauer_table(3, d, W @ xy)
        target = gegenbauer_table(3, d, float(xy[:, 0] @ xy[:, 1]))
        for l in (1, 2, 3):
            vals = P[l][:, 0] * P[l][:, 1]
            z = abs(vals.mean() - target[l] / alpha(l, d)) / (vals.std() / math.sqrt(len(vals)))
            worst = max(worst, z)
    report(3, worst < 5.0, f"worst deviation {worst:.2f} standard errors", 30.0)


def test_criterion_04_gaussian_expansion(report):
    eps, lam, n = 0.1, 0.01, 100
    q, s = select_truncation("gaussian", 1.0, 3, n, eps, lam)
    model = gaussian_model(3, q, s)
    tol = eps * lam / (10 * n)
    X = ball_uniform(500, 3, 41).X
    Y = ball_uniform(500, 3, 42).X
    diag = np.array([kernel_truncated(model, X[:, j], X[:, j]) for j in range(500)])
    diag_ok = np.all(diag >= 1 - tol) and np.all(diag <= 1 + 1e-9)
    errs = [abs(kernel_truncated(model, X[:, j], Y[:, j]) - kernel_exact(model, X[:, j], Y[:, j])) for j in range(500)]
    worst = max(errs)
    report(
        4,
        (q, s) == (16, 6) and diag_ok and worst <= tol,
        f"(q,s)=({q},{s}), diagonal in [{diag.min():.9f}, {diag.max():.9f}], max pair error {worst:.1e} vs {tol:.0e}",
        10.0,
    )


def test_criterion_05_unbiased_rate(report):
    n, d = 50, 3
    q, s = select_truncation("gaussian", 1.0, d, n, 0.1, 0.01)
    model = gaussian_model(d, q, s)
    X = ball_uniform(n, d, 5).X
    K = gram_truncated(model, X, X)
    means = {}
    for m in (64, 256, 1024):
        means[m] = np.mean([np.linalg.norm(build_features(X, model, m, seed).gram() - K) for seed in range(20)])
    ratios = [means[256] / means[64], means[1024] / means[256]]
    ok = all(0.35 <= r <= 0.65 for r in ratios)
    report(5, ok, f"error ratios {ratios[0]:.3f}, {ratios[1]:.3f}", 120.0)


def _criterion6_instance():
    n, d, lam = 200, 3, 0.01
    q, s = select_truncation("gaussian", 1.0, d, n, 0.1, lam)
    model = gaussian_model(d, q, s)
    X = ball_uniform(n, d, 0).X
    return model, X, lam


def test_criterion_06_spectral(report):
    model, X, lam = _criterion6_instance()
    K = gram_exact(model, X, X)
    medians = []
    for m in (128, 512, 2048):
        medians.append(float(np.median([achieved_epsilon(K, build_features(X, model, m, seed).data, lam) for seed in range(10)])))
    ok = medians[0] > medians[1] > medians[2] and medians[2] <= 0.5
    report(6, ok, f"(q,s)=({model.q},{model.s}), median eps " + ", ".join(f"{v:.3f}" for v in medians), 300.0)


def test_criterion_07_leverage(report):
    instances = [
        (gaussian_model(3, 10, 5), ball_uniform(60, 3, 70).X, 0.05),
        (gaussian_model(4, 8, 4), ball_uniform(100, 4, 71).X * 1.5, 0.1),
        (exponential_model(3, 10, 5, 1.0), ball_uniform(80, 3, 72).X, 0.05),
    ]
    dominated, worst_z = True, 0.0
    for i, (model, X, lam) in enumerate(instances):
        K = gram_truncated(model, X, X)
        W = sample_sphere(model.d, 1000, 700 + i)
        blocks = np.stack([feature_block(w, X, model) for w in W])
        tau = leverage_scores(K, lam, blocks)
        dominated &= bool(np.all(tau <= leverage_bound(model, X, lam)))
        z = abs(tau.mean() - statistical_dimension(K, lam)) / (tau.std() / math.sqrt(len(tau)))
        worst_z = max(worst_z, z)
    report(7, dominated and worst_z < 5.0, f"bound dominates: {dominated}, mean vs s_lambda {worst_z:.2f} SE", 120.0)


def test_criterion_08_projection_cost(report):
    model, X, _ = _criterion6_instance()
    K = gram_truncated(model, X, X)
    r = 10
    lam = pcp_lambda(K, r)
    rows, ok = [], True
    for seed in range(3):
        Z = build_features(X, model, 512, seed).data
        eps = achieved_epsilon(K, Z, lam)
        gap = projection_cost_gap(K, Z, r, trials=20, seed=seed)
        ok &= gap <= 16 * eps
        rows.append(f"{gap:.4f}<=16*{eps:.3f}")
    report(8, ok, f"lambda {lam:.4f}; " + ", ".join(rows), 120.0)


def test_criterion_09_error_study(report):
    degrees = range(16)
    ok, notes = True, []
    for kernel in ("exp2", "ntk"):
        rows = approx_error_study(kernel, [2, 4, 8, 32], degrees)
        series = {}
        for method, d, degree, err in rows:
            series.setdefault((method, d), []).append(err)
        monotone = all(np.all(np.diff(v) <= 1e-12) for v in series.values())
        ok &= monotone
        notes.append(f"{kernel} monotone={monotone}")
        if kernel == "exp2":
            geg, tay = series[("gegenbauer", "2")][10], series[("taylor", "inf")][10]
            top = max(v[15] for v in series.values())
            ok &= geg < tay and top < 1e-6
            notes.append(f"deg10 gegenbauer {geg:.1e} < taylor {tay:.1e}, deg15 max {top:.1e}")
    report(9, ok, "; ".join(notes), 10.0)


def test_criterion_10_krr(report):
    d, lam = 3, 0.1
    train = smooth_regression(500, d, 1)
    test = smooth_regression(200, d, 2)
    q, s = select_truncation("gaussian", 1.0, d, 500, 0.1, lam)
    model = gaussian_model(d, q, s)
    K = gram_exact(model, train.X, train.X)
    Kc = gram_exact(model, test.X, train.X)
    exact_mse = float(np.mean((exact_krr(K, train.y, lam, Kc) - test.y) ** 2))
    mses = []
    for seed in range(10):
        Z = build_features(np.hstack([train.X, test.X]), model, 2048, seed).data
        fit = krr_fit(Z[:, :500], train.y, lam)
        mses.append(float(np.mean((Z[:, 500:].T @ fit.weights - test.y) ** 2)))
    rel = abs(np.median(mses) - exact_mse) / exact_mse
    Zs = build_features(train.X, model, 64, 0).data
    p = krr_fit(Zs, train.y, lam, "primal").predict(Zs)
    dd = krr_fit(Zs, train.y, lam, "dual").predict(Zs)
    agree = float(np.max(np.abs(p - dd)))
    report(
        10,
        rel <= 0.10 and agree <= 1e-8,
        f"median feature MSE {np.median(mses):.5f} vs exact {exact_mse:.5f} ({rel:.1%}), primal/dual {agree:.1e}",
        120.0,
    )


def test_criterion_11_kmeans(report):
    ds = blobs(400, 3, 0, k=2)
    q, s = select_truncation("gaussian", 1.0, 3, 400, 0.1, 0.01)
    model = gaussian_model(3, q, s)
    K = gram_truncated(model, ds.X, ds.X)
    lam = pcp_lambda(K, 2)
    matched, worst = 0, 0.0
    ok = True
    for seed in range(10):
        Z = build_features(ds.X, model, 512, seed)
        result = kernel_kmeans(Z, 2, seed=seed)
        a = result.assignments
        matched += int(np.array_equal(a, ds.labels) or np.array_equal(a, 1 - ds.labels))
        exact = kmeans_objective_exact(K, a)
        eps_hat = achieved_epsilon(K, Z.data, lam)
        rel = abs(result.objective - exact) / exact
        ok &= rel <= 16 * eps_hat
        worst = max(worst, rel / (16 * eps_hat))
    report(11, ok and matched == 10, f"partitions matched {matched}/10, worst gap/(16 eps) {worst:.3f}", 60.0)


DETERMINISM = {
    "expand-error": ["expand-error", "--dims", "2,4,8,32", "--max-degree", "15"],
    "build-features": ["build-features", "--n", "100", "--m", "128"],
    "verify-spectral": ["verify-spectral", "--n", "100", "--m", "128"],
    "verify-projection": ["verify-projection", "--n", "100", "--m", "128"],
    "krr": ["krr", "--n", "100", "--m", "128", "--exact"],
    "kmeans": ["kmeans", "--n", "100", "--m", "128", "--k", "2"],
    "bench": ["bench", "--n", "100", "--m", "128", "--repeats", "1"],
}


def test_criterion_12_determinism(report, tmp_path):
    def artifact(name, argv, tag):
        out = tmp_path / f"{name}.{tag}"
        main(argv + ["--seed", "5", "--out", str(out)])
        data = out.read_bytes()
        if name == "bench":
            body = json.loads(data)
            body.pop("timing")
            data = json.dumps(body, sort_keys=True).encode()
        return data

    failures = []
    for name, argv in DETERMINISM.items():
        runs = [artifact(name, argv, "a"), artifact(name, argv, "b")]
        runs += [artifact(name, argv + ["--workers", w], f"w{w}") for w in ("1", "4")]
        if any(r != runs[0] for r in runs[1:]):
            failures.append(name)
    report(12, not failures, f"{len(DETERMINISM)} subcommands, mismatches: {failures or 'none'}", 600.0)
