"""Downstream learning on feature matrices, plus baselines.

Feature matrices are ``(D, n)`` arrays (columns are points), e.g. ``FeatureMatrix.data``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from gzk.errors import ConfigurationError, SolverError
from gzk.features import FeatureMatrix
from gzk.kernels import exponential_derivatives, gegenbauer_coefficients, ntk_function
from gzk.special import gegenbauer_table

__all__ = [
    "KrrModel",
    "krr_fit",
    "exact_krr",
    "Clustering",
    "kernel_kmeans",
    "kmeans_objective_exact",
    "kmeans_objective",
    "rff_features",
    "taylor_truncation",
    "ntk_taylor_derivatives",
    "approx_error_study",
    "STUDY_KERNELS",
]

log = logging.getLogger(__name__)

_RFF_CHUNK = 1024


def _as_matrix(Z) -> tuple[np.ndarray, int | None, int | None]:
    if isinstance(Z, FeatureMatrix):
        return Z.data, Z.fingerprint, Z.seed
    return np.asarray(Z, dtype=float), None, None


def _spd_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return cho_solve(cho_factor(A), b)
    except np.linalg.LinAlgError as exc:
        raise SolverError("regularised system is not numerically positive definite") from exc


@dataclass
class KrrModel:
    """Ridge regression weights in feature space.

    ``fingerprint`` and ``seed`` identify the features the model was trained
    on; :meth:`predict` refuses features built differently.
    """

    weights: np.ndarray
    lam: float
    method: str
    fingerprint: int | None = None
    seed: int | None = None

    def predict(self, Z) -> np.ndarray:
        data, fp, seed = _as_matrix(Z)
        if self.fingerprint is not None and fp is not None:
            if fp != self.fingerprint or seed != self.seed:
                raise ConfigurationError("test features were built with a different model or seed")
        if data.shape[0] != self.weights.shape[0]:
            raise ConfigurationError(
                f"feature dimension {data.shape[0]} does not match model dimension {self.weights.shape[0]}"
            )
        return data.T @ self.weights


def krr_fit(Z, y, lam: float, method: str = "auto") -> KrrModel:
    """Kernel ridge regression with the approximate kernel ``Z^T Z``.

    The primal system ``(Z Z^T + lam I) w = Z y`` is solved when the feature
    dimension is below ``n``; otherwise the dual ``(Z^T Z + lam I) a = y`` and
    ``w = Z a``. Both give the same weights.
    """
    if not lam > 0:
        raise ConfigurationError(f"ridge parameter must be positive, got {lam}")
    data, fp, seed = _as_matrix(Z)
    y = np.asarray(y, dtype=float).reshape(-1)
    D, n = data.shape
    if y.size != n:
        raise ConfigurationError(f"{y.size} targets for {n} points")
    if method == "auto":
        method = "primal" if D < n else "dual"
    if method == "primal":
        w = _spd_solve(data @ data.T + lam * np.eye(D), data @ y)
    elif method == "dual":
        w = data @ _spd_solve(data.T @ data + lam * np.eye(n), y)
    else:
        raise ConfigurationError(f"unknown KRR method {method!r}")
    return KrrModel(weights=w, lam=float(lam), method=method, fingerprint=fp, seed=seed)


def exact_krr(K_train, y, lam: float, K_cross) -> np.ndarray:
    """Predictions ``K_cross (K_train + lam I)^{-1} y``; ``K_cross`` is ``(n_test, n_train)``."""
    if not lam > 0:
        raise ConfigurationError(f"ridge parameter must be positive, got {lam}")
    K_train = np.asarray(K_train, dtype=float)
    coef = _spd_solve(K_train + lam * np.eye(K_train.shape[0]), np.asarray(y, dtype=float))
    return np.asarray(K_cross, dtype=float) @ coef


@dataclass
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray  # (k, D)
    objective: float
    history: list[float] = field(default_factory=list)
    iterations: int = 0


def kmeans_objective(Z, assignments, k: int) -> float:
    """Per-point within-cluster sum of squares of the columns of ``Z``."""
    data, _, _ = _as_matrix(Z)
    P = data.T
    total = 0.0
    for c in range(k):
        pts = P[assignments == c]
        if len(pts):
            total += float(np.sum((pts - pts.mean(axis=0)) ** 2))
    return total / P.shape[0]


def _sq_dists(P: np.ndarray, C: np.ndarray) -> np.ndarray:
    d2 = (P * P).sum(1)[:, None] - 2.0 * P @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d2, 0.0)


def _kmeans_pp(P: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = P.shape[0]
    centers = [P[int(rng.integers(n))]]
    closest = _sq_dists(P, centers[0][None, :])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(P[idx])
        closest = np.minimum(closest, _sq_dists(P, P[idx][None, :])[:, 0])
    return np.array(centers)


def _update_centroids(P: np.ndarray, assign: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    assign = assign.copy()
    counts = np.bincount(assign, minlength=k)
    C = np.zeros((k, P.shape[1]))
    np.add.at(C, assign, P)
    C[counts > 0] /= counts[counts > 0, None]
    for c in np.flatnonzero(counts == 0):
        # Re-seed at the point farthest from its own centroid.
        resid = np.sum((P - C[assign]) ** 2, axis=1)
        resid[counts[assign] <= 1] = -1.0
        far = int(np.argmax(resid))
        old = assign[far]
        assign[far] = c
        counts[old] -= 1
        counts[c] = 1
        C[c] = P[far]
        C[old] = P[assign == old].mean(axis=0)
    return C, assign


def kernel_kmeans(Z, k: int, seed: int = 0, max_iters: int = 100) -> Clustering:
    """k-means++ seeding followed by Lloyd iterations on the columns of ``Z``.

    Stops at an assignment fixpoint or after ``max_iters`` iterations. Ties
    go to the lowest cluster index; an empty cluster is re-seeded at the point
    farthest from its current centroid.
    """
    data, _, _ = _as_matrix(Z)
    P = np.ascontiguousarray(data.T)
    n = P.shape[0]
    if not 1 <= k <= n:
        raise ConfigurationError(f"need 1 <= k <= n, got k={k}, n={n}")
    if max_iters < 1:
        raise ConfigurationError("max_iters must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed & ((1 << 64) - 1), 0x4B4D], dtype=np.uint64)))
    C = _kmeans_pp(P, k, rng)
    assign = np.argmin(_sq_dists(P, C), axis=1)
    history: list[float] = []
    it = 0
    for it in range(1, max_iters + 1):
        C, assign = _update_centroids(P, assign, k)
        history.append(float(np.sum((P - C[assign]) ** 2)) / n)
        new_assign = np.argmin(_sq_dists(P, C), axis=1)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    objective = kmeans_objective(data, assign, k)
    history.append(objective)
    centroids = np.array([P[assign == c].mean(axis=0) if np.any(assign == c) else C[c] for c in range(k)])
    return Clustering(assignments=assign, centroids=centroids, objective=objective, history=history, iterations=it)


def kmeans_objective_exact(K, assignments) -> float:
    """Per-point kernel k-means cost ``Tr(K - C C^T K C C^T) / n``.

    ``C`` is the orthonormal cluster indicator (entries ``1/sqrt(|C_i|)``);
    empty clusters contribute no column.
    """
    K = np.asarray(K, dtype=float)
    a = np.asarray(assignments)
    n = K.shape[0]
    labels = np.unique(a)
    k = int(a.max()) + 1 if a.size else 0
    if labels.size < k:
        log.info("kmeans_objective_exact: %d empty cluster(s) dropped", k - labels.size)
    C = np.zeros((n, labels.size))
    for col, lab in enumerate(labels):
        members = a == lab
        C[members, col] = 1.0 / math.sqrt(members.sum())
    return float(np.trace(K) - np.sum(C * (K @ C))) / n


def rff_features(X, m: int, seed: int) -> np.ndarray:
    """Random Fourier features for ``exp(-|x - y|^2 / 2)``, shape ``(m, n)``."""
    if m < 1:
        raise ConfigurationError(f"number of features must be >= 1, got {m}")
    X = np.asarray(X, dtype=float)
    d = X.shape[0]
    rows_w, rows_b = [], []
    for c in range((m + _RFF_CHUNK - 1) // _RFF_CHUNK):
        rng = np.random.Generator(
            np.random.Philox(key=np.array([seed & ((1 << 64) - 1), (1 << 63) | c], dtype=np.uint64))
        )
        rows_w.append(rng.standard_normal((_RFF_CHUNK, d)))
        rows_b.append(rng.uniform(0.0, 2.0 * np.pi, _RFF_CHUNK))
    W = np.concatenate(rows_w)[:m]
    b = np.concatenate(rows_b)[:m]
    return math.sqrt(2.0 / m) * np.cos(W @ X + b[:, None])


def taylor_truncation(derivs: Sequence[float], q: int, t):
    """Degree-``q`` Taylor polynomial ``sum_{j<=q} kappa^(j)(0) t^j / j!``."""
    if q + 1 > len(derivs):
        raise ConfigurationError(f"degree {q} needs {q + 1} derivatives, got {len(derivs)}")
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for j in range(q, -1, -1):
        out = out * t + derivs[j] / math.factorial(j)
    return out if out.ndim else float(out)


def ntk_taylor_derivatives(n: int) -> np.ndarray:
    """Derivatives at 0 of the two-layer ReLU NTK function, computed in high precision."""
    import mpmath as mp

    with mp.workdps(50):

        def a0(u):
            return 1 - mp.acos(u) / mp.pi

        def a1(u):
            return (mp.sqrt(1 - u * u) + u * (mp.pi - mp.acos(u))) / mp.pi

        def f(x):
            a = a1(x)
            return a1(a) + (a + x * a0(x)) * a0(a)

        coeffs = mp.taylor(f, 0, n - 1)
        return np.array([float(c * mp.factorial(j)) for j, c in enumerate(coeffs)])


STUDY_KERNELS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], Callable[[int], np.ndarray]]] = {
    "exp2": (lambda t: np.exp(2.0 * np.asarray(t, dtype=float)), lambda n: exponential_derivatives(n, 2.0)),
    "ntk": (ntk_function, ntk_taylor_derivatives),
}


def approx_error_study(
    kernel: str, dims: Sequence[int], degrees: Sequence[int], grid_points: int = 2001
) -> list[tuple[str, str, int, float]]:
    """Max errors on ``[-1, 1]`` of Taylor and Gegenbauer partial sums.

    Returns rows ``(method, d, degree, max_error)`` with ``d = "inf"`` for Taylor.
    """
    if kernel not in STUDY_KERNELS:
        raise ConfigurationError(f"unknown study kernel {kernel!r}; choose from {sorted(STUDY_KERNELS)}")
    kappa, derivs_fn = STUDY_KERNELS[kernel]
    degrees = list(degrees)
    qmax = max(degrees)
    grid = np.linspace(-1.0, 1.0, grid_points)
    truth = kappa(grid)
    rows = []
    derivs = derivs_fn(qmax + 1)
    for q in degrees:
        rows.append(("taylor", "inf", q, float(np.max(np.abs(truth - taylor_truncation(derivs, q, grid))))))
    for d in dims:
        c = gegenbauer_coefficients(kappa, d, qmax)
        partial = np.cumsum(c[:, None] * gegenbauer_table(qmax, d, grid), axis=0)
        for q in degrees:
            rows.append(("gegenbauer", str(d), q, float(np.max(np.abs(truth - partial[q])))))
    return rows
