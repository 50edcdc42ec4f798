"""Kernel matrices and spectral approximation diagnostics.

All routines are dense and meant for desk-scale problems (a few thousand points).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from gzk.errors import ConfigurationError, DomainError, SolverError

__all__ = [
    "gram",
    "sym_eig",
    "jacobi_eig",
    "clamp_psd",
    "statistical_dimension",
    "achieved_epsilon",
    "projection_cost_gap",
    "projection_test_family",
    "pcp_lambda",
    "SpectralReport",
    "spectral_report",
]

GRAM_MAX_N = 5000
EIG_MAX_N = 2000
PSD_TOL = 1e-8

BlockKernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


def gram(X, kernel: BlockKernel, block: int = 256) -> np.ndarray:
    """Kernel matrix of the columns of ``X``.

    ``kernel(A, B)`` maps column-stacked point sets ``(d, na), (d, nb)`` to an
    ``(na, nb)`` block. Only the upper triangle is evaluated and then mirrored.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if n > GRAM_MAX_N:
        raise ConfigurationError(f"dense Gram assembly limited to n <= {GRAM_MAX_N}, got {n}")
    K = np.empty((n, n))
    for a in range(0, n, block):
        b = min(a + block, n)
        rows = np.asarray(kernel(X[:, a:b], X[:, a:]), dtype=float)
        bad = ~np.isfinite(rows)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise SolverError(f"non-finite kernel value at ({a + i}, {a + j})")
        K[a:b, a:] = rows
        K[a:, a:b] = rows.T
    # Diagonal blocks were written twice; keep the upper-triangle copy.
    iu = np.triu_indices(n, 1)
    K[(iu[1], iu[0])] = K[iu]
    return K


def _check_symmetric(A: np.ndarray, rel: float = 1e-10) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {A.shape}")
    scale = max(float(np.max(np.abs(A), initial=0.0)), 1e-300)
    if np.max(np.abs(A - A.T), initial=0.0) > rel * scale:
        raise DomainError("matrix is not symmetric")
    return 0.5 * (A + A.T)


def sym_eig(A) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and orthonormal eigenvectors (columns)."""
    A = _check_symmetric(A)
    w, V = np.linalg.eigh(A)
    return w[::-1], V[:, ::-1]


def jacobi_eig(A, tol: float = 1e-11, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver; descending eigenvalues and eigenvectors.

    Sweeps until the off-diagonal Frobenius norm drops below ``tol * |A|_F``.
    Quadratic per rotation in Python, so only suitable for small matrices.
    """
    A = _check_symmetric(A).copy()
    n = A.shape[0]
    V = np.eye(n)
    target = tol * np.linalg.norm(A)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # Summed directly; |A|^2 - |diag A|^2 cancels catastrophically near convergence.
        off = math.sqrt(float(np.sum(A[offdiag] ** 2)))
        if off <= target:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = A[p, r]
                if apr == 0.0:
                    continue
                theta = (A[r, r] - A[p, p]) / (2.0 * apr)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                ap = A[:, p].copy()
                ar = A[:, r].copy()
                A[:, p] = c * ap - sn * ar
                A[:, r] = sn * ap + c * ar
                ap = A[p, :].copy()
                ar = A[r, :].copy()
                A[p, :] = c * ap - sn * ar
                A[r, :] = sn * ap + c * ar
                vp = V[:, p].copy()
                vr = V[:, r].copy()
                V[:, p] = c * vp - sn * vr
                V[:, r] = sn * vp + c * vr
    else:
        raise SolverError("Jacobi iteration did not converge")
    w = np.diag(A).copy()
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def clamp_psd(w: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Clamp eigenvalues in ``[-tol * max, 0)`` to zero; reject anything more negative."""
    w = np.asarray(w, dtype=float)
    top = max(float(np.max(w, initial=0.0)), 0.0)
    floor = -tol * top
    if np.any(w < floor) and np.min(w) < -1e-14:
        raise SolverError(f"matrix is not positive semidefinite: min eigenvalue {np.min(w):.3e}")
    return np.maximum(w, 0.0)


def statistical_dimension(K, lam: float) -> float:
    """``Tr(K (K + lam I)^{-1})`` from the clamped spectrum of ``K``."""
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    w = clamp_psd(np.linalg.eigvalsh(_check_symmetric(K)))
    return float(np.sum(w / (w + lam)))


def _whitener(K: np.ndarray, lam: float) -> np.ndarray:
    w, V = np.linalg.eigh(_check_symmetric(K))
    w = clamp_psd(w)
    shifted = w + lam
    if np.min(shifted) <= 0 or not np.all(np.isfinite(shifted)):
        raise SolverError("K + lambda I is not positive definite")
    return (V / np.sqrt(shifted)) @ V.T


def achieved_epsilon(K, Z, lam: float) -> float:
    """Smallest ``eps`` with ``(K+lam I)/(1+eps) <= Z^T Z + lam I <= (K+lam I)/(1-eps)``.

    ``Z`` is an ``(r, n)`` feature matrix (anything with ``Z^T Z`` of size n).
    Values ``>= 1`` mean the upper inequality cannot hold for any ``eps < 1``.
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n > EIG_MAX_N:
        raise ConfigurationError(f"whitened eigensolves limited to n <= {EIG_MAX_N}, got {n}")
    Z = np.asarray(Z, dtype=float)
    G = Z.T @ Z
    Wh = _whitener(K, lam)
    M = Wh @ (G + lam * np.eye(n)) @ Wh
    mu = np.linalg.eigvalsh(0.5 * (M + M.T))
    mu_min, mu_max = float(mu[0]), float(mu[-1])
    if mu_min <= 0:
        return math.inf
    return max(1.0 / mu_min - 1.0, 1.0 - 1.0 / mu_max, 0.0)


def pcp_lambda(K, r: int) -> float:
    """``(1/r) * sum_{i > r} lambda_i(K)``: the regulariser paired with rank-``r`` projections."""
    w = clamp_psd(np.linalg.eigvalsh(_check_symmetric(K)))[::-1]
    return float(np.sum(w[r:]) / r)


def projection_test_family(K, G, r: int, trials: int, seed: int) -> list[np.ndarray]:
    """Orthonormal ``(n, r)`` frames: top-``r`` eigenvectors of ``K`` and of ``G``,
    then ``trials`` Haar-random frames."""
    n = K.shape[0]
    _, VK = sym_eig(K)
    _, VG = sym_eig(G)
    frames = [VK[:, :r], VG[:, :r]]
    rng = np.random.Generator(np.random.Philox(key=np.array([seed & ((1 << 64) - 1), 0x5043], dtype=np.uint64)))
    for _ in range(trials):
        Q, R = np.linalg.qr(rng.standard_normal((n, r)))
        frames.append(Q * np.sign(np.diag(R)))
    return frames


def _residual_trace(A: np.ndarray, U: np.ndarray) -> float:
    # Tr(A - P A P) with P = U U^T and orthonormal U equals Tr(A) - Tr(U^T A U).
    return float(np.trace(A) - np.sum(U * (A @ U)))


def projection_cost_gap(K, Z, r: int, trials: int = 20, seed: int = 0) -> float:
    """Worst relative gap ``|Tr(G - PGP) - Tr(K - PKP)| / Tr(K - PKP)`` over the test family.

    ``G = Z^T Z``. Returns ``inf`` if some projection leaves no residual in ``K``.
    """
    K = _check_symmetric(K)
    n = K.shape[0]
    if not 1 <= r < n:
        raise ConfigurationError(f"rank must satisfy 1 <= r < n, got r={r}, n={n}")
    Z = np.asarray(Z, dtype=float)
    G = Z.T @ Z
    worst = 0.0
    for U in projection_test_family(K, G, r, trials, seed):
        base = _residual_trace(K, U)
        if base <= 1e-12:
            return math.inf
        worst = max(worst, abs(_residual_trace(G, U) - base) / base)
    return worst


@dataclass
class SpectralReport:
    achieved_eps: float
    stat_dim: float
    frob_err: float
    proj_cost_gap: float
    lam: float
    rank: int
    n: int
    m: int
    seed: int

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)


def spectral_report(
    K, Z, lam: float, rank: int = 10, m: int = 0, seed: int = 0, trials: int = 20
) -> SpectralReport:
    """Collect the spectral diagnostics for a ``(K, Z, lam)`` triple."""
    K = _check_symmetric(K)
    Z = np.asarray(Z, dtype=float)
    G = Z.T @ Z
    return SpectralReport(
        achieved_eps=achieved_epsilon(K, Z, lam),
        stat_dim=statistical_dimension(K, lam),
        frob_err=float(np.linalg.norm(G - K)),
        proj_cost_gap=projection_cost_gap(K, Z, rank, trials, seed),
        lam=float(lam),
        rank=int(rank),
        n=int(K.shape[0]),
        m=int(m),
        seed=int(seed),
    )
