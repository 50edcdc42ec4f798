"""Independent reference implementations used only by the tests.

Nothing here imports from ``gzk``; each oracle takes a different route to
the same quantity (closed forms, scipy special functions, mpmath quadrature,
brute-force linear algebra).
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np
from scipy import special as sp


def gegenbauer(l: int, d: int, t):
    """Normalised Gegenbauer polynomial from scipy's unnormalised families."""
    t = np.asarray(t, dtype=float)
    if d == 2:
        return sp.eval_chebyt(l, t)
    if d == 3:
        return sp.eval_legendre(l, t)
    lam = (d - 2) / 2.0
    return sp.eval_gegenbauer(l, lam, t) / sp.eval_gegenbauer(l, lam, 1.0)


def harmonic_dim(l: int, d: int) -> int:
    """Spherical-harmonic dimension via ``(2l + d - 2) / l * C(l + d - 3, l - 1)``."""
    if l == 0:
        return 1
    return (2 * l + d - 2) * math.comb(l + d - 3, l - 1) // l


def sphere_area(d: int) -> float:
    return float(2 * mp.pi ** (mp.mpf(d) / 2) / mp.gamma(mp.mpf(d) / 2))


def norm_const(l: int, d: int) -> float:
    """``int P_l^2 (1 - t^2)^((d-3)/2) dt = |S^{d-1}| / (alpha |S^{d-2}|)``."""
    return sphere_area(d) / (harmonic_dim(l, d) * sphere_area(d - 1))


def gegenbauer_coeff(kappa, l: int, d: int, dps: int = 30) -> float:
    """Gegenbauer coefficient by adaptive mpmath quadrature on the angle."""
    with mp.workdps(dps):
        lam = mp.mpf(d - 2) / 2

        def P(t):
            if d == 2:
                return mp.chebyt(l, t)
            return mp.gegenbauer(l, lam, t) / mp.gegenbauer(l, lam, 1)

        # Substituting t = cos(theta) removes the endpoint singularity at d = 2.
        f = lambda th: kappa(mp.cos(th)) * P(mp.cos(th)) * mp.sin(th) ** (d - 2)
        val = mp.quad(f, [0, mp.pi / 2, mp.pi])
        return float(val / norm_const(l, d))


def gaussian_gram(X, Y):
    d2 = np.sum(X * X, 0)[:, None] + np.sum(Y * Y, 0)[None, :] - 2 * X.T @ Y
    return np.exp(-0.5 * np.maximum(d2, 0))


def gaussian_gzk_series(x, y, q: int, s: int, d: int) -> float:
    """Truncated Gaussian GZK from the Taylor series of ``exp(<x, y>)``.

    Uses ``exp(-|x|^2/2 - |y|^2/2) * sum_{l<=q} sum_{i<s} (|x||y|)^{l+2i} mu_l^{l+2i} / (l+2i)! P_l(cos)``,
    with ``mu`` from direct Gegenbauer projection of monomials by mpmath.
    """
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    cos = float(np.clip(x @ y / (nx * ny), -1, 1)) if nx > 0 and ny > 0 else 0.0
    total = 0.0
    for l in range(q + 1):
        for i in range(s):
            j = l + 2 * i
            mu = monomial_projection(j, l, d)
            total += (nx * ny) ** j * mu / math.factorial(j) * float(gegenbauer(l, d, cos))
    return math.exp(-0.5 * (nx * nx + ny * ny)) * total


_MU_CACHE: dict = {}


def monomial_projection(j: int, l: int, d: int) -> float:
    """Coefficient of ``P_l`` in ``t**j`` by Gauss-Jacobi quadrature of high order."""
    key = (j, l, d)
    if key not in _MU_CACHE:
        a = (d - 3) / 2.0
        nodes, weights = sp.roots_jacobi(64, a, a)
        val = np.sum(weights * nodes**j * gegenbauer(l, d, nodes))
        _MU_CACHE[key] = float(val / norm_const(l, d))
    return _MU_CACHE[key]


def ntk(t: float) -> float:
    with mp.workdps(30):
        t = mp.mpf(t)
        a0 = lambda u: 1 - mp.acos(u) / mp.pi
        a1 = lambda u: (mp.sqrt(1 - u * u) + u * (mp.pi - mp.acos(u))) / mp.pi
        return float(a1(a1(t)) + (a1(t) + t * a0(t)) * a0(a1(t)))


def stat_dim_direct(K, lam):
    n = K.shape[0]
    return float(np.trace(np.linalg.solve(K + lam * np.eye(n), K)))


def epsilon_generalized(K, G, lam):
    """Achieved eps from the generalised eigenproblem ``(G + lam I) v = mu (K + lam I) v``."""
    from scipy.linalg import eigh

    n = K.shape[0]
    mu = eigh(G + lam * np.eye(n), K + lam * np.eye(n), eigvals_only=True)
    return max(1 / mu[0] - 1, 1 - 1 / mu[-1], 0.0)


def kmeans_cost_bruteforce(P, assign):
    """Within-cluster squared distances per point, by explicit pairwise formula."""
    total = 0.0
    for c in np.unique(assign):
        pts = P[assign == c]
        diffs = pts[:, None, :] - pts[None, :, :]
        total += np.sum(diffs**2) / (2 * len(pts))
    return total / len(P)
