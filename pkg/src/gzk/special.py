"""Gegenbauer polynomials, spherical-harmonic counts, sphere geometry and quadrature.

Gegenbauer polynomials are normalised so that ``P_d^l(1) = 1``; in dimension
``d`` they are orthogonal on ``[-1, 1]`` under the weight ``(1 - t^2)^((d-3)/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre

from gzk.errors import ConfigurationError, DomainError, NumericOverflowError, UnsupportedError

__all__ = [
    "alpha",
    "alphas",
    "GegenbauerBasis",
    "gegenbauer_table",
    "eval_explicit",
    "sphere_surface",
    "log_sphere_surface",
    "QuadratureRule",
    "quad_rule",
    "integrate_weighted",
    "log_gamma",
    "T_TOL",
]

T_TOL = 1e-12
_INT64_MAX = 2**63 - 1
_EXPLICIT_MAX_DEGREE = 30
_ADAPTIVE_CAP = 4096


def alpha(l: int, d: int) -> int:
    """Dimension of the space of degree-``l`` spherical harmonics in ``d`` dimensions."""
    if l < 0 or d < 2:
        raise DomainError(f"alpha requires l >= 0 and d >= 2, got l={l}, d={d}")
    if l == 0:
        return 1
    if l == 1:
        return d
    value = math.comb(d + l - 1, l) - math.comb(d + l - 3, l - 2)
    if value > _INT64_MAX:
        raise NumericOverflowError(f"alpha(l={l}, d={d}) overflows a signed 64-bit integer")
    return value


def alphas(q: int, d: int) -> np.ndarray:
    """``alpha(l, d)`` for ``l = 0..q`` as a float array."""
    return np.array([float(alpha(l, d)) for l in range(q + 1)])


def _check_t(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("Gegenbauer argument must be finite")
    if np.any(np.abs(t) > 1.0 + T_TOL):
        raise DomainError(f"Gegenbauer argument outside [-1, 1]: max |t| = {np.max(np.abs(t))!r}")
    return np.clip(t, -1.0, 1.0)


def gegenbauer_table(q: int, d: int, t) -> np.ndarray:
    """Evaluate ``P_d^0..P_d^q`` at ``t`` by the normalised three-term recurrence.

    Returns an array of shape ``(q + 1,) + np.shape(t)``.
    """
    if q < 0 or d < 2:
        raise DomainError(f"need q >= 0 and d >= 2, got q={q}, d={d}")
    t = _check_t(t)
    out = np.empty((q + 1,) + t.shape)
    out[0] = 1.0
    if q == 0:
        return out
    out[1] = t
    for l in range(1, q):
        if d == 2:
            # Chebyshev polynomials of the first kind.
            out[l + 1] = 2.0 * t * out[l] - out[l - 1]
        else:
            out[l + 1] = ((2 * l + d - 2) * t * out[l] - l * out[l - 1]) / (l + d - 2)
    return out


@dataclass(frozen=True)
class GegenbauerBasis:
    """Evaluation context for ``P_d^l``, ``l = 0..q``."""

    d: int
    q: int

    def __post_init__(self):
        if self.d < 2 or self.q < 0:
            raise DomainError(f"GegenbauerBasis needs d >= 2 and q >= 0, got d={self.d}, q={self.q}")

    def eval_all(self, t) -> np.ndarray:
        """Values ``[P_d^0(t), ..., P_d^q(t)]``; vectorised over array ``t`` along trailing axes."""
        return gegenbauer_table(self.q, self.d, t)

    def alphas(self) -> np.ndarray:
        return alphas(self.q, self.d)


def eval_explicit(l: int, d: int, t: float) -> float:
    """Explicit finite-sum form of ``P_d^l``; slow and only accurate for small ``l``.

    Kept as an independent check on :func:`gegenbauer_table`.
    """
    if l > _EXPLICIT_MAX_DEGREE:
        raise UnsupportedError(f"explicit Gegenbauer sum supports l <= {_EXPLICIT_MAX_DEGREE}, got {l}")
    if l < 0 or d < 2:
        raise DomainError(f"need l >= 0 and d >= 2, got l={l}, d={d}")
    t = float(_check_t(t))
    c = 1.0
    total = 0.0
    one_minus = 1.0 - t * t
    for j in range(l // 2 + 1):
        total += c * t ** (l - 2 * j) * one_minus**j
        c *= -((l - 2 * j) * (l - 2 * j - 1)) / (2.0 * (j + 1) * (d - 1 + 2 * j))
    return total


def log_gamma(x):
    """``ln Gamma(x)`` for ``x > 0``; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("log_gamma requires x > 0")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


def log_sphere_surface(d: int) -> float:
    if d < 1:
        raise DomainError(f"sphere dimension must be >= 1, got {d}")
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - log_gamma(0.5 * d)


def sphere_surface(d: int) -> float:
    """Surface area ``|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)`` of the unit sphere in R^d."""
    return math.exp(log_sphere_surface(d))


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights for integrals against ``(1 - t^2)^((d-3)/2)`` on ``[-1, 1]``."""

    d: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, values) -> np.ndarray:
        """Contract ``values`` (last axis = nodes) against the weights."""
        return np.asarray(values) @ self.weights


def weight_integral(d: int) -> float:
    """``int_{-1}^{1} (1 - t^2)^((d-3)/2) dt``."""
    return math.exp(log_sphere_surface(d) - log_sphere_surface(d - 1))


@lru_cache(maxsize=64)
def _rule_arrays(d: int, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    if d == 2:
        k = np.arange(1, n_nodes + 1)
        nodes = np.cos((2 * k - 1) * np.pi / (2 * n_nodes))[::-1].copy()
        weights = np.full(n_nodes, np.pi / n_nodes)
    elif d == 3:
        nodes, weights = roots_legendre(n_nodes)
    else:
        a = 0.5 * (d - 3)
        nodes, weights = roots_jacobi(n_nodes, a, a)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def quad_rule(d: int, n_nodes: int) -> QuadratureRule:
    """Gaussian quadrature exact for polynomials of degree ``<= 2 n_nodes - 1`` times the weight.

    Chebyshev-Gauss for ``d = 2``, Gauss-Legendre for ``d = 3`` and Gauss-Jacobi
    with parameters ``((d-3)/2, (d-3)/2)`` for ``d >= 4``.
    """
    if n_nodes < 2:
        raise ConfigurationError(f"quadrature needs at least 2 nodes, got {n_nodes}")
    if d < 2:
        raise DomainError(f"quadrature dimension must be >= 2, got {d}")
    nodes, weights = _rule_arrays(d, n_nodes)
    return QuadratureRule(d=d, nodes=nodes, weights=weights)


def integrate_weighted(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    n_start: int,
    tol: float = 1e-10,
    cap: int = _ADAPTIVE_CAP,
) -> tuple[np.ndarray, int]:
    """Integrate ``f`` (vector-valued along leading axes) against the dimension-``d`` weight.

    The node count doubles from ``n_start`` until successive rules agree to
    ``tol`` (absolute, relative to the magnitude of the result once it exceeds 1)
    or ``cap`` nodes are reached. Returns ``(integral, nodes_used)``.
    """
    n = max(2, min(n_start, cap))
    rule = quad_rule(d, n)
    prev = np.asarray(rule.integrate(f(rule.nodes)), dtype=float)
    while n < cap:
        n = min(2 * n, cap)
        rule = quad_rule(d, n)
        cur = np.asarray(rule.integrate(f(rule.nodes)), dtype=float)
        scale = max(1.0, float(np.max(np.abs(cur), initial=0.0)))
        if np.max(np.abs(cur - prev), initial=0.0) <= tol * scale:
            return cur, n
        prev = cur
    return prev, n
