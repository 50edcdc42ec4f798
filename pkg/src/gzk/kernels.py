"""Truncated generalized zonal kernels (GZK).

A GZK of order ``s`` truncated at degree ``q`` is

    k(x, y) = sum_{l<=q} <h_l(|x|), h_l(|y|)> P_d^l(<x, y> / (|x| |y|))

with radial functions ``h_l : R -> R^s``.  Three families of radial
functions are supported:

* ``"dot_product"`` -- a dot-product kernel ``kappa(<x, y>)`` given by its
  Taylor derivatives at zero (exponential, polynomial, user supplied);
* ``"gaussian"`` -- the unit-bandwidth Gaussian ``exp(-|x - y|^2 / 2)``;
* ``"zonal"`` -- a kernel ``|x|^p |y|^p kappa(cos)`` with Gegenbauer
  coefficients of ``kappa`` computed by quadrature (``p = 0`` on the sphere,
  ``p = 1`` for the two-layer ReLU NTK).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from gzk.errors import (
    ConfigurationError,
    DomainError,
    InvalidKernelError,
    NumericOverflowError,
    UnsupportedError,
)
from gzk.special import (
    alpha,
    alphas,
    gegenbauer_table,
    integrate_weighted,
    log_gamma,
    log_sphere_surface,
)

__all__ = [
    "GzkModel",
    "RadialTable",
    "gaussian_model",
    "exponential_model",
    "polynomial_model",
    "dot_product_model",
    "zonal_model",
    "ntk_model",
    "ntk_function",
    "exponential_derivatives",
    "polynomial_derivatives",
    "gegenbauer_coefficients",
    "monomial_mu",
    "radial_table",
    "kernel_truncated",
    "kernel_exact",
    "gram_truncated",
    "gram_exact",
    "select_truncation",
    "ZERO_NORM",
    "COEFF_CLAMP",
]

ZERO_NORM = 1e-12
COEFF_CLAMP = 1e-10
_LOG_PI = math.log(math.pi)
_LOG2 = math.log(2.0)

Kind = Literal["dot_product", "gaussian", "zonal"]
PairKernel = Callable[[np.ndarray, np.ndarray], np.ndarray]


def exponential_derivatives(n: int, gamma: float = 1.0) -> np.ndarray:
    """Taylor derivatives at 0 of ``exp(gamma t)``: ``gamma**j`` for ``j < n``."""
    return float(gamma) ** np.arange(n, dtype=float)


def polynomial_derivatives(n: int, degree: int) -> np.ndarray:
    """Taylor derivatives at 0 of ``(1 + t)**degree``."""
    out = np.zeros(n)
    for j in range(min(n, degree + 1)):
        out[j] = math.perm(degree, j)
    return out


def ntk_function(t) -> np.ndarray:
    """Two-layer ReLU NTK as a function of the cosine ``t`` in ``[-1, 1]``."""
    t = np.clip(np.asarray(t, dtype=float), -1.0, 1.0)

    def a0(u):
        return 1.0 - np.arccos(u) / np.pi

    def a1(u):
        return (np.sqrt(np.maximum(1.0 - u * u, 0.0)) + u * (np.pi - np.arccos(u))) / np.pi

    a1t = np.clip(a1(t), -1.0, 1.0)
    return a1(a1t) + (a1t + t * a0(t)) * a0(a1t)


def gegenbauer_coefficients(kappa: Callable[[np.ndarray], np.ndarray], d: int, q: int) -> np.ndarray:
    """Gegenbauer series coefficients ``c_0..c_q`` of ``kappa`` in dimension ``d``.

    ``c_l = alpha(l, d) |S^{d-2}| / |S^{d-1}| * int kappa(t) P_d^l(t) (1 - t^2)^((d-3)/2) dt``.
    Values in ``[-1e-10, 0)`` are treated as quadrature noise and clamped to 0.
    """
    if q < 0:
        raise ConfigurationError(f"degree cutoff must be >= 0, got {q}")

    def integrand(nodes):
        return np.asarray(kappa(nodes), dtype=float)[None, :] * gegenbauer_table(q, d, nodes)

    moments, _ = integrate_weighted(integrand, d, n_start=2 * (q + 16))
    scale = math.exp(log_sphere_surface(d - 1) - log_sphere_surface(d))
    c = alphas(q, d) * scale * moments
    if not np.all(np.isfinite(c)):
        raise NumericOverflowError("non-finite Gegenbauer coefficient")
    bad = np.flatnonzero(c < -COEFF_CLAMP)
    if bad.size:
        l = int(bad[0])
        raise InvalidKernelError(
            f"kernel is not positive definite in dimension {d}: c_{l} = {c[l]:.3e} < 0"
        )
    return np.where(c < 0.0, 0.0, c)


def monomial_mu(j: int, l: int, d: int) -> float:
    """Coefficient of ``P_d^l`` in the Gegenbauer expansion of ``t**j`` (``d >= 3``)."""
    if d < 3:
        raise UnsupportedError("monomial expansion coefficients are only provided for d >= 3")
    if not 0 <= l <= j:
        raise DomainError(f"need 0 <= l <= j, got l={l}, j={j}")
    if (j - l) % 2:
        return 0.0
    log_mu = (
        math.log(alpha(l, d))
        - l * _LOG2
        + log_gamma(0.5 * d)
        + log_gamma(j + 1)
        - 0.5 * _LOG_PI
        - log_gamma(j - l + 1)
        + log_gamma(0.5 * (j - l + 1))
        - log_gamma(0.5 * (j + l + d))
    )
    return math.exp(log_mu)


def _dot_product_log_coefficients(d: int, q: int, s: int, derivs: Optional[np.ndarray]) -> np.ndarray:
    """``log`` of the radial monomial coefficients, shape ``(q + 1, s)``.

    ``derivs=None`` means all derivatives equal 1 (exponential / Gaussian).
    Zero derivatives give ``-inf``.
    """
    l = np.arange(q + 1)[:, None].astype(float)
    i = np.arange(s)[None, :].astype(float)
    log_alpha = np.log(alphas(q, d))[:, None]
    base = (
        log_alpha
        - l * _LOG2
        + log_gamma(0.5 * d)
        - 0.5 * _LOG_PI
        - log_gamma(2 * i + 1)
        + log_gamma(i + 0.5)
        - log_gamma(i + l + 0.5 * d)
    )
    if derivs is not None:
        idx = (l + 2 * i).astype(int)
        with np.errstate(divide="ignore"):
            base = base + np.log(derivs[idx])
    return 0.5 * base


@dataclass(frozen=True)
class RadialTable:
    """Radial values ``[h_l(t)]_i`` at one norm ``t``; ``values`` has shape ``(q + 1, s)``."""

    t: float
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class GzkModel:
    """A truncated GZK. Build instances with the ``*_model`` factories.

    Attributes
    ----------
    d, q, s : int
        Ambient dimension, Gegenbauer degree cutoff and radial order.
    kind : {"dot_product", "gaussian", "zonal"}
    log_coef : ndarray, shape (q + 1, s)
        Log radial coefficients for the closed-form kinds; for ``"zonal"``
        column 0 holds ``0.5 * log(c_l)``.
    power : ndarray, shape (q + 1, s)
        Exponent of ``t`` in each radial entry.
    reference : callable or None
        Exact kernel on column-stacked point sets ``(d, n1), (d, n2) -> (n1, n2)``.
    growth : (C, beta) or None
        Derivative growth constants used by :func:`select_truncation`.
    """

    d: int
    q: int
    s: int
    kind: Kind
    log_coef: np.ndarray
    power: np.ndarray
    name: str
    params: tuple = ()
    reference: Optional[PairKernel] = field(default=None, repr=False)
    growth: Optional[tuple[float, float]] = None
    coefficients: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def sqrt_alpha(self) -> np.ndarray:
        return np.sqrt(alphas(self.q, self.d))

    def fingerprint(self) -> int:
        """64-bit hash of the model parameters (stable across processes)."""
        h = hashlib.sha256()
        h.update(f"{self.name}|{self.kind}|{self.d}|{self.q}|{self.s}|{self.params!r}".encode())
        h.update(np.ascontiguousarray(self.log_coef).tobytes())
        return int.from_bytes(h.digest()[:8], "little")

    def radial_values(self, norms) -> np.ndarray:
        """Radial tables for an array of norms, shape ``norms.shape + (q + 1, s)``."""
        t = np.asarray(norms, dtype=float)
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise DomainError("radial functions need finite nonnegative norms")
        t_ = t[..., None, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            log_t = np.log(t_)
            expo = self.log_coef + np.where(self.power == 0, 0.0, self.power * log_t)
        if self.kind == "gaussian":
            expo = expo - 0.5 * t_**2
        with np.errstate(over="raise"):
            try:
                out = np.exp(expo)
            except FloatingPointError as exc:
                raise NumericOverflowError("radial value overflows double precision") from exc
        return np.nan_to_num(out, nan=0.0)

    def __call__(self, X, Y=None) -> np.ndarray:
        """Truncated kernel matrix between columns of ``X`` and ``Y``."""
        return gram_truncated(self, X, X if Y is None else Y)


def _make_closed_form(
    d: int, q: int, s: int, kind: Kind, derivs, name, params, reference, growth
) -> GzkModel:
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if q < 0 or s < 1:
        raise ConfigurationError(f"need q >= 0 and s >= 1, got q={q}, s={s}")
    if derivs is not None:
        derivs = np.asarray(derivs, dtype=float)
        need = q + 2 * (s - 1) + 1
        if derivs.size < need:
            raise ConfigurationError(f"need {need} derivatives for q={q}, s={s}, got {derivs.size}")
        if not np.all(np.isfinite(derivs)):
            raise NumericOverflowError("non-finite derivative value")
        if np.any(derivs < 0):
            raise InvalidKernelError("dot-product kernels need nonnegative derivatives at 0")
        derivs = derivs[:need]
    log_coef = _dot_product_log_coefficients(d, q, s, derivs)
    if np.any(np.isnan(log_coef)) or np.any(log_coef == np.inf):
        raise NumericOverflowError("non-finite radial coefficient")
    power = (np.arange(q + 1)[:, None] + 2 * np.arange(s)[None, :]).astype(float)
    if derivs is not None:
        params = params + (tuple(derivs.tolist()),)
    log_coef.setflags(write=False)
    power.setflags(write=False)
    return GzkModel(d, q, s, kind, log_coef, power, name, params, reference, growth)


def _gaussian_exact(X, Y):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    sq = (X * X).sum(0)[:, None] + (Y * Y).sum(0)[None, :] - 2.0 * X.T @ Y
    return np.exp(-0.5 * np.maximum(sq, 0.0))


def gaussian_model(d: int, q: int, s: int) -> GzkModel:
    """Truncated GZK of the Gaussian kernel ``exp(-|x - y|^2 / 2)``."""
    return _make_closed_form(d, q, s, "gaussian", None, "gaussian", (), _gaussian_exact, None)


def exponential_model(d: int, q: int, s: int, gamma: float = 1.0) -> GzkModel:
    """Truncated GZK of ``exp(gamma <x, y>)``."""
    if gamma < 0:
        raise InvalidKernelError("exp(gamma t) is positive definite only for gamma >= 0")
    derivs = exponential_derivatives(q + 2 * s, gamma)

    def ref(X, Y):
        return np.exp(gamma * (np.asarray(X, float).T @ np.asarray(Y, float)))

    return _make_closed_form(
        d, q, s, "dot_product", derivs, "exponential", (float(gamma),), ref, (1.0, max(1.0, float(gamma)))
    )


def polynomial_model(d: int, q: int, s: int, degree: int) -> GzkModel:
    """Truncated GZK of ``(1 + <x, y>)**degree``."""
    derivs = polynomial_derivatives(q + 2 * s, degree)

    def ref(X, Y):
        return (1.0 + np.asarray(X, float).T @ np.asarray(Y, float)) ** degree

    return _make_closed_form(d, q, s, "dot_product", derivs, "polynomial", (int(degree),), ref, None)


def dot_product_model(
    d: int,
    q: int,
    s: int,
    derivs,
    growth: Optional[tuple[float, float]] = None,
    reference: Optional[PairKernel] = None,
    name: str = "dot_product",
) -> GzkModel:
    """Truncated GZK of a dot-product kernel given its derivatives ``kappa^(j)(0)``.

    ``derivs`` must hold at least ``q + 2 s - 1`` values.
    """
    return _make_closed_form(d, q, s, "dot_product", derivs, name, (), reference, growth)


def zonal_model(
    d: int,
    q: int,
    kappa: Callable[[np.ndarray], np.ndarray],
    p: int = 0,
    name: str = "zonal",
    with_reference: bool = True,
) -> GzkModel:
    """Truncated GZK of ``|x|^p |y|^p kappa(cos theta)`` via numeric Gegenbauer coefficients.

    ``p = 0`` treats inputs as points on the sphere; ``p = 1`` gives a
    degree-one homogeneous kernel such as the ReLU NTK.
    """
    if p not in (0, 1):
        raise UnsupportedError(f"homogeneity degree must be 0 or 1, got {p}")
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    c = gegenbauer_coefficients(kappa, d, q)
    with np.errstate(divide="ignore"):
        log_coef = (0.5 * np.log(c))[:, None]
    power = np.full((q + 1, 1), float(p))
    log_coef.setflags(write=False)
    power.setflags(write=False)
    c.setflags(write=False)

    reference = None
    if with_reference:

        def reference(X, Y):
            X = np.asarray(X, float)
            Y = np.asarray(Y, float)
            nx = np.linalg.norm(X, axis=0)
            ny = np.linalg.norm(Y, axis=0)
            cos = _cosines(X, nx, Y, ny)
            val = np.asarray(kappa(cos), dtype=float)
            if p == 1:
                val = val * nx[:, None] * ny[None, :]
            return val

    return GzkModel(d, q, 1, "zonal", log_coef, power, name, (p, tuple(c.tolist())), reference, None, c)


def ntk_model(d: int, q: int) -> GzkModel:
    """Truncated GZK of the two-layer ReLU NTK ``|x| |y| kappa_ntk(cos theta)``."""
    return zonal_model(d, q, ntk_function, p=1, name="ntk")


def radial_table(model: GzkModel, t: float) -> RadialTable:
    """Radial values of ``model`` at a single norm ``t >= 0``."""
    t = float(t)
    if not t >= 0:
        raise DomainError(f"norm must be nonnegative, got {t}")
    return RadialTable(t, model.radial_values(t))


def _cosines(X, nx, Y, ny) -> np.ndarray:
    """Pairwise cosines; zero-norm points get cosine 0."""
    zx = nx < ZERO_NORM
    zy = ny < ZERO_NORM
    sx = np.where(zx, 1.0, nx)
    sy = np.where(zy, 1.0, ny)
    cos = (X / sx).T @ (Y / sy)
    cos[zx, :] = 0.0
    cos[:, zy] = 0.0
    return np.clip(cos, -1.0, 1.0)


def _radial_for_points(model: GzkModel, X) -> tuple[np.ndarray, np.ndarray]:
    """Norms and radial tables ``(n, q + 1, s)`` for the columns of ``X``.

    Rows ``l >= 1`` are zeroed for zero-norm points.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.d:
        raise DomainError(f"expected a ({model.d}, n) array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("non-finite input")
    norms = np.linalg.norm(X, axis=0)
    H = model.radial_values(norms)
    H[norms < ZERO_NORM, 1:, :] = 0.0
    return norms, H


def gram_truncated(model: GzkModel, X, Y) -> np.ndarray:
    """Matrix of ``kernel_truncated`` between the columns of ``X`` and ``Y``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    nx, HX = _radial_for_points(model, X)
    ny, HY = _radial_for_points(model, Y)
    cos = _cosines(X, nx, Y, ny)
    out = np.zeros(cos.shape)
    p_prev = np.ones_like(cos)
    p_cur = cos
    for l in range(model.q + 1):
        if l == 0:
            p = p_prev
        elif l == 1:
            p = p_cur
        else:
            if model.d == 2:
                p_next = 2.0 * cos * p_cur - p_prev
            else:
                p_next = ((2 * (l - 1) + model.d - 2) * cos * p_cur - (l - 1) * p_prev) / (l - 1 + model.d - 2)
            p_prev, p_cur = p_cur, p_next
            p = p_cur
        out += (HX[:, l, :] @ HY[:, l, :].T) * p
    return out


def kernel_truncated(model: GzkModel, x, y) -> float:
    """Truncated GZK value ``sum_l <h_l(|x|), h_l(|y|)> P_d^l(cos theta)`` for two vectors."""
    x = np.asarray(x, dtype=float).reshape(model.d, 1)
    y = np.asarray(y, dtype=float).reshape(model.d, 1)
    return float(gram_truncated(model, x, y)[0, 0])


def kernel_exact(model: GzkModel, x, y) -> float:
    """Closed-form kernel value for models that carry a reference kernel."""
    if model.reference is None:
        raise UnsupportedError(f"model {model.name!r} has no closed-form reference kernel")
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1, 1)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite input")
    return float(model.reference(x, y)[0, 0])


def gram_exact(model: GzkModel, X, Y) -> np.ndarray:
    if model.reference is None:
        raise UnsupportedError(f"model {model.name!r} has no closed-form reference kernel")
    return np.asarray(model.reference(np.asarray(X, float), np.asarray(Y, float)), dtype=float)


def select_truncation(
    kind: Literal["gaussian", "dot_product"],
    r: float,
    d: int,
    n: int,
    eps: float,
    lam: float,
    C: float = 1.0,
    beta: float = 1.0,
) -> tuple[int, int]:
    """Degree cutoff ``q`` and radial order ``s`` guaranteeing a pointwise
    truncation error of at most ``eps * lam / (10 n)`` on the radius-``r`` ball.

    ``C`` and ``beta`` are the derivative growth constants
    ``kappa^(l)(0) <= C beta^l`` of a dot-product kernel (ignored for the
    Gaussian). Logarithms are natural.
    """
    if not eps > 0 or not lam > 0:
        raise ConfigurationError(f"eps and lambda must be positive, got eps={eps}, lambda={lam}")
    if not r > 0 or n < 1:
        raise ConfigurationError(f"need r > 0 and n >= 1, got r={r}, n={n}")
    if kind == "gaussian":
        L = math.log(n / (eps * lam))
        r2 = r * r
        q = max(3.7 * r2, 0.5 * d * math.log(2.8 * (r2 + L + d) / d) + L)
        s = max(0.5 * d, 3.7 * r2, 0.5 * L)
    elif kind == "dot_product":
        if beta < 1 or C < 0:
            raise ConfigurationError(f"growth constants need C >= 0, beta >= 1, got C={C}, beta={beta}")
        L = math.log(C * n / (eps * lam)) if C > 0 else -math.inf
        rb = r * r * beta
        q = max(d, 3.7 * rb, rb + 0.5 * d * math.log(3 * rb / d) + L)
        s = max(0.5 * d, 3.7 * rb, 0.25 * rb + 0.5 * L)
    else:
        raise ConfigurationError(f"unknown truncation kind {kind!r}")
    return max(0, math.ceil(q)), max(1, math.ceil(s))
