"""Random features for truncated GZKs.

For sphere samples ``w_1..w_m`` the feature matrix is

    Z = m^{-1/2} [Phi_{w_1}, ..., Phi_{w_m}]^T        shape (m * s, n)

with ``Phi_w[j] = sum_l sqrt(alpha_l) h_l(|x_j|) P_d^l(<x_j, w> / |x_j|)``.
``E[Z^T Z]`` equals the truncated kernel matrix.

Sphere samples come from counter-based Philox streams: sample ``j`` is drawn
from the stream keyed ``(seed, j // SAMPLE_CHUNK)``, so any row block of ``Z``
depends only on ``(seed, j, model, X)`` and not on how work is split between
threads.
"""

from __future__ import annotations

import io
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from gzk.errors import ConfigurationError, DomainError, IngestionError, SolverError
from gzk.kernels import ZERO_NORM, GzkModel
from gzk.special import alphas

__all__ = [
    "SAMPLE_CHUNK",
    "FeatureMatrix",
    "worker_count",
    "sample_sphere",
    "feature_block",
    "build_features",
    "leverage_bound",
    "leverage_exact",
    "leverage_scores",
    "theoretical_m",
    "theoretical_m_truncated",
    "load_features",
]

SAMPLE_CHUNK = 1024
_BATCH = 256
_MAGIC = b"GZKF"
_VERSION = 1
_HEADER = struct.Struct("<4sIQIQIQQ")  # magic, version, m, s, n, d, seed, fingerprint
_SEED_MASK = (1 << 64) - 1


def worker_count() -> int:
    """Worker threads for feature generation: ``GZK_THREADS`` or the number of logical cores."""
    env = os.environ.get("GZK_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigurationError(f"GZK_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ConfigurationError(f"GZK_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def _chunk_normals(seed: int, chunk: int, d: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=np.array([seed & _SEED_MASK, chunk], dtype=np.uint64)))
    g = rng.standard_normal((SAMPLE_CHUNK, d))
    norms = np.linalg.norm(g, axis=1)
    # Practically unreachable; redraws continue the same stream so the result stays a function of (seed, chunk).
    while np.any(norms == 0.0):
        bad = norms == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def sample_sphere(d: int, m: int, seed: int, start: int = 0) -> np.ndarray:
    """Uniform samples ``start..start+m-1`` on ``S^{d-1}``, shape ``(m, d)``."""
    if d < 2:
        raise ConfigurationError(f"sphere dimension must be >= 2, got {d}")
    if m < 1:
        raise ConfigurationError(f"number of samples must be >= 1, got {m}")
    if start < 0:
        raise ConfigurationError("start index must be nonnegative")
    stop = start + m
    first, last = start // SAMPLE_CHUNK, (stop - 1) // SAMPLE_CHUNK
    parts = [_chunk_normals(seed, c, d) for c in range(first, last + 1)]
    W = np.concatenate(parts) if len(parts) > 1 else parts[0]
    offset = first * SAMPLE_CHUNK
    return W[start - offset : stop - offset]


@dataclass
class _Prepared:
    """Per-dataset data shared by all feature blocks."""

    unit: np.ndarray  # (d, n) unit columns, zero for zero-norm points
    weighted: np.ndarray  # (q + 1, s, n): sqrt(alpha_l) * h_l(|x_j|)


def _prepare(model: GzkModel, X) -> _Prepared:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != model.d:
        raise IngestionError(f"expected a ({model.d}, n) dataset, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise IngestionError("dataset contains non-finite entries")
    norms = np.linalg.norm(X, axis=0)
    zero = norms < ZERO_NORM
    unit = np.where(zero, 0.0, X / np.where(zero, 1.0, norms))
    # One radial table per distinct norm.
    uniq, inverse = np.unique(norms, return_inverse=True)
    H = model.radial_values(uniq)[inverse]  # (n, q + 1, s)
    H[zero, 1:, :] = 0.0
    weighted = np.sqrt(alphas(model.q, model.d))[:, None, None] * np.transpose(H, (1, 2, 0))
    return _Prepared(unit, np.ascontiguousarray(weighted))


def _blocks(W: np.ndarray, prep: _Prepared, d: int, q: int) -> np.ndarray:
    """Unscaled feature blocks for sample rows ``W`` (b, d) -> (b, s, n)."""
    u = W[:, 0, None] * prep.unit[0][None, :]
    for k in range(1, W.shape[1]):
        u = u + W[:, k, None] * prep.unit[k][None, :]
    np.clip(u, -1.0, 1.0, out=u)
    H = prep.weighted
    out = np.repeat(H[0][None, :, :], W.shape[0], axis=0)
    if q == 0:
        return out
    p_prev = np.ones_like(u)
    p_cur = u
    out += p_cur[:, None, :] * H[1][None, :, :]
    for l in range(1, q):
        if d == 2:
            p_next = 2.0 * u * p_cur - p_prev
        else:
            p_next = ((2 * l + d - 2) * u * p_cur - l * p_prev) / (l + d - 2)
        p_prev, p_cur = p_cur, p_next
        out += p_cur[:, None, :] * H[l + 1][None, :, :]
    return out


def feature_block(w, X, model: GzkModel) -> np.ndarray:
    """``Phi_w``: the ``(n, s)`` matrix whose row ``j`` is ``phi_{x_j}(w)``."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != model.d:
        raise DomainError(f"sample must have length {model.d}")
    if abs(np.linalg.norm(w) - 1.0) > 1e-9:
        raise DomainError("sample direction must be a unit vector")
    prep = _prepare(model, X)
    return _blocks(w[None, :], prep, model.d, model.q)[0].T


@dataclass
class FeatureMatrix:
    """Random feature matrix ``Z`` of shape ``(m * s, n)`` with its provenance."""

    data: np.ndarray
    m: int
    s: int
    seed: int
    fingerprint: int
    d: int

    @property
    def n(self) -> int:
        return self.data.shape[1]

    def gram(self) -> np.ndarray:
        """Approximate kernel matrix ``Z^T Z``."""
        return self.data.T @ self.data

    def block(self, j: int) -> np.ndarray:
        """Rows belonging to sample ``j`` (already scaled by ``1/sqrt(m)``)."""
        return self.data[j * self.s : (j + 1) * self.s]

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            _MAGIC, _VERSION, self.m, self.s, self.n, self.d, self.seed & _SEED_MASK, self.fingerprint
        )
        return header + np.ascontiguousarray(self.data, dtype="<f8").tobytes()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    def to_csv(self, path) -> None:
        """One feature vector per column; header row holds point indices."""
        buf = io.StringIO()
        buf.write(",".join(str(j) for j in range(self.n)) + "\n")
        for row in self.data:
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        Path(path).write_text(buf.getvalue())

    @classmethod
    def from_bytes(cls, raw: bytes) -> "FeatureMatrix":
        if len(raw) < _HEADER.size:
            raise IngestionError("feature file shorter than its header")
        magic, version, m, s, n, d, seed, fp = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise IngestionError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        if version != _VERSION:
            raise IngestionError(f"unsupported feature file version {version}")
        body = raw[_HEADER.size :]
        if len(body) != 8 * m * s * n:
            raise IngestionError(f"feature payload has {len(body)} bytes, expected {8 * m * s * n}")
        data = np.frombuffer(body, dtype="<f8").reshape(m * s, n).astype(float)
        return cls(data=data, m=m, s=s, seed=seed, fingerprint=fp, d=d)


def load_features(path) -> FeatureMatrix:
    return FeatureMatrix.from_bytes(Path(path).read_bytes())


def build_features(X, model: GzkModel, m: int, seed: int, workers: int | None = None) -> FeatureMatrix:
    """Random feature matrix for the columns of ``X`` (shape ``(d, n)``).

    Output is bit-identical for any ``workers`` value.
    """
    if m < 1:
        raise ConfigurationError(f"number of features m must be >= 1, got {m}")
    prep = _prepare(model, X)
    n = prep.unit.shape[1]
    s = model.s
    out = np.empty((m, s, n))
    W = sample_sphere(model.d, m, seed)
    starts = list(range(0, m, _BATCH))

    def work(a: int) -> None:
        b = min(a + _BATCH, m)
        out[a:b] = _blocks(W[a:b], prep, model.d, model.q)

    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(starts) == 1:
        for a in starts:
            work(a)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    data = out.reshape(m * s, n)
    data *= 1.0 / math.sqrt(m)
    return FeatureMatrix(data=data, m=m, s=s, seed=int(seed), fingerprint=model.fingerprint(), d=model.d)


def leverage_bound(model: GzkModel, X, lam: float, s: int | None = None) -> float:
    """Uniform upper bound on the ridge leverage function of the model's feature operator.

    ``sum_l alpha_l * min(pi^2 (l+1)^2 / (6 lam) * sum_j |h_l(|x_j|)|^2, s)``
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    s = model.s if s is None else s
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=0)
    H = model.radial_values(norms)
    H[norms < ZERO_NORM, 1:, :] = 0.0
    mass = np.einsum("jls,jls->l", H, H)
    l = np.arange(model.q + 1)
    terms = np.minimum(np.pi**2 * (l + 1) ** 2 / (6.0 * lam) * mass, s)
    return float(np.sum(alphas(model.q, model.d) * terms))


def leverage_exact(K, lam: float, phi) -> float:
    """Ridge leverage ``Tr(Phi_w^T (K + lam I)^{-1} Phi_w)`` for one ``(n, s)`` block."""
    return float(leverage_scores(K, lam, np.asarray(phi, dtype=float)[None])[0])


def leverage_scores(K, lam: float, blocks) -> np.ndarray:
    """Ridge leverages for a stack of blocks of shape ``(b, n, s)``."""
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    blocks = np.asarray(blocks, dtype=float)
    try:
        factor = cho_factor(K + lam * np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SolverError("K + lambda I is not numerically positive definite") from exc
    b, _, s = blocks.shape
    flat = np.transpose(blocks, (1, 0, 2)).reshape(n, b * s)
    solved = cho_solve(factor, flat)
    prod = (flat * solved).reshape(n, b, s)
    return prod.sum(axis=(0, 2))


def theoretical_m(eps: float, delta: float, s_lam: float, bound: float) -> int:
    """Sample count ``ceil(8 / (3 eps^2) * ln(16 s_lam / delta) * bound)`` of the generic guarantee."""
    if not (0 < eps and 0 < delta < 1):
        raise ConfigurationError(f"need eps > 0 and 0 < delta < 1, got eps={eps}, delta={delta}")
    if not (s_lam > 0 and bound > 0):
        raise ConfigurationError("statistical dimension and leverage bound must be positive")
    return math.ceil(8.0 / (3.0 * eps * eps) * math.log(16.0 * s_lam / delta) * bound)


def theoretical_m_truncated(eps: float, delta: float, s_lam: float, q: int, d: int) -> int:
    """Sample count ``ceil(5 q^2 / (4 eps^2) * C(q + d - 1, q) * ln(16 s_lam / delta))``
    of the dot-product and Gaussian guarantees."""
    if not (0 < eps and 0 < delta < 1 and s_lam > 0):
        raise ConfigurationError("need eps > 0, 0 < delta < 1 and s_lam > 0")
    return math.ceil(5.0 * q * q / (4.0 * eps * eps) * math.comb(q + d - 1, q) * math.log(16.0 * s_lam / delta))
