"""Dataset ingestion and synthetic generators.

Points are stored as columns: ``X`` has shape ``(d, n)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gzk.errors import ConfigurationError, IngestionError

__all__ = [
    "Dataset",
    "ingest_csv",
    "preprocess",
    "SYNTHETIC",
    "synthetic",
    "blobs",
    "sphere_uniform",
    "ball_uniform",
    "smooth_regression",
    "smooth_target",
]

NORMALIZATIONS = ("none", "unit", "standardize", "scale")
LAYOUTS = ("columns", "rows")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray | None = None
    source: str = ""
    preprocessing: str = "none"
    labels: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def max_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.X, axis=0), initial=0.0))


def preprocess(X: np.ndarray, how: str = "none", gamma: float = 1.0) -> np.ndarray:
    """Apply ``none``, ``unit`` (per-point l2), ``standardize`` (per-feature) or ``scale`` (multiply by ``gamma``)."""
    X = np.array(X, dtype=float)
    if how == "none":
        return X
    if how == "unit":
        norms = np.linalg.norm(X, axis=0)
        if np.any(norms == 0):
            raise IngestionError(f"cannot unit-normalise zero point at column {int(np.argmin(norms))}")
        return X / norms
    if how == "standardize":
        mean = X.mean(axis=1, keepdims=True)
        std = X.std(axis=1, keepdims=True)
        # Constant features are centred but left unscaled.
        std[std == 0] = 1.0
        return (X - mean) / std
    if how == "scale":
        if not (math.isfinite(gamma) and gamma > 0):
            raise ConfigurationError(f"scale factor must be positive and finite, got {gamma}")
        return gamma * X
    raise ConfigurationError(f"unknown normalisation {how!r}; choose from {', '.join(NORMALIZATIONS)}")


def ingest_csv(
    path,
    label_col: int | None = None,
    header: bool = False,
    normalize: str = "none",
    gamma: float = 1.0,
    layout: str = "columns",
) -> Dataset:
    """Read a numeric CSV into a dataset.

    With ``layout="columns"`` each CSV column is a point and each line a
    coordinate, matching the feature-matrix CSV export; ``layout="rows"``
    reads the usual one point per line. ``label_col`` is the 0-based
    coordinate index holding the labels (a line in column layout, a field in
    row layout). Ragged rows, non-numeric cells and non-finite values raise
    :class:`IngestionError` naming the 1-based line.
    """
    if layout not in LAYOUTS:
        raise ConfigurationError(f"unknown layout {layout!r}; choose from {', '.join(LAYOUTS)}")
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    rows: list[list[float]] = []
    width = None
    with handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise IngestionError(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
            values = []
            for col, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    raise IngestionError(f"{path}:{lineno}: non-numeric value {cell.strip()!r} in column {col}") from None
                if not math.isfinite(v):
                    raise IngestionError(f"{path}:{lineno}: non-finite value in column {col}")
                values.append(v)
            rows.append(values)
    if not rows:
        raise IngestionError(f"{path}: no data rows")
    data = np.array(rows)
    if layout == "rows":
        data = data.T
    y = None
    if label_col is not None:
        if not 0 <= label_col < data.shape[0]:
            raise IngestionError(f"{path}: label index {label_col} out of range for {data.shape[0]} coordinates")
        y = data[label_col].copy()
        data = np.delete(data, label_col, axis=0)
    if data.shape[0] == 0:
        raise IngestionError(f"{path}: no coordinates left after removing the label")
    X = preprocess(data, normalize, gamma)
    return Dataset(X=X, y=y, source=str(path), preprocessing=normalize)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed & ((1 << 64) - 1), stream], dtype=np.uint64)))


def sphere_uniform(n: int, d: int, seed: int, radius: float = 1.0) -> Dataset:
    """Points uniform on the sphere of the given radius."""
    g = _rng(seed, 0x5351).standard_normal((d, n))
    X = radius * g / np.linalg.norm(g, axis=0)
    return Dataset(X=X, source="synthetic:sphere-uniform")


def ball_uniform(n: int, d: int, seed: int, radius: float = 1.0) -> Dataset:
    """Points uniform in the ball of the given radius."""
    rng = _rng(seed, 0x4241)
    g = rng.standard_normal((d, n))
    u = rng.random(n) ** (1.0 / d)
    X = radius * u * g / np.linalg.norm(g, axis=0)
    return Dataset(X=X, source="synthetic:ball-uniform")


def blobs(
    n: int, d: int, seed: int, k: int = 2, separation: float = 1.0, spread: float = 0.05
) -> Dataset:
    """``k`` isotropic Gaussian blobs with centres on a circle of radius ``separation / 2``.

    Ground-truth cluster ids are returned in ``labels`` (and ``y``).
    """
    if k < 1 or d < 2:
        raise ConfigurationError(f"blobs need k >= 1 and d >= 2, got k={k}, d={d}")
    rng = _rng(seed, 0x424C)
    angles = 2.0 * np.pi * np.arange(k) / k
    centres = np.zeros((d, k))
    centres[0] = 0.5 * separation * np.cos(angles)
    centres[1] = 0.5 * separation * np.sin(angles)
    labels = np.arange(n) % k
    X = centres[:, labels] + spread * rng.standard_normal((d, n))
    return Dataset(X=X, y=labels.astype(float), source="synthetic:blobs", labels=labels)


def smooth_target(X: np.ndarray) -> np.ndarray:
    """Noise-free regression target used by :func:`smooth_regression`."""
    X = np.asarray(X, dtype=float)
    return np.sin(2.0 * X[0]) + 0.5 * np.cos(3.0 * X[-1]) + 0.25 * np.sum(X * X, axis=0)


def smooth_regression(n: int, d: int, seed: int, noise: float = 0.1, radius: float = 1.0) -> Dataset:
    """Ball-uniform inputs with a smooth target plus Gaussian noise."""
    X = ball_uniform(n, d, seed, radius).X
    eps = _rng(seed, 0x5247).standard_normal(n)
    return Dataset(X=X, y=smooth_target(X) + noise * eps, source="synthetic:smooth-regression")


SYNTHETIC = {
    "blobs": blobs,
    "sphere-uniform": sphere_uniform,
    "ball-uniform": ball_uniform,
    "smooth-regression": smooth_regression,
}


def synthetic(name: str, n: int, d: int, seed: int, **kwargs) -> Dataset:
    if name not in SYNTHETIC:
        raise ConfigurationError(f"unknown synthetic dataset {name!r}; choose from {', '.join(SYNTHETIC)}")
    if n < 1 or d < 2:
        raise ConfigurationError(f"synthetic data needs n >= 1 and d >= 2, got n={n}, d={d}")
    return SYNTHETIC[name](n, d, seed, **kwargs)
