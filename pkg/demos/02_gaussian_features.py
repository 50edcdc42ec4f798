"""
Random features for the Gaussian kernel
=======================================

A truncated generalized zonal kernel reproduces ``exp(-|x-y|^2 / 2)`` on a
ball. Sampling directions on the sphere turns it into an explicit feature
matrix whose Gram matrix approximates the kernel.
"""

import numpy as np

from gzk.datasets import ball_uniform
from gzk.features import build_features, leverage_bound, theoretical_m_truncated
from gzk.kernels import gaussian_model, gram_exact, gram_truncated, select_truncation
from gzk.spectral import achieved_epsilon, statistical_dimension

n, d, lam = 200, 3, 0.01
X = ball_uniform(n, d, seed=0).X

# Choose the degree cutoff q and radial order s for radius 1.
q, s = select_truncation("gaussian", 1.0, d, n, 0.1, lam)
model = gaussian_model(d, q, s)
print(f"truncation: q={q}, s={s}")

K = gram_exact(model, X, X)
Kq = gram_truncated(model, X, X)
print(f"max |K - K_qs| = {np.max(np.abs(K - Kq)):.2e}")

# The feature Gram matrix concentrates around K_qs as m grows.
for m in (128, 512, 2048):
    Z = build_features(X, model, m, seed=1)
    print(f"m={m:5d}  rows={Z.data.shape[0]:6d}  achieved eps={achieved_epsilon(K, Z.data, lam):.3f}")

# The worst-case guarantee asks for many more samples than needed in practice.
s_lam = statistical_dimension(K, lam)
print(f"\nstatistical dimension {s_lam:.1f}, leverage bound {leverage_bound(model, X, lam):.1f}")
print("feature count from the guarantee at eps=0.5:", theoretical_m_truncated(0.5, 0.1, s_lam, q, d))
