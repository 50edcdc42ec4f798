"""
Kernel ridge regression on random features
==========================================

Fitting ridge regression on the feature matrix approximates exact kernel
ridge regression at a fraction of the cost when n is large.
"""

import numpy as np

from gzk.datasets import smooth_regression
from gzk.features import build_features
from gzk.kernels import gaussian_model, gram_exact, select_truncation
from gzk.learning import exact_krr, krr_fit

d, lam = 3, 0.1
train = smooth_regression(500, d, seed=1)
test = smooth_regression(200, d, seed=2)
q, s = select_truncation("gaussian", 1.0, d, train.n, 0.1, lam)
model = gaussian_model(d, q, s)

K = gram_exact(model, train.X, train.X)
Kc = gram_exact(model, test.X, train.X)
exact = np.mean((exact_krr(K, train.y, lam, Kc) - test.y) ** 2)
print(f"exact KRR test MSE {exact:.5f}")

# Features for train and test must come from the same draw of directions.
for m in (64, 256, 1024, 2048):
    Z = build_features(np.hstack([train.X, test.X]), model, m, seed=0).data
    fit = krr_fit(Z[:, : train.n], train.y, lam)
    mse = np.mean((Z[:, train.n :].T @ fit.weights - test.y) ** 2)
    print(f"m={m:5d}  {fit.method:6s} solve  test MSE {mse:.5f}")
