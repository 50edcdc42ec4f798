"""
Gegenbauer polynomials and the reproducing property
===================================================

Normalized Gegenbauer polynomials ``P_d^l`` satisfy ``P_d^l(1) = 1``. At
d=2 they are Chebyshev polynomials and at d=3 Legendre polynomials.
"""

import numpy as np

from gzk.features import sample_sphere
from gzk.special import GegenbauerBasis, alpha, quad_rule

# Evaluate every degree up to 5 at once for d=3 (Legendre).
basis = GegenbauerBasis(3, 5)
t = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
print("Legendre table (rows are degrees):")
print(np.round(basis.eval_all(t), 4))

# Orthogonality under the weight (1 - t^2)^{(d-3)/2}: the weighted Gram
# matrix of the basis is diagonal with entries |S^{d-1}| / (alpha |S^{d-2}|).
rule = quad_rule(4, 16)
P = GegenbauerBasis(4, 4).eval_all(rule.nodes)
print("\nweighted Gram matrix at d=4:")
print(np.round((P * rule.weights) @ P.T, 6))

# alpha(l, d) counts spherical harmonics of degree l.
print("\nalpha(l, 3) for l=0..5:", [alpha(l, 3) for l in range(6)])

# Averaging P(<x,w>) P(<y,w>) over random directions w recovers
# P(<x,y>) / alpha. This identity is what makes the random features work.
rng = np.random.default_rng(0)
x, y = rng.standard_normal((2, 3))
x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
W = sample_sphere(3, 200_000, seed=1)
l = 2
mc = np.mean(basis.eval_all(W @ x)[l] * basis.eval_all(W @ y)[l])
exact = basis.eval_all(x @ y)[l] / alpha(l, 3)
print(f"\nMonte-Carlo {mc:.5f} vs exact {exact:.5f}")
