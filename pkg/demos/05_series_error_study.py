"""
Taylor versus Gegenbauer series
===============================

For ``kappa(t) = exp(2t)`` on [-1, 1], a Gegenbauer series of degree q is far
more accurate than a Taylor polynomial of the same degree. The gap is widest
at low dimension and closes as d grows, where the Gegenbauer basis tends to
monomials.
"""

from gzk.learning import approx_error_study

rows = approx_error_study("exp2", [2, 4, 8, 32], range(0, 16, 3))
print(f"{'method':>10} {'d':>4} {'degree':>6} {'max error':>12}")
for method, d, degree, err in rows:
    print(f"{method:>10} {d:>4} {degree:>6} {err:12.3e}")

# The same study for the two-layer NTK function, which is not analytic at
# t = -1 and therefore converges more slowly.
print()
for method, d, degree, err in approx_error_study("ntk", [3], [5, 10, 15]):
    print(f"{method:>10} {d:>4} {degree:>6} {err:12.3e}")
