"""The three problem reductions driven by sampled batches.

Shortest vector: sweep a geometric width grid and keep the shortest nonzero
sample.  Gap decision: test the covariance of dual samples against the
isotropic law.  Approximate closest vector: embed the target as an extra
basis row and harvest samples whose last coordinate hits the embedding.
"""

from fractions import Fraction

import numpy as np

from latgauss import (Basis, approx_cvp, cvp_exact, decide_gapsvp,
                      exact_provider, lambda1, optimal_svp_param, solve_svp)

rng = np.random.default_rng(5)

print("== shortest vector on a skewed rank-4 basis")
lat = Basis([[7, 1, 0, -3], [2, 9, -4, 1], [0, 3, 8, 2], [-5, 0, 1, 6]])
l1, wit = lambda1(lat)
res = solve_svp(lat, exact_provider, 1000, rng)
print(f"enumeration ground truth: lambda_1 = {l1:.4f}, witness {wit.ambient}")
print(f"sampling reduction found: norm = {res.norm:.4f}, point {res.point.ambient}")
print(f"grid target width would be {optimal_svp_param(l1, 4):.4f}")

print("\n== gap decision on Z^4")
z4 = Basis([[int(i == j) for j in range(4)] for i in range(4)])
for d in (2.0, 0.2):
    ans = decide_gapsvp(z4, d, 0.05, exact_provider, 4 ** 5 * 400, rng)
    print(f"d = {d}: answer {'yes' if ans else 'no'}"
          f"   (true lambda_1 = 1 is {'<' if 1 < d else '>='} d)")

print("\n== approximate closest vector")
lat3 = Basis([[3, 1, 0], [1, 4, -1], [0, 2, 5]])
target = (Fraction(11, 10), Fraction(-7, 5), Fraction(33, 10))
truth = cvp_exact(lat3, target)
res = approx_cvp(lat3, target, exact_provider, 1000, rng)
print(f"exact closest: {truth.ambient}")
print(f"reduction output: {res.point.ambient} at distance {res.distance:.4f}")
