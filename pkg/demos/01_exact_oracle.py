"""Tour of the exact desk-scale oracle.

Everything the statistical suites trust is computed here by explicit
enumeration with certified truncation: Gaussian mass sums, exact sampling,
shortest vectors, closest vectors, and the smoothing parameter.
"""

import math

import numpy as np

from latgauss import (Basis, coset_weights, cvp_exact, enumerate_ball,
                      exact_dgs_sample, lambda1, rho_sum, smoothing_param)

z2 = Basis([[1, 0], [0, 1]])
skew = Basis([[2, 0], [1, 2]])

print("== Gaussian mass sums")
rs = rho_sum(Basis([[1]]), None, 1.0)
print(f"rho_1(Z) = {rs.value:.12f}   (truncated at radius {rs.truncation_radius:.2f},"
      f" tail < {rs.tail_bound:.1e})")
print(f"product structure: rho_1(Z^2) = {rho_sum(z2, None, 1.0).value:.12f}"
      f" vs square {rs.value**2:.12f}")

print("\n== enumeration")
pts = enumerate_ball(z2, None, 1.5)
print(f"|Z^2 ball radius 1.5| = {len(pts)}:", [p.coeffs for p in pts])

print("\n== exact sampling")
rng = np.random.default_rng(1)
batch = exact_dgs_sample(z2, 1.0, 10 ** 5, rng)
p0 = (batch.coeffs == 0).all(axis=1).mean()
print(f"Pr[origin] empirical {p0:.4f} vs exact {1/rho_sum(z2, None, 1.0).value:.4f}")

print("\n== shortest and closest vectors")
norm, wit = lambda1(skew)
print(f"lambda_1 of {skew.rows} = {norm} with witness {wit.ambient}")
closest = cvp_exact(z2, (0.4, 0.4))
print(f"closest point of Z^2 to (0.4, 0.4): {closest.ambient}")

print("\n== smoothing parameter")
est = smoothing_param(z2, 0.5)
print(f"eta_0.5(Z^2) = {est.eta:.6f} bracket {est.bracket}")
print(f"scaling law: eta_0.5(3 Z^2) / 3 = {smoothing_param(z2.scale(3), 0.5).eta/3:.6f}")

print("\n== coset weights of Z / 2Z")
w, _ = coset_weights(Basis([[1]]), Basis([[2]]), math.sqrt(2))
print(f"at s = sqrt(2): even {w[0]:.6f}, odd {w[1]:.6f} (even weight is exactly 1/sqrt(2))")
w, _ = coset_weights(Basis([[1]]), Basis([[2]]), 100.0)
print(f"at s = 100: {w.round(6)} (smoothing limit)")
