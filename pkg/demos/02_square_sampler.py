"""The square sampler and the square-root coin, on plain finite alphabets.

The square sampler turns i.i.d. draws from an unknown distribution p into
draws from p^2 (pointwise squared, renormalized); the square-root coin turns
a p-coin into a sqrt(p)-coin exactly.  These two primitives are all the
distribution surgery the lattice combiners need.
"""

import numpy as np

from latgauss import ElementStream, sqrt_coin, sqrt_sample, square_sample

rng = np.random.default_rng(7)

print("== square sampler: (2/3, 1/3) -> (4/5, 1/5)")
p = np.array([2 / 3, 1 / 3])
items = (rng.random(10 ** 5) > p[0]).astype(np.int64)
res = square_sample(30.0, ElementStream(items, 2), rng)
freq = np.bincount(res.items, minlength=2) / len(res)
print(f"input freq  {np.bincount(items, minlength=2)/len(items)}")
print(f"output freq {freq} over m = {len(res)} (target 0.8, 0.2)")
print(f"p_max estimate used: {res.pmax_hat}")

print("\n== square-root coin at p = 1/4 (target 1/2)")
hits = 0
trials = 20000
for _ in range(trials):
    coins = rng.random(200) < 0.25
    hits += sqrt_coin(coins, 200, rng)
print(f"Pr[1] = {hits/trials:.4f}")

print("\n== square-root sampler: (4/5, 1/5) -> (2/3, 1/3)")
q = np.array([0.8, 0.2])
items = (rng.random(10 ** 6) > q[0]).astype(np.int64)
res = sqrt_sample(20.0, 4.0, ElementStream(items, 2), rng, "desk")
freq = np.bincount(res.items, minlength=2) / len(res)
print(f"output freq {freq} over m = {len(res)} (target 2/3, 1/3)")

print("\n== conservation: outputs never outnumber their inputs")
cin = np.bincount(items, minlength=2)
cout = np.bincount(res.items, minlength=2)
print(f"inputs {cin}, outputs {cout}")
