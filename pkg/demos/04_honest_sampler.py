"""The honest sampler: full quota above its width threshold, nothing below.

The tower route sums same-coset pairs into sparser and sparser lattices,
correcting coset weights with the square-root sampler as it goes.  Two
smoothness tests guard the correction; when they cannot certify the input,
the sampler returns an empty batch rather than a mis-distributed one.
"""

import math

import numpy as np

from latgauss import Basis, smooth_dgs, smoothing_param

z2 = Basis([[1, 0], [0, 1]])
sigma = math.sqrt(2) * smoothing_param(z2, 0.5).eta
print(f"honesty threshold sqrt(2) * eta_(1/2)(Z^2) = {sigma:.4f}\n")

for s in (3.0, 1.0, 0.8, 0.3):
    rng = np.random.default_rng(11)
    hb = smooth_dgs(z2, s, 12, 20.0, rng, "desk")
    side = "above" if s > sigma else "below"
    print(f"s = {s:<4} ({side} threshold): produced {hb.produced_m}/{hb.requested_m}")
    if hb.produced_m:
        norms = np.sort(hb.batch.norms_sq_float()).astype(int)
        print(f"         squared norms: {norms.tolist()}")
