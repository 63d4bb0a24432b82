"""
Tensor trains: compress, round, fit
====================================

A tensor with low TT ranks is recovered exactly by TT-SVD; sums of TTs grow
ranks additively and rounding brings them back down.
"""

import numpy as np

from tnkit import random_tt, tt_add, tt_als_fit, tt_norm, tt_reconstruct, tt_round, tt_svd

# A 4x4x4x4 tensor with planted ranks (2, 3, 2).
T = tt_reconstruct(random_tt((4, 4, 4, 4), (2, 3, 2), seed=1))
t = tt_svd(T)
print("recovered ranks:", t.ranks)
print("reconstruction error:", np.linalg.norm(tt_reconstruct(t) - T) / np.linalg.norm(T))

# Adding a TT to itself doubles the stored ranks; rounding finds the minimal ones again.
s = tt_add(t, t)
print("ranks of t + t:", s.ranks, "after rounding:", tt_round(s).ranks)

# Truncation trades ranks for accuracy; tol bounds the relative error.
noisy = T + 1e-3 * np.random.default_rng(0).standard_normal(T.shape)
for tol in (1e-1, 1e-2, 1e-4):
    c = tt_svd(noisy, tol=tol)
    err = np.linalg.norm(tt_reconstruct(c) - noisy) / np.linalg.norm(noisy)
    print(f"tol={tol:g}: ranks {c.ranks}, error {err:.2e}")

# ALS at fixed ranks converges to the same tensor from a random start.
res = tt_als_fit(T, (2, 3, 2), sweeps=3, seed=0)
print("ALS relative error:", res.rel_error, "norm:", tt_norm(res.tt), "vs", np.linalg.norm(T))
