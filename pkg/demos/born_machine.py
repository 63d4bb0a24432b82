"""
A tensor-train Born machine
============================

Squared TT entries define an unnormalized distribution.  The normalizer and
every marginal come from small transfer contractions along the train.
"""

import numpy as np

from tnkit import BornMachine, born_conditional, born_marginal, random_tt, tt_reconstruct

t = random_tt((2, 3, 2, 4), (3, 3, 2), seed=0)
b = BornMachine(t)
print("normalizer:", b.zeta)

P = tt_reconstruct(t) ** 2 / b.zeta
print("dense total:", P.sum())

m = born_marginal(b, [1, 4])
print("marginal over modes 1 and 4:\n", m.t)
print("matches dense:", np.allclose(m.t, P.sum(axis=(1, 2))))

c = born_conditional(b, {2: 1})
print("P(modes 1,3,4 | mode 2 = 1) sums to", c.t.sum())
