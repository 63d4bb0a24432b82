"""
Gradients by removing nodes
============================

Deleting a tensor from a scalar network leaves a network whose open legs are
the gradient.  A tensor that appears twice gives two such networks.
"""

import numpy as np

from tnkit import finite_diff_jacobian, jacobian_wrt_node, loss_gradient

rng = np.random.default_rng(0)
A, x = rng.standard_normal((4, 4)), rng.standard_normal(4)

# x^T A x: x occurs twice, so its gradient is a sum of two networks.
jn = jacobian_wrt_node("x[i] A[i,j] x[j] -> []", "x")
for s in jn.summands:
    print("summand:", s)
g = jn.contract({"A": A, "x": x})
print("matches (A + A^T) x:", np.allclose(g, (A + A.T) @ x))

# Least squares written as a weighted sum of three networks.
X, W, Y = rng.standard_normal((8, 3)), rng.standard_normal((3, 2)), rng.standard_normal((8, 2))
loss = [(1.0, "X[n,i] W[i,o] X[n,j] W[j,o] -> []"),
        (-2.0, "X[n,i] W[i,o] Y[n,o] -> []"),
        (1.0, "Y[n,o] Y[n,o] -> []")]
b = {"X": X, "W": W, "Y": Y}
grad = loss_gradient(loss, "W", b)
print("matches 2 X^T (XW - Y):", np.allclose(grad, 2 * X.T @ (X @ W - Y)))
fd = finite_diff_jacobian(loss, "W", b)
print("finite-difference gap:", np.linalg.norm(grad - fd) / np.linalg.norm(fd))
