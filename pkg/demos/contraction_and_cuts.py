"""
Contracting a network and bounding its matricization rank
==========================================================

A network is written as a one-line spec: each tensor lists its legs,
shared labels are contracted, and the labels after ``->`` stay open.
"""

import numpy as np

from tnkit import contract, parse_spec, rank_bound
from tnkit.network import matricization_rank

rng = np.random.default_rng(0)

# A four-node chain: T carries three parallel bonds into A.
g = parse_spec("T[d1,a,b,c] A[a,b,c,e] B[e,f] S[f,d2] -> [d1,d2]")
print(g)

dims = {"d1": 6, "a": 2, "b": 2, "c": 2, "e": 5, "f": 3, "d2": 6}
shapes = {nd.name: [dims[l] for l in nd.labels] for nd in g.nodes}
bindings = {name: rng.standard_normal(shape) for name, shape in shapes.items()}

M = contract(g, bindings)
print("contracted shape:", M.shape)

# Every node bipartition separating d1 from d2 gives an upper bound on the rank;
# the cheapest one here is the f edge of size 3.
res = rank_bound(g, ["d1"], dims)
print("cut bound:", res.bound, "row-side nodes:", sorted(res.row_nodes))
print("numerical rank:", matricization_rank(g, ["d1"], bindings))

# Hyperedges are fine too; they are lowered to copy tensors before contraction.
h = parse_spec("A[i,r] B[j,r] C[k,r] -> [i,j,k]")
A, B, C = (rng.standard_normal((3, 2)) for _ in range(3))
T = contract(h, {"A": A, "B": B, "C": C})
print("CP tensor matches einsum:", np.allclose(T, np.einsum("ir,jr,kr->ijk", A, B, C)))
