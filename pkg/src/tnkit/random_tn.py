"""Expectations of Gaussian tensor networks: closed forms and a Monte-Carlo harness.

Random tensors are drawn from a counter-based generator (Philox) keyed by
``(seed, node)``; sample ``s`` of a node always reads the same block of the
counter stream, so estimates do not depend on how samples are batched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dense import copy_tensor
from .linalg import sym_sqrt
from .network import TNGraph, einsum_expression, label_dims, parse_spec

CHUNK = 4096  # samples per batch; fixed so the reduction order never changes
Z_THRESHOLD = 5.0


# ---------------------------------------------------------------- generator

def _normals(seed: int, node: int, start: int, count: int, size: int) -> np.ndarray:
    """Standard normals for samples ``start .. start+count-1`` of one node, shape (count, size)."""
    if seed < 0 or node < 0:
        raise ValueError("seed and node index must be non-negative")
    pairs = (size + 1) // 2
    stride = max(1, math.ceil(2 * pairs / 4))  # Philox counter steps per sample (4 words each)
    bg = np.random.Philox(key=[seed, node], counter=[start * stride, 0, 0, 0])
    words = bg.random_raw(count * stride * 4).reshape(count, stride * 4)[:, : 2 * pairs]
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53  # in (0, 1)
    u1, u2 = u[:, 0::2], u[:, 1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty((count, 2 * pairs))
    z[:, 0::2] = r * np.cos(2.0 * np.pi * u2)
    z[:, 1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:, :size]


def gaussian_tensor(shape: Sequence[int], seed: int = 0) -> np.ndarray:
    """Tensor of i.i.d. N(0, 1) entries, fully determined by ``seed``."""
    shape = tuple(int(d) for d in shape)
    return _normals(seed, 0, 0, 1, math.prod(shape))[0].reshape(shape)


# ---------------------------------------------------------------- Monte Carlo

@dataclass
class RandomSpec:
    """A network whose tensors are either i.i.d. Gaussian (``random``: name -> shape)
    or fixed (``fixed``: name -> array).  Repeated occurrences of a random name
    share one draw."""
    graph: TNGraph
    random: dict[str, tuple[int, ...]] = field(default_factory=dict)
    fixed: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.graph, str):
            self.graph = parse_spec(self.graph)
        both = set(self.random) & set(self.fixed)
        if both:
            raise ValueError(f"tensors classified twice: {sorted(both)}")
        missing = set(self.graph.names) - set(self.random) - set(self.fixed)
        if missing:
            raise ValueError(f"tensors not classified: {sorted(missing)}")
        self.random = {k: tuple(int(d) for d in v) for k, v in self.random.items()}
        self.fixed = {k: np.asarray(v, dtype=np.float64) for k, v in self.fixed.items()}


@dataclass
class IdentityReport:
    estimate: np.ndarray
    analytic: np.ndarray | None
    stderr: np.ndarray
    max_abs_z: float
    samples: int
    seed: int


def _chan(acc, n_b, mean_b, m2_b):
    """Merge a batch's (count, mean, M2) into the running accumulator."""
    if acc is None:
        return n_b, mean_b, m2_b
    n_a, mean_a, m2_a = acc
    n = n_a + n_b
    d = mean_b - mean_a
    return n, mean_a + d * (n_b / n), m2_a + m2_b + d * d * (n_a * n_b / n)


def mc_expectation(spec: RandomSpec, samples: int, seed: int = 0) -> IdentityReport:
    """Per-entry sample mean and standard error of the contracted network."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    g = spec.graph
    rand_names = sorted(spec.random)
    node_id = {nm: k for k, nm in enumerate(rand_names)}
    shapes = {**spec.random, **{k: v.shape for k, v in spec.fixed.items()}}
    lg, subs, out = einsum_expression(g, batch=rand_names)
    dims = label_dims(lg, shapes)
    acc = None
    for start in range(0, samples, CHUNK):
        count = min(CHUNK, samples - start)
        draws = {nm: _normals(seed, node_id[nm], start, count, math.prod(spec.random[nm]))
                 .reshape((count,) + spec.random[nm]) for nm in rand_names}
        args = []
        for nd, s in zip(lg.nodes, subs):
            if nd.copy:
                t = copy_tensor(len(nd.labels), dims[nd.labels[0]])
            elif nd.name in draws:
                t = draws[nd.name]
            else:
                t = spec.fixed[nd.name]
            args += [t, s]
        if rand_names:
            vals = np.einsum(*args, out, optimize="greedy")
        else:
            vals = np.broadcast_to(np.einsum(*args, out, optimize="greedy"), (count,) + tuple(dims[l] for l in g.output))
        mean_b = vals.mean(axis=0)
        m2_b = ((vals - mean_b) ** 2).sum(axis=0)
        acc = _chan(acc, count, mean_b, m2_b)
    n, mean, m2 = acc
    stderr = np.sqrt(np.maximum(m2, 0.0) / (n - 1) / n)
    return IdentityReport(np.asarray(mean), None, np.asarray(stderr), float("nan"), samples, seed)


def max_abs_z(estimate: np.ndarray, analytic: np.ndarray, stderr: np.ndarray) -> float:
    """Largest |estimate - analytic| / stderr; zero-variance entries count as 0 if exact, inf otherwise."""
    diff = np.abs(np.asarray(estimate) - np.asarray(analytic))
    stderr = np.asarray(stderr)
    z = np.zeros(diff.shape)
    pos = stderr > 0
    z[pos] = diff[pos] / stderr[pos]
    exact = np.isclose(diff, 0.0, atol=1e-12 * max(1.0, float(np.max(np.abs(analytic), initial=0.0))))
    z[~pos & ~exact] = np.inf
    return float(np.max(z, initial=0.0))


# ---------------------------------------------------------------- catalog

def _delta_pairs(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``delta_ab delta_cd``, ``delta_ac delta_bd`` and ``delta_ad delta_bc`` for dim n."""
    I = np.eye(n)
    return (np.einsum("ab,cd->abcd", I, I), np.einsum("ac,bd->abcd", I, I),
            np.einsum("ad,bc->abcd", I, I))


def _gram_mean(m, n):
    return m * np.eye(n)


def _outer_pair(m, n):
    return np.einsum("ac,bd->abcd", np.eye(m), np.eye(n))


def _frob_mean(shape):
    return np.array(float(math.prod(shape)))


def _prod_norm(m, n, r):
    return np.array(float(m * n * r))


def _isserlis4(sigma):
    S = np.asarray(sigma, dtype=np.float64)
    return (np.einsum("ij,kl->ijkl", S, S) + np.einsum("ik,jl->ijkl", S, S)
            + np.einsum("il,jk->ijkl", S, S))


def _gram_outer2(m, n):
    ab_cd, ac_bd, ad_bc = _delta_pairs(n)
    return m * m * ab_cd + m * (ac_bd + ad_bc)


def _ab_outer2(m, n, p):
    return n * np.einsum("ac,bd->abcd", np.eye(m), np.eye(p))


def _trace_quartic(X, n):
    X = np.asarray(X, dtype=np.float64)
    G = X.T @ X
    return np.array(n * n * float(np.sum(X * X)) ** 2 + 2 * n * float(np.trace(G @ G)))


def _chain_example(m1, m2, m3, r1, r2, d1, d2, d3):
    return np.array(float(m1 * m2 * m3 * r1 * r2 * d1 * d2 * d3))


def _shape_of(*dims):
    return tuple(int(d) for d in dims)


# name -> (closed form, builder of the defining RandomSpec)
def _spec_gram_mean(m, n):
    return RandomSpec("A[i,a] A[i,b] -> [a,b]", {"A": _shape_of(m, n)})


def _spec_outer_pair(m, n):
    return RandomSpec("A[a,b] A[c,d] -> [a,b,c,d]", {"A": _shape_of(m, n)})


def _spec_frob_mean(shape):
    labels = ",".join(f"i{k}" for k in range(len(shape)))
    return RandomSpec(f"T[{labels}] T[{labels}] -> []", {"T": _shape_of(*shape)})


def _spec_prod_norm(m, n, r):
    return RandomSpec("A[i,j] B[j,k] A[i,l] B[l,k] -> []", {"A": _shape_of(m, n), "B": _shape_of(n, r)})


def _spec_isserlis4(sigma):
    S = sym_sqrt(sigma)
    d = S.shape[0]
    return RandomSpec("S[i,p] g[p] S[j,q] g[q] S[k,s] g[s] S[l,t] g[t] -> [i,j,k,l]",
                      {"g": (d,)}, {"S": S})


def _spec_gram_outer2(m, n):
    return RandomSpec("A[i,a] A[i,b] A[j,c] A[j,d] -> [a,b,c,d]", {"A": _shape_of(m, n)})


def _spec_ab_outer2(m, n, p):
    return RandomSpec("A[a,j] B[j,b] A[c,k] B[k,d] -> [a,b,c,d]",
                      {"A": _shape_of(m, n), "B": _shape_of(n, p)})


def _spec_trace_quartic(X, n):
    X = np.asarray(X, dtype=np.float64)
    return RandomSpec("X[i,a] A[a,k] A[b,k] X[i,b] X[j,c] A[c,l] A[e,l] X[j,e] -> []",
                      {"A": _shape_of(X.shape[1], n)}, {"X": X})


def _spec_chain_example(m1, m2, m3, r1, r2, d1, d2, d3):
    net = ("A[a,x,r] B[b,r,y,s] C[c,s,z] G[x,y,z] "
           "A[a,u,t] B[b,t,v,w] C[c,w,q] G[u,v,q] -> []")
    return RandomSpec(net, {"A": _shape_of(m1, d1, r1), "B": _shape_of(m2, r1, d2, r2),
                            "C": _shape_of(m3, r2, d3), "G": _shape_of(d1, d2, d3)})


CATALOG = {
    "gram_mean": (_gram_mean, _spec_gram_mean),
    "outer_pair": (_outer_pair, _spec_outer_pair),
    "frob_mean": (_frob_mean, _spec_frob_mean),
    "prod_norm": (_prod_norm, _spec_prod_norm),
    "isserlis4": (_isserlis4, _spec_isserlis4),
    "gram_outer2": (_gram_outer2, _spec_gram_outer2),
    "ab_outer2": (_ab_outer2, _spec_ab_outer2),
    "trace_quartic": (_trace_quartic, _spec_trace_quartic),
    "chain_example": (_chain_example, _spec_chain_example),
}


def _lookup(identity: str):
    key = identity.replace("-", "_")
    if key not in CATALOG:
        raise KeyError(f"unknown identity {identity!r}; known: {', '.join(sorted(CATALOG))}")
    return CATALOG[key]


def analytic_expectation(identity: str, **params) -> np.ndarray:
    return np.asarray(_lookup(identity)[0](**params), dtype=np.float64)


def identity_network(identity: str, **params) -> RandomSpec:
    return _lookup(identity)[1](**params)


def verify_identity(identity: str, params: Mapping, samples: int = 200_000, seed: int = 0) -> IdentityReport:
    """Monte-Carlo estimate of the identity's defining network against its closed form."""
    analytic = analytic_expectation(identity, **params)
    rep = mc_expectation(identity_network(identity, **params), samples, seed)
    if rep.estimate.shape != analytic.shape:
        raise ValueError(f"estimate shape {rep.estimate.shape} != analytic shape {analytic.shape}")
    rep.analytic = analytic
    rep.max_abs_z = max_abs_z(rep.estimate, analytic, rep.stderr)
    return rep


def params_from_dims(identity: str, dims: Sequence[int], matrix: np.ndarray | None = None) -> dict:
    """Parameters of a catalog identity from a flat dimension list.

    ``isserlis4`` takes ``d`` (covariance ``matrix`` or the identity) and
    ``trace_quartic`` takes ``n`` (or ``m, n`` with ``X = I_m`` when no matrix is given).
    """
    key = identity.replace("-", "_")
    _lookup(key)
    dims = [int(d) for d in dims]
    if key == "frob_mean":
        return {"shape": tuple(dims)}
    if key == "isserlis4":
        if matrix is None:
            if len(dims) != 1:
                raise ValueError("isserlis4 takes one dimension")
            matrix = np.eye(dims[0])
        return {"sigma": matrix}
    if key == "trace_quartic":
        if matrix is None:
            if len(dims) != 2:
                raise ValueError("trace_quartic takes dims m,n")
            return {"X": np.eye(dims[0]), "n": dims[1]}
        if len(dims) != 1:
            raise ValueError("trace_quartic with a given X takes one dimension n")
        return {"X": matrix, "n": dims[0]}
    names = {"gram_mean": "mn", "outer_pair": "mn", "prod_norm": "mnr", "gram_outer2": "mn",
             "ab_outer2": "mnp"}
    if key == "chain_example":
        keys = ["m1", "m2", "m3", "r1", "r2", "d1", "d2", "d3"]
    else:
        keys = list(names[key])
    if len(dims) != len(keys):
        raise ValueError(f"{key} takes {len(keys)} dimensions ({','.join(keys)}), got {len(dims)}")
    return dict(zip(keys, dims))
