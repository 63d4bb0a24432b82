"""Jacobians of tensor networks by node removal.

Removing one occurrence of a tensor from a network leaves a network whose
contraction is the derivative with respect to that occurrence; a tensor that
occurs k times contributes k such networks.  The removed node's legs become
output legs appended after the original outputs, in the node's mode order.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .network import Node, TNGraph, contract, parse_spec
from .tt import MPO, TT

# A scalar loss may be a single network or a weighted sum of networks.
Terms = Union[TNGraph, str, Sequence[tuple[float, Union[TNGraph, str]]]]


@dataclass(frozen=True)
class JacobianNetwork:
    """Summands of a Jacobian; ``identities`` maps each identity node added for
    wiring to the leg position of the removed tensor whose size it takes."""
    summands: tuple[TNGraph, ...]
    name: str
    identities: tuple[dict, ...] = ()

    def contract(self, bindings: Mapping[str, np.ndarray]) -> np.ndarray:
        shape = np.shape(bindings[self.name])
        out = None
        for g, ids in zip(self.summands, self.identities):
            b = dict(bindings)
            b.update({nm: np.eye(shape[pos]) for nm, pos in ids.items()})
            v = contract(g, b)
            out = v if out is None else out + v
        return out


def _fresh(base: str, taken: set) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    taken.add(name)
    return name


def remove_occurrence(g: TNGraph, k: int) -> tuple[TNGraph, dict]:
    """Network for the derivative with respect to occurrence ``k`` (node index),
    plus the identity nodes it adds (name -> leg position on the removed node).

    The new output legs are named ``_d1, _d2, ...`` after the removed node's
    modes, so every occurrence yields the same output signature.
    """
    removed = g.nodes[k]
    rest = [nd for j, nd in enumerate(g.nodes) if j != k]
    counts = Counter(l for nd in g.nodes for l in nd.labels)
    own = Counter(removed.labels)
    taken = {l for nd in g.nodes for l in nd.labels} | set(g.output)
    taken |= {nd.name for nd in g.nodes}
    prefix = "_d"
    while any(l.startswith(prefix) for l in taken):
        prefix = "_" + prefix
    new_out, ids, rename = [], {}, {}
    for pos, l in enumerate(removed.labels):
        leg = f"{prefix}{pos + 1}"
        # A leg whose label joins exactly one other tensor leg is promoted by
        # renaming; anything else (self-edge, output leg, hyperedge) is wired
        # through an identity so the other occurrences still see the index.
        if own[l] == 1 and counts[l] == 2 and l not in g.output:
            rename[l] = leg
        else:
            nm = _fresh("_I", taken)
            ids[nm] = pos
            rest.append(Node(nm, (l, leg)))
        new_out.append(leg)
    rest = [Node(nd.name, tuple(rename.get(l, l) for l in nd.labels), nd.copy) for nd in rest]
    return TNGraph(tuple(rest), tuple(g.output) + tuple(new_out)), ids


def jacobian_wrt_node(g: TNGraph | str, name: str) -> JacobianNetwork:
    """One summand per occurrence of ``name``, each with that occurrence removed."""
    if isinstance(g, str):
        g = parse_spec(g)
    occ = g.occurrences(name)
    if not occ:
        raise KeyError(f"tensor {name!r} does not occur in the network")
    parts = [remove_occurrence(g, k) for k in occ]
    return JacobianNetwork(tuple(p[0] for p in parts), name, tuple(p[1] for p in parts))


def _terms(loss: Terms) -> list[tuple[float, TNGraph]]:
    if isinstance(loss, (TNGraph, str)):
        loss = [(1.0, loss)]
    return [(float(c), parse_spec(g) if isinstance(g, str) else g) for c, g in loss]


def evaluate(loss: Terms, bindings: Mapping[str, np.ndarray]) -> np.ndarray:
    out = None
    for c, g in _terms(loss):
        v = c * contract(g, bindings)
        out = v if out is None else out + v
    return out


def loss_gradient(loss: Terms, name: str, bindings: Mapping[str, np.ndarray]) -> np.ndarray:
    """Gradient of a scalar network (or weighted sum of networks) w.r.t. ``name``.

    Terms in which ``name`` does not occur contribute nothing.
    """
    shape = np.shape(bindings[name])
    grad = np.zeros(shape)
    for c, g in _terms(loss):
        if g.output:
            raise ValueError(f"loss term {g} does not contract to a scalar")
        if g.occurrences(name):
            grad = grad + c * jacobian_wrt_node(g, name).contract(bindings)
    return grad


def finite_diff_jacobian(loss: Terms, name: str, bindings: Mapping[str, np.ndarray],
                         step: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian, shape ``output shape + shape of name``."""
    if step <= 0:
        raise ValueError("step must be positive")
    X = np.asarray(bindings[name], dtype=np.float64)
    b = dict(bindings)
    cols = []
    for j in range(X.size):
        e = np.zeros(X.size)
        e[j] = step
        b[name] = X + e.reshape(X.shape)
        fp = evaluate(loss, b)
        b[name] = X - e.reshape(X.shape)
        fm = evaluate(loss, b)
        cols.append((fp - fm) / (2 * step))
    J = np.stack(cols, axis=-1)
    return J.reshape(np.shape(cols[0]) + X.shape)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a), np.asarray(b)
    scale = max(float(np.linalg.norm(b)), float(np.linalg.norm(a)), 1e-300)
    return float(np.linalg.norm(a - b)) / scale


# ---------------------------------------------------------------- MPO layer

def mpo_layer_network(w: MPO, x: TT | np.ndarray) -> tuple[TNGraph, dict[str, np.ndarray]]:
    """Scalar network ``<dL/dY, W x>`` for an MPO weight and a dense or TT input.

    Cores are bound as ``G1..GN``, the input as ``X`` (or ``X1..XN`` for a TT)
    and the upstream gradient as ``U``.
    """
    N = len(w.cores)
    nodes, bind = [], {}
    for k, c in enumerate(w.cores, start=1):
        nodes.append(Node(f"G{k}", (f"r{k - 1}", f"p{k}", f"d{k}", f"r{k}")))
        bind[f"G{k}"] = c
    if isinstance(x, TT):
        if x.dims != w.col_dims:
            raise ValueError(f"input dims {x.dims} do not match MPO column dims {w.col_dims}")
        for k, c in enumerate(x.cores, start=1):
            nodes.append(Node(f"X{k}", (f"s{k - 1}", f"d{k}", f"s{k}")))
            bind[f"X{k}"] = c
        # boundary ranks of the input TT are 1-dimensional edges that close on themselves
        nodes.append(Node("_one_s", (f"s0", f"s{N}"), copy=True))
    else:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != w.col_dims:
            raise ValueError(f"input shape {x.shape} does not match MPO column dims {w.col_dims}")
        nodes.append(Node("X", tuple(f"d{k}" for k in range(1, N + 1))))
        bind["X"] = x
    nodes.append(Node("U", tuple(f"p{k}" for k in range(1, N + 1))))
    nodes.append(Node("_one_r", ("r0", f"r{N}"), copy=True))
    return TNGraph(tuple(nodes), ()), bind


def mpo_layer_forward(w: MPO, x: TT | np.ndarray) -> np.ndarray:
    """Dense layer output ``Y = W x`` with shape ``row_dims``."""
    N = len(w.cores)
    g, bind = mpo_layer_network(w, x)
    nodes = tuple(nd for nd in g.nodes if nd.name != "U")
    out = tuple(f"p{k}" for k in range(1, N + 1))
    return contract(TNGraph(nodes, out), bind)


def mpo_layer_grad(w: MPO, x: TT | np.ndarray, upstream: np.ndarray, k: int,
                   core_layout: bool = False) -> np.ndarray:
    """Gradient of the layer loss with respect to MPO core ``k`` (1-based).

    ``upstream`` is dL/dY with shape ``row_dims``.  The gradient network is the
    forward network with core k removed, contracted with ``upstream``.  The
    result is ordered ``(R_{k-1}, p_k, R_k, d_k)``, the leg order of that
    network; ``core_layout=True`` returns ``(R_{k-1}, p_k, d_k, R_k)`` instead.
    """
    N = len(w.cores)
    if not 1 <= k <= N:
        raise ValueError(f"core index {k} out of range 1..{N}")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != w.row_dims:
        raise ValueError(f"upstream gradient shape {upstream.shape} does not match {w.row_dims}")
    g, bind = mpo_layer_network(w, x)
    bind["U"] = upstream
    grad = loss_gradient(g, f"G{k}", bind)
    return grad if core_layout else np.ascontiguousarray(np.transpose(grad, (0, 1, 3, 2)))
