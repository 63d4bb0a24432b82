"""Tensor networks: a small network language, contraction and cut-based rank bounds.

A network is written as whitespace-separated terms followed by the output legs::

    A[i,r] B[j,r] C[k,r] -> [i,j,k]     # CP diagram, r is a hyperedge

A label used by exactly two legs is an ordinary contracted edge (two legs of the
same term make a self-edge, i.e. a trace).  A label used by three or more legs,
counting the output, is a hyperedge; it is lowered to an explicit copy-tensor
node before contraction.  A name that appears several times refers to the same
tensor bound once.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dense import copy_tensor
from .linalg import numerical_rank

MAX_CUT_NODES = 20


class SpecSyntaxError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Node:
    name: str
    labels: tuple[str, ...]
    copy: bool = False  # copy tensor; its dimension is taken from its legs


@dataclass(frozen=True)
class TNGraph:
    nodes: tuple[Node, ...]
    output: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "output", tuple(self.output))
        if len(set(self.output)) != len(self.output):
            raise ValueError(f"output labels must be distinct: {self.output}")
        arity: dict[str, int] = {}
        for nd in self.nodes:
            if nd.copy:
                continue
            if arity.setdefault(nd.name, len(nd.labels)) != len(nd.labels):
                raise ValueError(f"tensor {nd.name!r} used with {arity[nd.name]} and {len(nd.labels)} legs")
        counts = Counter(l for nd in self.nodes for l in nd.labels)
        for l in self.output:
            if l not in counts:
                raise ValueError(f"output label {l!r} is not attached to any tensor")
        for l, c in counts.items():
            if c == 1 and l not in self.output:
                raise ValueError(f"label {l!r} is dangling but not listed in the output")

    @property
    def names(self) -> list[str]:
        """Distinct bound tensor names, in order of first appearance."""
        return list(dict.fromkeys(nd.name for nd in self.nodes if not nd.copy))

    def occurrences(self, name: str) -> list[int]:
        return [k for k, nd in enumerate(self.nodes) if nd.name == name and not nd.copy]

    def leg_counts(self) -> Counter:
        c = Counter(l for nd in self.nodes for l in nd.labels)
        c.update(self.output)
        return c

    def __str__(self) -> str:
        terms = " ".join(f"{nd.name}[{','.join(nd.labels)}]" for nd in self.nodes if not nd.copy)
        return f"{terms} -> [{','.join(self.output)}]"


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s+|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<arrow>->)|(?P<p>[\[\],])")


def _tokenize(text: str):
    toks = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            m = _TOKEN.match(line, pos)
            if not m:
                raise SpecSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
            if m.lastgroup:
                toks.append((m.lastgroup, m.group(m.lastgroup), lineno, pos + 1))
            pos = m.end()
    return toks


def parse_spec(text: str) -> TNGraph:
    """Parse ``Name[l1,...] ... -> [out,...]`` into a :class:`TNGraph`."""
    toks = _tokenize(text)
    pos = 0
    last = (len(text.splitlines()) or 1, 1)

    def peek():
        return toks[pos] if pos < len(toks) else None

    def expect(kind, value=None):
        nonlocal pos
        t = peek()
        if t is None:
            raise SpecSyntaxError(f"unexpected end of input, expected {value or kind}", *last)
        if t[0] != kind or (value is not None and t[1] != value):
            raise SpecSyntaxError(f"expected {value or kind}, found {t[1]!r}", t[2], t[3])
        pos += 1
        return t

    def label_list():
        expect("p", "[")
        labels = []
        if peek() is not None and peek()[1] == "]":
            pos_inc()
            return labels
        while True:
            labels.append(expect("id")[1])
            t = expect("p")
            if t[1] == "]":
                return labels
            if t[1] != ",":
                raise SpecSyntaxError(f"expected ',' or ']', found {t[1]!r}", t[2], t[3])

    def pos_inc():
        nonlocal pos
        pos += 1

    nodes = []
    while peek() is not None and peek()[0] == "id":
        t = expect("id")
        nodes.append((t, label_list()))
    if not nodes:
        t = peek()
        raise SpecSyntaxError("expected a tensor term", *(t[2:] if t else last))
    expect("arrow")
    out_tok = peek()
    output = label_list()
    if peek() is not None:
        t = peek()
        raise SpecSyntaxError(f"trailing input {t[1]!r}", t[2], t[3])

    arity: dict[str, int] = {}
    for t, labels in nodes:
        if arity.setdefault(t[1], len(labels)) != len(labels):
            raise SpecSyntaxError(f"duplicate tensor name {t[1]!r} with a different number of legs", t[2], t[3])
    used = {l for _, labels in nodes for l in labels}
    for l in output:
        if l not in used:
            raise SpecSyntaxError(f"output label {l!r} not present in any term", out_tok[2], out_tok[3])
    try:
        return TNGraph(tuple(Node(t[1], tuple(labels)) for t, labels in nodes), tuple(output))
    except ValueError as e:
        raise SpecSyntaxError(str(e), out_tok[2], out_tok[3]) from None


# ---------------------------------------------------------------- lowering and dims

def lower(g: TNGraph) -> TNGraph:
    """Replace every hyperedge (a label on >= 3 legs, output included) by a copy node."""
    counts = g.leg_counts()
    hyper = [l for l in counts if counts[l] >= 3]
    if not hyper:
        return g
    seen: Counter = Counter()
    nodes = []
    for nd in g.nodes:
        labels = []
        for l in nd.labels:
            if l in hyper:
                seen[l] += 1
                labels.append(f"{l}#{seen[l]}")
            else:
                labels.append(l)
        nodes.append(Node(nd.name, tuple(labels), nd.copy))
    for l in hyper:
        legs = tuple(f"{l}#{k}" for k in range(1, seen[l] + 1))
        if l in g.output:
            legs = legs + (l,)
        nodes.append(Node(f"_copy_{l}", legs, copy=True))
    return TNGraph(tuple(nodes), g.output)


def label_dims(g: TNGraph, shapes: Mapping[str, Sequence[int]]) -> dict[str, int]:
    """Dimension of every label, given the shapes of the bound tensors.

    Copy nodes take the dimension of their other legs.
    """
    dims: dict[str, int] = {}

    def put(l, d):
        if dims.setdefault(l, d) != d:
            raise ValueError(f"label {l!r} has inconsistent dimensions {dims[l]} and {d}")

    for nd in g.nodes:
        if nd.copy:
            continue
        if nd.name not in shapes:
            raise KeyError(f"no tensor bound to {nd.name!r}")
        shape = tuple(shapes[nd.name])
        if len(shape) != len(nd.labels):
            raise ValueError(f"tensor {nd.name!r} has order {len(shape)} but {len(nd.labels)} legs")
        for l, d in zip(nd.labels, shape):
            put(l, int(d))
    copies = [nd for nd in g.nodes if nd.copy]
    while copies:
        pending = []
        for nd in copies:
            known = {dims[l] for l in nd.labels if l in dims}
            if len(known) > 1:
                raise ValueError(f"copy node {nd.name!r} joins legs of different sizes {sorted(known)}")
            if known:
                d = known.pop()
                for l in nd.labels:
                    put(l, d)
            else:
                pending.append(nd)
        if len(pending) == len(copies):
            raise ValueError("cannot infer the dimension of copy nodes " + ", ".join(n.name for n in pending))
        copies = pending
    return dims


def _operands(g: TNGraph, bindings: Mapping[str, np.ndarray]):
    shapes = {name: np.shape(bindings[name]) for name in g.names if name in bindings}
    dims = label_dims(g, shapes)
    ops = []
    for nd in g.nodes:
        if nd.copy:
            t = copy_tensor(len(nd.labels), dims[nd.labels[0]])
        else:
            t = np.asarray(bindings[nd.name], dtype=np.float64)
        ops.append((t, list(nd.labels)))
    return ops, dims


def _self_trace(t: np.ndarray, labels: list[str]):
    c = Counter(labels)
    if all(v == 1 for v in c.values()):
        return t, labels
    if any(v > 2 for v in c.values()):
        raise ValueError(f"label used more than twice on one node: {labels}")
    keep = [l for l in labels if c[l] == 1]
    sym = {l: chr(97 + k) if k < 26 else chr(65 + k - 26) for k, l in enumerate(c)}
    expr = "".join(sym[l] for l in labels) + "->" + "".join(sym[l] for l in keep)
    return np.einsum(expr, t), keep


# ---------------------------------------------------------------- planning

def _result_labels(la: Sequence[str], lb: Sequence[str]) -> list[str]:
    shared = set(la) & set(lb)
    return [l for l in la if l not in shared] + [l for l in lb if l not in shared]


def _size(labels: Iterable[str], dims: Mapping[str, int]) -> int:
    return math.prod(dims[l] for l in labels)


def greedy_plan(node_labels: Sequence[Sequence[str]], dims: Mapping[str, int]) -> list[tuple[int, int]]:
    """Greedy pairwise merge order over nodes given by their (self-traced) labels.

    Each step merges the pair whose result is smallest, ties going to the
    lexicographically smallest id pair.  Only pairs sharing a label are
    considered unless none is left.  The merged node gets the next free id.
    """
    live = {k: list(ls) for k, ls in enumerate(node_labels)}
    nxt = len(node_labels)
    plan = []
    while len(live) > 1:
        ids = sorted(live)
        pairs = [(a, b) for a, b in itertools.combinations(ids, 2) if set(live[a]) & set(live[b])]
        if not pairs:
            pairs = list(itertools.combinations(ids, 2))
        best = min(pairs, key=lambda p: (_size(_result_labels(live[p[0]], live[p[1]]), dims), p))
        a, b = best
        live[nxt] = _result_labels(live.pop(a), live.pop(b))
        plan.append((a, b))
        nxt += 1
    return plan


def _traced_labels(g: TNGraph) -> list[list[str]]:
    out = []
    for nd in g.nodes:
        c = Counter(nd.labels)
        out.append([l for l in nd.labels if c[l] == 1])
    return out


def contraction_order(g: TNGraph, dims: Mapping[str, int]) -> list[tuple[int, int]]:
    """Greedy merge plan for ``lower(g)``; ids index ``lower(g).nodes``."""
    lg = lower(g)
    return greedy_plan(_traced_labels(lg), dims)


def plan_cost(g: TNGraph, dims: Mapping[str, int], plan: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Return ``(flops, peak)`` of a plan: the summed product of the dims of all
    labels touched by each merge, and the largest intermediate produced."""
    live = dict(enumerate(_traced_labels(lower(g))))
    nxt = len(live)
    flops = peak = 0
    for a, b in plan:
        la, lb = live.pop(a), live.pop(b)
        flops += _size(set(la) | set(lb), dims)
        live[nxt] = _result_labels(la, lb)
        peak = max(peak, _size(live[nxt], dims))
        nxt += 1
    return flops, peak


# ---------------------------------------------------------------- contraction

def contract(g: TNGraph | str, bindings: Mapping[str, np.ndarray],
             plan: Sequence[tuple[int, int]] | None = None) -> np.ndarray:
    """Contract the network; the result's modes follow ``g.output``.

    ``plan`` overrides the greedy order (ids as in :func:`contraction_order`).
    """
    if isinstance(g, str):
        g = parse_spec(g)
    lg = lower(g)
    ops, dims = _operands(lg, bindings)
    live = {k: _self_trace(t, ls) for k, (t, ls) in enumerate(ops)}
    if plan is None:
        plan = greedy_plan([ls for _, ls in live.values()], dims)
    nxt = len(live)
    for a, b in plan:
        (ta, la), (tb, lb) = live.pop(a), live.pop(b)
        shared = [l for l in la if l in lb]
        t = np.tensordot(ta, tb, axes=([la.index(l) for l in shared], [lb.index(l) for l in shared]))
        live[nxt] = (t, _result_labels(la, lb))
        nxt += 1
    if len(live) != 1:
        raise ValueError("contraction plan does not reduce the network to a single tensor")
    t, labels = live.popitem()[1]
    if sorted(labels) != sorted(g.output):
        raise ValueError(f"contraction left labels {labels}, expected {list(g.output)}")
    return np.ascontiguousarray(np.transpose(t, [labels.index(l) for l in g.output]))


def einsum_expression(g: TNGraph, batch: Iterable[str] = ()):
    """Sublist operands for ``np.einsum`` over ``lower(g)``.

    Names in ``batch`` get an extra leading axis that is also the leading axis
    of the output.  Returns ``(lowered, subscripts, out_subscripts)``.
    """
    lg = lower(g)
    batch = set(batch)
    ids: dict[str, int] = {"__batch__": 0}
    for nd in lg.nodes:
        for l in nd.labels:
            ids.setdefault(l, len(ids))
    if len(ids) > 52:
        raise ValueError("network too large for einsum")
    subs = []
    for nd in lg.nodes:
        s = [ids[l] for l in nd.labels]
        subs.append(([0] if nd.name in batch and not nd.copy else []) + s)
    out = ([0] if batch else []) + [ids[l] for l in g.output]
    return lg, subs, out


# ---------------------------------------------------------------- cut bounds

@dataclass(frozen=True)
class CutBoundResult:
    bound: int
    row_nodes: frozenset = field(default_factory=frozenset)  # node ids of lower(g) on the row side
    degenerate: bool = False


def cut_weight(g: TNGraph, dims: Mapping[str, int], row_nodes: Iterable[int]) -> int:
    """Product of the dimensions of internal edges crossing the node bipartition
    (``row_nodes`` versus the rest) of ``lower(g)``."""
    lg = lower(g)
    side = set(row_nodes)
    where: dict[str, list[int]] = {}
    for k, nd in enumerate(lg.nodes):
        for l in nd.labels:
            where.setdefault(l, []).append(k)
    w = 1
    for l, ks in where.items():
        if l in lg.output or len(ks) != 2:
            continue
        if (ks[0] in side) != (ks[1] in side):
            w *= dims[l]
    return w


def rank_bound(g: TNGraph, rows: Iterable[str], dims: Mapping[str, int]) -> CutBoundResult:
    """Smallest cut weight separating the row output legs from the others.

    Exhaustive over node bipartitions, so limited to ``MAX_CUT_NODES`` nodes
    after hyperedge lowering.
    """
    rows = set(rows)
    if not rows <= set(g.output):
        raise ValueError(f"row labels {sorted(rows - set(g.output))} are not output labels")
    lg = lower(g)
    n = len(lg.nodes)
    if n > MAX_CUT_NODES:
        raise ValueError(f"rank_bound supports at most {MAX_CUT_NODES} nodes, got {n}")
    cols = set(g.output) - rows
    row_side = {k for k, nd in enumerate(lg.nodes) if rows & set(nd.labels)}
    col_side = {k for k, nd in enumerate(lg.nodes) if cols & set(nd.labels)}
    if row_side & col_side:
        trivial = min(_size(rows, dims), _size(cols, dims))
        return CutBoundResult(trivial, frozenset(), degenerate=True)
    free = [k for k in range(n) if k not in row_side and k not in col_side]
    best = None
    for mask in range(1 << len(free)):
        side = row_side | {free[j] for j in range(len(free)) if mask >> j & 1}
        w = cut_weight(g, dims, side)
        if best is None or w < best[0]:
            best = (w, frozenset(side))
    return CutBoundResult(best[0], best[1])


def matricization_rank(g: TNGraph, rows: Iterable[str], bindings: Mapping[str, np.ndarray]) -> int:
    """Numerical rank of the contracted network unfolded with ``rows`` as row modes."""
    from .dense import matricize

    T = contract(g, bindings)
    rows = set(rows)
    modes = [k + 1 for k, l in enumerate(g.output) if l in rows]
    return numerical_rank(matricize(T, modes))
