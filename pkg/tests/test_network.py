import itertools

import numpy as np
import pytest

from tnkit.dense import copy_tensor, matricize
from tnkit.linalg import numerical_rank
from tnkit.network import (
    Node, SpecSyntaxError, TNGraph, contract, contraction_order, cut_weight, einsum_expression,
    greedy_plan, label_dims, lower, matricization_rank, parse_spec, plan_cost, rank_bound,
)
from tnkit.tt import random_tt


class TestParse:
    def test_chain(self):
        g = parse_spec("A[i,j] B[j,k] -> [i,k]")
        assert [n.name for n in g.nodes] == ["A", "B"]
        assert g.output == ("i", "k")
        assert g.leg_counts()["j"] == 2

    def test_hyperedge_lowering(self):
        g = parse_spec("A[i,r] B[j,r] C[k,r] -> [i,j,k]")
        lg = lower(g)
        copies = [n for n in lg.nodes if n.copy]
        assert len(copies) == 1 and len(copies[0].labels) == 3

    def test_self_edge(self):
        g = parse_spec("A[i,i] -> []")
        assert g.output == () and g.nodes[0].labels == ("i", "i")

    def test_comments_and_whitespace(self):
        g = parse_spec("# a comment\nA[ i , j ]   # trailing\n  B[j,k]\n-> [i, k]\n")
        assert str(g) == "A[i,j] B[j,k] -> [i,k]"

    @pytest.mark.parametrize("text,line,col", [
        ("A[i,j] B[j,k] -> [i,k", 1, 1),
        ("A[i,j]\nB[j,$] -> [i]", 2, 5),
        ("A[i,j] B[j] -> [i,q]", 1, 16),
        ("A[i] A[i,j] -> [j]", 1, 6),
    ])
    def test_syntax_errors_report_position(self, text, line, col):
        with pytest.raises(SpecSyntaxError) as e:
            parse_spec(text)
        assert e.value.line == line
        if text != "A[i,j] B[j,k] -> [i,k":
            assert e.value.col == col

    def test_dangling_label_rejected(self):
        with pytest.raises(SpecSyntaxError):
            parse_spec("A[i,j] -> [i]")

    def test_repeated_name_same_arity_allowed(self):
        g = parse_spec("x[i] A[i,j] x[j] -> []")
        assert g.occurrences("x") == [0, 2]
        assert g.names == ["x", "A"]


class TestContract:
    def test_matrix_chain(self):
        A = np.array([[1.0, 2], [3, 4]])
        assert np.array_equal(contract("A[i,j] B[j,k] -> [i,k]", {"A": A, "B": np.eye(2)}), A)

    def test_trace_of_product(self, rng):
        A, B, C = rng.standard_normal((2, 3)), rng.standard_normal((3, 4)), rng.standard_normal((4, 2))
        v = contract("A[i,j] B[j,k] C[k,i] -> []", {"A": A, "B": B, "C": C})
        assert np.isclose(v, np.trace(A @ B @ C), rtol=1e-12)

    def test_h_network_loop(self, rng):
        R, d = 2, 2
        S = rng.standard_normal((d, R, R))
        At = rng.standard_normal((R, R, R))
        T = rng.standard_normal((d, d, d, R, R, R))
        A = rng.standard_normal((R, R))
        net = "S[i,r1,r2] At[r2,r3,r5] T[j,k,l,r1,r3,r4] A[r4,r5] -> [i,j,k,l]"
        H = contract(net, {"S": S, "At": At, "T": T, "A": A})
        ref = np.zeros((d,) * 4)
        for i, j, k, l in np.ndindex(*ref.shape):
            for r1, r2, r3, r4, r5 in itertools.product(range(R), repeat=5):
                ref[i, j, k, l] += S[i, r1, r2] * At[r2, r3, r5] * T[j, k, l, r1, r3, r4] * A[r4, r5]
        assert np.allclose(H, ref, atol=1e-12)

    def test_output_order(self, rng):
        A = rng.standard_normal((2, 3))
        assert np.array_equal(contract("A[i,j] -> [j,i]", {"A": A}), A.T)

    def test_hyperedge_semantics(self, rng):
        A, B, C = rng.standard_normal((2, 3)), rng.standard_normal((4, 3)), rng.standard_normal((2, 3))
        T = contract("A[i,r] B[j,r] C[k,r] -> [i,j,k]", {"A": A, "B": B, "C": C})
        ref = np.zeros((2, 4, 2))
        for i, j, k in np.ndindex(*ref.shape):
            ref[i, j, k] = sum(A[i, r] * B[j, r] * C[k, r] for r in range(3))
        assert np.allclose(T, ref, atol=1e-13)
        # hyperedge that is also an output leg
        D = contract("a[r] b[r] -> [r]", {"a": A[0], "b": C[1]})
        assert np.allclose(D, A[0] * C[1])

    def test_order_independence(self, rng):
        g = parse_spec("A[i,a] B[a,b,j] C[b,c] D[c,i,k] -> [j,k]")
        b = {"A": rng.standard_normal((2, 3)), "B": rng.standard_normal((3, 2, 4)),
             "C": rng.standard_normal((2, 3)), "D": rng.standard_normal((3, 2, 2))}
        ref = contract(g, b)
        for plan in ([(0, 1), (2, 3), (4, 5)], [(2, 3), (1, 4), (0, 5)], [(0, 3), (1, 4), (2, 5)]):
            assert np.allclose(contract(g, b, plan=plan), ref, atol=1e-12)

    def test_edge_as_sum(self, rng):
        A, B = rng.standard_normal((3, 4)), rng.standard_normal((4, 5))
        full = contract("A[i,r] B[r,j] -> [i,j]", {"A": A, "B": B})
        parts = sum(np.outer(A[:, r], B[r]) for r in range(4))
        assert np.allclose(full, parts, atol=1e-13)

    def test_dim_mismatch(self, rng):
        with pytest.raises(ValueError):
            contract("A[i,j] B[j,k] -> [i,k]", {"A": np.zeros((2, 3)), "B": np.zeros((4, 2))})

    def test_einsum_expression_matches(self, rng):
        g = parse_spec("A[i,r] B[j,r] C[k,r] -> [i,j,k]")
        b = {"A": rng.standard_normal((2, 3)), "B": rng.standard_normal((2, 3)), "C": rng.standard_normal((2, 3))}
        lg, subs, out = einsum_expression(g)
        dims = label_dims(lg, {k: v.shape for k, v in b.items()})
        ops = []
        for nd, s in zip(lg.nodes, subs):
            ops += [copy_tensor(len(nd.labels), dims[nd.labels[0]]) if nd.copy else b[nd.name], s]
        assert np.allclose(np.einsum(*ops, out), contract(g, b), atol=1e-13)


class TestPlanning:
    def test_single_node(self):
        assert contraction_order(parse_spec("A[i,j] -> [i,j]"), {"i": 2, "j": 2}) == []

    def test_chain_cheap_ends(self):
        g = parse_spec("A[i,a] B[a,b] C[b,j] -> [i,j]")
        dims = {"i": 2, "a": 100, "b": 100, "j": 2}
        plan = contraction_order(g, dims)
        cost = plan_cost(g, dims, plan)[0]
        best = min(plan_cost(g, dims, p)[0] for p in ([(0, 1), (2, 3)], [(1, 2), (0, 3)], [(0, 2), (1, 3)]))
        assert cost <= 2 * best

    def test_ties_smallest_pair(self):
        plan = greedy_plan([["a"], ["a"], ["b"], ["b"]], {"a": 2, "b": 2})
        assert plan[0] == (0, 1)

    def test_tt_inner_zipper_shape(self):
        N, d, R = 5, 3, 4
        terms = [f"A{k}[a{k},i{k},a{k + 1}] B{k}[b{k},i{k},b{k + 1}]" for k in range(N)]
        text = " ".join(terms).replace("a0", "e0").replace("b0", "e0")
        text = text.replace(f"a{N}]", "eN]").replace(f"b{N}]", "eN]")
        g = parse_spec(text + " -> []")
        dims = {l: (d if l.startswith("i") else (1 if l in ("e0", "eN") else R))
                for nd in g.nodes for l in nd.labels}
        flops, peak = plan_cost(g, dims, contraction_order(g, dims))
        # zipper order keeps intermediates at R^2 d; a bad order would hold R^4-sized chains
        assert peak <= R * R * d
        assert flops <= 4 * N * d * R ** 3


class TestRankBound:
    def test_matrix_product(self):
        g = parse_spec("A[m,r] B[r,n] -> [m,n]")
        res = rank_bound(g, ["m"], {"m": 5, "r": 3, "n": 6})
        assert res.bound == 3 and not res.degenerate

    def test_four_node_chain(self):
        g = parse_spec("T[d1,a,b,c] A[a,b,c,e] B[e,f] S[f,d2] -> [d1,d2]")
        dims = {"d1": 50, "a": 2, "b": 2, "c": 2, "e": 20, "f": 30, "d2": 50}
        assert cut_weight(g, dims, {0}) == 8  # R1 R2 R3
        assert cut_weight(g, dims, {0, 1}) == 20  # R4
        assert cut_weight(g, dims, {0, 1, 2}) == 30  # R5
        assert rank_bound(g, ["d1"], dims).bound == 8
        dims.update(a=4, b=4, c=4, e=40)
        res = rank_bound(g, ["d1"], dims)
        assert res.bound == 30 and res.row_nodes == frozenset({0, 1, 2})

    def test_tucker(self):
        g = parse_spec("G[a,b,c,e] A1[a,d1] A2[b,d2] A3[c,d3] A4[e,d4] -> [d1,d2,d3,d4]")
        dims = {"a": 2, "b": 3, "c": 4, "e": 5, "d1": 6, "d2": 6, "d3": 6, "d4": 6}
        assert rank_bound(g, ["d1"], dims).bound == 2

    def test_degenerate(self):
        g = parse_spec("A[i,r] B[r,j,k] -> [i,j,k]")
        res = rank_bound(g, ["i", "j"], {"i": 2, "r": 3, "j": 2, "k": 5})
        assert res.degenerate and res.bound == 4

    def test_too_many_nodes(self):
        text = " ".join(f"A{k}[l{k},l{k + 1}]" for k in range(21)) + " -> [l0,l21]"
        g = parse_spec(text)
        with pytest.raises(ValueError):
            rank_bound(g, ["l0"], {f"l{k}": 2 for k in range(22)})

    def test_soundness_random(self, rng):
        for trial in range(20):
            g, b = random_network(rng)
            for r in range(1, len(g.output)):
                for rows in itertools.combinations(g.output, r):
                    dims = label_dims(lower(g), {k: v.shape for k, v in b.items()})
                    assert matricization_rank(g, rows, b) <= rank_bound(g, rows, dims).bound


def random_network(rng, max_nodes=6, max_dim=4):
    """Random connected network with a few dangling legs and occasional hyperedges."""
    n = int(rng.integers(2, max_nodes + 1))
    labels = [[] for _ in range(n)]
    dims = {}
    k = 0
    for v in range(1, n):  # spanning tree keeps it connected
        u = int(rng.integers(0, v))
        l = f"e{k}"; k += 1
        dims[l] = int(rng.integers(1, max_dim + 1))
        labels[u].append(l); labels[v].append(l)
    for _ in range(int(rng.integers(0, n))):
        u, v = rng.choice(n, 2, replace=False)
        l = f"e{k}"; k += 1
        dims[l] = int(rng.integers(1, max_dim + 1))
        labels[u].append(l); labels[v].append(l)
    out = []
    for j in range(int(rng.integers(2, 4))):
        u = int(rng.integers(0, n))
        l = f"o{j}"
        dims[l] = int(rng.integers(1, max_dim + 1))
        labels[u].append(l); out.append(l)
    if rng.random() < 0.3 and n >= 3:
        l = f"h{k}"
        dims[l] = int(rng.integers(1, max_dim + 1))
        for u in rng.choice(n, 3, replace=False):
            labels[u].append(l)
    nodes = tuple(Node(f"T{v}", tuple(labels[v])) for v in range(n))
    g = TNGraph(nodes, tuple(out))
    b = {f"T{v}": rng.standard_normal([dims[l] for l in labels[v]]) for v in range(n)}
    return g, b
