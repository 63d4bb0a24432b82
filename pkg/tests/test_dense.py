import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnkit.dense import (
    as_tensor, copy_tensor, diag_embed, diag_extract, fiber, flat_offset, frobenius_norm,
    hadamard, inner, khatri_rao, khatri_rao_list, kronecker, matricize, mode_n_matrix_product,
    mode_n_vector_product, outer, partial_trace, permute, poly_eval, slice_, trace,
    unmatricize, unravel_offset, vectorize,
)

shapes = st.lists(st.integers(1, 4), min_size=1, max_size=4)


@given(shapes, st.data())
def test_flat_offset_roundtrip(shape, data):
    idx = tuple(data.draw(st.integers(0, d - 1)) for d in shape)
    off = flat_offset(idx, shape)
    assert unravel_offset(off, shape) == idx
    assert np.arange(np.prod(shape)).reshape(shape)[idx] == off


def test_as_tensor_rejects_bad_fill():
    with pytest.raises(ValueError):
        as_tensor([1, 2, 3], (2, 2))
    assert as_tensor(5.0).shape == ()


class TestPermute:
    def test_transpose(self):
        M = np.array([[1, 2, 3], [4, 5, 6]], float)
        assert np.array_equal(permute(M, (2, 1)), M.T)

    def test_identity_is_bit_exact(self, rng):
        T = rng.standard_normal((2, 3, 4))
        assert np.array_equal(permute(T, (1, 2, 3)), T)

    def test_enumeration(self):
        T = np.fromfunction(lambda i, j, k: 100 * i + 10 * j + k, (2, 3, 4))
        P = permute(T, (3, 1, 2))
        assert P.shape == (4, 2, 3)
        for i, j, k in np.ndindex(2, 3, 4):
            assert P[k, i, j] == 100 * i + 10 * j + k

    def test_bad_perm(self):
        with pytest.raises(ValueError):
            permute(np.zeros((2, 2)), (1, 1))
        with pytest.raises(ValueError):
            permute(np.zeros((2, 2)), (1,))


class TestMatricize:
    def test_mode1_rows(self):
        T = np.arange(24.0).reshape(2, 3, 4)
        M = matricize(T, [1])
        assert M.shape == (2, 12)
        assert np.array_equal(M[0], [T[0, j, k] for j in range(3) for k in range(4)])

    def test_matrix_is_itself(self, rng):
        A = rng.standard_normal((3, 5))
        assert np.array_equal(matricize(A, [1]), A)

    def test_vectorize_consistency(self, rng):
        T = rng.standard_normal((3, 4, 2))
        assert np.array_equal(vectorize(T), vectorize(matricize(T, [1])))

    def test_general_rows_match_layout(self, rng):
        T = rng.standard_normal((2, 3, 4, 2))
        M = matricize(T, [2, 4])
        for i1, i2, i3, i4 in np.ndindex(*T.shape):
            assert M[i2 * 2 + i4, i1 * 4 + i3] == T[i1, i2, i3, i4]

    def test_all_modes_column(self, rng):
        T = rng.standard_normal((2, 3))
        assert matricize(T, [1, 2]).shape == (6, 1)

    @given(shapes, st.data())
    def test_unmatricize_inverts(self, shape, data):
        rows = data.draw(st.lists(st.integers(1, len(shape)), unique=True, min_size=1))
        T = np.arange(float(np.prod(shape))).reshape(shape)
        assert np.array_equal(unmatricize(matricize(T, rows), rows, shape), T)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            matricize(np.zeros((2, 2)), [3])


def test_vectorize_examples():
    assert np.array_equal(vectorize(np.array([[1, 2], [3, 4]])), [1, 2, 3, 4])
    assert vectorize(np.array(7.0)).shape == (1,)
    u, v = np.array([1.0, 2]), np.array([3.0, 4])
    assert np.array_equal(vectorize(outer(u, v)), kronecker(u, v))
    assert np.array_equal(kronecker(u, v), [3, 4, 6, 8])


def test_fiber_and_slice(rng):
    T = rng.standard_normal((2, 3, 4))
    assert np.array_equal(fiber(T, 2, (1, 3)), T[1, :, 3])
    assert np.array_equal(slice_(T, (1, 3), (2,)), T[:, 2, :])
    with pytest.raises(ValueError):
        fiber(T, 2, (1,))


class TestModeProducts:
    def test_matrix_product_recovers_abt(self, rng):
        A, B = rng.standard_normal((2, 3)), rng.standard_normal((5, 3))
        assert np.allclose(mode_n_matrix_product(A, B, 2), A @ B.T, atol=1e-14)

    def test_identity(self, rng):
        X = rng.standard_normal((2, 3, 4))
        assert np.allclose(mode_n_matrix_product(X, np.eye(3), 2), X, atol=0)

    def test_loop_oracle(self, rng):
        X, M = rng.standard_normal((2, 3, 4)), rng.standard_normal((5, 3))
        Y = mode_n_matrix_product(X, M, 2)
        ref = np.zeros((2, 5, 4))
        for i, r, k in np.ndindex(2, 5, 4):
            ref[i, r, k] = sum(X[i, j, k] * M[r, j] for j in range(3))
        assert np.allclose(Y, ref, atol=1e-13)

    def test_matricized_form(self, rng):
        X, M = rng.standard_normal((2, 3, 4)), rng.standard_normal((5, 3))
        assert np.allclose(matricize(mode_n_matrix_product(X, M, 2), [2]), M @ matricize(X, [2]), atol=1e-13)

    def test_same_mode_composition(self, rng):
        X = rng.standard_normal((2, 3, 4))
        A, B = rng.standard_normal((5, 3)), rng.standard_normal((2, 5))
        lhs = mode_n_matrix_product(mode_n_matrix_product(X, A, 2), B, 2)
        assert np.allclose(lhs, mode_n_matrix_product(X, B @ A, 2), atol=1e-12)

    def test_distinct_modes_commute(self, rng):
        X = rng.standard_normal((2, 3, 4))
        A, B = rng.standard_normal((5, 2)), rng.standard_normal((3, 4))
        ab = mode_n_matrix_product(mode_n_matrix_product(X, A, 1), B, 3)
        ba = mode_n_matrix_product(mode_n_matrix_product(X, B, 3), A, 1)
        assert np.allclose(ab, ba, atol=1e-12)

    def test_all_modes_kronecker(self, rng):
        X = rng.standard_normal((2, 3, 4))
        A1, A2, A3 = (rng.standard_normal((k, d)) for k, d in [(3, 2), (2, 3), (5, 4)])
        Y = mode_n_matrix_product(mode_n_matrix_product(mode_n_matrix_product(X, A1, 1), A2, 2), A3, 3)
        assert np.abs(matricize(Y, [1]) - A1 @ matricize(X, [1]) @ np.kron(A2, A3).T).max() <= 1e-12

    def test_mismatch(self, rng):
        with pytest.raises(ValueError):
            mode_n_matrix_product(np.zeros((2, 3)), np.zeros((4, 2)), 2)

    def test_vector_product(self, rng):
        A, v = rng.standard_normal((3, 4)), rng.standard_normal(4)
        assert np.allclose(mode_n_vector_product(A, v, 2), A @ v, atol=1e-14)
        X = rng.standard_normal((2, 3, 4))
        e = np.eye(3)[1]
        assert np.array_equal(mode_n_vector_product(X, e, 2), X[:, 1, :])

    def test_vector_product_mode_shift(self, rng):
        X = rng.standard_normal((2, 3, 4))
        a, b = rng.standard_normal(3), rng.standard_normal(4)
        ref = np.einsum("ijk,j,k->i", X, a, b)
        # after contracting mode 2, the old mode 3 becomes mode 2
        assert np.allclose(mode_n_vector_product(mode_n_vector_product(X, a, 2), b, 2), ref, atol=1e-13)
        assert np.allclose(mode_n_vector_product(mode_n_vector_product(X, b, 3), a, 2), ref, atol=1e-13)
        with pytest.raises(ValueError):
            mode_n_vector_product(mode_n_vector_product(X, a, 2), b, 3)


class TestInnerOuter:
    def test_inner(self, rng):
        assert inner([1, 2], [3, 4]) == 11
        T = rng.standard_normal((2, 3, 2))
        assert np.isclose(inner(T, T), frobenius_norm(T) ** 2, rtol=1e-14)
        with pytest.raises(ValueError):
            inner(np.zeros(2), np.zeros(3))

    def test_inner_of_outers(self, rng):
        a1, a2, t1, t2 = rng.standard_normal((4, 3))
        assert np.isclose(inner(outer(a1, a2), outer(t1, t2)), inner(a1, t1) * inner(a2, t2), rtol=1e-12)

    def test_outer(self, rng):
        assert np.array_equal(outer([1, 2], [3, 4]), [[3, 4], [6, 8]])
        T = rng.standard_normal((2, 2))
        assert np.array_equal(outer(2.0, T), 2 * T)
        A, B = rng.standard_normal((2, 2)), rng.standard_normal((2, 2, 2))
        assert outer(A, B).shape == (2, 2, 2, 2, 2)
        assert np.isclose(frobenius_norm(outer(A, B)), frobenius_norm(A) * frobenius_norm(B), rtol=1e-12)


class TestTrace:
    def test_identity(self):
        assert trace(np.eye(3)) == 3

    def test_cyclic(self, rng):
        A, B = rng.standard_normal((2, 3)), rng.standard_normal((3, 2))
        assert np.isclose(trace(A @ B), trace(B @ A), rtol=1e-12)

    def test_partial_trace_loop(self, rng):
        T = rng.standard_normal((2, 3, 4, 3, 5))
        P = partial_trace(T, 2, 4)
        assert P.shape == (2, 4, 5)
        for i1, i3, i4 in np.ndindex(2, 4, 5):
            assert np.isclose(P[i1, i3, i4], sum(T[i1, j, i3, j, i4] for j in range(3)), atol=1e-13)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            partial_trace(np.zeros((2, 3)), 1, 2)


class TestProducts:
    def test_identity_kron(self):
        assert np.array_equal(kronecker(np.eye(2), np.eye(3)), np.eye(6))

    def test_block(self):
        A = np.array([[1.0, 2], [3, 4]])
        B = np.array([[0.0, 1], [1, 0]])
        K = kronecker(A, B)
        for i, j, k, l in np.ndindex(2, 2, 2, 2):
            assert K[i * 2 + k, j * 2 + l] == A[i, j] * B[k, l]

    def test_mixed_product(self, rng):
        A, B, C, D = (rng.standard_normal(s) for s in [(2, 3), (2, 2), (3, 2), (2, 2)])
        assert np.allclose(kronecker(A, B) @ kronecker(C, D), kronecker(A @ C, B @ D), atol=1e-12)

    def test_tensor_kron_grouping(self, rng):
        A, B = rng.standard_normal((2, 3, 2)), rng.standard_normal((3, 2, 2))
        K = kronecker(A, B)
        assert K.shape == (6, 6, 4)
        for i in np.ndindex(*A.shape):
            for j in np.ndindex(*B.shape):
                g = tuple(a * b + c for a, b, c in zip(i, B.shape, j))
                assert K[g] == A[i] * B[j]
        with pytest.raises(ValueError):
            kronecker(np.zeros(2), np.zeros((2, 2)))

    def test_khatri_rao(self, rng):
        assert np.array_equal(khatri_rao(np.array([[1.0], [2]]), np.array([[3.0], [4]])), [[3], [4], [6], [8]])
        A, B, C = rng.standard_normal((2, 2)), rng.standard_normal((3, 2)), rng.standard_normal((2, 2))
        assert np.allclose(khatri_rao(khatri_rao(A, B), C), khatri_rao(A, khatri_rao(B, C)), atol=1e-14)
        assert np.allclose(khatri_rao_list([A, B, C]), khatri_rao(A, khatri_rao(B, C)), atol=1e-14)
        A, B = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
        K, KR = kronecker(A, B), khatri_rao(A, B)
        for r in range(2):
            assert np.allclose(KR[:, r], K[:, r * 2 + r])
        with pytest.raises(ValueError):
            khatri_rao(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_hadamard(self, rng):
        A = np.array([[1.0, 2], [3, 4]])
        assert np.array_equal(hadamard(A, [[0, 1], [1, 0]]), [[0, 2], [3, 0]])
        c = copy_tensor(3, 3)
        assert np.array_equal(hadamard(c, c), c)
        v, u = rng.standard_normal(3), rng.standard_normal(3)
        assert np.allclose(hadamard(v, u), mode_n_matrix_product(u, diag_embed(v), 1), atol=1e-15)
        with pytest.raises(ValueError):
            hadamard(np.zeros(2), np.zeros(3))

    def test_trace_of_kron(self, rng):
        for _ in range(5):
            A, B = rng.standard_normal((3, 3)), rng.standard_normal((4, 4))
            assert abs(trace(kronecker(A, B)) - trace(A) * trace(B)) <= 1e-12 * max(1, abs(trace(A) * trace(B)))

    def test_sylvester(self, rng):
        A, X, B = rng.standard_normal((3, 4)), rng.standard_normal((4, 2)), rng.standard_normal((2, 5))
        assert np.abs(vectorize(A @ X @ B) - kronecker(A, B.T) @ vectorize(X)).max() <= 1e-12


class TestCopyTensor:
    def test_low_orders(self):
        assert np.array_equal(copy_tensor(1, 4), np.ones(4))
        assert np.array_equal(copy_tensor(2, 3), np.eye(3))

    def test_copies_basis_vectors(self):
        e = np.eye(3)[1]
        assert np.array_equal(mode_n_vector_product(copy_tensor(3, 3), e, 1), outer(e, e))

    @pytest.mark.parametrize("p,q", [(2, 2), (3, 2), (3, 3), (4, 3)])
    def test_fusion(self, p, q):
        fused = np.tensordot(copy_tensor(p, 3), copy_tensor(q, 3), axes=(0, 0))
        assert np.array_equal(fused, copy_tensor(p + q - 2, 3))

    def test_bad_args(self):
        with pytest.raises(ValueError):
            copy_tensor(0, 2)


class TestDiag:
    def test_examples(self):
        assert np.array_equal(diag_embed([1, 2]), [[1, 0], [0, 2]])
        assert np.array_equal(diag_extract([[1, 2], [3, 4]]), [1, 4])

    def test_product(self, rng):
        v, u = rng.standard_normal(3), rng.standard_normal(3)
        assert np.allclose(diag_embed(v) @ diag_embed(u), diag_embed(v * u), atol=1e-15)
        assert np.array_equal(diag_extract(diag_embed(v)), v)

    def test_extract_is_copy_contraction(self, rng):
        A = rng.standard_normal((3, 3))
        ref = np.einsum("ij,ijk->k", A, copy_tensor(3, 3))
        assert np.allclose(diag_extract(A), ref, atol=0)
        with pytest.raises(ValueError):
            diag_extract(np.zeros((2, 3)))


class TestPolyEval:
    def test_quadratic_identity(self, rng):
        x = rng.standard_normal(4)
        assert np.isclose(poly_eval(copy_tensor(2, 4), x), x @ x, rtol=1e-14)

    def test_append_one(self):
        T = np.zeros((3, 3))
        T[0, 0] = 1.0
        assert poly_eval(T, [1.5, -2.0], homogeneous=False) == 2.25
        T = np.zeros((3, 3))
        T[2, 2] = 4.0  # the constant term
        T[0, 2] = 1.0
        assert poly_eval(T, [1.5, -2.0], homogeneous=False) == 5.5

    def test_cubic_loop(self, rng):
        T = rng.standard_normal((2, 2, 2))
        x = np.array([0.5, -1.0])
        ref = sum(T[i, j, k] * x[i] * x[j] * x[k] for i, j, k in itertools.product(range(2), repeat=3))
        assert np.isclose(poly_eval(T, x), ref, atol=1e-14)

    def test_errors(self):
        with pytest.raises(ValueError):
            poly_eval(np.zeros((2, 3)), [1, 2])
        with pytest.raises(ValueError):
            poly_eval(np.zeros((3, 3)), [1, 2])
