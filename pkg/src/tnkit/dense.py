"""Dense tensor algebra.

Tensors are plain ``numpy.ndarray`` objects of dtype float64.  C order is the
lexicographic layout used everywhere in the package: the flat offset of the
0-based index ``(i_1, ..., i_N)`` is ``sum_k i_k * prod_{j>k} d_j``.

Modes are 1-based at the API surface, indices are 0-based.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


def as_tensor(values, shape: Sequence[int] | None = None) -> np.ndarray:
    """Return ``values`` as a float64 array, optionally reshaped to ``shape``."""
    t = np.array(values, dtype=np.float64)
    if shape is not None:
        shape = tuple(int(d) for d in shape)
        if any(d < 1 for d in shape):
            raise ValueError(f"dimensions must be positive, got {shape}")
        if t.size != int(np.prod(shape, dtype=np.int64)):
            raise ValueError(f"{t.size} values cannot fill shape {shape}")
        t = t.reshape(shape)
    return t


def zeros(shape: Sequence[int]) -> np.ndarray:
    return np.zeros(tuple(shape), dtype=np.float64)


def flat_offset(index: Sequence[int], shape: Sequence[int]) -> int:
    """Lexicographic flat offset of a 0-based multi-index."""
    if len(index) != len(shape):
        raise ValueError("index and shape have different lengths")
    off = 0
    for i, d in zip(index, shape):
        if not 0 <= i < d:
            raise IndexError(f"index {tuple(index)} out of range for shape {tuple(shape)}")
        off = off * d + int(i)
    return off


def unravel_offset(offset: int, shape: Sequence[int]) -> tuple[int, ...]:
    """Inverse of :func:`flat_offset`."""
    out = []
    for d in reversed(shape):
        offset, r = divmod(offset, d)
        out.append(r)
    if offset:
        raise IndexError("offset out of range")
    return tuple(reversed(out))


def _check_mode(n: int, order: int) -> int:
    if not 1 <= n <= order:
        raise ValueError(f"mode {n} out of range for an order-{order} tensor")
    return n - 1


def _check_modes(modes: Iterable[int], order: int) -> list[int]:
    modes = [int(m) for m in modes]
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated mode in {modes}")
    return [_check_mode(m, order) for m in modes]


def permute(T: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Rearrange the modes of ``T``; mode ``k`` of the result is mode ``perm[k]`` of ``T``."""
    T = np.asarray(T, dtype=np.float64)
    if len(perm) != T.ndim:
        raise ValueError(f"permutation of length {len(perm)} for an order-{T.ndim} tensor")
    axes = _check_modes(perm, T.ndim)
    return np.ascontiguousarray(np.transpose(T, axes))


def matricize(T: np.ndarray, rows: Iterable[int]) -> np.ndarray:
    """Unfold ``T`` into a matrix with the modes in ``rows`` indexing the rows.

    Row and column modes are both taken in ascending order and flattened
    lexicographically.  ``rows`` may be all modes (one column) or empty (one row).
    """
    T = np.asarray(T, dtype=np.float64)
    row_axes = sorted(_check_modes(rows, T.ndim))
    col_axes = [a for a in range(T.ndim) if a not in row_axes]
    nrows = int(np.prod([T.shape[a] for a in row_axes], dtype=np.int64))
    return np.transpose(T, row_axes + col_axes).reshape(nrows, -1)


def unmatricize(M: np.ndarray, rows: Iterable[int], shape: Sequence[int]) -> np.ndarray:
    """Fold a matrix produced by :func:`matricize` back into a tensor of ``shape``."""
    shape = tuple(shape)
    row_axes = sorted(_check_modes(rows, len(shape)))
    col_axes = [a for a in range(len(shape)) if a not in row_axes]
    axes = row_axes + col_axes
    T = np.asarray(M, dtype=np.float64).reshape([shape[a] for a in axes])
    return np.ascontiguousarray(np.transpose(T, np.argsort(axes)))


def vectorize(T: np.ndarray) -> np.ndarray:
    return np.asarray(T, dtype=np.float64).reshape(-1).copy()


def fiber(T: np.ndarray, n: int, index: Sequence[int]) -> np.ndarray:
    """Mode-``n`` fiber: all indices fixed except mode ``n``.

    ``index`` gives the fixed indices of the other modes, in mode order.
    """
    T = np.asarray(T, dtype=np.float64)
    a = _check_mode(n, T.ndim)
    if len(index) != T.ndim - 1:
        raise ValueError("a fiber fixes all but one index")
    idx = list(index)
    idx.insert(a, slice(None))
    return T[tuple(idx)].copy()


def slice_(T: np.ndarray, modes: tuple[int, int], index: Sequence[int]) -> np.ndarray:
    """Slice keeping the two ``modes`` free and fixing all other indices."""
    T = np.asarray(T, dtype=np.float64)
    free = sorted(_check_modes(modes, T.ndim))
    if len(free) != 2 or len(index) != T.ndim - 2:
        raise ValueError("a slice keeps exactly two modes free")
    it = iter(index)
    idx = tuple(slice(None) if a in free else next(it) for a in range(T.ndim))
    return T[idx].copy()


def mode_n_matrix_product(X: np.ndarray, M: np.ndarray, n: int) -> np.ndarray:
    """``X x_n M``: contract mode ``n`` of ``X`` with the columns of ``M`` (m x d_n)."""
    X = np.asarray(X, dtype=np.float64)
    M = np.asarray(M, dtype=np.float64)
    a = _check_mode(n, X.ndim)
    if M.ndim != 2 or M.shape[1] != X.shape[a]:
        raise ValueError(f"matrix of shape {M.shape} does not act on mode {n} of size {X.shape[a]}")
    Y = np.tensordot(M, X, axes=([1], [a]))
    return np.ascontiguousarray(np.moveaxis(Y, 0, a))


def mode_n_vector_product(X: np.ndarray, v: np.ndarray, n: int) -> np.ndarray:
    """``X x_n v``: contracts mode ``n`` away; later modes shift down by one."""
    X = np.asarray(X, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    a = _check_mode(n, X.ndim)
    if v.ndim != 1 or v.shape[0] != X.shape[a]:
        raise ValueError(f"vector of length {v.shape} does not act on mode {n} of size {X.shape[a]}")
    return np.tensordot(X, v, axes=([a], [0]))


def _same_shape(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")


def inner(A: np.ndarray, B: np.ndarray) -> float:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _same_shape(A, B)
    return float(np.dot(A.ravel(), B.ravel()))


def frobenius_norm(A: np.ndarray) -> float:
    return float(np.sqrt(inner(A, A)))


def outer(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``(A o B)[i.., j..] = A[i..] B[j..]``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    return np.multiply.outer(A, B)


def partial_trace(T: np.ndarray, m1: int, m2: int) -> np.ndarray:
    T = np.asarray(T, dtype=np.float64)
    a1, a2 = _check_modes((m1, m2), T.ndim)
    if T.shape[a1] != T.shape[a2]:
        raise ValueError(f"cannot trace modes of sizes {T.shape[a1]} and {T.shape[a2]}")
    out = np.trace(T, axis1=a1, axis2=a2)
    return np.asarray(out, dtype=np.float64)


def trace(A: np.ndarray) -> float:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("trace needs a matrix")
    return float(partial_trace(A, 1, 2))


def kronecker(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Kronecker product of two tensors of equal order.

    Mode ``k`` of the result has size ``a_k * b_k`` and grouped index ``i_k * b_k + j_k``.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != B.ndim:
        raise ValueError(f"order mismatch: {A.ndim} vs {B.ndim}")
    return np.kron(A, B)


def khatri_rao(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Column-wise Kronecker product of an m x R and an n x R matrix."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValueError(f"khatri_rao needs matrices with equal column counts, got {A.shape} and {B.shape}")
    return np.einsum("ir,jr->ijr", A, B).reshape(A.shape[0] * B.shape[0], A.shape[1])


def khatri_rao_list(mats: Sequence[np.ndarray]) -> np.ndarray:
    out = np.asarray(mats[0], dtype=np.float64)
    for M in mats[1:]:
        out = khatri_rao(out, M)
    return out


def hadamard(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    _same_shape(A, B)
    return A * B


def copy_tensor(order: int, dim: int) -> np.ndarray:
    """Hyper-diagonal tensor: 1 where all indices agree, 0 elsewhere."""
    if order < 1 or dim < 1:
        raise ValueError("copy tensor needs order >= 1 and dim >= 1")
    T = np.zeros((dim,) * order)
    idx = np.arange(dim)
    T[(idx,) * order] = 1.0
    return T


def diag_embed(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("diag_embed needs a vector")
    return np.diag(v)


def diag_extract(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"diag_extract needs a square matrix, got shape {A.shape}")
    return np.diag(A).copy()


def poly_eval(T: np.ndarray, x: np.ndarray, homogeneous: bool = True) -> float:
    """Evaluate ``T x_1 x x_2 x ... x_N x``.

    With ``homogeneous=False`` every mode of ``T`` has size ``len(x) + 1`` and a
    constant 1 is appended to ``x``, giving a general polynomial of degree <= N.
    """
    T = np.asarray(T, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a vector")
    if len(set(T.shape)) > 1:
        raise ValueError(f"polynomial tensor must be cubical, got shape {T.shape}")
    if not homogeneous:
        x = np.append(x, 1.0)
    if T.ndim and T.shape[0] != x.shape[0]:
        raise ValueError(f"input of length {x.shape[0]} for modes of size {T.shape[0]}")
    out = T
    for _ in range(T.ndim):
        out = out @ x
    return float(out)
