"""Tensor trains (TT / MPS) and matrix product operators (MPO).

Cores are order-3 arrays ``R_{n-1} x d_n x R_n`` (order-4 ``R_{n-1} x I_n x J_n x R_n``
for MPOs) with boundary ranks 1.  TT values are only ever compared through
dense reconstruction or gauge-invariant quantities; cores are not unique.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import svd, truncation_rank


@dataclass(frozen=True)
class TT:
    cores: tuple[np.ndarray, ...]
    center: int | None = None  # 1-based orthogonality center, if known

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=np.float64) for c in self.cores)
        if not cores:
            raise ValueError("a TT needs at least one core")
        if any(c.ndim != 3 for c in cores):
            raise ValueError("TT cores must be order-3")
        if cores[0].shape[0] != 1 or cores[-1].shape[2] != 1:
            raise ValueError("boundary TT ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[2] != cores[k + 1].shape[0]:
                raise ValueError(f"rank mismatch between cores {k + 1} and {k + 2}")
        if self.center is not None and not 1 <= self.center <= len(cores):
            raise ValueError(f"center {self.center} out of range")
        object.__setattr__(self, "cores", cores)

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        """Internal ranks ``(R_1, ..., R_{N-1})``."""
        return tuple(c.shape[2] for c in self.cores[:-1])


@dataclass(frozen=True)
class MPO:
    cores: tuple[np.ndarray, ...]

    def __post_init__(self):
        cores = tuple(np.asarray(c, dtype=np.float64) for c in self.cores)
        if not cores or any(c.ndim != 4 for c in cores):
            raise ValueError("MPO cores must be order-4")
        if cores[0].shape[0] != 1 or cores[-1].shape[3] != 1:
            raise ValueError("boundary MPO ranks must be 1")
        for k in range(len(cores) - 1):
            if cores[k].shape[3] != cores[k + 1].shape[0]:
                raise ValueError(f"rank mismatch between cores {k + 1} and {k + 2}")
        object.__setattr__(self, "cores", cores)

    @property
    def row_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def col_dims(self) -> tuple[int, ...]:
        return tuple(c.shape[2] for c in self.cores)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(c.shape[3] for c in self.cores[:-1])


def random_tt(dims: Sequence[int], ranks: Sequence[int], seed=0) -> TT:
    """TT with i.i.d. standard normal cores."""
    rng = np.random.default_rng(seed)
    rs = [1, *ranks, 1]
    if len(rs) != len(dims) + 1:
        raise ValueError("need len(dims) - 1 ranks")
    return TT(tuple(rng.standard_normal((rs[k], d, rs[k + 1])) for k, d in enumerate(dims)))


# ---------------------------------------------------------------- orthogonality

def is_left_orthogonal(core: np.ndarray, atol: float = 1e-10) -> bool:
    M = core.reshape(-1, core.shape[-1])
    return np.allclose(M.T @ M, np.eye(M.shape[1]), atol=atol)


def is_right_orthogonal(core: np.ndarray, atol: float = 1e-10) -> bool:
    M = core.reshape(core.shape[0], -1)
    return np.allclose(M @ M.T, np.eye(M.shape[0]), atol=atol)


def is_canonical(t: TT, j: int, atol: float = 1e-10) -> bool:
    return (all(is_left_orthogonal(c, atol) for c in t.cores[: j - 1])
            and all(is_right_orthogonal(c, atol) for c in t.cores[j:]))


def _qr_left(cores: list[np.ndarray], k: int) -> None:
    """Make core k left-orthogonal, pushing the remainder into core k+1."""
    r0, d, r1 = cores[k].shape
    Q, R = np.linalg.qr(cores[k].reshape(r0 * d, r1))
    cores[k] = Q.reshape(r0, d, Q.shape[1])
    cores[k + 1] = np.tensordot(R, cores[k + 1], axes=(1, 0))


def _qr_right(cores: list[np.ndarray], k: int) -> None:
    """Make core k right-orthogonal, pushing the remainder into core k-1."""
    r0, d, r1 = cores[k].shape
    Q, R = np.linalg.qr(cores[k].reshape(r0, d * r1).T)
    cores[k] = Q.T.reshape(Q.shape[1], d, r1)
    cores[k - 1] = np.tensordot(cores[k - 1], R.T, axes=(2, 0))


def tt_canonicalize(t: TT, j: int) -> TT:
    """Gauge ``t`` into canonical form with orthogonality center ``j`` (1-based)."""
    N = t.order
    if not 1 <= j <= N:
        raise ValueError(f"center {j} out of range 1..{N}")
    cores = list(t.cores)
    for k in range(j - 1):
        _qr_left(cores, k)
    for k in range(N - 1, j - 1, -1):
        _qr_right(cores, k)
    return TT(tuple(cores), center=j)


# ---------------------------------------------------------------- dense <-> TT

def tt_entry(t: TT, idx: Sequence[int]) -> float:
    if len(idx) != t.order:
        raise ValueError(f"index of length {len(idx)} for an order-{t.order} TT")
    v = np.ones((1,))
    for c, i in zip(t.cores, idx):
        if not 0 <= i < c.shape[1]:
            raise IndexError(f"index {tuple(idx)} out of range for dims {t.dims}")
        v = v @ c[:, i, :]
    return float(v[0])


def tt_reconstruct(t: TT) -> np.ndarray:
    out = np.ones((1, 1))
    for c in t.cores:
        out = np.tensordot(out, c, axes=(1, 0)).reshape(-1, c.shape[2])
    return out.reshape(t.dims)


def _caps(caps, n):
    if caps is None:
        return [None] * n
    if np.isscalar(caps):
        return [int(caps)] * n
    caps = list(caps)
    if len(caps) != n:
        raise ValueError(f"{len(caps)} rank caps for {n} internal ranks")
    return caps


def tt_svd(T: np.ndarray, caps=None, tol: float = 0.0) -> TT:
    """TT-SVD by successive truncated SVDs of the prefix unfoldings.

    Each step discards at most ``tol * ||T|| / sqrt(N-1)`` of singular mass, so
    the total error is at most ``tol * ||T||``.  With ``tol == 0`` and no caps
    the ranks are the numerical ranks of the prefix matricizations.
    """
    T = np.asarray(T, dtype=np.float64)
    if T.ndim < 1:
        raise ValueError("tt_svd needs a tensor of order >= 1")
    N = T.ndim
    caps = _caps(caps, N - 1)
    delta = tol * float(np.linalg.norm(T)) / np.sqrt(N - 1) if tol > 0 and N > 1 else 0.0
    cores = []
    r = 1
    C = T.reshape(1, -1)
    for k in range(N - 1):
        d = T.shape[k]
        C = C.reshape(r * d, -1)
        U, s, Vt = svd(C)
        rk = truncation_rank(s, caps[k], delta)
        cores.append(U[:, :rk].reshape(r, d, rk))
        C = s[:rk, None] * Vt[:rk]
        r = rk
    cores.append(C.reshape(r, T.shape[-1], 1))
    return TT(tuple(cores), center=N)


def tt_round(t: TT, caps=None, tol: float = 0.0) -> TT:
    """Recompress ``t``: right-to-left QR sweep, then left-to-right truncated SVDs.

    Gives the same tensor as ``tt_svd(tt_reconstruct(t), caps, tol)`` without
    forming the dense tensor.
    """
    N = t.order
    caps = _caps(caps, N - 1)
    cores = list(t.cores)
    for k in range(N - 1, 0, -1):
        _qr_right(cores, k)
    norm = float(np.linalg.norm(cores[0]))
    delta = tol * norm / np.sqrt(N - 1) if tol > 0 and N > 1 else 0.0
    for k in range(N - 1):
        r0, d, r1 = cores[k].shape
        U, s, Vt = svd(cores[k].reshape(r0 * d, r1))
        rk = truncation_rank(s, caps[k], delta)
        cores[k] = U[:, :rk].reshape(r0, d, rk)
        cores[k + 1] = np.tensordot(s[:rk, None] * Vt[:rk], cores[k + 1], axes=(1, 0))
    return TT(tuple(cores), center=N)


# ---------------------------------------------------------------- ALS

@dataclass
class ALSResult:
    tt: TT
    losses: list[float] = field(default_factory=list)  # ||T||^2 - ||core||^2 after each core update
    rel_error: float = 0.0  # ||T - tt|| / ||T|| of the returned TT


def _env_project(T: np.ndarray, cores, k: int) -> np.ndarray:
    """Contract T with every core except core k (0-based): shape (R_{k-1}, d_k, R_k)."""
    E = T.reshape((1,) + T.shape + (1,))
    for c in cores[:k]:
        E = np.tensordot(c, E, axes=([0, 1], [0, 1]))
    for c in reversed(cores[k + 1:]):
        E = np.tensordot(E, c, axes=([E.ndim - 2, E.ndim - 1], [1, 2]))
    return E


def tt_als_fit(T: np.ndarray, ranks: Sequence[int], sweeps: int = 3, seed=0,
               init: TT | None = None) -> ALSResult:
    """Single-site TT-ALS.

    The TT is kept in canonical form with its center on the active core; each
    update replaces that core by the projection of ``T`` onto the orthonormal
    environment, which is the exact least-squares optimum.  A sweep updates
    cores 1..N-1 left to right, then N..2 right to left; a final update of
    core 1 closes the last sweep.
    """
    T = np.asarray(T, dtype=np.float64)
    N = T.ndim
    t = init if init is not None else random_tt(T.shape, ranks, seed)
    if t.dims != T.shape:
        raise ValueError(f"TT dims {t.dims} do not match tensor shape {T.shape}")
    cores = list(tt_canonicalize(t, 1).cores)
    normT2 = float(np.sum(T * T))
    losses: list[float] = []

    def update(k):
        cores[k] = _env_project(T, cores, k)
        losses.append(max(normT2 - float(np.sum(cores[k] ** 2)), 0.0))

    for _ in range(sweeps):
        for k in range(N - 1):
            update(k)
            _qr_left(cores, k)
        for k in range(N - 1, 0, -1):
            update(k)
            _qr_right(cores, k)
    update(0)
    out = TT(tuple(cores), center=1)
    # the loss trace suffers cancellation near zero; measure the final error directly
    err = float(np.linalg.norm(tt_reconstruct(out) - T))
    rel = err / np.sqrt(normT2) if normT2 > 0 else err
    return ALSResult(out, losses, rel)


# ---------------------------------------------------------------- TT algebra

def _check_dims(a: TT, b: TT) -> None:
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")


def tt_add(a: TT, b: TT) -> TT:
    """Block-diagonal core stacking; ranks add."""
    _check_dims(a, b)
    N = a.order
    if N == 1:
        return TT((a.cores[0] + b.cores[0],))
    cores = []
    for k, (ca, cb) in enumerate(zip(a.cores, b.cores)):
        if k == 0:
            c = np.concatenate([ca, cb], axis=2)
        elif k == N - 1:
            c = np.concatenate([ca, cb], axis=0)
        else:
            c = np.zeros((ca.shape[0] + cb.shape[0], ca.shape[1], ca.shape[2] + cb.shape[2]))
            c[: ca.shape[0], :, : ca.shape[2]] = ca
            c[ca.shape[0]:, :, ca.shape[2]:] = cb
        cores.append(c)
    return TT(tuple(cores))


def tt_scale(a: TT, c: float) -> TT:
    cores = list(a.cores)
    j = (a.center or 1) - 1
    cores[j] = cores[j] * c
    return TT(tuple(cores), center=a.center)


def tt_hadamard(a: TT, b: TT) -> TT:
    """Entrywise product; each core is the slice-wise Kronecker product, ranks multiply."""
    _check_dims(a, b)
    cores = []
    for ca, cb in zip(a.cores, b.cores):
        c = np.einsum("aib,cid->acibd", ca, cb)
        cores.append(c.reshape(ca.shape[0] * cb.shape[0], ca.shape[1], ca.shape[2] * cb.shape[2]))
    return TT(tuple(cores))


class Counter:
    """Records the largest intermediate array size seen by :func:`tt_inner`."""

    def __init__(self):
        self.peak = 0

    def see(self, arr: np.ndarray) -> np.ndarray:
        self.peak = max(self.peak, arr.size)
        return arr


def tt_inner(a: TT, b: TT, counter: Counter | None = None) -> float:
    """Zipper contraction: env (R_a x R_b) absorbs one core of each train at a time.

    Intermediates never exceed ``R_a * d * R_b`` entries.
    """
    _check_dims(a, b)
    see = counter.see if counter is not None else (lambda x: x)
    env = see(np.ones((1, 1)))
    for ca, cb in zip(a.cores, b.cores):
        tmp = see(np.tensordot(env, ca, axes=(0, 0)))           # (Rb, d, Ra')
        env = see(np.tensordot(tmp, cb, axes=([0, 1], [0, 1])))  # (Ra', Rb')
    return float(env[0, 0])


def tt_norm(a: TT) -> float:
    if a.center is not None:
        return float(np.linalg.norm(a.cores[a.center - 1]))
    return float(np.sqrt(max(tt_inner(a, a), 0.0)))


def tt_sum_entries(a: TT) -> float:
    v = np.ones((1,))
    for c in a.cores:
        v = v @ c.sum(axis=1)
    return float(v[0])


# ---------------------------------------------------------------- MPO

def mpo_from_dense(M: np.ndarray, row_dims: Sequence[int], col_dims: Sequence[int],
                   tol: float = 0.0, caps=None) -> MPO:
    """Decompose a matrix whose rows factor as ``row_dims`` and columns as ``col_dims``.

    Site k carries the grouped index ``i_k * J_k + j_k`` (row index slower)
    during the TT-SVD across sites.
    """
    M = np.asarray(M, dtype=np.float64)
    row_dims, col_dims = list(row_dims), list(col_dims)
    if len(row_dims) != len(col_dims):
        raise ValueError("row and column factorizations need the same number of sites")
    if M.shape != (int(np.prod(row_dims)), int(np.prod(col_dims))):
        raise ValueError(f"matrix of shape {M.shape} does not factor as {row_dims} x {col_dims}")
    N = len(row_dims)
    T = M.reshape(row_dims + col_dims)
    T = np.transpose(T, [a for k in range(N) for a in (k, N + k)])
    t = tt_svd(T.reshape([i * j for i, j in zip(row_dims, col_dims)]), caps=caps, tol=tol)
    return MPO(tuple(c.reshape(c.shape[0], i, j, c.shape[2])
                     for c, i, j in zip(t.cores, row_dims, col_dims)))


def mpo_reconstruct(m: MPO) -> np.ndarray:
    out = np.ones((1, 1, 1))  # (rows, cols, rank)
    for c in m.cores:
        r0, I, J, r1 = c.shape
        out = np.einsum("xyr,rijs->xiyjs", out, c)
        out = out.reshape(out.shape[0] * I, out.shape[2] * J, r1)
    return out[:, :, 0]


def mpo_matvec(m: MPO, v: TT) -> TT:
    """Core-wise product; output ranks are ``R_k * S_k``."""
    if m.col_dims != v.dims:
        raise ValueError(f"MPO column dims {m.col_dims} do not match TT dims {v.dims}")
    cores = []
    for a, g in zip(m.cores, v.cores):
        h = np.einsum("rijs,ajb->raisb", a, g)
        cores.append(h.reshape(a.shape[0] * g.shape[0], a.shape[1], a.shape[3] * g.shape[2]))
    return TT(tuple(cores))


def mpo_to_tt(m: MPO) -> TT:
    """View an MPO as a TT over grouped ``(i_k, j_k)`` indices."""
    return TT(tuple(c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3]) for c in m.cores))
