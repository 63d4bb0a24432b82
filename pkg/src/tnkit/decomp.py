"""CP and Tucker models: reconstruction, unfolding, gradient-descent CP fitting and HOSVD."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dense import khatri_rao_list, matricize, mode_n_matrix_product
from .linalg import numerical_rank, truncated_svd


@dataclass(frozen=True)
class CPForm:
    factors: tuple[np.ndarray, ...]

    def __post_init__(self):
        fs = tuple(np.asarray(f, dtype=np.float64) for f in self.factors)
        if not fs:
            raise ValueError("CP form needs at least one factor")
        if any(f.ndim != 2 for f in fs):
            raise ValueError("CP factors must be matrices")
        if len({f.shape[1] for f in fs}) != 1 or fs[0].shape[1] < 1:
            raise ValueError(f"CP factors must share a positive column count, got {[f.shape for f in fs]}")
        object.__setattr__(self, "factors", fs)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors)


@dataclass(frozen=True)
class TuckerForm:
    core: np.ndarray
    factors: tuple[np.ndarray, ...]
    orthogonal: tuple[bool, ...] = ()
    discarded: tuple[float, ...] = ()  # per-mode discarded singular mass (HOSVD)

    def __post_init__(self):
        core = np.asarray(self.core, dtype=np.float64)
        fs = tuple(np.asarray(f, dtype=np.float64) for f in self.factors)
        if core.ndim != len(fs):
            raise ValueError(f"core of order {core.ndim} with {len(fs)} factors")
        for n, f in enumerate(fs):
            if f.ndim != 2 or f.shape[1] != core.shape[n]:
                raise ValueError(f"factor {n + 1} has shape {f.shape}, core mode size {core.shape[n]}")
        orth = tuple(self.orthogonal) or (False,) * len(fs)
        for f, o in zip(fs, orth):
            if o and not np.allclose(f.T @ f, np.eye(f.shape[1]), atol=1e-10):
                raise ValueError("factor flagged orthogonal does not have orthonormal columns")
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "factors", fs)
        object.__setattr__(self, "orthogonal", orth)
        object.__setattr__(self, "discarded", tuple(self.discarded))

    @property
    def ranks(self) -> tuple[int, ...]:
        return self.core.shape


# ---------------------------------------------------------------- CP

def cp_reconstruct(c: CPForm) -> np.ndarray:
    """Sum over r of the outer products of the r-th factor columns."""
    R = c.rank
    out = np.ones((1, R))
    for f in c.factors:
        out = np.einsum("ar,ir->air", out, f).reshape(-1, R)
    return out.sum(axis=1).reshape(c.shape)


def cp_unfold(c: CPForm, n: int) -> np.ndarray:
    """Mode-n unfolding ``A_n (A_1 kr ... skip n ... kr A_N)^T``."""
    N = len(c.factors)
    if not 1 <= n <= N:
        raise ValueError(f"mode {n} out of range for an order-{N} CP form")
    others = [f for k, f in enumerate(c.factors) if k != n - 1]
    if not others:
        return c.factors[0].sum(axis=1, keepdims=True)
    return c.factors[n - 1] @ khatri_rao_list(others).T


def cp_loss(T: np.ndarray, c: CPForm) -> float:
    r = np.asarray(T, dtype=np.float64) - cp_reconstruct(c)
    return float(np.sum(r * r))


def cp_gradient(T: np.ndarray, c: CPForm) -> list[np.ndarray]:
    """Gradient of ``||T - [[A_1..A_N]]||_F^2`` with respect to each factor.

    For factor n this is ``2 ([[A]] - T)_(n) (A_1 kr ... skip n ... kr A_N)``.
    """
    resid = cp_reconstruct(c) - np.asarray(T, dtype=np.float64)
    grads = []
    for n in range(len(c.factors)):
        others = [f for k, f in enumerate(c.factors) if k != n]
        K = khatri_rao_list(others) if others else np.ones((1, c.rank))
        grads.append(2.0 * matricize(resid, [n + 1]) @ K)
    return grads


@dataclass
class CPFitResult:
    cp: CPForm
    losses: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    @property
    def loss(self) -> float:
        return self.losses[-1]


def cp_fit_gd(T: np.ndarray, rank: int, max_iters: int = 5000, tol: float = 1e-10,
              seed: int = 0, init: CPForm | None = None, step0: float = 0.1,
              armijo: float = 1e-4) -> CPFitResult:
    """Fit a rank-``rank`` CP model by gradient descent with backtracking.

    Each iteration starts at step ``step0`` and halves it until the Armijo
    condition holds, so the recorded loss never increases.  Stops when the
    relative loss change drops below ``tol`` or after ``max_iters``.
    """
    T = np.asarray(T, dtype=np.float64)
    if rank < 1:
        raise ValueError("rank must be at least 1")
    if init is None:
        rng = np.random.default_rng(seed)
        init = CPForm(tuple(rng.uniform(-1.0, 1.0, size=(d, rank)) for d in T.shape))
    factors = [f.copy() for f in init.factors]
    loss = cp_loss(T, CPForm(factors))
    res = CPFitResult(CPForm(factors), [loss])
    for it in range(1, max_iters + 1):
        grads = cp_gradient(T, CPForm(factors))
        gnorm2 = sum(float(np.sum(g * g)) for g in grads)
        if gnorm2 == 0.0:
            res.converged = True
            res.iterations = it - 1
            break
        step = step0
        while True:
            trial = [f - step * g for f, g in zip(factors, grads)]
            new_loss = cp_loss(T, CPForm(trial))
            if new_loss <= loss - armijo * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-20:
                trial, new_loss = factors, loss
                break
        change = (loss - new_loss) / max(loss, np.finfo(float).tiny)
        factors, loss = trial, new_loss
        res.losses.append(loss)
        res.iterations = it
        if change < tol or loss == 0.0:
            res.converged = True
            break
    res.cp = CPForm(tuple(factors))
    return res


def cp_rank_upper_bound(shape) -> int:
    """``min_n prod_{i != n} d_i``, an upper bound on the CP rank."""
    shape = list(shape)
    return min(int(np.prod(shape[:n] + shape[n + 1:], dtype=np.int64)) for n in range(len(shape)))


# ---------------------------------------------------------------- Tucker

def tucker_reconstruct(t: TuckerForm) -> np.ndarray:
    out = t.core
    for n, f in enumerate(t.factors):
        out = mode_n_matrix_product(out, f, n + 1)
    return out


def multilinear_rank(T: np.ndarray) -> tuple[int, ...]:
    T = np.asarray(T, dtype=np.float64)
    return tuple(numerical_rank(matricize(T, [n + 1])) for n in range(T.ndim))


def hosvd(T: np.ndarray, ranks=None, tol: float = 0.0) -> TuckerForm:
    """Higher-order SVD.

    ``ranks`` caps the rank per mode (``None`` entries mean uncapped).  ``tol``
    bounds the discarded singular mass per mode relative to ``||T||_F``; with
    neither, each mode keeps its numerical rank and the result is exact.
    """
    T = np.asarray(T, dtype=np.float64)
    N = T.ndim
    if ranks is None:
        ranks = [None] * N
    ranks = list(ranks)
    if len(ranks) != N:
        raise ValueError(f"{len(ranks)} rank caps for an order-{N} tensor")
    if any(r is not None and r <= 0 for r in ranks):
        raise ValueError("rank caps must be positive")
    delta = tol * float(np.linalg.norm(T)) / np.sqrt(N) if tol > 0 else 0.0
    factors, discarded = [], []
    for n in range(N):
        U, _, _, lost = truncated_svd(matricize(T, [n + 1]), ranks[n], delta)
        factors.append(U)
        discarded.append(lost)
    core = T
    for n, U in enumerate(factors):
        core = mode_n_matrix_product(core, U.T, n + 1)
    return TuckerForm(core, tuple(factors), (True,) * N, tuple(discarded))


def tucker_orthogonalize(t: TuckerForm) -> TuckerForm:
    """QR each factor and absorb the triangular parts into the core."""
    core = t.core
    factors = []
    for n, f in enumerate(t.factors):
        Q, R = np.linalg.qr(f)
        factors.append(Q)
        core = mode_n_matrix_product(core, R, n + 1)
    return TuckerForm(core, tuple(factors), (True,) * len(factors))
