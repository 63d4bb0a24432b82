"""SVD helpers shared by the decomposition modules."""

from __future__ import annotations

import numpy as np

# singular values at or below this fraction of the largest one count as zero
RANK_RTOL = 1e-12


def fix_signs(U: np.ndarray, Vt: np.ndarray | None = None):
    """Flip singular vector pairs so each column of ``U`` has a positive
    largest-magnitude entry (lowest index wins ties)."""
    if U.shape[1] == 0:
        return (U, Vt) if Vt is not None else U
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs
    if Vt is None:
        return U
    return U, Vt * signs[:, None]


def svd(M: np.ndarray):
    """Thin SVD with the deterministic sign convention."""
    U, s, Vt = np.linalg.svd(np.asarray(M, dtype=np.float64), full_matrices=False)
    U, Vt = fix_signs(U, Vt)
    return U, s, Vt


def numerical_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.asarray(M, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def truncation_rank(s: np.ndarray, cap: int | None = None, delta: float = 0.0,
                    rtol: float = RANK_RTOL) -> int:
    """Smallest rank r such that the discarded tail satisfies
    ``sqrt(sum(s[r:]**2)) <= delta``, capped at ``cap``.

    With ``delta == 0`` the numerical rank (relative threshold ``rtol``) is kept.
    Always returns at least 1.
    """
    if s.size == 0:
        return 1
    if delta > 0:
        tail = np.sqrt(np.cumsum((s**2)[::-1]))[::-1]  # tail[r] = ||s[r:]||
        ok = np.nonzero(tail <= delta)[0]
        r = int(ok[0]) if ok.size else s.size
    else:
        r = int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
    if cap is not None:
        r = min(r, int(cap))
    return max(r, 1)


def truncated_svd(M: np.ndarray, cap: int | None = None, delta: float = 0.0):
    """Truncated SVD; returns ``U, s, Vt`` and the discarded singular mass."""
    U, s, Vt = svd(M)
    r = truncation_rank(s, cap, delta)
    discarded = float(np.sqrt(np.sum(s[r:] ** 2)))
    return U[:, :r], s[:r], Vt[:r], discarded


def sym_sqrt(S: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric PSD matrix via eigendecomposition."""
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or not np.allclose(S, S.T, atol=1e-12):
        raise ValueError("covariance must be a symmetric matrix")
    w, V = np.linalg.eigh(S)
    if w.min() < -1e-10 * max(1.0, abs(w).max()):
        raise ValueError("covariance must be positive semi-definite")
    V = fix_signs(V)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
