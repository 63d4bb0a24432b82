"""Probability tensors and TT Born machines.

A Born machine stores unnormalized square-root amplitudes as a TT; the
probability of a configuration is its squared TT entry divided by the
normalizer ``zeta``, the squared Frobenius norm of the TT.  Normalizers and
marginals are computed with R^2 x R^2 transfer contractions, never by forming
the dense tensor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .tt import TT, tt_entry

SUM_TOL = 1e-10
MAX_MARGINAL_SIZE = 10**6


class InvalidDistribution(ValueError):
    pass


@dataclass(frozen=True)
class ProbTensor:
    t: np.ndarray

    @property
    def shape(self):
        return self.t.shape


def prob_validate(t: np.ndarray) -> ProbTensor:
    """Wrap ``t`` as a distribution, rejecting negative entries or a bad total."""
    t = np.array(t, dtype=np.float64)
    if not np.all(np.isfinite(t)):
        raise InvalidDistribution("distribution has non-finite entries")
    neg = np.argwhere(t < 0)
    if neg.size:
        idx = tuple(int(i) for i in neg[0])
        raise InvalidDistribution(f"negative entry {t[idx]!r} at index {idx}")
    total = float(t.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise InvalidDistribution(f"entries sum to {total!r}, not 1")
    return ProbTensor(t)


def _modes(modes: Iterable[int], order: int) -> list[int]:
    modes = sorted({int(m) for m in modes})
    for m in modes:
        if not 1 <= m <= order:
            raise ValueError(f"mode {m} out of range for order {order}")
    return modes


def marginal(p: ProbTensor, keep: Iterable[int]) -> ProbTensor:
    """Sum out every mode not in ``keep``; kept modes stay in ascending order."""
    keep = _modes(keep, p.t.ndim)
    if not keep:
        raise ValueError("marginal needs at least one kept mode")
    drop = tuple(a for a in range(p.t.ndim) if a + 1 not in keep)
    return prob_validate(p.t.sum(axis=drop))


def conditional(p: ProbTensor, given: Mapping[int, int]) -> ProbTensor:
    """Distribution of the remaining modes given fixed values ``{mode: index}``."""
    _modes(given, p.t.ndim)
    idx = tuple(given.get(a + 1, slice(None)) for a in range(p.t.ndim))
    s = p.t[idx]
    z = float(np.sum(s))
    if z <= 0.0:
        raise InvalidDistribution(f"conditioning event {dict(given)} has probability zero")
    return prob_validate(s / z)


# ---------------------------------------------------------------- Born machines

class BornMachine:
    """Distribution ``P(i) = tt_entry(i)**2 / zeta`` over a TT of amplitudes."""

    def __init__(self, tt: TT):
        self.tt = tt

    @cached_property
    def zeta(self) -> float:
        return born_normalizer(self)

    @property
    def dims(self):
        return self.tt.dims


def born_normalizer(b: BornMachine) -> float:
    """Sum of squared amplitudes by a left-to-right transfer contraction."""
    env = np.ones((1, 1))
    for c in b.tt.cores:
        # env'[s, t] = sum_{r, u, i} env[r, u] G[r, i, s] G[u, i, t]
        env = np.einsum("ru,ris,uit->st", env, c, c)
    return float(env[0, 0])


def born_prob(b: BornMachine, idx: Sequence[int]) -> float:
    return tt_entry(b.tt, idx) ** 2 / b.zeta


def born_marginal(b: BornMachine, keep: Iterable[int]) -> ProbTensor:
    """Marginal over the ``keep`` modes (ascending order).

    Summed sites contribute ``sum_i G[:, i, :] (x) G[:, i, :]``; kept sites keep
    the physical index open, shared by both copies of the core.
    """
    N = b.tt.order
    keep = _modes(keep, N)
    if not keep:
        raise ValueError("marginal needs at least one kept mode")
    size = math.prod(b.dims[m - 1] for m in keep)
    if size > MAX_MARGINAL_SIZE:
        raise ValueError(f"marginal would have {size} entries, above the cap {MAX_MARGINAL_SIZE}")
    env = np.ones((1, 1, 1))  # (kept configurations, R, R)
    for n, c in enumerate(b.tt.cores, start=1):
        if n in keep:
            env = np.einsum("kru,ris,uit->kist", env, c, c)
            env = env.reshape(-1, c.shape[2], c.shape[2])
        else:
            env = np.einsum("kru,ris,uit->kst", env, c, c)
    out = env[:, 0, 0].reshape([b.dims[m - 1] for m in keep]) / b.zeta
    # entries are sums of squares; clip roundoff below zero
    return prob_validate(np.clip(out, 0.0, None))


def born_conditional(b: BornMachine, given: Mapping[int, int]) -> ProbTensor:
    """Distribution of the free modes given ``{mode: index}``.

    Fixing a site slices its core; the sliced machine's normalizer is the
    proportionality constant, so the result is its full distribution.
    """
    N = b.tt.order
    _modes(given, N)
    free = [n for n in range(1, N + 1) if n not in given]
    cores = []
    for n, c in enumerate(b.tt.cores, start=1):
        cores.append(c[:, given[n]:given[n] + 1, :] if n in given else c)
    sliced = BornMachine(TT(tuple(cores)))
    if not sliced.zeta > 0.0:
        raise InvalidDistribution(f"conditioning event {dict(given)} has probability zero")
    if not free:
        return prob_validate(np.array(1.0))
    return born_marginal(sliced, free)


def born_dense(b: BornMachine) -> ProbTensor:
    """Full distribution as a dense tensor (small machines only)."""
    return born_marginal(b, range(1, b.tt.order + 1))
