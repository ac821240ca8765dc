"""Soft second-price mechanism for general block size k.

The allocation draws k users one round at a time, each round picking a
remaining user with probability proportional to w_i = exp(m b_i). The
inclusion probability of user i is the sum over rounds t of the probability
that i is drawn exactly at round t; that probability is a sum over ordered
(t-1)-prefixes of other users. Prefixes drawing the same set of users reach the
same remaining weight at round t, so the sum is accumulated per set (with the
ordered recursion inside) instead of per ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _rng
from .mech_core import Mechanism, MechanismParams, myerson_payment
from .ssp_k1 import revenue as _revenue
from .ssp_k1 import theta_all

ENUMERATION_LIMIT = 10**7
E_RATIO = math.e / (math.e - 1.0)


class EnumerationTooLarge(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class SamplingOutcome:
    order: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.order)) != len(self.order):
            raise ValueError("sampling vector entries must be distinct")


def enumeration_cost(n: int, k: int) -> int:
    """Number of ordered prefixes the round-by-round formula sums over for one user."""
    return sum(math.perm(n - 1, t - 1) for t in range(1, k + 1))


def check_enumeration(n: int, k: int, limit: int = ENUMERATION_LIMIT):
    cost = enumeration_cost(n, k)
    if cost > limit:
        raise EnumerationTooLarge(
            f"exact allocation for n={n}, k={k} needs {cost} prefixes (> {limit}); use Monte Carlo frequencies"
        )


def inclusion_probability(w_self, w_others, k: int):
    """P(user drawn within k rounds) given her weight and the others' weights.

    ``w_self`` has shape S, ``w_others`` has shape S' + (n-1,) with S'
    broadcastable to S. Complex weights are allowed (used for complex-step
    derivatives).
    """
    w_self = np.asarray(w_self)
    w_others = np.asarray(w_others)
    n_others = w_others.shape[-1]
    cols = [w_others[..., j] for j in range(n_others)]
    total = w_self + w_others.sum(axis=-1)
    acc = w_self / total
    if k == 1 or n_others == 0:
        return acc * np.ones_like(total)

    prob = {(): 1.0}
    remaining = {(): total}
    everyone = frozenset(range(n_others))
    for size in range(1, min(k, n_others + 1)):
        new_prob, new_remaining = {}, {}
        for subset in combinations(range(n_others), size):
            p = 0.0
            for pos, j in enumerate(subset):
                prev = subset[:pos] + subset[pos + 1:]
                p = p + prob[prev] * cols[j] / remaining[prev]
            # remaining weight summed directly, no subtraction
            rest = w_self
            for j in everyone.difference(subset):
                rest = rest + cols[j]
            new_prob[subset] = p
            new_remaining[subset] = rest
            acc = acc + p * w_self / rest
        prob, remaining = new_prob, new_remaining
    return acc


def _weights(b, m, shift):
    return np.exp(m * (np.asarray(b, dtype=float) - shift))


def alloc_exact(b, k: int, m: float, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """Exact inclusion probabilities under k rounds of weighted sampling without replacement."""
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    check_enumeration(n, k, limit)
    if k == n:
        return np.ones_like(b)
    w = _weights(b, m, b.max(axis=-1, keepdims=True))
    out = np.empty_like(b)
    for i in range(n):
        others = np.delete(w, i, axis=-1)
        out[..., i] = inclusion_probability(w[..., i], others, k)
    return out


def alloc_slice(b, i: int, k: int, m: float):
    """t -> a_i(t, b_-i) as a vectorized function (the trailing axes of t are own-bid grids)."""
    b = np.asarray(b, dtype=float)
    others = _weights(np.delete(b, i, axis=-1), m, 1.0)

    def fn(t):
        t = np.asarray(t)
        extra = t.ndim - (b.ndim - 1)
        wo = others.reshape(others.shape[:-1] + (1,) * extra + others.shape[-1:])
        return inclusion_probability(np.exp(m * (t - 1.0)), wo, k)

    return fn


def draw_blocks(b, k: int, m: float, draws: int, seed) -> np.ndarray:
    """``draws`` independent sampling vectors, shape ``(draws, k)``."""
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    rng = _rng.as_generator(seed)
    w = np.broadcast_to(_weights(b, m, b.max()), (draws, n)).copy()
    rows = np.arange(draws)
    order = np.empty((draws, k), dtype=np.int64)
    for t in range(k):
        cum = np.cumsum(w, axis=1)
        u = rng.random(draws) * cum[:, -1]
        pick = np.argmax(cum > u[:, None], axis=1)
        order[:, t] = pick
        w[rows, pick] = 0.0
    return order


def draw_block(b, k: int, m: float, seed) -> SamplingOutcome:
    return SamplingOutcome(tuple(int(j) for j in draw_blocks(b, k, m, 1, seed)[0]))


def alloc_mc(b, k: int, m: float, draws: int, seed, chunk: int = 1 << 17):
    """Monte Carlo inclusion frequencies and their standard errors."""
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]

    def work(stream, size):
        order = draw_blocks(b, k, m, size, stream)
        return np.bincount(order.ravel(), minlength=n).astype(np.int64)

    counts = _rng.chunked_sum(work, draws, seed, chunk)
    freq = counts / draws
    se = np.sqrt(freq * (1.0 - freq) / draws)
    return freq, se


def pay_k(b, i: int, k: int, m: float, tol: float = 1e-6):
    """Myerson payment of user i under the k-round allocation."""
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    check_enumeration(n, k)
    if k == n:
        return np.zeros(b.shape[:-1]) if b.ndim > 1 else 0.0
    return myerson_payment(alloc_slice(b, i, k, m), b[..., i], tol=tol)


# -- threshold constants ---------------------------------------------------------


@dataclass(frozen=True)
class ThresholdConstants:
    lambda0: float
    m_sharp: float
    D_value: float
    f_value: float


def D(m: float, lam: float) -> float:
    """1 - e^m ln(lam / (lam - 1))."""
    return 1.0 - math.exp(m) * math.log(lam / (lam - 1.0))


def m_sharp(lambda0: float) -> float:
    _check_lambda(lambda0)
    return min(0.5 * math.log(1.0 / math.log(lambda0 / (lambda0 - 1.0))), 1.0)


def _check_lambda(lambda0):
    if not lambda0 > E_RATIO:
        raise DomainError(f"lambda0 must exceed e/(e-1) = {E_RATIO:.6f}, got {lambda0}")


def threshold_constants(lambda0: float) -> ThresholdConstants:
    _check_lambda(lambda0)
    m = m_sharp(lambda0)
    d = D(m, lambda0)
    f = m * d * math.exp(-m) * math.exp(-math.exp(m) / (lambda0 - 1.0))
    return ThresholdConstants(lambda0, m, d, f)


def derivative_floor(n: int, k: int, m: float) -> float:
    """Lower bound (up to a 1 - o(1) factor) on d a_i / d b_i for n > k."""
    return (k / n) * m * D(m, n / k) * math.exp(-m) * math.exp(-math.exp(m) * k / (n - k))


# -- mechanism -------------------------------------------------------------------


class SoftSecondPriceK(Mechanism):
    """k-round logit sampling, Myerson payments and the shared variation term."""

    def __init__(self, params: MechanismParams, tol: float = 1e-6):
        check_enumeration(params.n, params.k)
        self.params = params
        self.n = params.n
        self.k = params.k
        self.tol = tol

    def allocation(self, b):
        return alloc_exact(b, self.k, self.params.m)

    def base_payment(self, b):
        b = np.asarray(b, dtype=float)
        out = np.empty_like(b)
        for i in range(self.n):
            out[..., i] = pay_k(b, i, self.k, self.params.m, self.tol)
        return out

    def theta(self, b):
        if self.params.h == 0 or self.n < 2:
            return np.zeros(np.shape(b))
        return theta_all(b, self.params.h, self.params.c)

    def payment(self, b):
        p = self.base_payment(b)
        if self.params.h == 0:
            return p
        return p + self.theta(b) / self.allocation(b)

    def revenue(self, b):
        if self.params.h == 0 or self.n < 2:
            return np.zeros(np.shape(b)[:-1])
        return _revenue(b, self.params.h, self.params.c)

    def user_terms(self, b, i):
        b = np.asarray(b, dtype=float)
        a = alloc_slice(b, i, self.k, self.params.m)(b[..., i])
        p = pay_k(b, i, self.k, self.params.m, self.tol)
        if self.params.h:
            sl = theta_all(b, self.params.h, self.params.c)[..., i]
            p = p + sl / a
        return a, p

    def allocation_slope(self, b, i, eps=1e-20):
        # complex-step derivative of the own-bid slice
        b = np.asarray(b, dtype=float)
        fn = alloc_slice(b, i, self.k, self.params.m)
        return np.imag(fn(b[..., i] + 1j * eps)) / eps

    def __repr__(self):
        p = self.params
        return f"SoftSecondPriceK(n={p.n}, k={p.k}, m={p.m}, h={p.h}, c={p.c})"


def make_mechanism(params: MechanismParams) -> Mechanism:
    """Closed-form mechanism for k = 1, round-by-round sampling otherwise."""
    if params.k == 1:
        from .ssp_k1 import SoftSecondPriceK1

        return SoftSecondPriceK1(params)
    return SoftSecondPriceK(params)
