"""Soft second-price mechanism for a block of size one, with its variation term.

All functions accept a single bid vector or a batch of shape ``(..., n)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .mech_core import Mechanism, MechanismParams


def alloc_k1(b, m: float) -> np.ndarray:
    """Logit allocation a_i = exp(m b_i) / sum_j exp(m b_j)."""
    b = np.asarray(b, dtype=float)
    z = m * b
    z = z - z.max(axis=-1, keepdims=True)
    w = np.exp(z)
    return w / w.sum(axis=-1, keepdims=True)


def _log_expm1(x):
    # log(e^x - 1) for x >= 0; -inf at 0
    with np.errstate(divide="ignore"):
        return x + np.log(-np.expm1(-x))


def _log_log1p_exp(y):
    # log(log(1 + e^y)), accurate for very negative y
    with np.errstate(divide="ignore"):
        soft = np.logaddexp(0.0, y)
        return np.where(y < -20.0, y - 0.5 * np.exp(np.minimum(y, 0.0)), np.log(soft))


def _log_sum_others(z):
    """log sum_{j != i} e^{z_j} for every i, in O(n).

    Subtracting e^{z_i} from the total is safe unless i holds the maximum, so the
    maximal entry is handled by masking it out instead.
    """
    top = np.argmax(z, axis=-1)[..., None]
    zmax = np.take_along_axis(z, top, axis=-1)
    w = np.exp(z - zmax)
    total = w.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        out = zmax + np.log(np.maximum(total - w, 0.0))
        masked = z.copy()
        np.put_along_axis(masked, top, -np.inf, axis=-1)
        excl_top = logsumexp(masked, axis=-1, keepdims=True)
    np.put_along_axis(out, top, excl_top, axis=-1)
    return out


def _pay_from_logs(b, z, log_others, m):
    # b - (1/a) integral_0^b a(t) dt, with z = m b and log_others = log sum_{j != i} e^{z_j}
    log_alloc = z - np.logaddexp(z, log_others)
    # ln(W / (1 + S)) = log1p((e^{z_i} - 1) / (1 + S))
    log_q = _log_expm1(z) - np.logaddexp(0.0, log_others)
    log_term = _log_log1p_exp(log_q)
    with np.errstate(over="ignore"):
        return b - np.exp(log_term - log_alloc) / m


def pay_k1_all(b, m: float) -> np.ndarray:
    """Myerson payments (if confirmed) of every user under the logit allocation.

    p_i = b_i - (W / (m e^{m b_i})) ln(W / (1 + sum_{j != i} e^{m b_j})),
    evaluated in log space. ``m == 0`` is the uniform free-allocation limit.
    """
    b = np.asarray(b, dtype=float)
    if m == 0:
        return np.zeros_like(b)
    z = m * b
    if b.shape[-1] == 1:
        log_others = np.full_like(z, -np.inf)
    else:
        log_others = _log_sum_others(z)
    return _pay_from_logs(b, z, log_others, m)


def pay_k1(b, i: int, m: float):
    """Payment of user ``i`` alone; O(n) per bid vector."""
    b = np.asarray(b, dtype=float)
    bi = b[..., i]
    if m == 0:
        return np.zeros_like(bi)
    others = np.delete(b, i, axis=-1)
    if others.shape[-1] == 0:
        log_others = np.full_like(bi, -np.inf)
    else:
        log_others = logsumexp(m * others, axis=-1)
    return _pay_from_logs(bi, m * bi, log_others, m)


def theta_all(b, h: float, c: float) -> np.ndarray:
    """Variation term for every user: -h/2 b_i^2 (sum_{j!=i} b_j^2 / (c (n-1)) - 1)."""
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    if n < 2:
        raise ValueError("the variation term needs n >= 2")
    sq = b * b
    others = sq.sum(axis=-1, keepdims=True) - sq
    return -0.5 * h * sq * (others / (c * (n - 1)) - 1.0)


def theta(b, i: int, h: float, c: float):
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    if n < 2:
        raise ValueError("the variation term needs n >= 2")
    sq = b * b
    others = sq.sum(axis=-1) - sq[..., i]
    return -0.5 * h * sq[..., i] * (others / (c * (n - 1)) - 1.0)


def revenue(b, h: float, c: float):
    """Miner revenue h/2 (sum_i b_i^2 - sum_{i<j} b_i^2 b_j^2 / (c (n-1)))."""
    b = np.asarray(b, dtype=float)
    n = b.shape[-1]
    if n < 2:
        raise ValueError("the miner revenue term needs n >= 2")
    sq = b * b
    s1 = sq.sum(axis=-1)
    pairs = 0.5 * (s1 * s1 - (sq * sq).sum(axis=-1))
    return 0.5 * h * (s1 - pairs / (c * (n - 1)))


def expected_revenue(n: int, h: float, c: float, second_moment: float) -> float:
    """E[revenue] under i.i.d. bids with the given E[b^2]; equals h n c / 4 when c = E[b^2]."""
    return 0.5 * h * (n * second_moment - 0.5 * n * second_moment**2 / c)


def pay_perturbed(b, i: int, params: MechanismParams):
    """Perturbed payment p_i + theta_i / a_i."""
    a = alloc_k1(b, params.m)[..., i]
    base = pay_k1(b, i, params.m)
    if params.h == 0:
        return base
    return base + theta(b, i, params.h, params.c) / a


class SoftSecondPriceK1(Mechanism):
    """Logit allocation, Myerson payment and (for h > 0) the variation term."""

    def __init__(self, params: MechanismParams):
        if params.k != 1:
            raise ValueError("SoftSecondPriceK1 needs k = 1")
        self.params = params
        self.n = params.n
        self.k = 1

    def allocation(self, b):
        return alloc_k1(b, self.params.m)

    def base_payment(self, b):
        return pay_k1_all(b, self.params.m)

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
        return revenue(b, self.params.h, self.params.c)

    def user_terms(self, b, i):
        b = np.asarray(b, dtype=float)
        a = alloc_k1(b, self.params.m)[..., i]
        p = pay_k1(b, i, self.params.m)
        if self.params.h:
            p = p + theta(b, i, self.params.h, self.params.c) / a
        return a, p

    def allocation_slope(self, b, i, eps=None):
        a = self.allocation(b)[..., i]
        return self.params.m * a * (1.0 - a)

    def __repr__(self):
        p = self.params
        return f"SoftSecondPriceK1(n={p.n}, m={p.m}, h={p.h}, c={p.c})"
