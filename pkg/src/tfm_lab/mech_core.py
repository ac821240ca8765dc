"""Mechanism abstraction, utilities and a generic Myerson payment engine.

Every mechanism here is vectorized: bids have shape ``(..., n)``,
``allocation`` and ``payment`` return arrays of the same shape and
``revenue`` drops the last axis. Payments are "payment if confirmed";
expected payments multiply by the allocation.
"""

from __future__ import annotations

import warnings
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass

import numpy as np

MONOTONE_SLACK = 1e-9
GL_NODES = 64

_gl_x, _gl_w = np.polynomial.legendre.leggauss(GL_NODES)
# nodes and weights mapped from [-1, 1] to [0, 1]
GL_X = 0.5 * (_gl_x + 1.0)
GL_W = 0.5 * _gl_w


class NonMonotoneAllocation(ValueError):
    pass


def as_bids(b) -> np.ndarray:
    """Validate a bid vector (or a batch of them) and return a float array."""
    arr = np.asarray(b, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] < 1:
        raise ValueError("a bid vector needs at least one entry")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("bids must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class MechanismParams:
    """Parameters of the soft second-price family."""

    n: int
    k: int = 1
    m: float = 1.0
    h: float = 0.0
    c: float = 1.0 / 3.0

    def __post_init__(self):
        if int(self.n) != self.n or int(self.k) != self.k:
            raise ValueError("n and k must be integers")
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if not self.m >= 0:
            raise ValueError("m must be >= 0")
        if not self.h >= 0:
            raise ValueError("h must be >= 0")
        if not self.c > 0:
            raise ValueError("c must be > 0")

    @property
    def lam(self) -> float:
        return self.n / self.k

    def replace(self, **changes) -> "MechanismParams":
        return MechanismParams(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


class Mechanism(ABC):
    """An (allocation, payment, revenue) triple over ``n`` users with block size ``k``.

    ``k`` is ``None`` for mechanisms without a fixed block size.
    """

    n: int
    k: int | None = None

    @abstractmethod
    def allocation(self, b) -> np.ndarray:
        ...

    @abstractmethod
    def payment(self, b) -> np.ndarray:
        ...

    @abstractmethod
    def revenue(self, b) -> np.ndarray:
        ...

    def user_terms(self, b, i: int):
        """Allocation and payment of user ``i`` only (overridden where cheaper)."""
        return self.allocation(b)[..., i], self.payment(b)[..., i]

    def allocation_slope(self, b, i: int, eps: float = 1e-5):
        """d a_i / d b_i by central differences; mechanisms with closed forms override."""
        b = np.asarray(b, dtype=float)
        up = b.copy()
        dn = b.copy()
        up[..., i] += eps
        dn[..., i] -= eps
        a_up, _ = self.user_terms(up, i)
        a_dn, _ = self.user_terms(dn, i)
        return (a_up - a_dn) / (2.0 * eps)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, k={self.k})"


def myerson_payment(alloc_fn, b_i, tol: float = 1e-8, check_monotone: bool = True):
    """Payment-if-confirmed that makes a monotone allocation slice truthful.

    ``alloc_fn`` maps an array of own bids ``t`` (any shape) to a_i(t, b_-i)
    elementwise, with b_-i held fixed. The payment is

        b_i - (1 / a_i(b_i)) * integral_0^{b_i} a_i(t) dt,

    which equals (1 / a_i(b_i)) * integral_0^{b_i} t a_i'(t) dt without needing
    a derivative. ``b_i`` may be an array; the result has its shape.

    A 64-point Gauss-Legendre rule is compared against the same rule on the two
    halves of the interval; the refined value is returned.
    """
    b_i = np.asarray(b_i, dtype=float)
    x = b_i[..., None] * GL_X
    half = np.concatenate([0.5 * GL_X, 0.5 + 0.5 * GL_X])
    xs = b_i[..., None] * half
    grid = np.concatenate([np.zeros_like(b_i)[..., None], xs, b_i[..., None]], axis=-1)
    vals = np.asarray(alloc_fn(np.concatenate([grid, x], axis=-1)))
    n_grid = grid.shape[-1]
    on_grid, coarse_vals = vals[..., :n_grid], vals[..., n_grid:]

    if check_monotone and np.any(np.diff(on_grid, axis=-1) < -MONOTONE_SLACK):
        raise NonMonotoneAllocation("allocation slice decreases on the quadrature grid")

    a_end = on_grid[..., -1]
    fine_vals = on_grid[..., 1:-1]
    coarse = b_i * (coarse_vals @ GL_W)
    fine = 0.5 * b_i * (fine_vals @ np.concatenate([GL_W, GL_W]))
    err = np.max(np.abs(fine - coarse)) if fine.size else 0.0
    if err > tol:
        warnings.warn(f"Myerson quadrature error estimate {err:.3g} exceeds tol {tol:.3g}", RuntimeWarning)

    safe = np.where(a_end > 0, a_end, 1.0)
    out = np.where((a_end > 0) & (b_i > 0), b_i - fine / safe, 0.0)
    return float(out) if out.ndim == 0 else out


def total_expected_payment(mech: Mechanism, b) -> np.ndarray:
    """Sum over users of a_i(b) p_i(b)."""
    return np.sum(mech.allocation(b) * mech.payment(b), axis=-1)


def user_utility(mech: Mechanism, b, i: int, v_i) -> np.ndarray:
    a, p = mech.user_terms(b, i)
    return a * (np.asarray(v_i) - p)


def joint_utility(mech: Mechanism, b, i: int, v_i) -> np.ndarray:
    """User i's utility plus the miner's revenue (the coalition's payoff)."""
    return user_utility(mech, b, i, v_i) + mech.revenue(b)


# -- reference mechanisms ------------------------------------------------------


class FirstPrice(Mechanism):
    """Highest bid wins (ties split evenly) and pays ``shade`` times its own bid.

    ``shade=1`` is the plain first-price auction; ``shade=(n-1)/n`` is the
    revelation-principle version of the uniform-value equilibrium, which for
    n=2 charges half the highest bid.
    """

    def __init__(self, n: int, shade: float = 1.0):
        self.n = n
        self.k = 1
        self.shade = shade

    @classmethod
    def shaded(cls, n: int = 2):
        return cls(n, shade=(n - 1) / n)

    def allocation(self, b):
        b = np.asarray(b, dtype=float)
        top = b == b.max(axis=-1, keepdims=True)
        return top / top.sum(axis=-1, keepdims=True)

    def payment(self, b):
        return self.shade * np.asarray(b, dtype=float)

    def revenue(self, b):
        return np.zeros(np.shape(b)[:-1])


class ConstantAllocation(Mechanism):
    """Every user confirmed with probability k/n, nobody pays, the miner gets nothing."""

    def __init__(self, n: int, k: int = 1):
        self.n = n
        self.k = k

    def allocation(self, b):
        return np.full(np.shape(b), self.k / self.n)

    def payment(self, b):
        return np.zeros(np.shape(b))

    def revenue(self, b):
        return np.zeros(np.shape(b)[:-1])

    def allocation_slope(self, b, i, eps=1e-5):
        return np.zeros(np.shape(b)[:-1])


class ConstantAllocationVariation(Mechanism):
    """Constant k/n allocation whose payments are a variation term and whose
    revenue is exactly the collected fees (no burn).

    ``theta_fn(b)`` returns the per-user expected payments, shape ``(..., n)``.
    """

    def __init__(self, n: int, k: int, theta_fn):
        self.n = n
        self.k = k
        self.theta_fn = theta_fn

    def allocation(self, b):
        return np.full(np.shape(b), self.k / self.n)

    def payment(self, b):
        return self.theta_fn(np.asarray(b, dtype=float)) * (self.n / self.k)

    def revenue(self, b):
        return np.sum(self.theta_fn(np.asarray(b, dtype=float)), axis=-1)

    def allocation_slope(self, b, i, eps=1e-5):
        return np.zeros(np.shape(b)[:-1])


class NaiveRevenue(Mechanism):
    """Wraps a mechanism and hands the miner every collected fee."""

    def __init__(self, base: Mechanism):
        self.base = base
        self.n = base.n
        self.k = base.k

    def allocation(self, b):
        return self.base.allocation(b)

    def payment(self, b):
        return self.base.payment(b)

    def revenue(self, b):
        return total_expected_payment(self.base, b)

    def user_terms(self, b, i):
        return self.base.user_terms(b, i)

    def allocation_slope(self, b, i, eps=1e-5):
        return self.base.allocation_slope(b, i, eps)
