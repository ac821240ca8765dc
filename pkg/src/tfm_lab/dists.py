"""I.i.d. valuation laws on [0, 1].

Three families are supported:

* ``uniform``: ``params = []``.
* ``truncated-power``: ``params = [alpha]`` with density ``(alpha + 1) t**alpha``,
  ``alpha >= 0`` (``alpha = 1`` is the density ``2t``).
* ``piecewise-linear-pdf``: ``params = [y_0, ..., y_K]``, the density values at
  ``K + 1`` equally spaced knots on [0, 1], linearly interpolated.

Densities must already integrate to one; nothing is rescaled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

KINDS = ("uniform", "piecewise-linear-pdf", "truncated-power")

NORMALIZATION_TOL = 1e-9
DEFAULT_PDF_CAP = 1e3


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class ValuationDistribution:
    kind: str
    pdf_params: tuple[float, ...] = ()
    pdf_cap: float = DEFAULT_PDF_CAP
    supremum: float = field(init=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DistributionError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        params = tuple(float(x) for x in self.pdf_params)
        object.__setattr__(self, "pdf_params", params)

        if self.kind == "uniform":
            if params:
                raise DistributionError("uniform takes no parameters")
            sup = 1.0
        elif self.kind == "truncated-power":
            if len(params) != 1 or not np.isfinite(params[0]) or params[0] < 0:
                raise DistributionError("truncated-power takes one exponent alpha >= 0 (bounded density)")
            sup = params[0] + 1.0
        else:
            y = np.asarray(params)
            if y.size < 2 or not np.all(np.isfinite(y)) or np.any(y < 0):
                raise DistributionError("piecewise-linear-pdf needs >= 2 finite nonnegative knot values")
            sup = float(y.max())

        if sup > self.pdf_cap:
            raise DistributionError(f"density supremum {sup} exceeds cap {self.pdf_cap}")
        object.__setattr__(self, "supremum", sup)

        mass = quadrature(self.pdf, self._breakpoints())
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise DistributionError(f"density integrates to {mass!r}, not 1 (tolerance {NORMALIZATION_TOL})")

    # -- density ---------------------------------------------------------

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= 1.0)
        if self.kind == "uniform":
            out = np.ones_like(t)
        elif self.kind == "truncated-power":
            alpha = self.pdf_params[0]
            out = (alpha + 1.0) * np.power(np.clip(t, 0.0, 1.0), alpha)
        else:
            y = np.asarray(self.pdf_params)
            out = np.interp(t, np.linspace(0.0, 1.0, y.size), y)
        return np.where(inside, out, 0.0)

    def _breakpoints(self):
        if self.kind == "piecewise-linear-pdf":
            return np.linspace(0.0, 1.0, len(self.pdf_params))[1:-1]
        return ()

    def _segments(self):
        y = np.asarray(self.pdf_params)
        knots = np.linspace(0.0, 1.0, y.size)
        return knots[:-1], knots[1:], y[:-1], y[1:]

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": list(self.pdf_params)}

    @classmethod
    def from_dict(cls, spec: dict) -> "ValuationDistribution":
        return cls(spec["kind"], tuple(spec.get("params", ())))


def uniform() -> ValuationDistribution:
    return ValuationDistribution("uniform")


def power(alpha: float) -> ValuationDistribution:
    return ValuationDistribution("truncated-power", (alpha,))


def piecewise_linear(knot_values: Sequence[float]) -> ValuationDistribution:
    return ValuationDistribution("piecewise-linear-pdf", tuple(knot_values))


def quadrature(fn, breakpoints=(), tol: float = 1e-11) -> float:
    """Integrate ``fn`` over [0, 1], splitting at the given interior breakpoints."""
    edges = [0.0, *sorted(float(x) for x in breakpoints), 1.0]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi > lo:
            val, _ = integrate.quad(lambda x: float(fn(x)), lo, hi, epsabs=tol, epsrel=tol, limit=200)
            total += val
    return total


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(dist: ValuationDistribution, seed, n, size=None) -> np.ndarray:
    """Draw ``n`` i.i.d. valuations (or an array of shape ``(*size, n)``).

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``; equal seeds
    give identical draws.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_generator(seed)
    shape = (n,) if size is None else (*np.atleast_1d(size), n)
    u = rng.random(shape)
    if dist.kind == "uniform":
        return u
    if dist.kind == "truncated-power":
        return u ** (1.0 / (dist.pdf_params[0] + 1.0))
    return _piecewise_inverse_cdf(dist, u)


def _piecewise_inverse_cdf(dist, u):
    t0, t1, y0, y1 = dist._segments()
    width = t1 - t0
    masses = 0.5 * width * (y0 + y1)
    cum = np.cumsum(masses)
    cum[-1] = 1.0
    idx = np.minimum(np.searchsorted(cum, u, side="right"), masses.size - 1)
    before = np.where(idx > 0, cum[idx - 1], 0.0)
    r = np.clip(u - before, 0.0, masses[idx])
    lo = y0[idx]
    slope = (y1[idx] - y0[idx]) / width[idx]
    # positive root of lo*s + slope*s^2/2 = r, written to avoid cancellation
    disc = np.sqrt(np.maximum(lo * lo + 2.0 * slope * r, 0.0))
    denom = lo + disc
    s = np.where(denom > 0, 2.0 * r / np.where(denom > 0, denom, 1.0), 0.0)
    return np.clip(t0[idx] + np.minimum(s, width[idx]), 0.0, 1.0)


def second_moment(dist: ValuationDistribution) -> float:
    """E[v^2] under ``dist``."""
    if dist.kind == "uniform":
        return 1.0 / 3.0
    if dist.kind == "truncated-power":
        alpha = dist.pdf_params[0]
        return (alpha + 1.0) / (alpha + 3.0)
    t0, t1, y0, y1 = dist._segments()
    slope = (y1 - y0) / (t1 - t0)
    intercept = y0 - slope * t0
    return float(np.sum(intercept * (t1**3 - t0**3) / 3.0 + slope * (t1**4 - t0**4) / 4.0))


def mean(dist: ValuationDistribution) -> float:
    if dist.kind == "uniform":
        return 0.5
    if dist.kind == "truncated-power":
        alpha = dist.pdf_params[0]
        return (alpha + 1.0) / (alpha + 2.0)
    t0, t1, y0, y1 = dist._segments()
    slope = (y1 - y0) / (t1 - t0)
    intercept = y0 - slope * t0
    return float(np.sum(intercept * (t1**2 - t0**2) / 2.0 + slope * (t1**3 - t0**3) / 3.0))


def crho_literal(dist: ValuationDistribution) -> float:
    """The integral of the squared density over [0, 1] (>= 1 by Cauchy-Schwarz)."""
    if dist.supremum > dist.pdf_cap:
        raise DistributionError("unbounded density")
    if dist.kind == "uniform":
        return 1.0
    if dist.kind == "truncated-power":
        alpha = dist.pdf_params[0]
        return (alpha + 1.0) ** 2 / (2.0 * alpha + 1.0)
    t0, t1, y0, y1 = dist._segments()
    return float(np.sum((t1 - t0) * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0))


C_MODES = ("second_moment", "rho_squared")


def variation_constant(dist: ValuationDistribution, c_mode: str = "second_moment") -> float:
    """The constant ``c`` used by the variation term.

    ``second_moment`` makes the per-user perturbation mean-zero under ``dist``;
    ``rho_squared`` is the integral of the squared density.
    """
    if c_mode == "second_moment":
        return second_moment(dist)
    if c_mode == "rho_squared":
        return crho_literal(dist)
    raise ValueError(f"unknown c_mode {c_mode!r}; expected one of {C_MODES}")
