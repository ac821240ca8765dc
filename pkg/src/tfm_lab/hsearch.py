"""Largest feasible perturbation scale and revenue studies.

At a fixed bid vector every feasibility slack is affine in h:

    UIR_i(h) = (b_i - p_i) - h * theta1_i / a_i
    BF(h)    = sum_i a_i p_i + h * (sum_i theta1_i - r1)

where theta1 and r1 are the variation term and miner revenue at h = 1. The
search precomputes both coefficients for a candidate pool (all corners for
small n, a few structured families, and random vectors), then refines the
worst candidate by coordinate descent on the slack at the h being tested.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .audit import AuditReport, Evidence, seed_repr
from .dists import ValuationDistribution, sample
from .mech_core import MechanismParams
from .ssp_k import make_mechanism
from .ssp_k1 import revenue as revenue_fn
from .ssp_k1 import theta_all

FEASIBLE = -1e-9
MAX_CORNER_N = 12
H_CEILING = 1e6


class BracketError(RuntimeError):
    pass


def slack_coefficients(params: MechanismParams, B):
    """Affine coefficients (s0, s1) of the slacks; columns are UIR_1..UIR_n then BF."""
    B = np.asarray(B, dtype=float)
    base = make_mechanism(params.replace(h=0.0))
    a = base.allocation(B)
    p = base.base_payment(B)
    th = theta_all(B, 1.0, params.c)
    r1 = revenue_fn(B, 1.0, params.c)
    s0 = np.concatenate([B - p, np.sum(a * p, axis=-1, keepdims=True)], axis=-1)
    s1 = np.concatenate([-th / a, (th.sum(axis=-1) - r1)[..., None]], axis=-1)
    return s0, s1


def min_slack(params: MechanismParams, B, h: float):
    return _slack_at(params, B, h).min(axis=-1)


def candidate_pool(n: int, budget: int, rng, levels: int = 21) -> np.ndarray:
    parts = []
    if n <= MAX_CORNER_N:
        parts.append(((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(float))
    t = np.linspace(0.0, 1.0, levels)
    # everyone at one level; one user at a level, the rest at 0 or at 1
    parts.append(np.repeat(t[:, None], n, axis=1))
    for rest in (0.0, 1.0):
        single = np.full((levels, n), rest)
        single[:, 0] = t
        parts.append(single)
    if budget:
        parts.append(rng.random((budget, n)))
    return np.concatenate(parts)


class _Search:
    def __init__(self, params: MechanismParams, budget: int, seed, ascent_steps: int, levels: int = 21):
        self.params = params
        self.ascent_steps = ascent_steps
        self.levels = np.linspace(0.0, 1.0, levels)
        rng = _rng.as_generator(seed)
        self.pool = candidate_pool(params.n, budget, rng, levels)
        self.s0, self.s1 = slack_coefficients(params, self.pool)

    def pool_slack(self, h):
        return self.s0 + h * self.s1

    def descend(self, b, h):
        """Coordinate descent on the minimum slack, one grid line search per coordinate."""
        b = b.copy()
        cur = float(min_slack(self.params, b, h))
        for _ in range(self.ascent_steps):
            improved = False
            for j in range(self.params.n):
                cands = np.repeat(b[None, :], self.levels.size + 1, axis=0)
                cands[:-1, j] = self.levels
                vals = min_slack(self.params, cands, h)
                best = int(np.argmin(vals))
                if vals[best] < cur - 1e-15:
                    cur = float(vals[best])
                    b = cands[best]
                    improved = True
            if not improved:
                break
        return cur, b

    def oracle(self, h):
        slack = self.pool_slack(h).min(axis=-1)
        idx = int(np.argmin(slack))
        cur, b = self.descend(self.pool[idx], h)
        if slack[idx] < cur:
            return float(slack[idx]), self.pool[idx]
        return cur, b


def violation_oracle(params: MechanismParams, search_budget: int = 10_000, seed=0, ascent_steps: int = 20):
    """Minimum UIR/BF slack at ``params.h`` over the searched bid vectors, and its witness.

    Negative means infeasible.
    """
    slack, witness = _Search(params, search_budget, seed, ascent_steps).oracle(params.h)
    return slack, witness


def feasibility_audit(params: MechanismParams, search_budget: int = 10_000, seed=0, ascent_steps: int = 20):
    """UIR and BF audit reports at ``params.h`` over the searched bid vectors."""
    search = _Search(params, search_budget, seed, ascent_steps)
    n = params.n
    reports = []
    for name, column in (("UIR", lambda s: s[..., :n].min(axis=-1)), ("BF", lambda s: s[..., n])):
        start = search.pool[int(np.argmin(column(search.pool_slack(params.h))))]
        w = _refine(search, start, params.h, column)
        slack = float(column(_slack_at(params, w, params.h)))
        verdict = "pass" if slack >= FEASIBLE else "fail"
        reports.append(AuditReport(
            name, verdict, max(-slack, 0.0), [Evidence({"b": w}, slack)], {"seed": seed_repr(seed)},
            -FEASIBLE, {"search_budget": search_budget, "params": params.to_dict()},
        ))
    return reports


@dataclass
class FeasibilityReport:
    h_star: float
    bisection_bracket: tuple[float, float]
    worst_uir_witness: np.ndarray
    worst_bf_witness: np.ndarray
    binding: str
    witness_slack_above: dict
    revenue_at_h_star: tuple[float, float]
    config_hash: str
    params: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "h_star": self.h_star,
            "bisection_bracket": list(self.bisection_bracket),
            "worst_uir_witness": [float(x) for x in self.worst_uir_witness],
            "worst_bf_witness": [float(x) for x in self.worst_bf_witness],
            "binding": self.binding,
            "witness_slack_above": self.witness_slack_above,
            "revenue_at_h_star": {"estimate": self.revenue_at_h_star[0], "se": self.revenue_at_h_star[1]},
            "config_hash": self.config_hash,
            "params": self.params,
            "note": "h_star is certified only against the searched witnesses: an upper-bound estimate",
        }


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def h_star_estimate(
    params: MechanismParams,
    dist: ValuationDistribution | None = None,
    tol: float = 1e-4,
    seed=0,
    search_budget: int = 10_000,
    ascent_steps: int = 20,
    revenue_samples: int = 100_000,
    rel_tol: float = 1e-3,
) -> FeasibilityReport:
    """Bisection for the largest h keeping every searched bid vector UIR and BF.

    ``params.h`` is ignored. The bracket ends when it is narrower than ``tol``
    and than ``rel_tol`` relative to its lower end.
    """
    root = _rng.seed_sequence(seed)
    s_search, s_rev = root.spawn(2)
    search = _Search(params, search_budget, np.random.default_rng(s_search), ascent_steps)

    lo, hi = 0.0, 1.0
    while True:
        slack, _ = search.oracle(hi)
        if slack < FEASIBLE:
            break
        lo, hi = hi, 2.0 * hi
        if hi > H_CEILING:
            raise BracketError(f"still feasible at h = {lo}; parameters look degenerate")

    while (hi - lo > tol or hi > lo * (1.0 + rel_tol)) and hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        slack, _ = search.oracle(mid)
        if slack >= FEASIBLE:
            lo = mid
        else:
            hi = mid

    n = params.n
    # witnesses at the infeasible end of the bracket, one per slack family
    _, w_oracle = search.oracle(hi)
    pool = search.pool_slack(hi)
    families = {
        "UIR": lambda s: s[..., :n].min(axis=-1),
        "BF": lambda s: s[..., n],
    }
    witnesses, above = {}, {}
    for name, column in families.items():
        start = search.pool[int(np.argmin(column(pool)))]
        cands = [_refine(search, start, hi, column), np.asarray(w_oracle, dtype=float)]
        vals = [float(column(_slack_at(params, w, hi))) for w in cands]
        best = int(np.argmin(vals))
        witnesses[name], above[name] = cands[best], vals[best]
    binding = "UIR" if above["UIR"] <= above["BF"] else "BF"

    h_star = lo
    rev = (math.nan, math.nan)
    if dist is not None and revenue_samples:
        bids = sample(dist, np.random.default_rng(s_rev), n, size=revenue_samples)
        r = revenue_fn(bids, h_star, params.c) if n > 1 else np.zeros(revenue_samples)
        mean, se = _rng.mean_se(r)
        rev = (float(mean), float(se))

    payload = {
        "params": params.replace(h=0.0).to_dict(),
        "dist": dist.to_dict() if dist is not None else None,
        "tol": tol,
        "seed": _rng.seed_sequence(seed).entropy,
        "search_budget": search_budget,
        "ascent_steps": ascent_steps,
    }
    return FeasibilityReport(
        h_star=h_star,
        bisection_bracket=(lo, hi),
        worst_uir_witness=witnesses["UIR"],
        worst_bf_witness=witnesses["BF"],
        binding=binding,
        witness_slack_above={"h": hi, "uir": above["UIR"], "bf": above["BF"]},
        revenue_at_h_star=rev,
        config_hash=config_hash(payload),
        params=payload,
    )


def _slack_at(params, b, h):
    s0, s1 = slack_coefficients(params, b)
    return s0 + h * s1


def _refine(search: _Search, b, h, column_fn):
    """Coordinate descent on one slack family (UIR or BF) at the given h."""
    params = search.params
    b = b.copy()

    def value(B):
        return column_fn(_slack_at(params, B, h))

    cur = float(value(b))
    for _ in range(search.ascent_steps):
        improved = False
        for j in range(params.n):
            cands = np.repeat(b[None, :], search.levels.size + 1, axis=0)
            cands[:-1, j] = search.levels
            vals = value(cands)
            best = int(np.argmin(vals))
            if vals[best] < cur - 1e-15:
                cur, b, improved = float(vals[best]), cands[best], True
        if not improved:
            break
    return b


def revenue_study(rows, dist: ValuationDistribution, samples: int, seed):
    """Monte Carlo E[miner revenue] for each (n, k, h, c) row.

    ``rows`` holds dicts (or MechanismParams) with keys n, k, h, c. Output rows
    carry the estimate, its standard error, the value h n c / 4 and the ratio
    estimate / k (optimal revenue is at most k).
    """
    out = []
    streams = _rng.seed_sequence(seed).spawn(len(rows))
    for row, stream in zip(rows, streams):
        if isinstance(row, MechanismParams):
            row = row.to_dict()
        n, k, h, c = int(row["n"]), int(row.get("k", 1)), float(row["h"]), float(row["c"])
        if h == 0 or n < 2:
            est, se = 0.0, 0.0
        else:
            bids = sample(dist, np.random.default_rng(stream), n, size=samples)
            est, se = _rng.mean_se(revenue_fn(bids, h, c))
        out.append({
            "n": n, "k": k, "h": h, "c": c,
            "estimate": float(est), "se": float(se),
            "formula": 0.25 * h * n * c,
            "ratio": float(est) / k,
        })
    return out


REVENUE_CSV_HEADER = ("n", "k", "h", "c", "estimate", "se", "formula")
