"""Numerical audits of incentive, feasibility and structural properties.

Deterministic identities are judged against absolute tolerances; Monte Carlo
claims against three standard errors. Every audit is a pure function of its
inputs and seed.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _rng
from .dists import ValuationDistribution, sample, second_moment
from .mech_core import GL_W, GL_X, ConstantAllocationVariation, Mechanism
from .ssp_k1 import theta_all

PROPERTIES = (
    "U-DSIC", "U-BNIC", "1-SCP", "UIR", "BF", "NFL",
    "Symmetry", "Competitiveness", "ConservativeField", "Burning",
)
VERDICTS = ("pass", "fail", "inconclusive")

DSIC_SLACK = 1e-8
SCP_BEHAVIOR_SLACK = 1e-6
IDENTITY_TOL_CLOSED = 1e-6
IDENTITY_TOL_QUADRATURE = 1e-4
FEASIBILITY_SLACK = 1e-9
Z = 3.0


class SampleBudgetError(RuntimeError):
    pass


@dataclass
class Evidence:
    input: object
    statistic: float
    standard_error: float = 0.0

    def as_row(self):
        return {"input": self.input, "statistic": self.statistic, "standard_error": self.standard_error}


@dataclass
class AuditReport:
    property: str
    verdict: str
    worst_violation: float
    evidence: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    threshold: float = 0.0
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.property not in PROPERTIES:
            raise ValueError(f"unknown property {self.property!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "property": self.property,
            "verdict": self.verdict,
            "worst_violation": float(self.worst_violation),
            "threshold": float(self.threshold),
            "seeds": _jsonable(self.seeds),
            "details": _jsonable(self.details),
            "evidence": [_jsonable(e.as_row()) for e in self.evidence],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)

    def evidence_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["property", "input", "statistic", "standard_error"])
        for e in self.evidence:
            writer.writerow([
                self.property,
                json.dumps(_jsonable(e.input), separators=(",", ":")),
                fmt(e.statistic),
                fmt(e.standard_error),
            ])
        return buf.getvalue()


@dataclass
class DeviationCurve:
    v_i: float
    bid_grid: np.ndarray
    expected_utility: np.ndarray
    standard_errors: np.ndarray

    def __post_init__(self):
        if not (len(self.bid_grid) == len(self.expected_utility) == len(self.standard_errors)):
            raise ValueError("curve arrays must have equal length")
        if np.any(np.diff(self.bid_grid) < 0):
            raise ValueError("bid grid must be sorted")

    def to_dict(self):
        return {
            "v_i": self.v_i,
            "bid_grid": list(map(float, self.bid_grid)),
            "expected_utility": list(map(float, self.expected_utility)),
            "standard_errors": list(map(float, self.standard_errors)),
        }


def fmt(x) -> str:
    """17 significant digits: round-trips a double."""
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, Fraction)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _with_bid(b_others, i, bids):
    """Insert own bids (shape (..., G)) for user ``i`` among fixed others (shape (..., n-1))."""
    bids = np.asarray(bids, dtype=float)
    others = np.broadcast_to(b_others[..., None, :], bids.shape + (b_others.shape[-1],))
    return np.insert(others, i, bids, axis=-1)


def _grid_with(points, values):
    return np.unique(np.round(np.concatenate([np.asarray(points, float), np.atleast_1d(values)]), 12))


# -- truthfulness ----------------------------------------------------------------


def dsic_audit(mech: Mechanism, trials: int, seed, grid_points: int = 101, slack: float = DSIC_SLACK) -> AuditReport:
    """Against fixed others' bids, no bid on a grid beats bidding one's value."""
    rng = _rng.as_generator(seed)
    n = mech.n
    users = rng.integers(0, n, size=trials)
    values = rng.random(trials)
    others = rng.random((trials, n - 1))
    base_grid = np.linspace(0.0, 1.0, grid_points)
    gains = np.empty(trials)
    best = np.empty(trials)
    for i in np.unique(users):
        sel = np.flatnonzero(users == i)
        v = values[sel]
        bids = np.concatenate([np.broadcast_to(base_grid, (sel.size, grid_points)), v[:, None]], axis=1)
        B = _with_bid(others[sel], int(i), bids)
        a, p = mech.user_terms(B, int(i))
        u = a * (v[:, None] - p)
        truthful = u[:, -1]
        j = np.argmax(u[:, :-1], axis=1)
        gains[sel] = u[np.arange(sel.size), j] - truthful
        best[sel] = base_grid[j]
    worst = float(gains.max())
    order = np.argsort(-gains)[:10]
    evidence = [
        Evidence({"user": int(users[t]), "v_i": values[t], "b_others": others[t], "best_bid": best[t]}, gains[t])
        for t in order
    ]
    verdict = "pass" if worst <= slack else "fail"
    return AuditReport("U-DSIC", verdict, worst, evidence, {"seed": seed_repr(seed)}, slack,
                       {"trials": trials, "grid_points": grid_points, "mechanism": repr(mech)})


def bnic_audit(
    mech: Mechanism,
    dist: ValuationDistribution,
    samples: int,
    seed,
    values=tuple(np.round(np.arange(1, 10) / 10, 10)),
    grid_points: int = 41,
    user: int = 0,
    chunk: int = 20_000,
    max_truth_se: float = 1e-3,
):
    """Expected-utility deviation curves with common random numbers.

    Others' bids are drawn once and reused for every (value, bid) pair, so each
    deviation is compared with truth sample by sample. Passes iff no grid bid
    beats the truthful bid by more than three standard errors of the paired
    difference.

    Returns ``(report, curves)``.
    """
    n = mech.n
    values = np.asarray(values, dtype=float)
    grid = _grid_with(np.linspace(0.0, 1.0, grid_points), values)
    truth = np.searchsorted(grid, values)
    nv, ng = values.size, grid.size

    diff_acc = _rng.MeanAccumulator()
    util_acc = _rng.MeanAccumulator()

    def work(stream, size):
        others = sample(dist, stream, n - 1, size=size) if n > 1 else np.zeros((size, 0))
        B = _with_bid(others, user, np.broadcast_to(grid, (size, ng)))
        a, p = mech.user_terms(B, user)
        ap = a * p
        # utilities: (size, nv, ng)
        u = a[:, None, :] * values[None, :, None] - ap[:, None, :]
        t = u[:, np.arange(nv), truth]
        return u - t[:, :, None], u

    for d, u in _rng.chunked_map(work, samples, seed, chunk):
        diff_acc.add(d)
        util_acc.add(u)

    gain, gain_se = diff_acc.result()
    util, util_se = util_acc.result()
    truth_se = util_se[np.arange(nv), truth]
    if np.max(truth_se) > max_truth_se:
        raise SampleBudgetError(f"standard error at the truthful bid {np.max(truth_se):.3g} exceeds {max_truth_se}")

    excess = gain - Z * gain_se
    excess[np.arange(nv), truth] = -np.inf
    worst_idx = np.unravel_index(np.argmax(excess), excess.shape)
    worst_gain = gain.copy()
    worst_gain[np.arange(nv), truth] = 0.0
    verdict = "fail" if np.max(excess) > 1e-12 else "pass"

    evidence = []
    for r in range(nv):
        g = int(np.argmax(excess[r]))
        evidence.append(Evidence({"v_i": values[r], "best_deviation": grid[g]}, gain[r, g], gain_se[r, g]))
    curves = [DeviationCurve(float(values[r]), grid, util[r], util_se[r]) for r in range(nv)]
    report = AuditReport(
        "U-BNIC", verdict, float(np.max(worst_gain)), evidence, {"seed": seed_repr(seed)}, Z,
        {
            "samples": samples,
            "grid_points": int(ng),
            "mechanism": repr(mech),
            "distribution": dist.to_dict(),
            "worst": {"v_i": values[worst_idx[0]], "bid": grid[worst_idx[1]],
                      "gain": gain[worst_idx], "se": gain_se[worst_idx]},
        },
    )
    return report, curves


# -- collusion -------------------------------------------------------------------


def myerson_integral(mech: Mechanism, b, i: int):
    """integral_0^{b_i} t * d a_i(t, b_-i)/dt dt via Gauss-Legendre on the allocation slope."""
    b = np.asarray(b, dtype=float)
    bi = b[..., i]
    t = bi[..., None] * GL_X
    others = np.delete(b, i, axis=-1)
    B = _with_bid(others, i, t)
    slope = mech.allocation_slope(B, i)
    return bi * np.sum(GL_W * t * slope, axis=-1)


def scp1_identity_residual(mech: Mechanism, b, i: int):
    """[a_i p_i - r](b) - [a_i p_i - r](0, b_-i) - integral_0^{b_i} t a_i'(t) dt."""
    b = np.asarray(b, dtype=float)
    zero = b.copy()
    zero[..., i] = 0.0
    a1, p1 = mech.user_terms(b, i)
    a0, p0 = mech.user_terms(zero, i)
    lhs = (a1 * p1 - mech.revenue(b)) - (a0 * p0 - mech.revenue(zero))
    return lhs - myerson_integral(mech, b, i)


def scp1_audit(
    mech: Mechanism,
    trials: int,
    seed,
    tol: float | None = None,
    grid_points: int = 101,
    behavior_trials: int | None = None,
    slack: float = SCP_BEHAVIOR_SLACK,
) -> AuditReport:
    """Miner-plus-one-user collusion: payment/revenue identity and a grid search on joint utility."""
    if tol is None:
        tol = IDENTITY_TOL_CLOSED if mech.k == 1 else IDENTITY_TOL_QUADRATURE
    rng = _rng.as_generator(seed)
    n = mech.n
    users = rng.integers(0, n, size=trials)
    B = rng.random((trials, n))
    residual = np.empty(trials)
    for i in np.unique(users):
        sel = np.flatnonzero(users == i)
        residual[sel] = scp1_identity_residual(mech, B[sel], int(i))
    abs_res = np.abs(residual)

    bt = trials if behavior_trials is None else behavior_trials
    b_users = rng.integers(0, n, size=bt)
    values = rng.random(bt)
    others = rng.random((bt, n - 1))
    base_grid = np.linspace(0.0, 1.0, grid_points)
    gains = np.empty(bt)
    for i in np.unique(b_users):
        sel = np.flatnonzero(b_users == i)
        v = values[sel]
        bids = np.concatenate([np.broadcast_to(base_grid, (sel.size, grid_points)), v[:, None]], axis=1)
        Bg = _with_bid(others[sel], int(i), bids)
        a, p = mech.user_terms(Bg, int(i))
        joint = a * (v[:, None] - p) + mech.revenue(Bg)
        gains[sel] = joint[:, :-1].max(axis=1) - joint[:, -1]

    worst_res = float(abs_res.max())
    worst_gain = float(gains.max()) if bt else 0.0
    verdict = "pass" if worst_res <= tol and worst_gain <= slack else "fail"
    evidence = [
        Evidence({"check": "identity", "user": int(users[t]), "b": B[t]}, residual[t])
        for t in np.argsort(-abs_res)[:5]
    ]
    evidence += [
        Evidence({"check": "joint-utility", "user": int(b_users[t]), "v_i": values[t], "b_others": others[t]}, gains[t])
        for t in np.argsort(-gains)[:5]
    ]
    return AuditReport(
        "1-SCP", verdict, max(worst_res, worst_gain), evidence, {"seed": seed_repr(seed)}, tol,
        {"identity_residual": worst_res, "identity_tol": tol, "joint_gain": worst_gain,
         "joint_slack": slack, "trials": trials, "mechanism": repr(mech)},
    )


# -- rationality and feasibility ---------------------------------------------------


def uir_bf_check(mech: Mechanism, b):
    """Per-user UIR slack b_i - p_i(b) (inf where a_i = 0) and BF slack sum a_i p_i - r(b)."""
    b = np.asarray(b, dtype=float)
    a = mech.allocation(b)
    p = mech.payment(b)
    uir = np.where(a > 0, b - p, np.inf)
    bf = np.sum(a * p, axis=-1) - mech.revenue(b)
    return uir, bf


# -- path independence -----------------------------------------------------------


def path_integral(theta_fn, vertices, rest=(), users=(0, 1)):
    """Sum of theta increments along an axis-aligned polyline in the plane of two users.

    Each edge moves one user's bid; its increment is theta_u(end) - theta_u(start)
    for that user u. ``theta_fn(b)`` returns all users' theta values.
    """
    ui, uj = users
    rest = list(rest)
    total = 0
    for (x0, y0), (x1, y1) in zip(vertices[:-1], vertices[1:]):
        if x0 != x1 and y0 != y1:
            raise ValueError("edges must be axis-aligned")
        if x0 == x1 and y0 == y1:
            continue
        mover = ui if x0 != x1 else uj
        start = _place(rest, ui, uj, x0, y0)
        end = _place(rest, ui, uj, x1, y1)
        total = total + theta_fn(end)[mover] - theta_fn(start)[mover]
    return total


def _place(rest, ui, uj, x, y):
    b = list(rest)
    lo, hi = sorted([(ui, x), (uj, y)])
    b.insert(lo[0], lo[1])
    b.insert(hi[0], hi[1])
    return b


def loop_integral(theta_fn, rect, rest=(), users=(0, 1)):
    """Circulation of the theta-increment field around ``rect = (x0, y0, x1, y1)``."""
    x0, y0, x1, y1 = rect
    vertices = [(x0, y0), (x1, y0), (x1, y1), (x0, y1), (x0, y0)]
    return path_integral(theta_fn, vertices, rest, users)


def conservative_field_audit(theta_fn, n: int, trials: int, seed, tol: float = 1e-10) -> AuditReport:
    rng = _rng.as_generator(seed)
    worst, evidence = 0.0, []
    for _ in range(trials):
        ui, uj = sorted(rng.choice(n, size=2, replace=False))
        x = np.sort(rng.random(2))
        y = np.sort(rng.random(2))
        rest = rng.random(n - 2)
        val = float(loop_integral(lambda b: theta_fn(np.asarray(b, float)), (x[0], y[0], x[1], y[1]),
                                  rest, (int(ui), int(uj))))
        if abs(val) >= worst:
            worst = abs(val)
            evidence = [Evidence({"users": [int(ui), int(uj)], "rect": [x[0], y[0], x[1], y[1]],
                                  "rest": rest}, val)]
    verdict = "pass" if worst <= tol else "fail"
    return AuditReport("ConservativeField", verdict, worst, evidence, {"seed": seed_repr(seed)}, tol,
                       {"trials": trials})


def first_price_theta(b):
    """Payment difference of the half-price first-price auction (n = 2) against second price.

    Exact for ``Fraction`` inputs.
    """
    b1, b2 = b
    out = []
    for mine, other in ((b1, b2), (b2, b1)):
        if mine > other:
            out.append(Fraction(1, 2) * max(mine, other) - min(mine, other) if isinstance(mine, Fraction)
                       else 0.5 * max(mine, other) - min(mine, other))
        elif mine == other:
            out.append(-Fraction(1, 4) * mine if isinstance(mine, Fraction) else -0.25 * mine)
        else:
            out.append(0 * mine)
    return out


@dataclass
class CounterexampleReport:
    path1: Fraction
    path2: Fraction
    theta_values: dict
    loop_discrepancy: Fraction
    verdict: str

    def to_dict(self):
        return {
            "path1": float(self.path1),
            "path2": float(self.path2),
            "path1_exact": str(self.path1),
            "path2_exact": str(self.path2),
            "loop_discrepancy": float(self.loop_discrepancy),
            "theta_values": {k: float(v) for k, v in self.theta_values.items()},
            "verdict": self.verdict,
        }


def counterexample_first_price() -> CounterexampleReport:
    """Miner revenue at (1, 1) reached along two axis-aligned paths from (0, 0).

    Revenue increments must equal theta increments for collusion-proofness; the
    two paths disagree, so no consistent revenue rule exists.
    """
    F = Fraction
    th = lambda b1, b2: first_price_theta((F(b1), F(b2)))  # noqa: E731
    values = {
        "theta1(1,0)": th(1, 0)[0],
        "theta2(1,1)": th(1, 1)[1],
        "theta1(0.5,0)": th(F(1, 2), 0)[0],
        "theta2(0.5,1)": th(F(1, 2), 1)[1],
        "theta1(1,1)": th(1, 1)[0],
        "theta1(0.5,1)": th(F(1, 2), 1)[0],
    }
    path1 = values["theta1(1,0)"] + values["theta2(1,1)"]
    path2 = values["theta1(0.5,0)"] + values["theta2(0.5,1)"] + values["theta1(1,1)"] - values["theta1(0.5,1)"]
    loop = path_integral(
        first_price_theta,
        [(F(0), F(0)), (F(1), F(0)), (F(1), F(1)), (F(1, 2), F(1)), (F(1, 2), F(0)), (F(0), F(0))],
    )
    verdict = "path-dependent: no 1-SCP extension exists" if path1 != path2 else "path-independent"
    return CounterexampleReport(path1, path2, values, loop, verdict)


# -- structure ---------------------------------------------------------------------


def symmetry_audit(mech: Mechanism, trials: int, seed, tol: float = 1e-12) -> AuditReport:
    rng = _rng.as_generator(seed)
    B = rng.random((trials, mech.n))
    perms = np.argsort(rng.random((trials, mech.n)), axis=1)
    Bp = np.take_along_axis(B, perms, axis=1)
    a, p = mech.allocation(B), mech.payment(B)
    ap, pp = mech.allocation(Bp), mech.payment(Bp)
    err = np.maximum(np.abs(ap - np.take_along_axis(a, perms, axis=1)).max(axis=1),
                     np.abs(pp - np.take_along_axis(p, perms, axis=1)).max(axis=1))
    worst = float(err.max())
    t = int(np.argmax(err))
    return AuditReport("Symmetry", "pass" if worst <= tol else "fail", worst,
                       [Evidence({"b": B[t], "perm": perms[t]}, err[t])], {"seed": seed_repr(seed)}, tol)


def competitiveness_violation(mech: Mechanism, B, rng, tol: float = 1e-12):
    """Largest increase of a_i when another user j raises her bid."""
    trials, n = B.shape
    i = rng.integers(0, n, size=trials)
    j = (i + rng.integers(1, n, size=trials)) % n
    rows = np.arange(trials)
    raised = B.copy()
    raised[rows, j] = B[rows, j] + rng.random(trials) * (1.0 - B[rows, j])
    before = mech.allocation(B)[rows, i]
    after = mech.allocation(raised)[rows, i]
    return after - before


def competitiveness_audit(mech: Mechanism, trials: int, seed, tol: float = 1e-12) -> AuditReport:
    rng = _rng.as_generator(seed)
    B = rng.random((trials, mech.n))
    inc = competitiveness_violation(mech, B, rng)
    worst = float(max(inc.max(), 0.0))
    return AuditReport("Competitiveness", "pass" if worst <= tol else "fail", worst,
                       [Evidence({"b": B[int(np.argmax(inc))]}, inc.max())], {"seed": seed_repr(seed)}, tol)


def _nfl_violation(mech, B):
    worst = 0.0
    for i in range(mech.n):
        zero = B.copy()
        zero[:, i] = 0.0
        a, p = mech.user_terms(zero, i)
        worst = max(worst, float(np.max(np.abs(a * p))))
    return worst


def nfl_audit(mech: Mechanism, trials: int, seed, tol: float = FEASIBILITY_SLACK) -> AuditReport:
    """A zero bid pays nothing in expectation, whatever the others bid."""
    B = _rng.as_generator(seed).random((trials, mech.n))
    worst = _nfl_violation(mech, B)
    return AuditReport("NFL", "pass" if worst <= tol else "fail", worst, [], {"seed": seed_repr(seed)}, tol,
                       {"trials": trials, "mechanism": repr(mech)})


def constant_allocation_reference(n: int, k: int, dist: ValuationDistribution) -> ConstantAllocationVariation:
    """Constant k/n allocation, mean-zero variation payments, all fees to the miner."""
    c = second_moment(dist)
    return ConstantAllocationVariation(n, k, lambda b: theta_all(b, 1.0, c))


def burning_audit(
    mech: Mechanism,
    dist: ValuationDistribution,
    samples: int,
    seed,
    structure_trials: int = 2000,
    bnic: bool | None = None,
    scp1: bool | None = None,
    reference: Mechanism | None = None,
    chunk: int = 20_000,
) -> AuditReport:
    """Classify a fixed-block mechanism against the no-burn premises and measure its burn.

    If NFL, Competitiveness and strong budget feasibility all hold (and U-BNIC
    and 1-SCP are asserted by the caller or left unknown), the allocation must
    be the constant k/n and the mean miner revenue zero; the verdict is
    ``fail`` only if that consequence is contradicted. The constant-allocation
    reference is always checked for zero mean revenue.
    """
    if mech.k is None:
        raise ValueError("burning audit needs a fixed block size")
    n, k = mech.n, mech.k
    root = _rng.seed_sequence(seed)
    s_struct, s_mc, s_ref = [np.random.default_rng(s) for s in root.spawn(3)]

    B = sample(dist, s_struct, n, size=structure_trials)
    nfl = _nfl_violation(mech, B)
    comp = float(max(competitiveness_violation(mech, B, s_struct).max(), 0.0))
    alloc_dev = float(np.max(np.abs(mech.allocation(B) - k / n)))

    def burn_work(stream, size):
        b = sample(dist, stream, n, size=size)
        return np.stack([np.sum(mech.allocation(b) * mech.payment(b), axis=-1) - mech.revenue(b),
                         mech.revenue(b)], axis=1)

    acc = _rng.MeanAccumulator()
    for part in _rng.chunked_map(burn_work, samples, s_mc, chunk):
        acc.add(part)
    (burn, rev), (burn_se, rev_se) = acc.result()
    strong_bf_dev = _max_abs_burn(mech, B)

    if reference is None:
        reference = constant_allocation_reference(n, k, dist)
    ref_acc = _rng.MeanAccumulator()

    def ref_work(stream, size):
        return reference.revenue(sample(dist, stream, n, size=size))[:, None]

    for part in _rng.chunked_map(ref_work, samples, s_ref, chunk):
        ref_acc.add(part)
    (ref_rev,), (ref_se,) = ref_acc.result()
    ref_ok = abs(ref_rev) <= Z * ref_se + 1e-15

    flags = {
        "NFL": nfl <= FEASIBILITY_SLACK,
        "Competitiveness": comp <= 1e-12,
        "StrongBF": strong_bf_dev <= FEASIBILITY_SLACK,
        "U-BNIC": bnic,
        "1-SCP": scp1,
    }
    premises = flags["NFL"] and flags["Competitiveness"] and flags["StrongBF"] and bnic is not False and scp1 is not False
    constant = alloc_dev <= FEASIBILITY_SLACK
    zero_rev = abs(rev) <= Z * rev_se + 1e-15
    if premises:
        consistent = constant and zero_rev
        worst = max(alloc_dev, abs(rev) - Z * rev_se)
    else:
        consistent = True
        worst = 0.0
    burn_significant = burn > Z * burn_se
    verdict = "pass" if consistent and ref_ok else "fail"

    evidence = [
        Evidence("expected_burn", burn, burn_se),
        Evidence("expected_revenue", rev, rev_se),
        Evidence("max_allocation_deviation", alloc_dev),
        Evidence("nfl_violation", nfl),
        Evidence("competitiveness_violation", comp),
        Evidence("reference_expected_revenue", ref_rev, ref_se),
    ]
    return AuditReport(
        "Burning", verdict, float(worst), evidence, {"seed": seed_repr(seed)}, Z,
        {
            "flags": flags,
            "premises_hold": bool(premises),
            "constant_allocation": bool(constant),
            "burn_significant": bool(burn_significant),
            "reference_zero_revenue": bool(ref_ok),
            "samples": samples,
            "mechanism": repr(mech),
            "reference": repr(reference),
        },
    )


def _max_abs_burn(mech, B):
    return float(np.max(np.abs(np.sum(mech.allocation(B) * mech.payment(B), axis=-1) - mech.revenue(B))))


def seed_repr(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed)
    if isinstance(seed, np.random.SeedSequence):
        return {"entropy": seed.entropy, "spawn_key": list(seed.spawn_key)}
    return repr(seed)
