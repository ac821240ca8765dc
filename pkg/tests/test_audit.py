import json
from fractions import Fraction

import numpy as np
import pytest

from tfm_lab import audit
from tfm_lab.audit import (
    AuditReport,
    DeviationCurve,
    Evidence,
    SampleBudgetError,
    bnic_audit,
    burning_audit,
    competitiveness_audit,
    conservative_field_audit,
    counterexample_first_price,
    dsic_audit,
    first_price_theta,
    loop_integral,
    nfl_audit,
    path_integral,
    scp1_audit,
    symmetry_audit,
    uir_bf_check,
)
from tfm_lab.dists import uniform
from tfm_lab.mech_core import ConstantAllocation, FirstPrice, Mechanism, MechanismParams, NaiveRevenue
from tfm_lab.ssp_k import SoftSecondPriceK
from tfm_lab.ssp_k1 import SoftSecondPriceK1, theta_all


def ssp(n, m=1.0, h=0.0, c=1 / 3):
    return SoftSecondPriceK1(MechanismParams(n=n, m=m, h=h, c=c))


class EntryFee(Mechanism):
    """Everyone confirmed, everyone pays a flat 0.1: violates no-free-lunch."""

    def __init__(self, n):
        self.n, self.k = n, n

    def allocation(self, b):
        return np.ones(np.shape(b))

    def payment(self, b):
        return np.full(np.shape(b), 0.1)

    def revenue(self, b):
        return np.zeros(np.shape(b)[:-1])


class Cooperative(Mechanism):
    """Allocation grows with everyone's bids: violates competitiveness."""

    def __init__(self, n):
        self.n, self.k = n, 1

    def allocation(self, b):
        b = np.asarray(b, float)
        return np.broadcast_to((0.5 + 0.5 * b.mean(axis=-1, keepdims=True)) / self.n, b.shape).copy()

    def payment(self, b):
        return np.zeros(np.shape(b))

    def revenue(self, b):
        return np.zeros(np.shape(b)[:-1])


# -- reports -------------------------------------------------------------------------


def test_report_serialization_is_stable():
    rep = AuditReport("NFL", "pass", 0.0, [Evidence({"b": np.array([0.1, 1 / 3])}, 1 / 3, 0.0)], {"seed": 1})
    d = json.loads(rep.to_json())
    assert list(d) == ["property", "verdict", "worst_violation", "threshold", "seeds", "details", "evidence"]
    assert rep.to_json() == rep.to_json()
    rows = rep.evidence_csv().splitlines()
    assert rows[0] == "property,input,statistic,standard_error"
    assert "0.33333333333333331" in rows[1]
    assert float(rows[1].split(",")[-2]) == 1 / 3
    with pytest.raises(ValueError):
        AuditReport("MIC", "pass", 0.0)
    with pytest.raises(ValueError):
        AuditReport("NFL", "maybe", 0.0)


def test_deviation_curve_validation():
    DeviationCurve(0.5, np.array([0, 1.0]), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        DeviationCurve(0.5, np.array([1.0, 0]), np.zeros(2), np.zeros(2))
    with pytest.raises(ValueError):
        DeviationCurve(0.5, np.array([0, 1.0]), np.zeros(3), np.zeros(2))


# -- truthfulness ----------------------------------------------------------------------


@pytest.mark.parametrize("n, m", [(2, 0.5), (5, 1.0), (8, 5.0)])
def test_dsic_passes_unperturbed(n, m):
    rep = dsic_audit(ssp(n, m), 200, seed=n)
    assert rep.verdict == "pass" and rep.worst_violation <= 1e-8


def test_dsic_fails_first_price():
    # paying one's own bid: shading strictly helps
    rep = dsic_audit(FirstPrice(3), 50, seed=0)
    assert rep.verdict == "fail" and rep.worst_violation > 0.01


def test_bnic_shaded_first_price():
    # n=2 uniform: bidding x at value v yields x (v - x/2), maximized at x = v
    rep, curves = bnic_audit(FirstPrice.shaded(2), uniform(), 50_000, seed=1)
    assert rep.verdict == "pass"
    assert len(curves) == 9
    v = curves[4].v_i
    best = curves[4].bid_grid[np.argmax(curves[4].expected_utility)]
    assert best == pytest.approx(v)
    rep, _ = bnic_audit(FirstPrice(2), uniform(), 50_000, seed=1)
    assert rep.verdict == "fail"


def test_bnic_budget_guard():
    with pytest.raises(SampleBudgetError):
        bnic_audit(ssp(3), uniform(), 50, seed=0)


def test_bnic_reproducible():
    mech = ssp(4, h=0.05)
    a, _ = bnic_audit(mech, uniform(), 20_000, seed=5)
    b, _ = bnic_audit(mech, uniform(), 20_000, seed=5)
    assert a.to_json() == b.to_json()


def test_bnic_detects_wrong_constant():
    # c = integral of the squared density (1) instead of E[v^2] (1/3): the term no longer averages out
    rep, _ = bnic_audit(ssp(5, h=0.2, c=1.0), uniform(), 50_000, seed=2)
    assert rep.verdict == "fail"


# -- collusion -------------------------------------------------------------------------


def test_scp1_passes(rng):
    rep = scp1_audit(ssp(4, m=2.0, h=0.05), 200, seed=1)
    assert rep.verdict == "pass"
    assert rep.details["identity_residual"] <= 1e-6
    rep = scp1_audit(SoftSecondPriceK(MechanismParams(n=5, k=2, h=0.02)), 40, seed=1)
    assert rep.verdict == "pass" and rep.details["identity_residual"] <= 1e-4


def test_scp1_fails_when_miner_keeps_fees():
    rep = scp1_audit(NaiveRevenue(ssp(3, m=3.0)), 100, seed=0)
    assert rep.verdict == "fail"


# -- feasibility -----------------------------------------------------------------------


def test_uir_bf_check():
    uir, bf = uir_bf_check(ssp(3), np.array([0.2, 0.9, 0.5]))
    assert np.all(uir >= 0) and bf >= 0
    uir, bf = uir_bf_check(EntryFee(2), np.array([0.0, 0.5]))
    assert uir[0] == pytest.approx(-0.1)
    assert bf == pytest.approx(0.2)


# -- path independence -----------------------------------------------------------------


def test_counterexample_exact_values():
    rep = counterexample_first_price()
    assert rep.path1 == Fraction(1, 4) and rep.path2 == 0
    assert rep.theta_values["theta2(1,1)"] == Fraction(-1, 4)
    assert rep.loop_discrepancy == Fraction(1, 4)
    assert "path-dependent" in rep.verdict
    assert rep.to_dict()["path1"] == 0.25


def test_first_price_theta_branches():
    F = Fraction
    assert first_price_theta((F(1), F(0))) == [F(1, 2), 0]
    assert first_price_theta((F(1, 2), F(1, 2))) == [F(-1, 8), F(-1, 8)]
    assert first_price_theta((0.5, 1.0)) == [0.0, 0.0]


def test_loop_integral_vanishes_for_variation_term(rng):
    th = lambda b: theta_all(np.asarray(b, float), 0.7, 0.4)  # noqa: E731
    for _ in range(50):
        x = np.sort(rng.random(2))
        y = np.sort(rng.random(2))
        assert abs(loop_integral(th, (x[0], y[0], x[1], y[1]), rng.random(2), (0, 3))) <= 1e-12
    rep = conservative_field_audit(th, 4, 200, seed=3)
    assert rep.verdict == "pass"
    rep = conservative_field_audit(first_price_theta, 2, 200, seed=3)
    assert rep.verdict == "fail"


def test_path_integral_telescopes():
    # a gradient field: increments of the potential b1 * b2
    th = lambda b: [b[0] * b[1], b[0] * b[1]]  # noqa: E731
    assert path_integral(th, [(0, 0), (1, 0), (1, 1)]) == pytest.approx(1.0)
    assert path_integral(th, [(0, 0), (0, 1), (1, 1)]) == pytest.approx(1.0)


# -- structure -------------------------------------------------------------------------


def test_structure_audits():
    assert symmetry_audit(ssp(5, h=0.1), 100, seed=0).verdict == "pass"
    assert competitiveness_audit(ssp(5), 200, seed=0).verdict == "pass"
    assert competitiveness_audit(Cooperative(3), 200, seed=0).verdict == "fail"
    assert nfl_audit(ssp(4, h=0.1), 100, seed=0).verdict == "pass"
    assert nfl_audit(EntryFee(3), 10, seed=0).verdict == "fail"


# -- burning ---------------------------------------------------------------------------


def test_burning_constant_allocation():
    rep = burning_audit(ConstantAllocation(6, 2), uniform(), 20_000, seed=0)
    assert rep.verdict == "pass"
    assert rep.details["premises_hold"] and rep.details["constant_allocation"]
    assert rep.details["reference_zero_revenue"]
    ev = {e.input: e for e in rep.evidence}
    assert ev["expected_revenue"].statistic == 0.0


def test_burning_constructed_mechanism():
    rep = burning_audit(ssp(6, h=0.03), uniform(), 50_000, seed=1)
    assert rep.verdict == "pass"
    assert not rep.details["flags"]["StrongBF"]
    assert rep.details["burn_significant"]
    ev = {e.input: e for e in rep.evidence}
    assert ev["expected_burn"].statistic > 3 * ev["expected_burn"].standard_error


def test_burning_flags_a_mechanism_that_contradicts_the_theorem():
    # strongly budget feasible, no-free-lunch, competitive, asserted BNIC and 1-SCP,
    # yet allocation is not constant: the audit must refuse it
    class Impossible(SoftSecondPriceK1):
        def revenue(self, b):
            return np.sum(self.allocation(b) * self.payment(b), axis=-1)

    rep = burning_audit(Impossible(MechanismParams(n=4)), uniform(), 10_000, seed=2, bnic=True, scp1=True)
    assert rep.details["premises_hold"]
    assert rep.verdict == "fail"


def test_burning_requires_block_size():
    m = ConstantAllocation(3)
    m.k = None
    with pytest.raises(ValueError):
        burning_audit(m, uniform(), 10, seed=0)


def test_fmt_round_trips():
    for x in (1 / 3, 1e-300, 123456789.123456789, -0.1):
        assert float(audit.fmt(x)) == x
