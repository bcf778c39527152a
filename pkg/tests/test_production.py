import numpy as np
import pytest

from closedmarket import (GoodListMismatch, aggregate_by_good,
                          check_production_space, economy, joint_frontier,
                          solve_production)


@pytest.fixture(scope="module")
def breakpoint_econ():
    def make(delta):
        return economy(["c1", "c2"], [delta, 10], ["g1", "g2"],
                       [[1, 0], [5, 10]], [[1, 1], [1, 1]])
    return make


def test_soap_production(soap):
    q, w, degenerate = solve_production(soap, [1.5, 2, 1])
    assert q == pytest.approx([10, 7.5, 8.125])
    assert w == pytest.approx([2.125, 0.75, 0.125])
    assert not degenerate


def test_breakpoint_below(breakpoint_econ):
    q, w, _ = solve_production(breakpoint_econ(1.0), [1, 1])
    assert q == pytest.approx([1.0, 0.5])
    assert w == pytest.approx([0.5, 0.1])


def test_breakpoint_above(breakpoint_econ):
    q, w, _ = solve_production(breakpoint_econ(3.0), [1, 1])
    assert q == pytest.approx([2.0, 0.0])
    assert w == pytest.approx([0.0, 0.2])


def test_breakpoint_sweep(breakpoint_econ):
    for delta in (1.0, 1.9):
        _, w, _ = solve_production(breakpoint_econ(delta), [1, 1])
        assert w == pytest.approx([0.5, 0.1])
    for delta in (2.1, 3.0):
        _, w, _ = solve_production(breakpoint_econ(delta), [1, 1])
        assert w == pytest.approx([0.0, 0.2])


def test_zero_prices_shut_everything(soap):
    q, w, _ = solve_production(soap, [0, 0, 0])
    assert np.all(q == 0) and np.all(w == 0)


def test_money_conservation_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        t = rng.uniform(0.1, 2, (3, 3))
        y = rng.uniform(0.5, 3, 3)
        e = economy(["a", "b", "c"], y, ["x", "y", "z"], t, np.ones((3, 3)))
        p = rng.uniform(0, 2, 3)
        q, w, _ = solve_production(e, p)
        assert float(p @ q) == pytest.approx(float(w @ y), rel=1e-6)


def test_price_scaling_scales_wages(soap):
    q1, w1, _ = solve_production(soap, [1.5, 2, 1])
    q2, w2, _ = solve_production(soap, [4.5, 6, 3])
    assert q2 == pytest.approx(q1)
    assert w2 == pytest.approx(3 * np.asarray(w1))
    assert np.array_equal(q1 > 1e-12, q2 > 1e-12)  # same active face


def test_check_production_space_accepts_solution(soap):
    p = [1.5, 2, 1]
    q, w, _ = solve_production(soap, p)
    ok, violations = check_production_space(soap, q, w, p)
    assert ok, violations


def test_check_flags_labor_overuse(soap):
    ok, violations = check_production_space(
        soap, [100, 7.5, 8.125], [2.125, 0.75, 0.125], [1.5, 2, 1])
    assert not ok
    assert any("labor constraint 0" in v for v in violations)


def test_check_flags_production_at_a_loss(breakpoint_econ):
    # wage bill above the price of a produced good breaks the profitability side
    e = breakpoint_econ(3.0)
    ok, violations = check_production_space(e, [2, 0], [2, 2], [1, 1])
    assert not ok
    assert any("loss" in v for v in violations)


def test_check_accepts_interior_space_points(breakpoint_econ):
    # membership in the production space does not require LP optimality
    e = breakpoint_econ(3.0)
    ok, violations = check_production_space(e, [1, 0], [0, 0.05], [1, 1])
    assert ok, violations


def test_joint_frontier_trade_gains():
    a = economy(["A"], [10], ["rice", "computers"], [[4, 2]], [[1, 1]])
    b = economy(["B"], [60], ["rice", "computers"], [[6, 15]], [[1, 1]])
    joint = joint_frontier([a, b])
    assert joint.m == 2 and joint.n == 4
    q, w, _ = solve_production(joint, [1, 1, 1, 1])
    totals = aggregate_by_good(joint, q)
    assert totals["rice"] == pytest.approx(10.0)
    assert totals["computers"] == pytest.approx(5.0)


def test_joint_frontier_single_identity(soap):
    assert joint_frontier([soap]) is soap


def test_joint_frontier_rejects_mismatched_goods(soap):
    other = economy(["Z"], [1], ["rice"], [[1]], [[1]])
    with pytest.raises(GoodListMismatch):
        joint_frontier([soap, other])
