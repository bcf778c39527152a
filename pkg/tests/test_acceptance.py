"""End-to-end acceptance checks, one test per shipped claim.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one PASS/FAIL line
per criterion. Tolerances are pinned here and nowhere else.
"""

import functools

import numpy as np
import pytest

from closedmarket import (EquilibriumPoint, FisherInstance, Infeasible,
                          check_ad_conditions, classify_2x2, economy,
                          extract_combinatorics, joint_frontier, log_welfare,
                          normalize_point, payoff, pure_nash,
                          reconstruct_from_forest, run_tatonnement,
                          scenario_delta, solve_equilibrium, solve_fisher,
                          solve_production, sweep, verify_sm, zone_map)
from closedmarket.production import aggregate_by_good

from .oracles import eisenberg_gale_batch, random_economy_arrays, random_fisher

SOAP_FOREST = ((0, 1, 2), (0, 1, 2), ((0, 0), (1, 0), (1, 1), (2, 1), (2, 2)))
BOUTIQUE_FOREST = ((0, 1, 2), (0, 1, 2), ((0, 0), (0, 1), (1, 0), (2, 0), (2, 2)))

TABLE_3 = {
    # (alpha, beta) -> per-capita payoffs of the three classes
    (1.0, 1.0): (1.875, 0.594, 0.169),
    (1.0, 2.0): (1.688, 0.859, 0.125),
    (1.0, 3.0): (1.625, 0.948, 0.110),
    (1.5, 1.0): (2.250, 0.500, 0.169),
    (1.5, 2.0): (2.125, 0.750, 0.125),
    (1.5, 3.0): (2.083, 0.833, 0.110),
    (3.0, 1.0): (2.625, 0.406, 0.169),
    (3.0, 2.0): (2.563, 0.641, 0.125),
    (3.0, 3.0): (2.542, 0.719, 0.110),
}


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"ACCEPTANCE {label}: FAIL")
                raise
            print(f"ACCEPTANCE {label}: PASS")
        return run
    return wrap


def _boutique(labor):
    return economy(
        ["L1", "L2", "L3"], labor, ["mass", "boutique", "household"],
        [[0.5, 0, 0], [0.5, 2, 0], [0.5, 4, 8]],
        [[1, 4 / 3, 0], [1, 0, 0], [1, 0, 2 / 3]],
        [[1.5, 2, 0], [1.5, 0, 0], [1.5, 0, 1]])


@criterion("1 soap truth point")
def test_criterion_1_truth_point(soap):
    point = reconstruct_from_forest(soap, SOAP_FOREST)
    assert np.array_equal(point.quantities, np.array([10.0, 7.5, 8.125]))
    assert payoff(soap, point) == pytest.approx([2.125, 0.750, 0.125], abs=1e-3)
    solved = solve_equilibrium(soap)
    assert solved.point.quantities == pytest.approx([10.0, 7.5, 8.125], abs=1e-9)
    assert payoff(soap, solved.point) == pytest.approx([2.125, 0.750, 0.125], abs=1e-3)


@criterion("2 strategy-grid payoffs and pure Nash")
def test_criterion_2_payoff_grid(soap_family):
    table = sweep(soap_family, {"alpha": [1, 1.5, 3], "beta": [1, 2, 3]})
    assert not table.unsolved
    for (a, cell_a) in ((1.0, 0), (1.5, 1), (3.0, 2)):
        for (b, cell_b) in ((1.0, 0), (2.0, 1), (3.0, 2)):
            got = table.payoffs[:, cell_a, cell_b]
            assert got == pytest.approx(TABLE_3[(a, b)], abs=1e-3), (a, b)
    assert pure_nash(table) == [(0, 0)]


@criterion("3 price adjustment converges on the three-sector market")
def test_criterion_3_convergence(converging_market):
    trace = run_tatonnement(converging_market, [0.7379, 0.9379, 0.3617])
    assert trace.status.kind == "converged"
    assert trace.status.step <= 5
    final = trace.final
    assert final.prices == pytest.approx([1.5099, 2.8636, 1.2273], abs=1e-3)
    assert final.quantities == pytest.approx([0.2631, 0.0526, 0.3684], abs=1e-3)
    assert final.wages == pytest.approx([0.086693, 0.3865, 0.52681], abs=1e-3)


@criterion("4 price adjustment cycles with period 2")
def test_criterion_4_cycle(cycling_market):
    trace = run_tatonnement(cycling_market, np.full(3, 1 / 3))
    assert trace.status.kind == "cycle"
    assert trace.status.period == 2
    a = trace.states[trace.status.first]
    b = trace.states[trace.status.first + 1]
    if a.quantities[1] == 0:
        a, b = b, a
    supply = cycling_market.labor_supply
    assert a.quantities == pytest.approx([4.35, 9.78, 0], abs=1e-2)
    assert a.prices == pytest.approx([0.11, 0.05, 0.14], abs=1e-2)
    assert a.wages * supply == pytest.approx([0.52, 0.48, 0], abs=1e-2)
    assert b.quantities == pytest.approx([14.7, 0, 10.3], abs=1e-2 * 10)
    assert b.prices == pytest.approx([0.04, 0.12, 0.05], abs=1e-2)
    assert b.wages * supply == pytest.approx([0.12, 0, 0.88], abs=1e-2)


@criterion("5 verification fixture and component count")
def test_criterion_5_verification(two_class_three_goods):
    point = EquilibriumPoint.from_parts(
        two_class_three_goods,
        [0.5235, 0.8324, 0.6470], [0.5639, 0.2426, 0.3934], [0.2952, 0.4565],
        [[0.5639, 0, 0], [0, 0.2426, 0.3934]])
    ok, violations = verify_sm(two_class_three_goods, point, tol=2e-3)
    assert ok, violations
    data = extract_combinatorics(point, econ=two_class_three_goods)
    assert data.components == 2
    assert data.components == two_class_three_goods.n - two_class_three_goods.m + 1


@criterion("6 two-by-two zones, closed forms, payoff spike")
def test_criterion_6_zones(two_by_two, two_by_two_family):
    zm = zone_map(two_by_two_family, {
        "alpha": [0.3, 0.4, 0.6, 0.8, 1.0],
        "beta": [0.2, 0.35, 0.5, 0.8, 0.9, 1.0]})
    assert not zm.unsolved
    label = {(a, b): zm.labels[i][j]
             for i, a in enumerate(zm.grids[0]) for j, b in enumerate(zm.grids[1])}
    assert label[(1.0, 0.5)] == "I[0.1]|J[0.1]|F[0-0;1-0;1-1]"       # forest 1
    assert label[(0.6, 0.9)] == "I[0.1]|J[0.1]|F[0-0;0-1;1-0]"       # forest 2
    assert label[(0.3, 0.35)] == "I[0.1]|J[0.1]|F[0-1;1-0;1-1]"      # forest 3
    assert label[(0.4, 1.0)] == "I[0.1]|J[0.1]|F[0-1;1-0]"           # forest 4
    assert label[(1.0, 0.2)] == "one-class:I[1]|J[1]|F[1-1]"         # forest 5
    assert label[(0.8, 0.8)] == "non-generic/cycle"
    assert label[(1.0, 1.0)] == "non-generic/cycle"

    c = classify_2x2(two_by_two, 1.0, 0.5)
    assert c.payoffs == pytest.approx([8 - 2 / 0.5, 2 + 2 / 0.5], abs=1e-6)
    assert c.class_wages == pytest.approx([1 - 2 / 3, 2 / 3], abs=1e-6)
    c = classify_2x2(two_by_two, 0.6, 0.9)
    assert c.payoffs == pytest.approx([10 - 4 / 0.6, 4 / 0.6], abs=1e-6)
    assert c.class_wages[1] == pytest.approx(2 / (1 + 4 * 0.6), abs=1e-6)
    c = classify_2x2(two_by_two, 0.3, 0.35)
    assert c.payoffs == pytest.approx([8 * 0.35 - 2, 12 - 8 * 0.35], abs=1e-6)
    c = classify_2x2(two_by_two, 0.4, 1.0)
    assert c.payoffs == pytest.approx([2.0, 8.0], abs=1e-6)
    assert c.class_wages == pytest.approx([1 / 3, 2 / 3], abs=1e-6)
    c = classify_2x2(two_by_two, 1.0, 0.2)
    assert c.payoffs == pytest.approx([0.0, 4.0], abs=1e-6)

    # the second class's payoff spikes just above the shutdown band ...
    band = [classify_2x2(two_by_two, 1.0, b).payoffs[1]
            for b in (0.2501, 0.251, 0.2525, 0.255, 0.26)]
    assert max(band) > 9.9
    # ... but collapses exactly on it
    assert classify_2x2(two_by_two, 1.0, 0.25).payoffs[1] == pytest.approx(4.0)


@criterion("7 boutique structure, technology update, migration")
def test_criterion_7_scenarios(soap, soap_family):
    with pytest.raises(Infeasible):
        reconstruct_from_forest(_boutique([5, 20, 100]), BOUTIQUE_FOREST)

    scarce = _boutique([5, 10, 100])
    point = reconstruct_from_forest(scarce, BOUTIQUE_FOREST)
    ok, violations = verify_sm(scarce, point)
    assert ok, violations

    # the printed structure-switch payoff rows; the first was computed with
    # the posted ratios rounded to two decimals (2/3 -> 0.66)
    rows = {(1.0, 0.66): (3.124, 0.503, 0.125),
            (1.0, 1.0): (3.187, 0.375, 0.147)}
    for (a, b), expected in rows.items():
        econ = economy(scarce.class_names, [5, 20, 100], scarce.good_names,
                       scarce.technology,
                       [[1, a, 0], [1, 0, 0], [1, 0, b]],
                       scarce.true_utility)
        pt = reconstruct_from_forest(econ, BOUTIQUE_FOREST)
        assert payoff(econ, pt) == pytest.approx(expected, abs=1e-3), (a, b)

    report = scenario_delta(soap, ("technology",
                                   [[0.5, 0, 0], [0.5, 2, 0], [1, 4, 8]]))
    assert report.production_before == pytest.approx([10, 7.5, 8.125])
    assert report.production_after == pytest.approx([10, 7.5, 7.5])
    assert report.payoffs_before == pytest.approx([2.125, 0.75, 0.125], abs=1e-3)
    assert report.payoffs_after == pytest.approx([2.0, 0.75, 0.125], abs=1e-3)

    # migration table: strategic classes gain or lose exactly as printed
    y21, y32 = [10, 15, 100], [5, 25, 95]
    flags = {}
    for label, alpha, beta in (("a<", 1.0, 2.0), ("a>", 3.0, 2.0),
                               ("b<", 1.5, 1.0), ("b>", 1.5, 3.0)):
        econ = soap_family.instantiate(alpha=alpha, beta=beta)
        class_idx = 1 if label.startswith("a") else 2
        for yname, labor in (("y21", y21), ("y32", y32)):
            rep = scenario_delta(econ, ("labor", labor))
            flags[(label, yname)] = rep.payoff_flags[class_idx]
            if label.startswith("b") and yname == "y21":
                drift = abs(rep.payoffs_after[2] - rep.payoffs_before[2])
                assert drift <= 0.02  # side effect on the non-moving class is small
    assert flags[("a<", "y21")] == "increase"
    assert flags[("a<", "y32")] == "decrease"
    assert flags[("a>", "y21")] == "decrease"
    assert flags[("a>", "y32")] == "increase"
    assert flags[("b<", "y32")] == "increase"
    assert flags[("b>", "y32")] == "decrease"


@pytest.mark.xfail(strict=True, reason=(
    "the printed scarce-labor boutique payoffs (2.129, 0.128 for the first and "
    "third class) are inconsistent with market clearing at the stated inputs; "
    "exact arithmetic gives (2.125, 0.750, 0.125) and no parameter rounding "
    "reproduces all three printed values"))
@criterion("7b printed scarce-boutique payoff triple")
def test_criterion_7b_printed_scarce_triple():
    scarce = _boutique([5, 10, 100])
    point = reconstruct_from_forest(scarce, BOUTIQUE_FOREST)
    assert payoff(scarce, point) == pytest.approx([2.129, 0.750, 0.128], abs=1e-3)


@criterion("8a market solver matches the log-welfare maximizer")
def test_criterion_8a_welfare_oracle():
    rng = np.random.default_rng(1234)
    budgets, quantities, utilities, solver_vals = [], [], [], []
    for _ in range(200):
        w, q, u = random_fisher(rng)
        inst = FisherInstance(w, q, u)
        sol = solve_fisher(inst)
        solver_vals.append(log_welfare(inst, sol.allocation))
        budgets.append(w)
        quantities.append(q)
        utilities.append(u)
    _, oracle_vals = eisenberg_gale_batch(
        np.array(budgets), np.array(quantities), np.array(utilities))
    gaps = np.abs(np.array(solver_vals) - oracle_vals)
    assert gaps.max() <= 1e-6, gaps.max()


def _random_verified_points(count, seed=77):
    rng = np.random.default_rng(seed)
    points = []
    attempts = 0
    while len(points) < count and attempts < count * 3:
        attempts += 1
        t, y, u = random_economy_arrays(rng)
        econ = economy(["a", "b", "c"], y, ["x", "y", "z"], t, u)
        try:
            res = solve_equilibrium(econ)
        except Exception:
            continue
        ok, _ = verify_sm(econ, res.point)
        if ok:
            points.append((econ, res.point))
    return points


def _fixture_points(soap, two_class_three_goods, converging_market, two_by_two):
    # solver-produced equilibria for every bundled market; the printed
    # candidate from the two-class fixture only verifies at its own rounding
    # and is checked under criterion 5, not here
    out = [(soap, solve_equilibrium(soap).point)]
    out.append((two_class_three_goods, reconstruct_from_forest(
        two_class_three_goods, ((0, 1), (0, 1, 2), ((0, 0), (1, 1), (1, 2))))))
    out.append((converging_market,
                run_tatonnement(converging_market, [0.7379, 0.9379, 0.3617]).final))
    for a, b in ((1.0, 0.5), (0.6, 0.9), (0.4, 1.0), (1.0, 0.2)):
        econ = two_by_two.with_utility([[a, 1], [b, 1]])
        out.append((econ, solve_equilibrium(econ).point))
    scarce = _boutique([5, 10, 100])
    out.append((scarce, reconstruct_from_forest(scarce, BOUTIQUE_FOREST)))
    return out


@criterion("8b money conservation on every verified point")
def test_criterion_8b_money_conservation(soap, two_class_three_goods,
                                         converging_market, two_by_two):
    pool = _fixture_points(soap, two_class_three_goods, converging_market,
                           two_by_two) + _random_verified_points(100)
    assert len(pool) >= 108
    for econ, point in pool:
        revenue = float(point.prices @ point.quantities)
        wage_bill = float(point.wages @ econ.labor_supply)
        assert revenue == pytest.approx(wage_bill, rel=1e-6)


@criterion("8c row-scaling invariance of market solutions")
def test_criterion_8c_row_scaling():
    rng = np.random.default_rng(4321)
    for _ in range(50):
        w, q, u = random_fisher(rng)
        sol = solve_fisher(FisherInstance(w, q, u))
        scaled = u * rng.uniform(0.2, 5.0, 3)[:, None]
        sol2 = solve_fisher(FisherInstance(w, q, scaled))
        assert sol2.prices == pytest.approx(sol.prices, rel=1e-6, abs=1e-9)
        assert sol2.allocation == pytest.approx(sol.allocation, rel=1e-6, abs=1e-6)


@criterion("8d full verifier agrees with the four-condition checker")
def test_criterion_8d_verifier_vs_ad(soap, two_class_three_goods,
                                     converging_market, two_by_two):
    pool = _fixture_points(soap, two_class_three_goods, converging_market,
                           two_by_two) + _random_verified_points(100, seed=99)
    random_count = len(pool) - 8
    assert random_count >= 100
    for econ, point in pool:
        ok, violations = verify_sm(econ, point, tol=2e-3)
        report = check_ad_conditions(econ, point, tol=2e-3)
        assert ok == report.all_hold(), (violations, report.violations)
        assert ok


@criterion("8e reconstruction round-trips on connected fixtures")
def test_criterion_8e_roundtrip(soap, two_by_two, converging_market):
    cases = [(soap, SOAP_FOREST), (_boutique([5, 10, 100]), BOUTIQUE_FOREST)]
    for a, b, edges in (
            (1.0, 0.5, ((0, 0), (1, 0), (1, 1))),
            (0.6, 0.9, ((0, 0), (0, 1), (1, 0))),
            (0.3, 0.35, ((0, 1), (1, 0), (1, 1)))):
        cases.append((two_by_two.with_utility([[a, 1], [b, 1]]),
                      ((0, 1), (0, 1), edges)))
    taton = run_tatonnement(converging_market, [0.7379, 0.9379, 0.3617]).final
    data = extract_combinatorics(taton, econ=converging_market)
    cases.append((converging_market,
                  (tuple(sorted(data.active_classes)),
                   tuple(sorted(data.active_goods)),
                   tuple(sorted(data.forest)))))
    for econ, forest_data in cases:
        assert len(forest_data[0]) == len(forest_data[1])  # k = 1 cases only
        point = reconstruct_from_forest(econ, forest_data)
        ok, violations = verify_sm(econ, point)
        assert ok, violations
        extracted = extract_combinatorics(point, econ=econ)
        assert extracted.forest == set(forest_data[2])
        assert extracted.components == 1


@criterion("9 production breakpoint and the gains from trade")
def test_criterion_9_production(soap):
    for delta in (1.0, 1.9):
        econ = economy(["c1", "c2"], [delta, 10], ["g1", "g2"],
                       [[1, 0], [5, 10]], [[1, 1], [1, 1]])
        _, wages, _ = solve_production(econ, [1, 1])
        assert wages == pytest.approx([0.5, 0.1])
    for delta in (2.1, 3.0):
        econ = economy(["c1", "c2"], [delta, 10], ["g1", "g2"],
                       [[1, 0], [5, 10]], [[1, 1], [1, 1]])
        _, wages, _ = solve_production(econ, [1, 1])
        assert wages == pytest.approx([0.0, 0.2])
    a = economy(["A"], [10], ["rice", "computers"], [[4, 2]], [[1, 1]])
    b = economy(["B"], [60], ["rice", "computers"], [[6, 15]], [[1, 1]])
    joint = joint_frontier([a, b])
    q, _, _ = solve_production(joint, [1, 1, 1, 1])
    totals = aggregate_by_good(joint, q)
    assert totals["rice"] == pytest.approx(10.0)
    assert totals["computers"] == pytest.approx(5.0)
