"""Revenue-maximizing production and its dual wages.

Given prices, producers choose quantities maximizing p.q subject to the
labor constraints Tq <= Y; per-person wages are the duals of those
constraints, so revenue always equals the wage bill.
"""

from __future__ import annotations

import numpy as np

from .lp import LpProblem, solve_lp
from .model import Economy, ValidationError, economy

__all__ = [
    "GoodListMismatch",
    "solve_production",
    "check_production_space",
    "joint_frontier",
    "aggregate_by_good",
]

SLACK_TOL = 1e-7


class GoodListMismatch(ValidationError):
    pass


def solve_production(econ: Economy, prices, tol: float = 1e-9):
    """Optimal quantities and dual wages at the given prices.

    Returns ``(quantities, wages, degenerate)``. Unprofitable goods come back
    with zero quantity; slack labor classes get zero wage.
    """
    p = np.asarray(prices, dtype=float)
    if p.shape != (econ.n,):
        raise ValueError(f"expected {econ.n} prices, got {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("prices must be finite and >= 0")
    sol = solve_lp(LpProblem(p, econ.technology, econ.labor_supply), tol=tol)
    # Tq <= Y with Y > 0 is always feasible and bounded (every good uses labor)
    if sol.status != "optimal":
        raise RuntimeError(f"production LP ended with status {sol.status}")
    q = sol.primal.copy()
    w = sol.dual.copy()
    q[q < 0] = 0.0
    w[w < 0] = 0.0
    return q, w, sol.degenerate


def check_production_space(econ: Economy, quantities, wages, prices, tol: float = SLACK_TOL):
    """Membership test for the production space at the given prices.

    Checks Tq <= Y, nonnegativity, and that produced goods are weakly
    profitable; returns ``(ok, violations)`` with human-readable entries.
    """
    q = np.asarray(quantities, dtype=float)
    w = np.asarray(wages, dtype=float)
    p = np.asarray(prices, dtype=float)
    violations = []
    scale = max(1.0, float(np.abs(p).max(initial=0.0)), float(np.abs(econ.labor_supply).max()))
    used = econ.technology @ q
    for i in range(econ.m):
        if used[i] > econ.labor_supply[i] + tol * scale:
            violations.append(
                f"labor constraint {i} overused: {used[i]:.6g} > {econ.labor_supply[i]:.6g}")
    wt = w @ econ.technology
    for j in range(econ.n):
        if q[j] * (p[j] - wt[j]) < -tol * scale:
            violations.append(
                f"good {j} produced at a loss: q={q[j]:.6g}, p-wT={p[j] - wt[j]:.6g}")
    if np.any(q < -tol):
        violations.append("negative quantity")
    if np.any(w < -tol):
        violations.append("negative wage")
    return (not violations), violations


def joint_frontier(economies) -> Economy:
    """Merge economies sharing a good list into one block-diagonal economy.

    Each society keeps its own labor classes and its own copy of every good
    column, so the merged production frontier is the Minkowski sum of the
    individual ones. Good names repeat across blocks; use
    :func:`aggregate_by_good` to sum quantities per named good.
    """
    econs = list(economies)
    if not econs:
        raise GoodListMismatch([("dimension", "no economies to join")])
    if len(econs) == 1:
        return econs[0]
    goods = econs[0].good_names
    for e in econs[1:]:
        if e.good_names != goods:
            raise GoodListMismatch(
                [("goods", f"good lists differ: {goods} vs {e.good_names}")])
    m_total = sum(e.m for e in econs)
    n_total = sum(e.n for e in econs)
    tech = np.zeros((m_total, n_total))
    util = np.zeros((m_total, n_total))
    true_util = np.zeros((m_total, n_total))
    names, supply, good_names = [], [], []
    row = col = 0
    for k, e in enumerate(econs):
        tech[row:row + e.m, col:col + e.n] = e.technology
        util[row:row + e.m, col:col + e.n] = e.utility
        true_util[row:row + e.m, col:col + e.n] = e.true_utility
        names.extend(f"{name}#{k}" if names.count(name) else name for name in e.class_names)
        supply.extend(e.labor_supply)
        good_names.extend(e.good_names)
        row += e.m
        col += e.n
    return economy(names, supply, good_names, tech, util, true_util)


def aggregate_by_good(econ: Economy, quantities) -> dict[str, float]:
    """Sum a quantity vector over repeated good names (for joined economies)."""
    q = np.asarray(quantities, dtype=float)
    totals: dict[str, float] = {}
    for name, val in zip(econ.good_names, q):
        totals[name] = totals.get(name, 0.0) + float(val)
    return totals
