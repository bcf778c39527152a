"""The game over posted utilities.

Classes post utility rows that shape the market equilibrium, but are paid in
the true-utility value of what they end up consuming. This module evaluates
those payoffs over parameter grids, detects pure Nash cells, maps the
parameter space into zones of constant market structure, and probes payoff
behaviour across zone boundaries.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .equilibrium import extract_combinatorics, is_generic
from .fisher import _forest_components, _tree_flows
from .model import Economy, EquilibriumPoint, ParametricFamily
from .tatonnement import UnsolvedMarket, solve_equilibrium

__all__ = [
    "IncompleteTable",
    "FormulaUndefined",
    "GameTable",
    "ZoneMap",
    "Classification",
    "ProbeReport",
    "DeltaReport",
    "payoff",
    "sweep",
    "pure_nash",
    "zone_map",
    "classify_2x2",
    "boundary_probe",
    "scenario_delta",
]


class IncompleteTable(RuntimeError):
    """Nash detection asked for on a table with unsolved cells."""


class FormulaUndefined(ArithmeticError):
    """A closed-form branch needs a technology ratio that does not exist."""


def payoff(econ: Economy, point: EquilibriumPoint, convention: str = "per_capita") -> np.ndarray:
    """True-utility value of each class's allocation.

    ``total`` sums true utility over the class; ``per_capita`` divides by the
    class size.
    """
    totals = (econ.true_utility * point.allocation).sum(axis=1)
    if convention == "total":
        return totals
    if convention == "per_capita":
        return totals / econ.labor_supply
    raise ValueError(f"unknown payoff convention {convention!r}")


@dataclass(frozen=True)
class GameTable:
    params: tuple[str, ...]
    grids: tuple[tuple[float, ...], ...]
    players: tuple[int, ...]              # class index owning each parameter
    payoffs: np.ndarray                   # shape (m, len(grid_0), len(grid_1), ...)
    convention: str
    unsolved: frozenset[tuple[int, ...]]
    labels: dict                          # cell -> canonical structure label
    multiplicity: dict                    # cell -> count of distinct verified points

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.grids)

    def cells(self):
        return itertools.product(*(range(len(g)) for g in self.grids))


def sweep(family: ParametricFamily, grids: dict, convention: str = "per_capita",
          tol: float = 1e-7, seed: int = 0) -> GameTable:
    """Solve the market at every joint strategy and tabulate payoffs.

    ``grids`` maps parameter names to value lists. Cells where no
    equilibrium could be found are carried in ``unsolved`` rather than
    raised.
    """
    names = family.names
    missing = [p for p in names if p not in grids]
    if missing:
        raise KeyError(f"no grid for parameters {missing}")
    grid_vals = tuple(tuple(float(v) for v in grids[p]) for p in names)
    shape = tuple(len(g) for g in grid_vals)
    m = family.base.m
    payoffs = np.full((m,) + shape, np.nan)
    unsolved = set()
    labels = {}
    multiplicity = {}
    for cell in itertools.product(*(range(s) for s in shape)):
        values = {p: grid_vals[k][cell[k]] for k, p in enumerate(names)}
        econ = family.instantiate(**values)
        try:
            res = solve_equilibrium(econ, tol=tol, seed=seed)
        except UnsolvedMarket:
            unsolved.add(cell)
            continue
        payoffs[(slice(None),) + cell] = payoff(econ, res.point, convention)
        labels[cell] = _cell_label(econ, res.point)
        multiplicity[cell] = res.multiplicity
    return GameTable(names, grid_vals, family.players, payoffs, convention,
                     frozenset(unsolved), labels, multiplicity)


def pure_nash(table: GameTable, eps: float = 1e-9) -> list[tuple[int, ...]]:
    """Cells where no player gains by a unilateral move along its own grid."""
    if table.unsolved:
        raise IncompleteTable(f"{len(table.unsolved)} unsolved cells")
    out = []
    for cell in table.cells():
        best = True
        for axis, player in enumerate(table.players):
            here = table.payoffs[(player,) + cell]
            for alt in range(len(table.grids[axis])):
                if alt == cell[axis]:
                    continue
                other = list(cell)
                other[axis] = alt
                if table.payoffs[(player,) + tuple(other)] > here + eps:
                    best = False
                    break
            if not best:
                break
        if best:
            out.append(cell)
    return out


def _cell_label(econ: Economy, point: EquilibriumPoint) -> str:
    data = extract_combinatorics(point, econ=econ)
    generic, _ = is_generic(econ, point)
    base = data.canonical_label()
    if _forest_components(econ.m, econ.n, sorted(data.forest)) is None:
        return "non-generic/cycle"
    if len(data.active_classes) == 1 and econ.m > 1:
        base = "one-class:" + base
    if not generic:
        return base + "/boundary"
    return base


@dataclass(frozen=True)
class ZoneMap:
    params: tuple[str, str]
    grids: tuple[tuple[float, ...], tuple[float, ...]]
    labels: list                        # labels[i][j] for (grid0[i], grid1[j])
    legend: dict                        # label -> CombinatorialData (or None)
    unsolved: frozenset[tuple[int, int]]


def zone_map(family: ParametricFamily, grids: dict, tol: float = 1e-7,
             seed: int = 0) -> ZoneMap:
    """Label every grid point of a two-parameter family by market structure.

    Non-generic points are labelled ``non-generic/cycle`` when the
    allocation graph has a cycle and get a ``/boundary`` suffix when some
    other constraint ties. One-class cells carry a ``one-class:`` prefix.
    """
    if len(family.bindings) != 2:
        raise ValueError("zone maps need exactly two bound parameters")
    names = family.names
    g0 = tuple(float(v) for v in grids[names[0]])
    g1 = tuple(float(v) for v in grids[names[1]])
    labels = [["unsolved"] * len(g1) for _ in g0]
    legend: dict = {}
    unsolved = set()
    for a, va in enumerate(g0):
        for b, vb in enumerate(g1):
            econ = family.instantiate(**{names[0]: va, names[1]: vb})
            try:
                res = solve_equilibrium(econ, tol=tol, seed=seed)
            except UnsolvedMarket:
                unsolved.add((a, b))
                continue
            label = _cell_label(econ, res.point)
            labels[a][b] = label
            if label not in legend:
                legend[label] = extract_combinatorics(res.point, econ=econ)
    return ZoneMap((names[0], names[1]), (g0, g1), labels, legend, frozenset(unsolved))


# ---------------------------------------------------------------------------
# Closed forms for two-class, two-good markets

TWO_BY_TWO_TREES = {
    "forest-1": ((0, 0), (1, 0), (1, 1)),   # class 2 splits, ratio = beta
    "forest-2": ((0, 0), (0, 1), (1, 0)),   # class 1 splits, ratio = alpha
    "forest-3": ((0, 1), (1, 0), (1, 1)),   # class 2 splits, ratio = beta
    "forest-6": ((0, 0), (0, 1), (1, 1)),   # class 1 splits, ratio = alpha
}
TWO_BY_TWO_MATCHINGS = {
    "forest-4": ((0, 1), (1, 0)),
    "matching-diag": ((0, 0), (1, 1)),
}


@dataclass(frozen=True)
class Classification:
    name: str                       # forest-1..6, matching-diag, one-class, cycle
    forest: frozenset
    price_ratio: float | None       # p1/p2 (None when good 2 is not priced)
    class_wages: np.ndarray         # money per class, total normalized to 1
    payoffs: np.ndarray | None      # total true utility per class; None for a cycle
    payoff_interval: tuple | None   # per-class (lo, hi) across the cycle's allocations
    generic: bool
    method: str                     # "closed-form" | "numeric"


def _eval_2x2_tree(econ: Economy, edges, ratio, alpha, beta, tol):
    """Wages, flows and payoffs for one tree structure at p1/p2 = ratio."""
    tinv = np.linalg.inv(econ.technology)
    q = tinv @ econ.labor_supply
    p = np.array([ratio, 1.0])
    w_pp = p @ tinv
    if np.any(w_pp <= tol):
        return None
    wages = w_pp * econ.labor_supply
    flows = _tree_flows(list(edges), {0: wages[0], 1: wages[1]},
                        {0: p[0] * q[0], 1: p[1] * q[1]})
    if min(flows.values()) < -1e-12 * wages.sum():
        return None
    # spending must stay on best-ratio goods
    u = np.array([[alpha, 1.0], [beta, 1.0]])
    bb = [max(u[i, 0] / p[0], u[i, 1] / p[1]) for i in range(2)]
    for (i, j) in flows:
        if u[i, j] / p[j] < bb[i] * (1 - 1e-12):
            return None
    x = np.zeros((2, 2))
    for (i, j), amount in flows.items():
        x[i, j] = max(amount, 0.0) / p[j]
    scale = wages.sum()
    return wages / scale, x, (econ.true_utility * x).sum(axis=1)


def _matching_ratio(econ: Economy, edges):
    """p1/p2 for a two-component matching, from per-component money balance."""
    tinv = np.linalg.inv(econ.technology)
    q = tinv @ econ.labor_supply
    y = econ.labor_supply
    (i0, j0) = sorted(edges)[0]           # class 0's edge
    # class 0's wage money must equal the revenue of the good it consumes
    # Y0 * (r*tinv[0,0] + tinv[1,0]) == p_{j0} * q_{j0} with p = (r, 1)
    a = y[0] * tinv[0, 0]
    b = y[0] * tinv[1, 0]
    if j0 == 1:
        if abs(a) < 1e-300:
            raise FormulaUndefined("matching ratio needs tinv[0,0] != 0")
        return (q[1] - b) / a
    denom = a - q[0]
    if abs(denom) < 1e-300:
        raise FormulaUndefined("matching ratio is degenerate")
    return -b / denom


def _one_class_2x2(econ: Economy, producer, good, alpha, beta, tol):
    """One active class working one good; the other class idles unpaid."""
    t = econ.technology
    if t[producer, good] <= 0:
        return None
    q_val = econ.labor_supply[producer] / t[producer, good]
    other_class = 1 - producer
    if t[other_class, good] * q_val > econ.labor_supply[other_class] + tol:
        return None
    u = np.array([[alpha, 1.0], [beta, 1.0]])
    if u[producer, good] <= 0:
        return None
    other_good = 1 - good
    # the idle good must not be worth producing at its virtual price
    # virtual p = u[producer, other]/u[producer, good] * p_good,
    # cost = w * t[producer, other] with w = p_good / t[producer, good]
    lhs = u[producer, other_good] / u[producer, good]
    rhs = t[producer, other_good] / t[producer, good]
    if lhs > rhs + tol:
        return None
    x = np.zeros((2, 2))
    x[producer, good] = q_val
    wages = np.zeros(2)
    wages[producer] = 1.0
    payoffs = (econ.true_utility * x).sum(axis=1)
    virt = lhs  # virtual price of the idle good, with the produced good at 1
    ratio = virt if good == 1 else (1.0 / virt if virt > 0 else None)
    return wages, x, payoffs, ratio


def classify_2x2(econ: Economy, alpha: float, beta: float, tol: float = 1e-9) -> Classification:
    """Closed-form structure and payoffs for a two-class, two-good market.

    ``alpha`` and ``beta`` are the posted first-to-second-good utility
    ratios of the two classes. Falls back to the numeric solver whenever a
    needed technology ratio does not exist for the closed forms.
    """
    if econ.m != 2 or econ.n != 2:
        raise ValueError("classify_2x2 needs a 2x2 economy")
    try:
        return _classify_closed(econ, float(alpha), float(beta), tol)
    except FormulaUndefined:
        return _classify_numeric(econ, float(alpha), float(beta), tol)


def _classify_closed(econ, alpha, beta, tol):
    t = econ.technology
    if abs(np.linalg.det(t)) < 1e-12:
        raise FormulaUndefined("technology matrix is singular")
    q = np.linalg.inv(t) @ econ.labor_supply

    tree_order = ["forest-1", "forest-2", "forest-4", "forest-3", "forest-6"]

    if q[0] > tol and q[1] > tol:
        # a tie of the posted ratios makes both classes split: allocations
        # form an interval between the adjoining tree structures
        if abs(alpha - beta) <= 1e-12 * max(1.0, abs(alpha)):
            sides = []
            for name in tree_order:
                if name == "forest-4":
                    continue
                got = _eval_2x2_tree(econ, TWO_BY_TWO_TREES[name],
                                     alpha if name in ("forest-2", "forest-6") else beta,
                                     alpha, beta, tol)
                if got is not None:
                    sides.append(got)
            if sides:
                wages = sides[0][0]
                pay = np.array([g[2] for g in sides])
                interval = tuple((float(pay[:, i].min()), float(pay[:, i].max()))
                                 for i in range(2))
                return Classification(
                    "cycle", frozenset(TWO_BY_TWO_TREES["forest-1"])
                    | frozenset(TWO_BY_TWO_TREES["forest-2"]),
                    alpha, wages, None, interval, False, "closed-form")

        for name in tree_order:
            if name == "forest-4":
                try:
                    ratio = _matching_ratio(econ, TWO_BY_TWO_MATCHINGS["forest-4"])
                except FormulaUndefined:
                    continue
                if ratio <= 0 or alpha > ratio + tol or beta < ratio - tol:
                    continue
                got = _eval_2x2_tree(econ, TWO_BY_TWO_MATCHINGS["forest-4"],
                                     ratio, alpha, beta, tol)
                if got is None:
                    continue
                wages, x, pay = got
                generic = alpha < ratio - tol and beta > ratio + tol
                return Classification("forest-4",
                                      frozenset(TWO_BY_TWO_MATCHINGS["forest-4"]),
                                      ratio, wages, pay, None, generic, "closed-form")
            else:
                ratio = alpha if name in ("forest-2", "forest-6") else beta
                # the splitting class must not be undercut by the other's ratio
                if name == "forest-1" and alpha < beta - tol:
                    continue
                if name == "forest-3" and alpha > beta + tol:
                    continue
                if name == "forest-2" and beta < alpha - tol:
                    continue
                if name == "forest-6" and beta > alpha + tol:
                    continue
                got = _eval_2x2_tree(econ, TWO_BY_TWO_TREES[name], ratio,
                                     alpha, beta, tol)
                if got is None:
                    continue
                wages, x, pay = got
                strict_flow = all(x[i, j] > tol for (i, j) in TWO_BY_TWO_TREES[name])
                generic = strict_flow and abs(alpha - beta) > tol
                return Classification(name, frozenset(TWO_BY_TWO_TREES[name]),
                                      ratio, wages, pay, None, generic, "closed-form")
        try:
            ratio = _matching_ratio(econ, TWO_BY_TWO_MATCHINGS["matching-diag"])
        except FormulaUndefined:
            ratio = -1.0
        if ratio > 0 and alpha >= ratio - tol and beta <= ratio + tol:
            got = _eval_2x2_tree(econ, TWO_BY_TWO_MATCHINGS["matching-diag"],
                                 ratio, alpha, beta, tol)
            if got is not None:
                wages, x, pay = got
                return Classification("matching-diag",
                                      frozenset(TWO_BY_TWO_MATCHINGS["matching-diag"]),
                                      ratio, wages, pay, None,
                                      alpha > ratio + tol and beta < ratio - tol,
                                      "closed-form")

    for producer, good in ((1, 1), (0, 0), (1, 0), (0, 1)):
        got = _one_class_2x2(econ, producer, good, alpha, beta, tol)
        if got is not None:
            wages, x, pay, ratio = got
            u = np.array([[alpha, 1.0], [beta, 1.0]])
            strict = (u[producer, 1 - good] / u[producer, good]
                      < t[producer, 1 - good] / t[producer, good] - tol)
            return Classification("one-class", frozenset({(producer, good)}),
                                  ratio, wages, pay, None, strict, "closed-form")
    raise FormulaUndefined("no closed-form structure fits")


def _classify_numeric(econ, alpha, beta, tol):
    inst = econ.with_utility([[alpha, 1.0], [beta, 1.0]])
    res = solve_equilibrium(inst, tol=max(tol, 1e-9))
    point = res.point
    data = extract_combinatorics(point, econ=inst)
    generic, _ = is_generic(inst, point)
    name = "one-class" if len(data.active_classes) == 1 else "unrecognized"
    for label, edges in {**TWO_BY_TWO_TREES, **TWO_BY_TWO_MATCHINGS}.items():
        if frozenset(edges) == data.forest:
            name = label
    if _forest_components(2, 2, sorted(data.forest)) is None:
        name = "cycle"
    wages = point.wages * inst.labor_supply
    total = float(wages.sum())
    p = point.prices
    ratio = float(p[0] / p[1]) if p[1] > 0 else None
    pay = payoff(inst, point, "total")
    return Classification(name, data.forest, ratio, wages / total,
                          None if name == "cycle" else pay,
                          None, generic, "numeric")


@dataclass(frozen=True)
class ProbeReport:
    offsets: tuple[float, ...]
    side_a: tuple          # payoff arrays at point + offset*direction
    side_b: tuple          # payoff arrays at point - offset*direction
    limit_a: np.ndarray    # linear extrapolation to offset 0
    limit_b: np.ndarray
    boundary: np.ndarray | None   # payoff at the boundary point itself
    boundary_unique: bool
    verdict: str           # "interval" | "equal" | "jump"


def boundary_probe(family: ParametricFamily, point, direction,
                   offsets=(0.03, 0.01, 0.003), convention: str = "total",
                   tol: float = 0.02, seed: int = 0) -> ProbeReport:
    """Approach a zone boundary from both sides and compare payoff limits.

    Equal limits mean the allocation passes continuously through the
    boundary. Differing limits with a multi-allocation boundary point
    bracket an interval of boundary payoffs; differing limits with a unique
    boundary allocation are a genuine payoff jump.
    """
    names = family.names
    point = np.asarray(point, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    def solve_at(vals):
        econ = family.instantiate(**{names[0]: vals[0], names[1]: vals[1]})
        res = solve_equilibrium(econ, seed=seed)
        return econ, res.point

    side_a, side_b = [], []
    for off in offsets:
        for sign, store in ((1.0, side_a), (-1.0, side_b)):
            econ, pt = solve_at(point + sign * off * direction)
            store.append(payoff(econ, pt, convention))

    def extrapolate(vals):
        v1, v0 = np.asarray(vals[-2]), np.asarray(vals[-1])
        o1, o0 = offsets[-2], offsets[-1]
        return v0 + (v0 - v1) * o0 / (o1 - o0)

    limit_a = extrapolate(side_a)
    limit_b = extrapolate(side_b)

    econ_b, pt_b = solve_at(point)
    boundary_pay = payoff(econ_b, pt_b, convention)
    data = extract_combinatorics(pt_b, econ=econ_b)
    boundary_unique = _forest_components(econ_b.m, econ_b.n, sorted(data.forest)) is not None

    scale = max(1.0, float(np.abs(limit_a).max()), float(np.abs(limit_b).max()))
    if np.abs(limit_a - limit_b).max() <= tol * scale:
        verdict = "equal"
    elif not boundary_unique:
        verdict = "interval"
    else:
        verdict = "jump"
    return ProbeReport(tuple(offsets), tuple(side_a), tuple(side_b),
                       limit_a, limit_b, boundary_pay, boundary_unique, verdict)


@dataclass(frozen=True)
class DeltaReport:
    kind: str                        # "technology" | "labor_migration"
    production_before: np.ndarray
    production_after: np.ndarray
    payoffs_before: np.ndarray
    payoffs_after: np.ndarray
    production_flags: tuple[str, ...]
    payoff_flags: tuple[str, ...]
    convention: str


def _flags(before, after, tol):
    out = []
    for b, a in zip(before, after):
        if a > b + tol * max(1.0, abs(b)):
            out.append("increase")
        elif a < b - tol * max(1.0, abs(b)):
            out.append("decrease")
        else:
            out.append("unchanged")
    return tuple(out)


def scenario_delta(econ: Economy, change, convention: str = "per_capita",
                   tol: float = 1e-6, seed: int = 0) -> DeltaReport:
    """Solve an economy before and after a technology or labor change.

    ``change`` is ("technology", matrix) or ("labor", supply); the posted
    utility matrix stays the same in both runs.
    """
    kind, value = change
    if kind == "technology":
        alt = econ.with_technology(value)
        kind = "technology"
    elif kind in ("labor", "labor_migration"):
        alt = econ.with_labor(value)
        kind = "labor_migration"
    else:
        raise ValueError(f"unknown change kind {kind!r}")
    before = solve_equilibrium(econ, seed=seed)
    after = solve_equilibrium(alt, seed=seed)
    pay_b = payoff(econ, before.point, convention)
    pay_a = payoff(alt, after.point, convention)
    return DeltaReport(
        kind,
        before.point.quantities, after.point.quantities,
        pay_b, pay_a,
        _flags(before.point.quantities, after.point.quantities, tol),
        _flags(pay_b, pay_a, tol),
        convention,
    )
