"""Alternating production/consumption price adjustment.

Each round solves the revenue-maximizing production program at the current
prices, hands quantities and wage budgets to the consumption market, and
takes the market's prices (plus virtual prices for goods not produced) into
the next round. The process stops at a verified equilibrium, on a state
repeat (a cycle), or when the iteration budget runs out; it is known not to
converge in general.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import production
from .equilibrium import (Infeasible, NumericFailure, enumerate_structures,
                          reconstruct_from_forest, verify_sm)
from .fisher import FisherInstance, price_unproduced, solve_fisher
from .model import Economy, EquilibriumPoint

__all__ = [
    "TatonnementStatus",
    "TatonnementTrace",
    "UnsolvedMarket",
    "SolveResult",
    "run_tatonnement",
    "u_t_levels",
    "solve_equilibrium",
]


class UnsolvedMarket(RuntimeError):
    """Neither the price adjustment nor structure enumeration found an equilibrium."""


@dataclass(frozen=True)
class TatonnementStatus:
    kind: str                 # "converged" | "cycle" | "budget_exhausted"
    step: int | None = None   # converged: index of the equilibrium state
    period: int | None = None
    first: int | None = None  # cycle: index where the repeated state first appeared


@dataclass(frozen=True)
class TatonnementTrace:
    states: tuple[EquilibriumPoint, ...]
    status: TatonnementStatus
    diagnostics: tuple[tuple, ...] = ()       # per-state unproduced-good levels
    degenerate_steps: tuple[int, ...] = ()    # states built on a degenerate LP basis

    @property
    def final(self) -> EquilibriumPoint:
        return self.states[-1]


def _quantize_key(point: EquilibriumPoint, grid: float) -> tuple:
    parts = np.concatenate([point.prices, point.quantities, point.wages])
    return tuple(np.round(parts / grid).astype(np.int64).tolist())


def run_tatonnement(econ: Economy, p0, max_iters: int = 1000, tol: float = 1e-7,
                    quantize: float = 1e-6) -> TatonnementTrace:
    """Iterate production and consumption updates from a starting price vector.

    States are scaled so total revenue is 1. The trace records every state;
    a state passing full verification ends the run as ``converged`` at its
    index, a repeat (after quantizing to ``quantize``) ends it as ``cycle``.
    """
    p = np.asarray(p0, dtype=float)
    if p.shape != (econ.n,) or np.any(p < 0) or not np.any(p > 0):
        raise ValueError("p0 must be a nonnegative, nonzero price vector")

    states: list[EquilibriumPoint] = []
    diagnostics: list[tuple] = []
    degenerate: list[int] = []
    seen: dict[tuple, int] = {}

    for step in range(max_iters):
        q, w, degen = production.solve_production(econ, p)
        money = float(w @ econ.labor_supply)
        if money <= 0:
            raise UnsolvedMarket("prices support no profitable production")
        w = w / money  # revenue normalization: budgets (and prices below) sum to 1
        inst = FisherInstance(w * econ.labor_supply, q, econ.utility)
        fsol = solve_fisher(inst)
        p_next = price_unproduced(inst, fsol)
        state = EquilibriumPoint.from_parts(econ, p_next, q, w, fsol.allocation)
        states.append(state)
        diagnostics.append(u_t_levels(econ, state))
        if degen:
            degenerate.append(step)
        ok, _ = verify_sm(econ, state, tol)
        if ok:
            return TatonnementTrace(tuple(states),
                                    TatonnementStatus("converged", step=step),
                                    tuple(diagnostics), tuple(degenerate))
        key = _quantize_key(state, quantize)
        if key in seen:
            first = seen[key]
            return TatonnementTrace(tuple(states),
                                    TatonnementStatus("cycle", period=step - first,
                                                      first=first),
                                    tuple(diagnostics), tuple(degenerate))
        seen[key] = step
        p = state.prices

    return TatonnementTrace(tuple(states), TatonnementStatus("budget_exhausted"),
                            tuple(diagnostics), tuple(degenerate))


def u_t_levels(econ: Economy, point: EquilibriumPoint):
    """Demand-side vs cost-side price levels for the goods not produced.

    Returns a tuple of (good index, value level, cost level, re-entrant)
    rows. The value level is where the keenest funded class would start
    buying; when it exceeds the labor cost (wT)_j the good turns profitable
    and re-enters production on the next round, which is exactly what breaks
    convergence in cycling markets.
    """
    rows = []
    wt = point.wages @ econ.technology
    funded = np.nonzero(point.bang_per_buck > 0)[0]
    for j in np.nonzero(point.quantities <= 0)[0]:
        level = max((econ.utility[i, j] / point.bang_per_buck[i] for i in funded),
                    default=0.0)
        cost = float(wt[j])
        rows.append((int(j), float(level), cost, bool(level > cost + 1e-12)))
    return tuple(rows)


@dataclass(frozen=True)
class SolveResult:
    point: EquilibriumPoint
    method: str                      # "tatonnement" | "reconstruction"
    multiplicity: int = 1            # distinct verified points seen during search
    trace: TatonnementTrace | None = None


def solve_equilibrium(econ: Economy, p0=None, tol: float = 1e-7,
                      max_iters: int = 60, seed: int = 0,
                      enumerate_on_failure: bool = True) -> SolveResult:
    """Find a verified equilibrium: price adjustment first, then structure search.

    The fallback enumerates candidate (I, J, F) data over the posted-utility
    support and reconstructs each; the first verified point wins and the
    count of distinct verified points is reported (disconnected-forest
    equilibria are fixed points the price adjustment cannot reach).
    """
    if p0 is None:
        p0 = np.full(econ.n, 1.0 / econ.n)
    trace = run_tatonnement(econ, p0, max_iters=max_iters, tol=tol)
    if trace.status.kind == "converged":
        return SolveResult(trace.final, "tatonnement", 1, trace)

    if not enumerate_on_failure:
        raise UnsolvedMarket(f"price adjustment ended with {trace.status.kind}")

    found: list[EquilibriumPoint] = []
    keys = set()
    try:
        candidates = list(enumerate_structures(econ))
    except ValueError as exc:
        raise UnsolvedMarket(str(exc)) from exc
    for data in candidates:
        try:
            point = reconstruct_from_forest(econ, data, seed=seed, newton_starts=8)
        except (Infeasible, NumericFailure):
            continue
        ok, _ = verify_sm(econ, point, tol)
        if not ok:
            continue
        key = _quantize_key(point, 1e-6)
        if key not in keys:
            keys.add(key)
            found.append(point)
    if not found:
        raise UnsolvedMarket("no reconstructible structure verified")
    return SolveResult(found[0], "reconstruction", len(found), trace)
