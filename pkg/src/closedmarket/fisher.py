"""Linear-utility Fisher market solver.

Buyers with fixed budgets split spending across goods so that every dollar
goes to a good maximizing utility per unit money (the buyer's bang per
buck), and all supplied goods sell out. The solver runs proportional
response dynamics on bids and then snaps to the exact solution implied by
the converged maximum-bang-per-buck graph, which is a forest at generic
instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import proportional_response

__all__ = [
    "FisherInstance",
    "FisherSolution",
    "NoUsefulGoods",
    "NonConvergence",
    "UndefinedBB",
    "bang_per_buck",
    "solve_fisher",
    "check_fisher",
    "price_unproduced",
    "log_welfare",
]

BID_TOL = 1e-10
MBB_TOL = 1e-6
MAX_ROUNDS = 10 ** 6


class NoUsefulGoods(RuntimeError):
    """A funded buyer values none of the goods on sale."""


class NonConvergence(RuntimeError):
    """Bid dynamics ran out of rounds before the solution could be snapped."""


class UndefinedBB(ValueError):
    """Bang per buck asked for a buyer with no positively-priced valued good."""


@dataclass(frozen=True)
class FisherInstance:
    budgets: np.ndarray     # (m,) >= 0
    quantities: np.ndarray  # (n,) >= 0
    utility: np.ndarray     # (m, n) >= 0

    def __post_init__(self):
        w = np.asarray(self.budgets, dtype=float)
        q = np.asarray(self.quantities, dtype=float)
        u = np.asarray(self.utility, dtype=float)
        object.__setattr__(self, "budgets", w)
        object.__setattr__(self, "quantities", q)
        object.__setattr__(self, "utility", u)
        if u.ndim != 2 or w.shape != (u.shape[0],) or q.shape != (u.shape[1],):
            raise ValueError("inconsistent Fisher instance dimensions")
        if np.any(w < 0) or np.any(q < 0) or np.any(u < 0):
            raise ValueError("budgets, quantities and utilities must be >= 0")


@dataclass(frozen=True)
class FisherSolution:
    prices: np.ndarray              # (n,), 0 for goods not on sale
    allocation: np.ndarray          # (m, n)
    bang_per_buck: np.ndarray       # (m,), 0 for unfunded buyers
    mbb_graph: frozenset[tuple[int, int]]
    generic: bool                   # forest-shaped MBB graph over funded buyers
    rounds: int = 0
    snapped: bool = True


def bang_per_buck(utility_row, prices, tol: float = MBB_TOL):
    """Best utility per unit money and the set of goods attaining it.

    Goods within relative ``tol`` of the maximum count as attaining it.
    """
    u = np.asarray(utility_row, dtype=float)
    p = np.asarray(prices, dtype=float)
    ok = (p > 0) & (u > 0)
    if not np.any(ok):
        raise UndefinedBB("no positively priced good with positive utility")
    ratios = np.zeros_like(p)
    ratios[ok] = u[ok] / p[ok]
    value = float(ratios.max())
    argmax = frozenset(int(j) for j in np.nonzero(ratios >= value * (1 - tol))[0])
    return value, argmax


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _forest_components(m, n, edges):
    """Connected components of a bipartite edge set; None if it has a cycle."""
    uf = _UnionFind(m + n)
    for i, j in edges:
        if not uf.union(i, m + j):
            return None
    comps: dict[int, list] = {}
    for v in range(m + n):
        comps.setdefault(uf.find(v), []).append(v)
    return comps


def _tree_flows(edges, buyer_money, good_money):
    """Exact spends on a bipartite forest from node totals, by leaf elimination.

    ``edges`` are (buyer, good) pairs; the two money dicts must balance on
    every component. Returns {edge: spend}; spends may come out negative if
    the totals do not actually fit the forest.
    """
    remaining_w = dict(buyer_money)
    remaining_r = dict(good_money)
    adj: dict[tuple[str, int], set] = {}
    for i, j in edges:
        adj.setdefault(("b", i), set()).add(("g", j))
        adj.setdefault(("g", j), set()).add(("b", i))
    flows: dict[tuple[int, int], float] = {}
    live = set(adj)
    while live:
        leaf = min((v for v in live if len(adj[v]) <= 1), default=None)
        if leaf is None:  # pragma: no cover - guarded by cycle checks upstream
            raise ValueError("flow graph has a cycle")
        if not adj[leaf]:
            live.discard(leaf)
            continue
        other = next(iter(adj[leaf]))
        if leaf[0] == "b":
            i, j = leaf[1], other[1]
            amount = remaining_w[i]
            remaining_r[j] -= amount
        else:
            i, j = other[1], leaf[1]
            amount = remaining_r[j]
            remaining_w[i] -= amount
        flows[(i, j)] = flows.get((i, j), 0.0) + amount
        adj[other].discard(leaf)
        adj[leaf] = set()
        live.discard(leaf)
    return flows


def _snap(weights, q, u, price_guess, mbb_tol, strict=1e-9):
    """Exact solution from the MBB graph implied by a price guess.

    Returns (prices, allocation, bb, edges) or None when the graph has a
    cycle or fails the exactness checks.
    """
    m, n = u.shape
    ratios = u / price_guess
    bb_guess = ratios.max(axis=1)
    edges = [(i, j) for i in range(m) for j in range(n)
             if u[i, j] > 0 and ratios[i, j] >= bb_guess[i] * (1 - mbb_tol)]
    comps = _forest_components(m, n, edges)
    if comps is None:
        return None

    adj: dict[int, list] = {v: [] for v in range(m + n)}
    for i, j in edges:
        adj[i].append(m + j)
        adj[m + j].append(i)

    prices = np.zeros(n)
    bb = np.zeros(m)
    for members in comps.values():
        goods = [v - m for v in members if v >= m]
        buyers = [v for v in members if v < m]
        if not goods:
            return None  # a funded buyer tied to nothing on sale
        if not buyers:
            return None  # a good on sale that nobody funded wants
        # provisional prices along the tree, then one money scale per component
        root = m + min(goods)
        level = {root: 1.0}
        stack = [root]
        while stack:
            v = stack.pop()
            for w_ in adj[v]:
                if w_ in level:
                    continue
                if v >= m:  # good -> buyer: buyer's bang per buck
                    level[w_] = u[w_, v - m] / level[v]
                else:       # buyer -> good: price from the buyer's bb
                    level[w_] = u[v, w_ - m] / level[v]
                stack.append(w_)
        provisional = np.array([level[m + j] for j in goods])
        money = float(sum(weights[i] for i in buyers))
        scale = money / float(provisional @ q[goods])
        if not np.isfinite(scale) or scale <= 0:
            return None
        for j, pj in zip(goods, provisional):
            prices[j] = pj * scale
        for i in buyers:
            bb[i] = level[i] / scale

    # the graph must reproduce itself at the exact prices
    edge_set = set(edges)
    exact = u / prices[None, :]
    for i in range(m):
        best = exact[i].max()
        if abs(best - bb[i]) > strict * best:
            return None
        for j in range(n):
            if (i, j) in edge_set:
                if exact[i, j] < best * (1 - strict):
                    return None
            elif exact[i, j] > best * (1 + strict):
                return None

    flows = _tree_flows(edges,
                        {i: float(weights[i]) for i in range(m)},
                        {j: float(prices[j] * q[j]) for j in range(n)})
    if min(flows.values(), default=0.0) < -1e-9 * max(1.0, weights.max()):
        return None
    allocation = np.zeros((m, n))
    for (i, j), amount in flows.items():
        allocation[i, j] = max(amount, 0.0) / prices[j]
    return prices, allocation, bb, edges


def solve_fisher(inst: FisherInstance, tol: float = BID_TOL,
                 mbb_tol: float = MBB_TOL, max_rounds: int = MAX_ROUNDS) -> FisherSolution:
    """Equilibrium prices and allocations for a linear Fisher market.

    Goods with zero quantity are left out (price 0 here; see
    :func:`price_unproduced`). Goods valued by no funded buyer also price at
    zero and stay unallocated. Raises NoUsefulGoods if a funded buyer values
    nothing on sale, NonConvergence if the bid dynamics stall.
    """
    w_full = inst.budgets
    q_full = inst.quantities
    u_full = inst.utility
    m_full, n_full = u_full.shape

    buyers = np.nonzero(w_full > 0)[0]
    if buyers.size == 0:
        raise NoUsefulGoods("no buyer has a positive budget")
    live = np.nonzero((q_full > 0) & np.any(u_full[buyers] > 0, axis=0))[0]
    if live.size == 0:
        raise NoUsefulGoods("nothing on sale is valued by a funded buyer")
    for i in buyers:
        if not np.any(u_full[i, live] > 0):
            raise NoUsefulGoods(f"buyer {i} values no good on sale")

    weights = w_full[buyers]
    q = q_full[live]
    u = u_full[np.ix_(buyers, live)]
    util_unit = u * q[None, :]  # unit-supply scaling

    bids = weights[:, None] * util_unit / util_unit.sum(axis=1)[:, None]
    rounds_used = 0
    converged = False
    chunk = 64
    result = None
    while rounds_used < max_rounds:
        bids, used, converged = proportional_response(
            weights, util_unit, bids, min(chunk, max_rounds - rounds_used), tol)
        rounds_used += used
        supply_price = bids.sum(axis=0)     # money on each unit-supply good
        price_guess = supply_price / q      # per-unit prices
        result = _snap(weights, q, u, price_guess, mbb_tol)
        if result is not None or converged:
            break
        chunk = min(chunk * 2, 65536)

    if result is not None:
        prices_live, alloc_live, bb_live, edges_live = result
        snapped, generic = True, True
    elif converged:
        # MBB graph has a cycle (non-generic instance): keep numeric values
        supply_price = bids.sum(axis=0)
        prices_live = supply_price / q
        alloc_live = (bids / supply_price[None, :]) * q[None, :]
        ratios = u / prices_live[None, :]
        bb_live = ratios.max(axis=1)
        edges_live = [(i, j) for i in range(len(buyers)) for j in range(len(live))
                      if u[i, j] > 0 and ratios[i, j] >= bb_live[i] * (1 - mbb_tol)]
        snapped = False
        generic = _forest_components(len(buyers), len(live), edges_live) is not None
    else:
        raise NonConvergence(f"no equilibrium found in {rounds_used} bid rounds")

    prices = np.zeros(n_full)
    prices[live] = prices_live
    allocation = np.zeros((m_full, n_full))
    allocation[np.ix_(buyers, live)] = alloc_live
    bb = np.zeros(m_full)
    bb[buyers] = bb_live
    graph = frozenset((int(buyers[i]), int(live[j])) for i, j in edges_live)
    return FisherSolution(prices, allocation, bb, graph, generic, rounds_used, snapped)


def consumption_violations(utility, budgets, quantities, prices, allocation,
                           tol: float = 1e-6) -> list[str]:
    """Fisher-condition violations for a full candidate state.

    Used both for checking solver output and for the consumption side of
    full market verification. Goods with zero quantity take part in the
    bang-per-buck comparison (their listed price must not undercut any
    funded buyer's best ratio) but are exempt from clearing.
    """
    u = np.asarray(utility, dtype=float)
    w = np.asarray(budgets, dtype=float)
    q = np.asarray(quantities, dtype=float)
    p = np.asarray(prices, dtype=float)
    x = np.asarray(allocation, dtype=float)
    m, n = u.shape
    out = []
    if np.any(x < -tol):
        out.append("negative allocation")
    money_scale = max(float(w.sum()), 1e-300)
    for j in range(n):
        if q[j] > 0 and p[j] > 0:
            gap = x[:, j].sum() - q[j]
            if abs(gap) > tol * max(1.0, q[j]):
                out.append(f"good {j} does not clear: sold {x[:, j].sum():.9g} of {q[j]:.9g}")
    spend = x @ p
    for i in range(m):
        if abs(spend[i] - w[i]) > tol * max(1.0, money_scale):
            out.append(f"buyer {i} budget not exhausted: spent {spend[i]:.9g} of {w[i]:.9g}")
    for i in range(m):
        if w[i] <= 0:
            continue
        ok = (p > 0) & (u[i] > 0)
        if not np.any(ok):
            out.append(f"funded buyer {i} values nothing priced")
            continue
        ratios = np.where(ok, u[i] / np.where(p > 0, p, 1.0), 0.0)
        best = ratios.max()
        for j in range(n):
            if p[j] * x[i, j] > tol * money_scale and ratios[j] < best * (1 - tol):
                out.append(
                    f"buyer {i} spends on good {j} below its best ratio "
                    f"({ratios[j]:.9g} < {best:.9g})")
    return out


def check_fisher(inst: FisherInstance, sol: FisherSolution, tol: float = 1e-6):
    """True plus an empty list when the solution satisfies market clearing and
    the optimal-goods condition within tol."""
    bad = consumption_violations(
        inst.utility, inst.budgets, inst.quantities, sol.prices, sol.allocation, tol)
    return (not bad), bad


def price_unproduced(inst: FisherInstance, sol: FisherSolution) -> np.ndarray:
    """Full price vector with virtual prices for goods not on sale.

    A missing good is priced at the level where the keenest funded buyer
    would just start buying it: max_i u_ij / bb_i. Goods on sale keep their
    market prices.
    """
    prices = np.array(sol.prices)
    funded = np.nonzero(inst.budgets > 0)[0]
    for j in np.nonzero(inst.quantities <= 0)[0]:
        levels = [inst.utility[i, j] / sol.bang_per_buck[i]
                  for i in funded if sol.bang_per_buck[i] > 0]
        prices[j] = max(levels, default=0.0)
    return prices


def log_welfare(inst: FisherInstance, allocation) -> float:
    """Budget-weighted log utility of an allocation (the Fisher objective)."""
    x = np.asarray(allocation, dtype=float)
    total = 0.0
    for i in range(inst.utility.shape[0]):
        if inst.budgets[i] <= 0:
            continue
        ui = float(inst.utility[i] @ x[i])
        if ui <= 0:
            return -np.inf
        total += float(inst.budgets[i]) * np.log(ui)
    return total
