"""Market-state verification, combinatorial structure, and reconstruction.

A state (p, q, w, X) is a full equilibrium when (q, w) solve the production
LP and its dual at prices p, and (p, X) clear the consumption market at
budgets w*Y. The index data (active classes I, produced goods J, allocation
forest F) pins the equilibrium down: connected forests with |I| = |J| admit
an exact linear solve, everything else goes through a damped Newton on the
money-conservation system.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .fisher import MBB_TOL, _forest_components, _tree_flows, consumption_violations
from .model import CombinatorialData, Economy, EquilibriumPoint, normalize_point

__all__ = [
    "Infeasible",
    "NumericFailure",
    "ADReport",
    "verify_sm",
    "check_ad_conditions",
    "extract_combinatorics",
    "is_generic",
    "enumerate_structures",
    "reconstruct_from_forest",
]

ACTIVITY_TOL = 1e-8


class Infeasible(RuntimeError):
    """The requested combinatorial structure admits no equilibrium."""

    def __init__(self, condition: str):
        self.condition = condition
        super().__init__(condition)


class NumericFailure(RuntimeError):
    """Newton iterations did not reach the residual target from any start."""


def verify_sm(econ: Economy, point: EquilibriumPoint, tol: float = 1e-6):
    """Full equilibrium check; returns (ok, violations).

    The production side must satisfy feasibility, dual feasibility,
    complementary slackness and strong duality; the consumption side must
    clear the market out of budgets w*Y with spending only on best-ratio
    goods; prices of unproduced goods join the ratio comparison.
    """
    p, q, w, x = point.prices, point.quantities, point.wages, point.allocation
    violations = []
    money = float(p @ q)
    mscale = max(1.0, abs(money))
    if money <= 0:
        violations.append("trivial state: no revenue")
    if np.any(q < -tol) or np.any(w < -tol) or np.any(p < -tol):
        violations.append("negative price, quantity or wage")

    used = econ.technology @ q
    for i in range(econ.m):
        if used[i] > econ.labor_supply[i] + tol * max(1.0, econ.labor_supply[i]):
            violations.append(f"labor {i} overused")
        slack = econ.labor_supply[i] - used[i]
        if w[i] * slack > tol * mscale:
            violations.append(f"class {i} paid while its labor is slack")
    wt = w @ econ.technology
    for j in range(econ.n):
        if wt[j] < p[j] - tol * max(1.0, p[j]):
            violations.append(f"good {j} priced above its labor cost (wT < p)")
        if q[j] * (wt[j] - p[j]) > tol * mscale:
            violations.append(f"good {j} produced but not cost-covering (wT > p)")
    if abs(money - float(w @ econ.labor_supply)) > tol * mscale:
        violations.append("revenue does not equal the wage bill")

    violations += consumption_violations(
        econ.utility, w * econ.labor_supply, q, p, x, tol)
    return (not violations), violations


@dataclass(frozen=True)
class ADReport:
    profit_maximal: bool        # every firm's production maximizes profit
    utility_maximal: bool       # every household spends its budget optimally
    prices_admissible: bool     # nonnegative, not all zero
    markets_clear: bool         # excess demand <= 0, zero price on strict slack
    violations: tuple[str, ...]

    def all_hold(self) -> bool:
        return (self.profit_maximal and self.utility_maximal
                and self.prices_admissible and self.markets_clear)


def check_ad_conditions(econ: Economy, point: EquilibriumPoint, tol: float = 1e-6) -> ADReport:
    """The four general-equilibrium conditions, checked independently.

    Labor enters as extra goods whose prices are the wages; firms are the
    per-good linear technologies with profit q_j (p_j - (wT)_j).
    """
    p, q, w, x = point.prices, point.quantities, point.wages, point.allocation
    money = max(1.0, float(abs(p @ q)))
    bad1, bad2, bad3, bad4 = [], [], [], []

    wt = w @ econ.technology
    for j in range(econ.n):
        if p[j] > wt[j] + tol * max(1.0, p[j]):
            bad1.append(f"firm {j} could profit without bound (p > wT)")
        elif q[j] * (wt[j] - p[j]) > tol * money:
            bad1.append(f"firm {j} runs at a loss yet produces")

    # clearing of goods is AD4's business; only budget/optimality failures count here
    bad2 += [v for v in consumption_violations(
        econ.utility, w * econ.labor_supply, q, p, x, tol) if "clear" not in v]

    if np.any(p < -tol) or np.any(w < -tol):
        bad3.append("negative price or wage")
    if float(np.abs(p).sum() + np.abs(w).sum()) <= tol:
        bad3.append("all prices and wages are zero")

    sold = x.sum(axis=0)
    for j in range(econ.n):
        if sold[j] > q[j] + tol * max(1.0, q[j]):
            bad4.append(f"good {j} overdemanded")
        elif p[j] > tol and sold[j] < q[j] - tol * max(1.0, q[j]):
            bad4.append(f"good {j} has excess supply at a positive price")
    used = econ.technology @ q
    for i in range(econ.m):
        if used[i] > econ.labor_supply[i] + tol * max(1.0, econ.labor_supply[i]):
            bad4.append(f"labor {i} overdemanded")
        elif w[i] > tol and used[i] < econ.labor_supply[i] - tol * max(1.0, econ.labor_supply[i]):
            bad4.append(f"labor {i} slack at a positive wage")

    return ADReport(not bad1, not bad2, not bad3, not bad4,
                    tuple(bad1 + bad2 + bad3 + bad4))


def extract_combinatorics(point: EquilibriumPoint, tol: float = ACTIVITY_TOL,
                          econ: Economy | None = None) -> CombinatorialData:
    """Active classes, produced goods, and the positive-spend forest.

    The point is money-normalized internally so the activity threshold is
    scale-free. Pass the economy to also report edges that tie the best
    ratio but carry zero flow.
    """
    money = float(point.prices @ point.quantities)
    scale = 1.0 / money if money > 0 else 1.0
    w = point.wages * scale
    q = point.quantities
    x = point.allocation
    m, n = x.shape
    active_i = frozenset(int(i) for i in np.nonzero(w > tol)[0])
    active_j = frozenset(int(j) for j in np.nonzero(q > tol)[0])
    forest = frozenset(
        (int(i), int(j)) for i in active_i for j in active_j if x[i, j] > tol)

    # count components over active vertices only
    uf_index = {v: k for k, v in enumerate(sorted(active_i) + [m + j for j in sorted(active_j)])}
    parent = list(range(len(uf_index)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in forest:
        ra, rb = find(uf_index[i]), find(uf_index[m + j])
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    components = len({find(k) for k in range(len(uf_index))}) if uf_index else 0

    bound_violated = (len(active_i) == m and len(active_j) == n
                      and components < n - m + 1)

    tight_zero = frozenset()
    if econ is not None:
        ties = []
        for i in sorted(active_i):
            bb = point.bang_per_buck[i]
            if bb <= 0:
                continue
            for j in sorted(active_j):
                if (i, j) not in forest and point.prices[j] > 0 \
                        and econ.utility[i, j] / point.prices[j] >= bb * (1 - MBB_TOL):
                    ties.append((i, j))
        tight_zero = frozenset(ties)

    return CombinatorialData(active_i, active_j, forest, components,
                             bound_violated, tight_zero)


def is_generic(econ: Economy, point: EquilibriumPoint, tol: float = 1e-6):
    """True when every inactive constraint holds strictly.

    The positive-flow graph must be a forest, unproduced goods must cost
    strictly more than their price, and no off-forest pair may tie a funded
    class's best ratio among produced goods. Ties against virtual prices of
    unproduced goods are reported but do not fail the test (they are an
    artifact of the pricing convention for goods not on sale). Returns
    (generic, tight_constraints).
    """
    data = extract_combinatorics(point, econ=econ)
    tight = []
    informational = []
    if _forest_components(econ.m, econ.n, sorted(data.forest)) is None:
        tight.append("allocation graph has a cycle (allocation is not unique)")
    wt = point.wages @ econ.technology
    for j in range(econ.n):
        if j not in data.active_goods:
            if wt[j] <= point.prices[j] + tol * max(1.0, point.prices[j]):
                tight.append(f"unproduced good {j} priced at its labor cost")
    for i in sorted(data.active_classes):
        bb = point.bang_per_buck[i]
        if bb <= 0:
            continue
        for j in range(econ.n):
            if (i, j) in data.forest or point.prices[j] <= 0:
                continue
            ratio = econ.utility[i, j] / point.prices[j]
            if ratio >= bb * (1 - tol):
                if j in data.active_goods:
                    tight.append(f"class {i} ties its best ratio on unused good {j}")
                else:
                    informational.append(
                        f"class {i} ties the virtual price of unproduced good {j}")
    return (not tight), tight + informational


def enumerate_structures(econ: Economy, max_support: int = 12):
    """All candidate (I, J, F) index data compatible with the posted utility.

    F ranges over acyclic edge sets inside the utility support that touch
    every chosen class and good. Ordered to prefer full participation first;
    deterministic. Economies whose support exceeds ``max_support`` edges are
    rejected (enumeration is a desk-scale fallback).
    """
    m, n = econ.m, econ.n
    if int(np.count_nonzero(econ.utility)) > max_support:
        raise ValueError(f"utility support too large to enumerate (> {max_support} edges)")
    class_sets = sorted(
        (frozenset(c) for r in range(m, 0, -1) for c in itertools.combinations(range(m), r)),
        key=lambda s: (-len(s), sorted(s)))
    good_sets = sorted(
        (frozenset(c) for r in range(n, 0, -1) for c in itertools.combinations(range(n), r)),
        key=lambda s: (-len(s), sorted(s)))
    for active_i in class_sets:
        for active_j in good_sets:
            if len(active_i) > len(active_j):
                continue  # more funded classes than goods cannot balance
            support = [(i, j) for i in sorted(active_i) for j in sorted(active_j)
                       if econ.utility[i, j] > 0]
            if len(support) > max_support:
                continue
            forests = []
            for size in range(len(active_i) + len(active_j) - 1, 0, -1):
                for combo in itertools.combinations(support, size):
                    if {i for i, _ in combo} != set(active_i):
                        continue
                    if {j for _, j in combo} != set(active_j):
                        continue
                    if _forest_components(m, n, combo) is None:
                        continue
                    forests.append(combo)
            for combo in forests:
                yield (tuple(sorted(active_i)), tuple(sorted(active_j)),
                       tuple(sorted(combo)))


def _nullspace(a, rtol=1e-10):
    """Orthonormal nullspace basis of a (columns), via SVD."""
    u, sing, vt = np.linalg.svd(a)
    if sing.size:
        rank = int(np.sum(sing > rtol * sing[0]))
    else:
        rank = 0
    return vt[rank:].T


def _affine_solutions(a, b, rtol=1e-9):
    """Particular solution and nullspace of a x = b; (None, None) if inconsistent."""
    x0, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.abs(a @ x0 - b).max() > rtol * max(1.0, np.abs(b).max()):
        return None, None
    return x0, _nullspace(a)


def _tree_price_levels(edges, utility, m):
    """Per-component price ratios and buyer ratio levels along a forest."""
    adj: dict[int, list] = {}
    for i, j in edges:
        adj.setdefault(i, []).append(m + j)
        adj.setdefault(m + j, []).append(i)
    levels = {}
    comp_goods, comp_buyers = [], []
    seen = set()
    for i, j in edges:
        root = m + j
        if root in seen:
            continue
        stack = [root]
        levels[root] = 1.0
        members_g, members_b = [], []
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            (members_g if v >= m else members_b).append(v)
            for nxt in adj[v]:
                if nxt in levels:
                    continue
                if v >= m:
                    levels[nxt] = utility[nxt, v - m] / levels[v]
                else:
                    levels[nxt] = utility[v, nxt - m] / levels[v]
                stack.append(nxt)
        comp_goods.append(sorted(g - m for g in members_g))
        comp_buyers.append(sorted(members_b))
    return levels, comp_goods, comp_buyers


def reconstruct_from_forest(econ: Economy, data, normalization: str = "revenue",
                            tol: float = 1e-9, seed: int = 0,
                            newton_starts: int = 32, newton_steps: int = 200,
                            damping: float = 0.5) -> EquilibriumPoint:
    """Rebuild the equilibrium carrying the given (I, J, F) index data.

    Connected forests with as many active goods as classes solve exactly;
    other shapes go through damped Newton on the per-component
    money-conservation system from several seeded starts. Raises
    ``Infeasible`` with the first violated condition, or ``NumericFailure``
    when no Newton start reaches the residual target.
    """
    if isinstance(data, CombinatorialData):
        active_i = sorted(data.active_classes)
        active_j = sorted(data.active_goods)
        forest = sorted(data.forest)
    else:
        active_i, active_j, forest = (sorted(part) for part in data)
        forest = [tuple(e) for e in forest]

    m, n = econ.m, econ.n
    if not active_i or not active_j:
        raise Infeasible("no active classes or goods")
    if len(active_i) > len(active_j):
        raise Infeasible("more active classes than active goods")
    iset, jset = set(active_i), set(active_j)
    for i, j in forest:
        if i not in iset or j not in jset:
            raise Infeasible(f"forest edge ({i},{j}) leaves the active sets")
        if econ.utility[i, j] <= 0:
            raise Infeasible(f"forest edge ({i},{j}) has zero posted utility")
    if {i for i, _ in forest} != iset or {j for _, j in forest} != jset:
        raise Infeasible("some active class or good is not in the forest")
    if _forest_components(m, n, forest) is None:
        raise Infeasible("forest has a cycle")

    k = len(active_i) + len(active_j) - len(forest)
    levels, comp_goods, comp_buyers = _tree_price_levels(forest, econ.utility, m)

    t_ij = econ.technology[np.ix_(active_i, active_j)]
    y_i = econ.labor_supply[list(active_i)]

    if k == 1 and len(active_i) == len(active_j):
        try:
            q_parts = np.linalg.solve(t_ij, y_i)
        except np.linalg.LinAlgError:
            raise Infeasible("active technology block is singular") from None
        ratio = np.array([levels[m + j] for j in active_j])
        try:
            w_parts = np.linalg.solve(t_ij.T, ratio)
        except np.linalg.LinAlgError:
            raise Infeasible("wage system is singular") from None
        p_parts = [(active_j, ratio)]
    else:
        # the wage/price equations wT = p(s) and the labor equations Tq = Y
        # are linear; solve them exactly and leave only the per-component
        # money-conservation system (quadratic) to a damped Newton over the
        # remaining free directions
        n_i, n_j = len(active_i), len(active_j)
        good_pos = {j: a for a, goods in enumerate(comp_goods) for j in goods}
        rho_col = np.zeros((n_j, k))          # p = rho_col @ s
        for idx, j in enumerate(active_j):
            rho_col[idx, good_pos[j]] = levels[m + j]
        ws_null = _nullspace(np.hstack([t_ij.T, -rho_col]))
        if ws_null.shape[1] == 0:
            raise Infeasible("wage/price system admits only the zero solution")
        q_base, q_null = _affine_solutions(t_ij, y_i)
        if q_base is None:
            raise Infeasible("labor equations have no solution on the active goods")
        d_ws, d_q = ws_null.shape[1], q_null.shape[1]
        if d_ws == 1:
            direction = ws_null[:, 0]
            if direction.sum() < 0:
                direction = -direction
            if direction.min() <= 1e-12:
                raise Infeasible("no strictly positive wage/price direction")
        if d_q == 0 and q_base.min() <= tol:
            raise Infeasible("nonpositive quantity for an active good")

        comp_w_mask = np.zeros((k, n_i))
        for a, buyers in enumerate(comp_buyers):
            for bb_i in buyers:
                comp_w_mask[a, active_i.index(bb_i)] = econ.labor_supply[bb_i]
        comp_good_mask = np.zeros((k, n_j))
        for idx, j in enumerate(active_j):
            comp_good_mask[good_pos[j], idx] = 1.0

        def build(z):
            ws = ws_null @ z[:d_ws]
            w = ws[:n_i]
            s = ws[n_i:]
            q = q_base + (q_null @ z[d_ws:] if d_q else 0.0)
            return w, s, q, rho_col @ s

        def residual(z):
            w, s, q, p = build(z)
            money = comp_w_mask @ w - comp_good_mask @ (p * q)
            return np.concatenate([money[:k - 1], [p @ q - 1.0]])

        dim = d_ws + d_q
        rng = np.random.default_rng(seed)
        solution = None
        first_bad = None
        starts = [np.ones(dim)] + [rng.uniform(-2.0, 2.0, dim)
                                   for _ in range(newton_starts - 1)]
        for z in starts:
            ok = False
            best = np.inf
            stalled = 0
            for _ in range(newton_steps):
                r = residual(z)
                if not np.all(np.isfinite(r)) or np.abs(r).max() > 1e9:
                    break
                worst = np.abs(r).max()
                if worst < 1e-10:
                    ok = True
                    break
                if worst < 0.7 * best:
                    best, stalled = worst, 0
                else:
                    stalled += 1
                    if stalled > 25:  # this start is wandering, try the next
                        break
                jac = np.empty((k, dim))
                h = 1e-7
                for col in range(dim):
                    zp = z.copy()
                    zp[col] += h
                    jac[:, col] = (residual(zp) - r) / h
                step, *_ = np.linalg.lstsq(jac, -r, rcond=None)
                if not np.all(np.isfinite(step)):
                    break
                z = z + damping * step
            if not ok:
                continue
            w, s, q, p = build(z)
            if np.any(w <= tol) or np.any(s <= 0) or np.any(q <= tol):
                first_bad = first_bad or "root with a nonpositive wage, price or quantity"
                continue
            solution = (w, s, q, p)
            break
        if solution is None:
            if first_bad:
                raise Infeasible(first_bad)
            raise NumericFailure("no Newton start reached the residual target")
        w_parts, _, q_parts, ratio = solution
        p_parts = [(active_j, ratio)]

    # assemble full vectors
    q_full = np.zeros(n)
    for idx, j in enumerate(active_j):
        q_full[j] = q_parts[idx]
    w_full = np.zeros(m)
    for idx, i in enumerate(active_i):
        w_full[i] = w_parts[idx]
    p_full = np.zeros(n)
    for goods, vals in p_parts:
        for idx, j in enumerate(goods):
            p_full[j] = vals[idx]

    if np.any(q_full[list(active_j)] <= tol):
        raise Infeasible("nonpositive quantity for an active good")
    if np.any(w_full[list(active_i)] <= tol):
        raise Infeasible("nonpositive wage for an active class")

    # labor feasibility for inactive classes
    used = econ.technology @ q_full
    for i in range(m):
        if i not in iset and used[i] > econ.labor_supply[i] + 1e-9 * max(1.0, econ.labor_supply[i]):
            raise Infeasible(f"inactive class {i} would be overworked")

    # flows on the forest
    flows = _tree_flows(forest,
                        {i: float(w_full[i] * econ.labor_supply[i]) for i in active_i},
                        {j: float(p_full[j] * q_full[j]) for j in active_j})
    money = float(p_full @ q_full)
    for edge, amount in sorted(flows.items()):
        if amount < -1e-9 * max(1.0, money):
            raise Infeasible(f"negative flow on edge {edge}")
    x_full = np.zeros((m, n))
    for (i, j), amount in flows.items():
        x_full[i, j] = max(amount, 0.0) / p_full[j]

    # best-ratio dominance off the forest, among produced goods
    bb = {i: econ.utility[i, forest_good(i, forest)] / p_full[forest_good(i, forest)]
          for i in active_i}
    for i in active_i:
        for j in active_j:
            if (i, j) in flows:
                continue
            if econ.utility[i, j] / p_full[j] > bb[i] * (1 + 1e-9):
                raise Infeasible(f"off-forest pair ({i},{j}) would dominate")

    # virtual prices and re-entry check for unproduced goods
    for j in range(n):
        if j in jset:
            continue
        level = max((econ.utility[i, j] / bb[i] for i in active_i if bb[i] > 0),
                    default=0.0)
        p_full[j] = level
        cost = float(w_full @ econ.technology[:, j])
        if level > cost + 1e-9 * max(1.0, cost):
            raise Infeasible(f"unproduced good {j} would re-enter (value above cost)")

    point = EquilibriumPoint.from_parts(econ, p_full, q_full, w_full, x_full)
    return normalize_point(point, econ, normalization)


def forest_good(i, forest):
    """Any forest good of class i (used to read off its bang per buck)."""
    for a, b in forest:
        if a == i:
            return b
    raise KeyError(i)
