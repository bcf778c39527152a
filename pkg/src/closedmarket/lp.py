"""Dense simplex solver for max c.x s.t. Ax <= b, x >= 0, with dual extraction.

Bland's rule keeps the pivot sequence deterministic and cycle-free; problems
in this package are tiny (tens of rows), so a dense basis solve per pivot is
fine and keeps the arithmetic accurate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LpProblem", "LpSolution", "IterationLimit", "solve_lp"]

DEFAULT_TOL = 1e-9


class IterationLimit(RuntimeError):
    """Pivot budget exhausted (should not happen with Bland's rule on sane input)."""


@dataclass(frozen=True)
class LpProblem:
    objective: np.ndarray          # (n,)
    constraint_matrix: np.ndarray  # (r, n)
    rhs: np.ndarray                # (r,)

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        a = np.asarray(self.constraint_matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", a)
        object.__setattr__(self, "rhs", b)
        if a.ndim != 2 or c.shape != (a.shape[1],) or b.shape != (a.shape[0],):
            raise ValueError("inconsistent LP dimensions")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")


@dataclass(frozen=True)
class LpSolution:
    primal: np.ndarray | None
    dual: np.ndarray | None
    objective_value: float | None
    status: str                    # "optimal" | "unbounded" | "infeasible"
    degenerate: bool = False


def _bland_simplex(a_ext, b, cost, basis, tol, max_iters):
    """Minimize cost.z over a_ext z = b, z >= 0 from a feasible basis.

    Returns (basis, status). ``a_ext`` already contains slack/artificial
    columns; ``basis`` is modified in place.
    """
    r, ncols = a_ext.shape
    for _ in range(max_iters):
        bmat = a_ext[:, basis]
        xb = np.linalg.solve(bmat, b)
        y = np.linalg.solve(bmat.T, cost[basis])
        reduced = cost - y @ a_ext
        entering = -1
        for j in range(ncols):
            if j not in basis and reduced[j] < -tol:
                entering = j
                break
        if entering < 0:
            return basis, "optimal"
        direction = np.linalg.solve(bmat, a_ext[:, entering])
        best_ratio, leaving = np.inf, -1
        for i in range(r):
            if direction[i] > tol:
                ratio = xb[i] / direction[i]
                if leaving < 0 or ratio < best_ratio - tol:
                    best_ratio, leaving = ratio, i
                elif ratio <= best_ratio + tol and basis[i] < basis[leaving]:
                    best_ratio, leaving = min(ratio, best_ratio), i
        if leaving < 0:
            return basis, "unbounded"
        basis[leaving] = entering
    raise IterationLimit(f"simplex did not finish within {max_iters} pivots")


def solve_lp(problem: LpProblem, tol: float = DEFAULT_TOL, max_iters: int = 10_000) -> LpSolution:
    """Solve the LP and return primal, dual and a degeneracy diagnostic.

    At ``optimal`` status the result satisfies primal/dual feasibility and
    complementary slackness within tol. ``degenerate`` is set when the final
    basis has a zero-valued basic variable or a zero reduced cost on a
    non-basic column (non-unique primal or dual).
    """
    c = problem.objective
    a = problem.constraint_matrix
    b = problem.rhs.copy()
    r, n = a.shape
    n_rows = r
    kept_rows = np.arange(r)

    a_ext = np.hstack([a, np.eye(r)])
    # flip rows with negative rhs so phase 1 can start from a feasible basis
    neg = b < 0
    if np.any(neg):
        a_ext[neg] *= -1.0
        b[neg] *= -1.0
        n_art = int(neg.sum())
        art_cols = np.zeros((r, n_art))
        for k, i in enumerate(np.nonzero(neg)[0]):
            art_cols[i, k] = 1.0
        a_1 = np.hstack([a_ext, art_cols])
        cost_1 = np.zeros(n + r + n_art)
        cost_1[n + r:] = 1.0
        basis = []
        art_iter = iter(range(n + r, n + r + n_art))
        for i in range(r):
            basis.append(next(art_iter) if neg[i] else n + i)
        basis, status = _bland_simplex(a_1, b, cost_1, basis, tol, max_iters)
        if status != "optimal":
            raise IterationLimit("phase-1 simplex failed")
        xb = np.linalg.solve(a_1[:, basis], b)
        if cost_1[basis] @ xb > tol * (1 + abs(b).max()):
            return LpSolution(None, None, None, "infeasible")
        # pivot artificials out where possible; one stuck at zero marks a
        # redundant row, which we drop before phase 2
        for i in range(r):
            if basis[i] >= n + r:
                tableau_row = np.linalg.solve(a_1[:, basis], a_ext.T).T[i]
                for j in range(n + r):
                    if j not in basis and abs(tableau_row[j]) > tol:
                        basis[i] = j
                        break
        keep = [i for i in range(r) if basis[i] < n + r]
        if len(keep) < r:
            a_ext = a_ext[keep]
            b = b[keep]
            basis = [basis[i] for i in keep]
            neg = neg[keep]
            kept_rows = kept_rows[keep]
            r = len(keep)
    else:
        basis = [n + i for i in range(r)]

    cost = np.concatenate([-c, np.zeros(n_rows)])
    basis, status = _bland_simplex(a_ext, b, cost, basis, tol, max_iters)
    if status == "unbounded":
        return LpSolution(None, None, None, "unbounded")

    bmat = a_ext[:, basis]
    xb = np.linalg.solve(bmat, b)
    primal = np.zeros(n)
    for val, col in zip(xb, basis):
        if col < n:
            primal[col] = val
    primal[np.abs(primal) < tol] = 0.0

    cmax = np.concatenate([c, np.zeros(n_rows)])
    dual_kept = np.linalg.solve(bmat.T, cmax[basis])
    # restore the sign convention for rows flipped in phase 1
    if np.any(neg):
        dual_kept[neg] *= -1.0
    dual = np.zeros(n_rows)
    dual[kept_rows] = dual_kept
    dual[np.abs(dual) < tol] = 0.0

    reduced = cost - np.linalg.solve(bmat.T, cost[basis]) @ a_ext
    nonbasic = np.ones(n + n_rows, dtype=bool)
    nonbasic[basis] = False
    degenerate = bool(np.any(np.abs(xb) <= tol)) or bool(
        np.any(np.abs(reduced[nonbasic]) <= tol))

    return LpSolution(
        primal=primal,
        dual=dual,
        objective_value=float(c @ primal),
        status="optimal",
        degenerate=degenerate,
    )
