"""Independent reference implementations used only to check the solvers.

Nothing here shares code with the package's solution paths: the LP oracle
enumerates basic solutions, the market oracle climbs the budget-weighted
log-utility objective by projected gradient over the per-good simplices.
"""

import itertools

import numpy as np


def lp_vertex_oracle(c, a, b, tol=1e-9):
    """Optimal value of max c.x, Ax <= b, x >= 0 by basic-solution enumeration."""
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    r, n = a.shape
    ext = np.hstack([a, np.eye(r)])
    best = None
    for cols in itertools.combinations(range(n + r), r):
        basis = ext[:, cols]
        if abs(np.linalg.det(basis)) < 1e-12:
            continue
        z = np.linalg.solve(basis, b)
        if np.any(z < -tol):
            continue
        x = np.zeros(n)
        for val, col in zip(z, cols):
            if col < n:
                x[col] = val
        value = float(c @ x)
        if best is None or value > best:
            best = value
    return best


def _project_simplex_rows(v, totals):
    """Project each row of v onto {z >= 0, sum z = total} (vectorized)."""
    rows, dim = v.shape
    u = np.sort(v, axis=1)[:, ::-1]
    cumsum = np.cumsum(u, axis=1) - totals[:, None]
    ks = np.arange(1, dim + 1)
    cond = u - cumsum / ks > 0
    rho = dim - np.argmax(cond[:, ::-1], axis=1) - 1
    theta = cumsum[np.arange(rows), rho] / (rho + 1)
    return np.maximum(v - theta[:, None], 0.0)


def eg_objective(budgets, utility, x):
    """Budget-weighted log utility; shapes (B,m), (B,m,n), (B,m,n)."""
    gains = np.einsum("bmn,bmn->bm", utility, x)
    return (budgets * np.log(gains)).sum(axis=1)


def eisenberg_gale_batch(budgets, quantities, utility, iters=6000):
    """Projected-gradient maximizer for a batch of markets.

    budgets (B, m), quantities (B, n), utility (B, m, n), all with strictly
    positive entries. Returns (allocations, objective values).
    """
    budgets = np.asarray(budgets, dtype=float)
    quantities = np.asarray(quantities, dtype=float)
    utility = np.asarray(utility, dtype=float)
    nb, m = budgets.shape
    n = quantities.shape[1]

    shares = budgets / budgets.sum(axis=1, keepdims=True)
    x = shares[:, :, None] * quantities[:, None, :]
    fx = eg_objective(budgets, utility, x)
    step = np.full(nb, 0.25)

    for _ in range(iters):
        gains = np.einsum("bmn,bmn->bm", utility, x)
        grad = budgets[:, :, None] * utility / gains[:, :, None]
        trial = x + step[:, None, None] * grad
        cols = np.transpose(trial, (0, 2, 1)).reshape(nb * n, m)
        projected = _project_simplex_rows(cols, quantities.reshape(nb * n))
        x_new = np.transpose(projected.reshape(nb, n, m), (0, 2, 1))
        f_new = eg_objective(budgets, utility, x_new)
        better = f_new >= fx
        x = np.where(better[:, None, None], x_new, x)
        fx = np.where(better, f_new, fx)
        step = np.where(better, np.minimum(step * 1.1, 10.0), step * 0.5)
        step = np.maximum(step, 1e-12)
    return x, fx


def eisenberg_gale_oracle(budgets, quantities, utility, iters=6000):
    """Single-instance wrapper around the batch maximizer."""
    x, fx = eisenberg_gale_batch(
        np.asarray(budgets, dtype=float)[None],
        np.asarray(quantities, dtype=float)[None],
        np.asarray(utility, dtype=float)[None],
        iters=iters)
    return x[0], float(fx[0])


def random_fisher(rng, m=3, n=3):
    return (rng.uniform(0.5, 1.5, m), rng.uniform(0.5, 1.5, n),
            rng.uniform(0.2, 1.2, (m, n)))


def random_economy_arrays(rng, m=3, n=3):
    return (rng.uniform(0.1, 2.0, (m, n)), rng.uniform(0.5, 3.0, m),
            rng.uniform(0.1, 2.0, (m, n)))
