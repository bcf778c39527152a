"""Inner loop of the bid-update (proportional response) market dynamics.

The loop is the only hot path in the package, so it carries a numba @njit
kernel with a pure-numpy twin. Set the environment variable
``CLOSEDMARKET_NO_NUMBA=1`` to force the numpy path; the numpy path is also
used automatically when numba is unavailable.

Both kernels take budgets ``weights`` (m,), a utility matrix ``util`` (m, n)
already scaled to unit good supply, and a starting bid matrix (m, n) whose
rows sum to the budgets. They iterate

    price_j   = sum_i bids_ij
    share_ij  = bids_ij / price_j
    gain_ij   = util_ij * share_ij
    bids_ij  <- weights_i * gain_ij / sum_k gain_ik

until the largest bid change relative to the owner's budget drops below
``tol`` or the round budget runs out. Returns (bids, rounds_used, converged).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["proportional_response", "backend_name", "pr_numpy"]


def pr_numpy(weights, util, bids, max_rounds, tol):
    m, n = bids.shape
    for rounds in range(1, max_rounds + 1):
        prices = bids.sum(axis=0)
        safe = np.where(prices > 0.0, prices, 1.0)
        gains = util * (bids / safe)
        totals = gains.sum(axis=1)
        new_bids = weights[:, None] * gains / totals[:, None]
        delta = np.abs(new_bids - bids).max(axis=1) / weights
        bids = new_bids
        if delta.max() < tol:
            return bids, rounds, True
    return bids, max_rounds, False


def _pr_loops(weights, util, bids, max_rounds, tol):
    # same update written with explicit loops so numba can compile it
    m, n = bids.shape
    new_bids = np.empty((m, n))
    prices = np.empty(n)
    for rounds in range(1, max_rounds + 1):
        for j in range(n):
            s = 0.0
            for i in range(m):
                s += bids[i, j]
            prices[j] = s if s > 0.0 else 1.0
        worst = 0.0
        for i in range(m):
            total = 0.0
            for j in range(n):
                total += util[i, j] * bids[i, j] / prices[j]
            for j in range(n):
                nb = weights[i] * (util[i, j] * bids[i, j] / prices[j]) / total
                change = abs(nb - bids[i, j]) / weights[i]
                if change > worst:
                    worst = change
                new_bids[i, j] = nb
        for i in range(m):
            for j in range(n):
                bids[i, j] = new_bids[i, j]
        if worst < tol:
            return bids, rounds, True
    return bids, max_rounds, False


_FORCE_NUMPY = os.environ.get("CLOSEDMARKET_NO_NUMBA", "").lower() in ("1", "true", "yes")

if not _FORCE_NUMPY:
    try:
        import numba

        pr_numba = numba.njit(cache=True)(_pr_loops)
        _IMPL, _BACKEND = pr_numba, "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _IMPL, _BACKEND = pr_numpy, "numpy"
else:
    _IMPL, _BACKEND = pr_numpy, "numpy"


def backend_name() -> str:
    return _BACKEND


def proportional_response(weights, util, bids, max_rounds, tol):
    return _IMPL(
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(util, dtype=np.float64),
        np.array(bids, dtype=np.float64),  # copy: the jitted kernel updates in place
        int(max_rounds),
        float(tol),
    )
