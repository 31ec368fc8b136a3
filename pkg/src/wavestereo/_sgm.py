"""Jitted semi-global aggregation over a census cost volume.

Per path direction r the recurrence is

    L_r(p, d) = C(p, d) + min(L_r(p-r, d),
                              L_r(p-r, d-1) + P1,
                              L_r(p-r, d+1) + P1,
                              min_k L_r(p-r, k) + P2)
               - min_k L_r(p-r, k)

with L_r = C at the first pixel of each path. Scans stream one row/column
buffer at a time, so only the cost volume and the aggregate live in memory.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _step(prev, prevmin, cost_pd, p1, p2, out):
    D = prev.shape[0]
    cap = prevmin + p2
    for d in range(D):
        m = prev[d]
        if d > 0 and prev[d - 1] + p1 < m:
            m = prev[d - 1] + p1
        if d < D - 1 and prev[d + 1] + p1 < m:
            m = prev[d + 1] + p1
        if cap < m:
            m = cap
        out[d] = cost_pd[d] + m - prevmin
    newmin = out[0]
    for d in range(1, D):
        if out[d] < newmin:
            newmin = out[d]
    return newmin


@njit(cache=True, nogil=True)
def _horizontal(cost, p1, p2, agg, reverse):
    H, W, D = cost.shape
    cur = np.empty(D, dtype=np.int32)
    prev = np.empty(D, dtype=np.int32)
    for v in range(H):
        if reverse:
            u0, u1, du = W - 1, -1, -1
        else:
            u0, u1, du = 0, W, 1
        prevmin = 2147000000
        for d in range(D):
            prev[d] = cost[v, u0, d]
            agg[v, u0, d] += prev[d]
            if prev[d] < prevmin:
                prevmin = prev[d]
        u = u0 + du
        while u != u1:
            prevmin = _step(prev, prevmin, cost[v, u], p1, p2, cur)
            for d in range(D):
                agg[v, u, d] += cur[d]
                prev[d] = cur[d]
            u += du


@njit(cache=True, nogil=True)
def _vertical_or_diag(cost, p1, p2, agg, dv, du):
    """One top-to-bottom (dv=+1) or bottom-to-top (dv=-1) pass with column
    step du in {-1, 0, +1}. Keeps an L buffer for the previous row."""
    H, W, D = cost.shape
    Lprev = np.empty((W, D), dtype=np.int32)
    Lcur = np.empty((W, D), dtype=np.int32)
    minprev = np.empty(W, dtype=np.int32)
    mincur = np.empty(W, dtype=np.int32)
    rows = range(H) if dv > 0 else range(H - 1, -1, -1)
    first = True
    for v in rows:
        if first:
            for u in range(W):
                m = 2147000000
                for d in range(D):
                    Lprev[u, d] = cost[v, u, d]
                    agg[v, u, d] += Lprev[u, d]
                    if Lprev[u, d] < m:
                        m = Lprev[u, d]
                minprev[u] = m
            first = False
            continue
        for u in range(W):
            usrc = u - du
            if usrc < 0 or usrc >= W:
                m = 2147000000
                for d in range(D):
                    Lcur[u, d] = cost[v, u, d]
                    agg[v, u, d] += Lcur[u, d]
                    if Lcur[u, d] < m:
                        m = Lcur[u, d]
                mincur[u] = m
            else:
                mincur[u] = _step(Lprev[usrc], minprev[usrc],
                                  cost[v, u], p1, p2, Lcur[u])
                for d in range(D):
                    agg[v, u, d] += Lcur[u, d]
        Lprev, Lcur = Lcur, Lprev
        minprev, mincur = mincur, minprev


def aggregate(cost, p1, p2, paths):
    """Sum of per-path DP costs. cost: (H, W, D) integer volume."""
    cost = np.ascontiguousarray(cost, dtype=np.int32)
    agg = np.zeros_like(cost, dtype=np.int32)
    p1 = int(p1)
    p2 = int(p2)
    _horizontal(cost, p1, p2, agg, False)
    _horizontal(cost, p1, p2, agg, True)
    if paths >= 4:
        _vertical_or_diag(cost, p1, p2, agg, 1, 0)
        _vertical_or_diag(cost, p1, p2, agg, -1, 0)
    if paths == 8:
        _vertical_or_diag(cost, p1, p2, agg, 1, 1)
        _vertical_or_diag(cost, p1, p2, agg, 1, -1)
        _vertical_or_diag(cost, p1, p2, agg, -1, 1)
        _vertical_or_diag(cost, p1, p2, agg, -1, -1)
    return agg
