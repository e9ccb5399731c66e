"""Numba-compiled twins of the numpy kernels.

Loops are written so integer and comparison results match the numpy
backend exactly; float reductions run serially per row, so results agree
with numpy to the last ulp or so but not necessarily bitwise.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

BACKEND_NAME = "numba"


@njit(cache=True, parallel=True)
def sample_from_cdf(cdf, u):
    n = cdf.shape[0]
    out = np.empty(u.shape[0], dtype=np.int64)
    for k in prange(u.shape[0]):
        lo = 0
        hi = n
        v = u[k]
        while lo < hi:
            mid = (lo + hi) // 2
            if cdf[mid] <= v:
                lo = mid + 1
            else:
                hi = mid
        if lo > n - 1:
            lo = n - 1
        out[k] = lo
    return out


@njit(cache=True, parallel=True)
def weighted_invalidity_estimates(member_probs, mu, codes, inv_vals, weight_cap):
    m = member_probs.shape[0]
    n = codes.shape[0]
    est = np.zeros(m, dtype=np.float64)
    row_max = np.zeros(m, dtype=np.float64)
    for i in prange(m):
        acc = 0.0
        mx = 0.0
        for k in range(n):
            c = codes[k]
            denom = mu[c]
            if denom > 0.0:
                w = member_probs[i, c] / denom
            else:
                w = np.inf
            if w < weight_cap:
                acc += w * inv_vals[k]
                if w > mx:
                    mx = w
        est[i] = acc / n
        row_max[i] = mx
    max_w = 0.0
    for i in range(m):
        if row_max[i] > max_w:
            max_w = row_max[i]
    return est, max_w


@njit(cache=True)
def acceptance_probs(member_probs, mu, weight_cap):
    m = member_probs.shape[0]
    x = member_probs.shape[1]
    pi = np.empty(x, dtype=np.float64)
    for j in range(x):
        if mu[j] <= 0.0:
            pi[j] = 1.0
            continue
        cnt = 0
        for i in range(m):
            if member_probs[i, j] / mu[j] < weight_cap:
                cnt += 1
        pi[j] = cnt / m
    return pi


@njit(cache=True)
def box_stats(lo, hi, pts, cnts, neg):
    c = lo.shape[0]
    d = lo.shape[1]
    inside = np.zeros(c, dtype=np.int64)
    feasible = np.ones(c, dtype=np.bool_)
    for b in range(c):
        acc = 0
        for p in range(pts.shape[0]):
            ok = True
            for a in range(d):
                v = pts[p, a]
                if v < lo[b, a] or v > hi[b, a]:
                    ok = False
                    break
            if ok:
                acc += cnts[p]
        inside[b] = acc
        for q in range(neg.shape[0]):
            ok = True
            for a in range(d):
                v = neg[q, a]
                if v < lo[b, a] or v > hi[b, a]:
                    ok = False
                    break
            if ok:
                feasible[b] = False
                break
    return inside, feasible


@njit(cache=True)
def max_intersection(cand, kept):
    best = 0
    for i in range(kept.shape[0]):
        acc = 0
        for j in range(cand.shape[0]):
            acc += int(kept[i, j]) * int(cand[j])
        if acc > best:
            best = acc
    return best
