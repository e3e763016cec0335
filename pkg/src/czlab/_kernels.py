"""
Compiled inner loops for suprema over cell-aligned intervals.

A cell-aligned interval is a pair of edge indices a < b; it covers cells
a..b-1.  With prefix integrals S over the edges X the average over (a, b) is
the slope of the chord between the points (X[a], S[a]) and (X[b], S[b]).
Every kernel writes, for each cell, the sup over intervals containing it.
Loops run in a fixed order so results do not depend on scheduling.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def _slope(X, S, a, b):
    return (S[b] - S[a]) / (X[b] - X[a])


@njit(**_OPTS)
def max_average_hull(X, S):
    """Sup of chord slopes over pairs straddling each cell, O(n log^2 n).

    Divide and conquer over edge indices: pairs with a <= mid < b are
    handled at the node (lo, hi).  For cells left of mid the best pair is a
    prefix maximum over a of the tangent from (X[a], S[a]) to the upper hull
    of the right half; right of mid it is a suffix maximum over b of the
    tangent from (X[b], S[b]) to the lower hull of the left half.
    """
    m = X.shape[0]
    n = m - 1
    out = np.full(n, -np.inf)
    hull = np.empty(m, np.int64)
    stack = np.empty((2 * 64 + 8, 2), np.int64)
    sp = 0
    stack[0, 0] = 0
    stack[0, 1] = n
    sp = 1
    while sp > 0:
        sp -= 1
        lo = stack[sp, 0]
        hi = stack[sp, 1]
        if hi <= lo:
            continue
        mid = (lo + hi) // 2

        # upper hull of points mid+1..hi
        k = 0
        for j in range(mid + 1, hi + 1):
            while k >= 2:
                p0 = hull[k - 2]
                p1 = hull[k - 1]
                cr = (X[p1] - X[p0]) * (S[j] - S[p0]) - (S[p1] - S[p0]) * (X[j] - X[p0])
                if cr >= 0.0:
                    k -= 1
                else:
                    break
            hull[k] = j
            k += 1
        best = -np.inf
        for a in range(lo, mid + 1):
            l = 0
            r = k - 1
            while l < r:
                md = (l + r) // 2
                if _slope(X, S, a, hull[md + 1]) > _slope(X, S, a, hull[md]):
                    l = md + 1
                else:
                    r = md
            v = _slope(X, S, a, hull[l])
            if v > best:
                best = v
            if best > out[a]:
                out[a] = best

        # lower hull of points lo..mid
        k = 0
        for j in range(lo, mid + 1):
            while k >= 2:
                p0 = hull[k - 2]
                p1 = hull[k - 1]
                cr = (X[p1] - X[p0]) * (S[j] - S[p0]) - (S[p1] - S[p0]) * (X[j] - X[p0])
                if cr <= 0.0:
                    k -= 1
                else:
                    break
            hull[k] = j
            k += 1
        best = -np.inf
        for b in range(hi, mid + 1, -1):
            l = 0
            r = k - 1
            while l < r:
                md = (l + r) // 2
                if _slope(X, S, hull[md + 1], b) > _slope(X, S, hull[md], b):
                    l = md + 1
                else:
                    r = md
            v = _slope(X, S, hull[l], b)
            if v > best:
                best = v
            if best > out[b - 1]:
                out[b - 1] = best

        stack[sp, 0] = lo
        stack[sp, 1] = mid
        stack[sp + 1, 0] = mid + 1
        stack[sp + 1, 1] = hi
        sp += 2
    return out


@njit(**_OPTS)
def max_average_sweep(X, S):
    """Same sup by exhaustive O(n^2) sweep with running suffix maxima."""
    n = X.shape[0] - 1
    out = np.full(n, -np.inf)
    for a in range(n):
        best = -np.inf
        for b in range(n, a, -1):
            v = (S[b] - S[a]) / (X[b] - X[a])
            if v > best:
                best = v
            if best > out[b - 1]:
                out[b - 1] = best
    return out


@njit(**_OPTS)
def _phi_mean(v, w, lam, alpha, total):
    acc = 0.0
    for k in range(v.shape[0]):
        if v[k] > 0.0:
            t = v[k] / lam
            acc += w[k] * t * math.log(math.e + t) ** alpha
    return acc / total


@njit(**_OPTS)
def luxemburg_solve(v, w, alpha, rtol):
    """inf{lam : mean_w Phi_alpha(v/lam) <= 1} for v >= 0 by bisection."""
    total = 0.0
    mass = 0.0
    vmax = 0.0
    for k in range(v.shape[0]):
        total += w[k]
        mass += w[k] * v[k]
        if v[k] > vmax:
            vmax = v[k]
    if mass <= 0.0:
        return 0.0
    avg = mass / total
    if alpha == 0.0:
        return avg
    # Phi(t) >= t gives lam >= avg; Phi(t) <= t log(e + vmax/avg)^alpha for
    # t <= vmax/avg gives the upper end
    lo = avg
    hi = avg * math.log(math.e + vmax / avg) ** alpha
    while _phi_mean(v, w, hi, alpha, total) > 1.0:
        hi *= 2.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _phi_mean(v, w, mid, alpha, total) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


@njit(**_OPTS)
def max_luxemburg(v, w, alpha, rtol):
    """Sup over cell-aligned intervals containing each cell of the Luxemburg norm."""
    n = v.shape[0]
    out = np.full(n, -np.inf)
    for a in range(n):
        best = -np.inf
        for b in range(n, a, -1):
            val = luxemburg_solve(v[a:b], w[a:b], alpha, rtol)
            if val > best:
                best = val
            if best > out[b - 1]:
                out[b - 1] = best
    return out


@njit(**_OPTS)
def max_oscillation(v, w):
    """Sup over cell-aligned intervals containing each cell of the mean oscillation."""
    n = v.shape[0]
    out = np.full(n, -np.inf)
    for a in range(n):
        best = -np.inf
        mass = 0.0
        length = 0.0
        # grow the interval to the right, then sweep suffix maxima
        # oscillation is shift invariant; centring on v[a] makes constants exact
        base = v[a]
        vals = np.empty(n - a)
        for b in range(a + 1, n + 1):
            mass += (v[b - 1] - base) * w[b - 1]
            length += w[b - 1]
            avg = mass / length
            osc = 0.0
            for k in range(a, b):
                osc += w[k] * abs(v[k] - base - avg)
            vals[b - a - 1] = osc / length
        for b in range(n, a, -1):
            if vals[b - a - 1] > best:
                best = vals[b - a - 1]
            if best > out[b - 1]:
                out[b - 1] = best
    return out
