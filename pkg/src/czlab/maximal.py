"""
Maximal operators on sampled functions.

All suprema run over cell-aligned intervals inside the sampled domain, i.e.
these are the truncated, uncentered operators.  The singleton cell is one of
the admissible intervals, so ``M f >= |f|`` holds exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .grid import GridError, Interval, SampledFunction

LUXEMBURG_RTOL = 1e-10


def _prefix(f: SampledFunction, vals: np.ndarray):
    X = np.asarray(f.grid.edges, dtype=float)
    S = np.concatenate([[0.0], np.cumsum(vals * f.widths)])
    return X, S


def hl_maximal(f: SampledFunction, r: float = 1.0, method: str = "hull") -> SampledFunction:
    """Uncentered Hardy-Littlewood maximal function ``M(|f|^r)^(1/r)``.

    ``method="hull"`` is the O(n log^2 n) convex-hull sweep, ``"sweep"`` the
    O(n^2) exhaustive sweep; both give the same supremum.
    """
    if not r >= 1:
        raise ValueError(f"r must be >= 1, got {r}")
    vals = np.abs(f.values).astype(float)
    if r != 1:
        vals = vals ** r
    X, S = _prefix(f, vals)
    if method == "hull":
        out = _kernels.max_average_hull(X, S)
    elif method == "sweep":
        out = _kernels.max_average_sweep(X, S)
    else:
        raise ValueError(f"unknown method {method!r}")
    # singleton intervals: exact cell values, free of prefix-sum rounding
    out = np.maximum(out, vals)
    if r != 1:
        out = out ** (1.0 / r)
    return f.with_values(out)


def hl_maximal_bruteforce(f: SampledFunction, r: float = 1.0) -> SampledFunction:
    """Reference implementation: every interval averaged from scratch."""
    v = np.abs(np.asarray(f.values, dtype=float)) ** r
    w = f.widths
    n = v.size
    out = np.zeros(n)
    for a in range(n):
        for b in range(a + 1, n + 1):
            avg = np.dot(v[a:b], w[a:b]) / np.sum(w[a:b])
            np.maximum(out[a:b], avg, out=out[a:b])
    out = np.maximum(out, v)
    return f.with_values(out ** (1.0 / r))


def maximal_power(f: SampledFunction, s: float) -> SampledFunction:
    """``M_s f = M(|f|^s)^(1/s)`` for any s > 0 (s < 1 allowed, unlike `hl_maximal`)."""
    if not s > 0:
        raise ValueError("exponent must be positive")
    vals = np.abs(f.values).astype(float) ** s
    X, S = _prefix(f, vals)
    out = np.maximum(_kernels.max_average_hull(X, S), vals)
    return f.with_values(out ** (1.0 / s))


def iterated_maximal(f: SampledFunction, k: int) -> SampledFunction:
    """M applied k times."""
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    g = f
    for _ in range(k):
        g = hl_maximal(g)
    return g


@dataclass(frozen=True)
class OrliczGauge:
    """Young function Phi(t) = t * log(e + t)^alpha.

    alpha = 0 is the plain average, alpha = 1 the L log L average.
    """

    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return t * np.log(np.e + t) ** self.alpha


def _overlaps(f: SampledFunction, Q: Interval):
    e = f.grid.edges
    if Q.lo < e[0] - 1e-12 * Q.length or Q.hi > e[-1] + 1e-12 * Q.length:
        raise GridError(f"{Q} is not covered by the grid domain {f.domain}")
    w = np.clip(np.minimum(e[1:], Q.hi) - np.maximum(e[:-1], Q.lo), 0.0, None)
    idx = np.flatnonzero(w > 0)
    return idx, w[idx]


def luxemburg_norm(f: SampledFunction, Q: Interval, gauge: OrliczGauge = OrliczGauge(1.0),
                   rtol: float = LUXEMBURG_RTOL) -> float:
    """inf{lam > 0 : (1/|Q|) int_Q Phi(|f|/lam) <= 1}.

    Cells partially inside ``Q`` contribute with their overlap length.
    """
    idx, w = _overlaps(f, Q)
    v = np.abs(np.asarray(f.values, dtype=float))[idx]
    return float(_kernels.luxemburg_solve(np.ascontiguousarray(v), w, float(gauge.alpha), rtol))


def orlicz_maximal(f: SampledFunction, gauge: OrliczGauge = OrliczGauge(1.0),
                   rtol: float = LUXEMBURG_RTOL) -> SampledFunction:
    """Sup over cell-aligned intervals containing x of the Luxemburg norm.

    Cost is O(n^3) times the bisection length; meant for grids of a few
    hundred cells.
    """
    v = np.abs(np.asarray(f.values, dtype=float))
    if gauge.alpha == 0:
        return hl_maximal(f)
    out = _kernels.max_luxemburg(v, f.widths, float(gauge.alpha), rtol)
    return f.with_values(np.maximum(out, 0.0))


def sharp_maximal(f: SampledFunction, delta: float = 1.0) -> SampledFunction:
    """Fefferman-Stein sharp maximal function.

    For delta < 1 this is ``M#(|f|^delta)^(1/delta)``.
    """
    if not 0 < delta <= 1:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    v = np.asarray(f.values, dtype=float)
    if delta != 1:
        v = np.abs(v) ** delta
    out = np.maximum(_kernels.max_oscillation(v, f.widths), 0.0)
    if delta != 1:
        out = out ** (1.0 / delta)
    return f.with_values(out)


def vv_maximal(fs: Sequence[SampledFunction], q: float) -> SampledFunction:
    """Vector-valued maximal function ``(sum_j (M f_j)^q)^(1/q)``."""
    if not q > 1:
        raise ValueError(f"q must be > 1, got {q}")
    fs = list(fs)
    if not fs:
        raise ValueError("need at least one component")
    grid = fs[0].grid
    for g in fs[1:]:
        if not g.grid.same_as(grid):
            raise GridError("all components must share one grid")
    # accumulate in component order; scale by the running max to avoid overflow
    ms = [hl_maximal(g).values for g in fs]
    top = np.max(np.stack(ms), axis=0)
    acc = np.zeros(grid.n)
    safe = np.where(top > 0, top, 1.0)
    for m in ms:
        acc += (m / safe) ** q
    return fs[0].with_values(top * acc ** (1.0 / q))
