"""
Rubio de Francia iteration Rg = sum_k M^k g / N^k, truncated at K.

M is the truncated maximal operator on the grid of g.  The normalizer
N_q = 2q/(q-1) must dominate the empirical step ratios
||M^{k+1} g||_q / ||M^k g||_q; this is checked at every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import SampledFunction, lp_norm
from .maximal import hl_maximal

MAX_TERMS = 40


class RdfError(ValueError):
    pass


def maximal_norm_bound(q: float) -> float:
    """N_q = 2q/(q-1), the normalizer used by `rubio_de_francia`."""
    if not q > 1:
        raise RdfError(f"q must be > 1, got {q}")
    return 2.0 * q / (q - 1.0)


@dataclass(frozen=True)
class RdfResult:
    """Truncated series and its bookkeeping.

    ``ratio`` is max_k (step ratio)/N; ``tail_bound`` is
    ||g||_q * sum_{k>K} ratio^k, the geometric estimate of the dropped terms.
    ``certified`` records whether ratio <= 1/2, the regime in which the
    geometric series gives ||Rg||_q <= 2 ||g||_q.
    """

    Rg: SampledFunction
    K: int
    q: float
    normN: float
    step_ratios: tuple[float, ...]
    ratio: float
    tail_bound: float

    @property
    def certified(self) -> bool:
        return self.ratio <= 0.5


def rubio_de_francia(g: SampledFunction, q: float, K: int) -> RdfResult:
    if int(K) != K or not 0 <= K <= MAX_TERMS:
        raise RdfError(f"K must be an integer in [0, {MAX_TERMS}], got {K}")
    v = np.asarray(g.values, dtype=float)
    if np.any(v < 0):
        k = int(np.flatnonzero(v < 0)[0])
        raise RdfError(f"g must be non-negative; g={v[k]!r} at x={g.points[k]!r}")
    N = maximal_norm_bound(q)
    gn = lp_norm(g, q)
    acc = v.copy()
    ratios = []
    term = g
    prev = gn
    scale = 1.0
    if gn > 0:
        for k in range(1, K + 1):
            term = hl_maximal(term)
            cur = lp_norm(term, q)
            r = cur / prev
            if r > N:
                raise RdfError(f"step {k}: ||M^k g||/||M^(k-1) g|| = {r:.4g} exceeds N_q = {N:.4g}")
            ratios.append(r)
            scale /= N
            acc += scale * term.values
            prev = cur
    ratio = max(ratios) / N if ratios else 0.0
    tail = gn * ratio ** (K + 1) / (1.0 - ratio) if ratio < 1 else float("inf")
    return RdfResult(g.with_values(acc), int(K), float(q), N, tuple(ratios), ratio, tail)
