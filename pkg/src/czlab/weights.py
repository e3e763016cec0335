"""
Power weights w(x) = |x|^a and the quantities built on them.

Every weight integral here is a closed-form power integral, so a divergent
supremum shows up as a measured growth rate along a refinement schedule and
never as quadrature overflow.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .grid import Grid, Interval, SampledFunction, level_set_curve, value_thresholds
from .maximal import hl_maximal

DIVERGENCE_FACTOR = 1.5
DIVERGENCE_RUN = 3


class WeightError(ValueError):
    pass


def _log_ratio(lo, hi):
    """log(lo / hi) for 0 < lo <= hi, via the exact gap when the ratio is near 1."""
    with np.errstate(divide="ignore"):
        return np.where(lo > 0.5 * hi, np.log1p(-(hi - lo) / hi), np.log(lo / hi))


def _half_line_integral(c: float, lo: float, hi: float) -> float:
    """int_lo^hi x^c dx for 0 <= lo <= hi, c > -1 when lo == 0."""
    if hi <= lo:
        return 0.0
    if lo == 0.0:
        if c <= -1:
            return math.inf
        return hi ** (c + 1) / (c + 1)
    lr = float(_log_ratio(lo, hi))
    if c == -1:
        return -lr
    # hi^(c+1) (1 - (lo/hi)^(c+1)) / (c+1), stable for narrow intervals
    return hi ** (c + 1) * -math.expm1((c + 1) * lr) / (c + 1)


def power_integral(c: float, I: Interval) -> float:
    """int_I |x|^c dx in closed form (inf when c <= -1 and I reaches 0)."""
    lo, hi = I.lo, I.hi
    if lo >= 0:
        return _half_line_integral(c, lo, hi)
    if hi <= 0:
        return _half_line_integral(c, -hi, -lo)
    return _half_line_integral(c, 0.0, -lo) + _half_line_integral(c, 0.0, hi)


def power_mean(c: float, I: Interval) -> float:
    if c == 0:
        return 1.0
    return power_integral(c, I) / I.length


def cell_power_means(c: float, edges: np.ndarray) -> np.ndarray:
    """Mean of |x|^c over every cell [edges[k], edges[k+1]]."""
    e = np.asarray(edges, dtype=float)
    lo, hi = e[:-1], e[1:]
    if c == 0:
        return np.ones(lo.size)
    out = np.empty(lo.size)
    pos = lo > 0
    neg = hi < 0
    for mask, a, b in ((pos, lo, hi), (neg, -hi, -lo)):
        if mask.any():
            aa, bb = a[mask], b[mask]
            lr = _log_ratio(aa, bb)
            if c == -1:
                out[mask] = -lr / (bb - aa)
            else:
                out[mask] = bb ** (c + 1) * -np.expm1((c + 1) * lr) / ((c + 1) * (bb - aa))
    for k in np.flatnonzero(~(pos | neg)):
        out[k] = power_mean(c, Interval(lo[k], hi[k]))
    return out


def _touches_zero(I: Interval) -> bool:
    return I.lo <= 0 <= I.hi


@dataclass(frozen=True)
class PowerWeight:
    """w(x) = |x|^a.

    Built from (delta, p) the exponent is a = delta (p - 1) and
    beta = 1 - a; the fixture range is 0 < delta < min(1, 1/(p-1)).
    """

    a: float
    delta: float | None = None
    p: float | None = None

    @classmethod
    def from_delta_p(cls, delta: float, p: float) -> "PowerWeight":
        if not p > 1:
            raise WeightError(f"p must be > 1, got {p}")
        top = min(1.0, 1.0 / (p - 1))
        if not 0 < delta < top:
            raise WeightError(f"delta must lie in (0, {top:g}) for p={p:g}, got {delta}")
        return cls(delta * (p - 1), float(delta), float(p))

    @property
    def beta(self) -> float:
        return 1.0 - self.a

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        if self.a == 0:
            return np.ones_like(x)
        with np.errstate(divide="ignore"):
            return x ** self.a

    def integral(self, I: Interval) -> float:
        return power_integral(self.a, I)

    def mean(self, I: Interval) -> float:
        return power_mean(self.a, I)

    def inf_on(self, I: Interval, excise: float = 0.0) -> float:
        """inf of w over I minus (-excise, excise); the infimum is attained or a limit."""
        if self.a == 0:
            return 1.0
        near = 0.0 if _touches_zero(I) else min(abs(I.lo), abs(I.hi))
        far = max(abs(I.lo), abs(I.hi))
        if self.a > 0:
            r = max(near, excise)
            if r >= far:
                raise WeightError(f"excision radius {excise} removes all of {I}")
            return r ** self.a
        return far ** self.a


# ---------------------------------------------------------------------------
# A_p and A_1


@dataclass(frozen=True)
class RefinementSchedule:
    """Intervals at scale h_k = base 2^-k, k = 0..levels-1.

    Level k holds (0, h), (-h, 0), (-h, h) touching the origin and
    (h, 2h), (-2h, -h), (base, base + h) avoiding it.
    """

    levels: int = 30
    base: float = 1.0

    def __post_init__(self):
        if self.levels < 1:
            raise WeightError("need at least one level")

    def scale(self, k: int) -> float:
        return self.base * 2.0 ** -k

    def intervals(self, k: int) -> list[Interval]:
        h = self.scale(k)
        return [Interval(0.0, h), Interval(-h, 0.0), Interval(-h, h),
                Interval(h, 2 * h), Interval(-2 * h, -h), Interval(self.base, self.base + h)]

    def all_intervals(self) -> list[Interval]:
        return [I for k in range(self.levels) for I in self.intervals(k)]


def _growth_exponent(x: np.ndarray, values: np.ndarray) -> float:
    """Least-squares slope of log(values) against x."""
    if len(values) < 2:
        return 0.0
    return float(np.polyfit(np.asarray(x, dtype=float), np.log(values), 1)[0])


def _dual_exponent(w: PowerWeight, p: float) -> float:
    return -w.a / (p - 1)


def ap_value(w: PowerWeight, p: float, I: Interval) -> float:
    """<w>_I <w^(1-p')>_I^(p-1) on one interval."""
    c = _dual_exponent(w, p)
    if _touches_zero(I):
        if w.a <= -1:
            raise WeightError(f"w = |x|^{w.a:g} is not integrable near 0 (need a > -1)")
        if c <= -1:
            raise WeightError(
                f"w^(1-p') = |x|^{c:g} is not integrable near 0: need a < p - 1 = {p - 1:g}, got a = {w.a:g}")
    return w.mean(I) * power_mean(c, I) ** (p - 1)


def ap_constant(w: PowerWeight, p: float, intervals: Iterable[Interval]) -> float:
    """max over ``intervals`` of <w>_I <w^(1-p')>_I^(p-1)."""
    if not p > 1:
        raise WeightError(f"p must be > 1, got {p}")
    vals = [ap_value(w, p, I) for I in intervals]
    if not vals:
        raise WeightError("need at least one interval")
    return max(vals)


@dataclass
class RefinementReport:
    """Per-level values of a constant along a refinement schedule."""

    quantity: str
    params: dict
    schedule: dict
    levels: list[float]
    value: float
    divergent: bool
    growth_exponent: float
    stability: float | None = None
    notes: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def ap_refinement(w: PowerWeight, p: float, schedule: RefinementSchedule = RefinementSchedule(),
                  tail: int = 5) -> RefinementReport:
    """Cumulative A_p maximum after each level; stability = last/first over the last ``tail`` levels."""
    running = -math.inf
    levels = []
    for k in range(schedule.levels):
        running = max(running, ap_constant(w, p, schedule.intervals(k)))
        levels.append(running)
    tail = min(tail, len(levels))
    stab = levels[-1] / levels[-tail]
    ks = np.arange(len(levels))
    return RefinementReport("A_p", {"a": w.a, "delta": w.delta, "p": p},
                            asdict(schedule), levels, levels[-1], False,
                            _growth_exponent(ks * math.log(2), np.array(levels)), stab)


def a1_constant(w: PowerWeight, schedule: RefinementSchedule = RefinementSchedule()) -> RefinementReport:
    """<w>_I / inf_I w along the schedule.

    At level k the infimum is taken off a ball of radius |I| 10^-(k+1)
    around the origin, so a weight that vanishes at 0 produces a finite
    value that grows geometrically with k.  The flag is set when the value
    grows by a factor >= 1.5 over 3 consecutive levels;
    ``growth_exponent`` is d log(value) / d log(|I| / radius).
    """
    levels = []
    for k in range(schedule.levels):
        vals = [w.mean(I) / w.inf_on(I, I.length * 10.0 ** -(k + 1)) for I in schedule.intervals(k)]
        levels.append(max(vals))
    arr = np.array(levels)
    growth = arr[1:] / arr[:-1]
    run = best = 0
    for g in growth:
        run = run + 1 if g >= DIVERGENCE_FACTOR else 0
        best = max(best, run)
    x = (np.arange(len(levels)) + 1) * math.log(10)
    return RefinementReport("A_1", {"a": w.a, "delta": w.delta, "p": w.p}, asdict(schedule),
                            levels, float(arr.max()), best >= DIVERGENCE_RUN,
                            _growth_exponent(x, arr), notes={"excision": "|I| * 10^-(k+1)"})


# ---------------------------------------------------------------------------
# conjugated maximal operator and weak-type estimators


def conjugated_maximal(w: PowerWeight, f: SampledFunction) -> SampledFunction:
    """w(x) M(f/w)(x).

    f/w on a cell is f times the exact cell average of |y|^-a; w is taken at
    the representative point.
    """
    e = f.grid.edges
    inv = cell_power_means(-w.a, e)
    wx = w(f.points)
    bad = ~np.isfinite(inv) | (wx <= 0)
    if bad.any():
        x = float(f.points[np.flatnonzero(bad)[0]])
        raise WeightError(f"weight vanishes or 1/w is not integrable on the cell at x={x!r}")
    Mq = hl_maximal(f.with_values(np.abs(f.values) * inv))
    return f.with_values(wx * Mq.values)


def weak11_estimator(g: SampledFunction, t_grid: Iterable[float] | None = None) -> float:
    """max over ``t_grid`` of t |{|g| > t}|.

    Without a grid the thresholds sit just below every value of |g|, which
    makes the maximum the exact supremum over t up to a factor 1 - 1e-12.
    """
    ts = value_thresholds(g) if t_grid is None else np.unique(np.asarray(list(t_grid), dtype=float))
    if ts.size == 0:
        return 0.0
    if np.any(ts <= 0):
        raise WeightError("thresholds must be positive")
    curve = level_set_curve(g, ts)
    return float(np.max(curve.t * curve.mu))


def _beta_from(delta: float, p: float) -> float:
    beta = 1.0 - delta * (p - 1)
    if not 0 < beta < 1:
        raise WeightError(f"beta = 1 - delta(p-1) must lie in (0, 1), got {beta:g}")
    return beta


def llogl_failure_ratio(delta: float, p: float, alpha: float, t: float) -> float:
    """t [(1/t)^(1/beta) - 1] / log(e + 1/t)^alpha.

    This is |{x > 1 : x^-beta > t}| / Phi_alpha(1/t) with
    Phi_alpha(s) = s log(e + s)^alpha.
    """
    beta = _beta_from(delta, p)
    if not 0 < t <= 1:
        raise WeightError(f"t must lie in (0, 1], got {t}")
    bracket = math.expm1(-math.log(t) / beta)
    return t * bracket / math.log(math.e + 1.0 / t) ** alpha


def llogl_failure_ratio_grid(g: SampledFunction, alpha: float, t: float) -> float:
    """|{|g| > t}| / Phi_alpha(1/t) measured on a sampled function."""
    mu = float(level_set_curve(g, [t]).mu[0])
    s = 1.0 / t
    return mu / (s * math.log(math.e + s) ** alpha)


def conjugated_fixture_grid(R: float, n_inner: int, n_outer: int, min_width: float = 1e-12) -> Grid:
    """Log-uniform cells on (0, 1) followed by geometric cells on (1, R)."""
    if not R > 1:
        raise WeightError("R must exceed 1")
    inner = Grid.log_uniform(Interval(0.0, 1.0), n_inner, min_width=min_width).edges
    outer = np.geomspace(1.0, R, n_outer + 1)
    outer[-1] = R
    edges = np.concatenate([inner[:-1], [1.0], outer[1:]])
    return Grid.from_edges(edges)


# ---------------------------------------------------------------------------
# necessary condition ||w chi_Q / |. - x| ||_{L^{1,inf}} <= c w(x)


@dataclass
class MWReport:
    max_ratio: float
    samples: list[dict]
    params: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _refined_edges(Q: Interval, x: float, n_side: int, rel: float) -> np.ndarray:
    d0 = rel * Q.length
    left = x - Q.lo
    right = Q.hi - x
    parts = []
    if left > d0:
        parts.append(x - np.geomspace(left, d0, n_side + 1))
    else:
        parts.append(np.array([Q.lo]))
    if right > d0:
        parts.append(x + np.geomspace(d0, right, n_side + 1))
    else:
        parts.append(np.array([Q.hi]))
    e = np.concatenate(parts)
    e[0], e[-1] = Q.lo, Q.hi
    return np.unique(e)


def mw_condition_check(w: PowerWeight, Q: Interval, x_samples: Sequence[float],
                       t_grid: Iterable[float] | None = None, n_side: int = 4000,
                       rel: float = 1e-10) -> MWReport:
    """Weak-(1,1) quasinorm of y -> w(y) chi_Q(y) / |y - x|, divided by w(x).

    The function is sampled on cells refined geometrically toward x (down to
    ``rel |Q|``); thresholds default to just below the sampled values.
    """
    rows = []
    for x in x_samples:
        x = float(x)
        if not Q.lo < x < Q.hi:
            raise WeightError(f"sample x={x} must lie inside {Q}")
        if x == 0 or (w.a > 0 and _touches_zero(Interval(x - rel * Q.length, x + rel * Q.length))):
            raise WeightError("samples must stay away from the origin")
        grid = Grid.from_edges(_refined_edges(Q, x, n_side, rel))
        y = grid.points
        with np.errstate(divide="ignore"):
            vals = w(y) / np.abs(y - x)
        k = int(np.argmin(np.abs(y - x)))
        if not np.isfinite(vals[k]):
            vals[k] = float(w(x)) / (0.5 * grid.widths[k])
        g = SampledFunction(grid, vals)
        q = weak11_estimator(g, t_grid)
        wx = float(w(x))
        rows.append({"x": x, "quasinorm": q, "w_x": wx, "ratio": q / wx})
    return MWReport(max(r["ratio"] for r in rows), rows,
                    {"a": w.a, "Q": [Q.lo, Q.hi], "n_side": n_side, "rel": rel})
