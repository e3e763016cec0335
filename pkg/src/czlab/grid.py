"""
Sampled functions on one-dimensional grids.

Everything in the package operates on piecewise-constant data: a `Grid`
(ordered cell edges) together with one value per cell.  Integrals, averages
over cell-aligned intervals and level-set measures are then exact, so the
only error left is the representation error of the sampling itself.

Level sets use the strict inequality ``|f| > t`` throughout.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

UNIFORM = "uniform"
LOG_UNIFORM = "log-uniform"
CUSTOM = "custom"
SPACINGS = (UNIFORM, LOG_UNIFORM, CUSTOM)

# relative width of the first log-uniform cell; small enough to resolve
# level sets of (log 1/x)^2 up to t ~ 10^5 and L^p norms up to p ~ 100
DEFAULT_LOG_MIN_WIDTH = 1e-200

# L^p norms are evaluated in log space from this exponent on
LOG_SPACE_P = 16.0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise GridError(f"interval endpoints must be finite, got ({self.lo}, {self.hi})")
        if not self.lo < self.hi:
            raise GridError(f"interval needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x) -> np.ndarray | bool:
        """Half-open membership ``lo <= x < hi``."""
        return (self.lo <= x) & (x < self.hi)

    def intersect(self, other: "Interval") -> "Interval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo < hi else None

    def scaled(self, factor: float) -> "Interval":
        return Interval(self.lo * factor, self.hi * factor)


def _geometric_ratio_log(n: int, min_fraction: float) -> float:
    """log r such that widths w0*r^k (k < n) sum to 1 with w0 = min_fraction."""
    target = -math.log(min_fraction)
    if n == 1:
        raise GridError("log-uniform spacing needs at least 2 cells")
    if min_fraction * n >= 1.0:
        raise GridError(f"min_fraction={min_fraction} too large for {n} cells")

    def log_sum(lr):
        # log((r^n - 1)/(r - 1)) without overflow
        nl = n * lr
        top = nl + math.log(-math.expm1(-nl)) if nl > 30 else math.log(math.expm1(nl))
        return top - math.log(math.expm1(lr)) - target

    hi = 1.0
    while log_sum(hi) < 0:
        hi *= 2.0
    return brentq(log_sum, 1e-300, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered cell edges tiling ``domain`` exactly."""

    edges: np.ndarray
    spacing: str = CUSTOM
    _points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        if edges.ndim != 1 or edges.size < 2:
            raise GridError("a grid needs at least two edges")
        if not np.all(np.isfinite(edges)):
            raise GridError("grid edges must be finite")
        if not np.all(np.diff(edges) > 0):
            raise GridError("grid edges must be strictly increasing")
        if self.spacing not in SPACINGS:
            raise GridError(f"unknown spacing {self.spacing!r}")
        edges = edges.copy()
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        if self._points is None:
            pts = 0.5 * (edges[:-1] + edges[1:])
        else:
            pts = np.asarray(self._points, dtype=float).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "_points", pts)

    @classmethod
    def uniform(cls, domain: Interval, n_cells: int) -> "Grid":
        _check_cells(n_cells)
        edges = np.linspace(domain.lo, domain.hi, n_cells + 1)
        edges[0], edges[-1] = domain.lo, domain.hi
        return cls(edges, UNIFORM)

    @classmethod
    def log_uniform(cls, domain: Interval, n_cells: int, min_width: float = DEFAULT_LOG_MIN_WIDTH) -> "Grid":
        """Geometric cell widths growing away from ``domain.lo``.

        ``min_width`` is the width of the first cell relative to the domain
        length.  Representative points are geometric midpoints (measured
        from ``domain.lo``), except in the first cell which touches the
        singular endpoint and uses the arithmetic midpoint.
        """
        _check_cells(n_cells)
        if n_cells == 1:
            return cls.uniform(domain, 1)
        lr = _geometric_ratio_log(n_cells, min_width)
        k = np.arange(n_cells + 1, dtype=float)
        nl = n_cells * lr
        # (r^k - 1)/(r^n - 1), written to stay finite for huge r^n
        frac = np.exp((k - n_cells) * lr) * (-np.expm1(-k * lr)) / (-np.expm1(-nl))
        frac[0], frac[-1] = 0.0, 1.0
        edges = domain.lo + domain.length * frac
        edges[0], edges[-1] = domain.lo, domain.hi
        rel = edges - domain.lo
        with np.errstate(divide="ignore"):
            lg = np.log(rel)
        # sqrt(a*b) in log form: the product underflows for widths near 1e-200
        pts = np.empty(n_cells)
        pts[1:] = domain.lo + np.exp(0.5 * (lg[1:-1] + lg[2:]))
        pts[0] = domain.lo + 0.5 * rel[1]
        return cls(edges, LOG_UNIFORM, pts)

    @classmethod
    def from_edges(cls, edges: Sequence[float], points: Sequence[float] | None = None) -> "Grid":
        return cls(np.asarray(edges, dtype=float), CUSTOM, None if points is None else np.asarray(points, dtype=float))

    @property
    def n(self) -> int:
        return self.edges.size - 1

    @property
    def domain(self) -> Interval:
        return Interval(float(self.edges[0]), float(self.edges[-1]))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def min_width(self) -> float:
        return float(self.widths.min())

    def cell_of(self, x) -> np.ndarray:
        """Index of the half-open cell containing ``x`` (-1 / n when outside)."""
        idx = np.searchsorted(self.edges, x, side="right") - 1
        return np.where(np.asarray(x) >= self.edges[-1], self.n, idx)

    def same_as(self, other: "Grid") -> bool:
        return self.n == other.n and np.array_equal(self.edges, other.edges)


def _check_cells(n_cells):
    if int(n_cells) != n_cells or n_cells < 1:
        raise GridError(f"n_cells must be a positive integer, got {n_cells}")


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Piecewise-constant function: ``values[k]`` on cell ``k`` of ``grid``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.values)
        vals = np.array(raw, dtype=np.result_type(raw, float), copy=True)
        if vals.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            bad = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise GridError(f"non-finite value at x={self.grid.points[bad]!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def domain(self) -> Interval:
        return self.grid.domain

    @property
    def widths(self) -> np.ndarray:
        return self.grid.widths

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def with_values(self, values) -> "SampledFunction":
        return SampledFunction(self.grid, values)

    def abs(self) -> "SampledFunction":
        return self.with_values(np.abs(self.values))

    def integral(self) -> float:
        return float(np.sum(self.values * self.widths))

    def __call__(self, x):
        """Evaluate at arbitrary points; zero outside the grid's domain."""
        x = np.asarray(x, dtype=float)
        idx = self.grid.cell_of(x)
        inside = (idx >= 0) & (idx < self.grid.n)
        out = np.zeros(x.shape, dtype=self.values.dtype)
        out[inside] = self.values[idx[inside]]
        return out

    def restrict(self, interval: Interval) -> "SampledFunction":
        """Keep the cells lying entirely inside ``interval``."""
        e = self.grid.edges
        keep = (e[:-1] >= interval.lo) & (e[1:] <= interval.hi)
        if not keep.any():
            raise GridError(f"no cell of the grid lies inside {interval}")
        idx = np.flatnonzero(keep)
        if not np.all(np.diff(idx) == 1):
            raise GridError("restriction must be a contiguous block of cells")
        sub = Grid(e[idx[0]: idx[-1] + 2], self.grid.spacing, self.grid.points[idx])
        return SampledFunction(sub, self.values[idx])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,value\n")
        for x, v in zip(self.points, self.values):
            buf.write(f"{x:.12e},{v:.12e}\n")
        return buf.getvalue()


def make_sampled(domain: Interval, n_cells: int, spacing: str, evaluator: Callable,
                 **grid_kw) -> SampledFunction:
    """Sample ``evaluator`` at the representative point of each cell."""
    if spacing == UNIFORM:
        grid = Grid.uniform(domain, n_cells)
    elif spacing == LOG_UNIFORM:
        grid = Grid.log_uniform(domain, n_cells, **grid_kw)
    else:
        raise GridError(f"spacing must be {UNIFORM!r} or {LOG_UNIFORM!r}, got {spacing!r}")
    return sample_on(grid, evaluator)


def sample_on(grid: Grid, evaluator: Callable) -> SampledFunction:
    vals = evaluate_pointwise(evaluator, grid.points)
    bad = ~np.isfinite(vals)
    if bad.any():
        x = grid.points[np.flatnonzero(bad)[0]]
        raise GridError(f"evaluator is not finite at x={x!r}")
    return SampledFunction(grid, vals)


def evaluate_pointwise(g: Callable, x: np.ndarray) -> np.ndarray:
    """Call ``g`` on an array, falling back to a scalar loop."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        try:
            y = np.asarray(g(x))
            if y.shape == x.shape:
                return y.astype(np.result_type(y, float))
            if y.ndim == 0:
                return np.full(x.shape, float(y))
        except (TypeError, ValueError):
            pass
        return np.array([g(float(v)) for v in x.ravel()], dtype=float).reshape(x.shape)


# ---------------------------------------------------------------------------
# level sets and norms


def level_set_measure(f: SampledFunction, t: float) -> float:
    """|{x : |f(x)| > t}|."""
    if not math.isfinite(t):
        raise GridError("threshold must be finite")
    return float(np.sum(f.widths[np.abs(f.values) > t]))


@dataclass(frozen=True, eq=False)
class LevelSetCurve:
    """Thresholds ``t`` (strictly increasing) and measures ``mu``.

    ``floor`` is the resolution floor of the underlying grid; points with
    ``mu < floor`` are reported but flagged unresolved.
    """

    t: np.ndarray
    mu: np.ndarray
    floor: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if t.shape != mu.shape or t.ndim != 1:
            raise GridError("t and mu must be 1-D of equal length")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise GridError("thresholds must be strictly increasing")
        if np.any(mu < 0):
            raise GridError("measures must be non-negative")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "mu", mu)

    @property
    def resolved(self) -> np.ndarray:
        return (self.mu > 0) & (self.mu >= self.floor)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,measure\n")
        for t, m in zip(self.t, self.mu):
            buf.write(f"{t:.12e},{m:.12e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, floor: float = 0.0) -> "LevelSetCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["t", "measure"]:
            raise GridError("expected header 't,measure'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1], floor)


def level_set_curve(f: SampledFunction, thresholds: Iterable[float], floor_factor: float = 2.0) -> LevelSetCurve:
    """Measures of ``{|f| > t}`` for every threshold, via one sort."""
    ts = np.asarray(list(thresholds), dtype=float)
    a = np.abs(f.values)
    order = np.argsort(a, kind="stable")
    sorted_a = a[order]
    # measure of {|f| > t} = total width of the cells after the insertion point
    tail = np.concatenate([np.cumsum(f.widths[order][::-1])[::-1], [0.0]])
    idx = np.searchsorted(sorted_a, ts, side="right")
    return LevelSetCurve(ts, tail[idx], floor_factor * f.grid.min_width)


def lp_norm(f: SampledFunction, p: float) -> float:
    """(sum |v|^p w)^(1/p); evaluated in log space for p >= 16."""
    if not p >= 1:
        raise GridError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if p < LOG_SPACE_P:
        with np.errstate(over="raise"):
            try:
                return float(np.sum(a ** p * f.widths) ** (1.0 / p))
            except FloatingPointError as exc:
                raise OverflowError(f"L^{p} norm overflows; values up to {a.max():.3e}") from exc
    nz = a > 0
    if not nz.any():
        return 0.0
    lse = logsumexp(p * np.log(a[nz]) + np.log(f.widths[nz]))
    return float(np.exp(lse / p))


def weak_lp_quasinorm(f: SampledFunction, p: float, t_grid: Iterable[float]) -> float:
    """max over ``t_grid`` of t * |{|f| > t}|^(1/p)."""
    ts = np.asarray(list(t_grid), dtype=float)
    if ts.size == 0 or np.any(ts <= 0):
        raise GridError("t_grid must be nonempty and positive")
    ts = np.unique(ts)
    curve = level_set_curve(f, ts)
    return float(np.max(curve.t * curve.mu ** (1.0 / p)))


def value_thresholds(f: SampledFunction, rel: float = 1e-12) -> np.ndarray:
    """Thresholds just below every distinct positive |value|.

    On piecewise-constant data the supremum of t*|{|f|>t}|^(1/p) over all t
    is attained as t increases to one of the values, so this grid makes
    `weak_lp_quasinorm` exact up to the factor (1 - rel).
    """
    a = np.unique(np.abs(f.values))
    a = a[a > 0]
    return a * (1.0 - rel)
