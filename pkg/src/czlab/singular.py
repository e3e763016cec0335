"""
Hilbert transform and commutators with a symbol b.

Kernel convention: ``H f(x) = p.v. int f(y) / (x - y) dy`` with **no** 1/pi
factor.  Library Hilbert transforms (scipy.signal.hilbert and friends) use a
different normalisation; do not mix them.

For piecewise-constant f the principal value is exact: a cell [l, h) with
value v contributes ``v * (log|x - l| - log|x - h|)``, which telescopes to a
sum over the jumps of f.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grid import Grid, SampledFunction, evaluate_pointwise
from .quadrature import adaptive_integrate

log = logging.getLogger(__name__)

ZETA2 = math.pi ** 2 / 6
ASYMPTOTIC_LOG_U = 10.0
_GL_X, _GL_W = leggauss(24)


class SingularSymbolError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    """A symbol b with a declared (measure zero) singular set."""

    kind: str
    evaluator: Callable = field(compare=False)
    singular_points: tuple = ()
    value: float | None = None

    @classmethod
    def log_abs(cls) -> "Symbol":
        return cls("log-abs", lambda x: np.log(np.abs(x)), (0.0,))

    @classmethod
    def constant(cls, c: float) -> "Symbol":
        c = float(c)
        return cls("constant", lambda x: np.full(np.shape(x), c), (), c)

    @classmethod
    def custom(cls, fn: Callable, singular_points: Sequence[float] = ()) -> "Symbol":
        return cls("custom", fn, tuple(float(s) for s in singular_points))

    @classmethod
    def mollified_log(cls, width: float = 0.1) -> "Symbol":
        """Smooth bounded stand-in for log|x|: 0.5*log(x^2 + width^2)."""
        w2 = float(width) ** 2
        return cls("custom", lambda x: 0.5 * np.log(np.asarray(x) ** 2 + w2))

    def __call__(self, x):
        return evaluate_pointwise(self.evaluator, np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Hilbert transform


def _jumps(f: SampledFunction):
    v = np.asarray(f.values)
    d = np.diff(np.concatenate([[0], v, [0]]).astype(v.dtype))
    nz = np.flatnonzero(d != 0)
    return f.grid.edges[nz], d[nz]


def _safe_points(x: np.ndarray, out: Grid, edges: np.ndarray) -> np.ndarray:
    """Move output points sitting exactly on a jump by 1e-12 of their cell width."""
    x = np.array(x, dtype=float)
    hit = np.isin(x, edges)
    if hit.any():
        w = out.widths
        x[hit] += 1e-12 * w[hit]
        log.debug("hilbert_transform: perturbed %d output points lying on jumps", int(hit.sum()))
    return x


def _log_distance(x: np.ndarray, edges: np.ndarray, chunk: int = 1 << 22):
    rows = max(1, chunk // max(1, edges.size))
    for s in range(0, x.size, rows):
        yield s, np.log(np.abs(x[s:s + rows, None] - edges[None, :]))


def hilbert_transform(f: SampledFunction, out: Grid | None = None) -> SampledFunction:
    """Exact principal-value Hilbert transform of piecewise-constant ``f``.

    Evaluated at the representative points of ``out`` (default: f's grid).
    """
    out = f.grid if out is None else out
    edges, d = _jumps(f)
    res = np.zeros(out.n, dtype=np.result_type(d, float))
    if edges.size == 0:
        return SampledFunction(out, res)
    x = _safe_points(out.points, out, edges)
    for s, L in _log_distance(x, edges):
        res[s:s + L.shape[0]] = L @ d
    return SampledFunction(out, res)


# ---------------------------------------------------------------------------
# commutator profile F(u) = int_0^u log(1/t)/(1-t) dt


def _plus_integrand(s):
    # s / (1 - e^{-s}), from the substitution t = e^s on (1, u)
    s = np.asarray(s, dtype=float)
    return np.where(s == 0, 1.0, s / np.where(s == 0, 1.0, -np.expm1(-s)))


def _minus_integrand(s):
    # s / (e^s - 1), from t = e^{-s} on (u, 1)
    s = np.asarray(s, dtype=float)
    return np.where(s == 0, 1.0, s / np.where(s == 0, 1.0, np.expm1(s)))


def _cumulative_gl(integrand, L: np.ndarray) -> np.ndarray:
    """int_0^L integrand for an array of L >= 0 with unit Gauss-Legendre panels."""
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        return L.copy()
    kmax = int(np.floor(L.max()))
    k = np.arange(kmax + 1, dtype=float)
    nodes = k[:, None] + 0.5 * (_GL_X[None, :] + 1.0)
    panel = 0.5 * (integrand(nodes) @ _GL_W)
    full = np.concatenate([[0.0], np.cumsum(panel)])
    base = np.floor(L)
    rem = L - base
    pts = base[:, None] + 0.5 * rem[:, None] * (_GL_X[None, :] + 1.0)
    part = 0.5 * rem * (integrand(pts) @ _GL_W)
    return full[base.astype(int)] + part


def _small_u_series(u):
    """F(u) = sum_k u^k (log(1/u)/k + 1/k^2) for 0 < u <= 1/2, no cancellation."""
    u = np.asarray(u, dtype=float)
    L = -np.log(u)
    acc = np.zeros_like(u)
    p = np.ones_like(u)
    for k in range(1, 64):
        p = p * u
        acc += p * (L / k + 1.0 / (k * k))
    return acc


def _li2_small(z):
    """Li2(z) for |z| < 1e-4 from its power series."""
    z = np.asarray(z, dtype=float)
    acc = np.zeros_like(z)
    p = np.ones_like(z)
    for k in range(1, 8):
        p = p * z
        acc += p / (k * k)
    return acc


class CommutatorProfile:
    """F(u) = int_0^u log(1/t)/(1-t) dt, for u > 0.

    For b = log|x| and f the indicator of (0, 1), the commutator [b, H]f at
    x > 0 equals F(1/x).  F is increasing with F(1) = pi^2/6 and
    F(u) = (log u)^2 / 2 + pi^2/3 + o(1) as u -> infinity.

    Calling the object evaluates arrays: 1/2 < u <= e^10 by unit-panel
    Gauss-Legendre quadrature in the variable s = |log u| (the integrand is
    analytic there), u > e^10 by the large-u expansion, whose constant term
    is checked against `quad` the first time it is needed, and u <= 1/2 by
    the term-by-term integrated geometric series (the quadrature route
    would lose relative accuracy to cancellation there).  `quad` is the
    scalar adaptive-quadrature route.
    """

    def __init__(self, tol: float = 1e-12):
        self.tol = tol
        self._f1 = adaptive_integrate(lambda t: np.log(1 / t) / (1 - t), (0.0, 1.0), tol,
                                      singular_endpoints=(0.0, 1.0))
        self._checked = False

    @property
    def at_one(self) -> float:
        return self._f1

    def quad(self, u: float) -> float:
        """Adaptive quadrature with the split at t = 1."""
        u = float(u)
        if not u > 0:
            raise ValueError("u must be positive")
        g = lambda t: np.log(1 / t) / (1 - t)
        if u == 1:
            return self._f1
        if u < 1:
            return adaptive_integrate(g, (0.0, u), self.tol, singular_endpoints=(0.0,))
        return self._f1 + adaptive_integrate(g, (1.0, u), self.tol, singular_endpoints=(1.0,))

    @staticmethod
    def asymptotic(u):
        """pi^2/3 + log(u-1)^2/2 + Li2(-1/(u-1)); accurate for u > e^10."""
        u = np.asarray(u, dtype=float)
        lv = np.log(u) + np.log1p(-1.0 / u)
        return 2 * ZETA2 + 0.5 * lv ** 2 + _li2_small(-1.0 / (u - 1.0))

    def _check_asymptotic(self):
        u0 = math.exp(ASYMPTOTIC_LOG_U)
        q = self.quad(u0)
        a = float(self.asymptotic(u0))
        if abs(q - a) > 1e-9 * abs(q):
            raise RuntimeError(f"large-u expansion disagrees with quadrature at u=e^10: {a} vs {q}")
        self._checked = True

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(~(u > 0)):
            raise ValueError("u must be positive")
        out = np.empty(u.shape)
        lu = np.log(u)
        big = lu > ASYMPTOTIC_LOG_U
        above = (lu > 0) & ~big
        tiny = u <= 0.5
        below = (lu <= 0) & ~tiny
        if big.any():
            if not self._checked:
                self._check_asymptotic()
            out[big] = self.asymptotic(u[big])
        if above.any():
            out[above] = self._f1 + _cumulative_gl(_plus_integrand, lu[above])
        if below.any():
            out[below] = self._f1 - _cumulative_gl(_minus_integrand, -lu[below])
        if tiny.any():
            out[tiny] = _small_u_series(u[tiny])
        return out if out.ndim else float(out)


_PROFILE: CommutatorProfile | None = None


def _profile() -> CommutatorProfile:
    global _PROFILE
    if _PROFILE is None:
        _PROFILE = CommutatorProfile()
    return _PROFILE


def commutator_profile(u):
    """F(u) = int_0^u log(1/t)/(1-t) dt (arrays accepted)."""
    return _profile()(u)


# ---------------------------------------------------------------------------
# commutators


def _is_unit_indicator(f: SampledFunction) -> bool:
    v = np.asarray(f.values)
    nz = np.flatnonzero(v != 0)
    if nz.size == 0 or not np.all(v[nz] == 1):
        return False
    if not np.all(np.diff(nz) == 1):
        return False
    e = f.grid.edges
    return e[nz[0]] == 0.0 and e[nz[-1] + 1] == 1.0


def _support_runs(f: SampledFunction):
    v = np.asarray(f.values)
    nz = v != 0
    if not nz.any():
        return []
    d = np.diff(np.concatenate([[0], nz.astype(int), [0]]))
    starts = np.flatnonzero(d == 1)
    stops = np.flatnonzero(d == -1)
    return list(zip(starts, stops))


def commutator_direct(f: SampledFunction, b: Symbol, out: Grid | None = None,
                      tol: float = 1e-10) -> SampledFunction:
    """[b, H] f(x) = int (b(x) - b(y)) / (x - y) f(y) dy by quadrature.

    The y = x singularity is removable for smooth b.  For b = log|x| and
    f = indicator of (0, 1) the points x > 0 go through `commutator_profile`.
    """
    out = f.grid if out is None else out
    x = np.asarray(out.points, dtype=float)
    if b.kind == "constant":
        return SampledFunction(out, np.zeros(out.n))

    runs = _support_runs(f)
    edges = f.grid.edges
    for s0, s1 in runs:
        lo, hi = edges[s0], edges[s1]
        for p in b.singular_points:
            if lo < p < hi:
                raise SingularSymbolError(f"symbol is singular at x={p!r}, inside the support of f")
    bx = b(x)
    if not np.all(np.isfinite(bx)):
        bad = x[np.flatnonzero(~np.isfinite(bx))[0]]
        raise SingularSymbolError(f"symbol is singular at the output point x={bad!r}")

    res = np.empty(out.n)
    todo = np.ones(out.n, dtype=bool)
    if b.kind == "log-abs" and _is_unit_indicator(f):
        pos = x > 0
        res[pos] = commutator_profile(1.0 / x[pos])
        todo &= ~pos

    vals = np.asarray(f.values, dtype=float)
    for i in np.flatnonzero(todo):
        xi, bxi = float(x[i]), float(bx[i])

        def integrand(y, xi=xi, bxi=bxi):
            k = np.clip(np.searchsorted(edges, y, side="right") - 1, 0, vals.size - 1)
            return (bxi - b(y)) / (xi - y) * vals[k]

        total = 0.0
        for s0, s1 in runs:
            lo, hi = float(edges[s0]), float(edges[s1])
            sing = [p for p in b.singular_points if p in (lo, hi)]
            bps = list(edges[s0 + 1:s1]) + ([xi] if lo < xi < hi else [])
            total += adaptive_integrate(integrand, (lo, hi), tol, singular_endpoints=sing, breakpoints=bps)
        res[i] = total
    return SampledFunction(out, res)


@dataclass(frozen=True)
class ConjugationResult:
    commutator: SampledFunction
    imag_residual: float
    eps: float
    m: int


def conjugation_commutator(f: SampledFunction, b: Symbol, eps: float = 0.1, m: int = 32,
                           out: Grid | None = None) -> ConjugationResult:
    """[b, H] f as the contour average of z -> e^{zb} H(f e^{-zb}) / z^2.

    Trapezoidal rule on |z| = eps with nodes at angles 2*pi*(k + 1/4)/m.
    The quarter offset makes the leading aliasing error purely imaginary, so
    ``imag_residual`` (max |Im| of the average) measures the rule's error
    and shrinks as m grows.
    """
    out = f.grid if out is None else out
    if not eps > 0:
        raise ValueError("eps must be positive")
    if int(m) != m or m < 8:
        raise ValueError("need at least 8 contour points")
    m = int(m)
    fv = np.asarray(f.values, dtype=float)
    supp = fv != 0
    bf = np.zeros(f.grid.n)
    bf[supp] = b(f.points[supp])
    bx = b(out.points)
    reach = eps * max(np.max(np.abs(bf)), np.max(np.abs(bx)))
    if not np.isfinite(reach) or reach > 700:
        raise OverflowError(f"e^(eps*b) overflows (eps*|b| up to {reach:.3g}); use a smaller eps")

    e = f.grid.edges
    x = _safe_points(out.points, out, e)
    Ls = list(_log_distance(x, e))
    acc = np.zeros(out.n, dtype=complex)
    for k in range(m):
        z = eps * np.exp(2j * np.pi * (k + 0.25) / m)
        g = fv * np.exp(-z * bf)
        d = np.diff(np.concatenate([[0], g, [0]]))
        Hg = np.empty(out.n, dtype=complex)
        for s, L in Ls:
            Hg[s:s + L.shape[0]] = L @ d
        acc += np.exp(z * bx) * Hg / z
    acc /= m
    return ConjugationResult(SampledFunction(out, acc.real), float(np.max(np.abs(acc.imag))), eps, m)
