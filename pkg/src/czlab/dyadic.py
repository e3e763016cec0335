"""
Dyadic cubes over a root interval, sparse and Carleson families, and the
sparse averaging operators built on them.

Cubes are half-open ``[lo, hi)``.  Witness sets E(Q) are finite unions of
intervals whose endpoints are exact fractions of the root, so measures,
disjointness and packing sums are all computed in exact rational arithmetic.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .grid import Grid, GridError, Interval, SampledFunction
from .maximal import OrliczGauge, luxemburg_norm

MAX_DEPTH = 30

Span = tuple[Fraction, Fraction]


class SparseFamilyError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class DyadicCube:
    """Piece ``index`` of the root split ``generation`` times."""

    generation: int
    index: int
    root: Interval

    def __post_init__(self):
        g, k = int(self.generation), int(self.index)
        if g != self.generation or k != self.index:
            raise ValueError("generation and index must be integers")
        if not 0 <= g <= MAX_DEPTH:
            raise ValueError(f"generation must lie in [0, {MAX_DEPTH}], got {g}")
        if not 0 <= k < (1 << g):
            raise ValueError(f"index {k} out of range for generation {g}")
        object.__setattr__(self, "generation", g)
        object.__setattr__(self, "index", k)

    @property
    def span(self) -> Span:
        """Position inside the root as exact fractions of its length."""
        d = 1 << self.generation
        return Fraction(self.index, d), Fraction(self.index + 1, d)

    @property
    def relative_length(self) -> Fraction:
        return Fraction(1, 1 << self.generation)

    @property
    def interval(self) -> Interval:
        a, b = self.span
        L = self.root.length
        return Interval(self.root.lo + float(a) * L, self.root.lo + float(b) * L)

    @property
    def length(self) -> float:
        return self.root.length / (1 << self.generation)

    def children(self) -> tuple["DyadicCube", "DyadicCube"]:
        g, k = self.generation + 1, 2 * self.index
        return DyadicCube(g, k, self.root), DyadicCube(g, k + 1, self.root)

    def parent(self) -> "DyadicCube | None":
        if self.generation == 0:
            return None
        return DyadicCube(self.generation - 1, self.index >> 1, self.root)

    def ancestors(self) -> Iterable["DyadicCube"]:
        """Self, then parent, ..., up to the root cube."""
        q: DyadicCube | None = self
        while q is not None:
            yield q
            q = q.parent()

    def contains_cube(self, other: "DyadicCube") -> bool:
        """``other`` is a subset of ``self`` (same root assumed)."""
        d = other.generation - self.generation
        return d >= 0 and (other.index >> d) == self.index

    def contains(self, x):
        return self.interval.contains(x)


def root_cube(root: Interval) -> DyadicCube:
    return DyadicCube(0, 0, root)


def build_lattice(root: Interval, depth: int) -> list[DyadicCube]:
    """All cubes of generations 0..depth, ordered by (generation, index)."""
    if int(depth) != depth or depth < 0:
        raise ValueError(f"depth must be a non-negative integer, got {depth}")
    if depth > MAX_DEPTH:
        raise ValueError(f"depth {depth} exceeds the limit {MAX_DEPTH}")
    return [DyadicCube(g, k, root) for g in range(depth + 1) for k in range(1 << g)]


def lattice_properties(cubes: Iterable[DyadicCube], depth: int) -> dict[str, bool]:
    """Exhaustive check of the four structural properties of a finite lattice.

    ``tiling``: each generation tiles the root with pieces of length 2^-k.
    ``parent_children``: every cube has two children (below ``depth``) and a
    unique parent in the set (unless it is the root).
    ``nested_or_disjoint``: any two cubes are nested or disjoint.
    ``hereditary``: the lattice of any member, to the remaining depth, is a
    subset of the set.
    """
    cubes = list(cubes)
    cs = set(cubes)
    by_gen: dict[int, list[DyadicCube]] = {}
    for q in cubes:
        by_gen.setdefault(q.generation, []).append(q)

    tiling = sorted(by_gen) == list(range(depth + 1))
    for g in range(depth + 1):
        spans = sorted(q.span for q in by_gen.get(g, []))
        tiling &= all(b - a == Fraction(1, 1 << g) for a, b in spans)
        tiling &= bool(spans) and spans[0][0] == 0 and spans[-1][1] == 1
        tiling &= all(s[1] == t[0] for s, t in zip(spans, spans[1:]))

    parent_children = True
    for q in cubes:
        if q.generation < depth:
            kids = [c for c in cubes if c.generation == q.generation + 1 and q.contains_cube(c)]
            parent_children &= len(kids) == 2
        if q.generation > 0:
            parents = [p for p in cubes if p.generation == q.generation - 1 and p.contains_cube(q)]
            parent_children &= len(parents) == 1

    nested = True
    for i, q in enumerate(cubes):
        a, b = q.span
        for r in cubes[i + 1:]:
            c, d = r.span
            disjoint = b <= c or d <= a
            nested &= disjoint or q.contains_cube(r) or r.contains_cube(q)

    hereditary = True
    for q in cubes:
        sub = [DyadicCube(q.generation + j, (q.index << j) + k, q.root)
               for j in range(depth - q.generation + 1) for k in range(1 << j)]
        hereditary &= all(s in cs for s in sub)

    return {"tiling": bool(tiling), "parent_children": bool(parent_children),
            "nested_or_disjoint": bool(nested), "hereditary": bool(hereditary)}


# ---------------------------------------------------------------------------
# span arithmetic


def _normalize(spans: Iterable[Span]) -> tuple[Span, ...]:
    out: list[list[Fraction]] = []
    for a, b in sorted(spans):
        if b <= a:
            continue
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


def _measure(spans: Iterable[Span]) -> Fraction:
    return sum((b - a for a, b in spans), Fraction(0))


def _subtract(base: Span, holes: Iterable[Span]) -> tuple[Span, ...]:
    lo, hi = base
    out = []
    cur = lo
    for a, b in _normalize(holes):
        if a > cur:
            out.append((cur, min(a, hi)))
        cur = max(cur, b)
        if cur >= hi:
            break
    if cur < hi:
        out.append((cur, hi))
    return tuple(s for s in out if s[1] > s[0])


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True, eq=False)
class SparseFamily:
    """A finite set of cubes from one lattice, optionally with witnesses.

    ``witnesses`` maps each cube to its set E(Q) as spans relative to the
    root.  When witnesses are given they are verified on construction:
    E(Q) inside Q, the sets pairwise disjoint, and |E(Q)| >= eta |Q|.
    """

    root: Interval
    cubes: frozenset
    witnesses: Mapping[DyadicCube, tuple[Span, ...]] | None = None
    eta: float | None = None

    def __post_init__(self):
        cubes = frozenset(self.cubes)
        for q in cubes:
            if q.root != self.root:
                raise SparseFamilyError(f"cube {q.generation},{q.index} has a different root")
        object.__setattr__(self, "cubes", cubes)
        if self.witnesses is None:
            if self.eta is not None:
                raise SparseFamilyError("eta requires witnesses")
            return
        if self.eta is None or not 0 <= self.eta <= 1:
            raise SparseFamilyError(f"eta must lie in [0, 1], got {self.eta}")
        w = {q: _normalize(s) for q, s in self.witnesses.items()}
        if set(w) != set(cubes):
            raise SparseFamilyError("witnesses must be given for exactly the member cubes")
        object.__setattr__(self, "witnesses", w)
        self._verify()

    def _verify(self):
        eta = Fraction(self.eta)
        pieces = []
        for q in self.sorted():
            a, b = q.span
            for s in self.witnesses[q]:
                if s[0] < a or s[1] > b:
                    raise SparseFamilyError(f"E(Q) leaves Q for cube {q.generation},{q.index}")
                pieces.append((s[0], s[1], q))
            if _measure(self.witnesses[q]) < eta * q.relative_length:
                raise SparseFamilyError(
                    f"|E(Q)| < eta|Q| for cube {q.generation},{q.index} (eta={self.eta})")
        pieces.sort(key=lambda t: (t[0], t[1]))
        for (a0, b0, q0), (a1, b1, q1) in zip(pieces, pieces[1:]):
            if a1 < b0:
                raise SparseFamilyError(
                    f"witnesses of cubes {q0.generation},{q0.index} and {q1.generation},{q1.index} overlap")

    @classmethod
    def of(cls, root: Interval, pairs: Iterable[tuple[int, int]]) -> "SparseFamily":
        """Family from (generation, index) pairs."""
        return cls(root, frozenset(DyadicCube(g, k, root) for g, k in pairs))

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.sorted())

    def sorted(self) -> list[DyadicCube]:
        return sorted(self.cubes)

    @property
    def max_generation(self) -> int:
        return max((q.generation for q in self.cubes), default=0)

    def with_cubes(self, cubes: Iterable[DyadicCube]) -> "SparseFamily":
        return SparseFamily(self.root, frozenset(cubes))

    def add(self, cube: DyadicCube) -> "SparseFamily":
        return self.with_cubes(self.cubes | {cube})

    # serialization ---------------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["root_lo", "root_hi"])
        wr.writerow([repr(self.root.lo), repr(self.root.hi)])
        wr.writerow(["generation", "index", "witness"])
        for q in self.sorted():
            wit = ""
            if self.witnesses is not None:
                wit = " ".join(f"{a}:{b}" for a, b in self.witnesses[q])
            wr.writerow([q.generation, q.index, wit])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SparseFamily":
        """Inverse of `to_csv`; eta is restored as the achieved minimum ratio."""
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 3 or rows[0] != ["root_lo", "root_hi"] or rows[2][:2] != ["generation", "index"]:
            raise SparseFamilyError("expected headers 'root_lo,root_hi' and 'generation,index[,witness]'")
        root = Interval(float(rows[1][0]), float(rows[1][1]))
        cubes = []
        wit: dict[DyadicCube, tuple[Span, ...]] = {}
        has_w = False
        for row in rows[3:]:
            if not row:
                continue
            q = DyadicCube(int(row[0]), int(row[1]), root)
            cubes.append(q)
            if len(row) > 2 and row[2].strip():
                has_w = True
                wit[q] = tuple((Fraction(a), Fraction(b))
                               for a, b in (tok.split(":") for tok in row[2].split()))
            else:
                wit[q] = ()
        if not has_w:
            return cls(root, frozenset(cubes))
        eta = _achieved_eta(cubes, wit)
        return cls(root, frozenset(cubes), wit, float(eta))


def _achieved_eta(cubes, wit) -> Fraction:
    if not cubes:
        return Fraction(1)
    return min(_measure(wit[q]) / q.relative_length for q in cubes)


def carleson_constant(family: SparseFamily) -> float:
    """max over Q in the family and its ancestors of sum_{P in S, P in Q} |P| / |Q|.

    Computed exactly in units of the finest member generation.
    """
    if not family.cubes:
        raise SparseFamilyError("carleson_constant needs a nonempty family")
    R = family.max_generation
    packing: dict[DyadicCube, int] = {}
    for p in family.cubes:
        size = 1 << (R - p.generation)
        for q in p.ancestors():
            packing[q] = packing.get(q, 0) + size
    best = max(Fraction(s, 1 << (R - q.generation)) for q, s in packing.items())
    return float(best)


def _nearest_member_ancestor(q: DyadicCube, members: frozenset) -> DyadicCube | None:
    p = q.parent()
    while p is not None:
        if p in members:
            return p
        p = p.parent()
    return None


def greedy_witnesses(family: SparseFamily) -> SparseFamily:
    """E(Q) = Q minus the maximal members strictly inside Q.

    Returns the family with these witnesses and the achieved eta (0 when some
    E(Q) is empty, i.e. the greedy rule does not certify sparseness).
    """
    inner: dict[DyadicCube, list[Span]] = {q: [] for q in family.cubes}
    for p in family.cubes:
        a = _nearest_member_ancestor(p, family.cubes)
        if a is not None:
            inner[a].append(p.span)
    wit = {q: _subtract(q.span, holes) for q, holes in inner.items()}
    eta = _achieved_eta(list(family.cubes), wit)
    return SparseFamily(family.root, family.cubes, wit, float(eta))


# ---------------------------------------------------------------------------
# operators


def _cell_range(grid: Grid, cube: DyadicCube) -> tuple[int, int]:
    """Cells whose representative point lies in the half-open cube."""
    I = cube.interval
    pts = grid.points
    return int(np.searchsorted(pts, I.lo, side="left")), int(np.searchsorted(pts, I.hi, side="left"))


def _accumulate(grid: Grid, terms: Iterable[tuple[DyadicCube, float]]) -> np.ndarray:
    # direct slice sums rather than a difference array: no cancellation, so
    # outputs are exactly zero off the family and monotone in added terms
    out = np.zeros(grid.n)
    for q, v in terms:
        i0, i1 = _cell_range(grid, q)
        out[i0:i1] += v
    return out


def _check_within(family: SparseFamily, f: SampledFunction):
    d = f.domain
    r = family.root
    if family.cubes and (r.lo < d.lo or r.hi > d.hi):
        tops = [q for q in family.cubes if q.interval.lo < d.lo or q.interval.hi > d.hi]
        if tops:
            raise GridError(f"cube {tops[0].generation},{tops[0].index} is not inside the domain {d}")


def sparse_avg_operator(family: SparseFamily, f: SampledFunction,
                        gauge: OrliczGauge = OrliczGauge(0.0)) -> SampledFunction:
    """sum over Q in the family of ||f||_{Phi, Q} times the indicator of Q.

    ``alpha = 0`` gives the plain averages (A_S), ``alpha = 1`` the L log L
    averages (B_S).  Terms are added in (generation, index) order.
    """
    _check_within(family, f)
    terms = [(q, luxemburg_norm(f, q.interval, gauge)) for q in family.sorted()]
    return f.with_values(_accumulate(f.grid, terms))


def counting_function(family: SparseFamily, grid: Grid | None = None) -> SampledFunction:
    """N(x) = number of members containing x.

    Default grid: 2^g uniform cells on the root, g the finest generation.
    """
    if grid is None:
        grid = Grid.uniform(family.root, 1 << family.max_generation)
    vals = _accumulate(grid, ((q, 1.0) for q in family.sorted()))
    return SampledFunction(grid, np.rint(vals))


def iterated_sparse(fam_i: SparseFamily, fam_j: SparseFamily, f: SampledFunction) -> SampledFunction:
    """A_{S_i}(A_{S_j} f); the two families may have different roots."""
    return sparse_avg_operator(fam_i, sparse_avg_operator(fam_j, f))


def chain_family(root: Interval, depth: int) -> SparseFamily:
    """{[lo, lo + 2^-k |root|) : k = 0..depth}."""
    return SparseFamily.of(root, ((k, 0) for k in range(depth + 1)))


def random_family(rng: np.random.Generator, root: Interval = Interval(0.0, 1.0), depth: int = 8,
                  p_incl: float = 0.3, max_carleson: float = 4.0) -> SparseFamily:
    """Random family used by the property tests.

    Each cube of the depth-``depth`` lattice is kept with probability
    ``p_incl``.  Cubes that the greedy rule leaves with an empty witness are
    dropped, then random members below the worst packing cube are dropped
    until the Carleson constant is at most ``max_carleson``.
    """
    if depth > 8:
        raise ValueError("random families are limited to depth 8")
    lattice = build_lattice(root, depth)
    keep = rng.random(len(lattice)) < p_incl
    cubes = {q for q, k in zip(lattice, keep) if k}
    if not cubes:
        cubes = {lattice[int(rng.integers(len(lattice)))]}
    fam = SparseFamily(root, frozenset(cubes))

    # removing a cube whose greedy witness is empty leaves every other witness unchanged
    g = greedy_witnesses(fam)
    fam = fam.with_cubes(q for q in fam.cubes if g.witnesses[q])

    while len(fam) > 1 and carleson_constant(fam) > max_carleson:
        worst = _worst_packing_cube(fam)
        inside = sorted(p for p in fam.cubes if worst.contains_cube(p))
        drop = inside[int(rng.integers(len(inside)))]
        fam = fam.with_cubes(fam.cubes - {drop})
    return fam


def _worst_packing_cube(family: SparseFamily) -> DyadicCube:
    R = family.max_generation
    packing: dict[DyadicCube, int] = {}
    for p in family.cubes:
        for q in p.ancestors():
            packing[q] = packing.get(q, 0) + (1 << (R - p.generation))
    return max(sorted(packing), key=lambda q: Fraction(packing[q], 1 << (R - q.generation)))
