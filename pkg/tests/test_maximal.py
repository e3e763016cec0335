import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from conftest import random_function, random_grid, unit_indicator
from czlab.grid import Grid, GridError, Interval, SampledFunction
from czlab.maximal import (OrliczGauge, hl_maximal, hl_maximal_bruteforce, iterated_maximal, luxemburg_norm,
                           maximal_power, orlicz_maximal, sharp_maximal, vv_maximal)


def _brute_sharp(f):
    v, w = np.asarray(f.values), f.widths
    n = v.size
    out = np.zeros(n)
    for a in range(n):
        for b in range(a + 1, n + 1):
            avg = np.dot(v[a:b], w[a:b]) / w[a:b].sum()
            osc = np.dot(np.abs(v[a:b] - avg), w[a:b]) / w[a:b].sum()
            out[a:b] = np.maximum(out[a:b], osc)
    return out


def _brute_luxemburg(v, w, alpha):
    total = w.sum()
    if not np.any(v > 0):
        return 0.0
    phi = lambda lam: np.dot(w, (v / lam) * np.log(math.e + v / lam) ** alpha) / total - 1
    return brentq(phi, 1e-12, 1e6 * v.max() + 1, xtol=1e-15, rtol=1e-14)


@given(st.integers(1, 60), st.integers(0, 2 ** 32 - 1))
def test_hull_sweep_and_bruteforce_agree(n, seed):
    rng = np.random.default_rng(seed)
    f = random_function(rng, n)
    brute = hl_maximal_bruteforce(f).values
    hull = hl_maximal(f).values
    np.testing.assert_array_equal(hull, hl_maximal(f, method="sweep").values)
    np.testing.assert_allclose(hull, brute, rtol=1e-12, atol=1e-300)


def test_maximal_of_indicator_closed_form():
    g = Grid.uniform(Interval(-4.0, 5.0), 900)
    M = hl_maximal(unit_indicator(g)).values
    x = g.points
    h = g.widths.max()
    # the optimal interval is (0, right edge) or (left edge, 1): within one cell of the closed form
    upper = np.where(x > 1, 1 / (x - h / 2), np.where(x < 0, 1 / (1 - x - h / 2), 1.0))
    lower = np.where(x > 1, 1 / (x + h / 2), np.where(x < 0, 1 / (1 - x + h / 2), 1.0))
    assert np.all(M <= upper + 1e-12) and np.all(M >= lower - 1e-12)


def test_zero_and_pointwise_domination(rng):
    f = random_function(rng, 80)
    assert np.all(hl_maximal(f.with_values(np.zeros(80))).values == 0)
    assert np.all(hl_maximal(f).values >= np.abs(f.values))
    assert np.all(hl_maximal(f.with_values(-f.values)).values == hl_maximal(f).values)


def test_homogeneity(rng):
    f = random_function(rng, 100)
    np.testing.assert_array_equal(hl_maximal(f.with_values(4.0 * f.values)).values, 4.0 * hl_maximal(f).values)
    np.testing.assert_allclose(hl_maximal(f.with_values(-2.7 * f.values)).values,
                               2.7 * hl_maximal(f).values, rtol=1e-14)


def test_power_maximal(rng):
    f = random_function(rng, 40)
    np.testing.assert_allclose(hl_maximal(f, r=2).values, hl_maximal_bruteforce(f, r=2).values, rtol=1e-12)
    np.testing.assert_allclose(maximal_power(f, 2.0).values, hl_maximal(f, r=2).values, rtol=1e-13)
    assert np.all(maximal_power(f, 0.5).values <= hl_maximal(f).values * (1 + 1e-12))
    with pytest.raises(ValueError):
        hl_maximal(f, r=0.5)
    with pytest.raises(ValueError):
        hl_maximal(f, method="fft")


def test_conjugated_indicator_lower_bound():
    a = 0.5
    beta = 1 - a
    g = Grid.uniform(Interval(0.0, 20.0), 4000)
    x = g.points
    # exact cell averages of y^-a on (0, 1), so the total mass is exactly 1/beta
    e = g.edges
    avg = (e[1:] ** beta - e[:-1] ** beta) / (beta * g.widths)
    f = SampledFunction(g, np.where(x < 1, avg, 0.0))
    M = hl_maximal(f).values
    right = e[1:]
    # the best cell-aligned interval for x > 1 is (0, right edge of x's cell)
    assert np.all(M[x > 1] >= (1 - 1e-12) / (beta * right[x > 1]))


def test_iterated_maximal(rng):
    f = random_function(rng, 30)
    np.testing.assert_array_equal(iterated_maximal(f, 1).values, hl_maximal(f).values)
    two = iterated_maximal(f, 2)
    np.testing.assert_allclose(two.values, hl_maximal_bruteforce(hl_maximal_bruteforce(f)).values, rtol=1e-12)
    assert np.all(two.values >= hl_maximal(f).values)
    with pytest.raises(ValueError):
        iterated_maximal(f, 0)


def test_second_iterate_of_indicator_has_log_tail():
    g = Grid.uniform(Interval(-1.0, 30.0), 3100)
    M2 = iterated_maximal(unit_indicator(g), 2).values
    x = g.points
    far = x >= math.e
    assert np.all(M2[far] >= np.log(x[far]) / x[far] * 0.99)


def test_luxemburg_basic_values():
    g = Grid.uniform(Interval(0.0, 1.0), 10)
    Q = Interval(0.0, 1.0)
    assert luxemburg_norm(SampledFunction(g, np.zeros(10)), Q) == 0.0
    ones = SampledFunction(g, np.ones(10))
    oracle = brentq(lambda lam: math.log(math.e + 1 / lam) / lam - 1, 0.5, 3.0, xtol=1e-15)
    assert luxemburg_norm(ones, Q) == pytest.approx(oracle, rel=1e-9)


def test_luxemburg_alpha_zero_is_average_with_partial_cells(rng):
    f = random_function(rng, 50, sparse=False)
    Q = Interval(-0.37, 1.21)
    e = f.grid.edges
    ov = np.clip(np.minimum(e[1:], Q.hi) - np.maximum(e[:-1], Q.lo), 0, None)
    avg = np.dot(ov, np.abs(f.values)) / Q.length
    assert luxemburg_norm(f, Q, OrliczGauge(0.0)) == pytest.approx(avg, rel=1e-14)
    with pytest.raises(GridError):
        luxemburg_norm(f, Interval(-3.0, 0.0))


@given(st.integers(1, 30), st.integers(0, 2 ** 32 - 1), st.floats(0.0, 3.0))
def test_luxemburg_matches_root_finder(n, seed, alpha):
    rng = np.random.default_rng(seed)
    f = random_function(rng, n, sparse=False)
    got = luxemburg_norm(f, f.domain, OrliczGauge(alpha))
    ref = _brute_luxemburg(np.abs(f.values), f.widths, alpha)
    assert got == pytest.approx(ref, rel=2e-10)


@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_luxemburg_homogeneous_and_monotone(seed, c):
    rng = np.random.default_rng(seed)
    f = random_function(rng, 25, sparse=False)
    Q = f.domain
    base = luxemburg_norm(f, Q)
    assert luxemburg_norm(f.with_values(c * f.values), Q) == pytest.approx(c * base, rel=1e-9)
    bigger = f.with_values(np.abs(f.values) + rng.random(25))
    assert luxemburg_norm(bigger, Q) >= base * (1 - 1e-10)


def test_gauge_properties():
    t = np.linspace(0, 10, 101)
    for a in (0.0, 0.5, 1.0, 2.0):
        phi = OrliczGauge(a)(t)
        assert phi[0] == 0.0
        assert np.all(np.diff(phi) > 0)
        assert np.all(np.diff(phi, 2) >= -1e-12)
    np.testing.assert_array_equal(OrliczGauge(0.0)(t), t)
    with pytest.raises(ValueError):
        OrliczGauge(-1.0)


def test_orlicz_maximal(rng):
    f = random_function(rng, 24)
    np.testing.assert_array_equal(orlicz_maximal(f, OrliczGauge(0.0)).values, hl_maximal(f).values)
    m1 = orlicz_maximal(f, OrliczGauge(1.0)).values
    m2 = orlicz_maximal(f, OrliczGauge(2.0)).values
    assert np.all(m1 >= hl_maximal(f).values * (1 - 1e-9))
    assert np.all(m2 >= m1 * (1 - 1e-9))
    ind = unit_indicator(Grid.uniform(Interval(-2.0, 3.0), 50))
    assert np.all(orlicz_maximal(ind).values >= hl_maximal(ind).values * (1 - 1e-9))


def test_orlicz_maximal_is_interval_sup_of_luxemburg(rng):
    f = random_function(rng, 12, sparse=False)
    e = f.grid.edges
    out = np.zeros(12)
    for a in range(12):
        for b in range(a + 1, 13):
            v = luxemburg_norm(f, Interval(e[a], e[b]))
            out[a:b] = np.maximum(out[a:b], v)
    np.testing.assert_allclose(orlicz_maximal(f).values, out, rtol=1e-9)


def test_sharp_maximal(rng):
    g = random_grid(rng, 40)
    const = SampledFunction(g, np.full(40, 3.0))
    assert np.all(sharp_maximal(const).values == 0)
    ind = unit_indicator(Grid.uniform(Interval(-2.0, 3.0), 60))
    assert np.all(sharp_maximal(ind).values <= 1 + 1e-12)
    f = random_function(rng, 40)
    np.testing.assert_allclose(sharp_maximal(f).values, _brute_sharp(f), rtol=1e-11, atol=1e-14)
    assert np.all(sharp_maximal(f).values <= 2 * hl_maximal(f).values + 1e-12)
    half = sharp_maximal(f, 0.5).values
    np.testing.assert_allclose(half, _brute_sharp(f.with_values(np.abs(f.values) ** 0.5)) ** 2, rtol=1e-10)
    with pytest.raises(ValueError):
        sharp_maximal(f, 1.5)


def test_vector_valued_maximal(rng):
    f = random_function(rng, 30)
    g = f.grid
    np.testing.assert_allclose(vv_maximal([f], 2.0).values, hl_maximal(f).values, rtol=1e-15)
    zero = f.with_values(np.zeros(30))
    np.testing.assert_allclose(vv_maximal([f, zero, zero], 3.0).values, hl_maximal(f).values, rtol=1e-15)
    labels = rng.integers(0, 5, 30)
    parts = [SampledFunction(g, (labels == k).astype(float)) for k in range(5)]
    # indicators of disjoint sets: the l^q norm of the sequence is at most 1 pointwise
    seq = np.stack([p.values for p in parts])
    assert np.all(np.sum(seq ** 2, axis=0) ** 0.5 <= 1)
    assert np.all(vv_maximal(parts, 2.0).values >= hl_maximal(parts[0]).values)
    with pytest.raises(GridError):
        vv_maximal([f, SampledFunction(Grid.uniform(Interval(0.0, 1.0), 30), np.ones(30))], 2.0)
    with pytest.raises(ValueError):
        vv_maximal([f], 1.0)
