import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import spence

from conftest import random_function, unit_indicator
from czlab.experiments import conjugation_fixture
from czlab.grid import Grid, Interval, SampledFunction
from czlab.quadrature import adaptive_integrate
from czlab.singular import (CommutatorProfile, SingularSymbolError, Symbol, commutator_direct, commutator_profile,
                            conjugation_commutator, hilbert_transform)


def _F_oracle(u):
    # int_0^u log(1/t)/(1-t) dt = pi^2/6 - Li2(1-u), and scipy's spence(z) = Li2(1-z)
    return math.pi ** 2 / 6 - spence(u)


# --- Hilbert transform -------------------------------------------------------

def test_hilbert_of_indicator_at_two():
    g = Grid.uniform(Interval(0.0, 1.0), 4)
    out = Grid.from_edges([1.5, 2.5])
    val = hilbert_transform(SampledFunction(g, np.ones(4)), out).values[0]
    assert val == pytest.approx(math.log(2), rel=1e-14)
    assert val == pytest.approx(integrate.quad(lambda y: 1 / (2 - y), 0, 1)[0], rel=1e-12)


def test_hilbert_closed_form_outside_support():
    g = Grid.uniform(Interval(-3.0, 4.0), 700)
    f = unit_indicator(g)
    H = hilbert_transform(f).values
    x = g.points
    outside = (x < 0) | (x > 1)
    np.testing.assert_allclose(H[outside], np.log(np.abs(x[outside] / (x[outside] - 1))), rtol=1e-11, atol=1e-13)
    for xi in x[outside][::97]:
        ref = adaptive_integrate(lambda y, xi=xi: 1 / (xi - y), (0.0, 1.0), 1e-12)
        assert H[np.flatnonzero(x == xi)[0]] == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_hilbert_zero_and_linearity(rng):
    f = random_function(rng, 60)
    g = SampledFunction(f.grid, random_function(rng, 60).values)
    assert np.all(hilbert_transform(f.with_values(np.zeros(60))).values == 0)
    lhs = hilbert_transform(f.with_values(2.5 * f.values + g.values)).values
    rhs = 2.5 * hilbert_transform(f).values + hilbert_transform(g).values
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-10)


def test_hilbert_point_on_jump_is_perturbed():
    g = Grid.uniform(Interval(0.0, 1.0), 2)
    f = SampledFunction(g, [1.0, 0.0])
    out = Grid.from_edges([0.0, 1.0])    # representative point 0.5 is the jump
    val = hilbert_transform(f, out).values[0]
    assert np.isfinite(val)
    # log|x/(x-1/2)| at x = 1/2 + 1e-12
    assert val == pytest.approx(math.log(0.5 / 1e-12), rel=1e-3)


def test_hilbert_inside_cell_principal_value():
    g = Grid.uniform(Interval(0.0, 1.0), 1)
    out = Grid.from_edges([0.0, 0.5, 1.0])
    val = hilbert_transform(SampledFunction(g, [1.0]), out).values
    np.testing.assert_allclose(val, [math.log(0.25 / 0.75), math.log(0.75 / 0.25)], rtol=1e-14)


# --- commutator profile -------------------------------------------------------

def test_profile_at_one():
    assert commutator_profile(1.0) == pytest.approx(math.pi ** 2 / 6, abs=1e-12)
    assert CommutatorProfile().at_one == pytest.approx(math.pi ** 2 / 6, abs=1e-12)


@pytest.mark.parametrize("u", [1e-12, 1e-3, 0.2, 0.5, 0.7, 1.3, 2.0, 17.0, 1e3, math.exp(9.9)])
def test_profile_matches_dilogarithm(u):
    assert commutator_profile(u) == pytest.approx(_F_oracle(u), rel=1e-12)


@pytest.mark.parametrize("u", [0.3, 0.9, 3.0, 250.0])
def test_profile_array_and_quad_routes_agree(u):
    prof = CommutatorProfile()
    assert prof(np.array([u]))[0] == pytest.approx(prof.quad(u), rel=1e-11)


def test_profile_asymptotic_regime():
    u = np.exp(np.array([10.5, 20.0, 50.0, 300.0]))
    F = commutator_profile(u)
    L = np.log(u)
    np.testing.assert_allclose(F, [_F_oracle(v) for v in u], rtol=1e-12)
    # the neglected terms are of order log(u)/u
    assert np.all(np.abs(F - 0.5 * L ** 2 - math.pi ** 2 / 3) <= 2 * L / u + 1e-15 * F)
    assert abs(F[1] / L[1] ** 2 - 0.5) < 0.01
    # continuity across the switch to the expansion
    e = math.exp(10.0)
    jump = commutator_profile(e * (1 + 1e-9)) - commutator_profile(e * (1 - 1e-9))
    slope = 10.0 / (1 - 1 / e)    # F'(u) u = log(u) / (1 - 1/u)
    assert jump == pytest.approx(2e-9 * slope, rel=1e-3)


def test_profile_strictly_increasing():
    u = np.geomspace(1e-8, 1e12, 4000)
    F = commutator_profile(u)
    assert np.all(np.diff(F) > 0)
    assert commutator_profile(2.0) > commutator_profile(1.0)
    with pytest.raises(ValueError):
        commutator_profile(np.array([1.0, 0.0]))


# --- direct commutator ---------------------------------------------------------

def test_commutator_with_constant_symbol_vanishes(rng):
    f = random_function(rng, 30)
    assert np.all(commutator_direct(f, Symbol.constant(3.0)).values == 0)


def test_commutator_log_indicator_on_unit_interval():
    g = Grid.log_uniform(Interval(0.0, 1.0), 2000)
    f = SampledFunction(g, np.ones(g.n))
    out = Grid.from_edges(np.linspace(0.05, 3.0, 60))
    got = commutator_direct(f, Symbol.log_abs(), out).values
    np.testing.assert_allclose(got, _F_oracle(1 / out.points), rtol=1e-11)


def test_commutator_generic_path_matches_profile():
    # 2*indicator is not routed through the profile, so this exercises the quadrature path
    g = Grid.uniform(Interval(-1.0, 2.0), 3)
    f = SampledFunction(g, [0.0, 2.0, 0.0])
    out = Grid.from_edges([0.2, 0.3, 0.6, 0.9, 1.5, 2.0])
    got = commutator_direct(f, Symbol.log_abs(), out, tol=1e-12).values
    np.testing.assert_allclose(got, 2 * _F_oracle(1 / out.points), rtol=1e-9)


def test_commutator_negative_side_against_scipy():
    g = Grid.uniform(Interval(-1.0, 2.0), 3)
    f = SampledFunction(g, [0.0, 1.0, 0.0])
    out = Grid.from_edges([-2.0, -1.0, -0.5, -0.1])
    got = commutator_direct(f, Symbol.log_abs(), out).values
    for x, v in zip(out.points, got):
        ref = integrate.quad(lambda y: (math.log(abs(x)) - math.log(y)) / (x - y), 0, 1, epsabs=1e-13)[0]
        assert v == pytest.approx(ref, rel=1e-9)


def test_commutator_tail_inequality():
    g = Grid.log_uniform(Interval(0.0, 1.0), 1 << 12)
    f = SampledFunction(g, np.ones(g.n))
    out = Grid.from_edges(np.geomspace(1e-6, 0.5, 200))
    got = commutator_direct(f, Symbol.log_abs(), out).values
    x = out.points
    # the tail int_1^{1/x} of the same integrand is F(1/x) - F(1)
    assert np.all(got > commutator_profile(1 / x) - math.pi ** 2 / 6)


def test_commutator_singular_symbol_errors():
    g = Grid.uniform(Interval(-1.0, 1.0), 4)
    f = SampledFunction(g, np.ones(4))
    with pytest.raises(SingularSymbolError, match="x=0.0"):
        commutator_direct(f, Symbol.log_abs())
    h = SampledFunction(g, [0.0, 0.0, 1.0, 1.0])
    with pytest.raises(SingularSymbolError, match="output point"):
        commutator_direct(h, Symbol.log_abs(), Grid.from_edges([-0.5, 0.5]))


def test_commutator_smooth_symbol_linear_case():
    # b(x) = x gives [b, H] f = int f exactly
    g = Grid.uniform(Interval(0.0, 1.0), 5)
    f = SampledFunction(g, [1.0, 3.0, 0.0, 2.0, 1.0])
    out = Grid.from_edges([-1.0, 0.3, 0.55, 2.0])
    got = commutator_direct(f, Symbol.custom(lambda x: x), out).values
    np.testing.assert_allclose(got, np.dot(f.values, g.widths), rtol=1e-10)


# --- conjugation ----------------------------------------------------------------

def test_conjugation_constant_symbol_vanishes():
    f, _ = conjugation_fixture(128)
    res = conjugation_commutator(f, Symbol.constant(2.0), eps=0.1, m=16)
    assert np.max(np.abs(res.commutator.values)) < 1e-12


def test_conjugation_matches_direct_within_five_percent():
    f, b = conjugation_fixture(256)
    direct = commutator_direct(f, b).values
    res = conjugation_commutator(f, b, eps=0.1, m=32)
    w = f.widths
    dist = math.sqrt(np.dot(w, (res.commutator.values - direct) ** 2) / np.dot(w, direct ** 2))
    assert dist < 0.05
    assert res.m == 32 and res.eps == 0.1


def test_conjugation_imaginary_diagnostic_shrinks():
    f, b = conjugation_fixture(256)
    r8 = conjugation_commutator(f, b, eps=0.1, m=8).imag_residual
    r16 = conjugation_commutator(f, b, eps=0.1, m=16).imag_residual
    assert r16 <= r8 / 2


def test_conjugation_rejects_bad_parameters():
    g = Grid.uniform(Interval(0.0, 1.0), 8)
    f = SampledFunction(g, np.ones(8))
    with pytest.raises(OverflowError, match="smaller eps"):
        conjugation_commutator(f, Symbol.custom(lambda x: 1e4 * np.ones_like(x)), eps=0.1)
    with pytest.raises(ValueError):
        conjugation_commutator(f, Symbol.constant(1.0), m=4)
    with pytest.raises(ValueError):
        conjugation_commutator(f, Symbol.constant(1.0), eps=0.0)
