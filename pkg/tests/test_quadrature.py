import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from czlab.quadrature import QuadratureError, adaptive_integrate


def _dilog_integrand(t):
    return np.log(1 / t) / (1 - t)


def test_basel_integral_with_declared_singularities():
    val = adaptive_integrate(_dilog_integrand, (0.0, 1.0), 1e-12, singular_endpoints=(0.0, 1.0))
    assert abs(val - math.pi ** 2 / 6) < 1e-12


def test_basel_integral_without_hints_still_converges():
    val = adaptive_integrate(_dilog_integrand, (0.0, 1.0), 1e-10)
    assert abs(val - math.pi ** 2 / 6) < 1e-10


def test_log_moments_match_factorials():
    for k in (1, 3, 8):
        val = adaptive_integrate(lambda t, k=k: np.log(1 / t) ** k, (0.0, 1.0), 1e-10, singular_endpoints=(0.0,))
        assert val == pytest.approx(math.factorial(k), rel=1e-12)


def test_unhinted_strong_singularity_reports_failure():
    with pytest.raises(QuadratureError) as exc:
        adaptive_integrate(lambda t: np.log(1 / t) ** 8, (0.0, 1.0), 1e-10, max_depth=20)
    assert exc.value.error > 0


def test_breakpoint_for_kink():
    val = adaptive_integrate(lambda x: np.abs(x - 0.3), (0.0, 1.0), 1e-13, breakpoints=(0.3,))
    assert val == pytest.approx(0.5 * (0.3 ** 2 + 0.7 ** 2), abs=1e-13)


def test_full_output_and_removable_singularity():
    val, err = adaptive_integrate(lambda x: np.sin(x) / x, (-1.0, 1.0), 1e-12, breakpoints=(0.0,),
                                  full_output=True)
    ref = 2 * integrate.quad(lambda x: math.sin(x) / x, 0, 1, epsabs=1e-14)[0]
    assert abs(val - ref) < 1e-12 and err <= 1e-12


def test_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        adaptive_integrate(np.cos, (0.0, 1.0), 0.0)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(-2, 0), st.floats(0.1, 3))
def test_agrees_with_scipy_on_smooth_integrands(coef, lo, width):
    g = lambda x: np.exp(np.polyval(coef, x) / 4)
    hi = lo + width
    ref = integrate.quad(lambda x: float(g(x)), lo, hi, epsabs=1e-13, epsrel=1e-13)[0]
    assert adaptive_integrate(g, (lo, hi), 1e-11) == pytest.approx(ref, rel=1e-10, abs=1e-11)
