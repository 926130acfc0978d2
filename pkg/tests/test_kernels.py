"""Kernel values and their log/smooth splitting."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helmbem import kernels, specfun

# frozen from mpmath at dps=30: (i/4) H0^(1)(2i) == (1/(2 pi)) K0(2)
CONNECTION_AT_2 = 0.01812677283596756


def _pts(r, angle=0.3):
    x = np.array([0.1, -0.2])
    y = x - r * np.array([np.cos(angle), np.sin(angle)])
    return x, y


def test_helmholtz_definition_at_unit_argument():
    x, y = _pts(1.0)
    v = kernels.phi_helmholtz(1.0, x, y)
    assert v.total == pytest.approx(0.25j * specfun.hankel1_0(1.0))


def test_helmholtz_log_coefficient_limit():
    x, y = _pts(1e-10)
    v = kernels.phi_helmholtz(3.0, x, y)
    assert v.log_coeff == pytest.approx(-1 / (2 * np.pi), rel=1e-8)


def test_helmholtz_smooth_part_continuous_at_small_r():
    k = 5.0
    v1 = kernels.phi_helmholtz(k, *_pts(1e-8)).smooth
    v2 = kernels.phi_helmholtz(k, *_pts(1e-6)).smooth
    assert abs(v1 - v2) < 1e-4 * abs(v2)


def test_modified_positive_and_decreasing():
    k = 5.0
    vals = [kernels.phi_modified(k, *_pts(r)).total for r in (0.1, 0.2, 0.4)]
    assert all(v > 0 for v in vals)
    assert vals[0] > vals[1] > vals[2]


def test_modified_log_coefficient_limit():
    v = kernels.phi_modified(4.0, *_pts(1e-10))
    assert v.log_coeff == pytest.approx(-1 / (2 * np.pi), rel=1e-8)


def test_modified_connection_formula():
    # (i/4) H0(i z) = (1/2pi) K0(z) at z = 2 (multiprecision-frozen value)
    v = kernels.phi_modified(2.0, *_pts(1.0))
    assert v.total == pytest.approx(CONNECTION_AT_2, rel=1e-12)


def test_laplace_zero_levels_and_value():
    assert kernels.phi_laplace(1.0, *_pts(1.0)).total == pytest.approx(0.0, abs=1e-15)
    assert kernels.phi_laplace(4.0, *_pts(4.0)).total == pytest.approx(0.0, abs=1e-15)
    v = kernels.phi_laplace(4.0, *_pts(1.0))
    assert v.total == pytest.approx(np.log(4.0) / (2 * np.pi), rel=1e-14)
    assert v.log_coeff == pytest.approx(-1 / (2 * np.pi), rel=1e-14)
    assert v.smooth == pytest.approx(np.log(4.0) / (2 * np.pi), rel=1e-12)


def test_normal_derivative_vanishes_perpendicular():
    x = np.array([0.0, 0.0])
    y = np.array([0.5, 0.0])
    n = np.array([0.0, 1.0])  # perpendicular to x - y
    assert kernels.phi_helmholtz_dny(2.0, x, y, n).total == 0.0
    assert kernels.phi_helmholtz_dnx(2.0, x, y, n).total == 0.0


def test_dny_dnx_swap_antisymmetry():
    x = np.array([0.2, 0.7])
    y = np.array([-0.4, 0.1])
    n = np.array([0.6, 0.8])
    a = kernels.phi_helmholtz_dny(3.0, x, y, n).total
    b = kernels.phi_helmholtz_dnx(3.0, y, x, n).total
    assert a == pytest.approx(b, rel=1e-14)


def test_double_layer_bounded_on_smooth_curve():
    # on the unit circle the double-layer kernel tends to a finite
    # curvature-driven limit as y -> x
    k = 5.0
    vals = []
    for sep in (1e-2, 1e-4, 1e-6):
        tx, ty = 0.4, 0.4 + sep
        x = np.array([np.cos(tx), np.sin(tx)])
        y = np.array([np.cos(ty), np.sin(ty)])
        n_y = y.copy()  # outward normal of the unit circle
        vals.append(kernels.phi_helmholtz_dny(k, x, y, n_y).total)
    assert all(np.isfinite(v) for v in vals)
    assert abs(vals[1] - vals[2]) < 1e-3 * (1 + abs(vals[2]))


def test_helmholtz_symmetric_under_swap():
    x = np.array([0.3, -0.1])
    y = np.array([-0.7, 0.4])
    assert (kernels.phi_helmholtz(7.0, x, y).total
            == kernels.phi_helmholtz(7.0, y, x).total)


@settings(max_examples=300, deadline=None)
@given(
    k=st.floats(min_value=1.0, max_value=100.0),
    logr=st.floats(min_value=np.log(1e-6), max_value=np.log(3.0)),
    angle=st.floats(min_value=0.0, max_value=2 * np.pi),
)
def test_split_consistency_property(k, logr, angle):
    r = float(np.exp(logr))
    x, y = _pts(r, angle)
    r = float(np.hypot(*(x - y)))  # the distance the kernel actually sees
    for val in (
        kernels.phi_helmholtz(k, x, y),
        kernels.phi_modified(k, x, y),
        kernels.phi_laplace(4.0, x, y),
        kernels.phi_helmholtz_dny(k, x, y, np.array([0.6, 0.8])),
        kernels.phi_helmholtz_dnx(k, x, y, np.array([0.6, 0.8])),
    ):
        recomposed = val.log_coeff * np.log(r) + val.smooth
        # the identity is exact by construction; the floating-point check
        # must allow for cancellation when |log_coeff ln r| dwarfs the total
        scale = 1 + abs(val.total) + abs(val.log_coeff * np.log(r))
        assert abs(val.total - recomposed) <= 1e-13 * scale
        assert np.isfinite(val.log_coeff) and np.isfinite(val.smooth)


def test_finite_parts_at_tiny_r():
    x, y = _pts(1e-12)
    for val in (kernels.phi_helmholtz(2.0, x, y), kernels.phi_modified(2.0, x, y),
                kernels.phi_laplace(4.0, x, y)):
        assert np.isfinite(val.log_coeff)
        assert np.isfinite(val.smooth)


def test_coincident_points_rejected():
    x = np.array([0.1, 0.2])
    with pytest.raises(ValueError):
        kernels.phi_helmholtz(1.0, x, x.copy())
