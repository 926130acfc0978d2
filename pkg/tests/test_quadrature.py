"""Quadrature rules and panel-pair integration.

Expected values for the singular benchmarks were computed beforehand with a
multiprecision oracle (mpmath, dps=30) after reducing the double integrals
to one-dimensional ones via the u = s - t substitution; the constants are
frozen below with their generating integrals noted.
"""

import numpy as np
import pytest

import helmbem as hb
from helmbem.quadrature import (
    gauss_legendre,
    log_gauss,
    panel_pair_integrate,
    panel_relation,
)

# int_0^1 int_0^1 cos(3s+t) ln|s-t| ds dt
#   = 1/4 int_0^1 ln u [sin(4-u) - sin(3u) + sin(4-3u) - sin(u)] du
COINCIDENT_COS = 0.36126992282093056604
# int_0^0.3 int_0^0.2 cos(2s-t) ln(s+t) dt ds
#   = int_0^0.5 ln u (sin(3 hi - u) - sin(3 lo - u))/3 du,
#   lo = max(0, u-0.2), hi = min(u, 0.3)
ADJACENT_COS = -0.087671150666525146722


def test_gauss_legendre_textbook_rules():
    r1 = gauss_legendre(1)
    assert r1.nodes == pytest.approx([0.0])
    assert r1.weights == pytest.approx([2.0])
    r2 = gauss_legendre(2)
    assert sorted(r2.nodes) == pytest.approx([-1 / np.sqrt(3), 1 / np.sqrt(3)])
    assert r2.weights == pytest.approx([1.0, 1.0])


def test_gauss_legendre_degree_exactness():
    for n in (1, 2, 3, 5, 8, 16, 32, 64):
        r = gauss_legendre(n)
        assert abs(r.weights.sum() - 2.0) <= 1e-14
        for deg in range(0, 2 * n):
            exact = 2.0 / (deg + 1) if deg % 2 == 0 else 0.0
            got = np.sum(r.weights * r.nodes**deg)
            assert abs(got - exact) <= 1e-12, (n, deg)


def test_gauss_legendre_quartic():
    r = gauss_legendre(3)
    assert np.sum(r.weights * r.nodes**4) == pytest.approx(2 / 5, rel=1e-14)


def test_gauss_legendre_order_range():
    with pytest.raises(ValueError):
        gauss_legendre(0)
    with pytest.raises(ValueError):
        gauss_legendre(65)


def test_log_gauss_low_moments():
    r = log_gauss(4)
    assert np.sum(r.weights) == pytest.approx(1.0, abs=1e-14)
    assert np.sum(r.weights * r.nodes) == pytest.approx(0.25, rel=1e-13)
    assert np.sum(r.weights * r.nodes**2) == pytest.approx(1 / 9, rel=1e-13)


def test_log_gauss_degree_exactness():
    # integral_0^1 x^m ln(1/x) dx = 1/(m+1)^2
    for n in (1, 2, 4, 8, 16, 32):
        r = log_gauss(n)
        assert np.all(r.weights > 0)
        assert np.all((r.nodes > 0) & (r.nodes < 1))
        for deg in range(0, 2 * n):
            got = np.sum(r.weights * r.nodes**deg)
            exact = 1.0 / (deg + 1) ** 2
            assert abs(got - exact) <= 1e-12 * max(1.0, 1.0 / exact * 1e-2), (n, deg)


def test_log_gauss_order_range():
    with pytest.raises(ValueError):
        log_gauss(0)
    with pytest.raises(ValueError):
        log_gauss(33)


# ---------------------------------------------------------------------------
# panel-pair integration
# ---------------------------------------------------------------------------

UNIT_X = (np.array([0.0, 0.0]), np.array([1.0, 0.0]))


def _const(c):
    return lambda x, y: np.full(np.broadcast(x[..., 0], y[..., 0]).shape, c)


def test_coincident_pure_log_closed_form():
    # int_0^1 int_0^1 ln|s-t| ds dt = -3/2
    val = panel_pair_integrate(_const(0.0), _const(1.0), UNIT_X, UNIT_X,
                               "coincident", order=16)
    assert val.real == pytest.approx(-1.5, abs=1e-10)
    assert abs(val.imag) < 1e-14


def test_constant_smooth_gives_area():
    pa = (np.array([0.0, 0.0]), np.array([0.7, 0.0]))
    pb = (np.array([5.0, 1.0]), np.array([5.0, 1.4]))
    val = panel_pair_integrate(_const(1.0), _const(0.0), pa, pb, "separated", order=6)
    assert val.real == pytest.approx(0.7 * 0.4, rel=1e-14)


def test_coincident_nonpolynomial_against_oracle():
    f_log = lambda x, y: np.cos(3 * x[..., 0] + y[..., 0])
    val = panel_pair_integrate(_const(0.0), f_log, UNIT_X, UNIT_X,
                               "coincident", order=16)
    assert val.real == pytest.approx(COINCIDENT_COS, abs=1e-12)


def test_coincident_convergence_monotone():
    f_log = lambda x, y: np.cos(3 * x[..., 0] + y[..., 0])
    errs = []
    for order in (4, 8, 16, 32):
        val = panel_pair_integrate(_const(0.0), f_log, UNIT_X, UNIT_X,
                                   "coincident", order=order)
        errs.append(abs(val.real - COINCIDENT_COS))
    for a, b in zip(errs, errs[1:]):
        assert b <= 1.1 * a + 1e-15


def test_adjacent_against_oracle():
    # panels [0,0.3] and [0,-0.2] on the x-axis sharing the origin;
    # integrand cos(2 sigma - t') ln(sigma + t') in distances from the node
    pa = (np.array([0.0, 0.0]), np.array([0.3, 0.0]))
    pb = (np.array([-0.2, 0.0]), np.array([0.0, 0.0]))

    def f_log(x, y):
        return np.cos(2 * x[..., 0] + y[..., 0])  # t' = -y_x on panel b

    val = panel_pair_integrate(_const(0.0), f_log, pa, pb, "adjacent", order=16)
    assert val.real == pytest.approx(ADJACENT_COS, abs=1e-12)


def _midpoint_oracle(f_smooth, f_log, m=200):
    """200x200 midpoint rule, Richardson-extrapolated once so the oracle's
    own O(m^-2) error sits far below the 1e-8 comparison tolerance."""

    def raw(m):
        s = (np.arange(m) + 0.5) / m
        X = np.stack([s, np.zeros(m)], axis=-1)
        Y = np.stack([10.0 + s, np.zeros(m)], axis=-1)
        XX = X[:, None, :] * np.ones((1, m, 1))
        YY = Y[None, :, :] * np.ones((m, 1, 1))
        r = np.hypot(*(XX - YY).transpose(2, 0, 1))
        return np.sum(f_smooth(XX, YY) + f_log(XX, YY) * np.log(r)) / m**2

    return (4.0 * raw(2 * m) - raw(m)) / 3.0


def test_separated_against_midpoint_oracle():
    pa = (np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    pb = (np.array([10.0, 0.0]), np.array([11.0, 0.0]))
    val = panel_pair_integrate(_const(0.0), _const(1.0), pa, pb, "separated",
                               order=12)
    assert val.real == pytest.approx(_midpoint_oracle(_const(0.0), _const(1.0)),
                                     abs=1e-8)
    f_smooth = lambda x, y: np.cos(x[..., 0] - 0.3 * y[..., 0])
    f_log = lambda x, y: np.sin(x[..., 0] + 0.5 * y[..., 0])
    val = panel_pair_integrate(f_smooth, f_log, pa, pb, "separated", order=12)
    assert val.real == pytest.approx(_midpoint_oracle(f_smooth, f_log), abs=1e-8)


def test_relation_detection_exhaustive():
    curve = hb.make_geometry("circle")
    mesh = hb.build_mesh(curve, 6.0, ppw=2.0)  # h = 2*pi/12 -> 12 panels
    assert mesh.n_dof == 12
    for p in range(12):
        for q in range(12):
            want = "coincident" if p == q else (
                "adjacent" if (q - p) % 12 in (1, 11) else "separated")
            assert panel_relation(mesh, p, q) == want


def test_coincident_requires_same_panel():
    pa = (np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    pb = (np.array([0.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        panel_pair_integrate(_const(0.0), _const(1.0), pa, pb, "coincident")


def test_adjacent_requires_shared_endpoint():
    pa = (np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    pb = (np.array([3.0, 0.0]), np.array([4.0, 0.0]))
    with pytest.raises(ValueError):
        panel_pair_integrate(_const(0.0), _const(1.0), pa, pb, "adjacent")
