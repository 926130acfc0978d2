"""Fundamental-solution kernels split into logarithmic and smooth parts.

Every kernel value is decomposed as

    total(x, y) = log_coeff(x, y) * ln|x - y| + smooth(x, y)

with ``log_coeff`` and ``smooth`` both finite as |x - y| -> 0, which is what
the panel-pair quadrature needs.  The splitting follows the small-argument
expansions Y_nu = (2/pi) ln(z/2) J_nu + analytic and
K_0 = -ln(z/2) I_0 + analytic; everything that is not a pure ln|x - y|
factor (including ln k and ln 2 terms) lives in ``smooth``.

Two APIs are provided: scalar ``phi_*`` functions returning a
:class:`KernelValue` (the documented contract, convenient in tests), and
vectorized kernel classes consumed by the Galerkin assembly, which evaluate
``total`` and ``log_coeff`` on arrays of pairwise data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import specfun

INV_2PI = 1.0 / (2.0 * np.pi)


@dataclass(frozen=True)
class KernelValue:
    """total == log_coeff * ln r + smooth, all parts finite for r > 0."""

    total: complex
    log_coeff: complex
    smooth: complex


def _pair_r(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = float(np.hypot(*(x - y)))
    if r == 0.0:
        raise ValueError("kernel evaluated at coincident points x == y")
    return x, y, r


# ---------------------------------------------------------------------------
# vectorized kernels (assembly surface)
# ---------------------------------------------------------------------------

class HelmholtzKernel:
    """Phi_k(x,y) = (i/4) H_0^(1)(k r), the radiating fundamental solution."""

    complex_valued = True
    needs_normals = False

    def __init__(self, k: float):
        if k <= 0:
            raise ValueError(f"wavenumber must be positive, got {k}")
        self.k = float(k)

    def total(self, r, dx=None, dy=None, nx=None, ny=None):
        return 0.25j * specfun.hankel1_0(self.k * r)

    def log_coeff(self, r, dx=None, dy=None, nx=None, ny=None):
        return (-INV_2PI) * specfun.bessel_j0(self.k * r) + 0.0j


class ModifiedHelmholtzKernel:
    """Phi at imaginary wavenumber: (1/2pi) K_0(k r), real and positive."""

    complex_valued = False
    needs_normals = False

    def __init__(self, k: float):
        if k <= 0:
            raise ValueError(f"wavenumber must be positive, got {k}")
        self.k = float(k)

    def total(self, r, dx=None, dy=None, nx=None, ny=None):
        return INV_2PI * specfun.mod_bessel_k0(self.k * r)

    def log_coeff(self, r, dx=None, dy=None, nx=None, ny=None):
        return (-INV_2PI) * specfun.mod_bessel_i0(self.k * r)


class LaplaceKernel:
    """(1/2pi) ln(a / r); the scale ``a`` sets the zero level of the layer."""

    complex_valued = False
    needs_normals = False

    def __init__(self, a: float):
        if a <= 0:
            raise ValueError(f"Laplace kernel scale must be positive, got {a}")
        self.a = float(a)

    def total(self, r, dx=None, dy=None, nx=None, ny=None):
        return INV_2PI * (np.log(self.a) - np.log(r))

    def log_coeff(self, r, dx=None, dy=None, nx=None, ny=None):
        return np.full_like(np.asarray(r, dtype=float), -INV_2PI)


class DoubleLayerKernel:
    """d Phi_k / d n(y) = (ik/4) H_1^(1)(k r) ((x - y) . n_y) / r."""

    complex_valued = True
    needs_normals = True

    def __init__(self, k: float):
        if k <= 0:
            raise ValueError(f"wavenumber must be positive, got {k}")
        self.k = float(k)

    def total(self, r, dx, dy, nx=None, ny=None):
        ddn = (dx * ny[..., 0] + dy * ny[..., 1]) / r
        return 0.25j * self.k * specfun.hankel1_1(self.k * r) * ddn

    def log_coeff(self, r, dx, dy, nx=None, ny=None):
        ddn = (dx * ny[..., 0] + dy * ny[..., 1]) / r
        return (-INV_2PI) * self.k * specfun.bessel_j1(self.k * r) * ddn + 0.0j


class AdjointDoubleLayerKernel:
    """d Phi_k / d n(x) = -(ik/4) H_1^(1)(k r) ((x - y) . n_x) / r."""

    complex_valued = True
    needs_normals = True

    def __init__(self, k: float):
        if k <= 0:
            raise ValueError(f"wavenumber must be positive, got {k}")
        self.k = float(k)

    def total(self, r, dx, dy, nx, ny=None):
        ddn = (dx * nx[..., 0] + dy * nx[..., 1]) / r
        return -0.25j * self.k * specfun.hankel1_1(self.k * r) * ddn

    def log_coeff(self, r, dx, dy, nx, ny=None):
        ddn = (dx * nx[..., 0] + dy * nx[..., 1]) / r
        return INV_2PI * self.k * specfun.bessel_j1(self.k * r) * ddn + 0.0j


# ---------------------------------------------------------------------------
# scalar contract
# ---------------------------------------------------------------------------

def _value_from(kernel, x, y, nx=None, ny=None) -> KernelValue:
    x, y, r = _pair_r(x, y)
    d = x - y
    args = (np.float64(r), np.float64(d[0]), np.float64(d[1]),
            None if nx is None else np.asarray(nx, dtype=float),
            None if ny is None else np.asarray(ny, dtype=float))
    cast = complex if kernel.complex_valued else float
    total = cast(kernel.total(*args))
    logc = cast(np.real_if_close(kernel.log_coeff(*args)))
    return KernelValue(total=total, log_coeff=logc, smooth=total - logc * np.log(r))


def phi_helmholtz(k: float, x, y) -> KernelValue:
    """Helmholtz fundamental solution at wavenumber k, log-split."""
    return _value_from(HelmholtzKernel(k), x, y)


def phi_modified(k: float, x, y) -> KernelValue:
    """Fundamental solution at imaginary wavenumber ik (real-valued)."""
    return _value_from(ModifiedHelmholtzKernel(k), x, y)


def phi_laplace(a: float, x, y) -> KernelValue:
    """Laplace fundamental solution (1/2pi) ln(a/|x-y|)."""
    return _value_from(LaplaceKernel(a), x, y)


def phi_helmholtz_dny(k: float, x, y, n_y) -> KernelValue:
    """Normal derivative of Phi_k in the source point y."""
    return _value_from(DoubleLayerKernel(k), x, y, ny=n_y)


def phi_helmholtz_dnx(k: float, x, y, n_x) -> KernelValue:
    """Normal derivative of Phi_k in the observation point x."""
    return _value_from(AdjointDoubleLayerKernel(k), x, y, nx=n_x)
