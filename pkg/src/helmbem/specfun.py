"""Real-argument Bessel, modified Bessel, and Hankel functions.

Thin validated wrappers around the Cephes routines shipped with SciPy, kept
behind a stable local surface so that every kernel in the package evaluates
special functions through one door.  The Hankel functions are assembled from
the J and Y evaluations, so ``hankel1_0(x).real`` is bit-for-bit equal to
``bessel_j0(x)``.

All functions accept scalars or numpy arrays and preserve the input shape.
"""

from __future__ import annotations

import numpy as np
from scipy import special as _sp


def _require_positive(x, fname: str):
    arr = np.asarray(x, dtype=float)
    if arr.size and np.min(arr) <= 0.0:
        raise ValueError(f"{fname} requires x > 0, got min {np.min(arr)}")
    return arr


def _require_nonnegative(x, fname: str):
    arr = np.asarray(x, dtype=float)
    if arr.size and np.min(arr) < 0.0:
        raise ValueError(f"{fname} requires x >= 0, got min {np.min(arr)}")
    return arr


def bessel_j0(x):
    return _sp.j0(_require_nonnegative(x, "bessel_j0"))


def bessel_j1(x):
    return _sp.j1(_require_nonnegative(x, "bessel_j1"))


def bessel_y0(x):
    return _sp.y0(_require_positive(x, "bessel_y0"))


def bessel_y1(x):
    return _sp.y1(_require_positive(x, "bessel_y1"))


def mod_bessel_k0(x):
    return _sp.k0(_require_positive(x, "mod_bessel_k0"))


def mod_bessel_k1(x):
    return _sp.k1(_require_positive(x, "mod_bessel_k1"))


def mod_bessel_i0(x):
    return _sp.i0(_require_nonnegative(x, "mod_bessel_i0"))


def mod_bessel_i1(x):
    return _sp.i1(_require_nonnegative(x, "mod_bessel_i1"))


def hankel1_0(x):
    """H_0^{(1)}(x) = J_0(x) + i Y_0(x), built from the two real evaluations."""
    x = _require_positive(x, "hankel1_0")
    return _sp.j0(x) + 1j * _sp.y0(x)


def hankel1_1(x):
    """H_1^{(1)}(x) = J_1(x) + i Y_1(x)."""
    x = _require_positive(x, "hankel1_1")
    return _sp.j1(x) + 1j * _sp.y1(x)
