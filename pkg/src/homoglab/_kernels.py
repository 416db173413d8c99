"""Dispatch layer for the hot kernels (numba when available, else numpy)."""
import numpy as np

from . import _kernels_numpy
from ._accel import use_numba

if use_numba():
    from . import _kernels_numba as _impl

    BACKEND = "numba"
else:
    _impl = _kernels_numpy
    BACKEND = "numpy"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def poisson_sum(points, nodes, wg, center, radius, omega):
    return _impl.poisson_sum(_f64(points), _f64(nodes),
                             np.ascontiguousarray(wg, dtype=np.complex128),
                             _f64(center), float(radius), float(omega))


def neumann_sum(points, nodes, wg):
    return _impl.neumann_sum(_f64(points), _f64(nodes),
                             np.ascontiguousarray(wg, dtype=np.complex128))


def legendre_series(coeffs, r, t, with_grad=False):
    return _impl.legendre_series(np.ascontiguousarray(coeffs, dtype=np.complex128),
                                 _f64(r), _f64(t), bool(with_grad))


def gegenbauer_series(coeffs, nu, r, t):
    return _impl.gegenbauer_series(np.ascontiguousarray(coeffs, dtype=np.complex128),
                                   float(nu), _f64(r), _f64(t))
