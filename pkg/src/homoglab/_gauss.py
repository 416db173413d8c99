"""Cached Gauss rules on [-1, 1] (scipy's O(n^2) generator; large n is costly)."""
import functools

from scipy.special import roots_gegenbauer, roots_legendre


@functools.lru_cache(maxsize=32)
def zonal_gauss(dim, n):
    """Gauss rule for the weight (1 - t^2)^{(d-3)/2}; arrays are read-only."""
    if dim == 3:
        t, w = roots_legendre(n)
    else:
        t, w = roots_gegenbauer(n, 0.5 * (dim - 2))
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def legendre_rule(n):
    return zonal_gauss(3, n)
