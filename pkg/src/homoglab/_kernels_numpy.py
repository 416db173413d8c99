"""Pure-numpy implementations of the hot kernels.

Signatures and semantics match :mod:`homoglab._kernels_numba` exactly; the
dispatcher in :mod:`homoglab._kernels` picks one of the two.
"""
import numpy as np

_CHUNK = 1 << 21


def poisson_sum(points, nodes, wg, center, radius, omega):
    """sum_j P(x_i, y_j) wg_j for the ball of given center and radius."""
    npts, dim = points.shape
    out = np.zeros(npts, dtype=np.complex128)
    step = max(1, _CHUNK // max(1, nodes.shape[0]))
    for s in range(0, npts, step):
        x = points[s:s + step]
        dist2 = np.zeros((x.shape[0], nodes.shape[0]))
        for a in range(dim):
            dist2 += (x[:, a, None] - nodes[None, :, a]) ** 2
        xc = x - center
        num = radius * radius - np.sum(xc * xc, axis=1)
        out[s:s + step] = num / (omega * radius) * ((dist2 ** (-0.5 * dim)) @ wg)
    return out


def neumann_sum(points, nodes, wg):
    """sum_j N(x_i, y_j) wg_j for the unit 3-ball Neumann function."""
    npts = points.shape[0]
    out = np.zeros(npts, dtype=np.complex128)
    step = max(1, _CHUNK // max(1, nodes.shape[0]))
    for s in range(0, npts, step):
        x = points[s:s + step]
        dist2 = np.zeros((x.shape[0], nodes.shape[0]))
        for a in range(3):
            dist2 += (x[:, a, None] - nodes[None, :, a]) ** 2
        rr = np.sqrt(dist2)
        xy = x @ nodes.T
        ker = 2.0 / rr + np.log(2.0 / (1.0 - xy + rr)) - 2.0
        out[s:s + step] = (ker @ wg) / (4.0 * np.pi)
    return out


def legendre_series(coeffs, r, t, with_grad):
    """Evaluate sum_l a_l r^l P_l(t) at paired (r, t) samples.

    With ``with_grad`` also returns the radial derivative and the polar
    component ``(1/r) d/dtheta``; both are zero-filled otherwise.
    """
    npts = r.shape[0]
    nl = coeffs.shape[0]
    val = np.zeros(npts, dtype=np.complex128)
    dr = np.zeros(npts, dtype=np.complex128)
    dth = np.zeros(npts, dtype=np.complex128)
    p_prev = np.zeros(npts)
    p_cur = np.ones(npts)
    d_prev = np.zeros(npts)
    d_cur = np.zeros(npts)
    rl_minus = np.zeros(npts)  # r^(l-1)
    rl = np.ones(npts)  # r^l
    for ell in range(nl):
        a = coeffs[ell]
        if a != 0:
            val += a * (rl * p_cur)
            if with_grad and ell > 0:
                dr += (a * ell) * (rl_minus * p_cur)
                dth += a * (rl_minus * d_cur)
        if ell + 1 < nl:
            p_next = ((2 * ell + 1) * t * p_cur - ell * p_prev) / (ell + 1)
            d_next = d_prev + (2 * ell + 1) * p_cur if ell > 0 else np.ones(npts)
            p_prev, p_cur = p_cur, p_next
            d_prev, d_cur = d_cur, d_next
            rl_minus = rl
            rl = rl * r
    if with_grad:
        dth = dth * (-np.sqrt(np.clip(1.0 - t * t, 0.0, None)))
    return val, dr, dth


def gegenbauer_series(coeffs, nu, r, t):
    """Evaluate sum_l a_l r^l C_l^nu(t) at paired (r, t) samples."""
    npts = r.shape[0]
    val = np.zeros(npts, dtype=np.complex128)
    c_prev = np.zeros(npts)
    c_cur = np.ones(npts)
    rl = np.ones(npts)
    for ell in range(coeffs.shape[0]):
        if coeffs[ell] != 0:
            val += coeffs[ell] * (rl * c_cur)
        if ell == 0:
            c_prev, c_cur = c_cur, 2.0 * nu * t
        else:
            c_prev, c_cur = c_cur, (2.0 * (ell + nu) * t * c_cur - (ell + 2.0 * nu - 1.0) * c_prev) / (ell + 1)
        rl = rl * r
    return val
