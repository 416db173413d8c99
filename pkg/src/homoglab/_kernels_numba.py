"""numba-compiled hot kernels; see :mod:`homoglab._kernels_numpy` for the
reference semantics.  Each output entry is reduced sequentially so results
do not depend on the thread count."""
import math

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def poisson_sum(points, nodes, wg, center, radius, omega):
    npts, dim = points.shape
    nq = nodes.shape[0]
    out = np.zeros(npts, dtype=np.complex128)
    half = 0.5 * dim
    for i in prange(npts):
        num = radius * radius
        for a in range(dim):
            c = points[i, a] - center[a]
            num -= c * c
        acc = 0.0 + 0.0j
        for j in range(nq):
            d2 = 0.0
            for a in range(dim):
                c = points[i, a] - nodes[j, a]
                d2 += c * c
            if dim == 2:
                acc += wg[j] / d2
            elif dim == 3:
                acc += wg[j] / (d2 * math.sqrt(d2))
            elif dim == 4:
                acc += wg[j] / (d2 * d2)
            else:
                acc += wg[j] * d2 ** (-half)
        out[i] = acc * (num / (omega * radius))
    return out


@njit(parallel=True, cache=True)
def neumann_sum(points, nodes, wg):
    npts = points.shape[0]
    nq = nodes.shape[0]
    out = np.zeros(npts, dtype=np.complex128)
    for i in prange(npts):
        x0 = points[i, 0]
        x1 = points[i, 1]
        x2 = points[i, 2]
        acc = 0.0 + 0.0j
        for j in range(nq):
            a = x0 - nodes[j, 0]
            b = x1 - nodes[j, 1]
            c = x2 - nodes[j, 2]
            rr = math.sqrt(a * a + b * b + c * c)
            xy = x0 * nodes[j, 0] + x1 * nodes[j, 1] + x2 * nodes[j, 2]
            acc += wg[j] * (2.0 / rr + math.log(2.0 / (1.0 - xy + rr)) - 2.0)
        out[i] = acc / (4.0 * math.pi)
    return out


BLOCK = 64  # points advanced together through the degree recurrence (SIMD-friendly)


@njit(parallel=True, cache=True)
def legendre_series(coeffs, r, t, with_grad):
    npts = r.shape[0]
    nl = coeffs.shape[0]
    val = np.zeros(npts, dtype=np.complex128)
    dr = np.zeros(npts, dtype=np.complex128)
    dth = np.zeros(npts, dtype=np.complex128)
    # P_{l+1} = alpha_l t P_l - beta_l P_{l-1}
    alpha = np.empty(nl)
    beta = np.empty(nl)
    for ell in range(nl):
        alpha[ell] = (2 * ell + 1) / (ell + 1)
        beta[ell] = ell / (ell + 1)
    nblk = (npts + BLOCK - 1) // BLOCK
    for blk in prange(nblk):
        lo = blk * BLOCK
        hi = min(lo + BLOCK, npts)
        m = hi - lo
        ti = t[lo:hi].copy()
        ri = r[lo:hi].copy()
        p_prev = np.zeros(m)
        p_cur = np.ones(m)
        d_prev = np.zeros(m)
        d_cur = np.zeros(m)
        rl_minus = np.zeros(m)
        rl = np.ones(m)
        v_re = np.zeros(m)
        v_im = np.zeros(m)
        gr_re = np.zeros(m)
        gr_im = np.zeros(m)
        gt_re = np.zeros(m)
        gt_im = np.zeros(m)
        for ell in range(nl):
            a_re = coeffs[ell].real
            a_im = coeffs[ell].imag
            if with_grad and ell > 0:
                for j in range(m):
                    qr = ell * rl_minus[j] * p_cur[j]
                    gr_re[j] += a_re * qr
                    gr_im[j] += a_im * qr
                    qt = rl_minus[j] * d_cur[j]
                    gt_re[j] += a_re * qt
                    gt_im[j] += a_im * qt
            al = alpha[ell]
            be = beta[ell]
            # the recurrence runs one step past the last degree; that value is unused
            for j in range(m):
                q = rl[j] * p_cur[j]
                v_re[j] += a_re * q
                v_im[j] += a_im * q
                p_next = al * ti[j] * p_cur[j] - be * p_prev[j]
                p_prev[j] = p_cur[j]
                p_cur[j] = p_next
                rl_minus[j] = rl[j]
                rl[j] = rl[j] * ri[j]
            if with_grad:
                # P'_{l+1} = P'_{l-1} + (2l + 1) P_l, with p_prev now holding P_l
                for j in range(m):
                    d_next = d_prev[j] + (2 * ell + 1) * p_prev[j] if ell > 0 else 1.0
                    d_prev[j] = d_cur[j]
                    d_cur[j] = d_next
        for j in range(m):
            val[lo + j] = complex(v_re[j], v_im[j])
            if with_grad:
                dr[lo + j] = complex(gr_re[j], gr_im[j])
                s = 1.0 - ti[j] * ti[j]
                if s < 0.0:
                    s = 0.0
                dth[lo + j] = -math.sqrt(s) * complex(gt_re[j], gt_im[j])
    return val, dr, dth


@njit(parallel=True, cache=True)
def gegenbauer_series(coeffs, nu, r, t):
    npts = r.shape[0]
    nl = coeffs.shape[0]
    val = np.zeros(npts, dtype=np.complex128)
    # C_{l+1} = alpha_l t C_l - beta_l C_{l-1}
    alpha = np.empty(nl)
    beta = np.empty(nl)
    alpha[0] = 2.0 * nu
    beta[0] = 0.0
    for ell in range(1, nl):
        alpha[ell] = 2.0 * (ell + nu) / (ell + 1)
        beta[ell] = (ell + 2.0 * nu - 1.0) / (ell + 1)
    nblk = (npts + BLOCK - 1) // BLOCK
    for blk in prange(nblk):
        lo = blk * BLOCK
        hi = min(lo + BLOCK, npts)
        m = hi - lo
        ti = t[lo:hi].copy()
        ri = r[lo:hi].copy()
        c_prev = np.zeros(m)
        c_cur = np.ones(m)
        rl = np.ones(m)
        v_re = np.zeros(m)
        v_im = np.zeros(m)
        for ell in range(nl):
            a_re = coeffs[ell].real
            a_im = coeffs[ell].imag
            al = alpha[ell]
            be = beta[ell]
            for j in range(m):
                q = rl[j] * c_cur[j]
                v_re[j] += a_re * q
                v_im[j] += a_im * q
                c_next = al * ti[j] * c_cur[j] - be * c_prev[j]
                c_prev[j] = c_cur[j]
                c_cur[j] = c_next
                rl[j] = rl[j] * ri[j]
        for j in range(m):
            val[lo + j] = complex(v_re[j], v_im[j])
    return val
