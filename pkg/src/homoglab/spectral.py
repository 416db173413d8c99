"""Spectral harmonic extension on balls: the fast path behind volume sweeps.

* d = 2: boundary data sampled on an equispaced ring, FFT coefficients
  ``g_n``; the harmonic extension is ``sum_n g_n (rho/R)^|n| e^{i n theta}``.
* d = 3, 4 with data symmetric about the last axis: zonal expansion
  ``f(t) = sum_l a_l C_l^nu(t)`` with ``nu = (d-2)/2`` (Legendre for d = 3);
  the extension is ``sum_l a_l (rho/R)^l C_l^nu(t)``.
* d = 3 with constant-coefficient data in arbitrary directions: one zonal
  plane-wave series ``i^l (2l+1) j_l(kR) P_l`` per lattice mode.

Neumann extensions use ``(R/l) a_l`` for ``l >= 1`` and drop ``l = 0``, so
the normal derivative is ``g - mean(g)`` and the boundary mean is zero.
Every expansion is truncated by a coefficient-tail test, not a fixed rule.
"""
import math

import numpy as np
from scipy.special import gammaln, spherical_jn

from . import _kernels
from ._gauss import legendre_rule, zonal_gauss
from .errors import (MeshUnderResolved, QuadratureUnderResolved, UnsupportedData,
                     UnsupportedDimension)

TAIL_TOL = 1e-14
MAX_TERMS = 1 << 22
# node and basis-table caps keep one shell evaluation within a few hundred MB
MAX_ANGULAR_NODES = 1 << 22
MAX_ZONAL_TABLE = 1 << 25


class AngularRule:
    """Angular part of a volume mesh.

    kind ``ring``: M equispaced angles on a circle (d = 2).
    kind ``zonal``: nodes ``t`` in [-1, 1] for fields symmetric about the
    last axis, weights already include the (d-2)-sphere measure.
    kind ``full``: explicit unit directions with weights.
    """

    def __init__(self, kind, dim, weights, size, t=None, directions=None):
        self.kind = kind
        self.dim = dim
        self.weights = weights
        self.size = size
        self.t = t
        self.directions = directions

    @staticmethod
    def _require_size(n):
        if n > MAX_ANGULAR_NODES:
            raise MeshUnderResolved(f"angular rule needs {n} nodes, cap is {MAX_ANGULAR_NODES}")

    @classmethod
    def ring(cls, m):
        cls._require_size(m)
        return cls("ring", 2, np.full(m, 2.0 * math.pi / m), m)

    @classmethod
    def zonal(cls, dim, n):
        cls._require_size(n)
        t, w = zonal_gauss(dim, n)
        lower = 2.0 * math.pi ** ((dim - 1) / 2) / math.gamma((dim - 1) / 2)
        return cls("zonal", dim, w * lower, n, t=t)

    @classmethod
    def full(cls, dim, n):
        """Product rule over the sphere with n polar nodes (d = 3)."""
        if dim != 3:
            raise UnsupportedDimension("full angular rules are built for d=3 only", module="norms_rates")
        cls._require_size(2 * n * n)
        t, w = legendre_rule(n)
        n_az = 2 * n
        phi = 2.0 * math.pi * np.arange(n_az) / n_az
        st = np.sqrt(1.0 - t * t)
        dirs = np.stack([np.outer(st, np.cos(phi)), np.outer(st, np.sin(phi)),
                         np.repeat(t[:, None], n_az, axis=1)], -1).reshape(-1, 3)
        ww = np.outer(w, np.full(n_az, 2.0 * math.pi / n_az)).ravel()
        return cls("full", 3, ww, ww.size, t=None, directions=dirs)

    def zonal_basis(self, lmax, with_derivative=False):
        """Table of C_l^nu(t_j) (and P_l'(t_j) for d = 3), shape (n, lmax+1), cached."""
        held = self.__dict__.get("_basis")
        if held is None or held[0].shape[1] <= lmax or (with_derivative and held[1] is None):
            if self.t.size * (lmax + 1) > MAX_ZONAL_TABLE:
                raise MeshUnderResolved(f"zonal table of degree {lmax} on {self.t.size} nodes "
                                        "exceeds the memory cap")
            nu = 0.5 * (self.dim - 2)
            t = self.t
            table = np.empty((t.size, lmax + 1))
            table[:, 0] = 1.0
            if lmax >= 1:
                table[:, 1] = 2.0 * nu * t
            for l in range(1, lmax):
                table[:, l + 1] = (2.0 * (l + nu) * t * table[:, l]
                                   - (l + 2.0 * nu - 1.0) * table[:, l - 1]) / (l + 1)
            deriv = None
            if with_derivative:
                deriv = np.zeros_like(table)
                if lmax >= 1:
                    deriv[:, 1] = 1.0
                for l in range(1, lmax):
                    deriv[:, l + 1] = deriv[:, l - 1] + (2 * l + 1) * table[:, l]
            # keep only the largest table; lower degrees are column slices
            held = (table, deriv)
            self._basis = held
        table, deriv = held
        return table[:, :lmax + 1], (None if deriv is None else deriv[:, :lmax + 1])

    def refined(self):
        if self.kind == "ring":
            return AngularRule.ring(2 * self.size)
        if self.kind == "zonal":
            return AngularRule.zonal(self.dim, 2 * self.size)
        n = int(round(math.sqrt(self.size / 2)))
        return AngularRule.full(self.dim, 2 * n)


def _real_matvec(mat, vec):
    """Real matrix times complex vector without a complex copy of the matrix."""
    return mat @ vec.real + 1j * (mat @ vec.imag)


def _next_pow2(n):
    return 1 << max(0, int(math.ceil(math.log2(max(1, n)))))


def _band_estimate(domain, data, eps):
    """Angular frequency (per radian) of g_eps on the boundary."""
    if eps is None:
        return 0.0
    return 2.0 * math.pi * data.max_mode_norm * float(domain.axes.max()) / eps


def _tail_ok(mags, keep, tol):
    scale = max(float(mags.max()), 1e-300)
    return float(mags[keep:].max(initial=0.0)) <= tol * scale


class FourierDiskField:
    """Harmonic function on a disk from its boundary Fourier coefficients."""

    dim = 2
    preferred_rule = "ring"

    def __init__(self, domain, n, coeffs):
        self.domain = domain
        self.n = np.asarray(n, dtype=np.int64)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)
        self.n_max = int(np.abs(self.n).max()) if self.n.size else 0

    @property
    def band(self):
        return self.n_max

    def ring(self, rho, m):
        if m < 2 * self.n_max + 1:
            raise UnsupportedData(f"ring of {m} nodes aliases {self.n_max} Fourier modes")
        s = rho / self.domain.radius
        a = np.zeros(m, dtype=np.complex128)
        a[self.n % m] = self.coeffs * s ** np.abs(self.n)
        return np.fft.ifft(a) * m

    def at_points(self, points):
        z = np.atleast_2d(points) - self.domain.c
        s = np.hypot(z[:, 0], z[:, 1]) / self.domain.radius
        th = np.arctan2(z[:, 1], z[:, 0])
        out = np.zeros(z.shape[0], dtype=np.complex128)
        for k in range(z.shape[0]):
            out[k] = np.sum(self.coeffs * s[k] ** np.abs(self.n) * np.exp(1j * self.n * th[k]))
        return out

    def shell(self, rho, rule, quantity="value"):
        if quantity != "value":
            raise UnsupportedData("gradients are not implemented for d=2 fields")
        if rule.kind == "ring":
            return self.ring(rho, rule.size)
        raise UnsupportedData(f"rule {rule.kind} not supported by disk fields")


class ZonalBallField:
    """Harmonic function on a ball, symmetric about the last coordinate axis."""

    preferred_rule = "zonal"

    def __init__(self, domain, coeffs):
        self.domain = domain
        self.dim = domain.dim
        self.nu = 0.5 * (self.dim - 2)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)

    @property
    def band(self):
        return self.coeffs.size - 1

    def _eval(self, s, t, grad=False):
        if self.dim == 3:
            v, dr, dth = _kernels.legendre_series(self.coeffs, s, t, grad)
            if grad:
                r0 = self.domain.radius
                return np.stack([dr / r0, dth / r0], -1)
            return v
        if grad:
            raise UnsupportedData("gradients are implemented for d=3 only")
        return _kernels.gegenbauer_series(self.coeffs, self.nu, s, t)

    def at_points(self, points, quantity="value"):
        z = np.atleast_2d(points) - self.domain.c
        rho = np.linalg.norm(z, axis=1)
        t = np.where(rho > 0, z[:, -1] / np.where(rho > 0, rho, 1.0), 1.0)
        return self._eval(rho / self.domain.radius, t, quantity == "grad")

    def shell(self, rho, rule, quantity="value"):
        s = rho / self.domain.radius
        if rule.kind == "full":
            return self._eval(np.full(rule.size, s), rule.directions[:, -1], quantity == "grad")
        if rule.kind != "zonal":
            raise UnsupportedData("ring rules apply to d=2 only")
        grad = quantity == "grad"
        if grad and self.dim != 3:
            raise UnsupportedData("gradients are implemented for d=3 only")
        # one basis table per rule, then each shell is a matrix-vector product
        basis, dbasis = rule.zonal_basis(self.coeffs.size - 1, grad)
        ell = np.arange(self.coeffs.size)
        with np.errstate(under="ignore"):
            pw = s ** ell
        if not grad:
            return _real_matvec(basis, self.coeffs * pw)
        r0 = self.domain.radius
        with np.errstate(under="ignore"):
            pw_m = np.concatenate([[0.0], s ** (ell[1:] - 1)]) if ell.size > 1 else np.zeros(1)
        dr = _real_matvec(basis, self.coeffs * ell * pw_m) / r0
        dth = -np.sqrt(np.maximum(1.0 - rule.t ** 2, 0.0)) * _real_matvec(dbasis, self.coeffs * pw_m) / r0
        return np.stack([dr, dth], -1)


class PlaneWaveBallField:
    """Sum of plane-wave harmonic extensions on the 3-ball (constant c_m)."""

    dim = 3
    preferred_rule = "full"

    def __init__(self, domain, terms):
        # terms: list of (axis unit vector, coefficient array)
        self.domain = domain
        self.terms = terms

    @property
    def band(self):
        return max((c.size - 1 for _, c in self.terms), default=0)

    def _eval(self, s, dirs):
        out = np.zeros(s.size, dtype=np.complex128)
        for axis, coeffs in self.terms:
            v, _, _ = _kernels.legendre_series(coeffs, s, dirs @ axis, False)
            out += v
        return out

    def at_points(self, points, quantity="value"):
        if quantity != "value":
            raise UnsupportedData("plane-wave fields provide values only")
        z = np.atleast_2d(points) - self.domain.c
        rho = np.linalg.norm(z, axis=1)
        dirs = z / np.where(rho > 0, rho, 1.0)[:, None]
        return self._eval(rho / self.domain.radius, dirs)

    def shell(self, rho, rule, quantity="value"):
        if quantity != "value" or rule.kind != "full":
            raise UnsupportedData("plane-wave fields need a full angular rule and values")
        return self._eval(np.full(rule.size, rho / self.domain.radius), rule.directions)


class DifferenceField:
    """Pointwise difference a - b of two fields sharing a domain."""

    def __init__(self, a, b):
        self.a = a
        self.b = b
        self.dim = a.dim
        self.domain = a.domain
        kinds = {a.preferred_rule, b.preferred_rule}
        self.preferred_rule = "full" if "full" in kinds else a.preferred_rule

    @property
    def band(self):
        return max(self.a.band, self.b.band)

    def shell(self, rho, rule, quantity="value"):
        return self.a.shell(rho, rule, quantity) - self.b.shell(rho, rule, quantity)

    def at_points(self, points, quantity="value"):
        if quantity == "value":
            return self.a.at_points(points) - self.b.at_points(points)
        return self.a.at_points(points, quantity) - self.b.at_points(points, quantity)


def _disk_field(domain, data, eps, kind, tol):
    if kind != "dirichlet":
        raise UnsupportedDimension("Neumann extensions are provided for d>=3", module="spectral")
    k = _band_estimate(domain, data, eps)
    n = _next_pow2(2 * (1.1 * k + 64))
    r0 = domain.radius
    while True:
        if n > MAX_TERMS:
            raise QuadratureUnderResolved("boundary data not resolved by 2^22 ring nodes",
                                          module="spectral")
        theta = 2.0 * math.pi * np.arange(n) / n
        pts = domain.c + r0 * np.stack([np.cos(theta), np.sin(theta)], -1)
        vals = data.sample(pts, eps)
        if vals.ndim > 1:
            raise UnsupportedData("pass scalar data (use BoundaryData.component)")
        ghat = np.fft.fft(vals) / n
        freq = np.fft.fftfreq(n, 1.0 / n).astype(np.int64)
        mags = np.abs(ghat)
        # FFT roundoff sits near machine precision times the data size
        floor = max(tol * float(mags.max()), 64 * np.finfo(float).eps * float(np.abs(vals).max()))
        if float(mags[np.abs(freq) > 0.375 * n].max(initial=0.0)) <= floor:
            break
        n *= 2
    cut = int(np.abs(freq[mags > floor]).max(initial=0))
    keep = np.abs(freq) <= cut
    keep &= freq != -(n // 2)
    return FourierDiskField(domain, freq[keep], ghat[keep])


def _is_zonal(domain, data, eps, tol=1e-12):
    """Check symmetry about the last axis by sampling several meridians."""
    dim = domain.dim
    rng = np.random.default_rng(12345)
    t = np.cos(np.linspace(0.05, math.pi - 0.05, 23))
    r0 = domain.radius
    base = None
    for _ in range(6):
        v = rng.normal(size=dim - 1)
        v /= np.linalg.norm(v)
        pts = domain.c + r0 * np.concatenate([np.sqrt(1 - t * t)[:, None] * v, t[:, None]], 1)
        vals = data.sample(pts, eps)
        if base is None:
            base = vals
            scale = max(1.0, float(np.abs(base).max()))
        elif np.abs(vals - base).max() > tol * scale:
            return False
    return True


def _zonal_coefficients(domain, data, eps, tol):
    dim = domain.dim
    nu = 0.5 * (dim - 2)
    r0 = domain.radius
    k = _band_estimate(domain, data, eps)
    # Bessel-type coefficients die off past k + O(k^{1/3}) (Airy transition)
    lmax = int(k + 12.0 * k ** (1.0 / 3.0) + 48)
    while True:
        if lmax > 1 << 16:
            raise QuadratureUnderResolved("zonal expansion did not converge", module="spectral")
        n_nodes = lmax + 64
        t, w = zonal_gauss(dim, n_nodes)
        pts = np.zeros((n_nodes, dim))
        pts[:, 0] = np.sqrt(1.0 - t * t)
        pts[:, -1] = t
        vals = data.sample(domain.c + r0 * pts, eps)
        if vals.ndim > 1:
            raise UnsupportedData("pass scalar data (use BoundaryData.component)")
        wf = w * vals
        coeffs = np.empty(lmax + 1, dtype=np.complex128)
        c_prev = np.zeros_like(t)
        c_cur = np.ones_like(t)
        ell = np.arange(lmax + 1)
        if dim == 3:
            norm = 2.0 / (2 * ell + 1)
        else:
            norm = np.exp(math.log(math.pi) + (1 - 2 * nu) * math.log(2.0) + gammaln(ell + 2 * nu)
                          - gammaln(ell + 1) - 2 * gammaln(nu)) / (ell + nu)
        for l in range(lmax + 1):
            coeffs[l] = (c_cur @ wf) / norm[l]
            if l == 0:
                c_prev, c_cur = c_cur, 2.0 * nu * t
            else:
                c_prev, c_cur = c_cur, (2.0 * (l + nu) * t * c_cur - (l + 2.0 * nu - 1.0) * c_prev) / (l + 1)
        mags = np.abs(coeffs)
        if dim != 3:
            # compare terms by their size on the sphere, max |C_l^nu| = C_l^nu(1)
            mags = mags * np.exp(gammaln(ell + 2 * nu) - gammaln(ell + 1) - gammaln(2 * nu))
        # Gauss projection leaves a roundoff floor growing like n^{3/2}
        scale = max(float(mags.max()), 1e-300)
        floor = 8.0 * np.finfo(float).eps * n_nodes ** 1.5 * float(np.abs(vals).max())
        tol_eff = max(tol, floor / scale)
        if _tail_ok(mags, lmax - 16, tol_eff):
            break
        lmax *= 2
    cut = int(np.flatnonzero(mags > tol_eff * scale).max(initial=0))
    return coeffs[:cut + 1]


def _neumannize(coeffs, radius):
    out = np.zeros_like(coeffs)
    ell = np.arange(1, coeffs.size)
    out[1:] = coeffs[1:] * radius / ell
    return out


def _plane_wave_field(domain, data, eps, kind, tol):
    r0 = domain.radius
    coef = data.coefficients(domain.c[None, :])[0]
    terms = []
    for m, c in zip(data.modes, coef):
        if c == 0:
            continue
        mn = float(np.linalg.norm(m))
        if mn == 0 or eps is None:
            if mn == 0 and kind == "dirichlet":
                terms.append((np.array([0.0, 0.0, 1.0]), np.array([c], dtype=np.complex128)))
            continue
        z = 2.0 * math.pi * mn * r0 / eps
        lmax = int(z + 12.0 * z ** (1.0 / 3.0) + 48)
        ell = np.arange(lmax + 1)
        jl = spherical_jn(ell, z)
        phase = np.exp(2j * math.pi * float(m @ domain.c) / eps)
        a = c * phase * (1j ** ell) * (2 * ell + 1) * jl
        mags = np.abs(a)
        cut = int(np.flatnonzero(mags > tol * mags.max()).max(initial=0))
        a = a[:cut + 1]
        if kind == "neumann":
            a = _neumannize(a, r0)
        terms.append((np.asarray(m, float) / mn, a))
    return PlaneWaveBallField(domain, terms)


def harmonic_extension(domain, data, eps, kind="dirichlet", tol=TAIL_TOL):
    """Field of the harmonic extension of g(., ./eps) (or g-bar for eps=None).

    ``kind='neumann'`` returns the mean-zero Neumann solution whose normal
    derivative is ``g - mean(g)``.
    """
    if not domain.is_ball:
        raise UnsupportedData("spectral extension requires a ball", module="spectral")
    if domain.dim == 2:
        return _disk_field(domain, data, eps, kind, tol)
    if _is_zonal(domain, data, eps):
        coeffs = _zonal_coefficients(domain, data, eps, tol)
        if kind == "neumann":
            coeffs = _neumannize(coeffs, domain.radius)
        return ZonalBallField(domain, coeffs)
    if domain.dim == 3 and data.constant_coefficients:
        return _plane_wave_field(domain, data, eps, kind, tol)
    raise UnsupportedData("non-axisymmetric data with slow coefficients has no spectral path; "
                          "use the kernel quadrature solver", module="spectral")
