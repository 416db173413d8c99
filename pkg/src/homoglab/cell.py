"""Periodic coefficient tensors, cell problems and the homogenized boundary
data built from them.

Index conventions: ``A[alpha, beta, i, j]`` is the coefficient of
``d_alpha (A^{alpha beta}_{ij} d_beta u^j)``; Greek indices run over space
(``d``), Latin over components (``N``).  Fourier modes follow the
``Ex(m . y) = exp(2 pi i m . y)`` convention of :mod:`homoglab.torus`.
"""
import json
import math
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import (ConditionViolated, IllConditioned, ResolutionError, SingularMatrix,
                     UnsupportedDimension)
from .geometry import normal
from .torus import BoundaryData, TorusFunction

TWO_PI = 2.0 * math.pi
DIVERGENCE_TOL = 1e-12
CELL_TOL = 1e-8
COND_LIMIT = 1e12
MAX_CELL_UNKNOWNS = 6000


def _sumset(a, b):
    s = (a[:, None, :] + b[None, :, :]).reshape(-1, a.shape[1])
    return np.unique(s, axis=0)


class PeriodicTensor:
    """Band-limited periodic tensor A^{alpha beta}_{ij}(y) on T^d.

    Parameters
    ----------
    modes : (K, d) int array
        Union of the modes used by any entry.
    coeffs : (K, d, d, N, N) complex array
        ``coeffs[k, alpha, beta, i, j] = c_{m_k}(A^{alpha beta}_{ij})``.
    """

    def __init__(self, modes, coeffs):
        modes = np.asarray(modes, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.ndim != 5 or coeffs.shape[1] != coeffs.shape[2] or coeffs.shape[3] != coeffs.shape[4]:
            raise ValueError("coeffs must have shape (K, d, d, N, N)")
        self.dim = coeffs.shape[1]
        self.n_comp = coeffs.shape[3]
        modes = modes.reshape(-1, self.dim)
        if modes.shape[0] != coeffs.shape[0]:
            raise ValueError("modes and coeffs have different lengths")
        # merge duplicates and drop empty modes so the mode set is canonical
        uniq, inv = np.unique(modes, axis=0, return_inverse=True)
        merged = np.zeros((uniq.shape[0],) + coeffs.shape[1:], dtype=np.complex128)
        np.add.at(merged, inv.ravel(), coeffs)
        keep = np.any(merged != 0, axis=(1, 2, 3, 4)) | np.all(uniq == 0, axis=1)
        self.modes = uniq[keep]
        self.coeffs = merged[keep]
        self.modes.setflags(write=False)
        self.coeffs.setflags(write=False)

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, matrix):
        """Constant tensor from a (d, d) (N = 1) or (d, d, N, N) array."""
        a = np.asarray(matrix, dtype=float)
        if a.ndim == 2:
            a = a[:, :, None, None]
        return cls(np.zeros((1, a.shape[0]), dtype=np.int64), a[None])

    @classmethod
    def identity(cls, dim, n_comp=1):
        a = np.einsum("ab,ij->abij", np.eye(dim), np.eye(n_comp))
        return cls.constant(a)

    @classmethod
    def from_entries(cls, dim, n_comp, entries):
        """Build from ``{(alpha, beta, i, j): TorusFunction}`` (missing entries are zero)."""
        table = {}
        for (a, b, i, j), f in entries.items():
            if f.dim != dim:
                raise ValueError("entry dimension does not match the tensor")
            for m, c in zip(f.modes, f.coeffs):
                block = table.setdefault(tuple(m), np.zeros((dim, dim, n_comp, n_comp), complex))
                block[a, b, i, j] += c
        if not table:
            table[(0,) * dim] = np.zeros((dim, dim, n_comp, n_comp), complex)
        keys = sorted(table)
        return cls(np.array(keys, dtype=np.int64), np.stack([table[k] for k in keys]))

    @classmethod
    def identity_plus_curl(cls, potentials):
        """Scalar (N = 1) tensor whose rows are ``e_gamma + curl(potential_gamma)``.

        Rows built this way are divergence free for any band-limited
        potentials.  In d = 2 ``potentials[gamma]`` is a scalar
        :class:`TorusFunction` phi and the row perturbation is
        ``(d_2 phi, -d_1 phi)``; in d = 3 it is a list of three scalar
        functions (psi_1, psi_2, psi_3) and the perturbation is curl psi.
        """
        dim = len(potentials)
        entries = {(g, g, 0, 0): TorusFunction.constant(dim, 1.0) for g in range(dim)}

        def add(key, f):
            entries[key] = entries[key] + f if key in entries else f

        def deriv(f, axis):
            alpha = [0] * dim
            alpha[axis] = 1
            return f.spectral_derivative(alpha)

        for g, pot in enumerate(potentials):
            if dim == 2:
                add((g, 0, 0, 0), deriv(pot, 1))
                add((g, 1, 0, 0), deriv(pot, 0) * -1.0)
            elif dim == 3:
                p1, p2, p3 = pot
                add((g, 0, 0, 0), deriv(p3, 1) - deriv(p2, 2))
                add((g, 1, 0, 0), deriv(p1, 2) - deriv(p3, 0))
                add((g, 2, 0, 0), deriv(p2, 0) - deriv(p1, 1))
            else:
                raise UnsupportedDimension("curl construction needs d = 2 or 3", module="cell_homog")
        return cls.from_entries(dim, 1, entries)

    # -- access -------------------------------------------------------
    def entry(self, alpha, beta, i, j):
        return TorusFunction(self.dim, self.modes, self.coeffs[:, alpha, beta, i, j])

    def coefficient(self, m):
        """c_m(A) as a (d, d, N, N) array (zero when m is not stored)."""
        hit = np.all(self.modes == np.asarray(m, dtype=np.int64), axis=1)
        if not hit.any():
            return np.zeros(self.coeffs.shape[1:], dtype=np.complex128)
        return self.coeffs[np.argmax(hit)]

    @property
    def mean(self):
        return self.coefficient(np.zeros(self.dim, dtype=np.int64))

    @property
    def is_constant(self):
        return bool(np.all(self.modes == 0))

    @property
    def band_limit(self):
        return int(np.abs(self.modes).max()) if self.modes.size else 0

    def evaluate(self, y):
        """A(y) at torus points, shape (n, d, d, N, N) (complex)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        phase = np.exp(1j * TWO_PI * (y @ self.modes.T.astype(float)))
        return np.einsum("nk,kabij->nabij", phase, self.coeffs)

    def is_real(self, tol=1e-14):
        """Conjugate symmetry c_{-m} = conj(c_m) for every stored mode."""
        scale = max(1.0, float(np.abs(self.coeffs).max()))
        for m, c in zip(self.modes, self.coeffs):
            if np.abs(self.coefficient(-m) - np.conj(c)).max() > tol * scale:
                return False
        return True

    def ellipticity(self, c=None, grid=16, n_xi=100, seed=0):
        """Sampled ellipticity constant.

        Evaluates ``A(y) xi . xi / |xi|^2`` on a ``grid^d`` lattice for
        ``n_xi`` random ``xi`` in R^{d x N}.

        Returns
        -------
        ok : bool
            The estimate is positive and, if ``c`` is given, at least ``c``.
        c_est : float
            ``min(min ratio, 1 / max ratio)``.
        """
        axis = np.arange(grid) / grid
        pts = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), -1).reshape(-1, self.dim)
        vals = self.evaluate(pts).real if not self.is_constant else self.mean.real[None]
        xi = np.random.default_rng(seed).standard_normal((n_xi, self.dim, self.n_comp))
        xi /= np.sqrt(np.sum(xi ** 2, axis=(1, 2)))[:, None, None]
        q = np.einsum("nabij,sai,sbj->ns", vals, xi, xi)
        c_est = float(min(q.min(), 1.0 / q.max())) if q.max() > 0 else float(q.min())
        ok = c_est > 0 and (c is None or c_est >= c)
        return bool(ok), c_est

    # -- serialization ------------------------------------------------
    def to_json_dict(self):
        entries = []
        d, n = self.dim, self.n_comp
        for a in range(d):
            for b in range(d):
                for i in range(n):
                    for j in range(n):
                        c = self.coeffs[:, a, b, i, j]
                        nz = np.flatnonzero(c != 0)
                        if not nz.size:
                            continue
                        f = TorusFunction(d, self.modes[nz], c[nz]).to_json_dict()
                        entries.append({"alpha": a, "beta": b, "i": i, "j": j,
                                        "coeffs": f["coeffs"]})
        return {"dim": d, "n_comp": n, "entries": entries}

    @classmethod
    def from_json_dict(cls, obj):
        dim, n = int(obj["dim"]), int(obj.get("n_comp", 1))
        entries = {}
        for e in obj["entries"]:
            key = (int(e["alpha"]), int(e["beta"]), int(e["i"]), int(e["j"]))
            if key in entries:
                raise ValueError(f"duplicate tensor entry {key}")
            if not (0 <= key[0] < dim and 0 <= key[1] < dim and 0 <= key[2] < n and 0 <= key[3] < n):
                raise ValueError(f"tensor entry {key} out of range")
            entries[key] = TorusFunction.from_json_dict({"dim": dim, "coeffs": e["coeffs"]})
        return cls.from_entries(dim, n, entries)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    def __repr__(self):
        return f"PeriodicTensor(dim={self.dim}, N={self.n_comp}, n_modes={self.modes.shape[0]})"


def check_divergence_free(A, tol=DIVERGENCE_TOL):
    """Test d_alpha A^{gamma alpha}_{ki} = 0 on the stored coefficients.

    Returns
    -------
    ok : bool
        True iff the residual is at most ``tol``.
    residual : float
        ``max over (k, i, gamma, m) of 2 pi |sum_alpha m_alpha c_m(A^{gamma alpha}_{ki})|``,
        the largest Fourier coefficient of the row divergence.
    """
    # div row gamma at mode m: sum_alpha 2 pi i m_alpha c_m(A^{gamma alpha}_{ki})
    div = TWO_PI * np.einsum("ma,mgaki->mgki", A.modes.astype(float), A.coeffs)
    residual = float(np.abs(div).max()) if div.size else 0.0
    return residual <= tol, residual


# ---------------------------------------------------------------------------
# cell problem

class EffectiveTensor:
    """Constant effective tensor with the correctors that produced it.

    Attributes
    ----------
    Ahat : (d, d, N, N) float array
    correctors : dict
        ``(gamma, k) -> TorusFunction`` of shape (N,) values: chi^gamma_{.k}.
    residual : float
        Final weak-form residual (largest flux-divergence coefficient,
        relative to the coefficient scale of A).
    history : list of (n_modes, residual)
    """

    def __init__(self, Ahat, correctors, residual, history, cond):
        self.Ahat = np.asarray(Ahat, dtype=float)
        self.dim = self.Ahat.shape[0]
        self.n_comp = self.Ahat.shape[2]
        self.correctors = correctors
        self.residual = float(residual)
        self.history = list(history)
        self.cond = float(cond)

    def as_tensor(self):
        return PeriodicTensor.constant(self.Ahat)

    def ellipticity(self, c=None, n_xi=100, seed=0):
        return self.as_tensor().ellipticity(c=c, grid=1, n_xi=n_xi, seed=seed)

    def to_json_dict(self):
        return {"dim": self.dim, "n_comp": self.n_comp, "Ahat": self.Ahat.tolist(),
                "residual": self.residual, "cond": self.cond,
                "history": [[int(k), float(r)] for k, r in self.history]}


class _LatticeIndex:
    """Vectorized lookup of lattice points in a fixed set (-1 when absent)."""

    def __init__(self, points, reach):
        self.points = points
        self.base = 2 * (int(np.abs(points).max()) + int(reach)) + 1
        self.off = self.base // 2
        keys = self._keys(points)
        self.order = np.argsort(keys)
        self.sorted = keys[self.order]

    def _keys(self, v):
        k = np.zeros(v.shape[0], dtype=np.int64)
        for a in range(v.shape[1]):
            k = k * self.base + (v[:, a] + self.off)
        return k

    def find(self, v):
        v = np.atleast_2d(v)
        inside = np.all(np.abs(v) <= self.off, axis=1)
        keys = self._keys(np.clip(v, -self.off, self.off))
        pos = np.clip(np.searchsorted(self.sorted, keys), 0, self.sorted.size - 1)
        hit = inside & (self.sorted[pos] == keys)
        return np.where(hit, self.order[pos], -1)


def _cell_system(A, S, index):
    """Galerkin matrix M[(n,i),(n',j)] = n_a n'_b c_{n-n'}(A^{ab}_{ij}) on modes S."""
    N = A.n_comp
    K = S.shape[0]
    M = np.zeros((K, N, K, N), dtype=np.complex128)
    Sf = S.astype(float)
    cols_all = np.arange(K)
    for k, m in enumerate(A.modes):
        rows = index.find(S + m)
        ok = rows >= 0
        rows, cols = rows[ok], cols_all[ok]
        if rows.size:
            M[rows, :, cols, :] += np.einsum("ra,rb,abij->rij", Sf[rows], Sf[cols], A.coeffs[k])
    return M.reshape(K * N, K * N)


def _flux_divergence(A, S, chi, gamma, k, T, t_index):
    """Coefficients on modes T of div(A(grad chi + e_gamma e_k)) / (2 pi i).

    ``chi`` is (|S|, N).  Returns (|T|, N).
    """
    Tf = T.astype(float)
    out = np.zeros((T.shape[0], A.n_comp), dtype=np.complex128)
    # flux F^a_i(n) = sum_{n'} c_{n-n'}(A^{ab}_{ij}) 2 pi i n'_b chi_j(n') + c_n(A^{a gamma}_{ik})
    grad = TWO_PI * 1j * S.astype(float)[:, :, None] * chi[:, None, :]
    for km, m in enumerate(A.modes):
        c = A.coeffs[km]
        r = t_index.find(S + m)
        ok = r >= 0
        if ok.any():
            flux = np.einsum("abij,sbj->sai", c, grad[ok])
            np.add.at(out, r[ok], np.einsum("sa,sai->si", Tf[r[ok]], flux))
    r = t_index.find(A.modes)
    for km in np.flatnonzero(r >= 0):
        out[r[km]] += Tf[r[km]] @ A.coeffs[km][:, gamma, :, k]
    return out


def solve_cell(A, tol=CELL_TOL, max_unknowns=MAX_CELL_UNKNOWNS):
    """Effective tensor from the periodic cell problems.

    For each direction gamma and component k find mean-zero periodic
    chi with ``div(A(grad chi + e_gamma e_k)) = 0``, then
    ``Ahat e_gamma e_k = int_T A(grad chi + e_gamma e_k)``.

    The Galerkin space is spanned by the nonzero lattice points reachable
    as sums of at most L stored modes of A; L doubles until the flux
    divergence, measured on the space enlarged by one more convolution
    with A, is at most ``tol`` relative to the coefficient scale of A.

    Raises
    ------
    IllConditioned
        If the (diagonally scaled) Galerkin matrix has condition estimate
        above 1e12.
    ResolutionError
        If the residual target is not met within ``max_unknowns``.
    """
    d, N = A.dim, A.n_comp
    mean = A.mean.real
    nonzero = A.modes[np.any(A.modes != 0, axis=1)]
    zero = np.zeros((1, d), dtype=np.int64)
    if not nonzero.size:
        corr = {(g, k): TorusFunction(d, zero, np.zeros((1, N))) for g in range(d) for k in range(N)}
        return EffectiveTensor(mean, corr, 0.0, [(0, 0.0)], 1.0)

    scale = float(np.abs(A.coeffs).sum(axis=0).max())
    reach = int(np.abs(A.modes).max())
    gen = np.vstack([zero, nonzero])
    span = gen
    history = []
    while True:
        S = span[np.any(span != 0, axis=1)]
        if S.shape[0] * N > max_unknowns:
            raise ResolutionError("cell problem did not reach its residual target",
                                  module="cell_homog", guard="mode-set growth")
        s_index = _LatticeIndex(S, reach)
        M = _cell_system(A, S, s_index)
        # symmetric diagonal scaling by 1/|n| removes the |n|^2 growth
        dscale = np.repeat(1.0 / np.sqrt(np.sum(S.astype(float) ** 2, axis=1)), N)
        Ms = M * dscale[:, None] * dscale[None, :]
        with warnings.catch_warnings():
            # a singular factor is reported through the condition estimate below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu = sla.lu_factor(Ms, check_finite=False)
        anorm = float(np.abs(Ms).sum(axis=0).max())
        rcond, _ = sla.lapack.zgecon(lu[0], anorm, norm="1")
        cond = 1.0 / rcond if rcond > 0 else math.inf
        if cond > COND_LIMIT:
            raise IllConditioned(f"cell Galerkin condition estimate {cond:.3g}",
                                 module="cell_homog", guard="condition estimate")
        T = _sumset(span, gen)
        T = T[np.any(T != 0, axis=1)]
        t_index = _LatticeIndex(T, reach)
        Sf = S.astype(float)
        rhs_rows = s_index.find(A.modes)
        chis, worst = {}, 0.0
        for g in range(d):
            for k in range(N):
                # M chi = -(1 / 2 pi i) * sum_a n_a c_n(A^{a gamma}_{ik})
                b = np.zeros((S.shape[0], N), dtype=np.complex128)
                for km in np.flatnonzero(rhs_rows >= 0):
                    s_row = rhs_rows[km]
                    b[s_row] = Sf[s_row] @ A.coeffs[km][:, g, :, k]
                rhs = (-b / (TWO_PI * 1j)).ravel()
                y = sla.lu_solve(lu, rhs * dscale, check_finite=False)
                chi = (y * dscale).reshape(S.shape[0], N)
                chis[(g, k)] = chi
                res = _flux_divergence(A, S, chi, g, k, T, t_index)
                worst = max(worst, float(np.abs(res).max()) / scale)
        history.append((int(S.shape[0]), worst))
        if worst <= tol:
            break
        span = _sumset(span, span)

    # Ahat e_g e_k = mean(A) e_g e_k + sum_n c_{-n}(A) 2 pi i n chi(n)
    Ahat = np.array(mean, dtype=complex)
    pair = s_index.find(-A.modes)
    for (g, k), chi in chis.items():
        for km in np.flatnonzero(pair >= 0):
            s_row = pair[km]
            grad = TWO_PI * 1j * Sf[s_row][:, None] * chi[s_row][None, :]
            Ahat[:, g, :, k] += np.einsum("abij,bj->ai", A.coeffs[km], grad)
    corr = {key: TorusFunction(d, S, chi) for key, chi in chis.items()}
    return EffectiveTensor(Ahat.real, corr, history[-1][1], history, cond)


# ---------------------------------------------------------------------------
# boundary algebra

def _ahat_array(Ahat):
    a = Ahat.Ahat if isinstance(Ahat, EffectiveTensor) else np.asarray(Ahat, dtype=float)
    if a.ndim == 2:
        a = a[:, :, None, None]
    return a


def h_matrix(Ahat, n):
    """Inverse of ``M_{ik} = Ahat^{ab}_{ik} n_a n_b`` for a unit vector n.

    ``n`` may be (d,) or (P, d); the result is (N, N) or (P, N, N).
    """
    a = _ahat_array(Ahat)
    n = np.asarray(n, dtype=float)
    single = n.ndim == 1
    n = np.atleast_2d(n)
    if np.any(np.abs(np.linalg.norm(n, axis=1) - 1.0) > 1e-9):
        raise ValueError("n must be a unit vector")
    M = np.einsum("pa,pb,abik->pik", n, n, a)
    cond = np.linalg.cond(M)
    if np.any(~np.isfinite(cond)) or np.any(cond > 1e14):
        raise SingularMatrix("Ahat n n is singular; Ahat is not elliptic",
                             module="cell_homog", guard="h-matrix")
    h = np.linalg.inv(M)
    return h[0] if single else h


def _require_divergence_free(A):
    ok, residual = check_divergence_free(A)
    if not ok:
        raise ConditionViolated(f"rows of A are not divergence free (residual {residual:.3g})",
                                module="cell_homog", guard="divergence-free rows")


def omega_eps(A, Ahat, domain, y, epsilon):
    """``omega^{ij}(y) = h_{ik}(y) n_a(y) n_b(y) A^{ab}_{kj}(y / eps)`` at boundary points.

    Returns (N, N) for one point or (P, N, N).
    """
    _require_divergence_free(A)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    n = normal(domain, y)
    h = h_matrix(Ahat, n)
    a = A.evaluate(y / epsilon)
    w = np.einsum("pik,pa,pb,pabkj->pij", h, n, n, a)
    w = w.real if A.is_real() else w
    return w[0] if single else w


def _slow_factor(A, Ahat, domain, pts):
    """``h_{ik}(y) n_a n_b c_m(A^{ab}_{kj})`` for every stored mode m: (P, K_A, N, N)."""
    n = normal(domain, pts)
    h = h_matrix(Ahat, n)
    return np.einsum("pil,pa,pb,mablj->pmij", h, n, n, A.coeffs)


def _data_components(data, pts):
    c = data.coefficients(pts)
    return c[..., None] if c.ndim == 2 else c


def _check_shapes(A, data):
    if data.dim != A.dim:
        raise UnsupportedDimension("data and tensor dimensions differ", module="cell_homog")
    n_data = data.value_shape[0] if data.value_shape else 1
    if n_data != A.n_comp:
        raise ValueError("data has the wrong number of components")


def g_star(A, Ahat, domain, data):
    """Homogenized boundary data ``g*_i = h_ik n_a n_b sum_m c_m(A^{ab}_{kj}) c_{-m}(g_j)``.

    Computed by exact convolution of the finite coefficient sets; the
    result is non-oscillating data (mode 0 only) with the value shape of
    ``data``.
    """
    _require_divergence_free(A)
    _check_shapes(A, data)
    dmap = {tuple(m): k for k, m in enumerate(data.modes)}
    pair = np.array([dmap.get(tuple(-m), -1) for m in A.modes])
    shape = data.value_shape
    zero = np.zeros((1, A.dim), dtype=np.int64)

    def fn(pts):
        slow = _slow_factor(A, Ahat, domain, pts)
        g = _data_components(data, pts)
        out = np.zeros((pts.shape[0], A.n_comp), dtype=np.complex128)
        for k, j in enumerate(pair):
            if j >= 0:
                out += np.einsum("pij,pj->pi", slow[:, k], g[:, j])
        return out[:, None, :] if shape else out[:, :1]

    return BoundaryData(A.dim, zero, coeff_fn=fn, value_shape=shape)


def oscillating_boundary_data(A, Ahat, domain, data):
    """The product ``omega_eps g_eps`` as oscillating boundary data.

    Both factors are finite Fourier sums in ``y / eps`` with slow
    coefficients, so the product has modes ``m + m'`` with coefficients
    ``sum_{m + m' = p} h_ik n_a n_b c_m(A^{ab}_{kj}) c_{m'}(g_j; y)``.
    Its mode-0 part is :func:`g_star`.
    """
    _require_divergence_free(A)
    _check_shapes(A, data)
    table = {}
    pairs = []
    for ka, m in enumerate(A.modes):
        for kg, m2 in enumerate(data.modes):
            key = tuple(m + m2)
            table.setdefault(key, len(table))
            pairs.append((ka, kg, table[key]))
    modes = np.array(list(table), dtype=np.int64).reshape(-1, A.dim)
    pairs = np.array(pairs, dtype=int)
    shape = data.value_shape

    def fn(pts):
        slow = _slow_factor(A, Ahat, domain, pts)
        g = _data_components(data, pts)
        out = np.zeros((pts.shape[0], modes.shape[0], A.n_comp), dtype=np.complex128)
        for ka, kg, p in pairs:
            out[:, p] += np.einsum("pij,pj->pi", slow[:, ka], g[:, kg])
        return out if shape else out[:, :, 0]

    return BoundaryData(A.dim, modes, coeff_fn=fn, value_shape=shape)


def verify_theorem13_pipeline(A, g, domain, p, eps_list, ahat_tol=1e-8, guard=True):
    """Sweep ``||v_eps - u_0||_{L^p}`` where v_eps has data omega_eps g_eps and u_0 has g*.

    Requires d = 3, divergence-free rows and an effective tensor equal to
    the identity (so both problems are Laplace problems).  The rate is
    fitted under the model ``eps |ln eps|`` and passes iff the slope is at
    least ``1/p - 0.1``.
    """
    from .norms import Problem, fit_rate, run_sweep

    if domain.dim != 3 or A.dim != 3:
        raise UnsupportedDimension("the homogenized-data pipeline runs in d = 3",
                                   module="cell_homog")
    _require_divergence_free(A)
    eff = solve_cell(A)
    target = np.einsum("ab,ij->abij", np.eye(A.dim), np.eye(A.n_comp))
    dev = float(np.abs(eff.Ahat - target).max())
    if dev > ahat_tol:
        raise ConditionViolated(f"effective tensor differs from the identity by {dev:.3g}",
                                module="cell_homog", guard="Ahat = I")
    data = g if isinstance(g, BoundaryData) else BoundaryData.from_torus(g)
    product = oscillating_boundary_data(A, eff, domain, data)
    reference = g_star(A, eff, domain, data)
    problem = Problem("theorem13", domain, data=data, data_factory=lambda eps: product,
                      reference=reference, tag="theorem13")
    sweep = run_sweep(problem, [p], eps_list, guard=guard)
    eps, norms = sweep.arrays(float(p))
    fits = {model: fit_rate(eps, norms, model) for model in ("power", "log")}
    slope = fits["log"].slope
    return {
        "sweep": sweep,
        "fits": fits,
        "Ahat": eff.Ahat,
        "cell_residual": eff.residual,
        "slope": slope,
        "expected": 1.0 / float(p),
        "passed": bool(slope >= 1.0 / float(p) - 0.1),
    }
