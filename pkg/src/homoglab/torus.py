"""Finite Fourier series on the unit torus T^d and oscillating boundary data.

A :class:`TorusFunction` stores a finite set of lattice modes ``m`` and
their amplitudes ``c_m``; it represents ``f(y) = sum_m c_m e^{2 pi i m.y}``.
Modes are kept in lexicographic order so every sum over them is performed
in the same order on every run.

:class:`BoundaryData` adds a slow variable: ``g(x, y) = sum_m c_m(x)
e^{2 pi i m.y}`` with ``x`` on the boundary, and ``g_eps(x) = g(x, x/eps)``.
"""
import json
import math

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_points(y, dim):
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {y.shape}")
    return y, single


class TorusFunction:
    """Band-limited 1-periodic function on T^d, scalar or vector valued.

    Parameters
    ----------
    dim : int
        Torus dimension d.
    modes : array_like of int, shape (K, d)
    coeffs : array_like of complex, shape (K,) or (K, N)
        Duplicate modes are rejected.
    """

    def __init__(self, dim, modes, coeffs):
        self.dim = int(dim)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.dim)
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape[0] != modes.shape[0]:
            raise ValueError("modes and coeffs have different lengths")
        if modes.shape[0]:
            order = np.lexsort(modes.T[::-1])
            modes = modes[order]
            coeffs = coeffs[order]
            if np.any(np.all(np.diff(modes, axis=0) == 0, axis=1)):
                raise ValueError("duplicate lattice mode in coefficient map")
        self.modes = modes
        self.coeffs = coeffs
        self.modes.setflags(write=False)
        self.coeffs.setflags(write=False)

    # -- construction -------------------------------------------------
    @classmethod
    def from_dict(cls, dim, mapping):
        """Build from ``{m_tuple: amplitude}``."""
        keys = list(mapping)
        modes = np.array(keys, dtype=np.int64).reshape(len(keys), dim)
        coeffs = np.array([mapping[k] for k in keys], dtype=np.complex128)
        return cls(dim, modes, coeffs)

    @classmethod
    def constant(cls, dim, value):
        return cls(dim, np.zeros((1, dim), dtype=np.int64), [value])

    @classmethod
    def character(cls, m, amplitude=1.0):
        """The single mode ``amplitude * Ex(m . y)``."""
        m = np.atleast_1d(np.asarray(m, dtype=np.int64))
        return cls(m.size, m[None, :], [amplitude])

    @property
    def value_shape(self):
        return self.coeffs.shape[1:]

    @property
    def band_limit(self):
        """Largest sup-norm of a stored mode (0 for constants)."""
        if not self.modes.shape[0]:
            return 0
        return int(np.abs(self.modes).max())

    def mode_norms(self):
        return np.sqrt(np.sum(self.modes.astype(float) ** 2, axis=1))

    def coefficient(self, m):
        m = np.asarray(m, dtype=np.int64)
        hit = np.all(self.modes == m, axis=1)
        if not hit.any():
            return np.zeros(self.value_shape, dtype=np.complex128) if self.value_shape else 0j
        return self.coeffs[np.argmax(hit)]

    # -- algebra ------------------------------------------------------
    def _combine(self, other, sign):
        table = {tuple(m): c.copy() for m, c in zip(self.modes, self.coeffs)}
        for m, c in zip(other.modes, other.coeffs):
            key = tuple(m)
            table[key] = table[key] + sign * c if key in table else sign * c
        return TorusFunction.from_dict(self.dim, table)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return TorusFunction(self.dim, self.modes, self.coeffs * scalar)

    __rmul__ = __mul__

    def conj(self):
        """Complex conjugate function: c'_m = conj(c_{-m})."""
        return TorusFunction(self.dim, -self.modes, np.conj(self.coeffs))

    def is_real(self, tol=1e-14):
        other = self.conj()
        diff = self - other
        scale = max(1.0, float(np.abs(self.coeffs).sum()))
        return bool(np.all(np.abs(diff.coeffs) <= tol * scale))

    # -- operations ---------------------------------------------------
    def evaluate(self, y):
        """Return ``sum_m c_m e^{2 pi i m.y}`` at one point or an (n, d) array."""
        pts, single = _as_points(y, self.dim)
        phase = np.exp(1j * TWO_PI * (pts @ self.modes.T.astype(float)))
        out = phase @ self.coeffs
        return out[0] if single else out

    __call__ = evaluate

    def mean(self):
        """Torus integral, i.e. the zero-mode amplitude."""
        return self.coefficient(np.zeros(self.dim, dtype=np.int64))

    def decay_sum(self, tau):
        """sum over nonzero modes of |c_m| / |m|^tau (Euclidean |m|)."""
        norms = self.mode_norms()
        keep = norms > 0
        mags = np.abs(self.coeffs[keep])
        if mags.ndim > 1:
            mags = np.sqrt(np.sum(mags ** 2, axis=1))
        return float(np.sum(mags / norms[keep] ** tau))

    def lipschitz_bound(self):
        """Upper bound sum_m 2 pi |m| |c_m| for the Lipschitz constant."""
        mags = np.abs(self.coeffs)
        if mags.ndim > 1:
            mags = np.sqrt(np.sum(mags ** 2, axis=1))
        return float(np.sum(TWO_PI * self.mode_norms() * mags))

    def sup_norm(self, points_per_axis=None):
        """sup |f| estimated on a uniform grid (exact for a single mode)."""
        if self.modes.shape[0] <= 1:
            mags = np.abs(self.coeffs)
            return float(np.sqrt(np.sum(mags ** 2))) if mags.size else 0.0
        n = points_per_axis or max(32, 8 * self.band_limit + 1)
        axis = np.arange(n) / n
        grid = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), -1).reshape(-1, self.dim)
        vals = self.evaluate(grid)
        if vals.ndim > 1:
            vals = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
        return float(np.max(np.abs(vals)))

    def spectral_derivative(self, alpha):
        """Coefficients of D^alpha f (alpha a multi-index)."""
        alpha = np.asarray(alpha, dtype=int)
        factor = np.prod((1j * TWO_PI * self.modes) ** alpha, axis=1)
        if self.coeffs.ndim > 1:
            factor = factor[:, None]
        return TorusFunction(self.dim, self.modes, self.coeffs * factor)

    def l2_norm(self):
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def convolve(self, other):
        """Coefficients of the pointwise product f * g (exact convolution)."""
        table = {}
        for m, a in zip(self.modes, self.coeffs):
            for n, b in zip(other.modes, other.coeffs):
                key = tuple(m + n)
                table[key] = table.get(key, 0) + a * b
        return TorusFunction.from_dict(self.dim, table)

    # -- serialization ------------------------------------------------
    def to_json_dict(self):
        if self.coeffs.ndim > 1:
            raise ValueError("JSON schema covers scalar functions only")
        return {
            "dim": self.dim,
            "coeffs": [
                {"m": [int(v) for v in m], "re": float(c.real), "im": float(c.imag)}
                for m, c in zip(self.modes, self.coeffs)
            ],
        }

    @classmethod
    def from_json_dict(cls, obj):
        dim = int(obj["dim"])
        seen = set()
        modes, coeffs = [], []
        for entry in obj["coeffs"]:
            m = tuple(int(v) for v in entry["m"])
            if len(m) != dim:
                raise ValueError(f"mode {m} does not have dimension {dim}")
            if m in seen:
                raise ValueError(f"duplicate mode {m} in coefficient list")
            seen.add(m)
            modes.append(m)
            coeffs.append(complex(entry.get("re", 0.0), entry.get("im", 0.0)))
        return cls(dim, np.array(modes, dtype=np.int64).reshape(-1, dim), coeffs)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    def __repr__(self):
        return f"TorusFunction(dim={self.dim}, n_modes={self.modes.shape[0]})"


class BoundaryData:
    """Oscillating boundary data g(x, y) with slow coefficients c_m(x).

    Parameters
    ----------
    dim : int
    modes : (K, d) int array
    coeff_fn : callable or None
        ``coeff_fn(points) -> (n, K)`` (or ``(n, K, N)``) complex array of
        ``c_m(x)`` at boundary points ``x``.  ``None`` means constant
        coefficients given by ``coeffs``.
    coeffs : (K,) or (K, N) complex, optional
        Constant coefficients, used when ``coeff_fn`` is None.
    """

    def __init__(self, dim, modes, coeff_fn=None, coeffs=None, value_shape=None):
        self.dim = int(dim)
        self.modes = np.asarray(modes, dtype=np.int64).reshape(-1, self.dim)
        if coeff_fn is None and coeffs is None:
            raise ValueError("need either coeff_fn or constant coeffs")
        self._fn = coeff_fn
        self._const = None if coeffs is None else np.asarray(coeffs, dtype=np.complex128)
        if value_shape is None:
            value_shape = self._const.shape[1:] if self._const is not None else ()
        self.value_shape = tuple(value_shape)

    @classmethod
    def from_torus(cls, f):
        """Data depending on the periodic variable only."""
        return cls(f.dim, f.modes, coeffs=f.coeffs, value_shape=f.value_shape)

    @property
    def constant_coefficients(self):
        return self._fn is None

    @property
    def max_mode_norm(self):
        if not self.modes.shape[0]:
            return 0.0
        return float(np.sqrt(np.sum(self.modes.astype(float) ** 2, axis=1)).max())

    def coefficients(self, points):
        """c_m(x) for every stored mode, shape (n, K) or (n, K, N)."""
        pts, _ = _as_points(points, self.dim)
        if self._fn is None:
            return np.broadcast_to(self._const, (pts.shape[0],) + self._const.shape)
        return np.asarray(self._fn(pts), dtype=np.complex128)

    def at(self, x):
        """The torus function g(x, .) at one boundary point."""
        c = self.coefficients(np.asarray(x, dtype=float)[None, :])[0]
        return TorusFunction(self.dim, self.modes, c)

    def sample(self, points, eps):
        """g(x, x/eps) at boundary points; ``eps=None`` gives the mean g-bar(x)."""
        pts, single = _as_points(points, self.dim)
        coef = self.coefficients(pts)
        if eps is None:
            zero = np.all(self.modes == 0, axis=1)
            out = coef[:, zero].sum(axis=1)
        else:
            phase = np.exp(1j * (TWO_PI / eps) * (pts @ self.modes.T.astype(float)))
            if coef.ndim == 3:
                out = np.einsum("nk,nkj->nj", phase, coef)
            else:
                out = np.sum(phase * coef, axis=1)
        return out[0] if single else out

    def averaged(self):
        """Non-oscillating data g-bar(x) (mode 0 only)."""
        zero = np.all(self.modes == 0, axis=1)
        idx = np.flatnonzero(zero)
        z = np.zeros((1, self.dim), dtype=np.int64)
        if self._fn is None:
            c = self._const[idx] if idx.size else np.zeros((1,) + self.value_shape, complex)
            return BoundaryData(self.dim, z, coeffs=c.reshape((1,) + self.value_shape))
        fn = self._fn
        shape = self.value_shape

        def mean_fn(pts):
            c = np.asarray(fn(pts), dtype=np.complex128)
            if not idx.size:
                return np.zeros((pts.shape[0], 1) + shape, complex)
            return c[:, idx]

        return BoundaryData(self.dim, z, coeff_fn=mean_fn, value_shape=shape)

    def component(self, j):
        """Scalar data for component j of vector-valued data."""
        if not self.value_shape:
            return self
        if self._fn is None:
            return BoundaryData(self.dim, self.modes, coeffs=self._const[:, j])
        fn = self._fn
        return BoundaryData(self.dim, self.modes, coeff_fn=lambda p: np.asarray(fn(p))[:, :, j])

    def scaled(self, factor):
        if self._fn is None:
            return BoundaryData(self.dim, self.modes, coeffs=self._const * factor)
        fn = self._fn
        return BoundaryData(self.dim, self.modes, coeff_fn=lambda p: np.asarray(fn(p)) * factor,
                            value_shape=self.value_shape)

    def sup_bound(self, points):
        """sum_m max_x |c_m(x)| over the given points: a bound on ||g||_inf."""
        c = np.abs(self.coefficients(points))
        if c.ndim == 3:
            c = np.sqrt(np.sum(c ** 2, axis=2))
        return float(np.sum(c.max(axis=0))) if c.size else 0.0

    def __add__(self, other):
        return combine([self, other], [1.0, 1.0])

    def __sub__(self, other):
        return combine([self, other], [1.0, -1.0])


def combine(datas, weights):
    """Linear combination sum_k w_k g_k with the union mode set."""
    dim = datas[0].dim
    table = {}
    for d in datas:
        for m in d.modes:
            table.setdefault(tuple(m), len(table))
    modes = np.array(sorted(table), dtype=np.int64).reshape(-1, dim)
    index = {tuple(m): i for i, m in enumerate(modes)}
    shape = datas[0].value_shape
    maps = [np.array([index[tuple(m)] for m in d.modes], dtype=int) for d in datas]

    if all(d.constant_coefficients for d in datas):
        c = np.zeros((modes.shape[0],) + shape, dtype=np.complex128)
        for d, w, mp in zip(datas, weights, maps):
            np.add.at(c, mp, w * d._const)
        return BoundaryData(dim, modes, coeffs=c)

    def fn(pts):
        out = np.zeros((pts.shape[0], modes.shape[0]) + shape, dtype=np.complex128)
        for d, w, mp in zip(datas, weights, maps):
            out[:, mp] += w * d.coefficients(pts)
        return out

    return BoundaryData(dim, modes, coeff_fn=fn, value_shape=shape)


def derivative_l2_norm(f, k):
    """(sum_{|alpha|=k} ||D^alpha f||_2^2)^{1/2} via spectral differentiation."""
    total = 0.0
    for alpha in _multi_indices(f.dim, k):
        d = f.spectral_derivative(alpha)
        total += d.l2_norm() ** 2
    return math.sqrt(total)


def _multi_indices(dim, order):
    if dim == 1:
        yield (order,)
        return
    for first in range(order + 1):
        for rest in _multi_indices(dim - 1, order - first):
            yield (first,) + rest
