"""Uniformly convex reference domains: balls and ellipsoids in d = 2, 3, 4.

Surface rules are product rules in the natural angular coordinates:
trapezoid in the circle angle (d=2), Gauss-Legendre in cos(polar) times
trapezoid in azimuth (d=3), and Gauss-Legendre in the two outer
hyperspherical angles times trapezoid in the last one (d=4).  Ellipsoid
rules map the sphere rule through ``y = a * u`` and carry the area Jacobian.

``resolution`` is a linear node density: the node spacing on a unit-radius
boundary is about ``1/resolution`` in every direction.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy import optimize
from scipy.special import gamma

from ._gauss import legendre_rule
from .errors import PointNotInterior, PointNotOnBoundary, UnsupportedDimension

SUPPORTED_DIMS = (2, 3, 4)


def sphere_area(dim, radius=1.0):
    """H^{d-1} measure of the sphere of given radius in R^d."""
    return 2.0 * math.pi ** (dim / 2) / gamma(dim / 2) * radius ** (dim - 1)


def ball_volume(dim, radius=1.0):
    return math.pi ** (dim / 2) / gamma(dim / 2 + 1) * radius ** dim


@dataclass(frozen=True)
class ConvexDomain:
    """Ball (equal semi-axes) or axis-aligned ellipsoid.

    Construct with :meth:`ball` or :meth:`ellipsoid`.
    """

    dim: int
    semi_axes: tuple
    center: tuple
    kind: str = "ball"

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise UnsupportedDimension(f"dimension {self.dim} not in {SUPPORTED_DIMS}",
                                       module="geometry")
        if len(self.semi_axes) != self.dim or len(self.center) != self.dim:
            raise ValueError("semi_axes/center length must equal dim")
        if min(self.semi_axes) <= 0:
            raise ValueError("semi-axes must be strictly positive")

    @classmethod
    def ball(cls, dim, radius=1.0, center=None):
        center = tuple(float(c) for c in (center if center is not None else [0.0] * dim))
        return cls(dim, (float(radius),) * dim, center, "ball")

    @classmethod
    def ellipsoid(cls, semi_axes, center=None):
        a = tuple(float(v) for v in semi_axes)
        center = tuple(float(c) for c in (center if center is not None else [0.0] * len(a)))
        return cls(len(a), a, center, "ellipsoid")

    @classmethod
    def from_config(cls, cfg):
        dim = int(cfg["dim"])
        if cfg.get("kind", "ball") == "ball":
            return cls.ball(dim, cfg.get("radius", 1.0), cfg.get("center"))
        return cls.ellipsoid(cfg["semi_axes"], cfg.get("center"))

    def to_config(self):
        if self.is_ball:
            return {"kind": "ball", "dim": self.dim, "radius": self.radius,
                    "center": list(self.center)}
        return {"kind": "ellipsoid", "dim": self.dim, "semi_axes": list(self.semi_axes),
                "center": list(self.center)}

    @property
    def is_ball(self):
        return len(set(self.semi_axes)) == 1

    @property
    def radius(self):
        if not self.is_ball:
            raise ValueError("radius is defined for balls only")
        return self.semi_axes[0]

    @property
    def axes(self):
        return np.asarray(self.semi_axes, dtype=float)

    @property
    def c(self):
        return np.asarray(self.center, dtype=float)

    @property
    def volume(self):
        return ball_volume(self.dim) * float(np.prod(self.axes))

    @property
    def inradius(self):
        return float(self.axes.min())

    def curvature_bounds(self):
        """(min, max) principal curvature; both positive for these domains."""
        a = self.axes
        if self.is_ball:
            return 1.0 / a[0], 1.0 / a[0]
        return float(a.min() / a.max() ** 2), float(a.max() / a.min() ** 2)

    @property
    def surface_area(self):
        if self.is_ball:
            return sphere_area(self.dim, self.radius)
        # reuse a converged rule; the integrand is smooth
        q = build_quadrature(self, 64 / self.inradius)
        return float(q.weights.sum())

    # -- implicit representation --------------------------------------
    def implicit(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.sum(((y - self.c) / self.axes) ** 2, axis=1) - 1.0

    def implicit_gradient(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return 2.0 * (y - self.c) / self.axes ** 2


def normal(domain, y, tol=1e-8):
    """Unit outward normal at boundary point(s) y."""
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    pts = np.atleast_2d(y)
    res = np.abs(domain.implicit(pts))
    if np.any(res > tol):
        raise PointNotOnBoundary(f"implicit residual {res.max():.3e} exceeds {tol:g}")
    g = domain.implicit_gradient(pts)
    n = g / np.linalg.norm(g, axis=1, keepdims=True)
    return n[0] if single else n


def _sphere_from_angles(dim, angles):
    """Unit-sphere points from hyperspherical angles (last angle azimuthal)."""
    out = np.empty(angles.shape[:-1] + (dim,))
    s = np.ones(angles.shape[:-1])
    for k in range(dim - 1):
        out[..., k] = s * np.cos(angles[..., k])
        s = s * np.sin(angles[..., k])
    out[..., dim - 1] = s
    return out


class SurfaceQuadrature:
    """Product surface rule; nodes are produced blockwise to bound memory.

    Attributes
    ----------
    domain : ConvexDomain
    resolution : float
        Linear node density (nodes per unit length).
    order : int
        Number of Gauss-Legendre points in the polar direction (d >= 3) or
        total nodes (d = 2); the rule integrates trigonometric/spherical
        polynomials up to about this degree exactly.
    """

    def __init__(self, domain, resolution, factors):
        self.domain = domain
        self.resolution = float(resolution)
        self._factors = factors
        self.order = factors["order"]
        self.size = factors["size"]
        self._nodes = None
        self._weights = None

    def blocks(self, max_nodes=1 << 20):
        """Yield (nodes, weights) blocks covering the rule in a fixed order."""
        f = self._factors
        dom = self.domain
        dim = dom.dim
        if dim == 2:
            t = f["angles"][0]
            for s in range(0, t.size, max_nodes):
                ang = t[s:s + max_nodes, None]
                u = _sphere_from_angles(2, ang)
                yield self._map(u, f["weights"][0][s:s + max_nodes])
            return
        outer = [f["angles"][k] for k in range(dim - 2)]
        outer_w = [f["weights"][k] for k in range(dim - 2)]
        phi, wphi = f["angles"][-1], f["weights"][-1]
        grids = np.meshgrid(*outer, indexing="ij")
        wgrids = np.meshgrid(*outer_w, indexing="ij")
        lead = np.stack([g.ravel() for g in grids], -1)
        lead_w = np.prod(np.stack([g.ravel() for g in wgrids], -1), axis=1)
        per = max(1, max_nodes // phi.size)
        for s in range(0, lead.shape[0], per):
            la = lead[s:s + per]
            ang = np.empty((la.shape[0], phi.size, dim - 1))
            ang[..., :-1] = la[:, None, :]
            ang[..., -1] = phi[None, :]
            u = _sphere_from_angles(dim, ang).reshape(-1, dim)
            w = (lead_w[s:s + per, None] * wphi[None, :]).ravel()
            yield self._map(u, w)

    def _map(self, u, w):
        dom = self.domain
        a = dom.axes
        nodes = dom.c + u * a
        if dom.is_ball:
            return nodes, w * a[0] ** (dom.dim - 1)
        jac = np.prod(a) * np.linalg.norm(u / a, axis=1)
        return nodes, w * jac

    @property
    def nodes(self):
        self._materialize()
        return self._nodes

    @property
    def weights(self):
        self._materialize()
        return self._weights

    def _materialize(self):
        if self._nodes is None:
            parts = list(self.blocks())
            self._nodes = np.concatenate([p[0] for p in parts])
            self._weights = np.concatenate([p[1] for p in parts])

    def integrate(self, fn, max_nodes=1 << 20):
        """sum_k w_k fn(y_k), evaluated blockwise; fn maps (n, d) -> (n, ...)."""
        total = None
        for nodes, w in self.blocks(max_nodes):
            part = np.tensordot(w, fn(nodes), axes=(0, 0))
            total = part if total is None else total + part
        return total


def build_quadrature(domain, resolution):
    """Surface rule with about ``resolution`` nodes per unit length."""
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    dim = domain.dim
    if dim not in SUPPORTED_DIMS:
        raise UnsupportedDimension(f"no surface rule for d={dim}", module="geometry")
    scale = float(domain.axes.max())
    if dim == 2:
        n = max(8, int(math.ceil(resolution * 2.0 * math.pi * scale)))
        t = 2.0 * math.pi * np.arange(n) / n
        factors = {"angles": [t], "weights": [np.full(n, 2.0 * math.pi / n)],
                   "order": n, "size": n}
        return SurfaceQuadrature(domain, resolution, factors)
    n_pol = max(4, int(math.ceil(resolution * math.pi * scale)))
    n_az = 2 * n_pol
    phi = 2.0 * math.pi * np.arange(n_az) / n_az
    wphi = np.full(n_az, 2.0 * math.pi / n_az)
    x, w = legendre_rule(n_pol)
    if dim == 3:
        factors = {"angles": [np.arccos(x), phi], "weights": [w, wphi],
                   "order": n_pol, "size": n_pol * n_az}
        return SurfaceQuadrature(domain, resolution, factors)
    # d = 4: angles (psi, theta, phi), element sin^2(psi) sin(theta)
    psi = 0.5 * math.pi * (x + 1.0)
    wpsi = 0.5 * math.pi * w * np.sin(psi) ** 2
    factors = {"angles": [psi, np.arccos(x), phi], "weights": [wpsi, w, wphi],
               "order": n_pol, "size": n_pol * n_pol * n_az}
    return SurfaceQuadrature(domain, resolution, factors)


def distance_to_boundary(domain, x, tol=1e-10):
    """Distance from interior point(s) x to the boundary."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if np.any(domain.implicit(pts) > 1e-12):
        raise PointNotInterior("point lies outside the closed domain")
    if domain.is_ball:
        d = domain.radius - np.linalg.norm(pts - domain.c, axis=1)
        d = np.maximum(d, 0.0)
    else:
        d = np.array([_ellipsoid_distance(domain, p, tol) for p in pts])
    return float(d[0]) if single else d


def _ellipsoid_distance(domain, x, tol):
    """Nearest-point distance via the Lagrange condition y = a^2 x / (a^2 + s).

    For an interior point the minimiser has s in (-min a^2, 0]; when x has
    zero components the secular equation can miss it, so the result is
    cross-checked against a coarse parametric search refined locally.
    """
    a = domain.axes
    z = x - domain.c
    a2 = a * a
    best = np.inf

    def secular(s):
        return np.sum((a * z / (a2 + s)) ** 2) - 1.0

    left = -a2.min() * (1.0 - 1e-15)
    if secular(left) > 0 and secular(0.0) <= 0:
        s = optimize.brentq(secular, left, 0.0, xtol=1e-16, rtol=1e-15, maxiter=500)
        best = np.linalg.norm(a2 * z / (a2 + s) - z)
    # parametric search (covers the degenerate cases)
    dim = domain.dim
    n = 181 if dim == 2 else 61
    grids = [np.linspace(0, np.pi, n)] * (dim - 2) + [np.linspace(0, 2 * np.pi, 2 * n)]
    mesh = np.stack(np.meshgrid(*grids, indexing="ij"), -1).reshape(-1, dim - 1)
    cand = _sphere_from_angles(dim, mesh) * a
    k = int(np.argmin(np.linalg.norm(cand - z, axis=1)))

    def dist(ang):
        return np.linalg.norm(_sphere_from_angles(dim, np.asarray(ang)) * a - z)

    res = optimize.minimize(dist, mesh[k], method="Nelder-Mead",
                            options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 20000})
    return float(min(best, res.fun))


@dataclass(frozen=True)
class TorusBall:
    """Ball in T^d (periodic metric) with a given center and radius."""

    center: tuple
    radius: float
    dim: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "dim", len(self.center))

    @classmethod
    def with_measure(cls, center, measure):
        dim = len(center)
        r = (measure / ball_volume(dim)) ** (1.0 / dim)
        if r > 0.5:
            raise ValueError("measure too large for a non-overlapping torus ball")
        return cls(tuple(center), r)

    def periodic_distance(self, y):
        diff = np.asarray(y, dtype=float) - np.asarray(self.center)
        diff -= np.round(diff)
        return np.linalg.norm(diff, axis=-1)

    @property
    def measure(self):
        if self.radius <= 0:
            return 0.0
        if self.radius <= 0.5:
            return ball_volume(self.dim, self.radius)
        if self.radius >= 0.5 * math.sqrt(self.dim):
            return 1.0
        raise ValueError("measure not available for radii in (1/2, sqrt(d)/2)")


def equidistribution_fraction(domain, lam, ball, resolution=None, smoothing=None):
    """Fraction of the boundary with ``lam * y mod 1`` inside ``ball``.

    Returns a dict with the mollified fraction (linear ramp of width
    ``smoothing``, default ``lam ** -0.5``) and the hard count.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if resolution is None:
        # 24 nodes per unit torus length traversed by the scaled surface
        resolution = max(64.0, 24.0 * lam)
    width = lam ** -0.5 if smoothing is None else smoothing
    quad = build_quadrature(domain, resolution)
    total = hard = smooth = 0.0
    for nodes, w in quad.blocks():
        dist = ball.periodic_distance(lam * nodes)
        ramp = np.clip((ball.radius - dist) / width + 0.5, 0.0, 1.0) if ball.radius > 0 else 0.0 * dist
        hard += float(w @ (dist < ball.radius))
        smooth += float(w @ ramp)
        total += float(w.sum())
    return {"smoothed": smooth / total, "hard": hard / total, "target": float(ball.measure),
            "lambda": float(lam), "resolution": float(resolution), "smoothing": float(width)}
