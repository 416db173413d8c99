"""Closed-form Poisson kernel and Neumann function of the Laplacian on balls,
with empirical certificates for the kernel bounds used by the rate proofs.

Poisson kernel of the ball B(c, R) in R^d::

    P(x, y) = (R^2 - |x - c|^2) / (omega R |x - y|^d),   omega = |S^{d-1}|.

Neumann function of the unit 3-ball (boundary trace, y on the sphere)::

    N(x, y) = (1/4pi) [2/|x-y| + log(2 / (1 - x.y + |x-y|)) - 2].

It sums the zonal series ``sum_{l>=1} (2l+1)/(4 pi l) r^l P_l(t)``, so
``v = int N g`` is the harmonic function with ``dv/dn = g - mean(g)`` and
``v(center) = 0`` (equivalently, zero boundary mean).  Radius R is handled by
scaling: ``N_R(x, y) = N_1((x-c)/R, (y-c)/R) / R``.
"""
import math

import numpy as np

from . import _kernels
from .errors import (PointNotInterior, PointNotOnBoundary, QuadratureUnderResolved,
                     UnsupportedData, UnsupportedDimension)
from .geometry import build_quadrature, distance_to_boundary, sphere_area

KINDS = ("poisson", "neumann", "neumann_grad")


def _require_ball(domain):
    if not domain.is_ball:
        raise UnsupportedData("closed-form kernels exist for balls only", module="kernels")


def _check_pair(domain, x, y, tol=1e-9):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    r0 = domain.radius
    rx = np.linalg.norm(x - domain.c, axis=1)
    if np.any(rx >= r0):
        raise PointNotInterior("x must lie strictly inside the ball", module="kernels")
    ry = np.linalg.norm(y - domain.c, axis=1)
    if np.any(np.abs(ry - r0) > tol * r0):
        raise PointNotOnBoundary("y must lie on the boundary sphere", module="kernels")
    return x, y


class KernelFamily:
    """Closed-form kernel of one kind on a ball.

    Parameters
    ----------
    kind : {'poisson', 'neumann', 'neumann_grad'}
    domain : ConvexDomain
        A ball; the Neumann kinds need d = 3.
    """

    def __init__(self, kind, domain):
        if kind not in KINDS:
            raise ValueError(f"unknown kernel kind {kind!r}")
        _require_ball(domain)
        if kind != "poisson" and domain.dim != 3:
            raise UnsupportedDimension("the Neumann function is implemented for d=3 only",
                                       module="kernels")
        self.kind = kind
        self.domain = domain
        self.dim = domain.dim

    @property
    def omega(self):
        return sphere_area(self.dim)

    def __call__(self, x, y):
        x, y = _check_pair(self.domain, x, y)
        if self.kind == "poisson":
            return _poisson(self.domain, x, y)
        if self.kind == "neumann":
            return _neumann(self.domain, x, y)
        return _neumann_grad(self.domain, x, y)

    def harmonicity_residual(self, x, y, step=0.01):
        """Finite-difference Laplacian in x, made dimensionless.

        Uses a fourth-order stencil with step ``step * |x - y|`` per point,
        Richardson-extrapolated once, and reports ``|Lap K| |x-y|^2 / s``
        where ``s`` is the kernel scale (``|P|`` for Poisson,
        ``1 / (4 pi |x - y|)`` for Neumann).
        """
        if self.kind == "neumann_grad":
            raise ValueError("harmonicity is checked on scalar kernels")
        x, y = _check_pair(self.domain, x, y)
        dom = self.domain
        f = (lambda p: _poisson(dom, p, y)) if self.kind == "poisson" else (lambda p: _neumann(dom, p, y))
        rxy = np.linalg.norm(x - y, axis=1)
        base = f(x)

        def lap(h):
            out = np.zeros_like(base)
            for a in range(self.dim):
                e = np.zeros_like(x)
                e[:, a] = h
                out += (-f(x + 2 * e) + 16 * f(x + e) - 30 * base + 16 * f(x - e) - f(x - 2 * e)) / (12 * h * h)
            return out

        h = step * rxy
        est = (16.0 * lap(0.5 * h) - lap(h)) / 15.0
        scale = np.abs(base) if self.kind == "poisson" else 1.0 / (4.0 * math.pi * rxy)
        return np.abs(est) * rxy ** 2 / scale


def _poisson(domain, x, y):
    r0 = domain.radius
    num = r0 * r0 - np.sum((x - domain.c) ** 2, axis=1)
    dist = np.linalg.norm(x - y, axis=1)
    return num / (sphere_area(domain.dim) * r0 * dist ** domain.dim)


def _neumann(domain, x, y):
    r0 = domain.radius
    xs = (x - domain.c) / r0
    ys = (y - domain.c) / r0
    rho = np.linalg.norm(xs - ys, axis=1)
    xy = np.sum(xs * ys, axis=1)
    return (2.0 / rho + np.log(2.0 / (1.0 - xy + rho)) - 2.0) / (4.0 * math.pi * r0)


def _neumann_grad(domain, x, y):
    r0 = domain.radius
    xs = (x - domain.c) / r0
    ys = (y - domain.c) / r0
    diff = xs - ys
    rho = np.linalg.norm(diff, axis=1)[:, None]
    xy = np.sum(xs * ys, axis=1)[:, None]
    big_l = 1.0 - xy + rho
    grad_l = -ys + diff / rho
    return (-2.0 * diff / rho ** 3 - grad_l / big_l) / (4.0 * math.pi * r0 * r0)


def poisson_eval(domain, x, y):
    """P(x, y) for interior x and boundary y (arrays broadcast row-wise)."""
    return KernelFamily("poisson", domain)(x, y)


def neumann_eval(domain, x, y):
    """Boundary trace N(x, y) of the Neumann function on a 3-ball."""
    if domain.dim != 3:
        raise UnsupportedDimension("the Neumann function is implemented for d=3 only",
                                   module="kernels")
    return KernelFamily("neumann", domain)(x, y)


def neumann_grad_eval(domain, x, y):
    """Gradient in x of N(x, y), shape (n, 3)."""
    if domain.dim != 3:
        raise UnsupportedDimension("the Neumann function is implemented for d=3 only",
                                   module="kernels")
    return KernelFamily("neumann_grad", domain)(x, y)


# ---------------------------------------------------------------------------
# tangential derivatives along great circles y(s) = c + R(u cos s + tau sin s)

def _great_circle_terms(domain, x, y, tau):
    """q = |x-y|^2 and its first two s-derivatives, plus (x.y) and derivatives."""
    r0 = domain.radius
    xs = x - domain.c
    u = (y - domain.c) / r0
    q = np.sum((x - y) ** 2, axis=1)
    xt = np.sum(xs * tau, axis=1) * r0
    xu = np.sum(xs * u, axis=1) * r0
    dq = -2.0 * xt
    ddq = 2.0 * xu
    return q, dq, ddq, xu, xt


def poisson_tangential_derivatives(domain, x, y, tau):
    """(P, dP/ds, d2P/ds2) along the great circle through y with unit tangent tau.

    The arclength parameter is ``R s``; derivatives are returned per unit arclength.
    """
    r0 = domain.radius
    d = domain.dim
    k = (r0 * r0 - np.sum((x - domain.c) ** 2, axis=1)) / (sphere_area(d) * r0)
    q, dq, ddq, _, _ = _great_circle_terms(domain, x, y, tau)
    h = 0.5 * d
    p0 = k * q ** (-h)
    p1 = k * (-h) * q ** (-h - 1) * dq
    p2 = k * (h * (h + 1) * q ** (-h - 2) * dq * dq - h * q ** (-h - 1) * ddq)
    return p0, p1 / r0, p2 / (r0 * r0)


def neumann_tangential_derivatives(domain, x, y, tau):
    """(N, dN/ds, d2N/ds2) per unit arclength, d = 3."""
    r0 = domain.radius
    xs = (x - domain.c) / r0
    u = (y - domain.c) / r0
    diff = xs - u
    q = np.sum(diff * diff, axis=1)
    rho = np.sqrt(q)
    xt = np.sum(xs * tau, axis=1)
    xu = np.sum(xs * u, axis=1)
    dq, ddq = -2.0 * xt, 2.0 * xu
    drho = dq / (2.0 * rho)
    ddrho = ddq / (2.0 * rho) - dq * dq / (4.0 * rho ** 3)
    big_l = 1.0 - xu + rho
    dl = -xt + drho
    ddl = xu + ddrho
    n0 = 2.0 / rho + np.log(2.0 / big_l) - 2.0
    n1 = -2.0 * drho / rho ** 2 - dl / big_l
    n2 = -2.0 * ddrho / rho ** 2 + 4.0 * drho ** 2 / rho ** 3 - ddl / big_l + dl ** 2 / big_l ** 2
    s = 1.0 / (4.0 * math.pi * r0)
    return n0 * s, n1 * s / r0, n2 * s / (r0 * r0)


def _random_tangent(rng, u):
    v = rng.normal(size=u.shape)
    v -= np.sum(v * u, axis=1)[:, None] * u
    return v / np.linalg.norm(v, axis=1)[:, None]


def _bound_samples(domain, n, rng):
    """Interior x concentrated toward the boundary; y near and far from x."""
    d = domain.dim
    r0 = domain.radius
    dirs = rng.normal(size=(n, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    dist = r0 * 10.0 ** rng.uniform(-4.0, 0.0, size=n)
    dist = np.minimum(dist, r0 * (1 - 1e-12))
    x = domain.c + (r0 - dist)[:, None] * dirs
    # y: half uniform, half at angle ~ d(x)/R from the foot point
    y_dir = rng.normal(size=(n, d))
    y_dir /= np.linalg.norm(y_dir, axis=1)[:, None]
    near = rng.random(n) < 0.5
    tau = _random_tangent(rng, dirs)
    ang = (dist / r0) * 10.0 ** rng.uniform(-1.0, 1.0, size=n)
    ang = np.minimum(ang, math.pi)
    close = np.cos(ang)[:, None] * dirs + np.sin(ang)[:, None] * tau
    y_dir[near] = close[near]
    y = domain.c + r0 * y_dir
    return x, y, dist


def _sup_pair(values):
    n = values.size
    half = float(values[: n // 2].max())
    full = float(values.max())
    return {"sup": full, "sup_half": half, "ratio": full / half if half > 0 else math.inf}


def exact_poisson_c0(domain):
    """sup over x, y of P(x,y) d(x) ^ -1 |x-y|^d on a ball: 2/omega.

    The ratio equals (R + |x-c|) / (omega R), increasing in |x - c|.
    """
    return 2.0 / sphere_area(domain.dim)


def certify_poisson_bounds(domain, sample_size=4000, seed=0):
    """Empirical constants of the Poisson kernel bounds.

    Returns a report with, for each estimate, the sup over the full sample,
    the sup over its first half and their ratio (stable when ``<= 1.1``):

    * ``C_0``: ``P(x,y) |x-y|^d / d(x)``,
    * ``C_alpha`` for ``|alpha| = 0, 1, 2``: ``|D_y^alpha P| |x-y|^{d-1+|alpha|}``
      with tangential derivatives along great circles.
    """
    _require_ball(domain)
    if sample_size < 1000:
        raise ValueError("sample_size must be at least 1000")
    rng = np.random.default_rng(seed)
    x, y, dist = _bound_samples(domain, sample_size, rng)
    d = domain.dim
    u = (y - domain.c) / domain.radius
    tau = _random_tangent(rng, u)
    p0, p1, p2 = poisson_tangential_derivatives(domain, x, y, tau)
    rxy = np.linalg.norm(x - y, axis=1)
    report = {
        "dim": d,
        "sample_size": sample_size,
        "C_0": _sup_pair(p0 * rxy ** d / dist),
        "C_alpha": {
            "0": _sup_pair(np.abs(p0) * rxy ** (d - 1)),
            "1": _sup_pair(np.abs(p1) * rxy ** d),
            "2": _sup_pair(np.abs(p2) * rxy ** (d + 1)),
        },
        "C_0_exact": exact_poisson_c0(domain),
        "min_value": float(p0.min()),
    }
    ratios = [report["C_0"]["ratio"]] + [v["ratio"] for v in report["C_alpha"].values()]
    report["stable"] = bool(max(ratios) <= 1.1 and np.all(np.isfinite(ratios)))
    report["positive"] = bool(report["min_value"] > 0)
    report["passed"] = bool(report["stable"] and report["positive"]
                            and report["C_0"]["sup"] <= report["C_0_exact"] * (1 + 1e-6))
    return report


def certify_neumann_bounds(domain, sample_size=4000, seed=0):
    """Empirical constants ``|D_y^alpha N| |x-y|^{d-2+|alpha|}``, |alpha| <= 2, d = 3."""
    _require_ball(domain)
    if domain.dim != 3:
        raise UnsupportedDimension("the Neumann function is implemented for d=3 only",
                                   module="kernels")
    rng = np.random.default_rng(seed)
    x, y, _ = _bound_samples(domain, sample_size, rng)
    u = (y - domain.c) / domain.radius
    tau = _random_tangent(rng, u)
    n0, n1, n2 = neumann_tangential_derivatives(domain, x, y, tau)
    rxy = np.linalg.norm(x - y, axis=1)
    report = {
        "dim": 3,
        "sample_size": sample_size,
        "C_alpha": {
            "0": _sup_pair(np.abs(n0) * rxy),
            "1": _sup_pair(np.abs(n1) * rxy ** 2),
            "2": _sup_pair(np.abs(n2) * rxy ** 3),
        },
    }
    ratios = [v["ratio"] for v in report["C_alpha"].values()]
    report["stable"] = bool(max(ratios) <= 1.1 and np.all(np.isfinite(ratios)))
    report["passed"] = report["stable"]
    return report


def _mass_probe_points(domain, spacing, n=50, seed=0):
    """Interior points from the center down to d(x) = 10 * spacing (and 0.05 R)."""
    d = domain.dim
    r0 = domain.radius
    rng = np.random.default_rng(seed)
    floor = max(10.0 * spacing, 1e-12)
    dists = [r0, 0.05 * r0, floor]
    rest = np.geomspace(max(floor, 1e-6), r0, n - len(dists))
    dists = np.concatenate([dists, rest])
    dists = np.clip(dists, floor, r0)
    dirs = rng.normal(size=(dists.size, d))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return domain.c + (r0 - dists)[:, None] * dirs


def certify_poisson_mass(domain, quad=None, points=None, tol=1e-6, resolution=None):
    """Check ``int_Gamma |P(x, y)| dsigma(y) = 1`` at interior probe points.

    Parameters
    ----------
    quad : SurfaceQuadrature, optional
        Built from ``resolution`` (default 256 nodes per unit length) if absent.
    points : (n, d) array, optional
        Defaults to 50 points with d(x) from R down to 10 node spacings.
    tol : float
        Pass threshold on the mass deviation.

    Raises
    ------
    QuadratureUnderResolved
        If some deviation exceeds 1% (node spacing comparable to d(x)).
    """
    _require_ball(domain)
    if quad is None:
        quad = build_quadrature(domain, 256 if resolution is None else resolution)
    spacing = 1.0 / quad.resolution
    if points is None:
        points = _mass_probe_points(domain, spacing)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    _check_pair(domain, points, domain.c + domain.radius * np.eye(domain.dim)[:1])
    omega = sphere_area(domain.dim)
    mass = np.zeros(points.shape[0])
    # P > 0 on the ball, so the mass of |P| is the plain kernel integral
    for nodes, w in quad.blocks():
        mass += _kernels.poisson_sum(points, nodes, w, domain.c, domain.radius, omega).real
    dev = np.abs(mass - 1.0)
    dists = np.array([distance_to_boundary(domain, p) for p in points])
    if dev.max() > 1e-2:
        i = int(dev.argmax())
        raise QuadratureUnderResolved(
            f"Poisson mass {mass[i]:.6g} at d(x)={dists[i]:.3g} with node spacing {spacing:.3g}",
            module="kernels", guard="certify_poisson_mass")
    return {
        "points": points.shape[0],
        "min_distance": float(dists.min()),
        "max_deviation": float(dev.max()),
        "tol": tol,
        "resolution": quad.resolution,
        "passed": bool(dev.max() <= tol),
    }
