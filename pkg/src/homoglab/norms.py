"""L^p norms over balls with boundary-layer meshes, epsilon sweeps and
log-log rate fits.

The difference ``u_eps - u_0`` lives mostly in a strip of width O(eps)
along the boundary, so the radial direction uses geometric shells that
start at thickness ``eps/4`` at the boundary and grow by ``1/0.7`` inward,
then a few Gauss-Legendre panels cover the bulk.  Angular rules come from
:class:`homoglab.spectral.AngularRule`.
"""
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DegenerateFit, MeshUnderResolved, UnsupportedData
from .geometry import ball_volume
from .spectral import AngularRule, DifferenceField, harmonic_extension

LAYER_RATIO = 0.7
GUARD_RTOL = 0.02
PROBLEM_KINDS = ("dirichlet", "neumann", "neumann_grad", "theorem13")


@dataclass
class VolumeMesh:
    """Radial-shell x angular product mesh of a ball.

    ``radii``/``radial_weights`` are absolute radii and weights that already
    include the ``rho^{d-1}`` Jacobian; the volume weight of node
    ``(i, j)`` is ``radial_weights[i] * angular.weights[j]``.
    """

    domain: object
    radii: np.ndarray
    radial_weights: np.ndarray
    angular: AngularRule
    h_min: float
    layer_ratio: float
    n_layers: int

    @property
    def size(self):
        return self.radii.size * self.angular.size

    def total_weight(self):
        return float(self.radial_weights.sum() * self.angular.weights.sum())

    def refined(self):
        """Mesh with half the innermost shell, twice the panels and angles."""
        return build_volume_mesh(self.domain, 2.0 * self.h_min, angular=self.angular.refined(),
                                 ratio=self.layer_ratio, density=2 * self._density)

    _density: int = 1


def _radial_rule(radius, h_min, ratio, gl_order, bulk_panels, dim):
    edges = [radius]
    h = h_min
    stop = 0.3 * radius
    while edges[-1] - h > stop:
        edges.append(edges[-1] - h)
        h /= ratio
    n_layers = len(edges) - 1
    edges = np.array(edges[::-1])
    bulk = np.linspace(0.0, edges[0], bulk_panels + 1)
    allb = np.concatenate([bulk[:-1], edges])
    x, w = leggauss(gl_order)
    r, wr = [], []
    for a, b in zip(allb[:-1], allb[1:]):
        rr = 0.5 * (a + b) + 0.5 * (b - a) * x
        r.append(rr)
        wr.append(0.5 * (b - a) * w * rr ** (dim - 1))
    return np.concatenate(r), np.concatenate(wr), n_layers


def angular_rule_for(field, dim):
    """Default angular rule resolving ``|f|^p`` for a field of given band."""
    band = field.band
    kind = field.preferred_rule
    if kind == "ring":
        m = 1 << int(math.ceil(math.log2(4 * (2 * band + 1))))
        return AngularRule.ring(max(m, 64))
    if kind == "zonal":
        return AngularRule.zonal(dim, 2 * band + 64)
    return AngularRule.full(dim, 2 * band + 16)


def build_volume_mesh(domain, eps, angular, ratio=LAYER_RATIO, gl_order=6, bulk_panels=8,
                      density=1):
    """Mesh with innermost shell ``eps/4`` (``eps=None``: shell ``R/16``).

    ``density`` multiplies the Gauss order and bulk panel count.
    """
    if not domain.is_ball:
        raise UnsupportedData("volume meshes are built for balls", module="norms_rates")
    r0 = domain.radius
    h_min = (r0 / 16.0 if eps is None else eps / 4.0)
    r, wr, n_layers = _radial_rule(r0, h_min, ratio, gl_order * density, bulk_panels * density,
                                   domain.dim)
    mesh = VolumeMesh(domain, r, wr, angular, h_min, ratio, n_layers)
    mesh._density = density
    return mesh


def _shell_magnitude(field, rho, rule, quantity):
    vals = field.shell(rho, rule, quantity)
    if quantity == "grad" or vals.ndim > 1:
        return np.sqrt(np.sum(np.abs(vals) ** 2, axis=-1))
    return np.abs(vals)


def _raw_norms(field, mesh, ps, quantity):
    acc = np.zeros(len(ps))
    rule = mesh.angular
    for rho, wr in zip(mesh.radii, mesh.radial_weights):
        mag = _shell_magnitude(field, rho, rule, quantity)
        for k, p in enumerate(ps):
            acc[k] += wr * np.dot(rule.weights, mag ** p)
    return np.array([a ** (1.0 / p) for a, p in zip(acc, ps)])


def lp_norms(field, mesh, ps, quantity="value", guard=True, rtol=GUARD_RTOL):
    """``(sum_cells w |f|^p)^{1/p}`` for each p, streamed shell by shell.

    With ``guard`` the mesh is refined once (angles, panels and innermost
    shell) and a relative change above ``rtol`` raises MeshUnderResolved.

    Returns
    -------
    norms : ndarray
    info : dict
        ``guard_change`` and mesh sizes.
    """
    ps = [float(p) for p in np.atleast_1d(ps)]
    if any(p < 1 for p in ps):
        raise ValueError("p must be >= 1")
    base = _raw_norms(field, mesh, ps, quantity)
    info = {"mesh_nodes": mesh.size, "angular_nodes": mesh.angular.size,
            "radial_nodes": mesh.radii.size, "h_min": mesh.h_min}
    if guard:
        fine = _raw_norms(field, mesh.refined(), ps, quantity)
        scale = np.maximum(np.abs(fine), 1e-300)
        change = np.where(fine > 1e-12, np.abs(fine - base) / scale, np.abs(fine - base))
        info["guard_change"] = float(change.max())
        if change.max() > rtol:
            raise MeshUnderResolved(f"mesh doubling changed the norm by {change.max():.3g}",
                                    module="norms_rates", guard="2% doubling test")
    return base, info


def lp_norm(field, mesh, p, quantity="value", guard=True):
    """Single-p version of :func:`lp_norms`."""
    return float(lp_norms(field, mesh, [p], quantity, guard)[0][0])


# ---------------------------------------------------------------------------
# problems and sweeps

@dataclass
class Problem:
    """What a sweep measures.

    kind : 'dirichlet' | 'neumann' | 'neumann_grad' | 'theorem13'
    domain : ConvexDomain (ball)
    data : BoundaryData
        For 'theorem13', ``data_factory(eps)`` supplies the boundary data
        ``omega_eps g_eps`` and ``reference`` the homogenized data g*.
    """

    kind: str
    domain: object
    data: object = None
    data_factory: object = None
    reference: object = None
    tag: str = ""

    def __post_init__(self):
        if self.kind not in PROBLEM_KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")

    @property
    def quantity(self):
        return "grad" if self.kind == "neumann_grad" else "value"

    def difference_field(self, eps):
        ext = "dirichlet" if self.kind in ("dirichlet", "theorem13") else "neumann"
        if self.kind == "theorem13":
            a = harmonic_extension(self.domain, self.data_factory(eps), eps, ext)
            b = harmonic_extension(self.domain, self.reference, None, ext)
        else:
            a = harmonic_extension(self.domain, self.data, eps, ext)
            b = harmonic_extension(self.domain, self.data, None, ext)
        return DifferenceField(a, b)


@dataclass
class SweepEntry:
    eps: float
    p: float
    norm: float
    resolution: int = 0
    wallclock_ms: float = 0.0
    meta: dict = field(default_factory=dict)
    error: str = None


@dataclass
class EpsSweep:
    """Norms across epsilon for one problem; entries keep failures too."""

    kind: str
    dim: int
    entries: list = field(default_factory=list)

    def for_p(self, p):
        rows = [e for e in self.entries if e.p == float(p) and e.error is None]
        return sorted(rows, key=lambda e: -e.eps)

    def arrays(self, p):
        rows = self.for_p(p)
        return np.array([e.eps for e in rows]), np.array([e.norm for e in rows])

    @property
    def ps(self):
        return sorted({e.p for e in self.entries})

    @property
    def errors(self):
        return [e for e in self.entries if e.error is not None]

    def to_records(self):
        return [asdict(e) for e in self.entries]


def check_eps_list(eps_list, rtol=1e-9):
    """Strictly decreasing geometric list in (0, 1]; returns the ratio."""
    eps = np.asarray(eps_list, dtype=float)
    if eps.size < 2:
        raise ValueError("need at least two eps values")
    if np.any(eps <= 0) or np.any(eps > 1):
        raise ValueError("eps values must lie in (0, 1]")
    ratios = eps[1:] / eps[:-1]
    if np.any(ratios >= 1):
        raise ValueError("eps list must be strictly decreasing")
    if np.ptp(ratios) > rtol * ratios.mean():
        raise ValueError("eps list must be geometric")
    return float(ratios.mean())


def run_sweep(problem, ps, eps_list, guard=True, mesh_density=1, timing=True):
    """One norm per (eps, p) with mesh metadata.

    Failures of the solver or mesh guards at one eps are recorded in the
    entry's ``error`` field and the sweep continues.
    """
    check_eps_list(eps_list)
    ps = [float(p) for p in np.atleast_1d(ps)]
    sweep = EpsSweep(problem.kind, problem.domain.dim)
    for eps in eps_list:
        t0 = time.perf_counter()
        try:
            fld = problem.difference_field(eps)
            rule = angular_rule_for(fld, problem.domain.dim)
            mesh = build_volume_mesh(problem.domain, eps, rule, density=mesh_density)
            norms, info = lp_norms(fld, mesh, ps, problem.quantity, guard)
            info["band"] = int(fld.band)
        except Exception as exc:  # recorded per entry, see docstring
            from .errors import HomogLabError
            if not isinstance(exc, HomogLabError):
                raise
            for p in ps:
                sweep.entries.append(SweepEntry(float(eps), p, float("nan"), error=exc.describe()))
            continue
        ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
        for p, v in zip(ps, norms):
            sweep.entries.append(SweepEntry(float(eps), p, float(v), int(mesh.size), ms, dict(info)))
    return sweep


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    model: str
    n: int


def fit_rate(eps, norms=None, model="power"):
    """Least-squares slope of log(norm) against log(eps) or log(eps |ln eps|).

    ``eps`` may be an :class:`EpsSweep` with a single p (then ``norms`` is
    ignored) or an array paired with ``norms``.
    """
    if isinstance(eps, EpsSweep):
        if len(eps.ps) != 1:
            raise ValueError("sweep holds several p values; pass arrays from sweep.arrays(p)")
        eps, norms = eps.arrays(eps.ps[0])
    eps = np.asarray(eps, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if eps.size < 4:
        raise DegenerateFit("a rate fit needs at least 4 points", module="norms_rates")
    if np.all(norms <= 1e-12):
        raise DegenerateFit("all norms vanish; no rate to fit", module="norms_rates")
    if np.any(norms <= 0):
        raise DegenerateFit("log fit needs positive norms", module="norms_rates")
    if model == "power":
        x = np.log(eps)
    elif model == "log":
        x = np.log(eps * np.abs(np.log(eps)))
    else:
        raise ValueError(f"unknown model {model!r}")
    y = np.log(norms)
    a = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(a, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(icpt), r2, model, int(eps.size))


def slopes_so_far(eps, norms):
    """Power-model slope over the first k entries (NaN until two points)."""
    out = []
    le, ln = np.log(eps), np.log(np.maximum(norms, 1e-300))
    for k in range(1, len(eps) + 1):
        out.append(float(np.polyfit(le[:k], ln[:k], 1)[0]) if k >= 2 else float("nan"))
    return out


def oscillation_sup(domain, data, samples=64):
    """sup over boundary samples and the torus of |g - g-bar| (exact for one mode)."""
    from .geometry import build_quadrature
    quad = build_quadrature(domain, max(4, samples / (2 * math.pi * domain.radius)))
    nodes = quad.nodes
    if quad.size > 4096:
        nodes = nodes[:: quad.size // 4096 + 1]
    best = 0.0
    for x in nodes:
        f = data.at(x)
        keep = np.any(f.modes != 0, axis=1)
        if not np.any(keep):
            continue
        from .torus import TorusFunction
        osc = TorusFunction(f.dim, f.modes[keep], f.coeffs[keep])
        best = max(best, float(osc.sup_norm()))
    return best


def optimality_check(sweep, p, g_osc_sup, threshold=0.5):
    """Ratios ``norm / (eps^{1/p} ||g - g-bar||)`` and their min/max spread."""
    eps, norms = sweep.arrays(p)
    if g_osc_sup <= 0:
        return {"p": p, "status": "NotApplicable", "passed": None,
                "reason": "g has no oscillating part"}
    r = norms / (eps ** (1.0 / p) * g_osc_sup)
    spread = float(r.min() / r.max())
    return {"p": p, "status": "ok", "ratios": r.tolist(), "min_over_max": spread,
            "threshold": threshold, "passed": bool(spread >= threshold)}


def interpolation_check(sweep, g_sup, p):
    """``||f||_p <= (2 ||g||)^{1 - 1/p} ||f||_1^{1/p}`` on every eps of the sweep.

    The constant comes from ``|u_eps - u_0| <= 2 ||g||`` (maximum principle).
    """
    e1, n1 = sweep.arrays(1.0)
    ep, npn = sweep.arrays(p)
    if not np.array_equal(e1, ep):
        raise ValueError("sweep must hold p=1 and p at the same eps values")
    c = (2.0 * g_sup) ** (1.0 - 1.0 / p)
    rhs = c * n1 ** (1.0 / p)
    slack = 1e-12 * np.maximum(rhs, 1.0)
    return {"p": p, "C": c, "lhs": npn.tolist(), "rhs": rhs.tolist(),
            "passed": bool(np.all(npn <= rhs + slack))}


def normalized_norms(field, mesh, ps, quantity="value"):
    """``(|D|^{-1} int |f|^p)^{1/p}``, nondecreasing in p."""
    vol = ball_volume(mesh.domain.dim, mesh.domain.radius)
    raw, _ = lp_norms(field, mesh, ps, quantity, guard=False)
    return np.array([v / vol ** (1.0 / p) for v, p in zip(raw, ps)])
