"""Rate experiments for the Neumann problem on the 3-ball.

``v_eps`` is the harmonic function with normal derivative
``g_eps - mean(g_eps)`` and zero boundary mean, i.e. the Neumann-function
integral of the data; ``v_0`` uses the averaged data.  Every sweep entry
is cross-checked at seeded interior probes between kernel quadrature and
the spherical-harmonic representation.
"""
import numpy as np

from .asymptotics import f_eps_decay as _f_eps_decay
from .errors import UnsupportedDimension
from .norms import Problem, fit_rate, run_sweep
from .solver import solve_neumann_v

DUAL_PATH_TOL = 1e-6
PROBE_COUNT = 8
PROBE_MIN_DEPTH = 0.25


def dual_path_probes(domain, count=PROBE_COUNT, seed=0, min_depth=PROBE_MIN_DEPTH):
    """Seeded interior points of a ball with distance to the boundary at least ``min_depth * R``."""
    rng = np.random.default_rng(seed)
    d = domain.dim
    dirs = rng.standard_normal((count, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad = (1.0 - min_depth) * rng.uniform(0.0, 1.0, count) ** (1.0 / d)
    return domain.c + domain.radius * rad[:, None] * dirs


def dual_path_check(domain, data, epsilon, points=None, tol=DUAL_PATH_TOL, seed=0):
    """Largest |quadrature - spectral| for v_eps and v_0 at the probes."""
    pts = dual_path_probes(domain, seed=seed) if points is None else points
    worst = 0.0
    for eps in (epsilon, None):
        q = solve_neumann_v(domain, data, eps, pts, method="quadrature").values
        s = solve_neumann_v(domain, data, eps, pts, method="spectral").values
        worst = max(worst, float(np.abs(np.asarray(q) - np.asarray(s)).max()))
    return {"eps": float(epsilon), "max_diff": worst, "passed": bool(worst <= tol)}


def _require_d3(domain):
    if domain.dim != 3:
        raise UnsupportedDimension("Neumann rate experiments run on the 3-ball",
                                   module="neumann")


def _sweep(kind, domain, data, p, eps_list, dual_path, guard, seed):
    _require_d3(domain)
    sweep = run_sweep(Problem(kind, domain, data=data, tag=kind), [p], eps_list, guard=guard)
    checks = [dual_path_check(domain, data, e, seed=seed) for e in eps_list] if dual_path else []
    eps, norms = sweep.arrays(float(p))
    fit = fit_rate(eps, norms) if np.any(norms > 1e-12) else None
    return sweep, fit, checks


def neumann_sweep(domain, data, p, eps_list, dual_path=True, guard=True, seed=0):
    """``||v_eps - v_0||_{L^p(D)}`` over eps with a power-law fit.

    Returns
    -------
    dict
        ``sweep``, ``fit`` (None when all norms vanish), ``expected`` = 1/p,
        ``passed`` (slope >= 1/p - 0.1, or vanishing norms), and
        ``dual_path``, one agreement record per eps.
    """
    sweep, fit, checks = _sweep("neumann", domain, data, p, eps_list, dual_path, guard, seed)
    expected = 1.0 / float(p)
    ok = fit is None or fit.slope >= expected - 0.1
    return {"sweep": sweep, "fit": fit, "expected": expected, "dual_path": checks,
            "passed": bool(ok and all(c["passed"] for c in checks))}


def neumann_gradient_sweep(domain, data, p, eps_list, kappa=None, dual_path=False, guard=True,
                           seed=0):
    """``||grad(v_eps - v_0)||_{L^p(D)}`` over eps; passes iff slope >= kappa.

    ``kappa`` defaults to ``0.8 / p`` and must lie in (0, 1/p).
    """
    kappa = 0.8 / float(p) if kappa is None else float(kappa)
    if not 0.0 < kappa < 1.0 / float(p):
        raise ValueError("kappa must lie in (0, 1/p)")
    sweep, fit, checks = _sweep("neumann_grad", domain, data, p, eps_list, dual_path, guard, seed)
    ok = fit is None or fit.slope >= kappa
    return {"sweep": sweep, "fit": fit, "expected": kappa, "dual_path": checks,
            "passed": bool(ok and all(c["passed"] for c in checks))}


def f_eps_decay(domain, data, eps_list):
    """Decay of the boundary average ``|F_eps - F_0|``; expected exponent (d-1)/2."""
    _require_d3(domain)
    return _f_eps_decay(domain, data, eps_list)
