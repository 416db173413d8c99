"""Command-line experiment runner.

``homoglab sweep --config CFG --out DIR`` writes ``sweep.csv`` and
``manifest.json``; ``homoglab certify KIND`` writes ``certify_<kind>.json``.
Exit codes: 0 success, 2 configuration error, 3 resolution-guard failure,
4 failed assertion.
"""
import argparse
import csv
import json
import math
import os
import platform
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .errors import HomogLabError, ResolutionError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RESOLUTION = 3
EXIT_ASSERTION = 4

CSV_COLUMNS = ["eps", "p", "d", "norm", "slope_so_far", "resolution", "wallclock_ms"]

_COEFF_LIST = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["m"],
        "properties": {"m": {"type": "array", "items": {"type": "integer"}},
                       "re": {"type": "number"}, "im": {"type": "number"}},
    },
}

_SOURCE = {
    "type": "object",
    "oneOf": [
        {"required": ["file"], "properties": {"file": {"type": "string"}}},
        {"required": ["inline"], "properties": {"inline": {"type": "object"}}},
    ],
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["problem", "domain", "data", "p", "eps"],
    "additionalProperties": False,
    "properties": {
        "problem": {"enum": ["dirichlet", "neumann", "neumann_grad", "theorem13"]},
        "domain": {
            "type": "object",
            "required": ["dim"],
            "properties": {
                "kind": {"enum": ["ball", "ellipsoid"]},
                "dim": {"type": "integer", "minimum": 2, "maximum": 4},
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "center": {"type": "array", "items": {"type": "number"}},
                "semi_axes": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        "data": _SOURCE,
        "tensor": _SOURCE,
        "p": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 1}},
        "eps": {"type": "array", "minItems": 4,
                "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "resolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"guard": {"type": "boolean"},
                           "mesh_density": {"type": "integer", "minimum": 1}},
        },
        "dual_path": {"type": "boolean"},
        "assertions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["p"],
                "additionalProperties": False,
                "properties": {"p": {"type": "number", "minimum": 1},
                               "model": {"enum": ["power", "log"]},
                               "min_slope": {"type": "number"},
                               "max_slope": {"type": "number"}},
            },
        },
        "seed": {"type": "integer"},
    },
}

TORUS_SCHEMA = {"type": "object", "required": ["dim", "coeffs"],
                "properties": {"dim": {"type": "integer", "minimum": 1}, "coeffs": _COEFF_LIST}}


class ConfigError(Exception):
    pass


def _fmt(x):
    """17 significant digits, the shortest form that round-trips any double."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{float(x):.17g}"


def _bundled(name):
    return resources.files("homoglab") / "configs" / name


def _resolve_path(path, base):
    if os.path.isabs(path):
        return path
    local = os.path.join(base, path)
    if os.path.exists(local):
        return local
    bundled = _bundled(path)
    if bundled.is_file():
        return str(bundled)
    return local


def _load_source(spec, base):
    if "inline" in spec:
        return spec["inline"]
    path = _resolve_path(spec["file"], base)
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_config(path):
    """Read, validate and resolve a sweep config.

    Returns the config dict with ``data`` (and ``tensor``) inlined.
    """
    from .norms import check_eps_list

    if not os.path.exists(path) and _bundled(path).is_file():
        path = str(_bundled(path))
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(v) for v in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    try:
        check_eps_list(cfg["eps"])
    except ValueError as exc:
        raise ConfigError(f"config invalid at eps: {exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    resolved = dict(cfg)
    resolved["data"] = {"inline": _load_source(cfg["data"], base)}
    try:
        jsonschema.validate(resolved["data"]["inline"], TORUS_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"data file invalid: {exc.message}") from exc
    if cfg["problem"] == "theorem13":
        if "tensor" not in cfg:
            raise ConfigError("problem 'theorem13' needs a tensor")
        resolved["tensor"] = {"inline": _load_source(cfg["tensor"], base)}
    if cfg["data"].get("file"):
        resolved["data"]["source"] = cfg["data"]["file"]
    return resolved


def _versions():
    import scipy

    from ._kernels import BACKEND
    out = {"homoglab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
           "python": platform.python_version(), "backend": BACKEND}
    try:
        import numba
        out["numba"] = numba.__version__
    except ImportError:  # pragma: no cover
        out["numba"] = None
    return out


def _build_problem(cfg):
    from .cell import PeriodicTensor, g_star, oscillating_boundary_data, solve_cell
    from .geometry import ConvexDomain
    from .norms import Problem
    from .torus import BoundaryData, TorusFunction

    domain = ConvexDomain.from_config(cfg["domain"])
    g = TorusFunction.from_json_dict(cfg["data"]["inline"])
    if g.dim != domain.dim:
        raise ConfigError("data dimension does not match the domain")
    data = BoundaryData.from_torus(g)
    extra = {}
    if cfg["problem"] != "theorem13":
        return Problem(cfg["problem"], domain, data=data, tag=cfg["problem"]), extra
    A = PeriodicTensor.from_json_dict(cfg["tensor"]["inline"])
    eff = solve_cell(A)
    target = np.einsum("ab,ij->abij", np.eye(A.dim), np.eye(A.n_comp))
    dev = float(np.abs(eff.Ahat - target).max())
    if dev > 1e-8:
        raise ConfigError(f"effective tensor differs from the identity by {dev:.3g}")
    product = oscillating_boundary_data(A, eff, domain, data)
    extra["cell"] = eff.to_json_dict()
    problem = Problem("theorem13", domain, data=data, data_factory=lambda eps: product,
                      reference=g_star(A, eff, domain, data), tag="theorem13")
    return problem, extra


def _write_csv(path, sweep, dim, timing):
    from .norms import slopes_so_far

    rows = []
    for p in sweep.ps:
        ok = sweep.for_p(p)
        slopes = dict(zip([e.eps for e in ok],
                          slopes_so_far(*sweep.arrays(p)) if len(ok) else []))
        for e in sorted((e for e in sweep.entries if e.p == p), key=lambda e: -e.eps):
            rows.append([_fmt(e.eps), _fmt(e.p), str(dim), _fmt(e.norm),
                         _fmt(slopes.get(e.eps) if e.error is None else None),
                         str(e.resolution) if e.error is None else "",
                         _fmt(e.wallclock_ms) if timing and e.error is None else ""])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)


def _fit_records(sweep):
    from .errors import DegenerateFit
    from .norms import fit_rate

    out = []
    for p in sweep.ps:
        eps, norms = sweep.arrays(p)
        for model in ("power", "log"):
            try:
                f = fit_rate(eps, norms, model)
                out.append({"p": p, "model": model, "slope": f.slope, "intercept": f.intercept,
                            "r2": f.r2, "n": f.n})
            except DegenerateFit as exc:
                out.append({"p": p, "model": model, "slope": None, "error": exc.describe()})
    return out


def _check_assertions(cfg, fits):
    results = []
    for a in cfg.get("assertions", []):
        model = a.get("model", "power")
        hit = [f for f in fits if f["p"] == float(a["p"]) and f["model"] == model]
        slope = hit[0]["slope"] if hit else None
        ok = slope is not None
        if ok and "min_slope" in a:
            ok = slope >= a["min_slope"]
        if ok and "max_slope" in a:
            ok = slope <= a["max_slope"]
        results.append(dict(a, model=model, slope=slope, passed=bool(ok)))
    return results


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not serializable: {type(obj).__name__}")


def _dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def run_sweep_command(args):
    from .norms import run_sweep

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    try:
        problem, extra = _build_problem(cfg)
    except (ValueError, HomogLabError) as exc:
        if isinstance(exc, ResolutionError):
            raise
        raise ConfigError(exc.describe() if isinstance(exc, HomogLabError) else str(exc)) from exc
    res = cfg.get("resolution", {})
    sweep = run_sweep(problem, cfg["p"], cfg["eps"], guard=res.get("guard", True),
                      mesh_density=res.get("mesh_density", 1), timing=args.timing)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "sweep.csv"), sweep, problem.domain.dim, args.timing)
    fits = _fit_records(sweep)
    assertions = _check_assertions(cfg, fits)
    manifest = {"config": cfg, "versions": _versions(), "threads": args.threads,
                "fits": fits, "assertions": assertions,
                "errors": [e.error for e in sweep.errors], **extra}
    if cfg.get("dual_path") and problem.kind in ("neumann", "neumann_grad"):
        from .neumann import dual_path_check
        checks = [dual_path_check(problem.domain, problem.data, e, seed=cfg.get("seed", 0))
                  for e in cfg["eps"]]
        manifest["dual_path"] = checks
        assertions.append({"check": "dual_path", "passed": all(c["passed"] for c in checks)})
    _dump_json(os.path.join(args.out, "manifest.json"), manifest)
    for e in sweep.errors:
        print(f"eps={e.eps:g} p={e.p:g}: {e.error}", file=sys.stderr)
    if sweep.errors:
        return EXIT_RESOLUTION
    failed = [a for a in assertions if not a["passed"]]
    for a in failed:
        print(f"[cli:assertion] failed: {json.dumps(a, default=_json_default)}", file=sys.stderr)
    return EXIT_ASSERTION if failed else EXIT_OK


# ---------------------------------------------------------------------------
# certify

def _certify_kernel(args):
    from .geometry import ConvexDomain
    from .kernels import (KernelFamily, certify_neumann_bounds, certify_poisson_bounds,
                          certify_poisson_mass)

    domain = ConvexDomain.ball(args.dim)
    seed = args.seed or 0
    report = {"dim": args.dim,
              "mass": certify_poisson_mass(domain, tol=1e-8),
              "poisson_bounds": certify_poisson_bounds(domain, seed=seed)}
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.4, 0.4, (8, args.dim))
    y = rng.standard_normal((8, args.dim))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    report["poisson_harmonicity"] = float(np.max(KernelFamily("poisson", domain)
                                                 .harmonicity_residual(x, y)))
    checks = [report["mass"]["passed"], report["poisson_bounds"]["passed"],
              report["poisson_bounds"]["stable"], report["poisson_harmonicity"] <= 1e-6]
    if args.dim == 3:
        report["neumann_bounds"] = certify_neumann_bounds(domain, seed=seed)
        report["neumann_harmonicity"] = float(np.max(KernelFamily("neumann", domain)
                                                     .harmonicity_residual(x, y)))
        checks += [report["neumann_bounds"]["stable"], report["neumann_harmonicity"] <= 1e-6]
    report["passed"] = bool(all(checks))
    return report


def _certify_equidist(args):
    from .asymptotics import surface_decay_check
    from .geometry import ConvexDomain, TorusBall, equidistribution_fraction

    domain = ConvexDomain.ball(args.dim)
    ball = TorusBall.with_measure((0.5,) * args.dim, 0.2)
    frac = equidistribution_fraction(domain, 512.0, ball)
    direction = np.ones(args.dim) / math.sqrt(args.dim)
    decay = surface_decay_check(domain, direction, [8.0 * 2 ** k for k in range(6)])
    ok = abs(frac["smoothed"] - float(ball.measure)) <= 0.02
    return {"dim": args.dim, "lambda": 512.0, "measure": float(ball.measure),
            "fraction": frac, "surface_decay": decay, "passed": bool(ok and decay["passed"])}


def _certify_stationary(args):
    from .asymptotics import stationary_phase_check

    return stationary_phase_check([2.0 ** -k for k in range(3, 9)], seed=args.seed or 0)


def _certify_cell(args):
    from .cell import PeriodicTensor, check_divergence_free, solve_cell

    if args.tensor:
        A = PeriodicTensor.load(_resolve_path(args.tensor, os.getcwd()))
    else:
        A = PeriodicTensor.identity(args.dim)
    ok_ell, c_a = A.ellipticity(seed=args.seed or 0)
    div_ok, div_res = check_divergence_free(A)
    eff = solve_cell(A)
    ok_hat, c_hat = eff.ellipticity(seed=args.seed or 0)
    report = {"tensor": A.to_json_dict(), "real": A.is_real(), "elliptic": ok_ell,
              "ellipticity": c_a, "divergence_free": div_ok, "divergence_residual": div_res,
              "cell": eff.to_json_dict(), "Ahat_elliptic": ok_hat, "Ahat_ellipticity": c_hat}
    if A.is_constant:
        report["Ahat_equals_A"] = bool(np.array_equal(eff.Ahat, A.mean.real))
    report["passed"] = bool(ok_ell and ok_hat and report["real"] and eff.residual <= 1e-8
                            and report.get("Ahat_equals_A", True))
    return report


CERTIFIERS = {"kernel": _certify_kernel, "equidist": _certify_equidist,
              "stationary-phase": _certify_stationary, "cell": _certify_cell}


def run_certify_command(args):
    try:
        report = CERTIFIERS[args.kind](args)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(str(exc)) from exc
    os.makedirs(args.out, exist_ok=True)
    _dump_json(os.path.join(args.out, f"certify_{args.kind}.json"), report)
    print(json.dumps({"kind": args.kind, "passed": report["passed"]}))
    return EXIT_OK if report["passed"] else EXIT_ASSERTION


def build_parser():
    ap = argparse.ArgumentParser(prog="homoglab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=None, help="cap on kernel threads")
    common.add_argument("--seed", type=int, default=None, help="seed for sampled probes")
    sub = ap.add_subparsers(dest="command", required=True)
    sw = sub.add_parser("sweep", parents=[common], help="run a config-driven eps sweep")
    sw.add_argument("--config", required=True, help="JSON config (path or bundled name)")
    sw.add_argument("--timing", action="store_true",
                    help="fill the wallclock_ms column (output is then not reproducible)")
    ce = sub.add_parser("certify", parents=[common], help="run a certification check")
    ce.add_argument("kind", choices=sorted(CERTIFIERS))
    ce.add_argument("--dim", type=int, default=2, help="dimension for kernel/equidist/cell")
    ce.add_argument("--tensor", default=None, help="PeriodicTensor JSON for 'certify cell'")
    ce.add_argument("--config", default=None, help=argparse.SUPPRESS)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    from ._accel import set_threads

    set_threads(args.threads)
    try:
        if args.command == "sweep":
            return run_sweep_command(args)
        return run_certify_command(args)
    except ConfigError as exc:
        print(f"[cli:config] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(exc.describe(), file=sys.stderr)
        return EXIT_RESOLUTION
    except HomogLabError as exc:
        print(exc.describe(), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
