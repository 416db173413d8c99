"""Compare the numba and numpy backends of the hot kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--threads N]

Each kernel runs on identical inputs with both backends; the table reports
the best wallclock over ``--repeat`` runs (numba after one warm-up call that
absorbs compilation) and the largest absolute difference of the outputs.
"""
import argparse
import time

import numpy as np

from homoglab import _accel  # noqa: F401  (sets the numba threading layer)
from homoglab import _kernels_numpy
from homoglab.geometry import build_quadrature, ConvexDomain, sphere_area

try:
    from homoglab import _kernels_numba
except ImportError:  # numba missing: numpy timings only
    _kernels_numba = None


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(rng):
    for dim, res in ((2, 4096), (3, 96)):
        dom = ConvexDomain.ball(dim)
        quad = build_quadrature(dom, res)
        nodes = np.ascontiguousarray(quad.nodes)
        wg = quad.weights * np.exp(2j * np.pi * 8 * nodes[:, -1])
        pts = rng.uniform(-0.5, 0.5, (256, dim))
        args = (pts, nodes, wg.astype(np.complex128), np.zeros(dim), 1.0, sphere_area(dim))
        yield f"poisson_sum d={dim} ({len(nodes)} nodes x 256 pts)", "poisson_sum", args
        if dim == 3:
            yield f"neumann_sum d=3 ({len(nodes)} nodes x 256 pts)", "neumann_sum", args[:3]
    coeffs = rng.standard_normal(2048) + 1j * rng.standard_normal(2048)
    r = rng.uniform(0, 1, 20000)
    t = rng.uniform(-1, 1, 20000)
    yield "legendre_series l<2048 (20000 pts)", "legendre_series", (coeffs, r, t, True)
    yield "gegenbauer_series l<2048 nu=1 (20000 pts)", "gegenbauer_series", (coeffs, 1.0, r, t)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    if _kernels_numba is not None and args.threads:
        import numba
        numba.set_num_threads(args.threads)

    rng = np.random.default_rng(0)
    print(f"{'kernel':<48} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8} {'max diff':>10}")
    for label, name, kargs in cases(rng):
        t_np, ref = _best(lambda: getattr(_kernels_numpy, name)(*kargs), args.repeat)
        if _kernels_numba is None:
            print(f"{label:<48} {t_np:>10.4f} {'-':>10} {'-':>8} {'-':>10}")
            continue
        fast = getattr(_kernels_numba, name)
        fast(*kargs)  # compile
        t_nb, out = _best(lambda: fast(*kargs), args.repeat)
        ref_a = np.asarray(ref[0] if isinstance(ref, tuple) else ref)
        out_a = np.asarray(out[0] if isinstance(out, tuple) else out)
        diff = float(np.abs(ref_a - out_a).max())
        print(f"{label:<48} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
