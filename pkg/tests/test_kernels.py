import math

import numpy as np
import pytest

from homoglab.errors import (PointNotInterior, PointNotOnBoundary, QuadratureUnderResolved,
                             UnsupportedDimension)
from homoglab.geometry import ConvexDomain, build_quadrature
from homoglab.kernels import (KernelFamily, certify_neumann_bounds, certify_poisson_bounds,
                              certify_poisson_mass, exact_poisson_c0, neumann_eval,
                              poisson_eval)

DISK = ConvexDomain.ball(2)
BALL = ConvexDomain.ball(3)


def unit(rng, n, d):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_poisson_closed_form_values():
    assert poisson_eval(DISK, [0.0, 0.0], [0.6, 0.8]) == pytest.approx(1 / (2 * math.pi))
    assert poisson_eval(BALL, [0.0, 0, 0], [0, 0, 1.0]) == pytest.approx(1 / (4 * math.pi))
    assert poisson_eval(DISK, [0.5, 0.0], [1.0, 0.0]) == pytest.approx(3 / (2 * math.pi))


def test_pair_checks():
    with pytest.raises(PointNotInterior):
        poisson_eval(DISK, [1.2, 0.0], [1.0, 0.0])
    with pytest.raises(PointNotOnBoundary):
        poisson_eval(DISK, [0.1, 0.0], [0.9, 0.0])
    with pytest.raises(UnsupportedDimension):
        KernelFamily("neumann", DISK)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_poisson_positive_and_rotation_invariant(dim):
    dom = ConvexDomain.ball(dim)
    rng = np.random.default_rng(dim)
    x = 0.9 * unit(rng, 50, dim) * rng.uniform(0, 1, (50, 1))
    y = unit(rng, 50, dim)
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    p = poisson_eval(dom, x, y)
    assert np.all(p > 0)
    assert np.allclose(poisson_eval(dom, x @ q.T, y @ q.T), p, rtol=1e-12, atol=0)


@pytest.mark.parametrize("kind,dim", [("poisson", 2), ("poisson", 3), ("poisson", 4),
                                      ("neumann", 3)])
def test_harmonicity(kind, dim):
    dom = ConvexDomain.ball(dim)
    rng = np.random.default_rng(10 + dim)
    x = 0.8 * unit(rng, 100, dim) * rng.uniform(0, 1, (100, 1))
    y = unit(rng, 100, dim)
    assert np.max(KernelFamily(kind, dom).harmonicity_residual(x, y)) <= 1e-6


def test_poisson_mass():
    assert certify_poisson_mass(DISK, points=[[0.0, 0.0]], tol=1e-12)["passed"]
    r = certify_poisson_mass(DISK, points=[[0.9, 0.0], [0.0, -0.9]], tol=1e-8, resolution=256)
    assert r["passed"]
    with pytest.raises(QuadratureUnderResolved):
        certify_poisson_mass(DISK, points=[[1 - 1e-4, 0.0]], resolution=256)


def test_poisson_bound_certificate_2d():
    r = certify_poisson_bounds(DISK, sample_size=2000, seed=1)
    assert exact_poisson_c0(DISK) == pytest.approx(1 / math.pi)
    assert r["C_0"]["sup"] <= 2 / math.pi * (1 + 1e-6)
    assert r["C_0"]["sup"] <= exact_poisson_c0(DISK) * (1 + 1e-6)
    assert r["passed"] and r["stable"]


def test_poisson_c0_ratio_bounded_along_normal_ray():
    y = np.array([1.0, 0.0])
    t = np.logspace(-8, -1, 20)
    x = np.stack([1 - t, np.zeros_like(t)], -1)
    ratio = poisson_eval(DISK, x, np.repeat(y[None], 20, 0)) * t ** 2 / t
    assert np.all(ratio <= exact_poisson_c0(DISK) * (1 + 1e-9))


def test_poisson_c0_ratio_depends_on_radius_only():
    # brute-force grid over (|x|, angle): P |x-y|^d / d(x) = (1 + |x|) / omega_d,
    # so antipodal pairs sit at the minimum over angles (all angles tie)
    r = np.linspace(0.0, 0.99, 100)
    a = np.linspace(0, np.pi, 181)
    rr, aa = np.meshgrid(r, a, indexing="ij")
    x = np.stack([rr * np.cos(aa), rr * np.sin(aa)], -1).reshape(-1, 2)
    y = np.tile([1.0, 0.0], (len(x), 1))
    dx = 1 - np.linalg.norm(x, axis=1)
    ratio = (poisson_eval(DISK, x, y) * np.linalg.norm(x - y, axis=1) ** 2 / dx).reshape(rr.shape)
    assert np.allclose(ratio, (1 + rr) / (2 * math.pi), rtol=1e-12)
    assert np.allclose(ratio[:, -1], ratio.min(axis=1), rtol=1e-12)


def test_neumann_bound_certificate():
    r = certify_neumann_bounds(BALL, sample_size=2000, seed=2)
    assert r["stable"]


def test_neumann_degree_one_data():
    # g = y_3 on the unit sphere: v = x_3 (zero boundary mean, dv/dn = g)
    quad = build_quadrature(BALL, 96)
    rng = np.random.default_rng(3)
    x = 0.6 * unit(rng, 10, 3) * rng.uniform(0, 1, (10, 1))
    v = np.array([np.dot(quad.weights, neumann_eval(BALL, np.repeat(p[None], len(quad.nodes), 0),
                                                    quad.nodes) * quad.nodes[:, 2]) for p in x])
    assert np.allclose(v, x[:, 2], atol=1e-6)


def test_neumann_annihilates_constants():
    quad = build_quadrature(BALL, 96)
    x = np.array([0.3, -0.2, 0.1])
    v = np.dot(quad.weights, neumann_eval(BALL, np.repeat(x[None], len(quad.nodes), 0), quad.nodes))
    assert abs(v) <= 1e-8
