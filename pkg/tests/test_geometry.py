import math

import numpy as np
import pytest

from homoglab.errors import PointNotInterior, PointNotOnBoundary, UnsupportedDimension
from homoglab.geometry import (ConvexDomain, TorusBall, build_quadrature, distance_to_boundary,
                               equidistribution_fraction, normal, sphere_area)


def test_normals():
    assert np.allclose(normal(ConvexDomain.ball(2), [0.0, 1.0]), [0, 1])
    assert np.allclose(normal(ConvexDomain.ball(3), [1.0, 0, 0]), [1, 0, 0])
    assert np.allclose(normal(ConvexDomain.ellipsoid([2, 1]), [2.0, 0.0]), [1, 0])
    with pytest.raises(PointNotOnBoundary):
        normal(ConvexDomain.ball(2), [0.5, 0.5])


def test_normal_matches_implicit_gradient():
    dom = ConvexDomain.ellipsoid([2.0, 1.0, 1.5])
    quad = build_quadrature(dom, 16)
    y = quad.nodes[::97]
    g = dom.implicit_gradient(y)
    assert np.allclose(normal(dom, y), g / np.linalg.norm(g, axis=1, keepdims=True),
                       rtol=1e-10, atol=1e-12)


def test_distance_to_boundary():
    disk = ConvexDomain.ball(2)
    assert distance_to_boundary(disk, [0.0, 0.0]) == pytest.approx(1.0)
    assert distance_to_boundary(disk, [0.75, 0.0]) == pytest.approx(0.25)
    with pytest.raises(PointNotInterior):
        distance_to_boundary(disk, [1.5, 0.0])
    ell = ConvexDomain.ellipsoid([2.0, 1.0])
    t = np.linspace(0, 2 * np.pi, 10 ** 6, endpoint=False)
    brute = np.min(np.hypot(2 * np.cos(t), np.sin(t) - 0.5))
    assert distance_to_boundary(ell, [0.0, 0.5]) == pytest.approx(brute, abs=1e-6)


def test_distance_is_one_lipschitz():
    ell = ConvexDomain.ellipsoid([2.0, 1.0])
    rng = np.random.default_rng(0)
    pts = rng.uniform(-0.6, 0.6, (200, 2)) * [2, 1]
    d = np.array([distance_to_boundary(ell, p) for p in pts])
    for i in range(0, 200, 2):
        assert abs(d[i] - d[i + 1]) <= np.linalg.norm(pts[i] - pts[i + 1]) + 1e-9


def test_quadrature_totals():
    assert build_quadrature(ConvexDomain.ball(2), 128).weights.sum() == pytest.approx(2 * math.pi, rel=1e-12)
    q3 = build_quadrature(ConvexDomain.ball(3), 32)
    assert q3.weights.sum() == pytest.approx(4 * math.pi, rel=1e-10)
    assert q3.integrate(lambda y: y[:, 0] ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-8)
    q4 = build_quadrature(ConvexDomain.ball(4), 8)
    assert q4.weights.sum() == pytest.approx(sphere_area(4), rel=1e-10)
    assert np.abs(ConvexDomain.ball(3).implicit(q3.nodes)).max() <= 1e-12
    with pytest.raises(UnsupportedDimension):
        ConvexDomain.ball(5)


def test_quadrature_converges_for_smooth_integrands():
    dom = ConvexDomain.ellipsoid([1.5, 1.0])
    f = lambda y: np.exp(y[:, 0]) * np.cos(y[:, 1])
    vals = [build_quadrature(dom, r).integrate(f) for r in (4, 8, 16, 64)]
    e1, e2 = abs(vals[0] - vals[3]), abs(vals[1] - vals[3])
    assert e2 <= e1 / 10 or e2 <= 1e-13


def test_equidistribution_trivial_cases():
    disk = ConvexDomain.ball(2)
    whole = TorusBall((0.5, 0.5), 1.0)
    empty = TorusBall((0.5, 0.5), 0.0)
    assert equidistribution_fraction(disk, 50.0, whole)["hard"] == pytest.approx(1.0)
    assert equidistribution_fraction(disk, 50.0, empty)["hard"] == pytest.approx(0.0)


def test_equidistribution_converges():
    disk = ConvexDomain.ball(2)
    ball = TorusBall.with_measure((0.5, 0.5), 0.2)
    t = np.linspace(0, 2 * np.pi, 10 ** 6, endpoint=False)
    errs = []
    for lam in (50.0, 100.0, 200.0):
        y = lam * np.stack([np.cos(t), np.sin(t)], -1)
        dense = np.mean(ball.periodic_distance(y) < ball.radius)
        frac = equidistribution_fraction(disk, lam, ball)
        assert frac["hard"] == pytest.approx(dense, abs=5e-3)
        errs.append(abs(frac["smoothed"] - 0.2))
    assert errs[-1] < errs[0]
