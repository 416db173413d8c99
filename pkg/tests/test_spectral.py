import math

import numpy as np
import pytest
from scipy.special import spherical_jn

from homoglab.errors import UnsupportedData
from homoglab.geometry import ConvexDomain
from homoglab.spectral import harmonic_extension
from homoglab.torus import BoundaryData, TorusFunction

import oracles


def test_disk_extension_matches_frozen_value():
    data = BoundaryData.from_torus(TorusFunction.character([0, 1]))
    f = harmonic_extension(ConvexDomain.ball(2), data, 0.1)
    assert f.at_points(np.array([[0.3, 0.2]]))[0] == pytest.approx(oracles.DISK_POINT_EPS_1_10,
                                                                  abs=1e-12)


def test_zonal_extension_matches_frozen_value():
    data = BoundaryData.from_torus(TorusFunction.character([0, 0, 1]))
    f = harmonic_extension(ConvexDomain.ball(3), data, 1 / 6)
    assert f.at_points(np.array([[0.2, -0.1, 0.3]]))[0] == pytest.approx(
        oracles.BALL_POINT_EPS_1_6, abs=1e-12)


def test_plane_wave_extension_off_axis():
    # g = Ex(y_1 + y_2): plane wave along (1,1,0)/sqrt2 with k = 2 pi sqrt2 / eps
    eps = 0.25
    data = BoundaryData.from_torus(TorusFunction.character([1, 1, 0]))
    f = harmonic_extension(ConvexDomain.ball(3), data, eps)
    x = np.array([[0.1, 0.4, -0.2]])
    k = 2 * math.pi * math.sqrt(2) / eps
    r = np.linalg.norm(x)
    c = (x[0, 0] + x[0, 1]) / math.sqrt(2) / r
    from scipy.special import eval_legendre
    ls = np.arange(160)
    ref = np.sum(1j ** ls * (2 * ls + 1) * spherical_jn(ls, k) * r ** ls * eval_legendre(ls, c))
    assert f.at_points(x)[0] == pytest.approx(ref, abs=1e-11)


def test_center_value_is_sphere_average():
    eps = 1 / 20.3
    data = BoundaryData.from_torus(TorusFunction.character([0, 0, 1]))
    f = harmonic_extension(ConvexDomain.ball(3), data, eps)
    k = 2 * math.pi / eps
    assert f.at_points(np.zeros((1, 3)))[0] == pytest.approx(math.sin(k) / k, abs=1e-13)


def test_unsupported_data_raises():
    # non-zonal slow coefficient with a non-axis mode in d = 3
    data = BoundaryData(3, [[1, 1, 0]], coeff_fn=lambda p: p[:, :1].astype(complex))
    with pytest.raises(UnsupportedData):
        harmonic_extension(ConvexDomain.ball(3), data, 0.1)


def test_angular_rule_size_caps():
    from homoglab.errors import MeshUnderResolved
    from homoglab.spectral import MAX_ANGULAR_NODES, AngularRule
    with pytest.raises(MeshUnderResolved):
        AngularRule.ring(2 * MAX_ANGULAR_NODES)
    with pytest.raises(MeshUnderResolved):
        AngularRule.full(3, 4096)
