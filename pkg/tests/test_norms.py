import math

import numpy as np
import pytest

from homoglab.errors import DegenerateFit
from homoglab.geometry import ConvexDomain
from homoglab.norms import (EpsSweep, Problem, SweepEntry, angular_rule_for, build_volume_mesh,
                            check_eps_list, fit_rate, lp_norm, normalized_norms,
                            optimality_check, oscillation_sup, run_sweep, slopes_so_far)
from homoglab.spectral import DifferenceField, harmonic_extension
from homoglab.torus import BoundaryData, TorusFunction

DISK = ConvexDomain.ball(2)
EX2 = BoundaryData.from_torus(TorusFunction.character([0, 1]))


def field_for(data, eps, dom=DISK):
    a = harmonic_extension(dom, data, eps)
    b = harmonic_extension(dom, data, None)
    return DifferenceField(a, b)


def mesh_for(fld, eps, dom=DISK, density=1):
    return build_volume_mesh(dom, eps, angular_rule_for(fld, dom.dim), density=density)


def test_mesh_weights_and_layer():
    for dim in (2, 3):
        dom = ConvexDomain.ball(dim)
        fld = field_for(BoundaryData.from_torus(TorusFunction.character([0] * (dim - 1) + [1])),
                        1 / 32, dom)
        mesh = mesh_for(fld, 1 / 32, dom)
        vol = math.pi if dim == 2 else 4 * math.pi / 3
        assert mesh.total_weight() == pytest.approx(vol, rel=1e-8)
        assert mesh.h_min <= (1 / 32) / 4


def test_lp_norm_trivial_fields():
    zero = field_for(EX2.averaged(), 0.1)
    assert lp_norm(zero, mesh_for(zero, 0.1), 1.0) == 0
    const = harmonic_extension(DISK, BoundaryData.from_torus(TorusFunction.constant(2, 1.5)), None)
    mesh = build_volume_mesh(DISK, 0.1, angular_rule_for(const, 2))
    assert lp_norm(const, mesh, 1.0, guard=False) == pytest.approx(1.5 * math.pi, rel=1e-8)


def test_lp_norm_matches_denser_mesh():
    eps = 1 / 64
    fld = field_for(EX2, eps)
    coarse = lp_norm(fld, mesh_for(fld, eps), 1.0)
    # independent mesh: 10x the radial panels and Gauss order, finer layers
    dense = build_volume_mesh(DISK, eps, angular_rule_for(fld, 2).refined(), ratio=0.8,
                              gl_order=12, bulk_panels=40)
    assert coarse == pytest.approx(lp_norm(fld, dense, 1.0, guard=False), rel=1e-2)


def test_normalized_norms_monotone_in_p():
    fld = field_for(EX2, 1 / 16)
    vals = normalized_norms(fld, mesh_for(fld, 1 / 16), [1.0, 1.5, 2.0, 4.0])
    assert np.all(np.diff(vals) >= -1e-12)


def test_constant_data_sweep_vanishes():
    one = BoundaryData.from_torus(TorusFunction.constant(2, 1.0))
    sweep = run_sweep(Problem("dirichlet", DISK, data=one), [1], [0.25, 0.125, 0.0625, 0.03125])
    assert np.all(sweep.arrays(1.0)[1] <= 1e-8)
    with pytest.raises(DegenerateFit):
        fit_rate(sweep)


def test_d2_sweep_monotone():
    eps = [2.0 ** -k for k in range(4, 8)]
    _, norms = run_sweep(Problem("dirichlet", DISK, data=EX2), [1], eps).arrays(1.0)
    assert np.all(np.diff(norms) < 0)


def test_fit_rate_synthetic():
    eps = 2.0 ** -np.arange(3, 10)
    f = fit_rate(eps, eps ** 0.5)
    assert f.slope == pytest.approx(0.5) and f.r2 == pytest.approx(1.0)
    g = fit_rate(eps, eps * np.abs(np.log(eps)), "log")
    assert g.slope == pytest.approx(1.0)
    with pytest.raises(DegenerateFit):
        fit_rate(eps[:3], eps[:3])


def test_slopes_so_far():
    eps = 2.0 ** -np.arange(3, 8)
    s = slopes_so_far(eps, 3 * eps ** 0.7)
    assert math.isnan(s[0]) and np.allclose(s[1:], 0.7)


def test_check_eps_list():
    assert check_eps_list([0.5, 0.25, 0.125]) == pytest.approx(0.5)
    for bad in ([0.1, 0.05, 0.02], [0.1, 0.2, 0.4], [2.0, 1.0, 0.5], [0.5, 0.5, 0.5]):
        with pytest.raises(ValueError):
            check_eps_list(bad)


def test_optimality_not_applicable_for_constant_data():
    one = BoundaryData.from_torus(TorusFunction.constant(2, 1.0))
    assert oscillation_sup(DISK, one) == 0
    sweep = EpsSweep("dirichlet", 2, [SweepEntry(e, 1.0, 1e-16) for e in (0.5, 0.25, 0.125, 0.0625)])
    assert optimality_check(sweep, 1.0, 0.0)["status"] == "NotApplicable"


def test_oscillation_sup_single_mode():
    assert oscillation_sup(DISK, EX2) == pytest.approx(1.0)
