import numpy as np
import pytest

from homoglab.errors import UnsupportedDimension
from homoglab.geometry import ConvexDomain
from homoglab.neumann import (dual_path_check, dual_path_probes, f_eps_decay,
                              neumann_gradient_sweep, neumann_sweep)
from homoglab.solver import solve_neumann_v
from homoglab.torus import BoundaryData, TorusFunction

BALL = ConvexDomain.ball(3)
EX3 = BoundaryData.from_torus(TorusFunction.character([0, 0, 1]))
ONE = BoundaryData.from_torus(TorusFunction.constant(3, 1.0))
EPS = [0.25, 0.125, 0.0625, 0.03125]


def test_constant_data_sweeps_vanish():
    r = neumann_sweep(BALL, ONE, 1, EPS, dual_path=False)
    assert np.all(r["sweep"].arrays(1.0)[1] <= 1e-8) and r["passed"]
    g = neumann_gradient_sweep(BALL, ONE, 1, EPS)
    assert np.all(g["sweep"].arrays(1.0)[1] <= 1e-8) and g["passed"]


def test_coarse_sweeps_have_expected_rates():
    r = neumann_sweep(BALL, EX3, 1, EPS, dual_path=True)
    assert r["fit"].slope >= 0.9
    assert all(c["max_diff"] <= 1e-6 for c in r["dual_path"])
    g = neumann_gradient_sweep(BALL, EX3, 1, EPS)
    assert g["fit"].slope >= 0.8 and g["expected"] == pytest.approx(0.8)


def test_gradient_slope_stable_under_layer_refinement():
    from homoglab.norms import Problem, fit_rate, run_sweep
    prob = Problem("neumann_grad", BALL, data=EX3)
    s1 = fit_rate(run_sweep(prob, [1], EPS, mesh_density=1)).slope
    s2 = fit_rate(run_sweep(prob, [1], EPS, mesh_density=2)).slope
    assert abs(s1 - s2) <= 0.05


def test_invariant_under_added_constant():
    shifted = EX3 + ONE.scaled(3.5)
    pts = dual_path_probes(BALL, seed=4)
    for eps in (0.1, None):
        a = solve_neumann_v(BALL, EX3, eps, pts).values
        b = solve_neumann_v(BALL, shifted, eps, pts).values
        assert np.allclose(a, b, atol=1e-10, rtol=0)


def test_dual_path_probes_are_deep():
    pts = dual_path_probes(BALL, count=50, seed=1)
    assert np.all(1 - np.linalg.norm(pts, axis=1) >= 0.25)
    assert dual_path_check(BALL, EX3, 1 / 20)["passed"]


def test_guards():
    with pytest.raises(ValueError):
        neumann_gradient_sweep(BALL, EX3, 1, EPS, kappa=1.0)
    disk = ConvexDomain.ball(2)
    with pytest.raises(UnsupportedDimension):
        f_eps_decay(disk, BoundaryData.from_torus(TorusFunction.character([0, 1])), EPS)
    with pytest.raises(UnsupportedDimension):
        neumann_sweep(disk, BoundaryData.from_torus(TorusFunction.character([0, 1])), 1, EPS)


def test_boundary_average_decay_d3():
    r = f_eps_decay(BALL, EX3, [2.0 ** -k for k in range(3, 8)])
    assert r["slope_eps"] >= 0.9
