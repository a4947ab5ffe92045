import math

import numpy as np
import pytest
from scipy.optimize import brentq

from qhjspin import ConstantPotential, HarmonicPotential, PhysicalSetup, make_action, solve_spinor_pair
from qhjspin.dynamics import (
    classical_conservation_residual,
    conjugate_momentum,
    conservation_residual,
    integrate_trajectory,
    lagrangian,
    limit_report,
    momentum_identity_error,
    quantum_momentum,
    velocity,
)
from qhjspin.errors import CannotStartError, NodeError, SuperluminalError, TurningPointError
from qhjspin.qshje import energy_denominator, f_from_action

K3 = math.sqrt(3.0)
FREE = ConstantPotential(0.0)


def test_lagrangian_examples(natural):
    assert lagrangian(natural, FREE, 1.0, 0.0, K3 / 2) == pytest.approx(-0.5, abs=1e-15)
    assert lagrangian(natural, FREE, 3.7, 1.0, 0.0) == -1.0
    with pytest.raises(SuperluminalError):
        lagrangian(natural, FREE, 1.0, 0.0, 1.0)


def test_conservation_examples(natural):
    assert conservation_residual(natural, FREE, 1.0, 0.0, K3 / 2) == pytest.approx(0.0, abs=1e-15)
    rest = PhysicalSetup(energy=1.0)
    assert conservation_residual(rest, FREE, 0.4, 2.0, 0.0) == 0.0


@pytest.mark.parametrize("xdot", [0.0, 0.1, 0.5, K3 / 2, 0.99])
def test_classical_reduction_bitwise(natural, linear_pot, xdot):
    for x in (-3.0, 0.0, 4.2):
        assert conservation_residual(natural, linear_pot, 1.0, x, xdot) == \
            classical_conservation_residual(natural, linear_pot, x, xdot)


def test_momentum_constant_potential(natural):
    for sigma in (1, -1):
        assert conjugate_momentum(natural, FREE, 0.7, sigma) == pytest.approx(1.5, abs=1e-15)
    # product identity with the free-particle velocity and S0' = sqrt(3)
    assert (K3 / 2) * K3 == pytest.approx(conjugate_momentum(natural, FREE, 0.0, 1), rel=1e-15)


def test_momentum_branches_differ(natural, linear_pot):
    p_plus = conjugate_momentum(natural, linear_pot, 0.0, +1)
    p_minus = conjugate_momentum(natural, linear_pot, 0.0, -1)
    assert abs(p_plus - p_minus) > 1e-4
    # both sit below the spinless value since the curvature term is positive
    assert p_minus < p_plus < quantum_momentum(natural, linear_pot, 0.0)


def test_momentum_turning_point(natural, linear_pot):
    with pytest.raises(TurningPointError):
        conjugate_momentum(natural, linear_pot, 10.0, +1)


def test_velocity_examples(free_s0, linear_wide_pair):
    assert velocity(free_s0, 1.0, +1) == pytest.approx(K3 / 2, abs=1e-12)
    assert velocity(free_s0, -2.0, -1) == pytest.approx(-K3 / 2, abs=1e-12)
    assert velocity(make_action(linear_wide_pair, "S0"), 10.0) == 0.0


def test_velocity_node_region(natural, linear_pot, linear_wide_pair):
    z0 = make_action(linear_wide_pair, "Z0")
    root = brentq(lambda x: energy_denominator(natural, linear_pot, x, -1), 5.0, 9.9)
    assert 8.0 < root < 9.0
    # f < 0 between the quantum and the classical turning point
    assert f_from_action(z0, 9.0) < 0
    with pytest.raises(NodeError):
        velocity(z0, 9.0)
    with pytest.raises(CannotStartError):
        integrate_trajectory(z0, 9.0, (0.0, 1.0))


def test_free_trajectory_uniform_motion(free_s0):
    traj = integrate_trajectory(free_s0, 0.0, (0.0, 2.0))
    assert traj.t[-1] == 2.0
    np.testing.assert_allclose(traj.x, K3 / 2 * traj.t, atol=1e-8)
    assert traj.max_conservation_error() < 1e-10
    back = integrate_trajectory(free_s0, 1.0, (0.0, 2.0), direction=-1)
    np.testing.assert_allclose(back.x, 1.0 - K3 / 2 * back.t, atol=1e-8)


@pytest.mark.parametrize("branch", ["S0", "Z0"])
def test_linear_turning_point_matches_denominator_root(natural, linear_pot, linear_wide_pair, branch):
    action = make_action(linear_wide_pair, branch)
    sigma = 1 if branch == "S0" else -1
    root = brentq(lambda x: energy_denominator(natural, linear_pot, x, sigma), 5.0, 9.9999, xtol=1e-15)
    traj = integrate_trajectory(action, 0.0, (0.0, 200.0), on_turning="stop")
    assert traj.event[-1] == "turning_point"
    assert traj.events[-1]["x"] == pytest.approx(root, abs=1e-10)
    assert np.all(np.diff(traj.x) > 0)
    assert traj.max_conservation_error() < 1e-8
    assert momentum_identity_error(action, traj) < 1e-6


def test_reflection_returns_along_same_path(linear_wide_pair):
    action = make_action(linear_wide_pair, "S0")
    stop = integrate_trajectory(action, 5.0, (0.0, 200.0), on_turning="stop")
    t_hit = stop.events[-1]["t"]
    traj = integrate_trajectory(action, 5.0, (0.0, 2 * t_hit))
    assert [e["kind"] for e in traj.events] == ["turning_point"]
    assert traj.x[-1] == pytest.approx(5.0, abs=1e-8)
    assert traj.xdot[-1] < 0
    assert traj.max_conservation_error() < 1e-8


def test_domain_exit_event(free_s0):
    traj = integrate_trajectory(free_s0, 4.0, (0.0, 10.0))
    assert traj.events == [{"kind": "domain_exit", "t": pytest.approx(2 / K3, abs=1e-8), "x": 5.0}]


def test_harmonic_mirror_symmetry(natural):
    pot = HarmonicPotential(0.1)
    pair = solve_spinor_pair(natural, pot, (-6.0, 6.0), (1.0, 0.0), (0.0, 1.0), x0=0.0)
    action = make_action(pair, "S0")
    t_span = (0.0, 30.0)
    fwd = integrate_trajectory(action, 0.0, t_span, direction=+1)
    bwd = integrate_trajectory(action, 0.0, t_span, direction=-1)
    assert [e["kind"] for e in fwd.events] == [e["kind"] for e in bwd.events]
    for ef, eb in zip(fwd.events, bwd.events):
        assert ef["t"] == pytest.approx(eb["t"], abs=1e-8)
        assert ef["x"] == pytest.approx(-eb["x"], abs=1e-9)
    t = np.linspace(0.0, 30.0, 301)
    np.testing.assert_allclose(np.interp(t, fwd.t, fwd.x), -np.interp(t, bwd.t, bwd.x), atol=1e-3)
    assert fwd.x[-1] == pytest.approx(-bwd.x[-1], abs=1e-8)


def test_limit_report_constant_potential(free_s0):
    rep = limit_report(free_s0, np.linspace(-4, 4, 21))
    assert rep.regime.tag == "constant_potential"
    assert np.all(rep.momentum_deviation == 0.0)
    assert rep.claims["momentum_reduces"] and rep.claims["f_equals_1"]


def test_limit_report_classical_surrogate(linear_pair, linear_grid):
    rep = limit_report(make_action(linear_pair, "S0"), linear_grid, classical_surrogate=True)
    assert rep.regime.tag == "classical"
    assert np.all(rep.f_minus_1 == 0.0)
    assert np.all(rep.momentum_deviation == 0.0)
    assert all(rep.claims.values())


def test_limit_report_slow_linear_is_measured_only(linear_wide_pair):
    grid = np.linspace(9.5, 9.9, 41)
    rep = limit_report(make_action(linear_wide_pair, "S0"), grid)
    assert rep.regime.tag == "purely_quantum"
    assert np.all(rep.t_over_mc2 <= 0.05)
    assert np.all(np.isfinite(rep.momentum_deviation))
    assert set(rep.claims) == {"f_equals_1", "momentum_reduces"}
