import math

import numpy as np
import pytest

from qhjspin import (
    ConstantPotential,
    HarmonicPotential,
    LinearPotential,
    PhysicalSetup,
    SmoothStepPotential,
    SpinorState,
    cross_current,
    solve_spinor_pair,
    spinor_rhs,
)
from qhjspin.errors import IndependenceError, OutOfDomainError

K3 = math.sqrt(3.0)


def test_rhs_examples(natural):
    free = ConstantPotential(0.0)
    assert spinor_rhs(natural, free, 0.0, SpinorState(1.0, 0.0)) == SpinorState(0.0, 1.0)
    assert spinor_rhs(natural, free, 0.0, SpinorState(0.0, 1.0)) == SpinorState(-3.0, 0.0)
    assert spinor_rhs(natural, free, 0.0, SpinorState(0.0, 0.0)) == SpinorState(0.0, 0.0)


def test_rhs_is_the_complex_dirac_equation(natural):
    """With phi = i chi, -i hbar c sigma_x psi' = (E - V - sigma_z m c^2) psi."""
    pot = LinearPotential(0.3, offset=0.2)
    x, s = 0.7, SpinorState(0.4, -1.3)
    d = spinor_rhs(natural, pot, x, s)
    psi = np.array([s.theta, 1j * s.chi])
    dpsi = np.array([d.theta, 1j * d.chi])
    sx = np.array([[0, 1], [1, 0]])
    sz = np.array([[1, 0], [0, -1]])
    v = pot(x)
    lhs = -1j * natural.hbar_c * sx @ dpsi
    rhs = ((natural.energy - v) * np.eye(2) - sz * natural.rest_energy) @ psi
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_free_particle_closed_form(free_pair):
    x = np.linspace(-5, 5, 301)
    t1, c1, t2, c2 = free_pair.state(x)
    np.testing.assert_allclose(t1, np.sin(K3 * x), atol=1e-9)
    np.testing.assert_allclose(t2, np.cos(K3 * x), atol=1e-9)
    np.testing.assert_allclose(c1, -np.cos(K3 * x) / K3, atol=1e-9)
    np.testing.assert_allclose(c2, np.sin(K3 * x) / K3, atol=1e-9)


def test_cross_current_examples(natural, free_pair):
    pair = solve_spinor_pair(natural, ConstantPotential(0.0), (-5, 5), (1, 0), (0, 1), x0=0.0)
    assert cross_current(pair, 0.0) == 1.0
    assert cross_current(pair, 5.0) == pytest.approx(1.0, rel=100 * pair.tol)
    # theta1 chi2 - theta2 chi1 at x = 0: 0*0 - 1*(-1/sqrt3)
    assert cross_current(free_pair, 3.3) == pytest.approx(1 / K3, rel=1e-9)
    with pytest.raises(OutOfDomainError):
        cross_current(pair, 5.5)


def test_dependent_initial_states(natural):
    with pytest.raises(IndependenceError):
        solve_spinor_pair(natural, ConstantPotential(0.0), (-1, 1), (1, 0), (2, 0))


@pytest.mark.parametrize("pot, domain", [
    (ConstantPotential(0.3), (-6, 6)),
    (LinearPotential(0.1), (-10, 12)),
    (HarmonicPotential(0.02), (-12, 12)),
    (SmoothStepPotential(0.6, 0.5), (-8, 8)),
])
def test_cross_current_conservation(natural, pot, domain):
    pair = solve_spinor_pair(natural, pot, domain, (1, 0.2), (-0.3, 1), x0=0.5)
    assert pair.max_cross_current_drift() <= 100 * pair.tol
    x = np.linspace(*domain, 777)
    k = pair.cross_current(x)
    assert np.max(np.abs(k - pair.cross_current0)) <= 100 * pair.tol * abs(pair.cross_current0)


def test_second_order_consistency_constant_potential(natural):
    """theta'' + k^2 theta = 0, with theta'' by a five-point difference of theta'."""
    pot = ConstantPotential(0.4)
    pair = solve_spinor_pair(natural, pot, (-4, 4), (1, 0), (0, 1))
    k2 = ((natural.energy - 0.4) ** 2 - 1.0) / natural.hbar_c**2
    h = 1e-3
    x = np.linspace(-3.9, 3.9, 41)

    def dtheta(xx):
        return pair.derivative(xx)[0]

    d2 = (-dtheta(x + 2 * h) + 8 * dtheta(x + h) - 8 * dtheta(x - h) + dtheta(x - 2 * h)) / (12 * h)
    theta = pair.state(x)[0]
    scale = np.maximum(np.abs(d2), k2 * np.abs(theta)).max()
    assert np.max(np.abs(d2 + k2 * theta)) / scale < 100 * pair.tol


def test_linearity(natural, linear_pot):
    base = solve_spinor_pair(natural, linear_pot, (-5, 5), (0.3, 1.1), (1, 0))
    scaled = solve_spinor_pair(natural, linear_pot, (-5, 5), (-2.5 * 0.3, -2.5 * 1.1), (1, 0))
    x = np.linspace(-5, 5, 101)
    np.testing.assert_allclose(scaled.state(x)[:2], -2.5 * base.state(x)[:2], rtol=1e-8, atol=1e-9)


def test_interior_start_covers_both_sides(natural, linear_pot):
    pair = solve_spinor_pair(natural, linear_pot, (-3, 4), (1, 0), (0, 1), x0=1.0)
    y = pair.state(np.array([-3.0, 1.0, 4.0]))
    np.testing.assert_allclose(y[:, 1], [1, 0, 0, 1])
    assert pair.nodes[0] == -3.0 and pair.nodes[-1] == 4.0
