import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from qhjspin import BranchConstants, action_derivative, make_action, reduced_action, schwarzian
from qhjspin.action import action_jet
from qhjspin.errors import SingularDerivativeError, ValidationError

K3 = math.sqrt(3.0)


def test_reduced_action_examples(free_s0):
    assert reduced_action(free_s0, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert reduced_action(free_s0, math.pi / (2 * K3)) == pytest.approx(math.pi / 2, abs=1e-9)
    assert reduced_action(free_s0, 1.0) == pytest.approx(K3, abs=1e-9)
    x = np.linspace(-5, 5, 401)
    np.testing.assert_allclose(reduced_action(free_s0, x), K3 * x, atol=1e-8)


@pytest.mark.parametrize("order, expected", [(1, K3), (2, 0.0), (3, 0.0)])
def test_action_derivative_examples(free_s0, order, expected):
    x = np.linspace(-5, 5, 51)
    np.testing.assert_allclose(action_derivative(free_s0, x, order), expected, atol=1e-10)


def test_branch_constants_validation(free_pair):
    with pytest.raises(ValidationError):
        BranchConstants(0.0, 1.0)
    with pytest.raises(ValidationError):
        make_action(free_pair, "S0", (0.0, 0.5))
    with pytest.raises(ValidationError):
        make_action(free_pair, "X1")


def test_schwarzian_examples():
    assert schwarzian(1.0, 0.0, 0.0) == 0.0
    # tan at 0: (1, 0, 2); textbook Schwarzian would give +2
    assert schwarzian(1.0, 0.0, 2.0) == -2.0
    with pytest.raises(SingularDerivativeError):
        schwarzian(0.0, 1.0, 1.0)


_x, _a, _b, _c, _d = sp.symbols("x a b c d")
_f = sp.sinh(_x) + 2 * _x
_g = (_a * _f + _b) / (_c * _f + _d)
_F = sp.lambdify(_x, [sp.diff(_f, _x, k) for k in (0, 1, 2, 3)])
_G = sp.lambdify((_x, _a, _b, _c, _d), [sp.diff(_g, _x, k) for k in (1, 2, 3)])


@settings(max_examples=80, deadline=None)
@given(
    x=st.floats(-1.5, 1.5),
    coef=st.tuples(*[st.floats(-2, 2)] * 4),
)
def test_schwarzian_mobius_invariance(x, coef):
    a, b, c, d = coef
    f0 = _F(x)[0]
    if abs(a * d - b * c) < 0.1 or abs(c * f0 + d) < 0.2:
        return
    ref = schwarzian(*_F(x)[1:])
    got = schwarzian(*_G(x, a, b, c, d))
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_unwrap_continuity_across_denominator_zeros(natural, linear_pair):
    action = make_action(linear_pair, "S0", (2.0, -0.7))
    # zeros of the arctan denominator theta2
    x = np.linspace(-10, 9.5, 4001)
    theta2 = linear_pair.state(x)[2]
    idx = np.nonzero(np.sign(theta2[1:]) != np.sign(theta2[:-1]))[0]
    assert idx.size >= 3
    for i in idx:
        z = brentq(lambda xx: linear_pair.state(xx)[2], x[i], x[i + 1], xtol=1e-14)
        slope = abs(action_derivative(action, z, 1))
        for h in (1e-4, 1e-6):
            jump = abs(reduced_action(action, z + h) - reduced_action(action, z - h))
            assert jump <= 2 * h * slope * 1.01 + 1e-12


def test_unwrapped_action_matches_arctan_modulo_pi(linear_pair):
    action = make_action(linear_pair, "Z0", (1.5, 0.3))
    x = np.linspace(-10, 9.5, 333)
    t1, c1, t2, c2 = linear_pair.state(x)
    principal = np.arctan(1.5 * c1 / c2 + 0.3)
    k = (reduced_action(action, x) - principal) / math.pi
    np.testing.assert_allclose(k, np.round(k), atol=1e-9)


@pytest.mark.parametrize("branch, consts", [("S0", (1.0, 0.0)), ("S0", (-0.8, 1.2)), ("Z0", (2.0, -0.5))])
def test_first_derivative_vs_central_difference(linear_pair, branch, consts):
    action = make_action(linear_pair, branch, consts)
    x = np.linspace(-9.5, 9.0, 37)
    h = 1e-4
    fd = (reduced_action(action, x + h) - reduced_action(action, x - h)) / (2 * h)
    d1 = action_derivative(action, x, 1)
    d3 = action_derivative(action, x, 3)
    # O(h^2) truncation plus interpolation noise of the dense output
    bound = h**2 / 6 * np.abs(d3) + 1e-8 * np.abs(d1) + 1e-8
    assert np.all(np.abs(fd - d1) <= 2 * bound + 1e-7)


def _richardson(fn, x, h):
    """Fourth-order central difference."""
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12 * h)


@pytest.mark.parametrize("branch, consts", [("S0", (1.0, 0.0)), ("S0", (2.0, -0.7)), ("Z0", (1.0, 0.4))])
def test_higher_derivatives_vs_extrapolated_differences(linear_pair, branch, consts):
    action = make_action(linear_pair, branch, consts)
    x = np.linspace(-9.5, 8.0, 29)
    h = 2e-3
    for order in (2, 3):
        fd = _richardson(lambda xx: action_derivative(action, xx, order - 1), x, h)
        exact = action_derivative(action, x, order)
        scale = np.max(np.abs(exact))
        assert np.max(np.abs(fd - exact)) / scale < 1e-6


def test_first_derivative_sign_follows_cross_current(linear_pair):
    x = np.linspace(-10, 9.5, 101)
    for consts in [(1.0, 0.0), (-1.0, 0.5)]:
        s0 = make_action(linear_pair, "S0", consts)
        expected = np.sign(consts[0] * linear_pair.cross_current0)
        assert np.all(np.sign(action_jet(s0, x).d1) == expected)
