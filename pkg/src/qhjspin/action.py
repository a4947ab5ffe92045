"""Reduced actions built from ratios of two Dirac solutions.

For the ``S0`` branch the ratio uses the upper components, for ``Z0`` the
rescaled lower components (the factor ``i`` of ``phi = i chi`` cancels in the
ratio)::

    S0 = hbar * arctan(a * theta1 / theta2 + b)
    Z0 = hbar * arctan(d * chi1 / chi2 + e)

Derivatives up to third order are evaluated in closed form from the spinor
values and the Dirac equation; nothing here differentiates interpolated data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dirac import SpinorSolutionPair
from .errors import DegeneratePairError, SingularDerivativeError, ValidationError

__all__ = [
    "S0",
    "Z0",
    "BranchConstants",
    "ReducedAction",
    "ActionJet",
    "make_action",
    "reduced_action",
    "action_derivative",
    "action_jet",
    "schwarzian",
    "branch_sign",
]

S0 = "S0"
Z0 = "Z0"
_SIGNS = {S0: 1, Z0: -1}


def branch_sign(branch):
    """+1 for ``S0`` (mass term added), -1 for ``Z0``."""
    try:
        return _SIGNS[branch]
    except KeyError:
        raise ValidationError(f"unknown action branch {branch!r}", field="branch") from None


@dataclass(frozen=True)
class BranchConstants:
    """``(a, b)`` for S0 or ``(d, e)`` for Z0; the scale must be nonzero."""

    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.scale) and math.isfinite(self.shift)):
            raise ValidationError("BranchConstants must be finite", field="BranchConstants")
        if self.scale == 0:
            raise ValidationError(
                "BranchConstants: scale constant (a or d) must be nonzero", field="BranchConstants")


@dataclass(frozen=True)
class ActionJet:
    """First three x-derivatives of a reduced action."""

    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray


@dataclass(frozen=True, eq=False)
class ReducedAction:
    branch: str
    constants: BranchConstants
    pair: SpinorSolutionPair
    # unwrapped angle (in radians) at the refined nodes
    _nodes: np.ndarray = field(repr=False, default=None)
    _angles: np.ndarray = field(repr=False, default=None)

    @property
    def sigma(self):
        return branch_sign(self.branch)

    @property
    def setup(self):
        return self.pair.setup

    @property
    def potential(self):
        return self.pair.potential


def _components(action, x):
    """Ratio components (p1, q1, p2, q2) and the signed coefficients of p' and q'."""
    setup = action.pair.setup
    t1, c1, t2, c2 = action.pair.state(x)
    v, dv, d2v = action.pair.potential.derivatives(x)
    w_plus = setup.energy - v + setup.rest_energy
    w_minus = setup.energy - v - setup.rest_energy
    if action.sigma == 1:
        # p = theta, p' = -W+ q / hc ; q = chi, q' = W- p / hc
        return (t1, c1, t2, c2), (-1.0, w_plus), (1.0, w_minus), dv, d2v
    return (c1, t1, c2, t2), (1.0, w_minus), (-1.0, w_plus), dv, d2v


def _angle(action, x):
    (p1, _, p2, _), *_ = _components(action, x)
    k = action.constants
    return np.arctan2(k.scale * p1 + k.shift * p2, p2)


def action_jet(action: ReducedAction, x) -> ActionJet:
    """Closed-form first, second and third derivatives of the action at ``x``.

    With ``g = scale p1 + shift p2`` and ``D = p2^2 + g^2`` the first
    derivative is ``N / D`` where ``N`` is proportional to the local
    cross-current; higher orders follow by the quotient rule with p'' taken
    from the Dirac equation.
    """
    setup = action.pair.setup
    hc = setup.hbar_c
    (p1, q1, p2, q2), (sp, a), (sq, b), dv, d2v = _components(action, x)
    alpha, beta = action.constants.scale, action.constants.shift

    kpq = p1 * q2 - p2 * q1
    dp1, dp2 = sp * a * q1 / hc, sp * a * q2 / hc
    dq1, dq2 = sq * b * p1 / hc, sq * b * p2 / hc
    # a' = -V'
    ddp1 = sp * (-dv * q1 + a * dq1) / hc
    ddp2 = sp * (-dv * q2 + a * dq2) / hc

    g = alpha * p1 + beta * p2
    dg = alpha * dp1 + beta * dp2
    ddg = alpha * ddp1 + beta * ddp2
    den = p2 * p2 + g * g
    if np.any(den == 0):
        raise DegeneratePairError("both ratio components vanish; the solution pair is corrupt")
    dden = 2.0 * (p2 * dp2 + g * dg)
    ddden = 2.0 * (dp2 * dp2 + p2 * ddp2 + dg * dg + g * ddg)

    c = setup.light_speed
    num = -alpha * sp * kpq * a / c
    dnum = alpha * sp * kpq * dv / c
    ddnum = alpha * sp * kpq * d2v / c

    d1 = num / den
    d2 = dnum / den - num * dden / den**2
    d3 = ddnum / den - 2.0 * dnum * dden / den**2 - num * ddden / den**2 + 2.0 * num * dden**2 / den**3
    return ActionJet(d1, d2, d3)


def action_derivative(action: ReducedAction, x, order=1):
    """Derivative of the requested ``order`` (1, 2 or 3) at ``x``."""
    if order not in (1, 2, 3):
        raise ValidationError(f"action derivatives are available for orders 1-3, not {order}", field="order")
    jet = action_jet(action, x)
    out = (jet.d1, jet.d2, jet.d3)[order - 1]
    return float(out) if np.ndim(out) == 0 else out


def _wrap(delta):
    return (delta + np.pi) % (2.0 * np.pi) - np.pi


def _unwrap_table(action):
    """Refine the solver nodes until the angle moves less than pi/4 per interval."""
    hbar = action.pair.setup.hbar
    nodes = np.asarray(action.pair.nodes, dtype=float)
    for _ in range(60):
        rate = np.abs(action_jet(action, nodes).d1) / hbar
        mids = 0.5 * (nodes[1:] + nodes[:-1])
        mid_rate = np.abs(action_jet(action, mids).d1) / hbar
        h = np.diff(nodes)
        bound = h * np.maximum(np.maximum(rate[1:], rate[:-1]), mid_rate)
        coarse = bound > np.pi / 4
        if not np.any(coarse):
            break
        nodes = np.sort(np.concatenate([nodes, mids[coarse]]))
    theta = _angle(action, nodes)
    angles = np.concatenate([[theta[0]], theta[0] + np.cumsum(_wrap(np.diff(theta)))])
    # anchor on the principal branch of arctan at x0
    x0 = action.pair.x0
    i0 = int(np.searchsorted(nodes, x0))
    raw0 = angles[i0]
    principal = raw0 - np.pi * math.floor(raw0 / np.pi + 0.5)
    if principal <= -np.pi / 2:
        principal += np.pi
    return nodes, angles - raw0 + principal


def make_action(pair: SpinorSolutionPair, branch=S0, constants=None) -> ReducedAction:
    """Reduced action of ``branch`` (``"S0"`` or ``"Z0"``) over ``pair``."""
    branch_sign(branch)
    if constants is None:
        constants = BranchConstants()
    elif not isinstance(constants, BranchConstants):
        constants = BranchConstants(*map(float, constants))
    action = ReducedAction(branch, constants, pair)
    nodes, angles = _unwrap_table(action)
    object.__setattr__(action, "_nodes", nodes)
    object.__setattr__(action, "_angles", angles)
    return action


def reduced_action(action: ReducedAction, x):
    """Continuous (unwrapped) value of the action at ``x``."""
    x = action.pair.check_domain(x)
    nodes, angles = action._nodes, action._angles
    i = np.clip(np.searchsorted(nodes, x, side="right") - 1, 0, nodes.size - 1)
    theta = _angle(action, x)
    base = _angle(action, nodes[i])
    out = action.pair.setup.hbar * (angles[i] + _wrap(theta - base))
    return float(out) if np.ndim(out) == 0 else out


def schwarzian(d1, d2, d3):
    """``(3/2) (f''/f')^2 - f'''/f'``, the sign convention used by the quantum
    Hamilton-Jacobi equations here (the negative of the textbook Schwarzian)."""
    d1 = np.asarray(d1, dtype=float)
    if np.any(d1 == 0):
        raise SingularDerivativeError("Schwarzian undefined where the first derivative vanishes")
    out = 1.5 * (d2 / d1) ** 2 - d3 / d1
    return float(out) if np.ndim(out) == 0 else out
