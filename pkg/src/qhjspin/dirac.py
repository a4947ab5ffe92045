"""Stationary one-dimensional Dirac spinor equation in real form.

With the lower component written as ``phi = i * chi`` the spinor system closes
over the reals::

    d theta / dx = -(E - V + m0 c^2) * chi   / (hbar c)
    d chi   / dx =  (E - V - m0 c^2) * theta / (hbar c)

Two independent real solutions are integrated together (state vector
``[theta1, chi1, theta2, chi2]``) so that their cross-current
``K = theta1 chi2 - theta2 chi1``, an exact invariant of the system, can be
monitored as a health check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IndependenceError, IntegrationError, OutOfDomainError, ValidationError
from .model import PhysicalSetup, Potential

__all__ = [
    "SpinorState",
    "SpinorSolutionPair",
    "spinor_rhs",
    "solve_spinor_pair",
    "cross_current",
    "DEFAULT_TOL",
]

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class SpinorState:
    """Upper component ``theta`` and rescaled lower component ``chi``."""

    theta: float
    chi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.chi)):
            raise ValidationError("spinor components must be finite", field="initial_states")

    def __iter__(self):
        yield self.theta
        yield self.chi


def _coefficients(setup, pot, x):
    v, dv, _ = pot.derivatives(x)
    kinetic = setup.energy - v
    return kinetic + setup.rest_energy, kinetic - setup.rest_energy, dv


def spinor_rhs(setup: PhysicalSetup, pot: Potential, x, s: SpinorState) -> SpinorState:
    """x-derivative of the spinor ``s`` at ``x``."""
    w_plus, w_minus, _ = _coefficients(setup, pot, x)
    hc = setup.hbar_c
    return SpinorState(float(-w_plus * s.chi / hc), float(w_minus * s.theta / hc))


def _pair_rhs(setup, pot):
    hc = setup.hbar_c

    def rhs(x, y):
        w_plus, w_minus, _ = _coefficients(setup, pot, x)
        return np.array([
            -w_plus * y[1] / hc,
            w_minus * y[0] / hc,
            -w_plus * y[3] / hc,
            w_minus * y[2] / hc,
        ])

    return rhs


@dataclass(frozen=True, eq=False)
class SpinorSolutionPair:
    """Two real Dirac solutions on ``domain`` with dense output.

    Use :meth:`state` for ``(theta1, chi1, theta2, chi2)`` at arbitrary points
    and :meth:`derivative` for their x-derivatives (taken from the equation,
    not from the interpolant).
    """

    setup: PhysicalSetup
    potential: Potential
    domain: tuple
    x0: float
    initial: tuple
    tol: float
    cross_current0: float
    nodes: np.ndarray = field(repr=False)
    _forward: object = field(repr=False, default=None)
    _backward: object = field(repr=False, default=None)

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        bad = ~((x >= lo) & (x <= hi))
        if np.any(bad):
            first = float(np.atleast_1d(x)[np.atleast_1d(bad)][0])
            raise OutOfDomainError(f"x outside solved domain [{lo}, {hi}]", x=first)
        return x

    def state(self, x):
        """Array of shape ``(4,) + shape(x)``: theta1, chi1, theta2, chi2."""
        x = self.check_domain(x)
        flat = np.atleast_1d(x).ravel()
        out = np.empty((4, flat.size))
        y0 = np.array(self.initial, dtype=float)
        fwd = flat >= self.x0
        if np.any(fwd):
            out[:, fwd] = self._forward(flat[fwd]) if self._forward is not None else y0[:, None]
        if np.any(~fwd):
            out[:, ~fwd] = self._backward(flat[~fwd]) if self._backward is not None else y0[:, None]
        return out.reshape((4,) + x.shape)

    def derivative(self, x):
        y = self.state(x)
        return _pair_rhs(self.setup, self.potential)(np.asarray(x, dtype=float), y)

    def cross_current(self, x):
        t1, c1, t2, c2 = self.state(x)
        k = t1 * c2 - t2 * c1
        return float(k) if np.ndim(k) == 0 else k

    def max_cross_current_drift(self):
        """Largest ``|K(x) - K(x0)| / |K(x0)|`` over the accepted integration nodes."""
        k = self.cross_current(self.nodes)
        return float(np.max(np.abs(k - self.cross_current0)) / abs(self.cross_current0))


def _integrate(rhs, x0, x1, y0, tol, atol, max_step):
    sol = solve_ivp(rhs, (x0, x1), y0, method="DOP853", rtol=tol, atol=atol,
                    dense_output=True, max_step=max_step)
    if sol.status != 0:
        last = float(sol.t[-1])
        raise IntegrationError(f"spinor integration failed: {sol.message}", x=last)
    return sol


def solve_spinor_pair(setup, pot, domain, init1, init2, x0=None, tol=DEFAULT_TOL, max_step=None):
    """Integrate two solutions of the Dirac system over ``domain`` from ``x0``.

    ``init1`` and ``init2`` are the spinor values at ``x0`` (default: the left
    end of the domain if 0 lies outside it, else 0).  Raises
    :class:`IndependenceError` if they are linearly dependent.
    """
    lo, hi = (float(domain[0]), float(domain[1]))
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValidationError(f"domain must be a finite nonempty interval, got {domain!r}", field="domain")
    if x0 is None:
        x0 = 0.0 if lo <= 0.0 <= hi else lo
    x0 = float(x0)
    if not lo <= x0 <= hi:
        raise OutOfDomainError("x0 outside the integration domain", x=x0)
    if not tol > 0:
        raise ValidationError("tolerance must be positive", field="tol")
    s1 = init1 if isinstance(init1, SpinorState) else SpinorState(*map(float, init1))
    s2 = init2 if isinstance(init2, SpinorState) else SpinorState(*map(float, init2))
    pot.check_domain(np.array([lo, hi]))

    k0 = s1.theta * s2.chi - s2.theta * s1.chi
    scale = math.hypot(*s1) * math.hypot(*s2)
    if abs(k0) <= 1e-14 * scale:
        raise IndependenceError("initial spinors are linearly dependent (zero cross-current)", x=x0)

    y0 = np.array([s1.theta, s1.chi, s2.theta, s2.chi])
    rhs = _pair_rhs(setup, pot)
    atol = tol * 1e-3 * float(np.max(np.abs(y0)))
    max_step = np.inf if max_step is None else max_step
    forward = backward = None
    nodes = [np.array([x0])]
    if hi > x0:
        sol = _integrate(rhs, x0, hi, y0, tol, atol, max_step)
        forward = sol.sol
        nodes.append(sol.t[1:])
    if lo < x0:
        sol = _integrate(rhs, x0, lo, y0, tol, atol, max_step)
        backward = sol.sol
        nodes.append(sol.t[1:])
    return SpinorSolutionPair(
        setup=setup,
        potential=pot,
        domain=(lo, hi),
        x0=x0,
        initial=tuple(y0.tolist()),
        tol=float(tol),
        cross_current0=float(k0),
        nodes=np.unique(np.concatenate(nodes)),
        _forward=forward,
        _backward=backward,
    )


def cross_current(pair: SpinorSolutionPair, x):
    """``theta1 chi2 - theta2 chi1`` at ``x``."""
    return pair.cross_current(x)
