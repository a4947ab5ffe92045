"""Residuals of the two spin-1/2 quantum stationary Hamilton-Jacobi equations
and the deformation function ``f`` computed by two independent routes.

For spin sign ``sigma`` (+1 pairs with S0, -1 with Z0) let
``W = E - V + sigma m0 c^2``.  The equation checked is::

    h'^2/(2 m0) - hbar^2/(4 m0) {h, x}
        + hbar^2/(2 m0) W^(1/2) (W^(-1/2))''
        + (m0^2 c^4 - (E - V)^2) / (2 m0 c^2) = 0
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .action import ReducedAction, action_jet, branch_sign, schwarzian
from .errors import BranchDomainError, PoleError, SingularDerivativeError, TurningPointError, ValidationError
from .model import mass_shell_margin

__all__ = [
    "SpinSign",
    "ResidualReport",
    "curvature_term",
    "qshje_residual",
    "deformation",
    "f_from_action",
    "f_from_energy",
    "energy_denominator",
    "f_bracket",
]


class SpinSign(IntEnum):
    PLUS = 1
    MINUS = -1

    @classmethod
    def of(cls, value):
        if isinstance(value, str):
            return cls(branch_sign(value))
        try:
            return cls(int(value))
        except ValueError:
            raise ValidationError(f"spin sign must be +1 or -1, got {value!r}", field="sigma") from None


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def curvature_term(setup, pot, x, sigma):
    """``hbar^2/(2 m0) * W^(1/2) d^2/dx^2 W^(-1/2)`` in expanded form.

    Only ``V'`` and ``V''`` enter: ``hbar^2/(2 m0) * (3/4 (V'/W)^2 + V''/(2W))``.
    """
    sigma = SpinSign.of(sigma)
    x = np.asarray(x, dtype=float)
    v, dv, d2v = pot.derivatives(x)
    w = setup.energy - v + sigma * setup.rest_energy
    if np.any(w <= 0):
        bad = np.atleast_1d(x)[np.atleast_1d(w <= 0)][0]
        raise BranchDomainError(
            f"E - V {'+' if sigma > 0 else '-'} m0 c^2 <= 0: square root leaves the real domain", x=bad)
    out = setup.hbar**2 / (2.0 * setup.rest_mass) * (0.75 * (dv / w) ** 2 + 0.5 * d2v / w)
    return _scalar(out)


@dataclass(frozen=True)
class ResidualReport:
    """Additive terms of the equation; ``raw`` is their sum in the listed order."""

    kinetic: np.ndarray
    schwarzian: np.ndarray
    curvature: np.ndarray
    mass_shell: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray


def qshje_residual(action: ReducedAction, x, sigma=None) -> ResidualReport:
    """Residual of the equation with spin sign ``sigma`` (defaults to the
    action's own branch) evaluated on ``action`` at ``x``."""
    setup, pot = action.setup, action.potential
    sigma = SpinSign.of(action.sigma if sigma is None else sigma)
    x = np.asarray(x, dtype=float)
    jet = action_jet(action, x)
    m = setup.rest_mass
    kinetic = jet.d1**2 / (2.0 * m)
    schw = -setup.hbar**2 / (4.0 * m) * schwarzian(jet.d1, jet.d2, jet.d3)
    curv = curvature_term(setup, pot, x, sigma)
    v = pot.derivatives(x)[0]
    mass_shell = -mass_shell_margin(setup, v) / (2.0 * m * setup.light_speed**2)
    raw = ((kinetic + schw) + curv) + mass_shell
    norm = np.abs(raw) / abs(setup.energy) if setup.energy != 0 else np.abs(raw)
    return ResidualReport(*(_scalar(t) for t in (kinetic, schw, curv, mass_shell, raw, norm)))


def deformation(d1, schw_value, hbar):
    """``[1 - hbar^2/2 * {h,x} / h'^2]^(-1)`` from the first derivative and the
    Schwarzian of the action."""
    d1 = np.asarray(d1, dtype=float)
    if np.any(d1 == 0):
        raise SingularDerivativeError("deformation undefined where the action derivative vanishes")
    bracket = 1.0 - 0.5 * hbar**2 * schw_value / d1**2
    if np.any(np.abs(bracket) <= 1e-14):
        raise PoleError("deformation function has a pole (bracket vanishes)")
    return _scalar(1.0 / bracket)


def f_bracket(action, x):
    """``1/f`` from the action route, finite through poles of ``f``."""
    jet = action_jet(action, x)
    hbar = action.setup.hbar
    return _scalar(1.0 - 0.5 * hbar**2 * schwarzian(jet.d1, jet.d2, jet.d3) / jet.d1**2)


def f_from_action(action: ReducedAction, x):
    """Deformation function from the action's Schwarzian derivative."""
    jet = action_jet(action, np.asarray(x, dtype=float))
    return deformation(jet.d1, schwarzian(jet.d1, jet.d2, jet.d3), action.setup.hbar)


def energy_denominator(setup, pot, x, sigma):
    """``(E-V)^2 - m0^2 c^4 - hbar^2 c^2 W^(1/2) (W^(-1/2))''``."""
    v = pot.derivatives(np.asarray(x, dtype=float))[0]
    curv = curvature_term(setup, pot, x, sigma)
    return _scalar(mass_shell_margin(setup, v) - 2.0 * setup.rest_energy * curv)


def f_from_energy(action: ReducedAction, x, sigma=None):
    """Deformation function from the energy form: ``c^2 h'^2 / denominator``."""
    setup, pot = action.setup, action.potential
    sigma = SpinSign.of(action.sigma if sigma is None else sigma)
    x = np.asarray(x, dtype=float)
    den = np.asarray(energy_denominator(setup, pot, x, sigma))
    small = np.abs(den) <= setup.turning_tolerance
    if np.any(small):
        raise TurningPointError("energy-form denominator vanishes", x=np.atleast_1d(x)[np.atleast_1d(small)][0])
    d1 = action_jet(action, x).d1
    return _scalar(setup.light_speed**2 * d1**2 / den)
