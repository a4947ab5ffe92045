"""Physical setup, potential models and local energy-regime classification.

All potentials are immutable and evaluate ``V``, ``V'`` and ``V''`` analytically
(or through a C2 cubic spline for tabulated data).  Every evaluator accepts
scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import OutOfDomainError, UnsupportedOrderError, ValidationError

__all__ = [
    "PhysicalSetup",
    "Potential",
    "ConstantPotential",
    "LinearPotential",
    "HarmonicPotential",
    "SmoothStepPotential",
    "TabulatedPotential",
    "EnergyRegime",
    "potential_eval",
    "energy_regime",
    "CLASSICALLY_ALLOWED",
    "TURNING_POINT",
    "FORBIDDEN",
]

CLASSICALLY_ALLOWED = "classically_allowed"
TURNING_POINT = "turning_point"
FORBIDDEN = "forbidden"

# Relative to (m0 c^2)^2, so the natural-unit default is exactly 1e-9.
DEFAULT_TURNING_TOLERANCE = 1e-9


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}", field=name)
    return value


@dataclass(frozen=True)
class PhysicalSetup:
    """Constants of one stationary problem.

    ``units`` is a tag only: ``"natural"`` (defaults m0 = c = hbar = 1) or
    ``"SI"``, in which case the raw constants are stored as given.
    """

    energy: float
    rest_mass: float = 1.0
    light_speed: float = 1.0
    hbar: float = 1.0
    units: str = "natural"
    turning_rtol: float = DEFAULT_TURNING_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "rest_mass", _positive("rest_mass", self.rest_mass))
        object.__setattr__(self, "light_speed", _positive("light_speed", self.light_speed))
        object.__setattr__(self, "hbar", _positive("hbar", self.hbar))
        energy = float(self.energy)
        if not math.isfinite(energy):
            raise ValidationError(f"energy must be finite, got {energy!r}", field="energy")
        object.__setattr__(self, "energy", energy)
        object.__setattr__(self, "turning_rtol", _positive("turning_rtol", self.turning_rtol))
        if self.units not in ("natural", "SI"):
            raise ValidationError(f"unknown unit system {self.units!r}", field="units")

    @property
    def rest_energy(self):
        return self.rest_mass * self.light_speed**2

    @property
    def hbar_c(self):
        return self.hbar * self.light_speed

    @property
    def turning_tolerance(self):
        """Absolute tolerance on ``(E-V)^2 - (m0 c^2)^2`` for turning points."""
        return self.turning_rtol * self.rest_energy**2


class Potential:
    """Base class for stationary scalar potentials.

    Subclasses implement :meth:`_derivatives` returning ``(V, V', V'')`` and may
    narrow :attr:`domain`.
    """

    domain = (-math.inf, math.inf)

    def check_domain(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.domain
        bad = ~((x >= lo) & (x <= hi))
        if np.any(bad):
            first = float(np.atleast_1d(x)[np.atleast_1d(bad)][0])
            raise OutOfDomainError(f"x outside potential domain [{lo}, {hi}]", x=first)
        return x

    def derivatives(self, x):
        """Return ``(V, V', V'')`` at ``x``."""
        x = self.check_domain(x)
        return self._derivatives(x)

    def __call__(self, x, order=0):
        return potential_eval(self, x, order)

    @property
    def is_constant(self):
        return False

    def _derivatives(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantPotential(Potential):
    value: float = 0.0

    def _derivatives(self, x):
        zero = np.zeros_like(x)
        return zero + self.value, zero, zero

    @property
    def is_constant(self):
        return True


@dataclass(frozen=True)
class LinearPotential(Potential):
    """``V(x) = offset + slope * x``."""

    slope: float
    offset: float = 0.0

    def _derivatives(self, x):
        zero = np.zeros_like(x)
        return self.offset + self.slope * x, zero + self.slope, zero

    @property
    def is_constant(self):
        return self.slope == 0


@dataclass(frozen=True)
class HarmonicPotential(Potential):
    """``V(x) = stiffness * (x - center)**2 / 2``."""

    stiffness: float
    center: float = 0.0

    def _derivatives(self, x):
        u = x - self.center
        return 0.5 * self.stiffness * u * u, self.stiffness * u, np.zeros_like(x) + self.stiffness

    @property
    def is_constant(self):
        return self.stiffness == 0


@dataclass(frozen=True)
class SmoothStepPotential(Potential):
    """Step of ``height`` centred at ``position`` with a tanh edge of ``width``.

    ``V = height * (1 + tanh((x - position) / width)) / 2``
    """

    height: float
    width: float
    position: float = 0.0

    def __post_init__(self):
        _positive("width", self.width)

    def _derivatives(self, x):
        th = np.tanh((x - self.position) / self.width)
        sech2 = 1.0 - th * th
        v = 0.5 * self.height * (1.0 + th)
        dv = 0.5 * self.height * sech2 / self.width
        d2v = -self.height * sech2 * th / self.width**2
        return v, dv, d2v

    @property
    def is_constant(self):
        return self.height == 0


@dataclass(frozen=True)
class TabulatedPotential(Potential):
    """Samples interpolated by a not-a-knot cubic spline (C2 inside the range)."""

    x: tuple
    values: tuple
    _spline: CubicSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = np.asarray(self.x, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 4:
            raise ValidationError("tabulated potential needs >= 4 matching samples", field="potential")
        if np.any(np.diff(xs) <= 0):
            raise ValidationError("tabulated abscissae must be strictly increasing", field="potential.x")
        if not np.all(np.isfinite(vs)):
            raise ValidationError("tabulated values must be finite", field="potential.values")
        object.__setattr__(self, "x", tuple(xs.tolist()))
        object.__setattr__(self, "values", tuple(vs.tolist()))
        object.__setattr__(self, "_spline", CubicSpline(xs, vs))

    @property
    def domain(self):
        return (self.x[0], self.x[-1])

    def _derivatives(self, x):
        s = self._spline
        return s(x), s(x, 1), s(x, 2)


def potential_eval(pot, x, order=0):
    """Derivative of the requested ``order`` (0, 1 or 2) of ``pot`` at ``x``."""
    if order not in (0, 1, 2):
        raise UnsupportedOrderError(f"potential derivatives are available up to order 2, not {order}")
    out = pot.derivatives(x)[order]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EnergyRegime:
    kind: str
    margin: float

    @property
    def allowed(self):
        return self.kind == CLASSICALLY_ALLOWED


def mass_shell_margin(setup, v):
    """``(E - V)^2 - (m0 c^2)^2``."""
    k = setup.energy - v
    return k * k - setup.rest_energy**2


def energy_regime(setup, pot, x, eps_tp=None):
    """Classify ``x`` as classically allowed, turning point or forbidden."""
    if eps_tp is None:
        eps_tp = setup.turning_tolerance
    margin = float(mass_shell_margin(setup, potential_eval(pot, x, 0)))
    if abs(margin) <= eps_tp:
        kind = TURNING_POINT
    elif margin > eps_tp:
        kind = CLASSICALLY_ALLOWED
    else:
        kind = FORBIDDEN
    return EnergyRegime(kind, margin)
