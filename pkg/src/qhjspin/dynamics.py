"""Lagrangian dynamics of the two spin branches and trajectory integration.

The particle obeys ``m0 c^2 / sqrt(1 - f xdot^2 / c^2) + V = E`` with the
deformation ``f`` of its branch, hence::

    xdot^2 = c^2 (1/f) ((E - V)^2 - m0^2 c^4) / (E - V)^2

``1/f`` is taken from the action's Schwarzian, so the speed stays finite where
``f`` has a pole (the speed simply vanishes there).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, IntegrationWarning, quad
from scipy.optimize import brentq

from .action import ReducedAction, action_jet
from .errors import (
    CannotStartError,
    IntegrationError,
    NodeError,
    QHJError,
    SuperluminalError,
    TurningPointError,
    ValidationError,
)
from .model import mass_shell_margin
from .qshje import SpinSign, curvature_term, f_from_action, f_from_energy

__all__ = [
    "MotionState",
    "Trajectory",
    "LimitRegime",
    "LimitReport",
    "lagrangian",
    "conservation_residual",
    "classical_conservation_residual",
    "quantum_momentum",
    "momentum_sqrt_argument",
    "conjugate_momentum",
    "velocity",
    "integrate_trajectory",
    "momentum_identity_error",
    "limit_report",
    "TURNING_POINT",
    "NODE",
    "DOMAIN_EXIT",
]

TURNING_POINT = "turning_point"
NODE = "node"
DOMAIN_EXIT = "domain_exit"


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def _radicand(setup, f, xdot):
    r = 1.0 - f * xdot**2 / setup.light_speed**2
    if np.any(np.asarray(r) <= 0):
        raise SuperluminalError("1 - f xdot^2 / c^2 <= 0")
    return r


def lagrangian(setup, pot, f, x, xdot):
    """``-m0 c^2 sqrt(1 - f xdot^2/c^2) - V(x)``."""
    r = _radicand(setup, np.asarray(f, dtype=float), np.asarray(xdot, dtype=float))
    return _scalar(-setup.rest_energy * np.sqrt(r) - pot.derivatives(x)[0])


def conservation_residual(setup, pot, f, x, xdot):
    """``m0 c^2 / sqrt(1 - f xdot^2/c^2) + V(x) - E``; zero along genuine motion."""
    r = _radicand(setup, np.asarray(f, dtype=float), np.asarray(xdot, dtype=float))
    return _scalar(setup.rest_energy / np.sqrt(r) + pot.derivatives(x)[0] - setup.energy)


def classical_conservation_residual(setup, pot, x, xdot):
    """Special-relativistic energy balance ``m0 c^2 / sqrt(1 - xdot^2/c^2) + V - E``."""
    xdot = np.asarray(xdot, dtype=float)
    r = 1.0 - xdot**2 / setup.light_speed**2
    if np.any(r <= 0):
        raise SuperluminalError("|xdot| >= c")
    return _scalar(setup.rest_energy / np.sqrt(r) + pot.derivatives(x)[0] - setup.energy)


def quantum_momentum(setup, pot, x):
    """Spinless relativistic quantum momentum flux ``E - V - m0^2 c^4 / (E - V)``."""
    k = setup.energy - pot.derivatives(np.asarray(x, dtype=float))[0]
    return _scalar(k - setup.rest_energy**2 / k)


def momentum_sqrt_argument(setup, pot, x, sigma, quantum_terms=True):
    """Argument of the square root correcting the momentum of branch ``sigma``."""
    x = np.asarray(x, dtype=float)
    margin = mass_shell_margin(setup, pot.derivatives(x)[0])
    if np.any(np.abs(margin) <= setup.turning_tolerance):
        bad = np.atleast_1d(x)[np.atleast_1d(np.abs(margin) <= setup.turning_tolerance)][0]
        raise TurningPointError("(E - V)^2 = m0^2 c^4: momentum law is singular", x=bad)
    if not quantum_terms:
        return _scalar(np.ones_like(margin))
    curv = curvature_term(setup, pot, x, sigma)
    return _scalar(1.0 - 2.0 * setup.rest_energy * curv / margin)


def conjugate_momentum(setup, pot, x, sigma, quantum_terms=True):
    """Product ``xdot * dh/dx`` for branch ``sigma``: the spinless momentum flux
    times ``sqrt(1 - hbar^2 c^2 W^(1/2)(W^(-1/2))'' / ((E-V)^2 - m0^2 c^4))``.

    ``quantum_terms=False`` drops the curvature correction (hbar -> 0 surrogate).
    """
    sigma = SpinSign.of(sigma)
    arg = np.asarray(momentum_sqrt_argument(setup, pot, x, sigma, quantum_terms))
    if np.any(arg < 0):
        bad = np.atleast_1d(np.asarray(x, dtype=float))[np.atleast_1d(arg < 0)][0]
        raise NodeError("momentum square root argument is negative", x=bad)
    return _scalar(np.asarray(quantum_momentum(setup, pot, x)) * np.sqrt(arg))


def _speed_squared(action, x):
    """``xdot^2`` from the action route, nan where it cannot be evaluated."""
    setup = action.setup
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        try:
            jet = action_jet(action, x)
        except QHJError:
            return np.full(x.shape, np.nan)
        bracket = 1.0 - 0.5 * setup.hbar**2 * (1.5 * (jet.d2 / jet.d1) ** 2 - jet.d3 / jet.d1) / jet.d1**2
        k = setup.energy - action.potential.derivatives(x)[0]
        return setup.light_speed**2 * bracket * (k * k - setup.rest_energy**2) / (k * k)


def velocity(action: ReducedAction, x, direction=1):
    """Signed speed at ``x`` for the action's branch."""
    setup = action.setup
    x = float(x)
    k = setup.energy - action.potential.derivatives(x)[0]
    if k == 0:
        raise NodeError("E - V = 0: velocity law undefined", x=x)
    margin = k * k - setup.rest_energy**2
    if abs(margin) <= setup.turning_tolerance:
        return 0.0
    g = float(_speed_squared(action, x))
    if not math.isfinite(g):
        raise NodeError("velocity cannot be evaluated", x=x)
    if g < 0:
        where = "forbidden region" if margin < 0 else "node region (f < 0)"
        raise NodeError(f"xdot^2 < 0 in {where}", x=x)
    return math.copysign(math.sqrt(g), direction)


@dataclass(frozen=True)
class MotionState:
    t: float
    x: float
    xdot: float
    branch: str
    direction: int


@dataclass
class Trajectory:
    """Time-ordered samples; ``event[i]`` is ``""`` for ordinary samples."""

    branch: str
    t: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    conservation: np.ndarray
    event: list
    events: list = field(default_factory=list)
    energy: float = 1.0

    def states(self):
        return [MotionState(float(t), float(x), float(v), self.branch, int(np.sign(v)) or 0)
                for t, x, v in zip(self.t, self.x, self.xdot)]

    def max_conservation_error(self):
        """Largest ``|residual| / |E|`` over ordinary (non-event) samples."""
        mask = np.array([e == "" for e in self.event])
        scale = abs(self.energy) or 1.0
        return float(np.max(np.abs(self.conservation[mask]))) / scale


class _Recorder:
    def __init__(self, action):
        self.action = action
        self.rows = []
        self.events = []

    def _residual(self, x, xdot, limit):
        setup, pot = self.action.setup, self.action.potential
        if not limit:
            try:
                return conservation_residual(setup, pot, f_from_energy(self.action, x), x, xdot)
            except QHJError:
                pass
        # route ratio -> 1 at a pole of f: f xdot^2 / c^2 -> margin / (E - V)^2
        k = setup.energy - pot.derivatives(x)[0]
        ratio = (k * k - setup.rest_energy**2) / (k * k)
        return setup.rest_energy / math.sqrt(1.0 - ratio) + (setup.energy - k) - setup.energy

    def add(self, t, x, direction, event=""):
        if event == TURNING_POINT:
            xdot, res = 0.0, self._residual(x, 0.0, limit=True)
        else:
            g = max(float(_speed_squared(self.action, x)), 0.0)
            xdot = math.copysign(math.sqrt(g), direction)
            res = self._residual(x, xdot, limit=False)
        self.rows.append((float(t), float(x), xdot, res, event))
        if event:
            self.events.append({"kind": event, "t": float(t), "x": float(x)})

    def build(self):
        t, x, v, r, e = zip(*self.rows)
        return Trajectory(self.action.branch, np.array(t), np.array(x), np.array(v), np.array(r),
                          list(e), self.events, self.action.setup.energy)


def _next_barrier(action, x, direction):
    """First point ahead where ``xdot^2`` stops being positive, or the domain edge.

    Located by bisection down to floating-point resolution.
    """
    lo, hi = action.pair.domain
    edge = hi if direction > 0 else lo
    span = abs(edge - x)
    if span == 0:
        return edge, DOMAIN_EXIT
    n = max(64, int(math.ceil(4096 * span / (hi - lo))))
    xs = x + direction * span * np.linspace(0.0, 1.0, n + 1)[1:]
    xs[-1] = edge
    bad = ~(_speed_squared(action, xs) > 0)
    if not np.any(bad):
        return edge, DOMAIN_EXIT
    i = int(np.argmax(bad))
    a = x if i == 0 else float(xs[i - 1])
    b = float(xs[i])
    while True:
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        if _speed_squared(action, mid) > 0:
            a = mid
        else:
            b = mid
    kind = TURNING_POINT if np.isfinite(_speed_squared(action, b)) else NODE
    return a, kind


class _Approach:
    """Time along the last stretch before a barrier, via ``x = xb - dir * u^2``
    which removes the inverse-square-root singularity at a turning point."""

    def __init__(self, action, x_start, barrier, direction, tol):
        self.action = action
        self.barrier = barrier
        self.direction = direction
        self.tol = tol
        self.s_max = math.sqrt(abs(barrier - x_start))
        self.total = self.time(self.s_max)

    def position(self, u):
        return self.barrier - self.direction * u * u

    def _integrand(self, u):
        g = float(_speed_squared(self.action, self.position(u)))
        return 2.0 * u / math.sqrt(g) if g > 0 else 0.0

    def time(self, u):
        """Travel time between ``position(u)`` and the barrier."""
        if u <= 0:
            return 0.0
        with warnings.catch_warnings():
            # the integrand has a benign kink within ~1e-8 of a turning point
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(self._integrand, 0.0, u, epsabs=0.0, epsrel=max(self.tol, 1e-13), limit=200)
        return val

    def u_at(self, tau):
        """``u`` whose travel time to the barrier equals ``tau``."""
        if tau <= 0:
            return 0.0
        return brentq(lambda u: self.time(u) - tau, 0.0, self.s_max, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _leg(action, rec, t, x, t_end, direction, barrier, tol):
    """Advance from ``(t, x)`` towards ``barrier``.

    Returns ``(t, x, reached)``: ``reached`` is False if ``t_end`` came first,
    else ``(t, x)`` is the start of the approach stretch.
    """
    lo, hi = action.pair.domain
    total = abs(barrier - x)
    switch = 0.02 * total
    if total == 0 or t >= t_end:
        return t, x, total == 0

    def rhs(_t, y):
        xi = y[0]
        if not lo <= xi <= hi:
            return np.array([0.0])
        g = float(_speed_squared(action, xi))
        return np.array([direction * math.sqrt(g) if g > 0 else 0.0])

    atol = tol * max(1.0, abs(hi), abs(lo)) * 1e-2
    solver = DOP853(rhs, t, np.array([x]), t_end, rtol=tol, atol=atol)
    while solver.status == "running":
        t_prev, x_prev = solver.t, float(solver.y[0])
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"trajectory step failed: {msg}", x=x_prev)
        xn = float(solver.y[0])
        remaining = direction * (barrier - xn)
        if remaining <= 0 or not _speed_squared(action, xn) > 0:
            return t_prev, x_prev, True
        rec.add(solver.t, xn, direction)
        if solver.status == "finished":
            return solver.t, xn, False
        if remaining <= switch:
            return solver.t, xn, True
    return solver.t, float(solver.y[0]), False


def integrate_trajectory(action: ReducedAction, x0, t_span, direction=1, tol=1e-10,
                         on_turning="reflect", approach_samples=8, max_legs=10000) -> Trajectory:
    """Integrate ``dx/dt = velocity(x)`` over ``t_span``.

    At a turning point the motion is reflected (``on_turning="reflect"``) or
    the integration stops (``"stop"``).  Leaving the solved domain ends the
    trajectory with a ``domain_exit`` event.
    """
    if on_turning not in ("reflect", "stop"):
        raise ValidationError("on_turning must be 'reflect' or 'stop'", field="on_turning")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValidationError("t_span must be increasing", field="t_span")
    direction = 1 if direction > 0 else -1
    x0 = float(x0)
    action.pair.check_domain(x0)
    g0 = float(_speed_squared(action, x0))
    if not math.isfinite(g0) or g0 < 0:
        raise CannotStartError("trajectory starts inside a node region (xdot^2 < 0)", x=x0)
    if g0 <= 1e-300:
        raise CannotStartError("trajectory starts at a turning point (zero velocity)", x=x0)

    rec = _Recorder(action)
    rec.add(t0, x0, direction)
    t, x = t0, x0
    fractions = [1.0 - j / approach_samples for j in range(1, approach_samples)]
    for _ in range(max_legs):
        barrier, kind = _next_barrier(action, x, direction)
        t, x, reached = _leg(action, rec, t, x, t1, direction, barrier, tol)
        if not reached:
            return rec.build()
        app = _Approach(action, x, barrier, direction, tol)
        t_hit = t + app.total
        for frac in fractions:
            u = frac * app.s_max
            tu = t + app.total - app.time(u)
            if tu >= t1:
                break
            rec.add(tu, app.position(u), direction)
        if t_hit > t1:
            rec.add(t1, app.position(app.u_at(t_hit - t1)), direction)
            return rec.build()
        rec.add(t_hit, barrier, direction, event=kind)
        if kind != TURNING_POINT or on_turning == "stop":
            return rec.build()
        # time-reversal symmetry: the way back retraces the approach
        direction = -direction
        for frac in reversed(fractions):
            u = frac * app.s_max
            tu = t_hit + app.time(u)
            if tu >= t1:
                rec.add(t1, app.position(app.u_at(t1 - t_hit)), direction)
                return rec.build()
            rec.add(tu, app.position(u), direction)
        t = t_hit + app.total
        x = app.position(app.s_max)
        if t >= t1:
            rec.add(t1, app.position(app.u_at(t1 - t_hit)), direction)
            return rec.build()
        rec.add(t, x, direction)
    raise IntegrationError("too many trajectory legs", x=x)


def momentum_identity_error(action: ReducedAction, traj: Trajectory):
    """Max relative mismatch of ``|xdot * h'|`` against the momentum law over the
    ordinary samples of ``traj``."""
    mask = np.array([e == "" for e in traj.event])
    x = traj.x[mask]
    prod = np.abs(traj.xdot[mask] * action_jet(action, x).d1)
    rhs = np.abs(np.asarray(conjugate_momentum(action.setup, action.potential, x, action.sigma)))
    return float(np.max(np.abs(prod - rhs) / rhs))


# ----------------------------------------------------------------------------
# limit report

CLASSICAL = "classical"
CONSTANT_POTENTIAL = "constant_potential"
PURELY_QUANTUM = "purely_quantum"
GENERAL = "general"


@dataclass(frozen=True)
class LimitRegime:
    tag: str
    kinetic_energy: float
    reference_x: float


@dataclass
class LimitReport:
    regime: LimitRegime
    x: np.ndarray
    f_minus_1: np.ndarray
    momentum_deviation: np.ndarray
    t_over_mc2: np.ndarray
    claims: dict
    errors: list
    tolerance: float


def _pointwise(fn, x):
    """Evaluate ``fn`` on each point, replacing failures with nan."""
    out = np.empty(x.size)
    errors = []
    for i, xi in enumerate(x):
        try:
            out[i] = fn(xi)
        except QHJError as exc:
            out[i] = np.nan
            errors.append(exc.diagnostic())
    return out, errors


def limit_report(action: ReducedAction, grid, classical_surrogate=False, tolerance=1e-10,
                 quantum_threshold=0.05) -> LimitReport:
    """Tabulate how far the branch is from its classical and spinless limits.

    ``classical_surrogate`` zeroes the Schwarzian and curvature terms, which is
    the algebraic content of the hbar -> 0 limit.
    """
    setup, pot = action.setup, action.potential
    x = np.asarray(grid, dtype=float)
    action.pair.check_domain(x)
    mc2 = setup.rest_energy
    t_ratio = (setup.energy - pot.derivatives(x)[0] - mc2) / mc2
    quantum = not classical_surrogate

    if quantum:
        def f_point(xi):
            return f_from_action(action, xi)
    else:
        def f_point(xi):
            return 1.0

    def dev_point(xi):
        ref = quantum_momentum(setup, pot, xi)
        return abs(conjugate_momentum(setup, pot, xi, action.sigma, quantum_terms=quantum) - ref) / abs(ref)

    f_vals, err_f = _pointwise(f_point, x)
    dev, err_m = _pointwise(dev_point, x)
    f_minus_1 = np.abs(f_vals - 1.0)

    x_ref = action.pair.x0
    t_ref = setup.energy - pot.derivatives(x_ref)[0] - mc2
    if classical_surrogate:
        tag = CLASSICAL
    elif pot.is_constant:
        tag = CONSTANT_POTENTIAL
    elif np.nanmax(np.abs(t_ratio)) <= quantum_threshold:
        tag = PURELY_QUANTUM
    else:
        tag = GENERAL

    def holds(col):
        return bool(np.all(np.isfinite(col)) and np.max(col) <= tolerance)

    claims = {"f_equals_1": holds(f_minus_1), "momentum_reduces": holds(dev)}
    return LimitReport(LimitRegime(tag, float(t_ref), float(x_ref)), x, f_minus_1, dev, t_ratio,
                       claims, err_f + err_m, tolerance)
