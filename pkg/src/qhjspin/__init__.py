"""Numerical laboratory for the spin-1/2 relativistic quantum Hamilton-Jacobi
formalism in one dimension: Dirac solutions, reduced actions, equation
residuals, conjugate momenta and deterministic trajectories."""

from .action import S0, Z0, BranchConstants, ReducedAction, action_derivative, action_jet, make_action, \
    reduced_action, schwarzian
from .dirac import SpinorSolutionPair, SpinorState, cross_current, solve_spinor_pair, spinor_rhs
from .dynamics import (
    Trajectory,
    classical_conservation_residual,
    conjugate_momentum,
    conservation_residual,
    integrate_trajectory,
    lagrangian,
    limit_report,
    quantum_momentum,
    velocity,
)
from .errors import QHJError
from .model import (
    ConstantPotential,
    HarmonicPotential,
    LinearPotential,
    PhysicalSetup,
    SmoothStepPotential,
    TabulatedPotential,
    energy_regime,
    potential_eval,
)
from .qshje import SpinSign, curvature_term, f_from_action, f_from_energy, qshje_residual
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
