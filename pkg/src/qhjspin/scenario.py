"""Scenario documents: strict YAML parsing, defaults and validation.

A minimal document::

    potential: constant 0
    energy: 2
    domain: [-5, 5]

Unknown keys are rejected; every error names the offending field path.
"""
from __future__ import annotations

import copy
import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .action import BranchConstants, S0, Z0
from .dirac import DEFAULT_TOL
from .errors import QHJError, ScenarioError, ValidationError
from .model import (
    ConstantPotential,
    HarmonicPotential,
    LinearPotential,
    PhysicalSetup,
    SmoothStepPotential,
    TabulatedPotential,
    energy_regime,
)

__all__ = ["Scenario", "TrajectorySpec", "Tolerances", "SweepSpec", "parse_scenario", "load_scenario"]

_TOP_KEYS = {
    "name", "units", "rest_mass", "light_speed", "hbar", "energy", "potential", "domain", "x0",
    "initial_states", "constants", "branch", "trajectory", "tolerances", "grid_points", "limits",
    "output", "sweep",
}

# kind -> ordered parameter names (shorthand "linear 0.1 0" follows this order) and required count
_POTENTIALS = {
    "constant": (ConstantPotential, ("value",), 0),
    "linear": (LinearPotential, ("slope", "offset"), 1),
    "harmonic": (HarmonicPotential, ("stiffness", "center"), 1),
    "step": (SmoothStepPotential, ("height", "width", "position"), 2),
}


@dataclass(frozen=True)
class TrajectorySpec:
    x0: float
    direction: int = 1
    t_span: tuple = (0.0, 10.0)
    on_turning: str = "reflect"


@dataclass(frozen=True)
class Tolerances:
    solver: float = DEFAULT_TOL
    trajectory: float = DEFAULT_TOL
    turning_point: float = 1e-9
    limits: float = 1e-10


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class Scenario:
    name: str
    setup: PhysicalSetup
    potential: object
    domain: tuple
    x0: float
    initial_states: tuple
    constants: dict
    branch: str
    trajectory: TrajectorySpec
    tolerances: Tolerances
    grid_points: int = 200
    classical_surrogate: bool = False
    output_dir: str | None = None
    figures: bool = True
    sweep: SweepSpec | None = None
    document: dict = field(default=None, repr=False, compare=False)
    digest: str = ""

    def grid(self):
        return np.linspace(self.domain[0], self.domain[1], self.grid_points)

    def with_overrides(self, branch=None, tol=None):
        s = self
        if branch is not None:
            s = replace(s, branch=_branch(branch, "branch"))
        if tol is not None:
            tol = _positive(tol, "tolerances.solver")
            s = replace(s, tolerances=replace(s.tolerances, solver=tol, trajectory=tol))
        return s


def _fail(msg, path):
    raise ScenarioError(f"{path}: {msg}", field=path)


def _number(value, path):
    if isinstance(value, bool):
        _fail(f"expected a number, got {value!r}", path)
    try:
        out = float(value)
    except (TypeError, ValueError):
        _fail(f"expected a number, got {value!r}", path)
    if not math.isfinite(out):
        _fail(f"must be finite, got {value!r}", path)
    return out


def _positive(value, path):
    out = _number(value, path)
    if out <= 0:
        _fail(f"must be positive, got {value!r}", path)
    return out


def _mapping(value, path, allowed):
    if not isinstance(value, dict):
        _fail(f"expected a mapping, got {type(value).__name__}", path)
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        _fail(f"unknown key(s) {', '.join(map(str, unknown))}", path)
    return value


def _branch(value, path):
    key = str(value).strip().upper()
    if key not in (S0, Z0):
        _fail(f"branch must be s0 or z0, got {value!r}", path)
    return key


def _potential(spec):
    path = "potential"
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return ConstantPotential(_number(spec, path))
    if isinstance(spec, str):
        kind, *args = spec.split()
        if kind not in _POTENTIALS:
            _fail(f"unknown potential kind {kind!r}", path)
        cls, names, required = _POTENTIALS[kind]
        if not required <= len(args) <= len(names):
            _fail(f"{kind} takes {required}-{len(names)} parameters ({', '.join(names)})", path)
        return cls(**{n: _number(a, f"{path}.{n}") for n, a in zip(names, args)})
    if not isinstance(spec, dict) or "kind" not in spec:
        _fail("expected a shorthand string or a mapping with 'kind'", path)
    kind = spec["kind"]
    if kind == "tabulated":
        _mapping(spec, path, {"kind", "x", "values"})
        if "x" not in spec or "values" not in spec:
            _fail("tabulated potential requires 'x' and 'values'", path)
        xs = [_number(v, f"{path}.x[{i}]") for i, v in enumerate(spec["x"])]
        vs = [_number(v, f"{path}.values[{i}]") for i, v in enumerate(spec["values"])]
        return TabulatedPotential(tuple(xs), tuple(vs))
    if kind not in _POTENTIALS:
        _fail(f"unknown potential kind {kind!r}", f"{path}.kind")
    cls, names, required = _POTENTIALS[kind]
    _mapping(spec, path, {"kind", *names})
    missing = [n for n in names[:required] if n not in spec]
    if missing:
        _fail(f"missing parameter(s) {', '.join(missing)}", path)
    return cls(**{n: _number(spec[n], f"{path}.{n}") for n in names if n in spec})


def _pair(value, path):
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        _fail("expected a two-element list", path)
    return (_number(value[0], f"{path}[0]"), _number(value[1], f"{path}[1]"))


def _build(doc, digest):
    _mapping(doc, "<root>", _TOP_KEYS)
    for key in ("potential", "energy", "domain"):
        if key not in doc:
            _fail("required key missing", key)

    setup_kwargs = {
        k: _positive(doc[k], k) for k in ("rest_mass", "light_speed", "hbar") if k in doc
    }
    units = doc.get("units", "natural")
    if units not in ("natural", "SI"):
        _fail(f"must be 'natural' or 'SI', got {units!r}", "units")

    tol_doc = _mapping(doc.get("tolerances", {}), "tolerances", {"solver", "trajectory", "turning_point", "limits"})
    tols = Tolerances(**{k: _positive(v, f"tolerances.{k}") for k, v in tol_doc.items()})
    setup = PhysicalSetup(energy=_number(doc["energy"], "energy"), units=units,
                          turning_rtol=tols.turning_point, **setup_kwargs)
    pot = _potential(doc["potential"])

    domain = _pair(doc["domain"], "domain")
    if not domain[0] < domain[1]:
        _fail("domain must be a nonempty interval [x_min, x_max]", "domain")
    try:
        pot.check_domain(np.array(domain))
    except QHJError:
        _fail(f"potential is not defined on the whole domain {list(domain)}", "domain")

    x0 = _number(doc["x0"], "x0") if "x0" in doc else (0.0 if domain[0] <= 0.0 <= domain[1] else domain[0])
    if not domain[0] <= x0 <= domain[1]:
        _fail("x0 lies outside the domain", "x0")

    inits = doc.get("initial_states", [[1.0, 0.0], [0.0, 1.0]])
    if not isinstance(inits, (list, tuple)) or len(inits) != 2:
        _fail("expected two [theta, chi] pairs", "initial_states")
    inits = (_pair(inits[0], "initial_states[0]"), _pair(inits[1], "initial_states[1]"))
    if inits[0][0] * inits[1][1] - inits[1][0] * inits[0][1] == 0:
        _fail("initial spinors are linearly dependent", "initial_states")

    const_doc = _mapping(doc.get("constants", {}), "constants", {"a", "b", "d", "e"})
    c = {k: _number(const_doc.get(k, dflt), f"constants.{k}") for k, dflt in
         (("a", 1.0), ("b", 0.0), ("d", 1.0), ("e", 0.0))}
    try:
        constants = {S0: BranchConstants(c["a"], c["b"]), Z0: BranchConstants(c["d"], c["e"])}
    except ValidationError as exc:
        raise ScenarioError(f"BranchConstants: {exc} (constants.a and constants.d must be nonzero)",
                            field="constants") from None

    branch = _branch(doc.get("branch", "s0"), "branch")

    grid_points = doc.get("grid_points", 200)
    if isinstance(grid_points, bool) or not isinstance(grid_points, int) or grid_points < 2:
        _fail("must be an integer >= 2", "grid_points")

    traj_doc = _mapping(doc.get("trajectory", {}), "trajectory", {"x0", "direction", "t_span", "on_turning_point"})
    tx0 = _number(traj_doc.get("x0", x0), "trajectory.x0")
    if not domain[0] <= tx0 <= domain[1]:
        _fail("lies outside the domain", "trajectory.x0")
    direction = traj_doc.get("direction", 1)
    if direction not in (1, -1):
        _fail("must be 1 or -1", "trajectory.direction")
    t_span = _pair(traj_doc.get("t_span", [0.0, 10.0]), "trajectory.t_span")
    if not t_span[1] > t_span[0]:
        _fail("must be increasing", "trajectory.t_span")
    on_turning = traj_doc.get("on_turning_point", "reflect")
    if on_turning not in ("reflect", "stop"):
        _fail("must be 'reflect' or 'stop'", "trajectory.on_turning_point")
    traj = TrajectorySpec(tx0, int(direction), t_span, on_turning)

    lim_doc = _mapping(doc.get("limits", {}), "limits", {"classical_surrogate"})
    surrogate = lim_doc.get("classical_surrogate", False)
    if not isinstance(surrogate, bool):
        _fail("must be true or false", "limits.classical_surrogate")

    out_doc = _mapping(doc.get("output", {}), "output", {"directory", "figures"})
    figures = out_doc.get("figures", True)
    if not isinstance(figures, bool):
        _fail("must be true or false", "output.figures")

    sweep = None
    if "sweep" in doc:
        sw = _mapping(doc["sweep"], "sweep", {"parameter", "values"})
        if "parameter" not in sw or not isinstance(sw.get("values"), list) or not sw["values"]:
            _fail("requires 'parameter' and a nonempty 'values' list", "sweep")
        sweep = SweepSpec(str(sw["parameter"]), tuple(sw["values"]))

    # at least one classically allowed point
    grid = np.linspace(domain[0], domain[1], max(grid_points, 1001))
    if not any(energy_regime(setup, pot, xi).allowed for xi in grid):
        margin = max(energy_regime(setup, pot, xi).margin for xi in grid)
        _fail(f"energy regime: no classically allowed region in the domain "
              f"(largest (E-V)^2 - m0^2 c^4 = {margin:.6g})", "energy")

    return Scenario(
        name=str(doc.get("name", "scenario")),
        setup=setup,
        potential=pot,
        domain=domain,
        x0=x0,
        initial_states=inits,
        constants=constants,
        branch=branch,
        trajectory=traj,
        tolerances=tols,
        grid_points=grid_points,
        classical_surrogate=surrogate,
        output_dir=out_doc.get("directory"),
        figures=figures,
        sweep=sweep,
        document=doc,
        digest=digest,
    )


def parse_scenario(text):
    """Parse and validate a scenario document given as YAML text."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"malformed scenario document: {exc}", field="<root>") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping", field="<root>")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    try:
        return _build(doc, digest)
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ScenarioError(str(exc), field=exc.field) from None


def load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def sweep_documents(scenario):
    """``(id, value, sub_scenario)`` for each point of the scenario's sweep."""
    spec = scenario.sweep
    out = []
    for i, value in enumerate(spec.values):
        doc = copy.deepcopy(scenario.document)
        doc.pop("sweep")
        node = doc
        *parents, leaf = spec.parameter.split(".")
        for key in parents:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                _fail("cannot set a nested key on a non-mapping", f"sweep.parameter ({spec.parameter})")
        node[leaf] = value
        sub = _build(doc, scenario.digest)
        out.append((f"{i:04d}", value, replace(sub, name=f"{scenario.name}-{i:04d}")))
    return out
