"""JSON scenario files driving the command-line tools.

Schema (all sections optional unless a command needs them)::

    {
      "params":     {"a": 0.29, "i1": 0.55, "i3": 0.51, "mu_r": 1.0,
                     "m": 1, "R": 1, "g": 1, "mu": 0, "mu_s": 0,
                     "mu_kind": "viscous"},
      "model":      "rolling" | {"type": "composite", "components": [...]},
      "system":     "general" | "decoupled" | "reduced",
      "initial":    {"v": [..], "omega": [..], "gamma": [..]}
                    or {"gamma3": .., "K1": .., "K2": .., "C": .., "phi": 0},
      "integrator": {"rtol": 1e-10, "t_end": 50, ...},
      "grid":       {"C": [..] | {"start": .., "stop": .., "num": ..},
                     "c1": ..., "K1": ..., "gamma3": 0.9, "K2": 0.0},
      "conservation": {"models": [...], "samples": 32, "trajectories": 2},
      "outputs":    {"trajectory": "trajectory.csv", ...}
    }

Parameters with m, R or g different from 1 are physical and get scaled
once at load time.  ``mu_kind`` tells how ``mu`` is measured.
"""

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError
from .friction import make_model
from .integrate import IntegratorConfig
from .params import TOL_GEOM, BodyParams, FullState, constraint_residuals, nondimensionalize
from .reduction import ReducedState
from .systems import rolling_model

PARAM_KEYS = {"a", "i1", "i3", "m", "R", "g", "mu", "mu_r", "mu_s"}
SYSTEMS = ("general", "decoupled", "reduced")
DEFAULT_OUTPUTS = {
    "trajectory": "trajectory.csv",
    "summary": "summary.json",
    "stability": "stability.csv",
    "smale": "smale.csv",
    "phase": "phase_portrait.csv",
    "phase_summary": "phase_summary.csv",
    "sigma0_curve": "sigma0_curve.csv",
    "conservation": "conservation.csv",
    "report": "conservation.json",
}
# K1 x C grid for phase portraits when none is given
DEFAULT_PHASE_K1 = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
DEFAULT_PHASE_C = [-3.0, -2.5, -2.0, -1.0, 1.0, 2.0, 2.5, 3.0]


@dataclass
class Scenario:
    params: BodyParams
    model: object = None
    system: Optional[str] = None
    initial: object = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    grid: dict = field(default_factory=dict)
    conservation: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUTS))
    raw: dict = field(default_factory=dict)


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {value!r}", field=name)
    if not np.isfinite(value):
        raise ValidationError(f"{name} must be finite", field=name)
    return float(value)


def _vector(value, name):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ValidationError(f"{name} must be a list of 3 numbers", field=name)
    return np.array([_number(x, f"{name}[{i}]") for i, x in enumerate(value)])


def parse_params(spec):
    if not isinstance(spec, dict):
        raise ValidationError("params must be an object", field="params")
    unknown = set(spec) - PARAM_KEYS - {"mu_kind", "dimensionless"}
    if unknown:
        raise ValidationError(f"unknown parameter {sorted(unknown)[0]!r}",
                              field=f"params.{sorted(unknown)[0]}")
    for key in ("a", "i1", "i3"):
        if key not in spec:
            raise ValidationError(f"missing required parameter {key!r}", field=f"params.{key}")
    values = {k: _number(spec[k], f"params.{k}") for k in PARAM_KEYS if k in spec}
    try:
        params = BodyParams(**values)
    except ValidationError as exc:
        raise ValidationError(str(exc), field=f"params.{exc.field}") from None
    if params.is_unit_scaled:
        return params.with_(dimensionless=True)
    return nondimensionalize(params, spec.get("mu_kind", "viscous"))


def parse_grid_axis(value, name):
    """A list of numbers or ``{"start", "stop", "num"}`` (inclusive linspace)."""
    if isinstance(value, list):
        return [_number(x, f"{name}[{i}]") for i, x in enumerate(value)]
    if isinstance(value, dict):
        for key in ("start", "stop", "num"):
            if key not in value:
                raise ValidationError(f"{name} needs {key!r}", field=f"{name}.{key}")
        num = value["num"]
        if isinstance(num, bool) or not isinstance(num, int) or num < 0:
            raise ValidationError(f"{name}.num must be a non-negative integer", field=f"{name}.num")
        start = _number(value["start"], f"{name}.start")
        stop = _number(value["stop"], f"{name}.stop")
        return [float(x) for x in np.linspace(start, stop, num)]
    raise ValidationError(f"{name} must be a list or a start/stop/num object", field=name)


def parse_initial(spec):
    if not isinstance(spec, dict):
        raise ValidationError("initial must be an object", field="initial")
    full = {"v", "omega", "gamma"} & set(spec)
    reduced = {"gamma3", "K1", "K2", "C"} & set(spec)
    if full and reduced:
        raise ValidationError("give either a full (v, omega, gamma) or a reduced "
                              "(gamma3, K1, K2, C) initial state, not both", field="initial")
    if full:
        for key in ("omega", "gamma"):
            if key not in spec:
                raise ValidationError(f"missing {key!r}", field=f"initial.{key}")
        omega = _vector(spec["omega"], "initial.omega")
        gamma = _vector(spec["gamma"], "initial.gamma")
        v = _vector(spec["v"], "initial.v") if "v" in spec else None
        return {"omega": omega, "gamma": gamma, "v": v}
    if reduced:
        for key in ("gamma3", "K1", "K2", "C"):
            if key not in spec:
                raise ValidationError(f"missing {key!r}", field=f"initial.{key}")
        vals = {k: _number(spec[k], f"initial.{k}") for k in ("gamma3", "K1", "K2", "C")}
        phi = _number(spec.get("phi", 0.0), "initial.phi")
        if abs(vals["gamma3"]) > 1:
            raise ValidationError("|gamma3| must not exceed 1", field="initial.gamma3")
        return ReducedState(vals["gamma3"], vals["K1"], vals["K2"], vals["C"], phi)
    raise ValidationError("initial state is empty", field="initial")


def parse_integrator(spec):
    if not isinstance(spec, dict):
        raise ValidationError("integrator must be an object", field="integrator")
    known = {f.name for f in fields(IntegratorConfig)}
    unknown = set(spec) - known
    if unknown:
        key = sorted(unknown)[0]
        raise ValidationError(f"unknown integrator setting {key!r}", field=f"integrator.{key}")
    try:
        return IntegratorConfig(**spec)
    except TypeError as exc:
        raise ValidationError(str(exc), field="integrator") from None
    except ValidationError as exc:
        raise ValidationError(str(exc), field=f"integrator.{exc.field}") from None


def parse_scenario(data):
    if not isinstance(data, dict):
        raise ValidationError("scenario must be a JSON object", field="<root>")
    if "params" not in data:
        raise ValidationError("scenario needs a params section", field="params")
    params = parse_params(data["params"])
    sc = Scenario(params=params, raw=data)
    if "model" in data:
        try:
            sc.model = make_model(data["model"])
        except ValidationError as exc:
            raise ValidationError(str(exc), field=exc.field or "model") from None
    else:
        sc.model = rolling_model(params)
    if "system" in data:
        if data["system"] not in SYSTEMS:
            raise ValidationError(f"system must be one of {SYSTEMS}", field="system")
        sc.system = data["system"]
    if "initial" in data:
        sc.initial = parse_initial(data["initial"])
    if "integrator" in data:
        sc.integrator = parse_integrator(data["integrator"])
    grid = data.get("grid", {})
    if not isinstance(grid, dict):
        raise ValidationError("grid must be an object", field="grid")
    for key in ("C", "c1", "K1"):
        if key in grid:
            sc.grid[key] = parse_grid_axis(grid[key], f"grid.{key}")
    for key in ("gamma3", "K2"):
        if key in grid:
            sc.grid[key] = _number(grid[key], f"grid.{key}")
    cons = data.get("conservation", {})
    if not isinstance(cons, dict):
        raise ValidationError("conservation must be an object", field="conservation")
    sc.conservation = dict(cons)
    outputs = data.get("outputs", {})
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        raise ValidationError("outputs must map names to file names", field="outputs")
    sc.outputs.update(outputs)
    return sc


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario: {exc}", field="--scenario") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON at line {exc.lineno}: {exc.msg}",
                              field="<root>") from None
    return parse_scenario(data)


def initial_full_state(sc):
    """FullState for a full-form initial entry.

    gamma must be a unit vector and v must satisfy the contact constraint,
    both within TOL_GEOM; when v is omitted the rolling-compatible value
    with zero horizontal part is used.
    """
    from .dynamics import decoupled_velocity

    init = sc.initial
    gamma, omega = init["gamma"], init["omega"]
    if abs(gamma @ gamma - 1.0) > TOL_GEOM:
        raise ValidationError("gamma must be a unit vector", field="initial.gamma")
    if init["v"] is None:
        return FullState(decoupled_velocity(omega, gamma, sc.params), omega, gamma)
    state = FullState(init["v"], omega, gamma)
    if abs(constraint_residuals(state, sc.params)[0]) > TOL_GEOM:
        raise ValidationError("v violates the contact constraint (v + omega x r, gamma) = 0",
                              field="initial.v")
    return state
