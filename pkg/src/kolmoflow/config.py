"""Run configuration: JSON parsing, validation, defaults, echo.

A config has five sections (grid, params, initial, control, output); all
keys are optional except initial.family and control.t_end.  Unknown keys
are rejected so typos fail loudly.  ``parse_config`` accepts a file path,
JSON text, or an already-parsed dict, and returns a RunConfig whose
``resolved`` dict (every default materialized) is echoed into the run
manifest; a run is reproducible from that manifest alone.
"""

import copy
import json
import os
from dataclasses import dataclass

from .errors import ConfigError, ShapeError
from .initial_data import FAMILIES, build_initial
from .model import ModelParams, State
from .spectral import Field, TorusGrid
from .stepper import StepControl

DEFAULTS = {
    "grid": {"d": 2, "n": 64},
    "params": {
        "nu": 1.0,
        "alpha1": 1.0,
        "alpha2": 1.0,
        "alpha3": 1.0,
        "alpha4": 1.0,
        "omega_floor": 1e-6,
    },
    "initial": {"family": None},
    "control": {
        "t_end": None,
        "cfl_safety": 0.4,
        "dt_max": 0.05,
        "dt_min": 1e-10,
        "stride": 10,
        "s": 2.5,
        "blowup_threshold": 1e3,
        "eps_lift": 0.0,
        "eps_vac": 1e-4,
        "formulation": "beta",
    },
    "output": {
        "directory": "out",
        "timeseries": True,
        "snapshots": True,
        "diagnostics": {
            "envelopes": True,
            "energies": True,
            "continuation": True,
            "budgets": True,
            "vacuum": True,
        },
    },
}


def _merge(defaults: dict, given: dict, path: str = "") -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        here = f"{path}.{key}" if path else key
        if key not in defaults and path in ("", "grid", "params", "control", "output",
                                            "output.diagnostics"):
            raise ConfigError(f"unknown config key {here!r}")
        if isinstance(value, dict) and isinstance(defaults.get(key), dict):
            out[key] = _merge(defaults[key], value, here)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class RunConfig:
    grid: TorusGrid
    params: ModelParams
    control: StepControl
    initial: dict
    output: dict
    resolved: dict

    def build_initial_state(self) -> State:
        spec = dict(self.initial)
        family = spec.pop("family")
        state = build_initial(self.grid, family, **spec)
        eps = self.resolved["control"]["eps_lift"]
        if eps > 0.0:
            # the (sqrt(k0) + eps)^2 lifting, expressed on beta directly
            state = State(
                state.t,
                state.u,
                state.omega,
                Field(self.grid, state.beta.values + eps),
            )
        return state


def _load_source(source) -> dict:
    if isinstance(source, dict):
        return copy.deepcopy(source)
    text = None
    if isinstance(source, (str, os.PathLike)):
        if isinstance(source, os.PathLike) or (
            not str(source).lstrip().startswith("{") and os.path.exists(source)
        ):
            try:
                with open(source) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config file {source}: {exc}") from exc
        else:
            text = str(source)
    if text is None:
        raise ConfigError("config source must be a path, JSON text, or dict")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def apply_overrides(data: dict, overrides) -> dict:
    """Apply --key=value overrides with dotted paths into the config dict."""
    out = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, raw = item.partition("=")
        key = key.lstrip("-")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {key!r} crosses a non-object value")
        node[parts[-1]] = value
    return out


def parse_config(source, overrides=()) -> RunConfig:
    """Parse + validate; returns a RunConfig with all defaults materialized."""
    data = _load_source(source)
    if overrides:
        data = apply_overrides(data, overrides)
    resolved = _merge(DEFAULTS, data)

    try:
        grid = TorusGrid(int(resolved["grid"]["d"]), int(resolved["grid"]["n"]))
    except (ShapeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from exc
    try:
        params = ModelParams(**resolved["params"])
    except (ShapeError, TypeError) as exc:
        raise ConfigError(f"params: {exc}") from exc

    ctrl = resolved["control"]
    if ctrl["t_end"] is None:
        raise ConfigError("control.t_end is required")
    if ctrl["eps_lift"] < 0.0:
        raise ConfigError("control.eps_lift must be nonnegative")
    disabled = tuple(
        name
        for name, enabled in resolved["output"]["diagnostics"].items()
        if not enabled
    )
    try:
        control = StepControl(
            t_end=float(ctrl["t_end"]),
            cfl_safety=float(ctrl["cfl_safety"]),
            dt_max=float(ctrl["dt_max"]),
            dt_min=float(ctrl["dt_min"]),
            stride=int(ctrl["stride"]),
            s=float(ctrl["s"]),
            blowup_threshold=float(ctrl["blowup_threshold"]),
            eps_vac=float(ctrl["eps_vac"]),
            formulation=str(ctrl["formulation"]),
            disabled=disabled,
        )
        control.check_regularity_index(grid.d)
    except ShapeError as exc:
        raise ConfigError(f"control: {exc}") from exc

    initial = resolved["initial"]
    family = initial.get("family")
    if family is None:
        raise ConfigError("initial.family is required")
    if family == "from_file":
        path = initial.get("path")
        if not path:
            raise ConfigError("initial.path is required for family 'from_file'")
        if not os.path.exists(path):
            raise ConfigError(f"initial.path does not exist: {path}")
    elif family not in FAMILIES:
        raise ConfigError(
            f"unknown initial.family {family!r}; choose from "
            + ", ".join(sorted(FAMILIES)) + ", from_file"
        )
    return RunConfig(
        grid=grid,
        params=params,
        control=control,
        initial=dict(initial),
        output=dict(resolved["output"]),
        resolved=resolved,
    )
