"""Command-line interface.

Subcommands:
  run <config>        simulate and write manifest/timeseries/snapshots
  check <config>      validate config and initial data, print the echo
  harness <case>      inequality ratio harness (--trials, --seed, ...)
  stability <config>  twin run with a perturbed copy (--perturb delta)
  oracle <name>       run a named brute-force oracle

Any trailing --key=value flags override config keys by dotted path, e.g.
--control.t_end=0.25.  Exit codes: 0 success, 2 validation failure,
3 blow-up-terminated run (outputs still written), 4 I/O failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .config import parse_config
from .diagnostics import twin_stability
from .errors import (
    ConfigError,
    InvalidInitialDataError,
    KolmoflowError,
    ShapeError,
)
from .harness import CASES, inequality_harness
from .io import write_timeseries, write_trajectory
from .model import State
from .oracles import ORACLES, run_oracle
from .spectral import Field, TorusGrid
from .stepper import run_simulation

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BLOWUP = 3
EXIT_IO = 4


def _split_overrides(extra):
    overrides = []
    for item in extra:
        if item.startswith("--") and "=" in item:
            overrides.append(item[2:])
        else:
            raise ConfigError(f"unrecognised argument {item!r} (expected --key=value)")
    return overrides


def _cmd_run(args, extra) -> int:
    cfg = parse_config(args.config, _split_overrides(extra))
    initial = cfg.build_initial_state()
    traj = run_simulation(initial, cfg.params, cfg.control)
    directory = cfg.output["directory"]
    try:
        write_trajectory(traj, cfg.resolved, directory)
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"status={traj.status} steps={traj.steps} t={traj.times[-1]:.6g} "
        f"clamp_mass={traj.clamp_total:.6g} -> {directory}"
    )
    if traj.status != "completed":
        print(f"terminated: {traj.reason}", file=sys.stderr)
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_check(args, extra) -> int:
    cfg = parse_config(args.config, _split_overrides(extra))
    initial = cfg.build_initial_state()
    cfg.control.check_regularity_index(cfg.grid.d)
    violations = initial.violations(cfg.params)
    if violations:
        raise InvalidInitialDataError(violations)
    print(json.dumps(cfg.resolved, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_harness(args, extra) -> int:
    if extra:
        raise ConfigError(f"unrecognised arguments {extra}")
    grid = TorusGrid(args.d, args.n)
    kwargs = {}
    if args.case == "comp":
        kwargs["omega_o"] = args.omega_o
    res = inequality_harness(
        args.case, args.trials, args.seed, grid=grid, s=args.s, **kwargs
    )
    print(
        f"case={res.case} trials={res.trials} skipped={res.skipped} "
        f"max={res.max:.6g} mean={res.mean:.6g} std={res.std:.6g}"
    )
    return EXIT_OK


def _perturbed_state(state: State, delta: float, field: str) -> State:
    grid = state.grid
    wave = np.cos(grid.coords[0] + np.zeros(grid.shape))
    if field == "omega":
        return State(
            state.t, state.u, Field(grid, state.omega.values + delta * wave), state.beta
        )
    if field == "beta":
        return State(
            state.t, state.u, state.omega, Field(grid, state.beta.values + delta * wave)
        )
    if field == "u":
        vals = state.u.values.copy()
        vals[0] = vals[0] + delta * np.cos(
            grid.coords[-1] + np.zeros(grid.shape)
        )  # d_0 of f(x_last) = 0: stays divergence-free
        return State(state.t, Field(grid, vals), state.omega, state.beta)
    raise ConfigError(f"perturbation field must be u/omega/beta, got {field!r}")


def _cmd_stability(args, extra) -> int:
    cfg = parse_config(args.config, _split_overrides(extra))
    base_state = cfg.build_initial_state()
    twin_state = _perturbed_state(base_state, args.perturb, args.field)
    base = run_simulation(base_state, cfg.params, cfg.control)
    twin = run_simulation(twin_state, cfg.params, cfg.control)
    report = twin_stability(base, twin, cfg.params)
    directory = cfg.output["directory"]
    try:
        os.makedirs(directory, exist_ok=True)
        rows = [
            {
                "t": report.times[i],
                "energy": report.energy[i],
                "theta": report.theta[i],
                "int_theta": report.int_theta[i],
                "bound": report.bound[i],
            }
            for i in range(report.times.size)
        ]
        path = os.path.join(directory, "stability.csv")
        with open(path, "w", newline="") as fh:
            fh.write("t,energy,theta,int_theta,bound\n")
            for row in rows:
                fh.write(
                    ",".join(format(row[k], ".17g") for k in
                             ("t", "energy", "theta", "int_theta", "bound")) + "\n"
                )
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"delta={args.perturb:g} field={args.field} E0={report.energy[0]:.6g} "
        f"C_fit={report.c_fit:.6g} -> {path}"
    )
    if base.status != "completed" or twin.status != "completed":
        return EXIT_BLOWUP
    return EXIT_OK


def _cmd_oracle(args, extra) -> int:
    if extra:
        raise ConfigError(f"unrecognised arguments {extra}")
    res = run_oracle(args.name)
    print(
        f"oracle={res['name']} max_error={res['max_error']:.6g} "
        f"tolerance={res['tolerance']:.6g} passed={res['passed']}"
    )
    return EXIT_OK if res["passed"] else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kolmoflow",
        description="Pseudo-spectral solver for the Kolmogorov two-equation "
        "turbulence model with Littlewood-Paley diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a simulation from a config")
    p_run.add_argument("config")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="validate a config without running")
    p_check.add_argument("config")
    p_check.set_defaults(func=_cmd_check)

    p_har = sub.add_parser("harness", help="inequality ratio harness")
    p_har.add_argument("case", choices=CASES)
    p_har.add_argument("--trials", type=int, default=100)
    p_har.add_argument("--seed", type=int, default=0)
    p_har.add_argument("--d", type=int, default=2)
    p_har.add_argument("--n", type=int, default=32)
    p_har.add_argument("--s", type=float, default=2.0)
    p_har.add_argument("--omega-o", dest="omega_o", type=float, default=1.0)
    p_har.set_defaults(func=_cmd_harness)

    p_st = sub.add_parser("stability", help="twin run against a perturbed copy")
    p_st.add_argument("config")
    p_st.add_argument("--perturb", type=float, required=True)
    p_st.add_argument("--field", choices=("u", "omega", "beta"), default="omega")
    p_st.set_defaults(func=_cmd_stability)

    p_or = sub.add_parser("oracle", help="run a named brute-force oracle")
    p_or.add_argument("name", choices=sorted(ORACLES))
    p_or.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        return args.func(args, extra)
    except (ConfigError, InvalidInitialDataError, ShapeError) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except KolmoflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
