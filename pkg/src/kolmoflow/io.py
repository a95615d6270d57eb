"""Serialization: time series CSV, raw-binary snapshots, manifests.

Formats are chosen for inspectability and determinism: JSON for configs
and sidecars, CSV for per-step diagnostics (17 significant digits, fixed
column order), flat little-endian float64 arrays in row-major grid order
for bulk fields.  Identical config + seed must reproduce output files
byte for byte.
"""

import hashlib
import json
import os

import numpy as np

from .errors import SnapshotIntegrityError
from .model import State
from .spectral import Field, TorusGrid

TIMESERIES_COLUMNS = [
    "t", "dt", "min_omega", "max_omega", "omega_min_env", "omega_max_env",
    "min_k", "L2_u", "L2_omega", "L2_beta", "E_s", "F_s", "bold_E_s", "A",
    "integral_A", "residual_3_3", "residual_3_4", "residual_3_5",
    "residual_3_6", "vacuum_fraction", "clamp_mass",
]


def _fmt(value) -> str:
    return format(float(value), ".17g")


def write_timeseries(rows, path) -> None:
    """One CSV: header row, then one row per diagnostic step."""
    lines = [",".join(TIMESERIES_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col, float("nan"))) for col in TIMESERIES_COLUMNS))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_timeseries(path) -> dict:
    """Column arrays keyed by header name."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _field_components(state: State):
    comps = [(f"u_{i}", state.u.values[i]) for i in range(state.grid.d)]
    comps.append(("omega", state.omega.values))
    comps.append(("beta", state.beta.values))
    return comps


def write_snapshot(state: State, directory, basename: str = "snapshot") -> str:
    """Raw little-endian float64 arrays plus a JSON sidecar; returns the
    sidecar path.  read_snapshot inverts this bit-exactly."""
    os.makedirs(directory, exist_ok=True)
    entries = []
    for name, values in _field_components(state):
        fname = f"{basename}_{name}.f64"
        data = np.ascontiguousarray(values, dtype="<f8").tobytes()
        with open(os.path.join(directory, fname), "wb") as fh:
            fh.write(data)
        entries.append({"name": name, "file": fname, "sha256": _sha256(data)})
    sidecar = {
        "t": state.t,
        "d": state.grid.d,
        "n": state.grid.n,
        "fields": entries,
    }
    sidecar_path = os.path.join(directory, f"{basename}.json")
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar_path


def read_snapshot(sidecar_path) -> State:
    """Rebuild a State from a snapshot sidecar, verifying checksums."""
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    grid = TorusGrid(int(sidecar["d"]), int(sidecar["n"]))
    directory = os.path.dirname(os.path.abspath(sidecar_path))
    arrays = {}
    for entry in sidecar["fields"]:
        with open(os.path.join(directory, entry["file"]), "rb") as fh:
            data = fh.read()
        if _sha256(data) != entry["sha256"]:
            raise SnapshotIntegrityError(
                f"checksum mismatch for {entry['file']}"
            )
        values = np.frombuffer(data, dtype="<f8")
        if values.size != grid.npoints:
            raise SnapshotIntegrityError(
                f"{entry['file']} holds {values.size} values, expected {grid.npoints}"
            )
        arrays[entry["name"]] = values.reshape(grid.shape).astype(float)
    u = Field(grid, np.stack([arrays[f"u_{i}"] for i in range(grid.d)]))
    return State(
        float(sidecar["t"]), u, Field(grid, arrays["omega"]), Field(grid, arrays["beta"])
    )


def write_manifest(resolved_config: dict, path) -> None:
    """Echo of the fully resolved configuration; a run is reproducible
    from its manifest alone."""
    with open(path, "w") as fh:
        json.dump(resolved_config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trajectory(traj, config_resolved: dict, directory) -> None:
    """Standard run outputs: manifest, time series, snapshot files."""
    os.makedirs(directory, exist_ok=True)
    write_manifest(config_resolved, os.path.join(directory, "manifest.json"))
    output = config_resolved.get("output", {})
    if output.get("timeseries", True):
        write_timeseries(traj.rows, os.path.join(directory, "timeseries.csv"))
    if output.get("snapshots", True):
        snap_dir = os.path.join(directory, "snapshots")
        for i, state in enumerate(traj.states):
            write_snapshot(state, snap_dir, basename=f"snap_{i:06d}")
    status = {
        "status": traj.status,
        "reason": traj.reason,
        "steps": traj.steps,
        "clamp_omega_total": traj.clamp_omega_total,
        "clamp_beta_total": traj.clamp_beta_total,
        "final_time": traj.times[-1] if traj.times else 0.0,
    }
    with open(os.path.join(directory, "status.json"), "w") as fh:
        json.dump(status, fh, indent=2, sort_keys=True)
        fh.write("\n")
