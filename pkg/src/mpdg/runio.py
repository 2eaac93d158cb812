"""Run artifacts: snapshot CSVs, run logs, checkpoints, configs.

Snapshot schema (one row per Gauss node of each fluid cell):

    x, y, rho, u, v, p, T, z_1 .. z_M

1D fields write y = 0 and v = 0. The run log carries one row per step
with the time step, global wave speed, monitored minima and limiter
statistics. Checkpoints are a single file: a JSON header line
(dimensions, degree, variable names) followed by the raw nodal values.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from .dg import Mesh
from .driver import RunState, StepRecord
from .errors import ConfigurationError
from .quadrature import QuadratureSet

LOG_COLUMNS = [
    "step", "t", "dt", "alpha", "min_rho", "min_p", "frac_err",
    "limited_cells_gauss", "limited_cells_interface",
    "min_theta_gauss", "min_theta_interface", "rebootstrapped",
]


def snapshot_columns(nspecies: int) -> list[str]:
    return ["x", "y", "rho", "u", "v", "p", "T"] + [f"z_{i+1}" for i in range(nspecies)]


def write_snapshot(path, model, mesh: Mesh, qs: QuadratureSet, u: np.ndarray) -> None:
    """Write primitive values at every Gauss node of the fluid cells."""
    ns = model.nspecies
    x, y = mesh.node_coords(qs)
    la, lb = u.shape[3], u.shape[4]
    xg = np.broadcast_to(x[:, None, :, None], (mesh.nx, mesh.ny, la, lb))
    yg = np.broadcast_to(y[None, :, None, :], (mesh.nx, mesh.ny, la, lb))

    rho = u[:ns].sum(axis=0)
    m = u[ns]
    n = u[ns + 1] if model.ndim == 2 else np.zeros_like(m)
    with np.errstate(invalid="ignore", divide="ignore"):
        vel_u = m / rho
        vel_v = n / rho
        z = u[:ns] / rho[None]
    if model.has_pressure:
        p = model.pressure_raw(u)
        temp = model.temperature(u) if hasattr(model, "temperature") else p / rho
    else:
        p = np.zeros_like(rho)
        temp = np.zeros_like(rho)

    fluid = mesh.fluid_mask()
    cols = [xg[fluid], yg[fluid], rho[fluid], vel_u[fluid], vel_v[fluid], p[fluid], temp[fluid]]
    cols += [z[i][fluid] for i in range(ns)]
    data = np.stack([c.ravel() for c in cols], axis=1)
    header = ",".join(snapshot_columns(ns))
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.12g")


def append_log_rows(path, records: list[StepRecord], write_header: bool) -> None:
    mode = "w" if write_header else "a"
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh)
        if write_header:
            w.writerow(LOG_COLUMNS)
        for r in records:
            rg, ri = r.limiter_gauss, r.limiter_interface
            w.writerow([
                r.step, f"{r.t:.12g}", f"{r.dt:.12g}", f"{r.alpha:.12g}",
                f"{r.min_rho:.12g}", f"{r.min_p:.12g}", f"{r.max_fraction_err:.12g}",
                rg.touched if rg else 0, ri.touched if ri else 0,
                f"{min(rg.min_theta_density, rg.min_theta_pressure):.6g}" if rg else 1,
                f"{min(ri.min_theta_density, ri.min_theta_pressure):.6g}" if ri else 1,
                int(r.rebootstrapped),
            ])


def write_checkpoint(path, run: RunState) -> None:
    mesh, qs = run.mesh, run.qs
    header = {
        "ndim": mesh.ndim,
        "degree": qs.degree,
        "nx": mesh.nx,
        "ny": mesh.ny,
        "domain": [mesh.x0, mesh.x1, mesh.y0, mesh.y1],
        "t": run.t,
        "step": run.step_index,
        "variables": getattr(run.model, "variable_names", None)
        or [f"c_{i+1}" for i in range(run.model.nspecies)]
        + (["m", "n", "E"] if run.model.ndim == 2 else ["m", "E"]),
        "shape": list(run.u.shape),
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode())
        np.save(fh, run.u)


def read_checkpoint(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        u = np.load(fh)
    if list(u.shape) != header["shape"]:
        raise ConfigurationError("checkpoint payload does not match its header")
    return header, u


def write_config(path, case_id: str, params: dict) -> None:
    with open(path, "w") as fh:
        json.dump({"case": case_id, "params": params}, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def read_config(path) -> tuple[str, dict]:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "case" not in doc:
        raise ConfigurationError(f"{path}: expected a JSON object with a 'case' key")
    return doc["case"], doc.get("params", {})


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def write_table(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in columns})
