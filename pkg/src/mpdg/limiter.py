"""Bound-preserving slope limiter.

Rescales each cell's polynomials about their (admissible) cell averages
so that density, mass fractions, and pressure are admissible on a
prescribed point set, preserving every cell average to round-off:

  1. if the average density is at or below the floor eps, the whole
     state collapses to its average;
  2. density positivity: scale all species by
     theta_K = (rho_bar - eps) / (rho_bar - rho_min) when the density
     minimum over the target points is negative (every species gets the
     same factor so the species sum stays equal to the density);
  3. fraction positivity: push species toward the average-fraction
     profile c_bar_i * rho(x) / rho_bar with a single shared factor
     theta = max over violating points and species of
     -c_i(x) rho_bar / (c_bar_i rho(x) - c_i(x) rho_bar);
  4. pressure positivity: for points with negative pressure take
     theta_x = p(U_bar) / (p(U_bar) - p(U(x))) and scale the full state
     about its average by the cellwise minimum. Pressure is not linear
     in the conserved state for a general EOS, so this stage re-checks
     and repeats up to three times, then collapses the cell to its
     average (iteration counts are reported).

Stage 2/3 leave momentum and energy untouched; only stage 4 scales them.

Target sets: the tensor Gauss nodes (before the Patankar source step)
or the interface sets Lobatto_x (x) Gauss_y and Gauss_x (x) Lobatto_y
(after it). Clean cells are detected with a single evaluation and the
correction pipeline runs on the violating subset only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dg import Mesh, cell_averages
from .errors import AdmissibilityError, ConfigurationError
from .quadrature import QuadratureSet

DEFAULT_EPS = 1e-13
_PRESSURE_RETRIES = 3


@dataclass
class LimiterReport:
    """Aggregate limiter statistics for one application, plus the
    post-limit minima over the target set (reused by run monitoring)."""

    cells: int = 0
    collapsed: int = 0
    density_cells: int = 0
    fraction_cells: int = 0
    pressure_cells: int = 0
    # retention factors: 1 = untouched, 0 = collapsed to average. The
    # fraction stage's push factor theta maps to retention 1 - theta.
    min_theta_density: float = 1.0
    min_theta_fraction: float = 1.0
    min_theta_pressure: float = 1.0
    pressure_iterations: int = 0
    min_rho: float = np.nan
    min_p: float = np.nan
    min_species: float = np.nan

    @property
    def touched(self) -> int:
        return self.collapsed + self.density_cells + self.fraction_cells + self.pressure_cells


def target_values(u: np.ndarray, qs: QuadratureSet, target: str, ndim: int) -> np.ndarray:
    """Values of every variable at the target point set.

    Works for full fields (nv, nx, ny, La, Lb) and for cell subsets
    (nv, ncells, La, Lb); the point axis is flattened last.
    """
    lead = u.shape[:-2]
    if target == "gauss":
        return u.reshape(lead + (-1,))
    if target != "interface":
        raise ConfigurationError(f"unknown limiter target {target!r}")
    lob_x = np.moveaxis(np.tensordot(qs.to_lobatto, u, axes=([1], [u.ndim - 2])), 0, -2)
    lob_x = lob_x.reshape(lead + (-1,))
    if ndim == 1:
        return lob_x
    lob_y = np.tensordot(u, qs.to_lobatto, axes=([u.ndim - 1], [1])).reshape(lead + (-1,))
    return np.concatenate([lob_x, lob_y], axis=-1)


def _limit_subset(model, qs, target, ndim, u_bad, vals, avg_bad, eps, report: LimiterReport) -> np.ndarray:
    """Run limiter stages 1-4 on a cell subset (nv, nc, La, Lb).

    `vals` holds the target-point values of `u_bad` and is kept in sync
    algebraically: every stage update is linear in the state, so no
    re-interpolation is needed; only pressure is re-evaluated.
    """
    nv = u_bad.shape[0]
    ns = model.nspecies
    species_slots = list(range(ns))
    scale_slots = species_slots + ([nv - 1] if getattr(model, "extra_density_slot", False) else [])
    rho_bar = avg_bad[species_slots].sum(axis=0)
    tol = 1e-14 * rho_bar
    avg_n = avg_bad[:, :, None, None]
    avg_p = avg_bad[:, :, None]

    def collapse(cells: np.ndarray) -> None:
        u_bad[:, cells] = avg_n[:, cells]
        vals[:, cells] = avg_p[:, cells]

    # -- step 1 ---------------------------------------------------------
    tiny = rho_bar <= eps
    if tiny.any():
        collapse(tiny)
        report.collapsed += int(tiny.sum())

    # -- step 2: density ------------------------------------------------
    rho_min = vals[species_slots].sum(axis=0).min(axis=-1)
    need = rho_min < -tol
    if need.any():
        theta = np.ones_like(rho_bar)
        theta[need] = (rho_bar[need] - eps) / (rho_bar[need] - rho_min[need])
        u_bad[scale_slots] = avg_n[scale_slots] + theta[None, :, None, None] * (u_bad[scale_slots] - avg_n[scale_slots])
        vals[scale_slots] = avg_p[scale_slots] + theta[None, :, None] * (vals[scale_slots] - avg_p[scale_slots])
        report.density_cells += int(need.sum())
        report.min_theta_density = min(report.min_theta_density, float(theta[need].min()))

    # -- step 3: fractions ------------------------------------------------
    c_vals = vals[species_slots]
    rho_vals = c_vals.sum(axis=0)
    c_bar = avg_bad[species_slots]
    viol = c_vals < -tol[None, :, None]
    if viol.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = c_bar[:, :, None] * rho_vals[None] - c_vals * rho_bar[None, :, None]
            cand = np.where(viol, -c_vals * rho_bar[None, :, None] / denom, 0.0)
        cand = np.where(np.isfinite(cand), cand, 0.0)
        theta = cand.max(axis=(0, 2))
        cells = theta > 0.0
        if cells.any():
            frac_bar = c_bar / rho_bar[None]
            th = theta[None, :, None, None]
            u_bad[species_slots] = (1.0 - th) * u_bad[species_slots] + th * (
                frac_bar[:, :, None, None] * u_bad[species_slots].sum(axis=0)[None]
            )
            thv = theta[None, :, None]
            vals[species_slots] = (1.0 - thv) * c_vals + thv * (frac_bar[:, :, None] * rho_vals[None])
            report.fraction_cells += int(cells.sum())
            report.min_theta_fraction = min(report.min_theta_fraction, float(1.0 - theta[cells].max()))

    # -- step 4: pressure -------------------------------------------------
    if model.has_pressure:
        p_bar = model.pressure_raw(avg_bad)
        tol_p = 1e-14 * p_bar
        for it in range(_PRESSURE_RETRIES):
            p_vals = model.pressure_raw(vals)
            need = p_vals.min(axis=-1) < -tol_p
            if not need.any():
                break
            report.pressure_iterations = max(report.pressure_iterations, it + 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                theta_x = np.where(p_vals < 0.0, p_bar[:, None] / (p_bar[:, None] - p_vals), 1.0)
            theta = theta_x.min(axis=-1)
            theta[~need] = 1.0
            u_bad[:] = avg_n + theta[None, :, None, None] * (u_bad - avg_n)
            vals[:] = avg_p + theta[None, :, None] * (vals - avg_p)
            if it == 0:
                report.pressure_cells += int(need.sum())
                report.min_theta_pressure = min(report.min_theta_pressure, float(theta[need].min()))
        else:
            p_vals = model.pressure_raw(vals)
            bad = p_vals.min(axis=-1) < -tol_p
            if bad.any():
                collapse(bad)
                report.collapsed += int(bad.sum())
    return u_bad


def limit_field(
    model,
    mesh: Mesh,
    qs: QuadratureSet,
    u: np.ndarray,
    target: str,
    eps: float = DEFAULT_EPS,
) -> tuple[np.ndarray, LimiterReport]:
    """Apply the limiter cellwise (vectorized); returns a new array.

    Requires admissible cell averages; an inadmissible average means an
    upstream CFL or contract violation and raises rather than patching.
    """
    ns = model.nspecies
    fluid = mesh.fluid_mask()
    report = LimiterReport(cells=int(fluid.sum()))

    avg = cell_averages(u, qs)
    rho_bar = avg[:ns].sum(axis=0)

    if np.any(~(rho_bar[fluid] > 0.0)):
        idx = np.argwhere(fluid & ~(rho_bar > 0.0))[0]
        raise AdmissibilityError(
            f"cell {tuple(idx)} has nonpositive average density {rho_bar[tuple(idx)]:.3e}; "
            "upstream CFL/limiter contract violated"
        )
    if model.has_pressure:
        p_bar = model.pressure_raw(avg)
        if np.any(~(p_bar[fluid] > 0.0)):
            idx = np.argwhere(fluid & ~(p_bar > 0.0))[0]
            raise AdmissibilityError(
                f"cell {tuple(idx)} has nonpositive average pressure {p_bar[tuple(idx)]:.3e}; "
                "upstream CFL/limiter contract violated"
            )

    # single evaluation to find violating cells
    vals = target_values(u, qs, target, mesh.ndim)
    c_vals = vals[:ns]
    species_min = c_vals.min(axis=0).min(axis=-1)
    tol = 1e-14 * rho_bar
    bad = species_min < -tol
    p_min = None
    if model.has_pressure:
        p_min = model.pressure_raw(vals).min(axis=-1)
        bad = bad | (p_min < -1e-14 * p_bar)
    bad |= rho_bar <= eps
    bad &= fluid

    if not bad.any():
        report.min_species = float(species_min[fluid].min())
        report.min_rho = float(c_vals.sum(axis=0).min(axis=-1)[fluid].min())
        report.min_p = float(p_min[fluid].min()) if p_min is not None else np.nan
        return u, report

    out = u.copy()
    u_bad = out[:, bad].copy()
    vals_bad = np.ascontiguousarray(vals[:, bad])
    limited = _limit_subset(model, qs, target, mesh.ndim, u_bad, vals_bad, avg[:, bad], eps, report)
    out[:, bad] = limited

    # post-limit minima over the target set (clean cells + reworked cells)
    good = fluid & ~bad
    rho_min_all = [vals_bad[:ns].sum(axis=0).min()]
    sp_min_all = [vals_bad[:ns].min()]
    if good.any():
        rho_min_all.append(c_vals.sum(axis=0).min(axis=-1)[good].min())
        sp_min_all.append(species_min[good].min())
    report.min_rho = float(min(rho_min_all))
    report.min_species = float(min(sp_min_all))
    if model.has_pressure:
        p_all = [model.pressure_raw(vals_bad).min()]
        if good.any():
            p_all.append(p_min[good].min())
        report.min_p = float(min(p_all))
    return out, report
