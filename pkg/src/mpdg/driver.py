"""Time-stepping driver for the bound-preserving DG + Patankar scheme.

One step of the multistep flavor runs the five-stage pipeline:

  1. explicit convection update by the convex multistep combination,
     e.g. U* = 1/4 U^(n-2) + 3/4 U^n + 3/2 dt F(U^n);
  2. limiter at the tensor Gauss points (the Patankar stage needs
     admissible point values there);
  3. pointwise Patankar solve of the species source at every Gauss
     node; momentum and energy have no source and pass through;
  4. limiter at the interface point sets (the next convection step
     needs admissible traces);
  5. history rotation.

The single-step integrators (Patankar Euler and the two-stage RK) run
stages 1-4 per RK stage. Residuals are cached per history level with
the global wave speed current at that level's time, so the four-step
scheme reuses F(U^(n-3)) without re-evaluation.

Time step policy: dt = safety * fraction * cfl(alpha), with fraction
1/2 for the two-step scheme, 1/3 for the four-step one and the
stagewise convex-decomposition bound for the RK variants, recomputed
every step from the global alpha. Multistep stencils need uniform
spacing, so when alpha grows enough to shrink the bound below the
current dt, the step size drops and the history is re-bootstrapped
(logged). Bound violations detected a posteriori abort the run; nothing
is clamped.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .dg import (
    BoundarySpec,
    Mesh,
    cfl_dt,
    convection_residual,
    face_traces,
    global_wave_speed,
)
from .errors import AdmissibilityError, ConfigurationError
from .integrators import mp_stage_solve_batched, sigma_ms2, sigma_ms3, validate_mprk2_parameters
from .limiter import LimiterReport, limit_field, target_values
from .quadrature import QuadratureSet, quadrature_set

_PDE_INTEGRATORS = ("mpe", "mprk2", "mpms2", "mpms3")


@dataclass
class SchemeConfig:
    """Scheme knobs for a PDE run."""

    integrator: str = "mpms2"
    degree: int = 1
    sigma_s: float = 1.5  # mpms2 exponent; mpms3 maps its own default below
    sigma_s3: float = 2.0
    mprk2_alpha: float = 0.5
    mprk2_beta: float = 1.0
    cfl_safety: float = 0.9
    limiter_eps: float = 1e-13
    max_dt: float | None = None
    limiter_enabled: bool = True  # force-disable only as a negative control

    def __post_init__(self) -> None:
        if self.integrator not in _PDE_INTEGRATORS:
            raise ConfigurationError(
                f"PDE integrator must be one of {_PDE_INTEGRATORS}, got {self.integrator!r}"
            )
        if self.integrator == "mprk2":
            validate_mprk2_parameters(self.mprk2_alpha, self.mprk2_beta)
            if self.mprk2_alpha == 0.0:
                raise ConfigurationError(
                    "mprk2 with alpha=0 has no convex flux decomposition; use alpha in (0, 1)"
                )
        if not 0 < self.cfl_safety <= 1:
            raise ConfigurationError("cfl_safety must lie in (0, 1]")

    @property
    def history_depth(self) -> int:
        return {"mpe": 1, "mprk2": 1, "mpms2": 3, "mpms3": 4}[self.integrator]

    @property
    def step_fraction(self) -> float:
        """Fraction of the forward-Euler CFL step the scheme may take."""
        if self.integrator == "mpms2":
            return 0.5
        if self.integrator == "mpms3":
            return 1.0 / 3.0
        if self.integrator == "mprk2":
            a, b = self.mprk2_alpha, self.mprk2_beta
            b20 = 1.0 - 0.5 / b - a * b
            bounds = [1.0 / b, a / (0.5 / b)]
            if b20 > 0.0 and a < 1.0:
                bounds.append((1.0 - a) / b20)
            return min(bounds)
        return 1.0


@dataclass
class _Level:
    u: np.ndarray
    resid: np.ndarray | None = None
    alpha: float = 0.0


@dataclass
class StepRecord:
    step: int
    t: float
    dt: float
    alpha: float
    min_rho: float
    min_p: float
    max_fraction_err: float
    limiter_gauss: LimiterReport | None
    limiter_interface: LimiterReport | None
    rebootstrapped: bool = False


@dataclass
class RunState:
    model: object
    mesh: Mesh
    bc: BoundarySpec
    config: SchemeConfig
    qs: QuadratureSet = None
    levels: list = field(default_factory=list)  # newest first
    t: float = 0.0
    step_index: int = 0
    dt: float = 0.0
    records: list = field(default_factory=list)
    _margin: float = 0.85
    _last_reboot: int = -100

    def __post_init__(self) -> None:
        if self.qs is None:
            self.qs = quadrature_set(self.config.degree)

    @property
    def u(self) -> np.ndarray:
        return self.levels[0].u


def new_run(model, mesh: Mesh, bc: BoundarySpec, config: SchemeConfig, u0: np.ndarray) -> RunState:
    run = RunState(model=model, mesh=mesh, bc=bc, config=config)
    u0 = np.array(u0, dtype=float)
    if config.limiter_enabled:
        u0, _ = limit_field(model, mesh, run.qs, u0, "gauss", config.limiter_eps)
        u0, _ = limit_field(model, mesh, run.qs, u0, "interface", config.limiter_eps)
    run.levels = [_Level(u=u0)]
    return run


# ---------------------------------------------------------------------------
# pieces
# ---------------------------------------------------------------------------


def _ensure_resid(run: RunState, level: _Level) -> None:
    if level.resid is None:
        traces = face_traces(level.u, run.qs, run.mesh.ndim)
        level.alpha = global_wave_speed(run.model, run.mesh, run.qs, level.u, traces)
        level.resid = convection_residual(
            run.model, run.mesh, run.qs, level.u, run.bc, level.alpha, traces
        )


def _limit(run: RunState, u: np.ndarray, target: str) -> tuple[np.ndarray, LimiterReport | None]:
    if not run.config.limiter_enabled:
        return u, None
    return limit_field(run.model, run.mesh, run.qs, u, target, run.config.limiter_eps)


def _species_nodes(model, u: np.ndarray) -> np.ndarray:
    """(N, M) species values over flattened nodes."""
    ns = model.nspecies
    return u[:ns].reshape(ns, -1).T


def _floor_roundoff(values: np.ndarray, scale: np.ndarray) -> np.ndarray:
    """Clamp limiter round-off (magnitude below 1e-12 of the local
    density scale) to zero; anything more negative is a real violation."""
    tol = 1e-12 * np.maximum(scale, 1e-300)
    if np.any(values < -tol[:, None]):
        raise AdmissibilityError("negative species value beyond round-off entering source step")
    return np.maximum(values, 0.0)


def _patankar_nodes(
    run: RunState,
    u_stage: np.ndarray,
    weights: np.ndarray,
    sigma: np.ndarray,
    dt: float,
) -> np.ndarray:
    """Solve the Patankar source stage at every node; returns the field
    with updated species and untouched momentum/energy.

    Zero species values are legitimate here (burnt/unburnt regions, a
    limiter landing exactly on zero), so a denominator that degenerates
    while its weights are nonzero (a species that vanished within the
    stencil but reacted at an older level) falls back to the local
    density scale: positivity and conservation hold for any positive
    sigma, and such nodes are first-order locally no matter what.
    """
    model = run.model
    ns = model.nspecies
    b = _species_nodes(model, u_stage)
    b = _floor_roundoff(b, b.sum(axis=1))
    needed = (weights > 0.0).any(axis=-2) | (np.swapaxes(weights, -1, -2) > 0.0).any(axis=-1)
    degenerate = needed & ~(sigma > 0.0)
    if degenerate.any():
        rho = b.sum(axis=1, keepdims=True)
        scale = np.broadcast_to(np.where(rho > 0.0, rho, 1.0), sigma.shape)
        sigma = np.where(degenerate, scale, sigma)
    out = u_stage.copy()
    solved = mp_stage_solve_batched(b, weights, np.swapaxes(weights, -1, -2), sigma, dt)
    out[:ns] = solved.T.reshape(u_stage[:ns].shape)
    if run.mesh.solid is not None:
        out[:, run.mesh.solid] = u_stage[:, run.mesh.solid]
    return out


def _node_rates(run: RunState, level: _Level) -> np.ndarray:
    """(N, M, M) production matrices at a history level's nodal states."""
    rates = run.model.production_rates(level.u)
    m = run.model.nspecies
    if run.mesh.solid is not None:
        rates[run.mesh.solid] = 0.0
    return rates.reshape(-1, m, m)


def _monitor(run: RunState, rec: StepRecord) -> None:
    """Bound-preservation monitor over the full point set S_K; aborts on a
    violation beyond round-off instead of clamping.

    The Gauss tensor nodes are the nodal values themselves (checked
    directly); the interface-set minima come from the final limiter
    pass, which evaluated exactly those points. When no limiter report
    exists (limiter disabled, bootstrap records) the interface set is
    evaluated explicitly.
    """
    model, qs = run.model, run.qs
    u = run.u
    fluid = run.mesh.fluid_mask()
    ns = model.nspecies

    sp = u[:ns][:, fluid]
    rho = sp.sum(axis=0)
    min_rho = float(rho.min())
    min_sp = float(sp.min())
    min_p = float(model.pressure_raw(u)[fluid].min()) if model.has_pressure else np.nan
    with np.errstate(invalid="ignore", divide="ignore"):
        z = sp / rho[None]
    max_frac = float(np.abs(z.sum(axis=0) - 1.0).max())

    rep_i = rec.limiter_interface
    if rep_i is not None and np.isfinite(rep_i.min_rho):
        min_rho = min(min_rho, rep_i.min_rho)
        min_sp = min(min_sp, rep_i.min_species)
        if model.has_pressure:
            min_p = min(min_p, rep_i.min_p)
    else:
        vals = target_values(u, qs, "interface", run.mesh.ndim)
        rho_i = vals[:ns].sum(axis=0)
        min_rho = min(min_rho, float(rho_i[fluid].min()))
        min_sp = min(min_sp, float(vals[:ns][:, fluid].min()))
        if model.has_pressure:
            min_p = min(min_p, float(model.pressure_raw(vals)[fluid].min()))

    scale = max(1.0, abs(min_p)) if model.has_pressure else 1.0
    if min_sp < -1e-11 * max(1.0, min_rho):
        raise AdmissibilityError(f"step {rec.step}: species density went negative ({min_sp:.3e})")
    if min_rho < -1e-13 or (model.has_pressure and min_p < -1e-11 * scale):
        raise AdmissibilityError(
            f"step {rec.step}: bound violation: min rho={min_rho:.3e}, min p={min_p:.3e}"
        )
    if max_frac > 1e-11:
        raise AdmissibilityError(f"step {rec.step}: fraction sum drifted by {max_frac:.3e}")
    rec.min_rho = min_rho
    rec.min_p = min_p
    rec.max_fraction_err = max_frac


# ---------------------------------------------------------------------------
# single steps
# ---------------------------------------------------------------------------


def _step_mpe(run: RunState, dt: float) -> np.ndarray:
    lev = run.levels[0]
    _ensure_resid(run, lev)
    v = lev.u + dt * lev.resid
    v, rep_g = _limit(run, v, "gauss")
    if run.model.has_source:
        sigma = _species_nodes(run.model, lev.u)
        v = _patankar_nodes(run, v, _node_rates(run, lev), sigma, dt)
    v, rep_i = _limit(run, v, "interface")
    run._last_reports = (rep_g, rep_i)
    return v


def _step_mprk2(run: RunState, dt: float) -> np.ndarray:
    cfg = run.config
    a, bpar = cfg.mprk2_alpha, cfg.mprk2_beta
    b20 = 1.0 - 0.5 / bpar - a * bpar
    b21 = 0.5 / bpar
    s_exp = (1.0 - a * bpar + a * bpar**2) / (bpar * (1.0 - a * bpar))
    lev = run.levels[0]
    _ensure_resid(run, lev)

    v = lev.u + bpar * dt * lev.resid
    v, rep_g = _limit(run, v, "gauss")
    if run.model.has_source:
        rates0 = _node_rates(run, lev)
        v = _patankar_nodes(run, v, bpar * rates0, _species_nodes(run.model, lev.u), dt)
    v, _ = _limit(run, v, "interface")
    stage1 = _Level(u=v)
    _ensure_resid(run, stage1)

    v = (1.0 - a) * lev.u + a * stage1.u + dt * (b20 * lev.resid + b21 * stage1.resid)
    v, rep_g2 = _limit(run, v, "gauss")
    if run.model.has_source:
        c0 = _species_nodes(run.model, lev.u)
        c1 = _species_nodes(run.model, stage1.u)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sigma = c1**s_exp * c0 ** (1.0 - s_exp)
        w = b20 * _node_rates(run, lev) + b21 * _node_rates(run, stage1)
        v = _patankar_nodes(run, v, w, sigma, dt)
    v, rep_i = _limit(run, v, "interface")
    run._last_reports = (rep_g2, rep_i)
    return v


def _step_mpms2(run: RunState, dt: float) -> np.ndarray:
    s = run.config.sigma_s
    lev_n, lev_m1, lev_m2 = run.levels[0], run.levels[1], run.levels[2]
    _ensure_resid(run, lev_n)
    v = 0.25 * lev_m2.u + 0.75 * lev_n.u + 1.5 * dt * lev_n.resid
    v, rep_g = _limit(run, v, "gauss")
    if run.model.has_source:
        c_n = _species_nodes(run.model, lev_n.u)
        c_m1 = _species_nodes(run.model, lev_m1.u)
        c_m2 = _species_nodes(run.model, lev_m2.u)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sigma = sigma_ms2(c_n, c_m1, c_m2, s)
        v = _patankar_nodes(run, v, 1.5 * _node_rates(run, lev_n), sigma, dt)
    v, rep_i = _limit(run, v, "interface")
    run._last_reports = (rep_g, rep_i)
    return v


def _step_mpms3(run: RunState, dt: float) -> np.ndarray:
    s = run.config.sigma_s3
    lev_n, lev_m1, lev_m2, lev_m3 = run.levels[:4]
    _ensure_resid(run, lev_n)
    _ensure_resid(run, lev_m3)
    v = (11.0 / 27.0) * lev_m3.u + (16.0 / 27.0) * lev_n.u + dt * (
        (4.0 / 9.0) * lev_m3.resid + (16.0 / 9.0) * lev_n.resid
    )
    v, rep_g = _limit(run, v, "gauss")
    if run.model.has_source:
        c_n = _species_nodes(run.model, lev_n.u)
        c_m1 = _species_nodes(run.model, lev_m1.u)
        c_m2 = _species_nodes(run.model, lev_m2.u)
        c_m3 = _species_nodes(run.model, lev_m3.u)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            sigma = sigma_ms3(c_n, c_m1, c_m2, c_m3, s)
        w = (4.0 / 9.0) * _node_rates(run, lev_m3) + (16.0 / 9.0) * _node_rates(run, lev_n)
        v = _patankar_nodes(run, v, w, sigma, dt)
    v, rep_i = _limit(run, v, "interface")
    run._last_reports = (rep_g, rep_i)
    return v


_STEPPERS: dict[str, Callable] = {
    "mpe": _step_mpe,
    "mprk2": _step_mprk2,
    "mpms2": _step_mpms2,
    "mpms3": _step_mpms3,
}


# ---------------------------------------------------------------------------
# driving
# ---------------------------------------------------------------------------


def _dt_bound(run: RunState, alpha: float) -> float:
    cfg = run.config
    if alpha <= 0.0 and cfg.max_dt is not None:
        return cfg.max_dt
    dt = cfg.step_fraction * cfl_dt(alpha, run.mesh, run.qs.first_lobatto_weight, cfg.cfl_safety)
    if cfg.max_dt is not None:
        dt = min(dt, cfg.max_dt)
    return dt


class _RetryBootstrap(Exception):
    def __init__(self, bound: float) -> None:
        self.bound = bound


def _bootstrap(run: RunState) -> None:
    """Fill the multistep history with MPRK2 steps at the current dt.

    Each substep is checked against both the RK bound and the parent
    scheme's bound at its own wave speed; a violation aborts the
    attempt so the caller can retry at the reported smaller dt. Time
    advances only on success.
    """
    depth = run.config.history_depth
    rk_cfg = replace(run.config, integrator="mprk2")
    sub = RunState(model=run.model, mesh=run.mesh, bc=run.bc, config=rk_cfg, qs=run.qs)
    sub.levels = [run.levels[0]]
    for _ in range(depth - 1):
        _ensure_resid(sub, sub.levels[0])
        bound = min(_dt_bound(sub, sub.levels[0].alpha), _dt_bound(run, sub.levels[0].alpha))
        if run.dt > bound * (1.0 + 1e-12):
            raise _RetryBootstrap(bound)
        u_new = _step_mprk2(sub, run.dt)
        sub.levels.insert(0, _Level(u=u_new))
    run.levels = sub.levels[:depth]
    run.t += (depth - 1) * run.dt
    run.step_index += depth - 1


def advance_step(run: RunState, t_end: float) -> StepRecord:
    """Advance one step (shortened at t_end); appends and returns a record."""
    cfg = run.config
    lev = run.levels[0]
    _ensure_resid(run, lev)
    bound = _dt_bound(run, lev.alpha)

    rebooted = False
    if cfg.history_depth == 1:
        run.dt = bound
    elif run.dt == 0.0 or run.dt > bound * (1.0 + 1e-12) or run.dt < bound * run._margin / 2.5:
        # shrink when alpha grew; regrow when it relaxed. Either way the
        # multistep stencil needs a uniform respacing, so leave margin
        # below the bound to absorb further alpha growth without
        # rebootstrapping every step. The margin widens while reboots
        # are frequent (fronts entering near-vacuum cells spike alpha)
        # and relaxes back once the wave speeds settle.
        if run.step_index - run._last_reboot < 12:
            run._margin = max(0.35, 0.8 * run._margin)
        else:
            run._margin = min(0.85, 1.15 * run._margin)
        run._last_reboot = run.step_index
        run.dt = run._margin * bound
        run.levels = [run.levels[0]]
        rebooted = True

    needs_history = cfg.history_depth > 1 and len(run.levels) < cfg.history_depth
    remaining = t_end - run.t
    if needs_history and remaining > (cfg.history_depth - 0.5) * run.dt:
        for _ in range(12):
            try:
                base = run.levels[0]
                run.levels = [base]
                _bootstrap(run)
                break
            except _RetryBootstrap as retry:
                # contract below the reported bound: alpha keeps growing
                # while the startup levels are laid down
                run.dt = 0.75 * retry.bound
        else:
            raise ConfigurationError("bootstrap failed to find a stable dt")
        rec = StepRecord(run.step_index, run.t, run.dt, run.levels[0].alpha,
                         np.nan, np.nan, np.nan, None, None, True)
        _monitor(run, rec)
        run.records.append(rec)
        return rec

    dt = min(run.dt, remaining)
    if needs_history:
        # horizon too short for the stencil: finish with RK steps
        u_new = _step_mprk2(run, dt)
        keep = 1
    else:
        u_new = _STEPPERS[cfg.integrator](run, dt)
        keep = cfg.history_depth
    run.levels.insert(0, _Level(u=u_new))
    del run.levels[max(keep, 1):]
    run.t += dt
    run.step_index += 1

    rep_g, rep_i = getattr(run, "_last_reports", (None, None))
    rec = StepRecord(run.step_index, run.t, dt, lev.alpha, np.nan, np.nan, np.nan,
                     rep_g, rep_i, rebooted)
    _monitor(run, rec)
    run.records.append(rec)
    return rec


def march(run: RunState, t_end: float, callback=None, max_steps: int = 10**7) -> RunState:
    """March to t_end with per-step monitoring; callback(run, record)."""
    while run.t < t_end * (1.0 - 1e-14) and run.step_index < max_steps:
        rec = advance_step(run, t_end)
        if callback is not None:
            callback(run, rec)
    return run
