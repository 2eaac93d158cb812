"""Fast in-process invariant suite behind `mpdg verify`.

A trimmed version of the full acceptance tests: randomized positivity
and conservation of every Patankar stepper, the stage-solve oracle
against a closed-form inverse, the limiter contract, and flux/species
consistency. Each check prints one pass/fail line.
"""

from __future__ import annotations

import numpy as np

from .dg import Mesh, cell_averages, lax_friedrichs_flux
from .integrators import (
    IntegratorKind,
    StageWeights,
    StepHistory,
    mp_stage_solve,
    mpe_step,
    mpms2_step,
    mpms3_step,
    mprk2_step,
    mprk3_step,
)
from .limiter import limit_field, target_values
from .models import OneStepEulerModel
from .pds import PDSSpec
from .quadrature import quadrature_set


def _random_pds(rng, m: int) -> PDSSpec:
    k = rng.uniform(0.0, 2.0, (m, m))
    np.fill_diagonal(k, 0.0)
    expo = rng.integers(1, 3, (m, m)).astype(float)

    def rates(c, k=k, expo=expo, m=m):
        return k * (c[None, :] ** expo)

    return PDSSpec(m, rates)


def _check(name: str, ok: bool, detail: str, verbose: bool) -> int:
    if verbose:
        print(f"[verify] {'PASS' if ok else 'FAIL'}  {name}  ({detail})")
    return 0 if ok else 1


def run_verification(verbose: bool = True, trials: int = 200) -> int:
    rng = np.random.default_rng(20230817)
    failures = 0

    # positivity + conservation of all steppers
    worst_cons = 0.0
    positive = True
    for _ in range(trials):
        m = int(rng.integers(2, 6))
        spec = _random_pds(rng, m)
        hist = StepHistory(max_levels=4)
        for _ in range(4):
            hist.push(rng.uniform(1e-6, 10.0, m))
        sums = [lev.sum() for lev in hist.levels]  # newest first
        c_n = hist.levels[0]
        for dt in (1e-3, 1.0, 1e3):
            outs = {
                "mpe": mpe_step(spec, c_n, dt),
                "mprk2": mprk2_step(spec, c_n, dt),
                "mprk3": mprk3_step(spec, c_n, dt),
                "mpms2": mpms2_step(spec, hist, dt),
                "mpms3": mpms3_step(spec, hist, dt),
            }
            positive &= all(np.all(o > 0.0) for o in outs.values())
            expect = {
                "mpe": sums[0], "mprk2": sums[0], "mprk3": sums[0],
                "mpms2": 0.25 * sums[2] + 0.75 * sums[0],
                "mpms3": 11.0 / 27.0 * sums[3] + 16.0 / 27.0 * sums[0],
            }  # sums[k] = sum of level c^(n-k)
            for name, o in outs.items():
                worst_cons = max(worst_cons, abs(o.sum() - expect[name]) / expect[name])
    failures += _check("unconditional positivity", positive, f"{trials} systems x 3 dts x 5 steppers", verbose)
    failures += _check("conservation", worst_cons <= 1e-12, f"worst rel defect {worst_cons:.2e}", verbose)

    # stage solve vs closed-form 2x2/3x3 inverse
    worst = 0.0
    for _ in range(trials):
        m = int(rng.integers(2, 4))
        wp = rng.uniform(0.0, 3.0, (m, m))
        sigma = rng.uniform(0.1, 5.0, m)
        b = rng.uniform(0.1, 5.0, m)
        dt = float(rng.uniform(0.01, 10.0))
        c = mp_stage_solve(StageWeights(b=b, wp=wp, wd=wp.T, sigma=sigma, dt=dt))
        a = np.eye(m) + dt * np.diag(wp.T.sum(axis=1) / sigma) - dt * wp / sigma[None, :]
        if m == 2:
            det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
            inv = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]]) / det
        else:
            cof = np.array([
                [a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1], a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2], a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]],
                [a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2], a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0], a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]],
                [a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0], a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1], a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]],
            ])
            det = a[0, 0] * cof[0, 0] + a[0, 1] * cof[1, 0] + a[0, 2] * cof[2, 0]
            inv = cof / det
        ref = inv @ b
        worst = max(worst, float(np.abs(c - ref).max() / np.abs(ref).max()))
    failures += _check("stage-solve oracle", worst <= 1e-13, f"worst rel dev {worst:.2e}", verbose)

    # limiter contract on random cells
    model = OneStepEulerModel(ndim=2, with_source=False)
    qs = quadrature_set(2)
    mesh = Mesh(2, 0.0, 1.0, 8, 0.0, 1.0, 8)
    ok_avg = ok_adm = ok_idem = True
    for _ in range(20):
        u = _random_admissible_avg_field(rng, model, qs, mesh)
        avg0 = cell_averages(u, qs)
        lim, _ = limit_field(model, mesh, qs, u, "gauss")
        ok_avg &= bool(np.abs(cell_averages(lim, qs) - avg0).max() <= 1e-13 * (1 + np.abs(avg0).max()))
        vals = target_values(lim, qs, "gauss", 2)
        rho = vals[:2].sum(axis=0)
        ok_adm &= bool(rho.min() >= 0 and vals[:2].min() >= -1e-15 and model.pressure_raw(vals).min() >= -1e-12)
        lim2, rep2 = limit_field(model, mesh, qs, lim, "gauss")
        ok_idem &= bool(np.abs(lim2 - lim).max() == 0.0)
    failures += _check("limiter averages", ok_avg, "20 random fields", verbose)
    failures += _check("limiter admissibility", ok_adm, "rho, fractions, pressure", verbose)
    failures += _check("limiter idempotence", ok_idem, "second pass is a no-op", verbose)

    # flux consistency
    worst = 0.0
    for _ in range(trials):
        s1 = model.from_primitive(*rng.uniform(0.3, 2.0, 2), rng.uniform(-1, 1), rng.uniform(0.2, 3.0), 1.0)
        h = lax_friedrichs_flux(model, s1, s1, (1.0, 0.0), float(rng.uniform(1, 5)))
        fx = model.flux(s1, 0)
        worst = max(worst, float(np.abs(h - fx).max()))
        worst = max(worst, float(abs(h[0] - (h[0] + h[1]))))  # z1=1: species flux == density flux
    failures += _check("flux/species consistency", worst <= 1e-14, f"worst dev {worst:.2e}", verbose)

    if verbose:
        print(f"[verify] {'OK' if failures == 0 else f'{failures} FAILURES'}")
    return failures


def _random_admissible_avg_field(rng, model, qs, mesh) -> np.ndarray:
    la = len(qs.gauss_points)
    u = np.empty((5, mesh.nx, mesh.ny, la, la))
    w = qs.gauss_weights
    for i in range(mesh.nx):
        for j in range(mesh.ny):
            rho = rng.uniform(0.5, 2.0)
            yf = rng.uniform(0.0, 1.0)
            base = model.from_primitive(rho, *rng.uniform(-1, 1, 2), rng.uniform(0.5, 3.0), yf)
            pert = rng.uniform(-1.0, 1.0, (5, la, la)) * np.array([rho, rho, rho, rho, 2.0])[:, None, None]
            cell = base[:, None, None] + pert
            mean = np.einsum("vab,a,b->v", pert, w, w)
            u[:, i, j] = cell - mean[:, None, None]
    return u
