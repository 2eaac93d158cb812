"""Convergence studies and the sigma-exponent sweep for the ODE cases.

Errors are max-abs over components at the final time. The linear case
is measured against its closed-form solution; the nonlinear case
against a fine-step third-order MP RK reference (the step ratio is the
case's `reference_refinement`, 100 by default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cases import (
    CaseSpec,
    linear_exchange_exact,
    linear_exchange_pds,
    nonlinear_convection,
    nonlinear_pds,
)
from .errors import ConfigurationError, MPDGError
from .integrators import IntegratorKind, integrate, mpms2_step, mpms3_step, StepHistory


@dataclass
class ConvergenceRow:
    dt: float
    error: float
    order: float | None  # None on the first row


@dataclass
class ConvergenceTable:
    scheme: str
    rows: list
    monotone: bool

    def orders(self) -> list:
        return [r.order for r in self.rows if r.order is not None]


def _ode_problem(spec: CaseSpec):
    p = spec.params
    if spec.case_id == "ode-linear":
        pds = linear_exchange_pds(p["a"])
        exact = lambda t: linear_exchange_exact(p["a"], p["c0"], t)
        return pds, np.asarray(p["c0"], dtype=float), None, exact
    if spec.case_id == "ode-nonlinear":
        pds = nonlinear_pds(p["a"])
        conv = nonlinear_convection if p["with_convection"] else None
        return pds, np.asarray(p["c0"], dtype=float), conv, None
    raise ConfigurationError(f"{spec.case_id} is not an ODE case")


def _reference_solution(spec: CaseSpec, dt_min: float) -> np.ndarray:
    p = spec.params
    pds, c0, conv, _ = _ode_problem(spec)
    dt_ref = dt_min / p.get("reference_refinement", 100)
    _, states = integrate(pds, c0, dt_ref, p["t_final"], IntegratorKind("mprk3"), convection=conv)
    return states[-1]


def convergence_study(spec: CaseSpec, scheme: str, ladder: list | None = None) -> ConvergenceTable:
    """Error/order table over a dt ladder (halved steps by default)."""
    p = spec.params
    pds, c0, conv, exact = _ode_problem(spec)
    if ladder is None:
        ladder = [1.0 / n for n in (20, 40, 80, 160, 320)]
    kind = _kind_for(spec, scheme)
    if exact is not None:
        target = exact(p["t_final"])
    else:
        target = _reference_solution(spec, min(ladder))

    rows = []
    prev = None
    for dt in ladder:
        _, states = integrate(
            pds, c0, dt, p["t_final"], kind,
            convection=conv, bootstrap_substeps=p.get("bootstrap_substeps", 16),
        )
        err = float(np.abs(states[-1] - target).max())
        order = None
        if prev is not None:
            ratio = prev[0] / dt
            order = float(np.log(prev[1] / err) / np.log(ratio)) if err > 0 else None
        rows.append(ConvergenceRow(dt=dt, error=err, order=order))
        prev = (dt, err)
    errors = [r.error for r in rows]
    monotone = all(errors[i] > errors[i + 1] for i in range(len(errors) - 1))
    return ConvergenceTable(scheme=scheme, rows=rows, monotone=monotone)


def _kind_for(spec: CaseSpec, scheme: str) -> IntegratorKind:
    p = spec.params
    s = {"mpms2": p.get("mpms2_s", 1.5), "mpms3": p.get("mpms3_s", 2.0)}.get(scheme, 1.5)
    return IntegratorKind(scheme, s=s)


def sigma_sweep(spec: CaseSpec, scheme: str, s_values=None, dt: float | None = None) -> list:
    """Fixed-step error as a function of the sigma exponent s.

    Returns rows of (s, error, conserved_ok). The companion exponents
    follow from s by the scheme's order conditions.
    """
    if scheme not in ("mpms2", "mpms3"):
        raise ConfigurationError("sigma sweep applies to the multistep schemes")
    p = spec.params
    pds, c0, conv, exact = _ode_problem(spec)
    if s_values is None:
        s_values = list(range(-1, 6))
    dt = dt or p["dt"]
    if exact is not None:
        target = exact(p["t_final"])
    else:
        target = _reference_solution(spec, dt)

    rows = []
    for s in s_values:
        try:
            _, states = integrate(
                pds, c0, dt, p["t_final"], IntegratorKind(scheme, s=float(s)),
                convection=conv, bootstrap_substeps=p.get("bootstrap_substeps", 16),
            )
        except MPDGError:
            # extreme exponents can make sigma so inconsistent that the
            # (still positive) iterates underflow; report the divergence
            # as a sweep outcome instead of aborting the table
            rows.append({"s": float(s), "error": float("nan"), "positive": False, "conserved": False})
            continue
        final = states[-1]
        err = float(np.abs(final - target).max())
        conserved = True
        if conv is None:
            conserved = bool(abs(final.sum() - np.asarray(c0).sum()) <= 1e-11 * np.asarray(c0).sum())
        rows.append({"s": float(s), "error": err, "positive": bool((final > 0).all()), "conserved": conserved})
    return rows


def sigma_accuracy_slope(spec: CaseSpec, scheme: str, t0: float = 0.3, ladder=None) -> float:
    """Richardson slope of |sigma - c^(n+1)| vs dt for one step seeded
    from the exact solution; the sufficient conditions predict slopes of
    2 (two-step scheme) and 3 (four-step scheme)."""
    if spec.case_id != "ode-linear":
        raise ConfigurationError("the slope check needs the closed-form case")
    p = spec.params
    pds, c0, _, exact = _ode_problem(spec)
    stepper = mpms2_step if scheme == "mpms2" else mpms3_step
    depth = 3 if scheme == "mpms2" else 4
    s = p["mpms2_s"] if scheme == "mpms2" else p["mpms3_s"]
    if ladder is None:
        ladder = [1.0 / n for n in (40, 80, 160, 320, 640)]
    devs = []
    for dt in ladder:
        hist = StepHistory(max_levels=depth)
        for k in range(depth - 1, -1, -1):
            hist.push(exact(t0 - k * dt))
        c_next, sigma = stepper(pds, hist, dt, s=s, with_sigma=True)
        devs.append(float(np.abs(sigma - c_next).max()))
    slope = np.polyfit(np.log(ladder), np.log(devs), 1)[0]
    return float(slope)
