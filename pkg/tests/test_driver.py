import numpy as np
import pytest

from mpdg.cases import CaseSpec, build_pde_case
from mpdg.dg import BoundarySide, BoundarySpec, Mesh, cell_averages, project_pointwise
from mpdg.driver import SchemeConfig, advance_step, march, new_run
from mpdg.errors import AdmissibilityError, ConfigurationError
from mpdg.models import OneStepEulerModel
from mpdg.quadrature import quadrature_set


def small_detonation_setup(nx=12, integrator="mpms2", **cfg_kw):
    model = OneStepEulerModel(ndim=2, with_source=True)

    def init(x, y):
        inside = x**2 + y**2 <= 0.36
        p = np.where(inside, 80.0, 1e-9)
        yf = np.where(inside, 0.0, 1.0)
        rho = np.ones_like(x)
        e = p / (model.gamma - 1) + rho * model.mechanism.heat_release * yf
        z = np.zeros_like(x)
        return np.stack([rho * yf, rho * (1 - yf), z, z, e])

    mesh = Mesh(2, 0.0, 2.0, nx, 0.0, 2.0, nx)
    qs = quadrature_set(1)
    u0 = project_pointwise(init, mesh, qs, 5, 2)
    bc = BoundarySpec(
        BoundarySide("reflective"), BoundarySide("outflow"),
        BoundarySide("reflective"), BoundarySide("outflow"),
    )
    cfg = SchemeConfig(integrator=integrator, degree=1, **cfg_kw)
    return model, mesh, bc, cfg, u0


def test_quiescent_state_is_fixed_point():
    model = OneStepEulerModel(ndim=2, with_source=True)
    state = model.from_primitive(1.0, 0.0, 0.0, 1e-9, 1.0)  # cold: zero rates
    mesh = Mesh(2, 0.0, 1.0, 4, 0.0, 1.0, 4)
    u0 = np.broadcast_to(state.reshape(5, 1, 1, 1, 1), (5, 4, 4, 2, 2)).copy()
    bc = BoundarySpec(*[BoundarySide("reflective")] * 4)
    run = new_run(model, mesh, bc, SchemeConfig(integrator="mpms2", degree=1), u0)
    march(run, 1e-3)
    assert np.abs(run.u - u0).max() < 1e-15


@pytest.mark.parametrize("integrator", ["mpe", "mprk2", "mpms2", "mpms3"])
def test_bound_invariants_on_detonation_start(integrator):
    model, mesh, bc, cfg, u0 = small_detonation_setup(integrator=integrator)
    run = new_run(model, mesh, bc, cfg, u0)
    march(run, 0.01)
    recs = [r for r in run.records if np.isfinite(r.min_rho)]
    assert recs, "run produced no monitored steps"
    assert min(r.min_rho for r in recs) > 0.0
    assert min(r.min_p for r in recs) >= -1e-12
    assert max(r.max_fraction_err for r in recs) <= 1e-11


def test_negative_control_limiter_disabled_aborts():
    model, mesh, bc, cfg, u0 = small_detonation_setup(nx=20, limiter_enabled=False)
    run = new_run(model, mesh, bc, cfg, u0)
    with pytest.raises(AdmissibilityError):
        march(run, 0.02)


def test_species_sum_stays_equal_to_density_2d_advection():
    # two-species contact moving through a periodic box with the
    # redundant density slot evolved separately: the identity
    # sum(c_i) = rho must hold to round-off across the run
    model = OneStepEulerModel(ndim=2, with_source=False, extra_density_slot=True)

    def init(x, y):
        rho = 1.0 + 0.5 * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
        yf = 0.25 + 0.5 * (np.cos(2 * np.pi * (x + y)) * 0.5 + 0.5)
        p = np.full_like(x, 2.0)
        e = p / 0.2 + 0.5 * rho * 2.0 + rho * 50.0 * yf
        return np.stack([rho * yf, rho * (1 - yf), rho, rho, e, rho])

    mesh = Mesh(2, 0.0, 1.0, 8, 0.0, 1.0, 8)
    qs = quadrature_set(1)
    u0 = project_pointwise(init, mesh, qs, 6, 2)
    run = new_run(model, mesh, BoundarySpec(), SchemeConfig(integrator="mpms2", degree=1), u0)
    for _ in range(100):
        advance_step(run, 10.0)
    rho_slot = run.u[5]
    rho_sum = run.u[:2].sum(axis=0)
    assert np.abs(rho_slot - rho_sum).max() <= 1e-11 * np.abs(rho_slot).max()
    z = run.u[:2] / rho_sum[None]
    assert z.min() >= -1e-12 and z.max() <= 1.0 + 1e-12


def test_reflective_ghost_mirrors_normal_momentum():
    from mpdg.dg import ghost_trace

    model = OneStepEulerModel(ndim=2, with_source=False)
    trace = np.array([0.3, 0.7, 2.0, 3.0, 9.0]).reshape(5, 1, 1)
    ghost = ghost_trace(model, BoundarySide("reflective"), trace, trace, 0)
    assert np.allclose(ghost[:, 0, 0], [0.3, 0.7, -2.0, 3.0, 9.0])
    ghost = ghost_trace(model, BoundarySide("reflective"), trace, trace, 1)
    assert np.allclose(ghost[:, 0, 0], [0.3, 0.7, 2.0, -3.0, 9.0])
    out = ghost_trace(model, BoundarySide("outflow"), trace, trace, 0)
    assert np.array_equal(out, trace)


def test_dirichlet_ghost_is_the_diffraction_inflow_state():
    spec = CaseSpec("euler2d-diffraction", {"nx": 24, "ny": 24})
    case = build_pde_case(spec)
    state = case.bc.left.state
    # (rho, u, v, E, Y) = (11, 6.18, 0, 970, 1) in conserved variables
    assert state[0] == pytest.approx(11.0)      # rho Y
    assert state[1] == pytest.approx(0.0)       # rho Z
    assert state[2] == pytest.approx(11.0 * 6.18)
    assert state[3] == pytest.approx(0.0)
    assert state[4] == pytest.approx(970.0)


def test_solid_mask_blocks_and_freezes_cells():
    spec = CaseSpec("euler2d-diffraction", {"nx": 24, "ny": 24, "t_final": 0.02})
    case = build_pde_case(spec)
    solid = case.mesh.solid
    assert solid is not None and solid.any()
    run = new_run(case.model, case.mesh, case.bc, case.config, case.u0)
    frozen_before = run.u[:, solid].copy()
    march(run, 0.01)
    assert np.array_equal(run.u[:, solid], frozen_before)
    recs = [r for r in run.records if np.isfinite(r.min_rho)]
    assert min(r.min_rho for r in recs) > 0.0


def test_mass_conservation_periodic_with_source():
    # the source moves mass between species only; totals are conserved
    model = OneStepEulerModel(ndim=2, with_source=True)

    def init(x, y):
        rho = np.ones_like(x)
        yf = 0.5 + 0.4 * np.sin(2 * np.pi * x)
        p = np.full_like(x, 5.0)
        e = p / 0.2 + rho * 50.0 * yf
        z = np.zeros_like(x)
        return np.stack([rho * yf, rho * (1 - yf), z, z, e])

    mesh = Mesh(2, 0.0, 1.0, 6, 0.0, 1.0, 6)
    qs = quadrature_set(1)
    u0 = project_pointwise(init, mesh, qs, 5, 2)
    run = new_run(model, mesh, BoundarySpec(), SchemeConfig(integrator="mpms2", degree=1), u0)
    vol = mesh.cell_volume
    tot0 = cell_averages(run.u, qs).sum(axis=(1, 2)) * vol
    hist_totals = [tot0]
    for _ in range(40):
        advance_step(run, 10.0)
        hist_totals.append(cell_averages(run.u, qs).sum(axis=(1, 2)) * vol)
    tot = hist_totals[-1]
    rho0 = tot0[0] + tot0[1]
    rho1 = tot[0] + tot[1]
    assert abs(rho1 - rho0) <= 1e-10 * rho0            # total mass
    assert abs(tot[4] - tot0[4]) <= 1e-10 * abs(tot0[4])  # total energy
    assert tot[0] < tot0[0]                             # reactant burned


def test_config_validation():
    with pytest.raises(ConfigurationError):
        SchemeConfig(integrator="mprk3")
    with pytest.raises(ConfigurationError):
        SchemeConfig(integrator="mprk2", mprk2_alpha=0.0)
    with pytest.raises(ConfigurationError):
        SchemeConfig(integrator="mpms2", cfl_safety=1.5)


def test_shortened_final_step_lands_exactly():
    model, mesh, bc, cfg, u0 = small_detonation_setup(nx=8)
    run = new_run(model, mesh, bc, cfg, u0)
    march(run, 3.3e-4)
    assert run.t == pytest.approx(3.3e-4, abs=1e-18)
