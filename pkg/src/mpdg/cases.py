"""Built-in case registry.

Five cases, each with the defaults pinned to the values the solver kit
reproduces:

  ode-linear          2-species linear exchange with closed-form solution
  ode-nonlinear       3-species nonlinear system with extra explicit
                      convection terms (no closed form; fine-step
                      third-order MP RK reference)
  euler1d-3species    oxygen dissociation shock tube, general EOS
  euler2d-convergence circular burnt/unburnt front, one-step kinetics
  euler2d-diffraction detonation wave diffracting around a corner

Every physical parameter is a named key in the case config so the
ambiguous readings (e.g. the diffraction right-state energy) are
user-visible knobs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dg import BoundarySide, BoundarySpec, Mesh, project_pointwise
from .driver import SchemeConfig
from .errors import ConfigurationError
from .integrators import IntegratorKind
from .models import OneStepEulerModel, ThreeSpeciesEulerModel
from .pds import PDSSpec
from .quadrature import quadrature_set

CASE_IDS = (
    "ode-linear",
    "ode-nonlinear",
    "euler1d-3species",
    "euler2d-convergence",
    "euler2d-diffraction",
)


@dataclass
class CaseSpec:
    """A case id plus parameter overrides (flat key -> value)."""

    case_id: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.case_id not in CASE_IDS:
            raise ConfigurationError(f"unknown case {self.case_id!r}; choose from {CASE_IDS}")
        defaults = case_defaults(self.case_id)
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ConfigurationError(f"unknown parameter(s) {sorted(unknown)} for case {self.case_id}")
        merged = dict(defaults)
        merged.update(self.params)
        self.params = merged


def case_defaults(case_id: str) -> dict:
    if case_id == "ode-linear":
        return {
            "a": 2.7,
            "c0": [4.5, 3.2],
            "t_final": 1.0,
            "dt": 1.0 / 80.0,
            "integrator": "mpms2",
            # sigma exponents that reproduce the published accuracy
            # tables; the order is s-independent
            "mpms2_s": 0.0,
            "mpms3_s": 8.0 / 3.0,
            "bootstrap_substeps": 16,
        }
    if case_id == "ode-nonlinear":
        return {
            "a": 1.0,
            "c0": [9.98, 0.01, 0.01],
            "t_final": 1.0,
            "dt": 1.0 / 80.0,
            "with_convection": True,
            "integrator": "mpms2",
            "mpms2_s": 0.0,
            "mpms3_s": 8.0 / 3.0,
            "bootstrap_substeps": 16,
            "reference_refinement": 100,
        }
    if case_id == "euler1d-3species":
        return {
            # domain sized so the right-running shock stays interior
            # over the run horizon
            "x0": 0.0,
            "x1": 2.0,
            "diaphragm": 0.5,
            "nx": 200,
            "degree": 1,
            "t_final": 1.0e-4,
            "integrator": "mpms2",
            "rho_left": [5.251896311257204e-5, 3.748071704863518e-5, 2.962489471973072e-4],
            "rho_right": [8.341661837019181e-8, 9.455418692098664e-11, 2.748909430004963e-7],
            "p_left": 1000.0,
            "p_right": 1.0,
            "u_left": 0.0,
            "u_right": 0.0,
            "cfl_safety": 0.9,
            "sigma_s": 1.5,
            "sigma_s3": 2.0,
            "limiter_enabled": True,
        }
    if case_id == "euler2d-convergence":
        return {
            "extent": 2.0,
            "nx": 120,  # dx = 1/60 desk scale; 1/120 reachable by override
            "ny": 120,
            "degree": 1,
            "t_final": 0.2,
            "integrator": "mpms2",
            "radius_sq": 0.36,
            "p_inside": 80.0,
            "p_outside": 1.0e-9,
            "reactant_inside": 0.0,
            "reactant_outside": 1.0,
            "gamma": 1.2,
            "heat_release": 50.0,
            "activation_temperature": 50.0,
            "rate_constant": 2566.4,
            "cfl_safety": 0.9,
            "sigma_s": 1.5,
            "sigma_s3": 2.0,
            "limiter_enabled": True,
        }
    if case_id == "euler2d-diffraction":
        return {
            "extent": 5.0,
            "nx": 120,  # dx = 1/24 desk scale; 1/48 reachable by override
            "ny": 120,
            "degree": 1,
            "t_final": 0.3,
            "integrator": "mpms2",
            "front_x": 0.5,
            "corner_x": 0.5,  # obstacle [0, corner_x] x [0, corner_y]
            "corner_y": 2.0,
            "state_left": [11.0, 6.18, 0.0, 970.0, 1.0],  # rho, u, v, E, Y
            "rho_right": 1.0,
            "energy_right": 55.0,  # ambiguous in the source; 5.5 also runs
            "reactant_right": 1.0,
            "gamma": 1.2,
            "heat_release": 50.0,
            "activation_temperature": 50.0,
            "rate_constant": 2566.4,
            "cfl_safety": 0.9,
            "sigma_s": 1.5,
            "sigma_s3": 2.0,
            "limiter_enabled": True,
        }
    raise ConfigurationError(f"unknown case {case_id!r}")


# ---------------------------------------------------------------------------
# ODE systems
# ---------------------------------------------------------------------------


def linear_exchange_pds(a: float) -> PDSSpec:
    """dc1/dt = c2 - a c1, dc2/dt = a c1 - c2."""

    def rates(c: np.ndarray) -> np.ndarray:
        return np.array([[0.0, c[1]], [a * c[0], 0.0]])

    return PDSSpec(2, rates, name="linear-exchange")


def linear_exchange_exact(a: float, c0, t: float) -> np.ndarray:
    c10, c20 = c0
    c_inf = (c10 + c20) / (a + 1.0)
    b = c10 / c_inf - 1.0
    c1 = (1.0 + b * np.exp(-(a + 1.0) * t)) * c_inf
    return np.array([c1, c10 + c20 - c1])


def nonlinear_pds(a: float) -> PDSSpec:
    """p21 = c1 c2 / (c1 + 1), p32 = a c2, all other rates zero."""

    def rates(c: np.ndarray) -> np.ndarray:
        p = np.zeros((3, 3))
        p[1, 0] = c[0] * c[1] / (c[0] + 1.0)
        p[2, 1] = a * c[1]
        return p

    return PDSSpec(3, rates, name="nonlinear-3species")


def nonlinear_convection(c: np.ndarray) -> np.ndarray:
    """Explicit 'convection' terms (c1 c2 c3, c3/c2, c2^2 c3^2).

    The middle term divides by c2; admissible trajectories keep c2 > 0,
    which the positivity of the integrators guarantees.
    """
    return np.array([c[0] * c[1] * c[2], c[2] / c[1], c[1] ** 2 * c[2] ** 2])


# ---------------------------------------------------------------------------
# PDE cases
# ---------------------------------------------------------------------------


@dataclass
class PDECase:
    model: object
    mesh: Mesh
    bc: BoundarySpec
    config: SchemeConfig
    u0: np.ndarray
    t_final: float


def _scheme_config(p: dict) -> SchemeConfig:
    return SchemeConfig(
        integrator=p["integrator"],
        degree=p["degree"],
        sigma_s=p["sigma_s"],
        sigma_s3=p["sigma_s3"],
        cfl_safety=p["cfl_safety"],
        limiter_enabled=p["limiter_enabled"],
    )


def build_euler1d_case(p: dict) -> PDECase:
    model = ThreeSpeciesEulerModel()
    mesh = Mesh(1, p["x0"], p["x1"], int(p["nx"]))
    qs = quadrature_set(int(p["degree"]))
    ul = model.from_primitive(np.asarray(p["rho_left"]), p["u_left"], p["p_left"])
    ur = model.from_primitive(np.asarray(p["rho_right"]), p["u_right"], p["p_right"])
    xd = p["diaphragm"]

    def init(x, y):
        out = np.empty((5,) + x.shape)
        for v in range(5):
            out[v] = np.where(x < xd, ul[v], ur[v])
        return out

    u0 = project_pointwise(init, mesh, qs, 5, 1)
    bc = BoundarySpec(
        BoundarySide("outflow"), BoundarySide("outflow"),
        BoundarySide("periodic"), BoundarySide("periodic"),
    )
    return PDECase(model, mesh, bc, _scheme_config(p), u0, p["t_final"])


def build_euler2d_convergence_case(p: dict) -> PDECase:
    from .chemistry import OneStepMechanism

    mech = OneStepMechanism(p["heat_release"], p["activation_temperature"], p["rate_constant"])
    model = OneStepEulerModel(gamma=p["gamma"], mechanism=mech, ndim=2)
    ext = p["extent"]
    mesh = Mesh(2, 0.0, ext, int(p["nx"]), 0.0, ext, int(p["ny"]))
    qs = quadrature_set(int(p["degree"]))

    def init(x, y):
        inside = x**2 + y**2 <= p["radius_sq"]
        pr = np.where(inside, p["p_inside"], p["p_outside"])
        yf = np.where(inside, p["reactant_inside"], p["reactant_outside"])
        rho = np.ones_like(x)
        e = pr / (model.gamma - 1.0) + rho * mech.heat_release * yf
        zeros = np.zeros_like(x)
        return np.stack([rho * yf, rho * (1.0 - yf), zeros, zeros, e])

    u0 = project_pointwise(init, mesh, qs, 5, 2)
    bc = BoundarySpec(
        BoundarySide("reflective"), BoundarySide("outflow"),
        BoundarySide("reflective"), BoundarySide("outflow"),
    )
    return PDECase(model, mesh, bc, _scheme_config(p), u0, p["t_final"])


def build_euler2d_diffraction_case(p: dict) -> PDECase:
    from .chemistry import OneStepMechanism

    mech = OneStepMechanism(p["heat_release"], p["activation_temperature"], p["rate_constant"])
    model = OneStepEulerModel(gamma=p["gamma"], mechanism=mech, ndim=2)
    ext = p["extent"]
    nx, ny = int(p["nx"]), int(p["ny"])
    dx = ext / nx
    xs = (np.arange(nx) + 0.5) * dx
    ys = (np.arange(ny) + 0.5) * (ext / ny)
    solid = (xs[:, None] < p["corner_x"]) & (ys[None, :] < p["corner_y"])
    mesh = Mesh(2, 0.0, ext, nx, 0.0, ext, ny, solid=solid)
    qs = quadrature_set(int(p["degree"]))

    sl = p["state_left"]
    u_left = model.from_energy(sl[0], sl[1], sl[2], sl[3], sl[4])
    u_right = model.from_energy(p["rho_right"], 0.0, 0.0, p["energy_right"], p["reactant_right"])

    def init(x, y):
        out = np.empty((5,) + x.shape)
        for v in range(5):
            out[v] = np.where(x < p["front_x"], u_left[v], u_right[v])
        return out

    u0 = project_pointwise(init, mesh, qs, 5, 2)
    bc = BoundarySpec(
        BoundarySide("dirichlet", u_left), BoundarySide("reflective"),
        BoundarySide("reflective"), BoundarySide("reflective"),
    )
    return PDECase(model, mesh, bc, _scheme_config(p), u0, p["t_final"])


_PDE_BUILDERS: dict[str, Callable[[dict], PDECase]] = {
    "euler1d-3species": build_euler1d_case,
    "euler2d-convergence": build_euler2d_convergence_case,
    "euler2d-diffraction": build_euler2d_diffraction_case,
}


def build_pde_case(spec: CaseSpec) -> PDECase:
    if spec.case_id not in _PDE_BUILDERS:
        raise ConfigurationError(f"{spec.case_id} is an ODE case; use the study commands")
    return _PDE_BUILDERS[spec.case_id](spec.params)


def ode_kind(params: dict, name: str | None = None) -> IntegratorKind:
    name = name or params["integrator"]
    s = params["mpms2_s"] if name == "mpms2" else params["mpms3_s"] if name == "mpms3" else 1.5
    return IntegratorKind(name, s=s)
