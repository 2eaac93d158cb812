"""Nodal discontinuous Galerkin discretization on uniform rectangular meshes.

Fields hold point values at tensor-product Gauss nodes (Lagrange basis),
so the mass matrix is diagonal and the Patankar source coupling is
pointwise. Array layout: U[nvars, nx, ny, La, Lb]; one-dimensional
problems use ny = Lb = 1 and skip the y machinery.

Interface fluxes are global Lax-Friedrichs,

    H(U_int, U_ext, nu) = 1/2 [f(U_int).nu + f(U_ext).nu - alpha (U_ext - U_int)],

with the dissipation oriented against the jump so the scalar-advection
limit is pure upwinding, and alpha the global maximum of |velocity| +
sound speed. Species and density fluxes use identical discrete
operators, which makes the species flux consistent (a species with
fraction one sees exactly the density flux) and keeps the species sum
equal to the density to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConfigurationError
from .quadrature import QuadratureSet, quadrature_set


# ---------------------------------------------------------------------------
# mesh and field containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Mesh:
    """Uniform rectangular mesh; 1D meshes have ny = 1 and dy = 1."""

    ndim: int
    x0: float
    x1: float
    nx: int
    y0: float = 0.0
    y1: float = 1.0
    ny: int = 1
    solid: np.ndarray | None = None  # (nx, ny) bool; True = blocked cell

    def __post_init__(self) -> None:
        if self.ndim not in (1, 2):
            raise ConfigurationError("mesh dimension must be 1 or 2")
        if self.nx < 1 or self.ny < 1 or self.x1 <= self.x0 or (self.ndim == 2 and self.y1 <= self.y0):
            raise ConfigurationError("degenerate mesh extents")
        if self.solid is not None and self.solid.shape != (self.nx, self.ny):
            raise ConfigurationError("solid mask shape must be (nx, ny)")

    @property
    def dx(self) -> float:
        return (self.x1 - self.x0) / self.nx

    @property
    def dy(self) -> float:
        return (self.y1 - self.y0) / self.ny if self.ndim == 2 else 1.0

    @property
    def cell_volume(self) -> float:
        return self.dx * (self.dy if self.ndim == 2 else 1.0)

    def fluid_mask(self) -> np.ndarray:
        if self.solid is None:
            return np.ones((self.nx, self.ny), dtype=bool)
        return ~self.solid

    def node_coords(self, qs: QuadratureSet) -> tuple[np.ndarray, np.ndarray]:
        """(x[nx, La], y[ny, Lb]) coordinates of the tensor Gauss nodes."""
        gx = qs.gauss_points
        x = self.x0 + (np.arange(self.nx)[:, None] + gx[None, :]) * self.dx
        if self.ndim == 2:
            y = self.y0 + (np.arange(self.ny)[:, None] + gx[None, :]) * self.dy
        else:
            y = np.zeros((1, 1))
        return x, y


@dataclass
class BoundarySide:
    """One edge of the domain: 'periodic', 'reflective', 'outflow', or
    'dirichlet' with a fixed conserved state."""

    kind: str
    state: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("periodic", "reflective", "outflow", "dirichlet"):
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and self.state is None:
            raise ConfigurationError("dirichlet boundary needs a state")


@dataclass
class BoundarySpec:
    left: BoundarySide = field(default_factory=lambda: BoundarySide("periodic"))
    right: BoundarySide = field(default_factory=lambda: BoundarySide("periodic"))
    bottom: BoundarySide = field(default_factory=lambda: BoundarySide("periodic"))
    top: BoundarySide = field(default_factory=lambda: BoundarySide("periodic"))

    def __post_init__(self) -> None:
        for a, b, name in ((self.left, self.right, "x"), (self.bottom, self.top, "y")):
            if (a.kind == "periodic") != (b.kind == "periodic"):
                raise ConfigurationError(f"periodic {name}-boundaries must be paired")


def periodic_bc() -> BoundarySpec:
    return BoundarySpec()


# ---------------------------------------------------------------------------
# fluxes
# ---------------------------------------------------------------------------


def lax_friedrichs_flux(model, u_int: np.ndarray, u_ext: np.ndarray, normal, alpha: float) -> np.ndarray:
    """Interface flux H(U_int, U_ext, nu); `normal` is +-1 in 1D or an
    (nx, ny) unit vector in 2D. Consistency: H(U, U, nu) = f(U).nu."""
    if np.isscalar(normal):
        normal = (float(normal),) if model.ndim == 1 else (float(normal), 0.0)
    fn_int = normal[0] * model.flux(u_int, 0)
    fn_ext = normal[0] * model.flux(u_ext, 0)
    if model.ndim == 2 and normal[1] != 0.0:
        fn_int = fn_int + normal[1] * model.flux(u_int, 1)
        fn_ext = fn_ext + normal[1] * model.flux(u_ext, 1)
    return 0.5 * (fn_int + fn_ext - alpha * (u_ext - u_int))


def ghost_trace(model, bc_side: BoundarySide, interior_trace: np.ndarray, wrap_trace: np.ndarray, axis: int) -> np.ndarray:
    if bc_side.kind == "periodic":
        return wrap_trace
    if bc_side.kind == "outflow":
        return interior_trace
    if bc_side.kind == "reflective":
        return model.reflect(interior_trace, axis)
    state = np.asarray(bc_side.state, dtype=float)
    return np.broadcast_to(state.reshape(state.shape + (1,) * (interior_trace.ndim - 1)), interior_trace.shape).copy()


def _apply_solid_x(model, solid: np.ndarray, um: np.ndarray, up: np.ndarray) -> None:
    """Walls between fluid and blocked cells reflect the fluid trace.

    um/up: (nv, nx+1, ny, L); face f in row j sits between cells
    (f-1, j) and (f, j).
    """
    nxp1 = um.shape[1]
    minus_solid = np.zeros((nxp1, solid.shape[1]), dtype=bool)
    plus_solid = np.zeros((nxp1, solid.shape[1]), dtype=bool)
    minus_solid[1:] = solid
    plus_solid[:-1] = solid
    wall_minus = minus_solid & ~plus_solid  # solid on minus side, fluid on plus
    wall_plus = plus_solid & ~minus_solid
    if wall_minus.any():
        refl = model.reflect(up, 0)
        um[:, wall_minus] = refl[:, wall_minus]
    if wall_plus.any():
        refl = model.reflect(um, 0)
        up[:, wall_plus] = refl[:, wall_plus]


def _apply_solid_y(model, solid: np.ndarray, um: np.ndarray, up: np.ndarray) -> None:
    nyp1 = um.shape[2]
    minus_solid = np.zeros((solid.shape[0], nyp1), dtype=bool)
    plus_solid = np.zeros((solid.shape[0], nyp1), dtype=bool)
    minus_solid[:, 1:] = solid
    plus_solid[:, :-1] = solid
    wall_minus = minus_solid & ~plus_solid
    wall_plus = plus_solid & ~minus_solid
    if wall_minus.any():
        refl = model.reflect(up, 1)
        um[:, wall_minus] = refl[:, wall_minus]
    if wall_plus.any():
        refl = model.reflect(um, 1)
        up[:, wall_plus] = refl[:, wall_plus]


# ---------------------------------------------------------------------------
# residual assembly
# ---------------------------------------------------------------------------


def x_face_traces(u: np.ndarray, qs: QuadratureSet) -> tuple[np.ndarray, np.ndarray]:
    """Right and left traces of every cell on x-faces: (nv, nx, ny, Lb)."""
    right = np.tensordot(u, qs.edge1, axes=([3], [0]))
    left = np.tensordot(u, qs.edge0, axes=([3], [0]))
    return right, left


def y_face_traces(u: np.ndarray, qs: QuadratureSet) -> tuple[np.ndarray, np.ndarray]:
    top = np.tensordot(u, qs.edge1, axes=([4], [0]))
    bottom = np.tensordot(u, qs.edge0, axes=([4], [0]))
    return top, bottom


def face_traces(u: np.ndarray, qs: QuadratureSet, ndim: int) -> dict:
    """All cell-boundary traces, shared by flux assembly and the global
    wave-speed reduction."""
    tr = {}
    tr["xr"], tr["xl"] = x_face_traces(u, qs)
    if ndim == 2:
        tr["yt"], tr["yb"] = y_face_traces(u, qs)
    return tr


def convection_residual(
    model,
    mesh: Mesh,
    qs: QuadratureSet,
    u: np.ndarray,
    bc: BoundarySpec,
    alpha: float,
    traces: dict | None = None,
) -> np.ndarray:
    """Semi-discrete right side dU/dt = F(U) of the convection part.

    Surface integrals use the tensor Gauss points of each face, volume
    integrals the tensor Gauss nodes; both are exact for the products
    the weak form needs at this degree. The mass matrix is diagonal
    (w_a w_b dx dy), inverted in place.
    """
    nv = u.shape[0]
    w = qs.gauss_weights
    resid = np.zeros_like(u)
    if traces is None:
        traces = face_traces(u, qs, mesh.ndim)

    # --- x direction -------------------------------------------------
    tr_r, tr_l = traces["xr"], traces["xl"]
    um = np.empty((nv, mesh.nx + 1) + tr_r.shape[2:])
    up = np.empty_like(um)
    um[:, 1:] = tr_r
    up[:, :-1] = tr_l
    um[:, 0] = ghost_trace(model, bc.left, tr_l[:, 0], tr_r[:, -1], 0)
    up[:, -1] = ghost_trace(model, bc.right, tr_r[:, -1], tr_l[:, 0], 0)
    if mesh.solid is not None:
        _apply_solid_x(model, mesh.solid, um, up)
    hx = 0.5 * (model.flux(um, 0) + model.flux(up, 0) - alpha * (up - um))
    fx = model.flux(u, 0)
    inv_wdx = 1.0 / (w * mesh.dx)
    surf = qs.edge1[:, None] * hx[:, 1:, :, None, :] - qs.edge0[:, None] * hx[:, :-1, :, None, :]
    vol = np.moveaxis(np.tensordot(qs.stiffness, fx, axes=([1], [3])), 0, 3)
    resid += (vol - surf) * inv_wdx[None, None, None, :, None]

    # --- y direction -------------------------------------------------
    if mesh.ndim == 2:
        tr_t, tr_b = traces["yt"], traces["yb"]
        vm = np.empty((nv, mesh.nx, mesh.ny + 1, u.shape[3]))
        vp = np.empty_like(vm)
        vm[:, :, 1:] = tr_t
        vp[:, :, :-1] = tr_b
        vm[:, :, 0] = ghost_trace(model, bc.bottom, tr_b[:, :, 0], tr_t[:, :, -1], 1)
        vp[:, :, -1] = ghost_trace(model, bc.top, tr_t[:, :, -1], tr_b[:, :, 0], 1)
        if mesh.solid is not None:
            _apply_solid_y(model, mesh.solid, vm, vp)
        hy = 0.5 * (model.flux(vm, 1) + model.flux(vp, 1) - alpha * (vp - vm))
        fy = model.flux(u, 1)
        inv_wdy = 1.0 / (w * mesh.dy)
        surf = qs.edge1 * hy[:, :, 1:, :, None] - qs.edge0 * hy[:, :, :-1, :, None]
        vol = np.tensordot(fy, qs.stiffness, axes=([4], [1]))
        resid += (vol - surf) * inv_wdy[None, None, None, None, :]

    if mesh.solid is not None:
        resid[:, mesh.solid] = 0.0
    return resid


def cell_averages(u: np.ndarray, qs: QuadratureSet) -> np.ndarray:
    """Gauss-weighted cell averages, exact for degree-k data: (nv, nx, ny)."""
    w = qs.gauss_weights
    wy = w if u.shape[-1] == len(w) else np.ones(u.shape[-1])
    return np.tensordot(np.tensordot(u, wy, axes=([-1], [0])), w, axes=([-1], [0]))


def global_wave_speed(
    model, mesh: Mesh, qs: QuadratureSet, u: np.ndarray, traces: dict | None = None
) -> float:
    """Global max of |velocity| + sound speed over nodal values and all
    face traces of fluid cells (the states the fluxes actually see)."""
    fluid = mesh.fluid_mask()
    if traces is None:
        traces = face_traces(u, qs, mesh.ndim)
    speeds = [model.max_wave_speed(u[:, fluid])]
    speeds += [model.max_wave_speed(tr[:, fluid]) for tr in traces.values()]
    return float(max(np.max(s) for s in speeds))


def cfl_dt(alpha: float, mesh: Mesh, first_lobatto_weight: float, safety: float = 1.0) -> float:
    """Largest dt with alpha*(dt/dx + dt/dy) <= w1hat, times `safety`.

    Multistep callers scale the result by their own fraction (1/2 for
    the two-step scheme, 1/3 for the four-step one).
    """
    if not alpha > 0.0:
        raise ConfigurationError(
            "wave speed alpha must be positive; a quiescent field needs an explicit dt cap"
        )
    denom = 1.0 / mesh.dx + (1.0 / mesh.dy if mesh.ndim == 2 else 0.0)
    return safety * first_lobatto_weight / (alpha * denom)


def project_pointwise(fn, mesh: Mesh, qs: QuadratureSet, nvars: int, ndim: int) -> np.ndarray:
    """Initialize a field by evaluating fn at the tensor Gauss nodes.

    fn(x, y) -> (nvars, ...) broadcastable over the node grid.
    """
    x, y = mesh.node_coords(qs)
    la = len(qs.gauss_points)
    lb = la if ndim == 2 else 1
    xg = x[:, None, :, None]
    yg = y[None, :, None, :]
    out = np.empty((nvars, mesh.nx, mesh.ny, la, lb))
    vals = fn(np.broadcast_to(xg, (mesh.nx, mesh.ny, la, lb)), np.broadcast_to(yg, (mesh.nx, mesh.ny, la, lb)))
    out[:] = vals
    return out
