"""Flow models: conserved-variable layout, fluxes, and source rates.

Conserved layout (variable axis first, everything else broadcast):

    U = [c_1 .. c_M, m, (n,) E]          rho = sum of species densities

following the system actually evolved by the solver: every species has
its own transport equation with consistent fluxes and the total density
is their sum, which is what keeps the mass fractions summing to one.
An optional trailing slot can carry a redundant, separately evolved
density; the consistency tests use it to verify that the species sum
and the evolved density agree to round-off.

Models implement: split/primitive access, physical fluxes per direction,
the global wave speed |velocity| + sound speed, raw (unvalidated)
pressure for the limiter, and batched production matrices for the
Patankar source step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import chemistry
from .errors import AdmissibilityError
from .chemistry import (
    OneStepMechanism,
    SpeciesTable,
    ThreeSpeciesMechanism,
)


@dataclass(frozen=True)
class AdvectionModel:
    """Passive transport of species by a constant velocity field.

    No momentum/energy variables, no pressure (the limiter skips its
    pressure stage), no source. Used by the manufactured-solution and
    flux-consistency tests.
    """

    velocity: tuple[float, ...] = (1.0,)
    nspecies: int = 1

    @property
    def ndim(self) -> int:
        return len(self.velocity)

    @property
    def nvars(self) -> int:
        return self.nspecies

    has_source = False
    has_pressure = False

    def species(self, u: np.ndarray) -> np.ndarray:
        return u

    def flux(self, u: np.ndarray, axis: int) -> np.ndarray:
        return self.velocity[axis] * u

    def max_wave_speed(self, u: np.ndarray) -> np.ndarray:
        return np.full(u.shape[1:], float(np.hypot(*self.velocity) if self.ndim == 2 else abs(self.velocity[0])))

    def pressure_raw(self, u: np.ndarray) -> np.ndarray | None:
        return None

    def reflect(self, u: np.ndarray, axis: int) -> np.ndarray:
        return u.copy()


@dataclass(frozen=True)
class OneStepEulerModel:
    """Reactive Euler with gamma-law EOS and one-step kinetics Y -> Z.

    Variables: (rho Y, rho Z, m, [n,] E). Pressure
    p = (gamma - 1) (E - kinetic - q * rho Y), temperature T = p / rho.
    """

    gamma: float = 1.2
    mechanism: OneStepMechanism = field(default_factory=OneStepMechanism)
    ndim: int = 2
    with_source: bool = True
    extra_density_slot: bool = False

    nspecies = 2
    has_pressure = True

    @property
    def has_source(self) -> bool:
        return self.with_source

    @property
    def nvars(self) -> int:
        return self.nspecies + self.ndim + 1 + (1 if self.extra_density_slot else 0)

    def species(self, u: np.ndarray) -> np.ndarray:
        return u[: self.nspecies]

    def density(self, u: np.ndarray) -> np.ndarray:
        if self.extra_density_slot:
            return u[-1]
        return u[: self.nspecies].sum(axis=0)

    def _me(self, u: np.ndarray):
        m = u[self.nspecies]
        n = u[self.nspecies + 1] if self.ndim == 2 else None
        e = u[self.nspecies + self.ndim]
        return m, n, e

    def kinetic_energy(self, u: np.ndarray) -> np.ndarray:
        m, n, e = self._me(u)
        rho = self.density(u)
        ke = m**2
        if n is not None:
            ke = ke + n**2
        return 0.5 * ke / rho

    def pressure_raw(self, u: np.ndarray) -> np.ndarray:
        m, n, e = self._me(u)
        return (self.gamma - 1.0) * (e - self.kinetic_energy(u) - self.mechanism.heat_release * u[0])

    def temperature(self, u: np.ndarray) -> np.ndarray:
        return self.pressure_raw(u) / self.density(u)

    def max_wave_speed(self, u: np.ndarray) -> np.ndarray:
        rho = self.density(u)
        p = self.pressure_raw(u)
        # the limiter floors pressure at exactly zero, so p = 0 (up to
        # round-off) is an admissible closure point with sound speed 0
        if np.any(rho <= 0.0) or np.any(p < -1e-12 * max(1.0, float(np.max(np.abs(p))))):
            raise AdmissibilityError(
                f"inadmissible state in wave-speed evaluation: min rho={np.min(rho):.3e}, min p={np.min(p):.3e}"
            )
        m, n, _ = self._me(u)
        speed_sq = (m / rho) ** 2
        if n is not None:
            speed_sq = speed_sq + (n / rho) ** 2
        return np.sqrt(speed_sq) + np.sqrt(self.gamma * np.maximum(p, 0.0) / rho)

    def flux(self, u: np.ndarray, axis: int) -> np.ndarray:
        rho = self.density(u)
        m, n, e = self._me(u)
        p = self.pressure_raw(u)
        vel = (m if axis == 0 else n) / rho
        out = vel * u
        ns = self.nspecies
        if axis == 0:
            out[ns] = out[ns] + p
        else:
            out[ns + 1] = out[ns + 1] + p
        out[ns + self.ndim] = out[ns + self.ndim] + vel * p
        return out

    def production_rates(self, u: np.ndarray) -> np.ndarray:
        """Batched (..., M, M) production matrices at the given states."""
        t = self.temperature(u)
        return chemistry.one_step_rates(self.mechanism, u[0], t)

    def reflect(self, u: np.ndarray, axis: int) -> np.ndarray:
        """Mirror the normal momentum across a wall with normal along `axis`."""
        out = u.copy()
        out[self.nspecies + axis] = -out[self.nspecies + axis]
        return out

    def from_primitive(self, rho: float, u: float, v: float, p: float, reactant_fraction: float) -> np.ndarray:
        y = reactant_fraction
        e = p / (self.gamma - 1.0) + 0.5 * rho * (u**2 + v**2) + rho * self.mechanism.heat_release * y
        if self.ndim == 2:
            vec = [rho * y, rho * (1.0 - y), rho * u, rho * v, e]
        else:
            vec = [rho * y, rho * (1.0 - y), rho * u, e]
        if self.extra_density_slot:
            vec.append(rho)
        return np.array(vec)

    def from_energy(self, rho: float, u: float, v: float, e_total: float, reactant_fraction: float) -> np.ndarray:
        y = reactant_fraction
        if self.ndim == 2:
            vec = [rho * y, rho * (1.0 - y), rho * u, rho * v, e_total]
        else:
            vec = [rho * y, rho * (1.0 - y), rho * u, e_total]
        if self.extra_density_slot:
            vec.append(rho)
        return np.array(vec)


@dataclass(frozen=True)
class ThreeSpeciesEulerModel:
    """1D Euler with the general multi-species EOS and the oxygen
    dissociation mechanism. Variables: (rho_1, rho_2, rho_3, m, E)."""

    table: SpeciesTable = chemistry.OXYGEN_DISSOCIATION_SPECIES
    mechanism: ThreeSpeciesMechanism = field(default_factory=ThreeSpeciesMechanism)
    with_source: bool = True

    ndim = 1
    nspecies = 3
    has_pressure = True
    extra_density_slot = False

    @property
    def has_source(self) -> bool:
        return self.with_source

    @property
    def nvars(self) -> int:
        return 5

    def species(self, u: np.ndarray) -> np.ndarray:
        return u[:3]

    def density(self, u: np.ndarray) -> np.ndarray:
        return u[:3].sum(axis=0)

    def kinetic_energy(self, u: np.ndarray) -> np.ndarray:
        return 0.5 * u[3] ** 2 / self.density(u)

    def temperature(self, u: np.ndarray, validate: bool = True) -> np.ndarray:
        return chemistry.temperature_general(self.table, u[:3], self.kinetic_energy(u), u[4], validate=validate)

    def pressure_raw(self, u: np.ndarray) -> np.ndarray:
        return chemistry.pressure_general(self.table, u[:3], self.temperature(u, validate=False))

    def max_wave_speed(self, u: np.ndarray) -> np.ndarray:
        rho = self.density(u)
        p = self.pressure_raw(u)
        if np.any(rho <= 0.0) or np.any(p < -1e-12 * max(1.0, float(np.max(np.abs(p))))):
            raise AdmissibilityError(
                f"inadmissible state in wave-speed evaluation: min rho={np.min(rho):.3e}, min p={np.min(p):.3e}"
            )
        gam = chemistry.gamma_general(self.table, u[:3])
        vel = np.abs(u[3] / rho)
        return vel + np.sqrt(gam * np.maximum(p, 0.0) / rho)

    def flux(self, u: np.ndarray, axis: int) -> np.ndarray:
        rho = self.density(u)
        vel = u[3] / rho
        p = self.pressure_raw(u)
        out = vel * u
        out[3] = out[3] + p
        out[4] = out[4] + vel * p
        return out

    def production_rates(self, u: np.ndarray) -> np.ndarray:
        t = self.temperature(u, validate=False)
        return chemistry.oxygen_dissociation_rates(self.table, self.mechanism, u[:3], np.maximum(t, 0.0))

    def reflect(self, u: np.ndarray, axis: int) -> np.ndarray:
        out = u.copy()
        out[3] = -out[3]
        return out

    def from_primitive(self, species_densities, velocity: float, pressure: float) -> np.ndarray:
        rho_i = np.asarray(species_densities, dtype=float)
        rho = rho_i.sum()
        e = chemistry.energy_from_primitive_general(self.table, rho_i.reshape(3, 1), np.array([velocity**2]), np.array([pressure]))[0]
        return np.array([rho_i[0], rho_i[1], rho_i[2], rho * velocity, e])
