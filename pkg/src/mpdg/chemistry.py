"""Equations of state and reaction mechanisms for the built-in flow models.

Two closures are provided:

  * a general multi-species EOS with p = R*T*sum(rho_i/M_i) and
    E = sum(rho_i*C_i*T) + sum(rho_i*q_i) + kinetic energy, where
    C_i = 3R/(2M_i) for monoatomic and 5R/(2M_i) for diatomic species,
    used by the three-species dissociation model; and
  * a gamma-law EOS with chemical heat release,
    E = p/(gamma-1) + rho*q*Y + kinetic energy and T = p/rho,
    used by the one-step detonation model.

All functions are vectorized: species densities carry the species axis
first, every other argument broadcasts. Rates are returned as production
matrices with trailing (M, M) axes, matching the batched Patankar solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, StructuralViolationError

R_UNIVERSAL = 8.31447215


@dataclass(frozen=True)
class SpeciesTable:
    """Per-species molar masses (kg/mol), atomicity and formation
    enthalpies (J/kg)."""

    molar_masses: tuple[float, ...]
    monoatomic: tuple[bool, ...]
    formation_enthalpies: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.molar_masses) == len(self.monoatomic) == len(self.formation_enthalpies)):
            raise StructuralViolationError("species table fields must have equal length")
        if any(m <= 0 for m in self.molar_masses):
            raise StructuralViolationError("molar masses must be positive")

    @property
    def count(self) -> int:
        return len(self.molar_masses)

    @property
    def heat_capacities(self) -> np.ndarray:
        """C_i = 3R/(2 M_i) monoatomic, 5R/(2 M_i) diatomic."""
        m = np.asarray(self.molar_masses)
        factor = np.where(np.asarray(self.monoatomic), 1.5, 2.5)
        return factor * R_UNIVERSAL / m

    @property
    def inv_molar_masses(self) -> np.ndarray:
        return 1.0 / np.asarray(self.molar_masses)


# Oxygen dissociation model: species (O, O2, N2); N2 is inert.
# Monoatomicity follows from the molar masses; only atomic oxygen
# carries a formation enthalpy.
OXYGEN_DISSOCIATION_SPECIES = SpeciesTable(
    molar_masses=(0.016, 0.032, 0.028),
    monoatomic=(True, False, False),
    formation_enthalpies=(1.558e7, 0.0, 0.0),
)


@dataclass(frozen=True)
class ThreeSpeciesMechanism:
    """2 O <-> O2 dissociation kinetics.

    k_f = C0 * T^-2 * exp(-E0/T); k_b = k_f / exp(fit(z)), z = 1e4/T,
    with fit(z) = b1 + b2*ln z + b3*z + b4*z^2 + b5*z^3 (natural log;
    isolated here so a base-10 reading is a one-line change).
    """

    rate_prefactor: float = 2.9e17
    activation_temperature: float = 59750.0
    equilibrium_fit: tuple[float, ...] = (2.855, 0.988, -6.181, -0.023, -0.001)

    def forward_rate(self, temperature: np.ndarray) -> np.ndarray:
        t = np.asarray(temperature, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logk = np.log(self.rate_prefactor) - self.activation_temperature / t - 2.0 * np.log(t)
            k = np.where(t > 0.0, np.exp(logk), 0.0)
        return k

    def backward_rate(self, temperature: np.ndarray) -> np.ndarray:
        t = np.asarray(temperature, dtype=float)
        b1, b2, b3, b4, b5 = self.equilibrium_fit
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            zz = 1.0e4 / t
            fit = b1 + b2 * np.log(zz) + b3 * zz + b4 * zz**2 + b5 * zz**3
            logk = (
                np.log(self.rate_prefactor)
                - self.activation_temperature / t
                - 2.0 * np.log(t)
                - fit
            )
            k = np.where(t > 0.0, np.exp(logk), 0.0)
        return k


@dataclass(frozen=True)
class OneStepMechanism:
    """Single irreversible reaction Y -> Z with Arrhenius-type rate
    omega = -K * rho*Y * exp(-T_act / T). exp underflows to exactly
    zero as T -> 0+, so cold regions are inert."""

    heat_release: float = 50.0
    activation_temperature: float = 50.0
    rate_constant: float = 2566.4

    def reactant_consumption(self, reactant_density: np.ndarray, temperature: np.ndarray) -> np.ndarray:
        t = np.asarray(temperature, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            arrh = np.where(t > 0.0, np.exp(-self.activation_temperature / np.where(t > 0.0, t, 1.0)), 0.0)
        return self.rate_constant * np.asarray(reactant_density) * arrh


# ---------------------------------------------------------------------------
# general multi-species EOS
# ---------------------------------------------------------------------------


def temperature_general(
    table: SpeciesTable,
    species_densities: np.ndarray,
    kinetic_energy: np.ndarray,
    total_energy: np.ndarray,
    validate: bool = True,
) -> np.ndarray:
    """T = (E - kinetic - sum(rho_i q_i)) / sum(rho_i C_i).

    With validate=True a nonpositive internal energy raises; with
    validate=False the raw (possibly negative) value is returned, which
    the limiter uses to detect inadmissible points.
    """
    rho_i = np.asarray(species_densities, dtype=float)
    q = np.asarray(table.formation_enthalpies).reshape((-1,) + (1,) * (rho_i.ndim - 1))
    c = table.heat_capacities.reshape((-1,) + (1,) * (rho_i.ndim - 1))
    e_int = np.asarray(total_energy) - np.asarray(kinetic_energy) - (rho_i * q).sum(axis=0)
    heat = (rho_i * c).sum(axis=0)
    if validate and np.any(e_int <= 0.0):
        raise AdmissibilityError("nonpositive thermal internal energy in temperature evaluation")
    return e_int / heat


def pressure_general(table: SpeciesTable, species_densities: np.ndarray, temperature: np.ndarray) -> np.ndarray:
    """p = R T sum(rho_i / M_i)."""
    rho_i = np.asarray(species_densities, dtype=float)
    invm = table.inv_molar_masses.reshape((-1,) + (1,) * (rho_i.ndim - 1))
    return R_UNIVERSAL * np.asarray(temperature) * (rho_i * invm).sum(axis=0)


def gamma_general(table: SpeciesTable, species_densities: np.ndarray) -> np.ndarray:
    """Effective gamma = 1 + (R sum rho_i/M_i) / (sum rho_i C_i).

    For e_i(T) = C_i T the derivative e_i'(T) is C_i, so this is the
    sound-speed gamma of the eigenvalue analysis.
    """
    rho_i = np.asarray(species_densities, dtype=float)
    invm = table.inv_molar_masses.reshape((-1,) + (1,) * (rho_i.ndim - 1))
    c = table.heat_capacities.reshape((-1,) + (1,) * (rho_i.ndim - 1))
    return 1.0 + R_UNIVERSAL * (rho_i * invm).sum(axis=0) / (rho_i * c).sum(axis=0)


def energy_from_primitive_general(
    table: SpeciesTable,
    species_densities: np.ndarray,
    velocity_sq: np.ndarray,
    pressure: np.ndarray,
) -> np.ndarray:
    """Total energy from (rho_i, |u|^2, p); inverse of the T/p chain."""
    rho_i = np.asarray(species_densities, dtype=float)
    invm = table.inv_molar_masses.reshape((-1,) + (1,) * (rho_i.ndim - 1))
    c = table.heat_capacities.reshape((-1,) + (1,) * (rho_i.ndim - 1))
    q = np.asarray(table.formation_enthalpies).reshape((-1,) + (1,) * (rho_i.ndim - 1))
    t = np.asarray(pressure) / (R_UNIVERSAL * (rho_i * invm).sum(axis=0))
    rho = rho_i.sum(axis=0)
    return (rho_i * c).sum(axis=0) * t + (rho_i * q).sum(axis=0) + 0.5 * rho * np.asarray(velocity_sq)


def oxygen_dissociation_rates(
    table: SpeciesTable,
    mech: ThreeSpeciesMechanism,
    species_densities: np.ndarray,
    temperature: np.ndarray,
) -> np.ndarray:
    """Production matrix of the split source, trailing axes (M, M).

    omega_plus  = 2 M1 k_f (rho2/M2) sum_s rho_s/M_s   (O2 -> 2 O)
    omega_minus = 2 M1 k_b (rho1/M1)^2 sum_s rho_s/M_s (2 O -> O2)
    p[0,1] = omega_plus, p[1,0] = omega_minus; the inert third species
    has zero rows and columns. Stoichiometry (2*M1 = M2) makes the
    column sums cancel exactly, so total mass is conserved.
    """
    rho_i = np.asarray(species_densities, dtype=float)
    m1, m2, _ = table.molar_masses
    molar_sum = (rho_i * table.inv_molar_masses.reshape((-1,) + (1,) * (rho_i.ndim - 1))).sum(axis=0)
    kf = mech.forward_rate(temperature)
    kb = mech.backward_rate(temperature)
    omega_plus = 2.0 * m1 * kf * (rho_i[1] / m2) * molar_sum
    omega_minus = 2.0 * m1 * kb * (rho_i[0] / m1) ** 2 * molar_sum
    if not (np.all(np.isfinite(omega_plus)) and np.all(np.isfinite(omega_minus))):
        raise StructuralViolationError("non-finite dissociation rate (temperature out of range?)")
    out = np.zeros(np.broadcast(omega_plus, omega_minus).shape + (3, 3))
    out[..., 0, 1] = omega_plus
    out[..., 1, 0] = omega_minus
    return out


def one_step_rates(
    mech: OneStepMechanism,
    reactant_density: np.ndarray,
    temperature: np.ndarray,
) -> np.ndarray:
    """Production matrix for (Y, Z): p[1,0] = K rho Y exp(-T_act/T)."""
    w = mech.reactant_consumption(reactant_density, temperature)
    if not np.all(np.isfinite(w)):
        raise StructuralViolationError("non-finite one-step rate")
    out = np.zeros(np.shape(w) + (2, 2))
    out[..., 1, 0] = w
    return out
