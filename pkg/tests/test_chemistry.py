import math

import numpy as np
import pytest

from mpdg.chemistry import (
    OXYGEN_DISSOCIATION_SPECIES,
    OneStepMechanism,
    R_UNIVERSAL,
    SpeciesTable,
    ThreeSpeciesMechanism,
    energy_from_primitive_general,
    gamma_general,
    one_step_rates,
    oxygen_dissociation_rates,
    pressure_general,
    temperature_general,
)
from mpdg.errors import AdmissibilityError
from mpdg.models import OneStepEulerModel, ThreeSpeciesEulerModel

RHO_L = np.array([5.251896311257204e-5, 3.748071704863518e-5, 2.962489471973072e-4])
RHO_R = np.array([8.341661837019181e-8, 9.455418692098664e-11, 2.748909430004963e-7])


def test_heat_capacities_follow_atomicity_rule():
    c = OXYGEN_DISSOCIATION_SPECIES.heat_capacities
    m = np.array(OXYGEN_DISSOCIATION_SPECIES.molar_masses)
    assert c[0] == pytest.approx(1.5 * R_UNIVERSAL / m[0])
    assert c[1] == pytest.approx(2.5 * R_UNIVERSAL / m[1])
    assert c[2] == pytest.approx(2.5 * R_UNIVERSAL / m[2])


def test_single_species_temperature_definition():
    # one monoatomic species with C = 1 (molar mass 1.5 R), q = 0,
    # no motion, E = 300 -> T = 300
    table = SpeciesTable((1.5 * R_UNIVERSAL,), (True,), (0.0,))
    assert table.heat_capacities[0] == pytest.approx(1.0)
    t = temperature_general(table, np.array([[1.0]]), np.array([0.0]), np.array([300.0]))
    assert t[0] == pytest.approx(300.0)


def test_nonpositive_internal_energy_raises():
    table = SpeciesTable((1.5 * R_UNIVERSAL,), (True,), (0.0,))
    with pytest.raises(AdmissibilityError):
        temperature_general(table, np.array([[1.0]]), np.array([10.0]), np.array([5.0]))


def test_pressure_temperature_round_trip_left_state():
    model = ThreeSpeciesEulerModel()
    u = model.from_primitive(RHO_L, 0.0, 1000.0)
    p = model.pressure_raw(u.reshape(5, 1))[0]
    assert p == pytest.approx(1000.0, rel=1e-10)
    u = model.from_primitive(RHO_R, 0.0, 1.0)
    p = model.pressure_raw(u.reshape(5, 1))[0]
    assert p == pytest.approx(1.0, rel=1e-10)


def test_gamma_single_diatomic_is_1_4():
    table = SpeciesTable((0.032,), (False,), (0.0,))
    g = gamma_general(table, np.array([[0.7]]))
    assert g[0] == pytest.approx(1.4, rel=1e-14)


def test_one_step_pressure_sound_speed_example():
    model = OneStepEulerModel(ndim=2)
    # rho=1, u=v=0, Y=0, E=25: p = (gamma-1) E = 5, c = sqrt(1.2 * 5)
    u = np.array([0.0, 1.0, 0.0, 0.0, 25.0])
    p = model.pressure_raw(u.reshape(5, 1))[0]
    assert p == pytest.approx(5.0)
    speed = model.max_wave_speed(u.reshape(5, 1))[0]
    assert speed == pytest.approx(math.sqrt(1.2 * 5.0), rel=1e-14)


def test_cold_one_step_state_is_inert():
    mech = OneStepMechanism()
    model = OneStepEulerModel(ndim=2, mechanism=mech)
    u = model.from_primitive(1.0, 0.0, 0.0, 1e-9, 1.0)
    t = model.temperature(u.reshape(5, 1))[0]
    assert t == pytest.approx(1e-9, rel=1e-6)
    rates = model.production_rates(u.reshape(5, 1))
    assert np.all(rates == 0.0)


def test_one_step_rates_zero_reactant():
    assert np.all(one_step_rates(OneStepMechanism(), np.array([0.0]), np.array([10.0])) == 0.0)


def test_forward_backward_rates_independent_scalar_path():
    mech = ThreeSpeciesMechanism()
    t = 8000.0
    kf = mech.forward_rate(np.array([t]))[0]
    kb = mech.backward_rate(np.array([t]))[0]
    # independent scalar evaluation
    kf_ref = 2.9e17 * t**-2 * math.exp(-59750.0 / t)
    z = 1.0e4 / t
    fit = 2.855 + 0.988 * math.log(z) - 6.181 * z - 0.023 * z**2 - 0.001 * z**3
    kb_ref = kf_ref / math.exp(fit)
    assert kf == pytest.approx(kf_ref, rel=1e-12)
    assert kb == pytest.approx(kb_ref, rel=1e-12)


def test_dissociation_split_and_mass_conservation():
    model = ThreeSpeciesEulerModel()
    u = model.from_primitive(RHO_L, 0.0, 1000.0).reshape(5, 1)
    t = model.temperature(u)
    rates = oxygen_dissociation_rates(OXYGEN_DISSOCIATION_SPECIES, ThreeSpeciesMechanism(), u[:3], t)[0]
    mech = ThreeSpeciesMechanism()
    m1, m2, m3 = OXYGEN_DISSOCIATION_SPECIES.molar_masses
    molar_sum = RHO_L[0] / m1 + RHO_L[1] / m2 + RHO_L[2] / m3
    wplus = 2 * m1 * mech.forward_rate(t)[0] * (RHO_L[1] / m2) * molar_sum
    wminus = 2 * m1 * mech.backward_rate(t)[0] * (RHO_L[0] / m1) ** 2 * molar_sum
    assert rates[0, 1] == pytest.approx(wplus, rel=1e-12)
    assert rates[1, 0] == pytest.approx(wminus, rel=1e-12)
    assert rates[2].sum() == 0.0 and rates[:, 2].sum() == 0.0  # inert species
    # net source mass balance: s1 + s2 = 0 by 2*M1 = M2 stoichiometry
    net = rates.sum(axis=1) - rates.sum(axis=0)
    assert abs(net.sum()) <= 1e-16 * np.abs(rates).max()


def test_dissociation_zero_species_one_gives_zero_backward():
    rho = np.array([[0.0], [1e-4], [1e-4]])
    rates = oxygen_dissociation_rates(OXYGEN_DISSOCIATION_SPECIES, ThreeSpeciesMechanism(), rho, np.array([5000.0]))
    assert rates[0, 1, 0] == 0.0  # omega_minus = destruction of absent species 1


def test_energy_round_trip_general():
    table = OXYGEN_DISSOCIATION_SPECIES
    rho = RHO_L.reshape(3, 1)
    e = energy_from_primitive_general(table, rho, np.array([12.0**2]), np.array([1000.0]))
    ke = 0.5 * rho.sum() * 12.0**2
    t = temperature_general(table, rho, np.array([ke]), e)
    p = pressure_general(table, rho, t)
    assert p[0] == pytest.approx(1000.0, rel=1e-10)
