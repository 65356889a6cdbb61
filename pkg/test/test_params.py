import math

import attr
import pytest

from lattice_gravimeter.errors import ConfigError, ParamsError
from lattice_gravimeter.lattice.params import (
    HBAR,
    PhysicalParams,
    derive,
    rb87_params,
    recoil_energy,
    validate,
)


def test_hbar_value():
    assert HBAR == pytest.approx(1.054571817e-34, rel=1e-12)


def test_rb87_recoil_energy(rb87):
    d = derive(rb87)
    assert d.recoil_energy == pytest.approx(2.47e-30, rel=0.01)


def test_rb87_lattice_constant(rb87):
    assert derive(rb87).lattice_const == 3.925e-7


def test_rb87_shift_time(rb87):
    assert derive(rb87).shift_time == pytest.approx(13.4e-3, rel=0.01)


def test_total_time_is_exact_sum(rb87):
    d = derive(rb87)
    assert d.total_time == d.shift_time + rb87.hold_time + 2 * rb87.pulse_time


def test_derive_is_deterministic(rb87):
    assert derive(rb87) == derive(rb87_params())


def test_doubling_wavelength():
    base = derive(rb87_params())
    doubled = derive(rb87_params(wavelength=2 * 7.85e-7))
    assert doubled.recoil_energy == pytest.approx(base.recoil_energy / 4, rel=1e-14)
    assert doubled.lattice_const == 2 * base.lattice_const


@pytest.mark.parametrize("field", ["atom_mass", "wavelength", "drive_freq"])
@pytest.mark.parametrize("value", [0.0, -1.0, math.nan, math.inf])
def test_derive_rejects_bad_values(field, value):
    with pytest.raises(ParamsError):
        derive(rb87_params(**{field: value}))


def test_validate_rb87_no_warnings(rb87):
    assert validate(rb87) == []


def test_validate_adiabaticity_warning():
    e_r = recoil_energy(1.44e-25, 7.85e-7)
    warnings = validate(rb87_params(drive_freq=2 * e_r / HBAR))
    assert len(warnings) == 1
    assert "adiabatic" in warnings[0]


def test_validate_zero_shift_sites_is_fatal():
    with pytest.raises(ParamsError) as e:
        validate(rb87_params(shift_sites=0))
    assert any("shift_sites" in error for error in e.value.errors)


def test_validate_collects_every_error():
    with pytest.raises(ParamsError) as e:
        validate(rb87_params(atom_mass=-1.0, hold_time=-1.0))
    assert len(e.value.errors) == 2


def test_zero_gravity_is_valid():
    assert validate(rb87_params(gravity=0.0)) == []


class TestFromDict:
    def raw(self, **overrides):
        raw = {
            "atom_mass": 1.44e-25,
            "gravity": 9.8,
            "wavelength": 7.85e-7,
            "drive_freq_Er": 0.5,
            "shift_sites": 50,
            "hold_time": 1.0,
            "pulse_time": 1e-5,
        }
        raw.update(overrides)
        return raw

    def test_recoil_units(self, rb87):
        p = PhysicalParams.from_dict(self.raw())
        assert p.drive_freq == pytest.approx(rb87.drive_freq, rel=1e-14)

    def test_energy_defaults(self):
        p = PhysicalParams.from_dict(self.raw())
        assert (p.eps_up, p.eps_dn, p.transition_freq) == (0.0, 0.0, 0.0)
        assert (p.depth_up, p.depth_dn) == (100.0, 100.0)

    def test_energies_in_recoil_units(self):
        p = PhysicalParams.from_dict(self.raw(eps_up_Er=0.25, eps_dn_J=1e-31))
        assert p.eps_up == pytest.approx(0.25 * recoil_energy(1.44e-25, 7.85e-7), rel=1e-14)
        assert p.eps_dn == 1e-31

    def test_missing_key_is_named(self):
        raw = self.raw()
        del raw["hold_time"]
        with pytest.raises(ConfigError) as e:
            PhysicalParams.from_dict(raw)
        assert e.value.key == "hold_time"

    def test_missing_drive(self):
        raw = self.raw()
        del raw["drive_freq_Er"]
        with pytest.raises(ConfigError) as e:
            PhysicalParams.from_dict(raw)
        assert e.value.key == "drive_freq"

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError) as e:
            PhysicalParams.from_dict(self.raw(onsite_up=1.0))
        assert e.value.key == "onsite_up"

    def test_joule_and_recoil_are_exclusive(self):
        with pytest.raises(ConfigError):
            PhysicalParams.from_dict(self.raw(eps_up_J=0.0, eps_up_Er=0.0))

    def test_round_trip(self, rb87):
        p = attr.evolve(rb87, eps_up=1e-31, transition_freq=3.0)
        assert PhysicalParams.from_dict(p.to_dict()) == p
