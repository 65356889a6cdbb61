"""Physical configuration of the lattice interferometer and the quantities derived from it.

All values are SI with an explicit reduced Planck constant.
"""
import logging
import math
from typing import Any, Dict, List, Mapping

import attr
from scipy.constants import hbar as HBAR

from lattice_gravimeter.errors import ConfigError, ParamsError

log = logging.getLogger(__name__)

RB87_MASS = 1.44e-25
RB87_WAVELENGTH = 7.85e-7
STANDARD_GRAVITY = 9.8


def recoil_energy(atom_mass: float, wavelength: float) -> float:
    """E_r = 2 pi^2 hbar^2 / (M lambda^2)."""
    return 2.0 * math.pi**2 * HBAR**2 / (atom_mass * wavelength**2)


@attr.s(frozen=True)
class PhysicalParams:
    # Properties
    atom_mass = attr.ib(type=float, converter=float)
    gravity = attr.ib(type=float, converter=float)
    wavelength = attr.ib(type=float, converter=float)
    drive_freq = attr.ib(type=float, converter=float)
    shift_sites = attr.ib(type=int, converter=int)
    hold_time = attr.ib(type=float, converter=float)
    pulse_time = attr.ib(type=float, converter=float)
    depth_up = attr.ib(default=100.0, type=float, converter=float)
    depth_dn = attr.ib(default=100.0, type=float, converter=float)
    transition_freq = attr.ib(default=0.0, type=float, converter=float)
    eps_up = attr.ib(default=0.0, type=float, converter=float)
    eps_dn = attr.ib(default=0.0, type=float, converter=float)

    # Dict representation keys
    DICT_KEY_MASS = "atom_mass"
    DICT_KEY_GRAVITY = "gravity"
    DICT_KEY_WAVELENGTH = "wavelength"
    DICT_KEY_DEPTH_UP = "depth_up"
    DICT_KEY_DEPTH_DN = "depth_dn"
    DICT_KEY_DRIVE = "drive_freq"
    DICT_KEY_DRIVE_ER = "drive_freq_Er"
    DICT_KEY_TRANSITION = "transition_freq"
    DICT_KEY_EPS_UP_J = "eps_up_J"
    DICT_KEY_EPS_UP_ER = "eps_up_Er"
    DICT_KEY_EPS_DN_J = "eps_dn_J"
    DICT_KEY_EPS_DN_ER = "eps_dn_Er"
    DICT_KEY_SHIFT_SITES = "shift_sites"
    DICT_KEY_HOLD = "hold_time"
    DICT_KEY_PULSE = "pulse_time"

    REQUIRED_KEYS = (
        DICT_KEY_MASS,
        DICT_KEY_GRAVITY,
        DICT_KEY_WAVELENGTH,
        DICT_KEY_SHIFT_SITES,
        DICT_KEY_HOLD,
        DICT_KEY_PULSE,
    )
    OPTIONAL_KEYS = (
        DICT_KEY_DEPTH_UP,
        DICT_KEY_DEPTH_DN,
        DICT_KEY_DRIVE,
        DICT_KEY_DRIVE_ER,
        DICT_KEY_TRANSITION,
        DICT_KEY_EPS_UP_J,
        DICT_KEY_EPS_UP_ER,
        DICT_KEY_EPS_DN_J,
        DICT_KEY_EPS_DN_ER,
    )

    @classmethod
    def from_dict(cls, raw_dict: Mapping[str, Any]) -> "PhysicalParams":
        """Build parameters from a flat JSON mapping, energies given either in joules or in recoil units."""
        unknown = sorted(set(raw_dict) - set(cls.REQUIRED_KEYS) - set(cls.OPTIONAL_KEYS))
        if unknown:
            raise ConfigError(f"unknown parameter key '{unknown[0]}'", key=unknown[0])
        for key in cls.REQUIRED_KEYS:
            if key not in raw_dict:
                raise ConfigError(f"missing parameter key '{key}'", key=key)

        try:
            atom_mass = float(raw_dict[cls.DICT_KEY_MASS])
            wavelength = float(raw_dict[cls.DICT_KEY_WAVELENGTH])
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid mass or wavelength: {e}")
        e_r = recoil_energy(atom_mass, wavelength) if atom_mass > 0 and wavelength > 0 else math.nan

        def pick(joule_key: str, recoil_key: str, scale: float, default: float = 0.0) -> float:
            if joule_key in raw_dict and recoil_key in raw_dict:
                raise ConfigError(f"'{joule_key}' and '{recoil_key}' are exclusive", key=recoil_key)
            if recoil_key in raw_dict:
                return float(raw_dict[recoil_key]) * scale
            return float(raw_dict.get(joule_key, default))

        try:
            if cls.DICT_KEY_DRIVE not in raw_dict and cls.DICT_KEY_DRIVE_ER not in raw_dict:
                raise ConfigError(f"missing parameter key '{cls.DICT_KEY_DRIVE}'", key=cls.DICT_KEY_DRIVE)
            return cls(
                atom_mass=atom_mass,
                gravity=raw_dict[cls.DICT_KEY_GRAVITY],
                wavelength=wavelength,
                drive_freq=pick(cls.DICT_KEY_DRIVE, cls.DICT_KEY_DRIVE_ER, e_r / HBAR),
                shift_sites=raw_dict[cls.DICT_KEY_SHIFT_SITES],
                hold_time=raw_dict[cls.DICT_KEY_HOLD],
                pulse_time=raw_dict[cls.DICT_KEY_PULSE],
                depth_up=raw_dict.get(cls.DICT_KEY_DEPTH_UP, 100.0),
                depth_dn=raw_dict.get(cls.DICT_KEY_DEPTH_DN, 100.0),
                transition_freq=raw_dict.get(cls.DICT_KEY_TRANSITION, 0.0),
                eps_up=pick(cls.DICT_KEY_EPS_UP_J, cls.DICT_KEY_EPS_UP_ER, e_r),
                eps_dn=pick(cls.DICT_KEY_EPS_DN_J, cls.DICT_KEY_EPS_DN_ER, e_r),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid parameter value: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            self.DICT_KEY_MASS: self.atom_mass,
            self.DICT_KEY_GRAVITY: self.gravity,
            self.DICT_KEY_WAVELENGTH: self.wavelength,
            self.DICT_KEY_DEPTH_UP: self.depth_up,
            self.DICT_KEY_DEPTH_DN: self.depth_dn,
            self.DICT_KEY_DRIVE: self.drive_freq,
            self.DICT_KEY_TRANSITION: self.transition_freq,
            self.DICT_KEY_EPS_UP_J: self.eps_up,
            self.DICT_KEY_EPS_DN_J: self.eps_dn,
            self.DICT_KEY_SHIFT_SITES: self.shift_sites,
            self.DICT_KEY_HOLD: self.hold_time,
            self.DICT_KEY_PULSE: self.pulse_time,
        }


@attr.s(frozen=True)
class DerivedParams:
    lattice_const = attr.ib(type=float)
    wave_vector = attr.ib(type=float)
    force = attr.ib(type=float)
    recoil_energy = attr.ib(type=float)
    shift_time = attr.ib(type=float)
    total_time = attr.ib(type=float)

    def to_dict(self) -> Dict[str, float]:
        return attr.asdict(self)


def _fatal_errors(p: PhysicalParams) -> List[str]:
    errors = []
    for name, value in attr.asdict(p).items():
        if not math.isfinite(value):
            errors.append(f"{name} must be finite, got {value}")
    if not p.atom_mass > 0:
        errors.append(f"atom_mass must be > 0, got {p.atom_mass}")
    if not p.wavelength > 0:
        errors.append(f"wavelength must be > 0, got {p.wavelength}")
    if not p.drive_freq > 0:
        errors.append(f"drive_freq must be > 0, got {p.drive_freq}")
    if p.shift_sites < 1:
        errors.append(f"shift_sites must be >= 1, got {p.shift_sites}")
    if p.hold_time < 0:
        errors.append(f"hold_time must be >= 0, got {p.hold_time}")
    if p.pulse_time < 0:
        errors.append(f"pulse_time must be >= 0, got {p.pulse_time}")
    if p.gravity < 0:
        errors.append(f"gravity must be >= 0, got {p.gravity}")
    return errors


def derive(p: PhysicalParams) -> DerivedParams:
    """Compute the lattice constant, force, recoil energy and sequence times of a parameter set."""
    bad = [
        f"{name} must be finite and > 0, got {value}"
        for name, value in (("atom_mass", p.atom_mass), ("wavelength", p.wavelength), ("drive_freq", p.drive_freq))
        if not (math.isfinite(value) and value > 0)
    ]
    if bad:
        raise ParamsError(bad)

    shift_time = p.shift_sites * math.pi / p.drive_freq
    return DerivedParams(
        lattice_const=p.wavelength / 2,
        wave_vector=2 * math.pi / p.wavelength,
        force=p.atom_mass * p.gravity,
        recoil_energy=recoil_energy(p.atom_mass, p.wavelength),
        shift_time=shift_time,
        total_time=shift_time + p.hold_time + 2 * p.pulse_time,
    )


def validate(p: PhysicalParams) -> List[str]:
    """Return the non-fatal warnings of a parameter set, raise ParamsError on invariant violations."""
    errors = _fatal_errors(p)
    if errors:
        raise ParamsError(errors)

    warnings = []
    e_r = recoil_energy(p.atom_mass, p.wavelength)
    if HBAR * p.drive_freq >= e_r:
        # Coarse heuristic, no band structure is solved
        warnings.append(
            f"hbar*nu = {HBAR * p.drive_freq / e_r:.3g} E_r >= E_r: the shift may not be adiabatic (Landau-Zener)"
        )
    for warning in warnings:
        log.warning(warning)
    return warnings


def rb87_params(**overrides: Any) -> PhysicalParams:
    """The 87Rb set: M = 1.44e-25 kg, lambda = 785 nm, V = 100 E_r, hbar*nu = 0.5 E_r, L = 50, T_h = 1 s."""
    e_r = recoil_energy(RB87_MASS, RB87_WAVELENGTH)
    values: Dict[str, Any] = dict(
        atom_mass=RB87_MASS,
        gravity=STANDARD_GRAVITY,
        wavelength=RB87_WAVELENGTH,
        drive_freq=0.5 * e_r / HBAR,
        shift_sites=50,
        hold_time=1.0,
        pulse_time=1e-5,
        depth_up=100.0,
        depth_dn=100.0,
    )
    values.update(overrides)
    return PhysicalParams(**values)


def scaled_params(**overrides: Any) -> PhysicalParams:
    """87Rb atoms with a one-site shift and a millisecond sequence, total phase of order 10 rad."""
    values: Dict[str, Any] = dict(
        atom_mass=RB87_MASS,
        gravity=STANDARD_GRAVITY,
        wavelength=RB87_WAVELENGTH,
        drive_freq=math.pi / 2e-4,
        shift_sites=1,
        hold_time=8e-4,
        pulse_time=1e-5,
    )
    values.update(overrides)
    return PhysicalParams(**values)
