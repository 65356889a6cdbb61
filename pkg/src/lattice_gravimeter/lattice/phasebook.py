"""Phases accumulated along the shift / pulse / hold / pulse / shift / pulse sequence.

Phases are kept unwrapped; wrapping only happens where a trigonometric function is evaluated.
"""
import logging
import math
from enum import Enum
from typing import Dict, Optional, Tuple

import attr

from lattice_gravimeter.errors import ParamsError
from lattice_gravimeter.lattice.params import HBAR, DerivedParams, PhysicalParams, derive

log = logging.getLogger(__name__)


class Leg(Enum):
    FIRST = "first"
    SECOND = "second"


@attr.s(frozen=True)
class PhaseLedger:
    phi1_up = attr.ib(type=float)
    phi1_dn = attr.ib(type=float)
    phi2_left = attr.ib(type=float)
    phi2_right = attr.ib(type=float)
    phi3_left = attr.ib(type=float)
    phi3_right = attr.ib(type=float)
    phi4_up = attr.ib(type=float)
    phi4_dn = attr.ib(type=float)
    phi5_up = attr.ib(type=float)
    phi5_dn = attr.ib(type=float)
    theta1_r = attr.ib(type=float)
    theta1_l = attr.ib(type=float)
    theta2_r = attr.ib(type=float)
    theta2_l = attr.ib(type=float)
    theta3_dn = attr.ib(type=float)
    theta3_up = attr.ib(type=float)
    theta4_dn = attr.ib(type=float)
    theta4_up = attr.ib(type=float)
    xi = attr.ib(type=float)
    eta = attr.ib(type=float)
    phi_total = attr.ib(type=float)

    def to_dict(self) -> Dict[str, float]:
        return attr.asdict(self)


def _gravity_rate(p: PhysicalParams, d: DerivedParams) -> float:
    """F L d / hbar, the phase rate of a displacement of one leg (L sites)."""
    return d.force * p.shift_sites * d.lattice_const / HBAR


def shift_phases(p: PhysicalParams, d: DerivedParams, leg: Leg) -> Tuple[float, float]:
    """(phi_up, phi_dn) of a spin-dependent shift leg of duration T_s."""
    t_s = d.shift_time
    half_fld = d.force * p.shift_sites * d.lattice_const / 2
    half_w0 = HBAR * p.transition_freq / 2
    sign = 1.0 if Leg(leg) is Leg.FIRST else -1.0
    phi_up = -(p.eps_up + half_w0 + sign * half_fld) * t_s / HBAR
    phi_dn = -(p.eps_dn - half_w0 - sign * half_fld) * t_s / HBAR
    return phi_up, phi_dn


def pulse_phases(p: PhysicalParams, d: DerivedParams, which: Leg) -> Tuple[float, float]:
    """(phi2_left, phi2_right) of the first pulse or (phi4_up, phi4_dn) of the second one.

    Only the gravitational term enters during a pulse (rotating frame); phi4_dn carries the -pi the rotation
    puts on the lower path.
    """
    phase = _gravity_rate(p, d) * p.pulse_time
    if Leg(which) is Leg.FIRST:
        return phase, -phase
    return phase, -phase - math.pi


def hold_phases(p: PhysicalParams, d: DerivedParams) -> Tuple[float, float, float]:
    """(phi3_left, phi3_right, xi) of the hold."""
    phi3_left = _gravity_rate(p, d) * p.hold_time
    xi = (p.eps_up - p.eps_dn + HBAR * p.transition_freq) * p.hold_time / (2 * HBAR)
    return phi3_left, -phi3_left, xi


def ledger(p: PhysicalParams) -> PhaseLedger:
    """Chain every phase of the sequence, as accumulated by the two paths."""
    d = derive(p)
    phi1_up, phi1_dn = shift_phases(p, d, Leg.FIRST)
    phi2_left, phi2_right = pulse_phases(p, d, Leg.FIRST)
    phi3_left, phi3_right, xi = hold_phases(p, d)
    phi4_up, phi4_dn = pulse_phases(p, d, Leg.SECOND)
    phi5_up, phi5_dn = shift_phases(p, d, Leg.SECOND)

    # Right path: spin-up shifted to -L, left path: spin-down shifted to +L
    theta1_r = phi1_up + phi2_right
    theta1_l = phi1_dn + phi2_left
    theta2_r = theta1_r + phi3_right
    theta2_l = theta1_l + phi3_left
    theta3_dn = theta2_r + phi4_dn
    theta3_up = theta2_l + phi4_up
    theta4_dn = theta3_dn + phi5_dn
    theta4_up = theta3_up + phi5_up

    eta = -(p.eps_up - p.eps_dn + HBAR * p.transition_freq + d.force * p.shift_sites * d.lattice_const) * (
        d.shift_time / HBAR
    )
    return PhaseLedger(
        phi1_up=phi1_up,
        phi1_dn=phi1_dn,
        phi2_left=phi2_left,
        phi2_right=phi2_right,
        phi3_left=phi3_left,
        phi3_right=phi3_right,
        phi4_up=phi4_up,
        phi4_dn=phi4_dn,
        phi5_up=phi5_up,
        phi5_dn=phi5_dn,
        theta1_r=theta1_r,
        theta1_l=theta1_l,
        theta2_r=theta2_r,
        theta2_l=theta2_l,
        theta3_dn=theta3_dn,
        theta3_up=theta3_up,
        theta4_dn=theta4_dn,
        theta4_up=theta4_up,
        xi=xi,
        eta=eta,
        phi_total=theta4_up - theta4_dn,
    )


def total_phase(p: PhysicalParams) -> float:
    return ledger(p).phi_total


def closed_form_phase(p: PhysicalParams) -> float:
    """2 M g L d (T_s + T_h + 2 T_pi/2) / hbar + pi."""
    d = derive(p)
    return 2 * d.force * p.shift_sites * d.lattice_const * d.total_time / HBAR + math.pi


def phase_sensitivity(p: PhysicalParams) -> float:
    """d(phi)/dg = 2 M L d T_tot / hbar."""
    d = derive(p)
    return 2 * p.atom_mass * p.shift_sites * d.lattice_const * d.total_time / HBAR


def wrap_phase(phase: float) -> float:
    """Map a phase into (-pi, pi]."""
    wrapped = math.remainder(phase, 2 * math.pi)
    return math.pi if wrapped == -math.pi else wrapped


def wrapped_phase(p: PhysicalParams) -> float:
    return wrap_phase(total_phase(p))


def with_hold_for_phase(p: PhysicalParams, target: float, phase: Optional[float] = None) -> PhysicalParams:
    """Smallest hold time >= p.hold_time whose total phase is congruent to target modulo 2 pi."""
    d = derive(p)
    rate = 2 * d.force * p.shift_sites * d.lattice_const / HBAR
    if not rate > 0:
        raise ParamsError(["gravity must be > 0 to tune the total phase with the hold time"])
    current = closed_form_phase(p) if phase is None else phase
    missing = (target - current) % (2 * math.pi)
    hold_time = p.hold_time + missing / rate
    log.debug(f"Hold time {p.hold_time:.12g} s -> {hold_time:.12g} s for phase {target:.6g} mod 2pi")
    return attr.evolve(p, hold_time=hold_time)
