"""Brute-force simulation of the interferometer sequence in the bosonic Fock space of ten (site, spin) modes.

Two independent evaluation paths are provided:

* ``simulate`` + ``measure`` evolve the full many-body state vector, one stage at a time.
* ``first_quantized_moments`` composes the 10x10 single-particle unitary of the sequence and pulls the measured
  one- and two-body operators back onto the two initial modes.
"""
import json
import logging
import math
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import attr
import numpy as np
import pandas as pd
from scipy import linalg, sparse

from lattice_gravimeter.config import Config
from lattice_gravimeter.errors import OracleCapError, ParamsError, SimulationError, StateError
from lattice_gravimeter.lattice.params import HBAR, PhysicalParams, derive
from lattice_gravimeter.lattice.phasebook import total_phase
from lattice_gravimeter.spin import analytic
from lattice_gravimeter.spin.analytic import MeasurementMoments
from lattice_gravimeter.spin.dicke import SymmetricSpinState, spin_operators

log = logging.getLogger(__name__)

# Site labels in units of the shift distance L
SITES = (-2, -1, 0, 1, 2)
N_MODES = 2 * len(SITES)

UNITARITY_TOLERANCE = 1e-9


class Spin(Enum):
    UP = "up"
    DN = "dn"


@attr.s(frozen=True)
class ModeIndex:
    site = attr.ib(type=int)
    spin = attr.ib(type=Spin, converter=Spin)

    @site.validator
    def _check_site(self, attribute, value):
        if value not in SITES:
            raise ValueError(f"site must be one of {SITES}, got {value}")

    @property
    def index(self) -> int:
        return mode_index(self.site, self.spin)


def mode_index(site: int, spin: Spin) -> int:
    return 2 * (site - SITES[0]) + (0 if Spin(spin) is Spin.UP else 1)


MODES = tuple(ModeIndex(site, spin) for site in SITES for spin in Spin)
UP_MODES = np.array([mode_index(site, Spin.UP) for site in SITES])
DN_MODES = np.array([mode_index(site, Spin.DN) for site in SITES])
SITE_OF_MODE = np.array([mode.site for mode in MODES], dtype=float)
CENTER_MODES = [mode_index(0, Spin.UP), mode_index(0, Spin.DN)]


@attr.s(frozen=True)
class SequenceOptions:
    dislocation_energy = attr.ib(default=0.0, type=float, converter=float)
    hold_jitter = attr.ib(default=0.0, type=float, converter=float)
    pulse_jitter = attr.ib(default=0.0, type=float, converter=float)
    readout_phase = attr.ib(default=0.0, type=float, converter=float)

    def __attrs_post_init__(self):
        for name, value in attr.asdict(self).items():
            if not math.isfinite(value):
                raise ParamsError([f"sequence option {name} must be finite, got {value}"])

    def to_dict(self) -> Dict[str, float]:
        return attr.asdict(self)


###################################################################################################
# Fock basis
###################################################################################################


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """Occupation vectors with the given total, in lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class FockBasis:
    """All occupations of N bosons over the modes, enumerated lexicographically."""

    def __init__(self, n_particles: int, n_modes: int = N_MODES):
        self.logger = logging.getLogger(self.__class__.__name__)
        self.n_particles = n_particles
        self.n_modes = n_modes
        self.occupations = np.array(list(_compositions(n_particles, n_modes)), dtype=np.int64)
        self.index = {tuple(occ): k for k, occ in enumerate(self.occupations.tolist())}
        self.logger.debug(f"Fock basis of {n_particles} bosons in {n_modes} modes: dimension {self.dim}")

    @property
    def dim(self) -> int:
        return len(self.occupations)

    def lookup(self, occupations: np.ndarray) -> np.ndarray:
        """Basis indices of occupation rows, -1 where a row is not a basis state."""
        return np.array([self.index.get(tuple(occ), -1) for occ in occupations.tolist()], dtype=np.int64)

    def one_body(self, i: int, j: int) -> sparse.csr_matrix:
        """a_i^dagger a_j as a sparse matrix."""
        occ = self.occupations
        sources = np.nonzero(occ[:, j] > 0)[0]
        targets_occ = occ[sources].copy()
        targets_occ[:, j] -= 1
        targets_occ[:, i] += 1
        if i == j:
            amps = occ[sources, j].astype(float)
        else:
            amps = np.sqrt(occ[sources, j] * targets_occ[:, i].astype(float))
        targets = self.lookup(targets_occ)
        return sparse.csr_matrix((amps, (targets, sources)), shape=(self.dim, self.dim), dtype=complex)


@lru_cache(maxsize=None)
def fock_basis(n_particles: int) -> FockBasis:
    return FockBasis(n_particles)


@attr.s(frozen=True, eq=False)
class FockState:
    n_particles = attr.ib(type=int)
    amplitudes = attr.ib(type=np.ndarray, converter=lambda a: np.array(a, dtype=complex))

    def __attrs_post_init__(self):
        if self.amplitudes.shape != (fock_basis(self.n_particles).dim,):
            raise StateError(
                f"expected {fock_basis(self.n_particles).dim} amplitudes for N = {self.n_particles}, "
                f"got shape {self.amplitudes.shape}"
            )

    @property
    def basis(self) -> FockBasis:
        return fock_basis(self.n_particles)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


###################################################################################################
# Stage operators
###################################################################################################


@lru_cache(maxsize=None)
def _site_rotation(n_bosons: int) -> np.ndarray:
    """exp(i pi/2 J_y) on n bosons sharing one site, indexed by the number of spin-up bosons."""
    if n_bosons == 0:
        return np.ones((1, 1), dtype=complex)
    _, j_y, _ = spin_operators(n_bosons)
    return linalg.expm(0.5j * math.pi * j_y.toarray())


@lru_cache(maxsize=None)
def _pulse_factors(n_particles: int) -> Tuple[sparse.csr_matrix, ...]:
    """Many-body pi/2 pulse as one sparse factor per site, each rotating the bosons of that site only."""
    basis = fock_basis(n_particles)
    factors = []
    for site in range(len(SITES)):
        up_mode, dn_mode = 2 * site, 2 * site + 1
        rows: List[int] = []
        cols: List[int] = []
        values: List[complex] = []
        for col, occ in enumerate(basis.occupations.tolist()):
            up, dn = occ[up_mode], occ[dn_mode]
            column = _site_rotation(up + dn)[:, up]
            for m in range(up + dn + 1):
                occ[up_mode], occ[dn_mode] = m, up + dn - m
                rows.append(basis.index[tuple(occ)])
                cols.append(col)
                values.append(column[m])
        factors.append(sparse.csr_matrix((values, (rows, cols)), shape=(basis.dim, basis.dim)))
    log.debug(f"Pulse factors N={n_particles}: {sum(f.nnz for f in factors)} non-zero elements")
    return tuple(factors)


def _apply_pulse(n_particles: int, amps: np.ndarray) -> np.ndarray:
    for factor in _pulse_factors(n_particles):
        amps = factor @ amps
    return amps


def _shifted_occupations(occupations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Spin-up moves one site down, spin-down one site up; second array flags rows leaving the window."""
    shifted = np.zeros_like(occupations)
    shifted[:, UP_MODES[:-1]] = occupations[:, UP_MODES[1:]]
    shifted[:, DN_MODES[1:]] = occupations[:, DN_MODES[:-1]]
    leaving = (occupations[:, UP_MODES[0]] > 0) | (occupations[:, DN_MODES[-1]] > 0)
    return shifted, leaving


@lru_cache(maxsize=None)
def _shift_targets(n_particles: int) -> np.ndarray:
    basis = fock_basis(n_particles)
    shifted, leaving = _shifted_occupations(basis.occupations)
    targets = basis.lookup(shifted)
    targets[leaving] = -1
    return targets


def _shift_mode_phases(p: PhysicalParams, t_shift: float, rate: float) -> np.ndarray:
    """Per-mode phase of a shift leg, indexed by the mode before the move."""
    phases = np.empty(N_MODES)
    phases[UP_MODES] = -(p.eps_up + HBAR * p.transition_freq / 2) * t_shift / HBAR
    phases[DN_MODES] = -(p.eps_dn - HBAR * p.transition_freq / 2) * t_shift / HBAR
    # Gravitational phase at the mean site occupied during the move
    phases[UP_MODES] += (np.array(SITES) - 0.5) * rate * t_shift
    phases[DN_MODES] += (np.array(SITES) + 0.5) * rate * t_shift
    return phases


def _sequence_angles(p: PhysicalParams, opt: SequenceOptions) -> Dict[str, float]:
    d = derive(p)
    hold_time = p.hold_time + opt.hold_jitter
    return dict(
        rate=d.force * p.shift_sites * d.lattice_const / HBAR,
        shift_time=d.shift_time,
        pulse_time=p.pulse_time + opt.pulse_jitter,
        hold_time=hold_time,
        xi=(p.eps_up - p.eps_dn + HBAR * p.transition_freq + 2 * opt.dislocation_energy) * hold_time / (2 * HBAR),
    )


def effective_phase(p: PhysicalParams, opt: SequenceOptions) -> float:
    """Total phase the sequence realizes, jitters and readout phase included."""
    jittered = attr.evolve(p, hold_time=p.hold_time + opt.hold_jitter, pulse_time=p.pulse_time + opt.pulse_jitter)
    return total_phase(jittered) + opt.readout_phase


def effective_xi(p: PhysicalParams, opt: SequenceOptions) -> float:
    return _sequence_angles(p, opt)["xi"]


def stage_phases(p: PhysicalParams, opt: SequenceOptions) -> List[Tuple[str, np.ndarray]]:
    """Ordered (stage, per-mode phase) list; shift and pulse stages are followed by their mode operation."""
    a = _sequence_angles(p, opt)
    shift = _shift_mode_phases(p, a["shift_time"], a["rate"])
    pulse = SITE_OF_MODE * a["rate"] * a["pulse_time"]
    hold = SITE_OF_MODE * a["rate"] * a["hold_time"]
    hold[UP_MODES] -= a["xi"]
    hold[DN_MODES] += a["xi"]
    readout = np.zeros(N_MODES)
    readout[UP_MODES] = opt.readout_phase / 2
    readout[DN_MODES] = -opt.readout_phase / 2
    return [
        ("shift1", shift),
        ("pulse1", pulse),
        ("hold", hold),
        ("pulse2", pulse),
        ("shift2", shift),
        ("readout", readout),
        ("pulse3", pulse),
    ]


###################################################################################################
# Many-body path
###################################################################################################


def embed(
    s: SymmetricSpinState, cap: int = Config.ORACLE_CAP, norm_tolerance: float = Config.NORM_TOLERANCE
) -> FockState:
    """Place n particles in (site 0, up) and N - n in (site 0, dn) with amplitude c[n]."""
    if s.n_particles > cap:
        raise OracleCapError(s.n_particles, cap)
    s.check_normalized(norm_tolerance)
    basis = fock_basis(s.n_particles)
    up, dn = CENTER_MODES
    amplitudes = np.zeros(basis.dim, dtype=complex)
    for n, coeff in enumerate(s.coeffs):
        occ = [0] * N_MODES
        occ[up], occ[dn] = n, s.n_particles - n
        amplitudes[basis.index[tuple(occ)]] = coeff
    return FockState(n_particles=s.n_particles, amplitudes=amplitudes)


def _apply_stage(f: FockState, stage: str, phases: np.ndarray) -> np.ndarray:
    basis = f.basis
    amps = f.amplitudes * np.exp(1j * (basis.occupations @ phases))
    if stage.startswith("pulse"):
        return _apply_pulse(f.n_particles, amps)
    if stage.startswith("shift"):
        targets = _shift_targets(f.n_particles)
        stranded = targets < 0
        if np.any(np.abs(amps[stranded]) > 1e-12):
            raise SimulationError(stage, "amplitude would leave the five-site window")
        moved = np.zeros_like(amps)
        moved[targets[~stranded]] = amps[~stranded]
        return moved
    return amps


def simulate(
    p: PhysicalParams,
    s: SymmetricSpinState,
    opt: Optional[SequenceOptions] = None,
    cap: int = Config.ORACLE_CAP,
    norm_tolerance: float = Config.NORM_TOLERANCE,
) -> FockState:
    """Run shift, pulse, hold, pulse, shift, pulse on the embedded state."""
    opt = opt or SequenceOptions()
    f = embed(s, cap=cap, norm_tolerance=norm_tolerance)
    norm = f.norm
    for stage, phases in stage_phases(p, opt):
        amps = _apply_stage(f, stage, phases)
        if not np.all(np.isfinite(amps)):
            raise SimulationError(stage, "non-finite amplitude")
        f = FockState(n_particles=f.n_particles, amplitudes=amps)
        drift = abs(f.norm - norm)
        log.debug(f"Stage {stage}: norm {f.norm:.17g} (drift {drift:.3g})")
        if drift > UNITARITY_TOLERANCE:
            raise SimulationError(stage, f"norm drifted by {drift:.3g}")
    return f


def _site_spin(f: FockState) -> np.ndarray:
    """J_z of every site for every basis state, shape (dim, 5)."""
    occ = f.basis.occupations
    return (occ[:, UP_MODES] - occ[:, DN_MODES]) / 2.0


def site_moments(f: FockState) -> pd.DataFrame:
    """Per-site mean and second moment of J_z."""
    probabilities = np.abs(f.amplitudes) ** 2
    spin = _site_spin(f)
    mean = probabilities @ spin
    second = probabilities @ spin**2
    return pd.DataFrame({"site": list(SITES), "mean": mean, "second": second, "variance": second - mean**2})


def measure(f: FockState) -> MeasurementMoments:
    """Moments of the spin population difference in the up/dn basis; the visibility needs a phase reference."""
    probabilities = np.abs(f.amplitudes) ** 2
    spin = _site_spin(f)
    center = SITES.index(0)
    total = spin.sum(axis=1)
    mean_global = float(probabilities @ total)
    mean_local = float(probabilities @ spin[:, center])
    second_global = float(probabilities @ total**2)
    second_local = float(probabilities @ spin[:, center] ** 2)
    return MeasurementMoments(
        n_particles=f.n_particles,
        mean_global=mean_global,
        mean_local=mean_local,
        second_global=second_global,
        second_local=second_local,
        second_outer_minus=float(probabilities @ spin[:, 0] ** 2),
        second_outer_plus=float(probabilities @ spin[:, -1] ** 2),
        var_global=max(second_global - mean_global**2, 0.0),
        var_local=max(second_local - mean_local**2, 0.0),
        visibility=math.nan,
    )


def _with_visibility(
    p: PhysicalParams,
    s: SymmetricSpinState,
    opt: SequenceOptions,
    run: Callable[[SequenceOptions], MeasurementMoments],
) -> MeasurementMoments:
    """Fill in the visibility from the two readout quadratures of the fringe.

    The mean is cos^2(xi) Re[S exp(-i phi)], so the quadratures at phi and phi + pi/2 give cos^2(xi) S back.
    """
    in_phase = run(opt)
    quadrature = run(attr.evolve(opt, readout_phase=opt.readout_phase + math.pi / 2))
    coherence = complex(in_phase.mean_global, quadrature.mean_global) * np.exp(1j * effective_phase(p, opt))
    envelope = 2 / s.n_particles
    if abs(coherence.imag) <= analytic.NONSYMMETRIC_TOLERANCE * abs(coherence):
        return attr.evolve(in_phase, visibility=envelope * coherence.real, nonsymmetric=False)
    return attr.evolve(in_phase, visibility=envelope * abs(coherence), nonsymmetric=True)


def oracle_moments(
    p: PhysicalParams,
    s: SymmetricSpinState,
    opt: Optional[SequenceOptions] = None,
    cap: int = Config.ORACLE_CAP,
    norm_tolerance: float = Config.NORM_TOLERANCE,
) -> MeasurementMoments:
    """Moments of the simulated final state, visibility included."""
    return _with_visibility(
        p, s, opt or SequenceOptions(), lambda o: measure(simulate(p, s, o, cap=cap, norm_tolerance=norm_tolerance))
    )


def fringe(
    p: PhysicalParams,
    s: SymmetricSpinState,
    offsets: Sequence[float],
    opt: Optional[SequenceOptions] = None,
    cap: int = Config.ORACLE_CAP,
) -> np.ndarray:
    """Simulated mean J_z with the readout phase advanced by each offset.

    The readout phase is a collective z rotation ahead of the last pulse, so the mean is exactly sinusoidal in it
    and two simulated quadratures fix the whole curve.
    """
    opt = opt or SequenceOptions()
    in_phase = measure(simulate(p, s, opt, cap=cap)).mean_global
    quadrature = measure(
        simulate(p, s, attr.evolve(opt, readout_phase=opt.readout_phase + math.pi / 2), cap=cap)
    ).mean_global
    offsets = np.asarray(offsets, dtype=float)
    return in_phase * np.cos(offsets) + quadrature * np.sin(offsets)


def options_for_angles(p: PhysicalParams, xi: float, phi: float) -> Tuple[PhysicalParams, SequenceOptions]:
    """Parameters and options realizing the hold angle xi and the total phase phi.

    xi is set through the spin-up energy, phi through the readout phase.
    """
    if not p.hold_time > 0:
        raise ParamsError([f"hold_time must be > 0 to set xi, got {p.hold_time}"])
    eps_up = p.eps_dn - HBAR * p.transition_freq + 2 * HBAR * xi / p.hold_time
    tuned = attr.evolve(p, eps_up=eps_up)
    return tuned, SequenceOptions(readout_phase=phi - total_phase(tuned))


###################################################################################################
# Single-particle path
###################################################################################################


def _shift_matrix() -> np.ndarray:
    """Single-particle shift; modes pushed off the window wrap around and are never populated."""
    matrix = np.zeros((N_MODES, N_MODES))
    for k in range(len(SITES)):
        matrix[UP_MODES[k - 1], UP_MODES[k]] = 1
        matrix[DN_MODES[(k + 1) % len(SITES)], DN_MODES[k]] = 1
    return matrix


def _pulse_matrix() -> np.ndarray:
    c = s = math.sqrt(0.5)
    return linalg.block_diag(*([np.array([[c, s], [-s, c]])] * len(SITES)))


def single_particle_unitary(p: PhysicalParams, opt: Optional[SequenceOptions] = None) -> np.ndarray:
    """10x10 unitary of the whole sequence acting on one particle, columns are input modes."""
    opt = opt or SequenceOptions()
    unitary = np.eye(N_MODES, dtype=complex)
    for stage, phases in stage_phases(p, opt):
        step = np.diag(np.exp(1j * phases))
        if stage.startswith("pulse"):
            step = _pulse_matrix() @ step
        elif stage.startswith("shift"):
            step = _shift_matrix() @ step
        unitary = step @ unitary
    return unitary


def _center_operator(matrix: np.ndarray, n_particles: int) -> sparse.csr_matrix:
    """sum_ij A_ij a_i^dagger a_j over the two site-0 modes, in the Dicke basis."""
    j_x, j_y, _ = spin_operators(n_particles)
    j_plus = j_x + 1j * j_y
    n_up = sparse.diags(np.arange(n_particles + 1, dtype=float), 0, dtype=complex)
    n_dn = sparse.diags(n_particles - np.arange(n_particles + 1, dtype=float), 0, dtype=complex)
    return (
        matrix[0, 0] * n_up + matrix[0, 1] * j_plus + matrix[1, 0] * j_plus.getH() + matrix[1, 1] * n_dn
    ).tocsr()


def _pulled_back_moments(unitary: np.ndarray, observable: np.ndarray, s: SymmetricSpinState) -> Tuple[float, float]:
    """<O> and <O^2> for the one-body observable O after the single-particle unitary."""
    pulled = unitary.conj().T @ observable @ unitary
    center = np.ix_(CENTER_MODES, CENTER_MODES)
    restricted = pulled[center]
    c = np.asarray(s.coeffs)
    op_c = _center_operator(restricted, s.n_particles) @ c
    mean = float(np.vdot(c, op_c).real)
    # O^2 = :O^2: + one-body(O O), the one-body part runs over all ten modes
    contraction = _center_operator(restricted @ restricted, s.n_particles) @ c
    one_body = _center_operator((pulled @ pulled)[center], s.n_particles) @ c
    second = float(np.vdot(op_c, op_c).real - np.vdot(c, contraction).real + np.vdot(c, one_body).real)
    return mean, second


def _site_observable(sites: Sequence[int]) -> np.ndarray:
    diagonal = np.zeros(N_MODES)
    for site in sites:
        diagonal[mode_index(site, Spin.UP)] = 0.5
        diagonal[mode_index(site, Spin.DN)] = -0.5
    return np.diag(diagonal)


def first_quantized_moments(
    p: PhysicalParams,
    s: SymmetricSpinState,
    opt: Optional[SequenceOptions] = None,
    norm_tolerance: float = Config.NORM_TOLERANCE,
) -> MeasurementMoments:
    """Moments from the single-particle unitary and one-/two-body contractions, no Fock space involved."""
    s.check_normalized(norm_tolerance)

    def run(o: SequenceOptions) -> MeasurementMoments:
        unitary = single_particle_unitary(p, o)
        mean_global, second_global = _pulled_back_moments(unitary, _site_observable(SITES), s)
        mean_local, second_local = _pulled_back_moments(unitary, _site_observable([0]), s)
        _, second_minus = _pulled_back_moments(unitary, _site_observable([SITES[0]]), s)
        _, second_plus = _pulled_back_moments(unitary, _site_observable([SITES[-1]]), s)
        return MeasurementMoments(
            n_particles=s.n_particles,
            mean_global=mean_global,
            mean_local=mean_local,
            second_global=second_global,
            second_local=second_local,
            second_outer_minus=second_minus,
            second_outer_plus=second_plus,
            var_global=max(second_global - mean_global**2, 0.0),
            var_local=max(second_local - mean_local**2, 0.0),
            visibility=math.nan,
        )

    return _with_visibility(p, s, opt or SequenceOptions(), run)


###################################################################################################
# Fixtures
###################################################################################################


def dump_state(f: FockState, path: str) -> None:
    """Write the non-zero amplitudes with their occupations as JSON."""
    occupied = np.nonzero(f.amplitudes)[0]
    payload = {
        "n_particles": f.n_particles,
        "occupations": f.basis.occupations[occupied].tolist(),
        "amplitudes": [[float(a.real), float(a.imag)] for a in f.amplitudes[occupied]],
    }
    with open(path, "w") as fp:
        json.dump(payload, fp, indent=1)


def load_state(path: str) -> FockState:
    with open(path) as fp:
        payload = json.load(fp)
    basis = fock_basis(int(payload["n_particles"]))
    amplitudes = np.zeros(basis.dim, dtype=complex)
    for occ, (re, im) in zip(payload["occupations"], payload["amplitudes"]):
        amplitudes[basis.index[tuple(occ)]] = complex(re, im)
    return FockState(n_particles=basis.n_particles, amplitudes=amplitudes)
