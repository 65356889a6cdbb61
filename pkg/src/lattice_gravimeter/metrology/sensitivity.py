"""Gravity uncertainty of the interferometer and the scans built on it."""
import logging
import math
from typing import Any, Iterable, Optional, Sequence, Tuple

import attr
import numpy as np
import pandas as pd
from scipy import stats

from lattice_gravimeter.config import Config
from lattice_gravimeter.errors import DegenerateVisibilityError, FitError, ParamsError
from lattice_gravimeter.lattice import oracle
from lattice_gravimeter.lattice.params import HBAR, PhysicalParams, derive
from lattice_gravimeter.lattice.phasebook import ledger, total_phase, wrap_phase
from lattice_gravimeter.spin import analytic
from lattice_gravimeter.spin.dicke import StateKind, SymmetricSpinState, optimal_oat, prepare_state

log = logging.getLogger(__name__)

# Operating point: steepest fringe slope and full visibility
PHI_STAR = math.pi / 2
XI_STAR = 0.0

MIN_VISIBILITY = 1e-12


@attr.s(frozen=True)
class SensitivityReport:
    chi = attr.ib(type=float)
    dg_over_g = attr.ib(type=float)
    phi_star = attr.ib(type=float)
    xi_star = attr.ib(type=float)
    n_particles = attr.ib(type=int)


@attr.s(frozen=True)
class ScalingFit:
    exponent = attr.ib(type=float)
    intercept = attr.ib(type=float)
    r_squared = attr.ib(type=float)
    n_range = attr.ib(type=Tuple[int, int])

    def to_dict(self):
        return attr.asdict(self)


def chi(s: SymmetricSpinState, xi: float = XI_STAR, phi: float = PHI_STAR, local: bool = False) -> float:
    """Squeezing parameter 2 dJ_z / (V sqrt(N)); chi = 1 for a coherent state."""
    m = analytic.moments(s, xi, phi)
    if abs(m.visibility) < MIN_VISIBILITY:
        raise DegenerateVisibilityError(f"visibility {m.visibility:.3g} at xi={xi:.6g}, phi={phi:.6g}")
    spread = m.std_local if local else m.std_global
    return 2 * spread / (abs(m.visibility) * math.sqrt(s.n_particles))


def _gravity_lever(p: PhysicalParams) -> float:
    """2 M g L d T_tot / hbar, the phase per unit relative gravity change."""
    if not p.gravity > 0:
        raise ParamsError([f"gravity must be > 0 for a relative uncertainty, got {p.gravity}"])
    d = derive(p)
    return 2 * d.force * p.shift_sites * d.lattice_const * d.total_time / HBAR


def uncertainty(p: PhysicalParams, s: SymmetricSpinState, local: bool = False) -> SensitivityReport:
    """dg/g = hbar chi / (2 sqrt(N) M g L d T_tot) at phi = pi/2, xi = 0."""
    lever = _gravity_lever(p)
    value = chi(s, XI_STAR, PHI_STAR, local=local)
    return SensitivityReport(
        chi=value,
        dg_over_g=value / (math.sqrt(s.n_particles) * lever),
        phi_star=PHI_STAR,
        xi_star=XI_STAR,
        n_particles=s.n_particles,
    )


def local_uncertainty(p: PhysicalParams, s: SymmetricSpinState) -> SensitivityReport:
    """Same as uncertainty, with the spin measured at the recombination site only."""
    return uncertainty(p, s, local=True)


def derivative_uncertainty(p: PhysicalParams, s: SymmetricSpinState, rel_step: float = 1e-6) -> float:
    """dg/g = dJ_z / |d<J_z>/dg| / g at the phase and hold angle p actually produces.

    The slope is a Richardson-extrapolated central difference of the phase ledger fed into the moments.
    """
    if not p.gravity > 0:
        raise ParamsError([f"gravity must be > 0 for a relative uncertainty, got {p.gravity}"])

    def mean(gravity: float) -> float:
        shifted = attr.evolve(p, gravity=gravity)
        return analytic.moments(s, ledger(shifted).xi, total_phase(shifted)).mean_global

    def central(step: float) -> float:
        return (mean(p.gravity + step) - mean(p.gravity - step)) / (2 * step)

    step = rel_step * p.gravity
    slope = (4 * central(step / 2) - central(step)) / 3
    m = analytic.moments(s, ledger(p).xi, total_phase(p))
    log.debug(f"Fringe slope d<J_z>/dg = {slope:.10g} s^2/m, dJ_z = {m.std_global:.10g}")
    return m.std_global / abs(slope) / p.gravity


def fit_scaling(n_values: Sequence[float], values: Sequence[float]) -> ScalingFit:
    """Least-squares line through (log N, log value)."""
    n_arr = np.asarray(n_values, dtype=float)
    v_arr = np.asarray(values, dtype=float)
    if len(n_arr) != len(v_arr):
        raise FitError(f"{len(n_arr)} particle numbers for {len(v_arr)} values")
    if len(np.unique(n_arr)) < 2:
        raise FitError(f"degenerate abscissa, need at least two distinct N, got {n_arr.tolist()}")
    if np.any(n_arr <= 0) or np.any(v_arr <= 0) or not np.all(np.isfinite(v_arr)):
        raise FitError("log-log fit needs positive finite values")
    fit = stats.linregress(np.log(n_arr), np.log(v_arr))
    result = ScalingFit(
        exponent=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=float(min(max(fit.rvalue**2, 0.0), 1.0)),
        n_range=(int(n_arr.min()), int(n_arr.max())),
    )
    log.debug(f"Scaling fit: {result}")
    return result


def _check_n_list(n_list: Sequence[int]) -> None:
    if list(n_list) != sorted(n_list):
        raise FitError(f"particle numbers must be sorted, got {list(n_list)}")


def scaling_table(p: PhysicalParams, n_list: Sequence[int], kind: StateKind, **state_kwargs: Any) -> pd.DataFrame:
    """dg/g and chi for each N, input state rebuilt (and for sss re-optimized) per N.

    ``state_kwargs`` go to prepare_state: state cap and optimizer grid.
    """
    _check_n_list(n_list)
    rows = []
    for n in n_list:
        report = uncertainty(p, prepare_state(kind, int(n), **state_kwargs))
        log.info(f"{StateKind(kind).value} N={n}: chi={report.chi:.6g}, dg/g={report.dg_over_g:.6g}")
        rows.append({"N": int(n), "dg_over_g": report.dg_over_g, "chi": report.chi})
    return pd.DataFrame(rows, columns=["N", "dg_over_g", "chi"])


def scaling_study(p: PhysicalParams, n_list: Sequence[int], kind: StateKind, **state_kwargs: Any) -> ScalingFit:
    table = scaling_table(p, n_list, kind, **state_kwargs)
    return fit_scaling(table["N"], table["dg_over_g"])


def chi_scaling(n_list: Sequence[int]) -> ScalingFit:
    """Exponent of the optimized one-axis-twisting chi in N."""
    _check_n_list(n_list)
    return fit_scaling(n_list, [optimal_oat(int(n)).chi for n in n_list])


def fringe_scan(
    p: PhysicalParams, s: SymmetricSpinState, phi_grid: Iterable[float], xi: Optional[float] = None
) -> pd.DataFrame:
    """Rows (phi, <J_z>, <J_z> - dJ_z, <J_z> + dJ_z) over the phase grid, at full visibility unless xi is given."""
    phis = [float(phi) for phi in phi_grid]
    if not phis:
        raise ValueError("phase grid is empty")
    xi = XI_STAR if xi is None else xi
    rows = []
    for phi in phis:
        m = analytic.moments(s, xi, phi)
        rows.append((phi, m.mean_global, m.mean_global - m.std_global, m.mean_global + m.std_global))
    return pd.DataFrame(rows, columns=["phi", "mean", "lo", "hi"])


def _parabolic_peak(values: np.ndarray, step: float) -> Tuple[int, float]:
    """Index of the maximum of a periodic sampled curve and the sub-sample offset of the fitted vertex."""
    k = int(np.argmax(values))
    left, center, right = values[k - 1], values[k], values[(k + 1) % len(values)]
    curvature = left - 2 * center + right
    offset = 0.0 if curvature == 0 else 0.5 * (left - right) / curvature
    return k, offset * step


def fringe_peak(
    p: PhysicalParams,
    s: SymmetricSpinState,
    opt: Optional[oracle.SequenceOptions] = None,
    points: int = Config.PEAK_GRID_POINTS,
    cap: int = Config.ORACLE_CAP,
) -> float:
    """Total phase, wrapped into (-pi, pi], at which the simulated fringe peaks; NaN for a flat fringe."""
    opt = opt or oracle.SequenceOptions()
    offsets = np.linspace(-math.pi, math.pi, points, endpoint=False)
    curve = oracle.fringe(p, s, offsets, opt, cap=cap)
    if np.ptp(curve) < MIN_VISIBILITY * s.n_particles:
        log.warning(f"Fringe is flat (peak-to-peak {np.ptp(curve):.3g}), peak undefined")
        return math.nan
    k, offset = _parabolic_peak(curve, offsets[1] - offsets[0])
    return wrap_phase(oracle.effective_phase(p, opt) + offsets[k] + offset)


def robustness(
    p: PhysicalParams,
    s: SymmetricSpinState,
    delta_list: Sequence[float],
    points: int = Config.PEAK_GRID_POINTS,
    cap: int = Config.ORACLE_CAP,
) -> pd.DataFrame:
    """Fringe-peak shift and visibility of the simulated sequence for each dislocation energy."""
    reference = fringe_peak(p, s, oracle.SequenceOptions(), points, cap)
    rows = []
    for delta in delta_list:
        opt = oracle.SequenceOptions(dislocation_energy=delta)
        peak = fringe_peak(p, s, opt, points, cap)
        shift = wrap_phase(peak - reference) if math.isfinite(peak) and math.isfinite(reference) else math.nan
        visibility = oracle.oracle_moments(p, s, opt, cap=cap).visibility
        log.info(f"Dislocation {delta:.6g} J: peak shift {shift:.3g} rad, visibility {visibility:.10g}")
        rows.append((float(delta), shift, visibility))
    return pd.DataFrame(rows, columns=["delta", "shift", "visibility"])
