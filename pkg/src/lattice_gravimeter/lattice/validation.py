"""Cross-check of the closed-form moments against both oracle evaluation paths."""
import logging
import math
from typing import Dict, Optional

import attr
import numpy as np
import pandas as pd

from lattice_gravimeter.config import Config
from lattice_gravimeter.errors import OracleCapError
from lattice_gravimeter.lattice import oracle
from lattice_gravimeter.lattice.params import PhysicalParams
from lattice_gravimeter.spin import analytic
from lattice_gravimeter.spin.analytic import MeasurementMoments
from lattice_gravimeter.spin.dicke import SymmetricSpinState, random_symmetric

log = logging.getLogger(__name__)


@attr.s(frozen=True)
class ValidationReport:
    n_particles = attr.ib(type=int)
    cases = attr.ib(type=int)
    tolerance = attr.ib(type=float)
    max_deviation = attr.ib(type=Dict[str, float])
    max_deviation_first_quantized = attr.ib(type=Dict[str, float])
    flag_mismatches = attr.ib(type=int)

    @property
    def worst(self) -> float:
        return max(list(self.max_deviation.values()) + list(self.max_deviation_first_quantized.values()))

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance and self.flag_mismatches == 0

    def to_dict(self):
        report = attr.asdict(self)
        report.update(worst=self.worst, passed=self.passed)
        return report

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "field": list(MeasurementMoments.FIELDS),
                "max_deviation": [self.max_deviation[f] for f in MeasurementMoments.FIELDS],
                "max_deviation_first_quantized": [
                    self.max_deviation_first_quantized[f] for f in MeasurementMoments.FIELDS
                ],
            }
        )


def deviations(reference: MeasurementMoments, other: MeasurementMoments) -> Dict[str, float]:
    return {field: abs(getattr(reference, field) - getattr(other, field)) for field in MeasurementMoments.FIELDS}


def validate_moments(
    p: PhysicalParams,
    s: SymmetricSpinState,
    opt: Optional[oracle.SequenceOptions] = None,
    draws: int = Config.VALIDATION_DRAWS,
    seed: int = Config.DEFAULT_SEED,
    tolerance: float = Config.VALIDATION_TOLERANCE,
    cap: int = Config.ORACLE_CAP,
    norm_tolerance: float = Config.NORM_TOLERANCE,
) -> ValidationReport:
    """Compare every moment for the given state at p, then for random (state, xi, phi) draws.

    The Fock-space oracle refuses states above ``cap`` particles before any draw is made.
    """
    if s.n_particles > cap:
        raise OracleCapError(s.n_particles, cap)
    opt = opt or oracle.SequenceOptions()
    rng = np.random.default_rng(seed)
    cases = [(p, s, opt)]
    for _ in range(draws):
        state = random_symmetric(s.n_particles, rng)
        xi, phi = rng.uniform(0, math.pi), rng.uniform(-math.pi, math.pi)
        tuned, options = oracle.options_for_angles(p, xi, phi)
        cases.append((tuned, state, options))

    worst: Dict[str, float] = {field: 0.0 for field in MeasurementMoments.FIELDS}
    worst_first_quantized = dict(worst)
    mismatches = 0
    for params, state, options in cases:
        xi, phi = oracle.effective_xi(params, options), oracle.effective_phase(params, options)
        expected = analytic.moments(state, xi, phi, norm_tolerance)
        many_body = oracle.oracle_moments(params, state, options, cap, norm_tolerance)
        first_quantized = oracle.first_quantized_moments(params, state, options, norm_tolerance)
        for field, value in deviations(expected, many_body).items():
            worst[field] = max(worst[field], value)
        for field, value in deviations(expected, first_quantized).items():
            worst_first_quantized[field] = max(worst_first_quantized[field], value)
        mismatches += int(expected.nonsymmetric != many_body.nonsymmetric)
        mismatches += int(expected.nonsymmetric != first_quantized.nonsymmetric)

    report = ValidationReport(
        n_particles=s.n_particles,
        cases=len(cases),
        tolerance=tolerance,
        max_deviation=worst,
        max_deviation_first_quantized=worst_first_quantized,
        flag_mismatches=mismatches,
    )
    log.info(f"Validation N={s.n_particles}: {report.cases} cases, worst deviation {report.worst:.3g}")
    return report

