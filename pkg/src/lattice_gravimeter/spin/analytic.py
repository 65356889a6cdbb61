"""Exact measurement statistics of the lattice interferometer for symmetric input states.

The input enters through two coherence sums of its Dicke coefficients,

    S = sum_n alpha_n^(N-n) c_n c*_(n-1)
    T = sum_n sqrt(n (n-1) (N-n+1) (N-n+2)) c_n c*_(n-2)

together with the populations |c_n|^2. The hold angle xi splits each particle between the recombination site and
one of the two outer sites, the total phase phi rotates the measured quadrature at the recombination site.
"""
import logging
import math
from typing import Dict, Tuple

import attr
import numpy as np

from lattice_gravimeter.config import Config
from lattice_gravimeter.spin.dicke import SymmetricSpinState, alpha, dcoef

log = logging.getLogger(__name__)

# Relative size of Im S below which the visibility sum counts as real
NONSYMMETRIC_TOLERANCE = 1e-9


@attr.s(frozen=True)
class MeasurementMoments:
    n_particles = attr.ib(type=int)
    mean_global = attr.ib(type=float)
    mean_local = attr.ib(type=float)
    second_global = attr.ib(type=float)
    second_local = attr.ib(type=float)
    second_outer_minus = attr.ib(type=float)
    second_outer_plus = attr.ib(type=float)
    var_global = attr.ib(type=float)
    var_local = attr.ib(type=float)
    visibility = attr.ib(type=float)
    nonsymmetric = attr.ib(default=False, type=bool)

    FIELDS = (
        "mean_global",
        "mean_local",
        "second_global",
        "second_local",
        "second_outer_minus",
        "second_outer_plus",
        "var_global",
        "var_local",
        "visibility",
    )

    @property
    def std_global(self) -> float:
        return math.sqrt(max(self.var_global, 0.0))

    @property
    def std_local(self) -> float:
        return math.sqrt(max(self.var_local, 0.0))

    def to_dict(self) -> Dict[str, float]:
        return attr.asdict(self)


def coherence_sums(s: SymmetricSpinState) -> Tuple[complex, complex]:
    """(S, T), the one- and two-quantum coherences of the Dicke coefficients."""
    c = np.asarray(s.coeffs)
    big_n = s.n_particles
    n = np.arange(1, big_n + 1)
    first = complex(np.sum(alpha(n, big_n - n) * c[1:] * np.conj(c[:-1])))
    if big_n < 2:
        return first, 0j
    n = np.arange(2, big_n + 1)
    weights = np.sqrt(n * (n - 1.0)) * np.sqrt((big_n - n + 1.0) * (big_n - n + 2.0))
    second = complex(np.sum(weights * c[2:] * np.conj(c[:-2])))
    return first, second


def fringe_visibility(s: SymmetricSpinState, xi: float) -> Tuple[float, bool]:
    """(visibility, nonsymmetric): 2 cos^2(xi) S / N, or its modulus with the flag set when S is complex."""
    first, _ = coherence_sums(s)
    envelope = 2 * math.cos(xi) ** 2 / s.n_particles
    if abs(first.imag) <= NONSYMMETRIC_TOLERANCE * abs(first):
        return envelope * first.real, False
    return envelope * abs(first), True


def moments(
    s: SymmetricSpinState, xi: float, phi: float, norm_tolerance: float = Config.NORM_TOLERANCE
) -> MeasurementMoments:
    """Global, local and outer-site moments of J_z after the sequence, for any complex Dicke coefficients."""
    s.check_normalized(norm_tolerance)
    if not (math.isfinite(xi) and math.isfinite(phi)):
        raise ValueError(f"xi and phi must be finite, got xi={xi}, phi={phi}")

    big_n = s.n_particles
    populations = np.abs(np.asarray(s.coeffs)) ** 2
    n = np.arange(big_n + 1)
    first, second = coherence_sums(s)
    cos2 = math.cos(xi) ** 2
    sin2 = math.sin(xi) ** 2
    rotation = complex(math.cos(phi), -math.sin(phi))

    mean = cos2 * (first * rotation).real
    second_local = (
        big_n / 4 * cos2
        + cos2**2 / 2 * float(np.sum(populations * n * (big_n - n)))
        + cos2**2 / 2 * (second * rotation**2).real
    )
    # Each particle that leaks to an outer site is an unpolarized spin there
    second_outer_minus = sin2 / 4 * float(np.sum(populations * n))
    second_outer_plus = sin2 / 4 * float(np.sum(populations * (big_n - n)))
    second_global = second_local + second_outer_minus + second_outer_plus

    visibility, nonsymmetric = fringe_visibility(s, xi)
    if nonsymmetric:
        log.warning(f"Visibility sum is complex (arg S = {np.angle(first):.3g} rad), reporting its modulus")
    return MeasurementMoments(
        n_particles=big_n,
        mean_global=mean,
        mean_local=mean,
        second_global=second_global,
        second_local=second_local,
        second_outer_minus=second_outer_minus,
        second_outer_plus=second_outer_plus,
        var_global=max(second_global - mean**2, 0.0),
        var_local=max(second_local - mean**2, 0.0),
        visibility=visibility,
        nonsymmetric=nonsymmetric,
    )


def css_moments(n_particles: int, xi: float, phi: float) -> MeasurementMoments:
    """Closed-form moments of the coherent spin state."""
    if n_particles < 1:
        raise ValueError(f"N must be >= 1, got {n_particles}")
    big_n = n_particles
    cos2 = math.cos(xi) ** 2
    fringe = cos2**2 * math.cos(phi) ** 2
    mean = big_n / 2 * cos2 * math.cos(phi)
    var_global = big_n / 4 * (1 - fringe)
    var_local = big_n / 4 * cos2 * (1 - cos2 * math.cos(phi) ** 2)
    outer = big_n * math.sin(xi) ** 2 / 8
    return MeasurementMoments(
        n_particles=big_n,
        mean_global=mean,
        mean_local=mean,
        second_global=var_global + mean**2,
        second_local=big_n / 4 * cos2 - big_n / 4 * fringe + big_n**2 / 4 * fringe,
        second_outer_minus=outer,
        second_outer_plus=outer,
        var_global=var_global,
        var_local=var_local,
        visibility=cos2,
    )


def single_particle_moments(xi: float, phi: float) -> MeasurementMoments:
    return css_moments(1, xi, phi)


def binomial_sum_rule(n: int, xi: float) -> float:
    """sum_j d_n^j^2 sin^2j(xi) cos^2(n-j)(xi), which is 1 for every n."""
    j = np.arange(n + 1)
    return float(np.sum(dcoef(n, j) ** 2 * np.sin(xi) ** (2 * j) * np.cos(xi) ** (2 * (n - j))))
