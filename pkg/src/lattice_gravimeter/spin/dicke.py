"""Permutation-symmetric N-particle spin states in the Dicke basis.

Coefficient ``c[n]`` is the amplitude of the state with ``n`` particles spin-up and ``N - n`` spin-down, so
J_z = n - N/2 and J_+ = sum_k sigma_+^(k) raises ``n`` by one.
"""
import logging
import math
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import attr
import numpy as np
from scipy import linalg, optimize, sparse
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from lattice_gravimeter.config import Config
from lattice_gravimeter.errors import StateError

log = logging.getLogger(__name__)

# Above this dimension rotations use the sparse exponential action instead of a dense expm
DENSE_ROTATION_DIM = 513


@attr.s(frozen=True, eq=False)
class SymmetricSpinState:
    n_particles = attr.ib(type=int, converter=int)
    coeffs = attr.ib(type=np.ndarray, converter=lambda c: np.array(c, dtype=complex))

    def __attrs_post_init__(self):
        if self.n_particles < 1:
            raise StateError(f"a symmetric state needs N >= 1 particles, got {self.n_particles}")
        if self.coeffs.shape != (self.n_particles + 1,):
            raise StateError(f"expected {self.n_particles + 1} Dicke coefficients, got shape {self.coeffs.shape}")
        self.coeffs.setflags(write=False)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def check_normalized(self, tolerance: float = Config.NORM_TOLERANCE) -> None:
        if abs(self.norm - 1.0) > tolerance:
            raise StateError(f"state norm {self.norm!r} deviates from 1 by more than {tolerance}")

    def to_pairs(self) -> List[List[float]]:
        """JSON-compatible list of (re, im) pairs."""
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @classmethod
    def from_pairs(cls, pairs: Sequence[Sequence[float]]) -> "SymmetricSpinState":
        coeffs = np.array([complex(re, im) for re, im in pairs])
        return cls(n_particles=len(coeffs) - 1, coeffs=coeffs)


@attr.s(frozen=True)
class SpinCovariance:
    mean_x = attr.ib(type=float)
    mean_y = attr.ib(type=float)
    mean_z = attr.ib(type=float)
    var_y = attr.ib(type=float)
    var_z = attr.ib(type=float)
    cov_yz = attr.ib(type=float)


@attr.s(frozen=True)
class OatOptimum:
    n_particles = attr.ib(type=int)
    mu = attr.ib(type=float)
    beta = attr.ib(type=float)
    chi = attr.ib(type=float)


###################################################################################################
# Combinatorial amplitudes
###################################################################################################


def alpha(p, q):
    """alpha_p^q = sqrt(p (q + 1)), elementwise for arrays."""
    p_arr = np.asarray(p)
    q_arr = np.asarray(q)
    if np.any(p_arr < 0) or np.any(q_arr < 0):
        raise ValueError(f"alpha needs non-negative arguments, got p={p}, q={q}")
    # Products of integers below 2**53 are exact in float64, sqrt of each factor keeps larger ones finite
    value = np.sqrt(p_arr.astype(float)) * np.sqrt(q_arr.astype(float) + 1.0)
    exact = p_arr.astype(float) * (q_arr.astype(float) + 1.0) < 2.0**53
    value = np.where(exact, np.sqrt(p_arr.astype(float) * (q_arr.astype(float) + 1.0)), value)
    return float(value) if value.ndim == 0 else value


def log_dcoef(n, j):
    """log d_n^j = log sqrt(n! / (j! (n - j)!))."""
    n_arr = np.asarray(n, dtype=float)
    j_arr = np.asarray(j, dtype=float)
    if np.any(j_arr < 0) or np.any(j_arr > n_arr):
        raise ValueError(f"dcoef needs 0 <= j <= n, got n={n}, j={j}")
    value = 0.5 * (gammaln(n_arr + 1) - gammaln(j_arr + 1) - gammaln(n_arr - j_arr + 1))
    return float(value) if value.ndim == 0 else value


def dcoef(n, j):
    """d_n^j = sqrt(binomial(n, j)), evaluated through log-gamma."""
    return np.exp(log_dcoef(n, j))


###################################################################################################
# Collective spin operators
###################################################################################################


@lru_cache(maxsize=16)
def spin_operators(n_particles: int) -> Tuple[sparse.csr_matrix, sparse.csr_matrix, sparse.csr_matrix]:
    """Sparse (J_x, J_y, J_z) in the Dicke basis of N particles."""
    n = np.arange(n_particles)
    raise_amps = np.sqrt((n + 1.0) * (n_particles - n))
    j_plus = sparse.diags(raise_amps, -1, shape=(n_particles + 1, n_particles + 1), format="csr", dtype=complex)
    j_minus = j_plus.getH().tocsr()
    j_x = ((j_plus + j_minus) / 2).tocsr()
    j_y = ((j_plus - j_minus) / 2j).tocsr()
    j_z = sparse.diags(np.arange(n_particles + 1) - n_particles / 2, 0, format="csr", dtype=complex)
    return j_x, j_y, j_z


def spin_covariance(s: SymmetricSpinState) -> SpinCovariance:
    """Mean spin and the covariance of J_y, J_z."""
    j_x, j_y, j_z = spin_operators(s.n_particles)
    c = np.asarray(s.coeffs)
    jx_c, jy_c, jz_c = j_x @ c, j_y @ c, j_z @ c
    mean_x = float(np.vdot(c, jx_c).real)
    mean_y = float(np.vdot(c, jy_c).real)
    mean_z = float(np.vdot(c, jz_c).real)
    return SpinCovariance(
        mean_x=mean_x,
        mean_y=mean_y,
        mean_z=mean_z,
        var_y=float(np.vdot(jy_c, jy_c).real) - mean_y**2,
        var_z=float(np.vdot(jz_c, jz_c).real) - mean_z**2,
        cov_yz=float(np.vdot(jy_c, jz_c).real) - mean_y * mean_z,
    )


def squeezing_alignment(var_y: float, var_z: float, cov_yz: float) -> Tuple[float, float]:
    """(beta, variance) minimizing the J_y variance after exp(-i beta J_x), beta in (-pi/2, pi/2].

    After the rotation J_y reads J_y cos(beta) - J_z sin(beta), a quadratic form of period pi in beta.
    """
    mean = (var_y + var_z) / 2
    a = (var_y - var_z) / 2
    b = -cov_yz
    radius = math.hypot(a, b)
    beta = (math.atan2(b, a) + math.pi) / 2
    if beta > math.pi / 2:
        beta -= math.pi
    # Product of the eigenvalues over the larger one avoids the subtraction mean - radius
    variance = (var_y * var_z - cov_yz**2) / (mean + radius) if mean + radius > 0 else 0.0
    return beta, max(variance, 0.0)


###################################################################################################
# State generators
###################################################################################################


def css(n_particles: int, cap: int = Config.STATE_CAP) -> SymmetricSpinState:
    """Coherent spin state 2^(-N/2) (|up> + |dn>)^N, binomial Dicke amplitudes."""
    if n_particles < 1:
        raise StateError(f"a coherent spin state needs N >= 1, got {n_particles}")
    if n_particles > cap:
        raise StateError(f"N = {n_particles} exceeds the state cap {cap}")
    n = np.arange(n_particles + 1)
    coeffs = np.exp(log_dcoef(n_particles, n) - n_particles * math.log(2) / 2)
    return SymmetricSpinState(n_particles=n_particles, coeffs=coeffs)


def random_symmetric(n_particles: int, rng: np.random.Generator, flip_symmetric: bool = False) -> SymmetricSpinState:
    """Normalized random complex Dicke coefficients, optionally with c[n] = c[N - n]."""
    coeffs = rng.normal(size=n_particles + 1) + 1j * rng.normal(size=n_particles + 1)
    if flip_symmetric:
        coeffs = coeffs + coeffs[::-1]
    coeffs = coeffs / np.linalg.norm(coeffs)
    return SymmetricSpinState(n_particles=n_particles, coeffs=coeffs)


def oat_twist(s: SymmetricSpinState, mu: float) -> SymmetricSpinState:
    """One-axis twisting exp(-i mu J_z^2), diagonal in the Dicke basis."""
    m = np.arange(s.n_particles + 1) - s.n_particles / 2
    phase = np.remainder(mu * m**2, 2 * math.pi)
    return SymmetricSpinState(n_particles=s.n_particles, coeffs=s.coeffs * np.exp(-1j * phase))


def rotate_x(s: SymmetricSpinState, beta: float) -> SymmetricSpinState:
    """Collective rotation exp(-i beta J_x)."""
    if beta == 0:
        return s
    j_x, _, _ = spin_operators(s.n_particles)
    generator = -1j * beta * j_x
    if s.n_particles + 1 <= DENSE_ROTATION_DIM:
        coeffs = linalg.expm(generator.toarray()) @ s.coeffs
    else:
        coeffs = expm_multiply(generator.tocsc(), np.asarray(s.coeffs))
    return SymmetricSpinState(n_particles=s.n_particles, coeffs=coeffs)


def oat_state(n_particles: int, mu: float, beta: float, cap: int = Config.STATE_CAP) -> SymmetricSpinState:
    """Twisted coherent state, rotated about x by beta."""
    return rotate_x(oat_twist(css(n_particles, cap=cap), mu), beta)


###################################################################################################
# Twisting strength optimization
###################################################################################################


def oat_chi(n_particles: int, mu: float) -> Tuple[float, float]:
    """(chi, beta) of the twisted coherent state, from its exact Dicke coefficients.

    chi = sqrt(N) * min-variance / <J_x>, the value the interferometer reaches at xi = 0, phi = pi/2 once the
    squeezed quadrature is rotated onto J_y.
    """
    cov = spin_covariance(oat_twist(css(n_particles), mu))
    beta, variance = squeezing_alignment(cov.var_y, cov.var_z, cov.cov_yz)
    if cov.mean_x <= 1e-12 * n_particles:
        return math.inf, beta
    return math.sqrt(n_particles * variance) / cov.mean_x, beta


def _closed_form_moments(n_particles: int, mu: np.ndarray):
    """Kitagawa-Ueda moments of exp(-i mu J_z^2) applied to the x-polarized coherent state."""
    n = float(n_particles)
    cos_mu = np.cos(mu)
    cos_2mu = np.cos(2 * mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        power_2mu = np.where(
            cos_2mu > 0, np.exp((n - 2) * np.log(np.abs(cos_2mu))), np.power(cos_2mu, n_particles - 2)
        )
        # A = 1 - cos^(N-2)(2 mu), without cancellation at small mu
        a = np.where(cos_2mu > 0, -np.expm1((n - 2) * np.log(np.abs(cos_2mu))), 1 - power_2mu)
    b = 4 * np.sin(mu) * np.power(cos_mu, n_particles - 2)
    mean_x = n / 2 * np.power(cos_mu, n_particles - 1)
    root = np.sqrt(a**2 + b**2)
    with np.errstate(divide="ignore", invalid="ignore"):
        gap = np.where(root > 0, -(b**2) / (a + root), 0.0)
    var_min = n / 4 * (1 + (n - 1) / 4 * gap)
    var_y = n / 8 * ((n + 1) - (n - 1) * power_2mu)
    var_z = np.full_like(var_y, n / 4)
    cov_yz = n * (n - 1) / 4 * np.sin(mu) * np.power(cos_mu, n_particles - 2)
    return mean_x, var_min, var_y, var_z, cov_yz


def oat_chi_closed_form(n_particles: int, mu: float) -> Tuple[float, float]:
    """(chi, beta) from the closed-form twisted moments, no state vector involved."""
    if n_particles < 2:
        raise StateError(f"one-axis twisting needs N >= 2, got {n_particles}")
    mean_x, var_min, var_y, var_z, cov_yz = (float(v) for v in _closed_form_moments(n_particles, np.array(mu)))
    beta, _ = squeezing_alignment(var_y, var_z, cov_yz)
    if mean_x <= 1e-12 * n_particles:
        return math.inf, beta
    return math.sqrt(n_particles * max(var_min, 0.0)) / mean_x, beta


def _mu_grid(log_points: int, linear_points: int, floor: float) -> np.ndarray:
    top = math.pi / 2
    grid = np.concatenate((np.geomspace(floor, top, log_points), np.linspace(top / linear_points, top, linear_points)))
    return np.unique(grid)


def optimal_oat(
    n_particles: int,
    closed_form_above: int = Config.OAT_CLOSED_FORM_ABOVE,
    log_points: int = Config.OAT_LOG_GRID_POINTS,
    linear_points: int = Config.OAT_LINEAR_GRID_POINTS,
    mu_floor: float = Config.OAT_MU_FLOOR,
) -> OatOptimum:
    """Twist mu in (0, pi/2] and alignment beta minimizing chi, grid search refined by golden section.

    The smallest mu wins among equal grid minima.
    """
    if n_particles < 2:
        raise StateError(f"one-axis twisting needs N >= 2, got {n_particles}")
    closed_form = n_particles > closed_form_above
    mus = _mu_grid(log_points, linear_points, mu_floor)

    def score(mu: float) -> float:
        if not 0 < mu <= math.pi / 2:
            return math.inf
        if closed_form:
            return oat_chi_closed_form(n_particles, mu)[0]
        return oat_chi(n_particles, mu)[0]

    if closed_form:
        mean_x, var_min, _, _, _ = _closed_form_moments(n_particles, mus)
        spread = np.sqrt(n_particles * np.maximum(var_min, 0.0))
        scores = np.divide(spread, mean_x, out=np.full_like(spread, np.inf), where=mean_x > 1e-12 * n_particles)
    else:
        scores = np.array([score(mu) for mu in mus])

    best = int(np.argmin(scores))
    mu_star, chi_star = float(mus[best]), float(scores[best])
    log.debug(f"OAT grid N={n_particles}: mu={mu_star:.6g}, chi={chi_star:.8g} ({len(mus)} candidates)")

    if 0 < best < len(mus) - 1 and scores[best - 1] > chi_star and scores[best + 1] > chi_star:
        refined = optimize.minimize_scalar(
            score, bracket=(mus[best - 1], mu_star, mus[best + 1]), method="golden", tol=1e-10
        )
        if refined.success and refined.fun < chi_star:
            mu_star, chi_star = float(refined.x), float(refined.fun)

    beta = (oat_chi_closed_form if closed_form else oat_chi)(n_particles, mu_star)[1]
    log.debug(f"OAT optimum N={n_particles}: mu={mu_star:.8g}, beta={beta:.8g}, chi={chi_star:.8g}")
    return OatOptimum(n_particles=n_particles, mu=mu_star, beta=beta, chi=chi_star)


def optimal_oat_state(n_particles: int, optimum: Optional[OatOptimum] = None, **kwargs) -> SymmetricSpinState:
    """Input state of the squeezed interferometer, twisted and aligned per optimal_oat."""
    optimum = optimum or optimal_oat(n_particles, **kwargs)
    return oat_state(n_particles, optimum.mu, optimum.beta)


class StateKind(Enum):
    CSS = "css"
    SSS = "sss"


def state_options(settings: Mapping[str, Any]) -> Dict[str, Any]:
    """prepare_state keyword arguments from the loaded tool settings."""
    return {
        "cap": settings["STATE_CAP"],
        "closed_form_above": settings["OAT_CLOSED_FORM_ABOVE"],
        "log_points": settings["OAT_LOG_GRID_POINTS"],
        "linear_points": settings["OAT_LINEAR_GRID_POINTS"],
        "mu_floor": settings["OAT_MU_FLOOR"],
    }


def prepare_state(
    kind: StateKind,
    n_particles: int,
    mu: Optional[float] = None,
    beta: Optional[float] = None,
    cap: int = Config.STATE_CAP,
    closed_form_above: int = Config.OAT_CLOSED_FORM_ABOVE,
    **grid,
) -> SymmetricSpinState:
    """Interferometer input: coherent state, or twisted state with optimized mu and/or beta where not given.

    ``grid`` takes the log_points, linear_points and mu_floor of optimal_oat.
    """
    if StateKind(kind) is StateKind.CSS:
        return css(n_particles, cap=cap)
    if n_particles > cap:
        raise StateError(f"N = {n_particles} exceeds the state cap {cap}")
    if mu is None:
        optimum = optimal_oat(n_particles, closed_form_above=closed_form_above, **grid)
        return oat_state(n_particles, optimum.mu, optimum.beta if beta is None else beta, cap=cap)
    if beta is None:
        closed_form = n_particles > closed_form_above
        beta = (oat_chi_closed_form if closed_form else oat_chi)(n_particles, mu)[1]
    return oat_state(n_particles, mu, beta, cap=cap)
