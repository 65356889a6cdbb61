import math

import attr
import numpy as np
import pytest

from lattice_gravimeter.errors import DegenerateVisibilityError, FitError, ParamsError
from lattice_gravimeter.lattice.params import HBAR, derive
from lattice_gravimeter.lattice.phasebook import ledger, with_hold_for_phase
from lattice_gravimeter.metrology.sensitivity import (
    chi,
    derivative_uncertainty,
    fit_scaling,
    fringe_scan,
    local_uncertainty,
    robustness,
    scaling_study,
    scaling_table,
    uncertainty,
)
from lattice_gravimeter.spin import analytic
from lattice_gravimeter.spin.dicke import StateKind, css, optimal_oat_state


@pytest.mark.parametrize("n", [1, 3, 64, 1000])
def test_coherent_state_chi(n):
    assert chi(css(n)) == pytest.approx(1.0, rel=1e-12)


def test_chi_off_the_operating_point():
    xi = math.pi / 3
    m = analytic.css_moments(10, xi, math.pi / 2)
    assert chi(css(10), xi=xi) == pytest.approx(2 * m.std_global / (m.visibility * math.sqrt(10)), rel=1e-12)


def test_squeezed_state_beats_standard_limit():
    assert chi(optimal_oat_state(100)) < 1


def test_degenerate_visibility():
    with pytest.raises(DegenerateVisibilityError):
        chi(css(4), xi=math.pi / 2)


def test_rb87_single_atom(rb87):
    d = derive(rb87)
    expected = HBAR / (2 * rb87.atom_mass * rb87.gravity * 50 * d.lattice_const * d.total_time)
    report = uncertainty(rb87, css(1))
    assert report.dg_over_g == pytest.approx(expected, rel=1e-12)
    assert report.dg_over_g == pytest.approx(1.879e-6, rel=1e-3)
    assert (report.phi_star, report.xi_star) == (math.pi / 2, 0.0)


@pytest.mark.parametrize("n", [1, 5, 25])
def test_standard_quantum_limit(rb87, n):
    ratio = uncertainty(rb87, css(4 * n)).dg_over_g / uncertainty(rb87, css(n)).dg_over_g
    assert ratio == pytest.approx(0.5, rel=1e-12)


def test_longer_hold(rb87):
    longer = attr.evolve(rb87, hold_time=2 * rb87.hold_time)
    ratio = uncertainty(longer, css(10)).dg_over_g / uncertainty(rb87, css(10)).dg_over_g
    assert ratio == pytest.approx(0.5, rel=0.02)


def test_zero_gravity_rejected(rb87):
    with pytest.raises(ParamsError):
        uncertainty(attr.evolve(rb87, gravity=0.0), css(1))
    with pytest.raises(ParamsError):
        derivative_uncertainty(attr.evolve(rb87, gravity=0.0), css(1))


def test_local_measurement_at_full_recombination(rb87):
    s = css(20)
    assert local_uncertainty(rb87, s).dg_over_g == pytest.approx(uncertainty(rb87, s).dg_over_g, rel=1e-12)


@pytest.mark.parametrize("n", [1, 4, 30])
def test_finite_difference_slope(scaled, n):
    p = with_hold_for_phase(scaled, math.pi / 2)
    s = css(n)
    assert derivative_uncertainty(p, s) == pytest.approx(uncertainty(p, s).dg_over_g, rel=1e-3)


def test_coherent_scaling(rb87):
    fit = scaling_study(rb87, [10, 100, 1000, 10000], StateKind.CSS)
    assert fit.exponent == pytest.approx(-0.5, abs=0.005)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-9)
    assert fit.n_range == (10, 10000)


def test_squeezed_scaling(rb87):
    fit = scaling_study(rb87, [100, 1000, 10000], StateKind.SSS)
    assert fit.exponent == pytest.approx(-5 / 6, abs=0.05)


def test_scaling_table(rb87):
    table = scaling_table(rb87, [10, 100], StateKind.CSS)
    assert list(table.columns) == ["N", "dg_over_g", "chi"]
    np.testing.assert_allclose(table["chi"], 1.0, rtol=1e-12)


def test_repeated_particle_number(rb87):
    with pytest.raises(FitError):
        scaling_study(rb87, [10, 10, 10, 10], StateKind.CSS)


def test_unsorted_particle_numbers(rb87):
    with pytest.raises(FitError):
        scaling_study(rb87, [100, 10], StateKind.CSS)


@pytest.mark.parametrize("values", [[1.0, -1.0, 2.0], [1.0, 0.0, 2.0], [1.0, math.inf, 2.0]])
def test_fit_needs_positive_values(values):
    with pytest.raises(FitError):
        fit_scaling([1, 2, 3], values)


def test_fit_length_mismatch():
    with pytest.raises(FitError):
        fit_scaling([1, 2, 3], [1.0, 2.0])


def test_fit_exact_power_law():
    n = np.array([3, 30, 300])
    fit = fit_scaling(n, 2.5 * n**-0.75)
    assert fit.exponent == pytest.approx(-0.75, rel=1e-12)
    assert math.exp(fit.intercept) == pytest.approx(2.5, rel=1e-12)


def test_fringe_scan_coherent_band(rb87):
    n = 16
    table = fringe_scan(rb87, css(n), np.linspace(0, math.pi, 5))
    assert list(table.columns) == ["phi", "mean", "lo", "hi"]
    assert len(table) == 5
    row = table.iloc[2]
    assert row["mean"] == pytest.approx(0.0, abs=1e-12)
    assert row["hi"] - row["mean"] == pytest.approx(math.sqrt(n) / 2, rel=1e-12)
    halfwidths = table["hi"] - table["mean"]
    assert int(np.argmax(halfwidths)) == 2


def test_fringe_scan_squeezed_band(rb87):
    table = fringe_scan(rb87, optimal_oat_state(100), [math.pi / 2])
    assert table["hi"][0] - table["mean"][0] < 5.0


def test_fringe_scan_hold_angle(rb87):
    table = fringe_scan(rb87, css(4), [0.0], xi=math.pi / 3)
    assert table["mean"][0] == pytest.approx(2 * math.cos(math.pi / 3) ** 2, rel=1e-12)


def test_fringe_scan_full_visibility_by_default(rb87):
    p = attr.evolve(rb87, transition_freq=math.pi / (3 * rb87.hold_time))
    assert ledger(p).xi == pytest.approx(math.pi / 6, rel=1e-12)
    table = fringe_scan(p, css(6), [0.0, math.pi])
    assert table["mean"][0] == pytest.approx(3.0, rel=1e-12)
    assert table["mean"][1] == pytest.approx(-3.0, rel=1e-12)


def test_fringe_scan_needs_points(rb87):
    with pytest.raises(ValueError):
        fringe_scan(rb87, css(4), [])


def test_dislocation_does_not_move_the_fringe(scaled):
    unit = HBAR / scaled.hold_time
    deltas = [-0.2 * unit, 0.0, 0.1 * unit, 0.2 * unit]
    table = robustness(scaled, css(2), deltas)
    assert list(table.columns) == ["delta", "shift", "visibility"]
    for delta, shift, visibility in table.itertuples(index=False):
        assert abs(shift) < 1e-10
        assert visibility == pytest.approx(math.cos(delta * scaled.hold_time / HBAR) ** 2, abs=1e-8)


def test_dislocation_closing_the_fringe(scaled):
    delta = math.pi / 2 * HBAR / scaled.hold_time
    table = robustness(scaled, css(2), [delta])
    assert table["visibility"][0] == pytest.approx(0.0, abs=1e-10)
    assert math.isnan(table["shift"][0])
