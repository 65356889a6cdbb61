import math

import attr
import numpy as np
import pytest
from scipy.special import comb

from lattice_gravimeter.config import Config
from lattice_gravimeter.errors import OracleCapError, ParamsError, StateError
from lattice_gravimeter.lattice import oracle
from lattice_gravimeter.lattice.oracle import (
    CENTER_MODES,
    N_MODES,
    FockState,
    ModeIndex,
    SequenceOptions,
    Spin,
    embed,
    fock_basis,
    measure,
    simulate,
)
from lattice_gravimeter.lattice.phasebook import ledger, total_phase
from lattice_gravimeter.lattice.validation import validate_moments
from lattice_gravimeter.metrology.sensitivity import fringe_peak
from lattice_gravimeter.spin import analytic
from lattice_gravimeter.spin.analytic import MeasurementMoments
from lattice_gravimeter.spin.dicke import css, random_symmetric


def center_occupation(n_up: int, n_dn: int):
    occ = [0] * N_MODES
    occ[CENTER_MODES[0]], occ[CENTER_MODES[1]] = n_up, n_dn
    return tuple(occ)


def assert_moments_close(actual: MeasurementMoments, expected: MeasurementMoments, tolerance: float):
    for field in MeasurementMoments.FIELDS:
        assert getattr(actual, field) == pytest.approx(getattr(expected, field), abs=tolerance), field


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_basis_dimension(n):
    assert fock_basis(n).dim == comb(n + 9, 9, exact=True)


def test_basis_is_lexicographic():
    occupations = [tuple(occ) for occ in fock_basis(3).occupations.tolist()]
    assert occupations == sorted(occupations)
    assert occupations[0] == (0,) * 9 + (3,)
    assert occupations[-1] == (3,) + (0,) * 9
    assert all(sum(occ) == 3 for occ in occupations)


def test_mode_index():
    assert ModeIndex(-2, "up").index == 0
    assert ModeIndex(2, Spin.DN).index == N_MODES - 1
    with pytest.raises(ValueError):
        ModeIndex(3, Spin.UP)


def test_one_body_commutator():
    basis = fock_basis(3)
    hop, back = basis.one_body(4, 5), basis.one_body(5, 4)
    commutator = (hop @ back - back @ hop).toarray()
    expected = (basis.one_body(4, 4) - basis.one_body(5, 5)).toarray()
    np.testing.assert_allclose(commutator, expected, atol=1e-12)


def test_embed_single_particle():
    f = embed(css(1))
    index = fock_basis(1).index
    assert f.amplitudes[index[center_occupation(1, 0)]] == pytest.approx(math.sqrt(0.5))
    assert f.amplitudes[index[center_occupation(0, 1)]] == pytest.approx(math.sqrt(0.5))
    assert np.count_nonzero(f.amplitudes) == 2


def test_embed_two_particles():
    f = embed(css(2))
    index = fock_basis(2).index
    amplitudes = [f.amplitudes[index[center_occupation(n, 2 - n)]] for n in (2, 1, 0)]
    np.testing.assert_allclose(amplitudes, [0.5, math.sqrt(0.5), 0.5], atol=1e-15)


def test_embed_is_isometric(rng):
    for n in range(1, 6):
        assert embed(random_symmetric(n, rng)).norm == pytest.approx(1.0, abs=1e-12)


def test_embed_cap():
    with pytest.raises(OracleCapError) as e:
        embed(css(9))
    assert "N <= 8" in str(e.value)


def test_fock_state_shape_checked():
    with pytest.raises(StateError):
        FockState(n_particles=2, amplitudes=np.zeros(3))


def test_zero_gravity_sequence(scaled):
    m = measure(simulate(attr.evolve(scaled, gravity=0.0), css(1)))
    assert m.mean_global == pytest.approx(-0.5, abs=1e-12)
    assert m.var_global == pytest.approx(0.0, abs=1e-12)


def test_single_particle_fringe(scaled):
    p = attr.evolve(scaled, transition_freq=300.0)
    book = ledger(p)
    m = measure(simulate(p, css(1)))
    assert m.mean_global == pytest.approx(0.5 * math.cos(book.xi) ** 2 * math.cos(total_phase(p)), abs=1e-10)


def test_single_particle_analytic(scaled):
    p, opt = oracle.options_for_angles(scaled, 0.4, 1.0)
    assert_moments_close(oracle.oracle_moments(p, css(1), opt), analytic.single_particle_moments(0.4, 1.0), 1e-12)


def test_measure_spin_up():
    basis = fock_basis(1)
    amplitudes = np.zeros(basis.dim, dtype=complex)
    amplitudes[basis.index[center_occupation(1, 0)]] = 1.0
    m = measure(FockState(n_particles=1, amplitudes=amplitudes))
    assert m.mean_global == 0.5
    assert math.isnan(m.visibility)


def test_norm_preserved(scaled, rng):
    p, opt = oracle.options_for_angles(scaled, 0.3, 1.2)
    f = simulate(p, random_symmetric(5, rng), opt)
    assert f.norm == pytest.approx(1.0, abs=1e-11)


def test_css_matches_closed_form(scaled):
    s = css(6)
    opt = SequenceOptions()
    expected = analytic.moments(s, oracle.effective_xi(scaled, opt), oracle.effective_phase(scaled, opt))
    assert_moments_close(oracle.oracle_moments(scaled, s, opt), expected, 1e-10)
    assert_moments_close(oracle.first_quantized_moments(scaled, s, opt), expected, 1e-10)


def test_random_state_matches_closed_form(scaled, rng):
    p, opt = oracle.options_for_angles(scaled, 0.3, 1.2)
    s = random_symmetric(6, rng)
    expected = analytic.moments(s, 0.3, 1.2)
    assert oracle.effective_xi(p, opt) == pytest.approx(0.3, rel=1e-12)
    assert oracle.effective_phase(p, opt) == pytest.approx(1.2, abs=1e-12)
    assert_moments_close(oracle.oracle_moments(p, s, opt), expected, 1e-10)
    assert_moments_close(oracle.first_quantized_moments(p, s, opt), expected, 1e-10)


def test_jitters_enter_the_phases(scaled):
    opt = SequenceOptions(hold_jitter=1e-5, pulse_jitter=2e-6, dislocation_energy=1e-32)
    s = css(3)
    expected = analytic.moments(s, oracle.effective_xi(scaled, opt), oracle.effective_phase(scaled, opt))
    assert oracle.effective_phase(scaled, opt) != total_phase(scaled)
    assert_moments_close(oracle.oracle_moments(scaled, s, opt), expected, 1e-10)


def test_outer_site_means_vanish(scaled):
    p, opt = oracle.options_for_angles(scaled, 0.8, 0.1)
    table = oracle.site_moments(simulate(p, css(3), opt))
    assert list(table["site"]) == [-2, -1, 0, 1, 2]
    outer = table[table["site"].abs() == 2]
    np.testing.assert_allclose(outer["mean"], 0.0, atol=1e-12)
    assert (table["variance"] >= -1e-12).all()


@pytest.mark.parametrize("n", range(1, 9))
def test_validation_passes(scaled, n):
    report = validate_moments(scaled, css(n), draws=Config.VALIDATION_DRAWS, seed=n)
    assert report.cases == Config.VALIDATION_DRAWS + 1
    assert report.flag_mismatches == 0
    assert report.passed, report.to_dict()


def test_validation_report_frame(scaled):
    report = validate_moments(scaled, css(2), draws=3)
    frame = report.to_frame()
    assert list(frame["field"]) == list(MeasurementMoments.FIELDS)
    assert report.to_dict()["passed"] == report.passed


def test_validation_rejects_large_states(scaled):
    with pytest.raises(OracleCapError):
        validate_moments(scaled, css(9), draws=0)


def test_validation_honours_a_lower_cap(scaled):
    with pytest.raises(OracleCapError):
        validate_moments(scaled, css(4), draws=0, cap=3)


def test_fringe_quadratures(scaled):
    s = css(3)
    offsets = [0.3, 1.7, -2.5]
    curve = oracle.fringe(scaled, s, offsets)
    for offset, value in zip(offsets, curve):
        direct = measure(simulate(scaled, s, SequenceOptions(readout_phase=offset))).mean_global
        assert value == pytest.approx(direct, abs=1e-12)


@pytest.mark.parametrize("n", [1, 4])
def test_fringe_peaks_at_zero_phase(scaled, n):
    assert abs(fringe_peak(scaled, css(n))) < 1e-8


def test_options_for_angles_needs_hold(scaled):
    with pytest.raises(ParamsError):
        oracle.options_for_angles(attr.evolve(scaled, hold_time=0.0), 0.1, 0.2)


def test_options_reject_non_finite():
    with pytest.raises(ParamsError):
        SequenceOptions(readout_phase=math.inf)


def test_single_particle_unitary_is_unitary(scaled):
    p, opt = oracle.options_for_angles(scaled, 0.5, -0.7)
    unitary = oracle.single_particle_unitary(p, opt)
    center_columns = unitary[:, CENTER_MODES]
    np.testing.assert_allclose(center_columns.conj().T @ center_columns, np.eye(2), atol=1e-12)


def test_dump_and_load(scaled, tmp_path):
    f = simulate(scaled, css(2))
    path = tmp_path / "state.json"
    oracle.dump_state(f, str(path))
    restored = oracle.load_state(str(path))
    assert restored.n_particles == 2
    np.testing.assert_array_equal(restored.amplitudes, f.amplitudes)
