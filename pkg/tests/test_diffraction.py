import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants as const

from kdeffect.bessel import bessel_j_series
from kdeffect.diffraction import (PLANCK, amplitude_check, detect_peaks, fringe_width,
                                  interaction_strength, interaction_strength_from_potential,
                                  order_probability, plan, sweep, waist_for_unit_beta)
from kdeffect.errors import InsufficientPatternError, InvalidParameterError
from kdeffect.evolution import DensityProfile
from kdeffect.params import LaserConfig, ParticleSpecies, make_species

PROTON_LASER = LaserConfig(waist_d=560e-6)


def comb(beta, spacing=1.0, width=0.05, orders=4, n=8001):
    """Synthetic density sum_m P_m G(u - m spacing) with unit-area Gaussians."""
    u = np.linspace(-6 * spacing, 6 * spacing, n)
    rho = np.zeros_like(u)
    for m in range(-orders, orders + 1):
        g = np.exp(-((u - m * spacing) ** 2) / (2 * width**2)) / (width * math.sqrt(2 * math.pi))
        rho += order_probability(m, beta) * g
    return DensityProfile(u, rho, 0.0)


# ---------------------------------------------------------------- peaks

def test_single_gaussian_gives_order_zero():
    u = np.linspace(-5, 5, 2001)
    p = detect_peaks(DensityProfile(u, np.exp(-(u**2)), 0.0))
    assert p.orders == [0] and p.peaks[0].u == 0.0


def test_flat_profile_gives_empty_pattern():
    u = np.linspace(-1, 1, 11)
    assert len(detect_peaks(DensityProfile(u, np.zeros_like(u), 0.0))) == 0


def test_comb_spacing_and_orders():
    profile = comb(1.4, spacing=0.8)  # P0 is still the largest weight at beta = 1.4
    p = detect_peaks(profile, 0.001)
    assert p.spacing == pytest.approx(0.8, rel=0.01)
    assert p.orders == list(range(-3, 4))
    assert p.is_symmetric()
    assert p.gap_spread() < 0.01


def test_orders_counted_from_global_maximum():
    u = np.linspace(0, 10, 1001)
    rho = sum(a * np.exp(-((u - c) ** 2) / 0.02) for a, c in ((0.5, 2), (1.0, 4), (0.7, 6), (0.3, 8)))
    p = detect_peaks(DensityProfile(u, rho, 0.0))
    assert p.orders == [-1, 0, 1, 2]


# ---------------------------------------------------------------- probabilities

def test_order_probability_at_zero():
    assert order_probability(0, 0.0) == 1.0
    assert all(order_probability(m, 0.0) == 0.0 for m in range(1, 5))


def test_probability_curves_match_series():
    for beta in np.linspace(0, 10, 101):
        for m in range(5):
            assert order_probability(m, beta) == pytest.approx(
                float(bessel_j_series(m, beta)) ** 2, abs=1e-8)


def test_probability_symmetric_in_order():
    assert order_probability(-3, 2.2) == order_probability(3, 2.2)


def test_negative_beta_rejected():
    with pytest.raises(InvalidParameterError):
        order_probability(0, -0.1)


# ---------------------------------------------------------------- interaction strength

def test_proton_reference_point():
    H = make_species("H+", 50.0)
    assert interaction_strength(PROTON_LASER, H) == pytest.approx(1.0, rel=0.05)
    assert waist_for_unit_beta(PROTON_LASER, H) == pytest.approx(560e-6, rel=0.05)


def test_closed_form_by_hand():
    H = make_species("H+", 50.0)
    P = 0.2 / 10e-9
    beta = (const.e**2 * (532e-9) ** 2 * P
            / (2 * math.pi**3 * const.epsilon_0 * const.c**3 * const.hbar * 560e-6)
            / math.sqrt(2 * const.m_p * 50 * const.e))
    assert interaction_strength(PROTON_LASER, H) == pytest.approx(beta, rel=1e-13)


def test_zero_power_gives_zero_beta():
    assert interaction_strength(LaserConfig(pulse_energy=0.0), make_species("H+", 50)) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.floats(3e-7, 1.5e-6), st.floats(1e-3, 1.0), st.floats(1e-5, 2e-3),
       st.floats(1.0, 1e4), st.sampled_from(["electron", "H+", "He+"]))
def test_closed_form_equals_potential_route(wl, energy, waist, E_i, label):
    laser = LaserConfig(wavelength=wl, pulse_energy=energy, waist_d=waist)
    sp = make_species(label, E_i)
    a = interaction_strength(laser, sp)
    b = interaction_strength_from_potential(laser, sp)
    assert a == pytest.approx(b, rel=0.02)


def test_waist_round_trip_and_energy_scaling():
    H = make_species("H+", 50.0)
    d = waist_for_unit_beta(PROTON_LASER, H)
    laser = LaserConfig(waist_d=d)
    assert interaction_strength(laser, H) == pytest.approx(1.0, abs=1e-10)
    assert waist_for_unit_beta(PROTON_LASER, H.with_energy(200.0)) == pytest.approx(d / 2, rel=1e-14)


def test_transit_time_consistent_with_beta(field):
    from kdeffect.params import interaction_time, ponderomotive_strength
    H = make_species("H+", 50.0)
    tau = interaction_time(PROTON_LASER, H)
    beta = interaction_strength(PROTON_LASER, H)
    V0 = ponderomotive_strength(PROTON_LASER, H).V0
    assert tau == pytest.approx(beta * const.hbar / V0, rel=0.02)


# ---------------------------------------------------------------- fringe width

def test_fringe_width_species_and_energy_scaling():
    laser = LaserConfig()
    for E in (10.0, 50.0, 300.0):
        H, He = make_species("H+", E), make_species("He+", E)
        assert fringe_width(He, laser) < fringe_width(H, laser)
        assert fringe_width(He, laser) / fringe_width(H, laser) == pytest.approx(
            math.sqrt(H.mass / He.mass), rel=1e-14)
    H = make_species("H+", 50.0)
    assert fringe_width(H.with_energy(100.0), laser) == pytest.approx(
        fringe_width(H, laser) / math.sqrt(2), rel=1e-14)


def test_fringe_width_reference_value():
    W = fringe_width(make_species("H+", 50.0), LaserConfig())
    assert W == pytest.approx(2.4e-6, rel=0.02)
    assert fringe_width(make_species("H+", 50.0), LaserConfig(), PLANCK) == pytest.approx(
        2 * math.pi * W, rel=1e-14)
    with pytest.raises(InvalidParameterError):
        fringe_width(make_species("H+", 50.0), LaserConfig(), "planck")


# ---------------------------------------------------------------- sweeps and plan

def test_waist_sweep_crosses_unit_beta():
    t = sweep("d", np.linspace(100e-6, 2e-3, 200), PROTON_LASER, make_species("H+", 50.0))
    beta = t.column("beta")
    assert np.all(np.diff(beta) < 0)
    crossing = t.column("d")[np.argmin(np.abs(beta - 1))]
    assert crossing == pytest.approx(560e-6, rel=0.05)
    assert t.columns == ["d", "beta", "W", "P0", "P1", "P2", "P3", "P4"]


def test_energy_sweep_fringe_width_decreases():
    for label in ("H+", "He+"):
        t = sweep("E_i", np.linspace(10, 500, 50), PROTON_LASER, make_species(label, 50.0))
        assert np.all(np.diff(t.column("W")) < 0)


def test_single_point_sweep_matches_direct_calls():
    H = make_species("H+", 50.0)
    t = sweep("d", [560e-6], LaserConfig(), H)
    assert t.rows.shape == (1, 8)
    assert t.column("beta")[0] == interaction_strength(PROTON_LASER, H)
    assert t.column("P2")[0] == pytest.approx(order_probability(2, t.column("beta")[0]), rel=1e-15)


def test_sweep_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        sweep("lambda", [1.0], LaserConfig(), make_species("H+", 50.0))
    with pytest.raises(InvalidParameterError):
        sweep("d", [], LaserConfig(), make_species("H+", 50.0))


def test_plan_report():
    r = plan(PROTON_LASER, make_species("H+", 50.0))
    assert r.recommended_waist_d == pytest.approx(5.6e-4, rel=0.05)
    assert r.detector_step == pytest.approx(r.fringe_width_W / 10)
    assert len(r.order_probs) == 5 and all(0 <= p <= 1 for p in r.order_probs)
    d = r.to_dict()
    assert d["recommended_waist_um"] == pytest.approx(r.recommended_waist_d * 1e6)
    He = plan(PROTON_LASER, make_species("He+", 50.0))
    assert He.fringe_width_W < r.fringe_width_W


# ---------------------------------------------------------------- amplitudes

def test_amplitude_check_on_synthetic_density():
    beta = 1.3
    profile = comb(beta, spacing=1.0, width=0.05)
    pattern = detect_peaks(profile, 0.001)
    report = amplitude_check(pattern, beta)
    ratios = [r for r, m in zip(report.ratios, report.orders) if abs(m) <= 3]
    assert np.allclose(ratios, 1.0, atol=0.02)
    assert report.rank_match and report.passed
    w = dict(zip(report.orders, report.weights))
    for m in (1, 2):
        assert w[m] == pytest.approx(w[-m], rel=0.05)


def test_amplitude_check_detects_wrong_ranking():
    profile = comb(1.3)
    pattern = detect_peaks(profile, 0.001)
    report = amplitude_check(pattern, 2.6)  # P1 > P0 at this beta, unlike the data
    assert not report.rank_match and not report.passed


def test_amplitude_check_needs_three_peaks():
    u = np.linspace(-5, 5, 2001)
    pattern = detect_peaks(DensityProfile(u, np.exp(-(u**2)), 0.0))
    with pytest.raises(InsufficientPatternError):
        amplitude_check(pattern, 1.0)
