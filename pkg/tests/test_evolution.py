import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import constants as const

from kdeffect.errors import GridMismatchError, InvalidParameterError, UnderResolvedError
from kdeffect.evolution import (InitialPacket, completeness_kernel, density, energy_expectation,
                                evolve, make_gaussian, project, reconstruct)
from kdeffect.params import ScaledSystem

TAU = 0.8e-12


@pytest.fixture(scope="module")
def packet(system):
    return make_gaussian(0.07, 0.0, system)


@pytest.fixture(scope="module")
def state(packet, desk_basis):
    return project(packet, desk_basis)


def test_gaussian_is_normalised_and_even(packet):
    assert packet.norm == pytest.approx(1.0, abs=1e-8)
    mid = packet.u.size // 2
    assert packet.u[mid] == 0.0 and np.argmax(np.abs(packet.samples)) == mid
    assert np.array_equal(packet.samples, packet.samples[::-1])


def test_gaussian_second_moment(system):
    p = make_gaussian(0.5, 0.0, system)
    w = np.abs(p.samples) ** 2
    moment = np.trapezoid(p.u**2 * w, p.u) / np.trapezoid(w, p.u)
    # |psi|^2 is a Gaussian of variance sigma^2 / 2
    assert moment == pytest.approx(0.5**2 / 2, rel=0.01)


def test_gaussian_errors(system):
    with pytest.raises(UnderResolvedError):
        make_gaussian(1e-3, 0.0, system)
    with pytest.raises(InvalidParameterError):
        make_gaussian(-0.1, 0.0, system)
    with pytest.raises(InvalidParameterError):
        make_gaussian(0.1, 12.0, system)


def test_projection_of_a_basis_state(desk_basis):
    p = InitialPacket(0.0, 0.0, desk_basis.u, desk_basis.psi[7].astype(complex))
    c = project(p, desk_basis).coeffs
    expected = np.zeros(len(desk_basis))
    expected[7] = 1.0
    assert np.max(np.abs(c - expected)) < 1e-6


def test_even_packet_has_no_odd_coefficients(state):
    assert np.max(np.abs(state.coeffs[1::2])) < 1e-12
    assert state.weight <= 1 + 1e-8
    assert state.t == 0.0


def test_projection_grid_mismatch(desk_basis):
    other = make_gaussian(0.07, 0.0, ScaledSystem(L=10.0, h=2e-3))
    with pytest.raises(GridMismatchError):
        project(other, desk_basis)


def test_identity_evolution_reconstructs_packet(desk_basis):
    # a packet inside the span of the basis is reproduced exactly
    p = InitialPacket(0.0, 0.0, desk_basis.u, (desk_basis.psi[2] + 0.5j * desk_basis.psi[9]))
    s = evolve(project(p, desk_basis), 0.0, desk_basis)
    assert np.max(np.abs(reconstruct(s, desk_basis) - p.samples)) < 1e-8


def test_evolution_is_a_pure_phase(state, desk_basis):
    later = evolve(state, TAU, desk_basis)
    assert np.allclose(np.abs(later.coeffs), np.abs(state.coeffs), rtol=0, atol=1e-15)
    assert later.weight == pytest.approx(state.weight, abs=1e-14)
    assert later.t == TAU
    assert energy_expectation(later, desk_basis) == pytest.approx(
        energy_expectation(state, desk_basis), rel=1e-14)


def test_evolution_uses_physical_energies(state, desk_basis):
    t = 1e-15
    later = evolve(state, t, desk_basis)
    phase = np.exp(-1j * desk_basis.E_joule * t / const.hbar)
    assert np.allclose(later.coeffs, state.coeffs * phase, rtol=0, atol=1e-14)
    explicit = evolve(state, t, desk_basis, V0=desk_basis.system.V0, A=desk_basis.system.A)
    assert np.allclose(explicit.coeffs, later.coeffs, rtol=0, atol=1e-15)


def test_negative_time_rejected(state, desk_basis):
    with pytest.raises(InvalidParameterError):
        evolve(state, -1e-15, desk_basis)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_group_property(state, desk_basis, f1, f2):
    t1, t2 = sorted((f1 * TAU, f2 * TAU))
    two_step = evolve(evolve(state, t1, desk_basis), t2 - t1, desk_basis)
    one_step = evolve(state, t2, desk_basis)
    assert np.max(np.abs(two_step.coeffs - one_step.coeffs)) < 1e-10
    assert two_step.t == pytest.approx(t2, rel=1e-15, abs=1e-30)


def test_density_invariants(state, desk_basis):
    norms = []
    for t in (0.0, TAU / 4, TAU / 2, TAU):
        rho = density(evolve(state, t, desk_basis), desk_basis)
        assert np.all(rho.rho >= 0)
        assert rho.asymmetry() < 1e-6
        norms.append(rho.norm)
    assert np.ptp(norms) < 1e-6
    assert norms[0] == pytest.approx(state.weight, abs=1e-6)


def test_initial_density_is_single_peak(state, desk_basis):
    rho = density(state, desk_basis)
    assert np.argmax(rho.rho) == rho.u.size // 2


def test_completeness_kernel(desk_basis):
    mid = desk_basis.u.size // 2
    g1 = completeness_kernel(0.0, 1, desk_basis)
    assert np.allclose(g1, desk_basis.psi[0] * desk_basis.psi[0, mid], rtol=0, atol=1e-15)
    peaks = [completeness_kernel(0.0, N, desk_basis)[mid] for N in (25, 50, 100, 200)]
    assert np.all(np.diff(peaks) > 0)
    with pytest.raises(InvalidParameterError):
        completeness_kernel(0.0, 0, desk_basis)


def test_completeness_kernel_reproduces_basis_member(desk_basis):
    u0 = 0.4321
    g = completeness_kernel(u0, 200, desk_basis)
    value = float((g * desk_basis.weights) @ desk_basis.psi[3])
    expected = float(np.interp(u0, desk_basis.u, desk_basis.psi[3]))
    assert value == pytest.approx(expected, abs=1e-3)
