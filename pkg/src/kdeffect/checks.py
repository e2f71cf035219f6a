"""Reduced-scale invariant suite behind ``kdeffect check``.

Each check returns a :class:`CheckResult`; the suite never raises for a
failing invariant, so one broken stage does not hide the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as const

from .bessel import bessel_j_orders, bessel_j_series, sum_rule
from .config import RunConfig
from .diffraction import fringe_width, interaction_strength, interaction_strength_from_potential
from .eigensolver import Basis, count_nodes, default_scan_limit, solve_spectrum
from .errors import KDError
from .evolution import density, energy_expectation, evolve, make_gaussian, project
from .params import (ScaledSystem, build_scaled_system, make_species, ponderomotive_force,
                     ponderomotive_potential, ponderomotive_strength, standing_wave_fields)

PASS, FAIL, SKIP = "pass", "fail", "skip"
CHECK_STATES = 200


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != FAIL

    def line(self) -> str:
        return f"[{self.status.upper():4}] {self.name}" + (f": {self.detail}" if self.detail else "")


def _check(name, passed, detail=""):
    return CheckResult(name, PASS if passed else FAIL, detail)


# ---------------------------------------------------------------- parameters

def _parameter_checks(config: RunConfig):
    laser, species = config.laser, config.species
    out = []
    field = ponderomotive_strength(laser, species)
    heavy = replace(species, mass=species.mass * 7.0)
    ratio = ponderomotive_strength(laser, heavy).V0 * 7.0 / field.V0 if field.V0 else 1.0
    double = replace(laser, pulse_energy=2 * laser.pulse_energy)
    lin = ponderomotive_strength(double, species).V0 / (2 * field.V0) if field.V0 else 1.0
    out.append(_check("V0 scales as 1/m and linearly in I",
                      abs(ratio - 1) < 1e-12 and abs(lin - 1) < 1e-12,
                      f"mass ratio error {abs(ratio - 1):.1e}, intensity error {abs(lin - 1):.1e}"))
    if field.V0 == 0:
        out.append(CheckResult("force is -dV/dx", SKIP, "V0 = 0"))
        return out

    rng = np.random.default_rng(0)
    lam = laser.wavelength
    x = rng.uniform(-lam, lam, 100)
    dx = lam * 1e-6
    numeric = -(ponderomotive_potential(x + dx, field) - ponderomotive_potential(x - dx, field)) / (2 * dx)
    err = np.max(np.abs(numeric - ponderomotive_force(x, field))) / (field.V0 * field.k)
    out.append(_check("force is -dV/dx", err < 1e-8, f"max relative error {err:.1e}"))

    t = rng.uniform(0, 2 * math.pi / field.omega, 100)
    dt = 1e-6 / field.omega
    dBdt = (standing_wave_fields(x, t + dt, field)[1] - standing_wave_fields(x, t - dt, field)[1]) / (2 * dt)
    dEdx = (standing_wave_fields(x + dx, t, field)[0] - standing_wave_fields(x - dx, t, field)[0]) / (2 * dx)
    scale = field.A0 * field.k * field.omega
    # Faraday's law, y component: dBy/dt = -(curl E)_y = dEz/dx
    err = np.max(np.abs(dBdt - dEdx)) / scale
    out.append(_check("Faraday's law for the standing-wave fields", err < 1e-9,
                      f"max relative residual {err:.1e}"))

    system = build_scaled_system(field, species, config.scaled.A, config.scaled.L, config.scaled.h)
    err = abs(system.alpha**2 * const.hbar**2 * system.A / (2 * species.mass * field.V0) - 1)
    out.append(_check("alpha^2 = 2 m V0 / (hbar^2 A)", err < 1e-12, f"relative error {err:.1e}"))
    return out


# ---------------------------------------------------------------- spectrum

def _resolution_check(system: ScaledSystem, E_top: float):
    limit = system.max_resolved_E_prime(20)
    h_needed = 2 * math.pi / (20 * math.sqrt(max(E_top, 1.0)))
    if E_top <= limit:
        return _check("grid resolution (>= 20 points per wavelength)", True,
                      f"h = {system.h:g} <= {h_needed:.3g} required at E' = {E_top:.4g}")
    return _check("grid resolution (>= 20 points per wavelength)", False,
                  f"h = {system.h:g} under-samples E' = {E_top:.4g}; set scaled.h <= "
                  f"{h_needed:.3g} (with L / h an integer)")


def _convergence_check(system: ScaledSystem, basis: Basis | None, n: int = 10):
    """Lowest levels at h and h/2 must agree to 1e-6 relative."""
    name = "convergence of the lowest levels under h -> h/2"
    fine = ScaledSystem(system.A, system.L, system.h / 2, system.osc_const, system.alpha,
                        system.V0, system.mass, system.include_potential,
                        system.E_prime_resolution)
    try:
        coarse = basis.E_prime[:n] if basis is not None else solve_spectrum(system, n).E_prime
        ref = solve_spectrum(fine, n).E_prime
    except KDError as exc:
        return _check(name, False, f"solve failed at h = {system.h:g} ({exc}); "
                      "reduce scaled.h")
    err = float(np.max(np.abs(coarse - ref) / np.maximum(np.abs(ref), 1.0)))
    if err <= 1e-6:
        return _check(name, True, f"max relative change {err:.1e}")
    return _check(name, False, f"max relative change {err:.1e} > 1e-6 between h = {system.h:g} "
                  f"and h = {system.h / 2:g}; reduce scaled.h")


def _basis_checks(basis: Basis, V0: float | None):
    n = len(basis)
    out = []
    parity_ok = all(p == ("even" if k % 2 == 0 else "odd") for k, p in enumerate(basis.parity))
    sym = np.array([np.max(np.abs(row - (1 if p == "even" else -1) * row[::-1]))
                    for row, p in zip(basis.psi, basis.parity)])
    out.append(_check("parity alternation and mirror symmetry", parity_ok and sym.max() < 1e-6,
                      f"max |psi(u) -+ psi(-u)| = {sym.max():.1e}"))
    nodes = np.array([count_nodes(row) for row in basis.psi])
    bad = np.flatnonzero(nodes != np.arange(n))
    out.append(_check("node count equals n", bad.size == 0,
                      "all states" if bad.size == 0 else f"first mismatch at n = {bad[0]}"))
    gaps = np.diff(basis.E_prime)
    # tunnelling multiplets below the barrier top are split by less than one ulp of E'
    ties = np.flatnonzero(gaps == 0)
    A = basis.system.A
    ties_ok = all(basis.E_prime[k] < A for k in ties) if A > 0 else ties.size == 0
    out.append(_check("eigenvalues nondecreasing (ties only below the barrier top)",
                      bool(np.all(gaps >= 0)) and ties_ok,
                      f"{ties.size} exact ties, smallest nonzero gap "
                      f"{np.min(gaps[gaps > 0]):.3g}" if np.any(gaps > 0) else ""))
    G = basis.gram()
    norm_err = float(np.max(np.abs(np.diag(G) - 1)))
    off = float(np.max(np.abs(G - np.diag(np.diag(G)))))
    out.append(_check("normalisation (1e-8)", norm_err < 1e-8, f"max error {norm_err:.1e}"))
    out.append(_check("orthogonality (1e-6)", off < 1e-6, f"max overlap {off:.1e}"))
    edges = float(np.max(np.abs(basis.psi[:, [0, -1]])))
    out.append(_check("psi(+-L) = 0", edges == 0.0, f"max |psi(+-L)| = {edges:.1e}"))
    if V0 is not None and basis.system.V0 is not None:
        E0 = float(basis.E_joule[0])
        out.append(_check("ground state 0 < E0 < V0", 0 < E0 < V0,
                          f"E0/V0 = {E0 / V0:.4f}"))
        K = basis.K
        out.append(_check("K nondecreasing in n", bool(np.all(np.diff(K) >= 0))))
    return out


def _free_box_check(system: ScaledSystem, n: int = 100):
    """Zero-potential spectrum against the infinite well of width 2L."""
    free = system.without_potential()
    basis = solve_spectrum(free, n)
    k = np.arange(1, n + 1)
    if system.V0 is not None and system.alpha is not None:
        width = free.physical_width
        exact = (k * math.pi * const.hbar / width) ** 2 / (2 * free.mass)
        got = basis.E_joule
        label = "physical"
    else:
        exact = (k * math.pi / (2 * free.L)) ** 2
        got = basis.E_prime
        label = "scaled"
    err = float(np.max(np.abs(got / exact - 1)))
    return _check(f"infinite-well oracle, {label} units, n < {n} (1e-6)", err < 1e-6,
                  f"max relative error {err:.1e}")


def _A_invariance_check(config: RunConfig, field, n: int = 50):
    """Physical levels are unchanged when A is halved at fixed physical box width."""
    s = config.scaled
    factor = math.sqrt(2.0)  # L and h scale with sqrt(A) to keep 2L/alpha and the grid fixed
    a = build_scaled_system(field, config.species, s.A, s.L, s.h)
    b = build_scaled_system(field, config.species, s.A / 2, s.L * factor, s.h * factor)
    Ea = solve_spectrum(a, n + 1).E_joule
    Eb = solve_spectrum(b, n + 1).E_joule
    err = float(np.max(np.abs(Eb / Ea - 1)))
    return _check(f"A-invariance (A = {s.A:g} vs {s.A / 2:g}, n <= {n}, 1e-4)", err < 1e-4,
                  f"max relative difference {err:.1e}")


# ---------------------------------------------------------------- evolution / planner

def _evolution_checks(config: RunConfig, basis: Basis):
    out = []
    tau = config.tau
    packet = make_gaussian(config.packet.sigma, config.packet.u0, basis.u)
    out.append(_check("packet normalisation (1e-8)", abs(packet.norm - 1) < 1e-8,
                      f"norm - 1 = {packet.norm - 1:.1e}"))
    state = project(packet, basis)
    if config.packet.u0 == 0:
        odd = float(np.max(np.abs(state.coeffs[1::2])))
        out.append(_check("odd coefficients vanish for an even packet", odd < 1e-10,
                          f"max |c_odd| = {odd:.1e}"))
    times = [0.0, tau / 4, tau / 2, tau]
    profiles = [density(evolve(state, t, basis), basis) for t in times]
    norms = np.array([p.norm for p in profiles])
    drift = float(np.ptp(norms))
    out.append(_check("unitarity: integral of rho constant (1e-6)", drift <= 1e-6,
                      f"drift {drift:.1e}, sum |c|^2 = {state.weight:.6f}"))
    if config.packet.u0 == 0:
        asym = max(p.asymmetry() for p in profiles)
        out.append(_check("parity conservation rho(u) = rho(-u) (1e-6)", asym <= 1e-6,
                          f"max asymmetry {asym:.1e}"))
    e0 = energy_expectation(state, basis)
    e1 = energy_expectation(evolve(state, tau, basis), basis)
    out.append(_check("energy expectation conserved", abs(e1 - e0) <= 1e-12 * abs(e0)))
    split = evolve(evolve(state, 0.3 * tau, basis), 0.7 * tau, basis)
    whole = evolve(state, tau, basis)
    gerr = float(np.max(np.abs(split.coeffs - whole.coeffs)))
    out.append(_check("evolution group property (1e-10)", gerr <= 1e-10, f"max error {gerr:.1e}"))
    return out


def _planner_checks(config: RunConfig):
    out = []
    betas = np.array([0.5, 1.0, 5.2])
    rule = float(np.max(np.abs(sum_rule(betas, 60) - 1)))
    out.append(_check("Bessel sum rule (1e-9)", rule <= 1e-9, f"max error {rule:.1e}"))
    x = np.linspace(0, 10, 201)
    J = bessel_j_orders(4, x)
    serr = max(float(np.max(np.abs(J[m] ** 2 - bessel_j_series(m, x) ** 2))) for m in range(5))
    out.append(_check("P_m recurrence vs power series (1e-8)", serr <= 1e-8, f"max error {serr:.1e}"))

    laser, species = config.laser, config.species
    if laser.pulse_energy > 0:
        b1 = interaction_strength(laser, species)
        b2 = interaction_strength_from_potential(laser, species)
        out.append(_check("beta closed form vs V0 tau / hbar (2%)", abs(b1 / b2 - 1) <= 0.02,
                          f"relative difference {abs(b1 / b2 - 1):.1e}"))
        ds = np.linspace(0.5, 4, 8) * laser.waist_d
        bs = [interaction_strength(replace(laser, waist_d=d), species) for d in ds]
        out.append(_check("beta decreasing in d", bool(np.all(np.diff(bs) < 0))))
    energies = np.geomspace(10, 500, 8)
    Ws = [fringe_width(make_species("H+", e), laser) for e in energies]
    out.append(_check("W decreasing in E_i", bool(np.all(np.diff(Ws) < 0))))
    r = fringe_width(make_species("He+", 50), laser) / fringe_width(make_species("H+", 50), laser)
    exact = math.sqrt(make_species("H+", 50).mass / make_species("He+", 50).mass)
    out.append(_check("W(He+) / W(H+) = sqrt(m_H / m_He)", abs(r / exact - 1) < 1e-12))
    return out


# ---------------------------------------------------------------- suite

def run_checks(config: RunConfig, n_states: int = CHECK_STATES) -> list[CheckResult]:
    results = _parameter_checks(config)
    field = ponderomotive_strength(config.laser, config.species)
    s = config.scaled

    if field.V0 == 0:
        # no physical scale: exercise the zero-potential branch in scaled units
        system = ScaledSystem(A=s.A, L=s.L, h=s.h, include_potential=False)
        results.append(_free_box_check(system))
        basis = solve_spectrum(system, n_states)
        results.extend(_basis_checks(basis, None))
        results.append(CheckResult("wave-packet evolution", SKIP, "V0 = 0: no time scale"))
        results.extend(_planner_checks(config))
        return results

    system = build_scaled_system(field, config.species, s.A, s.L, s.h, s.E_prime_resolution)
    basis = None
    try:
        basis = solve_spectrum(system, n_states)
    except KDError as exc:
        results.append(_check(f"spectrum solve ({n_states} states)", False,
                              f"{type(exc).__name__}: {exc}"))
    E_top = float(basis.E_prime[-1]) if basis is not None else _expected_top(system, n_states)
    results.append(_resolution_check(system, E_top))
    results.append(_convergence_check(system, basis))
    if basis is None:
        results.append(CheckResult("spectrum invariants", SKIP, "solve failed"))
    else:
        results.extend(_basis_checks(basis, field.V0))
    results.append(_free_box_check(system))
    results.append(_A_invariance_check(config, field))
    if basis is not None:
        results.extend(_evolution_checks(config, basis))
    results.extend(_planner_checks(config))
    return results


def _expected_top(system: ScaledSystem, n_states: int) -> float:
    return default_scan_limit(system, n_states) / 1.1
