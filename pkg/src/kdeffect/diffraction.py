"""Diffraction-order extraction and experiment planning.

The far-field weight of order m after an interaction of strength beta is
P_m = J_m(beta)^2, with beta = V0 tau / hbar. Written out in laser
parameters (peak power P, wavelength lambda, waist d) for a particle of
mass m and incident energy E_i this is

    beta = e^2 lambda^2 P / (2 pi^3 eps0 c^3 hbar d sqrt(2 m E_i)),

so the waist giving beta = 1 follows in closed form. Adjacent orders land a
fringe width W = 2 lambda_dB D / lambda apart on a detector at distance D.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import constants as const
from scipy.integrate import simpson as _simpson
from scipy.signal import find_peaks

from .bessel import bessel_j_orders
from .errors import InsufficientPatternError, InvalidParameterError
from .evolution import DensityProfile
from .params import (LaserConfig, ParticleSpecies, interaction_time,
                     ponderomotive_strength)

HBAR, PLANCK = "hbar", "h"


@dataclass(frozen=True)
class Peak:
    u: float
    amplitude: float
    order: int


@dataclass
class DiffractionPattern:
    peaks: list[Peak]
    spacing: float
    source_time: float
    profile: DensityProfile | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.peaks)

    @property
    def orders(self) -> list[int]:
        return [p.order for p in self.peaks]

    def gaps(self) -> np.ndarray:
        return np.diff([p.u for p in self.peaks])

    def gap_spread(self) -> float:
        """Largest relative deviation of an adjacent gap from their mean."""
        g = self.gaps()
        if g.size == 0:
            return float("nan")
        return float(np.max(np.abs(g - g.mean())) / g.mean())

    def is_symmetric(self) -> bool:
        orders = self.orders
        return sorted(orders) == sorted(-m for m in orders)


def detect_peaks(profile: DensityProfile, min_prominence: float = 0.02) -> DiffractionPattern:
    """Local maxima of rho whose prominence exceeds ``min_prominence`` * max(rho).

    The global maximum is order 0; the others are numbered outward with the
    sign of their side. An empty pattern is returned when nothing qualifies.
    """
    rho = np.asarray(profile.rho, dtype=float)
    if rho.size == 0:
        raise InvalidParameterError("empty density profile")
    top = float(rho.max())
    if not top > 0:
        return DiffractionPattern([], float("nan"), profile.t, profile)
    # pad so that a maximum sitting on the boundary still counts
    padded = np.concatenate([[-top], rho, [-top]])
    idx, _ = find_peaks(padded, prominence=min_prominence * top)
    idx = idx - 1
    if idx.size == 0:
        return DiffractionPattern([], float("nan"), profile.t, profile)
    centre = int(np.argmax(rho[idx]))
    peaks = [Peak(float(profile.u[i]), float(rho[i]), k - centre) for k, i in enumerate(idx)]
    spacing = float(np.mean(np.diff(profile.u[idx]))) if idx.size > 1 else float("nan")
    return DiffractionPattern(peaks, spacing, profile.t, profile)


def order_probability(m: int, beta_int: float) -> float:
    """P_m = J_m(beta)^2; negative orders share the probability of |m|."""
    if not (np.isfinite(beta_int) and beta_int >= 0):
        raise InvalidParameterError(f"beta must be non-negative, got {beta_int!r}")
    m = abs(int(m))
    return float(bessel_j_orders(m, beta_int)[m] ** 2)


def order_probabilities(beta_int, m_max: int = 4) -> np.ndarray:
    """P_0..P_{m_max} for scalar or array beta; shape ``(m_max + 1,) + beta.shape``."""
    beta = np.asarray(beta_int, dtype=float)
    if np.any(~np.isfinite(beta)) or np.any(beta < 0):
        raise InvalidParameterError("beta must be non-negative")
    return bessel_j_orders(m_max, beta) ** 2


def _closed_form_factor(laser: LaserConfig, charge: float) -> float:
    """beta * d * sqrt(2 m E_i), independent of waist and particle kinematics."""
    return (charge**2 * laser.wavelength**2 * laser.peak_power
            / (2 * math.pi**3 * const.epsilon_0 * const.c**3 * const.hbar))


def interaction_strength(laser: LaserConfig, species: ParticleSpecies) -> float:
    """Closed-form beta for a particle crossing the waist once."""
    return _closed_form_factor(laser, species.charge_magnitude) / (
        laser.waist_d * species.momentum)


def interaction_strength_from_potential(laser: LaserConfig, species: ParticleSpecies) -> float:
    """beta = V0 tau / hbar, from the ponderomotive strength and transit time."""
    field_ = ponderomotive_strength(laser, species)
    return field_.V0 * interaction_time(laser, species) / const.hbar


def waist_for_unit_beta(laser: LaserConfig, species: ParticleSpecies) -> float:
    """Waist d (m) at which beta = 1; ``laser.waist_d`` itself is ignored."""
    return _closed_form_factor(laser, species.charge_magnitude) / species.momentum


def de_broglie_wavelength(species: ParticleSpecies, convention: str = HBAR) -> float:
    """hbar / p (default) or h / p."""
    if convention == HBAR:
        return const.hbar / species.momentum
    if convention == PLANCK:
        return const.h / species.momentum
    raise InvalidParameterError(f"convention must be {HBAR!r} or {PLANCK!r}, got {convention!r}")


def fringe_width(species: ParticleSpecies, laser: LaserConfig, convention: str = HBAR) -> float:
    """Separation W = 2 lambda_dB D / lambda of adjacent orders at the detector."""
    return 2 * de_broglie_wavelength(species, convention) * laser.detector_distance_D / laser.wavelength


SWEEP_PARAMETERS = ("d", "E_i")


@dataclass
class SweepTable:
    parameter: str
    columns: list[str]
    rows: np.ndarray  # one row per parameter value

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]


def sweep(parameter: str, values, laser: LaserConfig, species: ParticleSpecies,
          convention: str = HBAR, m_max: int = 4) -> SweepTable:
    """Tabulate beta, W and P_0..P_{m_max} over waists ("d", m) or energies ("E_i", eV)."""
    if parameter not in SWEEP_PARAMETERS:
        raise InvalidParameterError(
            f"sweep parameter must be one of {SWEEP_PARAMETERS}, got {parameter!r}")
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == 0 or np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise InvalidParameterError("sweep values must be a non-empty set of positive numbers")
    rows = []
    for v in values:
        if parameter == "d":
            lz, sp = replace(laser, waist_d=float(v)), species
        else:
            lz, sp = laser, species.with_energy(float(v))
        beta = interaction_strength(lz, sp)
        probs = order_probabilities(beta, m_max)
        rows.append([v, beta, fringe_width(sp, lz, convention), *probs])
    columns = [parameter, "beta", "W"] + [f"P{m}" for m in range(m_max + 1)]
    return SweepTable(parameter, columns, np.array(rows))


@dataclass
class AmplitudeReport:
    beta_int: float
    orders: list[int]
    weights: list[float]  # empirical window weights w_m, per detected peak
    probabilities: list[float]  # J_m(beta)^2 for the same orders
    ratios: list[float]
    total_weight: float
    rank_match: bool
    passed: bool


def _window_weight(profile: DensityProfile, centre: float, half_width: float) -> float:
    u = profile.u
    sel = (u >= centre - half_width) & (u <= centre + half_width)
    if np.count_nonzero(sel) < 2:
        return 0.0
    return float(_simpson(profile.rho[sel], x=u[sel]))


def _rank(values):
    return list(np.argsort(-np.asarray(values), kind="stable"))


def amplitude_check(pattern: DiffractionPattern, beta_int: float,
                    profile: DensityProfile | None = None, min_total: float = 0.8,
                    rank_orders: int = 3) -> AmplitudeReport:
    """Compare integrated peak weights with the Bessel order probabilities.

    Each peak's weight is the integral of rho over +-1/4 of the mean spacing.
    The check passes when the mean weights of |m| = 0..rank_orders-1 are
    ranked like J_m(beta)^2 and the windows hold at least ``min_total`` of
    the probability.
    """
    if len(pattern) < 3:
        raise InsufficientPatternError(
            f"amplitude comparison needs at least 3 peaks, got {len(pattern)}")
    profile = profile if profile is not None else pattern.profile
    if profile is None:
        raise InvalidParameterError("no density profile supplied or attached to the pattern")
    quarter = 0.25 * pattern.spacing
    orders = pattern.orders
    weights = [_window_weight(profile, p.u, quarter) for p in pattern.peaks]
    probs = [order_probability(m, beta_int) for m in orders]
    ratios = [w / p if p > 0 else float("inf") for w, p in zip(weights, probs)]

    by_abs = {}
    for m, w in zip(orders, weights):
        by_abs.setdefault(abs(m), []).append(w)
    wanted = list(range(rank_orders))
    rank_match = all(m in by_abs for m in wanted)
    if rank_match:
        w_mean = [float(np.mean(by_abs[m])) for m in wanted]
        p_ref = [order_probability(m, beta_int) for m in wanted]
        rank_match = _rank(w_mean) == _rank(p_ref)
    total = float(sum(weights))
    return AmplitudeReport(beta_int, orders, weights, probs, ratios, total, rank_match,
                           bool(rank_match and total >= min_total))


@dataclass
class PlanReport:
    beta_int: float
    tau: float  # s
    V0: float  # eV
    order_probs: list[float]  # P_0..P_4
    fringe_width_W: float  # m
    recommended_waist_d: float  # m
    detector_step: float  # m
    species: str = ""
    incident_energy_eV: float = float("nan")
    convention: str = HBAR

    def to_dict(self) -> dict:
        d = asdict(self)
        d["V0_J"] = self.V0 * const.e
        d["fringe_width_um"] = self.fringe_width_W * 1e6
        d["recommended_waist_um"] = self.recommended_waist_d * 1e6
        d["detector_step_um"] = self.detector_step * 1e6
        d["tau_ps"] = self.tau * 1e12
        return d


def plan(laser: LaserConfig, species: ParticleSpecies, convention: str = HBAR,
         samples_per_fringe: int = 10) -> PlanReport:
    """Interaction strength, order weights and detector layout for one configuration."""
    beta = interaction_strength(laser, species)
    W = fringe_width(species, laser, convention)
    return PlanReport(
        beta_int=beta,
        tau=interaction_time(laser, species),
        V0=ponderomotive_strength(laser, species).V0_eV,
        order_probs=[float(p) for p in order_probabilities(beta, 4)],
        fringe_width_W=W,
        recommended_waist_d=waist_for_unit_beta(laser, species),
        detector_step=W / samples_per_fringe,
        species=species.label,
        incident_energy_eV=species.incident_energy_eV,
        convention=convention,
    )
