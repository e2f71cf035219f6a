"""Laser and particle parameters, ponderomotive potential and the scaled box.

All quantities are SI internally; energies are offered in eV through
``*_eV`` properties only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as const

from .errors import DegenerateSystemError, InvalidParameterError

# He-4 atomic mass minus one electron.
HELIUM_ION_MASS = 4.002602 * const.atomic_mass - const.m_e


@dataclass(frozen=True)
class LaserConfig:
    """Counter-propagating pulsed laser forming the standing wave.

    ``curvature_a`` is the coefficient of the parabolic focus profile
    x**2 = 4 a (z - d/2); ``detector_distance_D`` is the distance from the
    interaction region to the detector plane.
    """

    wavelength: float = 532e-9
    pulse_energy: float = 0.2
    pulse_width: float = 10e-9
    waist_d: float = 125e-6
    curvature_a: float = 3.4e-3
    detector_distance_D: float = 1.0

    def __post_init__(self):
        for name in ("wavelength", "pulse_width", "waist_d", "curvature_a",
                     "detector_distance_D"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive, got {value!r}")
        # zero pulse energy is the field-free limit, so only negatives are rejected
        if not (np.isfinite(self.pulse_energy) and self.pulse_energy >= 0):
            raise InvalidParameterError(
                f"pulse_energy must be non-negative, got {self.pulse_energy!r}")

    @property
    def peak_power(self) -> float:
        return self.pulse_energy / self.pulse_width

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def omega(self) -> float:
        return 2 * math.pi * const.c / self.wavelength


@dataclass(frozen=True)
class ParticleSpecies:
    mass: float
    charge_magnitude: float
    incident_energy_eV: float
    label: str = ""

    def __post_init__(self):
        for name in ("mass", "charge_magnitude", "incident_energy_eV"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be positive, got {value!r}")

    @property
    def incident_energy(self) -> float:
        """Incident kinetic energy in J."""
        return self.incident_energy_eV * const.e

    @property
    def speed(self) -> float:
        return math.sqrt(2 * self.incident_energy / self.mass)

    @property
    def momentum(self) -> float:
        return math.sqrt(2 * self.mass * self.incident_energy)

    def with_energy(self, incident_energy_eV: float) -> "ParticleSpecies":
        return ParticleSpecies(self.mass, self.charge_magnitude, incident_energy_eV, self.label)

    @classmethod
    def from_speed(cls, mass, charge_magnitude, speed, label=""):
        """Species whose non-relativistic kinetic energy gives ``speed``."""
        return cls(mass, charge_magnitude, 0.5 * mass * speed**2 / const.e, label)


SPECIES_MASSES = {
    "electron": const.m_e,
    "H+": const.m_p,
    "He+": HELIUM_ION_MASS,
}


def make_species(label: str, incident_energy_eV: float) -> ParticleSpecies:
    """Look up a singly charged species by label (``electron``, ``H+``, ``He+``)."""
    try:
        mass = SPECIES_MASSES[label]
    except KeyError:
        known = ", ".join(sorted(SPECIES_MASSES))
        raise InvalidParameterError(f"unknown species {label!r} (known: {known})") from None
    return ParticleSpecies(mass, const.e, incident_energy_eV, label)


def reference_electron(laser: LaserConfig | None = None, tau: float = 0.8e-12) -> ParticleSpecies:
    """Electron whose transit time across the waist equals ``tau``.

    The incident energy of the electron run is not given directly; only the
    transit time is, so the speed is taken as d / tau.
    """
    laser = laser or LaserConfig()
    return ParticleSpecies.from_speed(const.m_e, const.e, laser.waist_d / tau, "electron")


@dataclass(frozen=True)
class PonderomotiveField:
    V0: float
    k: float
    intensity_I: float
    A0: float
    omega: float

    @property
    def V0_eV(self) -> float:
        return self.V0 / const.e


def ponderomotive_strength(laser: LaserConfig, species: ParticleSpecies) -> PonderomotiveField:
    """Strength V0 of the cycle-averaged potential V0 cos^2(kx) at the focus."""
    omega = laser.omega
    intensity = 4 * laser.peak_power / (math.pi * laser.waist_d**2)
    V0 = species.charge_magnitude**2 * intensity / (
        2 * species.mass * const.epsilon_0 * const.c * omega**2)
    A0 = math.sqrt(2 * intensity / (const.epsilon_0 * const.c * omega**2))
    return PonderomotiveField(V0=V0, k=laser.k, intensity_I=intensity, A0=A0, omega=omega)


def standing_wave_fields(x, t, field: PonderomotiveField, omega: float | None = None):
    """Electric (z) and magnetic (y) fields of the standing wave at (x, t)."""
    omega = field.omega if omega is None else omega
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    Ez = -field.A0 * omega * np.cos(field.k * x) * np.cos(omega * t)
    By = field.A0 * field.k * np.sin(field.k * x) * np.sin(omega * t)
    return Ez, By


def ponderomotive_potential(x, field: PonderomotiveField):
    return field.V0 * np.cos(field.k * np.asarray(x, dtype=float)) ** 2


def ponderomotive_force(x, field: PonderomotiveField):
    """F = -dV/dx = V0 k sin(2kx); its largest magnitude is V0 k."""
    return field.V0 * field.k * np.sin(2 * field.k * np.asarray(x, dtype=float))


def coulomb_vs_ponderomotive(s: float, field: PonderomotiveField, charge: float = const.e):
    """Coulomb force between two charges at separation ``s`` and max|F_P| / F_c."""
    if not s > 0:
        raise InvalidParameterError(f"separation must be positive, got {s!r}")
    Fc = charge**2 / (4 * math.pi * const.epsilon_0 * s**2)
    return Fc, field.V0 * field.k / Fc


def focused_intensity(x, laser: LaserConfig):
    """Transverse intensity profile of the parabolically focused beam."""
    x = np.asarray(x, dtype=float)
    return 4 * laser.peak_power / (math.pi * (x**2 / (2 * laser.curvature_a) + laser.waist_d) ** 2)


def interaction_time(laser: LaserConfig, species: ParticleSpecies) -> float:
    """Transit time d / v across the waist (non-relativistic speed)."""
    return laser.waist_d / species.speed


@dataclass(frozen=True)
class ScaledSystem:
    """Dimensionless box problem psi'' + (E' - A cos^2(w u)) psi = 0 on [-L, L].

    ``w = osc_const * sqrt(A)``. Physical fields (``alpha``, ``V0``, ``mass``)
    are optional so that purely mathematical systems can be built for
    testing; ``include_potential=False`` drops the cos^2 term while keeping
    the energy map E = V0 E' / A.
    """

    A: float = 500.0
    L: float = 10.0
    h: float = 1e-3
    osc_const: float = 0.0
    alpha: float | None = None
    V0: float | None = None
    mass: float | None = None
    include_potential: bool = True
    E_prime_resolution: float = 1e-10
    n_half: int = field(init=False)

    def __post_init__(self):
        if not self.A >= 0:
            raise InvalidParameterError(f"A must be non-negative, got {self.A!r}")
        if not self.L > 0:
            raise InvalidParameterError(f"L must be positive, got {self.L!r}")
        if not self.h > 0:
            raise InvalidParameterError(f"h must be positive, got {self.h!r}")
        n = int(round(self.L / self.h))
        if n < 2 or abs(n * self.h - self.L) > 1e-9 * self.L:
            raise InvalidParameterError(
                f"L / h must be an integer, got L={self.L!r}, h={self.h!r}")
        object.__setattr__(self, "n_half", n)

    @property
    def wave_number(self) -> float:
        """Angular frequency w of cos^2(w u) in scaled units."""
        return self.osc_const * math.sqrt(self.A)

    @property
    def grid(self) -> np.ndarray:
        j = np.arange(-self.n_half, self.n_half + 1)
        return j * self.h

    def potential(self, u):
        u = np.asarray(u, dtype=float)
        if not self.include_potential or self.A == 0:
            return np.zeros_like(u)
        return self.A * np.cos(self.wave_number * u) ** 2

    @property
    def energy_unit(self) -> float:
        """Joules per unit of E' (V0 / A)."""
        if self.V0 is None or self.A == 0:
            raise DegenerateSystemError("system carries no physical energy scale")
        return self.V0 / self.A

    def to_physical(self, E_prime):
        """Scaled eigenvalue(s) to physical energy in J."""
        return np.asarray(E_prime) * self.energy_unit

    @property
    def physical_width(self) -> float:
        if self.alpha is None:
            raise DegenerateSystemError("system carries no length scale")
        return 2 * self.L / self.alpha

    def max_resolved_E_prime(self, points_per_wavelength: int = 20) -> float:
        """Largest E' whose local wavelength is sampled by the grid at the given density."""
        return (2 * math.pi / (points_per_wavelength * self.h)) ** 2

    def without_potential(self) -> "ScaledSystem":
        return ScaledSystem(self.A, self.L, self.h, self.osc_const, self.alpha, self.V0,
                            self.mass, False, self.E_prime_resolution)


def build_scaled_system(field: PonderomotiveField, species: ParticleSpecies,
                        A: float = 500.0, L: float = 10.0, h: float = 1e-3,
                        E_prime_resolution: float = 1e-10) -> ScaledSystem:
    """Nondimensionalise the box problem with u = alpha x and E = V0 E' / A."""
    if not (A > 0 and L > 0 and h > 0):
        raise InvalidParameterError(f"A, L, h must be positive, got {A!r}, {L!r}, {h!r}")
    if field.V0 <= 0:
        raise DegenerateSystemError("V0 = 0: the scaling u = alpha x is undefined")
    m = species.mass
    alpha = math.sqrt(2 * m * field.V0 / (const.hbar**2 * A))
    osc = field.k * const.hbar / math.sqrt(2 * m * field.V0)
    return ScaledSystem(A=A, L=L, h=h, osc_const=osc, alpha=alpha, V0=field.V0,
                        mass=m, E_prime_resolution=E_prime_resolution)
