"""Wave-packet propagation in the box eigenbasis.

A packet psi(u, 0) is expanded as sum_n c_n psi_n(u); each coefficient then
only picks up the phase exp(-i E_n t / hbar), so the norm and the energy
expectation are conserved exactly by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants as const

from .eigensolver import Basis
from .errors import GridMismatchError, InvalidParameterError, UnderResolvedError
from .params import ScaledSystem
from .quadrature import simpson_weights


def _grid_of(grid):
    if isinstance(grid, ScaledSystem):
        return grid.grid
    if isinstance(grid, Basis):
        return grid.u
    return np.asarray(grid, dtype=float)


def _step(u):
    return float(u[1] - u[0])


def basis_id(basis: Basis) -> str:
    """Short label identifying a basis by its system and size."""
    s = basis.system
    return f"A={s.A!r},L={s.L!r},h={s.h!r},osc={s.osc_const!r},n={len(basis)}"


@dataclass
class InitialPacket:
    sigma: float
    u0: float
    u: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)

    @property
    def norm(self) -> float:
        w = simpson_weights(self.u.size, _step(self.u))
        return float(w @ np.abs(self.samples) ** 2)


@dataclass
class SpectralState:
    coeffs: np.ndarray = field(repr=False)
    basis_id: str
    t: float = 0.0

    @property
    def weight(self) -> float:
        """sum_n |c_n|^2."""
        return float(np.sum(np.abs(self.coeffs) ** 2))


@dataclass
class DensityProfile:
    u: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)
    t: float = 0.0

    @property
    def norm(self) -> float:
        w = simpson_weights(self.u.size, _step(self.u))
        return float(w @ self.rho)

    def asymmetry(self) -> float:
        """max |rho(u) - rho(-u)| on a grid symmetric about 0."""
        return float(np.max(np.abs(self.rho - self.rho[::-1])))


def make_gaussian(sigma: float, u0: float, grid) -> InitialPacket:
    """Normalised Gaussian exp(-(u - u0)^2 / (2 sigma^2)) sampled on ``grid``.

    ``grid`` is an array of u values or a :class:`ScaledSystem`.
    """
    u = _grid_of(grid)
    if not (np.isfinite(sigma) and sigma > 0):
        raise InvalidParameterError(f"sigma must be positive, got {sigma!r}")
    if not (u[0] < u0 < u[-1]):
        raise InvalidParameterError(f"u0={u0!r} lies outside the box ({u[0]}, {u[-1]})")
    inside = int(np.count_nonzero(np.abs(u - u0) <= 3 * sigma))
    if inside < 10:
        raise UnderResolvedError(
            f"only {inside} grid points within +-3 sigma (sigma={sigma!r}, h={_step(u)!r}); "
            "need at least 10 - widen the packet or refine the grid")
    psi = np.exp(-((u - u0) ** 2) / (2 * sigma**2))
    psi[0] = psi[-1] = 0.0
    w = simpson_weights(u.size, _step(u))
    psi /= math.sqrt(float(w @ psi**2))
    return InitialPacket(sigma, u0, u, psi.astype(complex))


def _check_grid(u, basis: Basis):
    if u.shape != basis.u.shape or not np.allclose(u, basis.u, rtol=0, atol=1e-12):
        raise GridMismatchError(
            f"packet grid ({u.size} points, step {_step(u)!r}) differs from the basis grid "
            f"({basis.u.size} points, step {basis.system.h!r})")


def project(packet: InitialPacket, basis: Basis) -> SpectralState:
    """Coefficients c_n = <psi_n, packet> by Simpson quadrature, stamped t = 0."""
    _check_grid(packet.u, basis)
    coeffs = basis.psi @ (basis.weights * packet.samples)
    return SpectralState(coeffs, basis_id(basis), 0.0)


def _energies(basis: Basis, V0=None, A=None):
    if V0 is None and A is None:
        return basis.E_joule
    A = basis.system.A if A is None else A
    V0 = basis.system.V0 if V0 is None else V0
    return V0 * basis.E_prime / A


def evolve(state: SpectralState, t: float, basis: Basis, V0: float | None = None,
           A: float | None = None) -> SpectralState:
    """Advance ``state`` by a duration ``t`` (s).

    c_n -> c_n exp(-i E_n t / hbar) with E_n = V0 E'_n / A in J (taken from
    the basis unless given). The returned timestamp is ``state.t + t``.
    """
    if not t >= 0:
        raise InvalidParameterError(f"evolution time must be >= 0, got {t!r}")
    if t == 0:
        return SpectralState(state.coeffs.copy(), state.basis_id, state.t)
    E = _energies(basis, V0, A)[:state.coeffs.size]
    phase = np.exp(-1j * (E * (t / const.hbar)))
    return SpectralState(state.coeffs * phase, state.basis_id, state.t + t)


def reconstruct(state: SpectralState, basis: Basis) -> np.ndarray:
    """psi(u, t) = sum_n c_n psi_n(u) on the basis grid."""
    n = state.coeffs.size
    return state.coeffs @ basis.psi[:n]


def density(state: SpectralState, basis: Basis) -> DensityProfile:
    psi = reconstruct(state, basis)
    return DensityProfile(basis.u, np.abs(psi) ** 2, state.t)


def energy_expectation(state: SpectralState, basis: Basis) -> float:
    """sum_n |c_n|^2 E_n in J."""
    E = basis.E_joule[:state.coeffs.size]
    return float(np.sum(np.abs(state.coeffs) ** 2 * E))


def reconstruction_error(packet: InitialPacket, state: SpectralState, basis: Basis) -> float:
    """L2 distance between the packet and its truncated expansion."""
    diff = packet.samples - reconstruct(state, basis)
    return math.sqrt(float(basis.weights @ np.abs(diff) ** 2))


def completeness_kernel(u0: float, N: int, basis: Basis) -> np.ndarray:
    """Partial sum g_N(u) = sum_{n<N} psi_n(u) psi_n(u0).

    psi_n(u0) is linearly interpolated when u0 falls between grid points.
    """
    if not 1 <= N <= len(basis):
        raise InvalidParameterError(f"N must lie in [1, {len(basis)}], got {N}")
    u = basis.u
    j = (u0 - u[0]) / basis.system.h
    i = int(np.clip(np.floor(j), 0, u.size - 2))
    f = j - i
    at_u0 = (1 - f) * basis.psi[:N, i] + f * basis.psi[:N, i + 1]
    return at_u0 @ basis.psi[:N]
