"""Stage functions shared by the command line and the check suite."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .config import RunConfig
from .diffraction import DiffractionPattern, detect_peaks
from .eigensolver import Basis, solve_spectrum
from .evolution import (DensityProfile, InitialPacket, SpectralState, density, evolve,
                        make_gaussian, project)
from .io import load_basis, save_basis
from .params import PonderomotiveField, ScaledSystem, build_scaled_system, ponderomotive_strength

log = logging.getLogger(__name__)


def build_system(config: RunConfig) -> tuple[PonderomotiveField, ScaledSystem]:
    field = ponderomotive_strength(config.laser, config.species)
    s = config.scaled
    system = build_scaled_system(field, config.species, s.A, s.L, s.h, s.E_prime_resolution)
    return field, system


def solve(config: RunConfig, threads: int = 1, cache_dir=None,
          n_states: int | None = None) -> Basis:
    """Eigenbasis for ``config``; reuses ``cache_dir/basis-<hash>.npz`` when present."""
    _, system = build_system(config)
    n = config.scaled.n_states if n_states is None else n_states
    cache = None
    if cache_dir is not None and n_states is None:
        cache = Path(cache_dir) / f"basis-{config.solve_hash()[:16]}.npz"
        if cache.exists():
            log.info("reusing cached basis %s", cache)
            return load_basis(cache, system)
    basis = solve_spectrum(system, n, threads=threads)
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        save_basis(cache, basis)
    return basis


@dataclass
class EvolutionRun:
    packet: InitialPacket
    initial: SpectralState
    states: list[SpectralState]
    profiles: list[DensityProfile]
    pattern: DiffractionPattern  # peaks of the last profile


def run_evolution(config: RunConfig, basis: Basis) -> EvolutionRun:
    """Project the configured packet and sample rho at every configured time."""
    packet = make_gaussian(config.packet.sigma, config.packet.u0, basis.u)
    initial = project(packet, basis)
    states = [evolve(initial, t, basis) for t in config.resolved_times()]
    profiles = [density(s, basis) for s in states]
    pattern = detect_peaks(profiles[-1], config.analysis.prominence)
    return EvolutionRun(packet, initial, states, profiles, pattern)
