"""Stationary states and wave-packet evolution for the reference electron run.

Solves a reduced basis (default 200 states; pass a number for more) of the
scaled equation, fits E_n = a0 + a1 n + a2 n^2, projects the sigma = 0.07
Gaussian onto it and reports the norm and the peaks of the density at
0, tau/2 and tau (tau = 0.8 ps).

Run: python3 demos/electron_packet.py [n_states]
"""

import sys
import time

from kdeffect.config import RunConfig
from kdeffect.diffraction import detect_peaks, interaction_strength_from_potential
from kdeffect.eigensolver import fit_quadratic
from kdeffect.pipeline import run_evolution, solve


def main(n_states=200):
    config = RunConfig()
    t0 = time.perf_counter()
    basis = solve(config, n_states=n_states)
    print(f"{len(basis)} states in {time.perf_counter() - t0:.0f} s; "
          f"{int(basis.paired.sum())} belong to tunnelling pairs")
    fit = fit_quadratic(basis)
    print(f"E_n = {fit.a0:.3e} + {fit.a1:.3e} n + {fit.a2:.3e} n^2 eV "
          f"(rms {fit.rms_residual:.1e} eV)")

    run = run_evolution(config, basis)
    print(f"packet weight captured by the basis: {run.initial.weight:.6f}")
    beta = interaction_strength_from_potential(config.laser, config.species)
    print(f"interaction strength V0 tau / hbar = {beta:.2f}")
    for profile in run.profiles:
        pattern = detect_peaks(profile, config.analysis.prominence)
        print(f"t = {profile.t * 1e12:4.2f} ps  norm {profile.norm:.8f}  "
              f"peaks {len(pattern)} at orders {pattern.orders}")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 200)
