"""Plan a proton and a helium-ion Kapitza-Dirac run.

For a 50 eV beam crossing the 532 nm standing wave, print the interaction
strength, the waist that gives unit strength, the diffraction-order
probabilities and the fringe width at a 1 m detector, then sweep the waist.

Run: python3 demos/beam_planning.py
"""

import numpy as np

from kdeffect.diffraction import plan, sweep
from kdeffect.params import LaserConfig, make_species


def main():
    laser = LaserConfig(waist_d=560e-6)
    for label in ("H+", "He+"):
        species = make_species(label, 50.0)
        r = plan(laser, species)
        probs = ", ".join(f"P{m}={p:.3f}" for m, p in enumerate(r.order_probs))
        print(f"{label:4s} beta={r.beta_int:.3f}  d(beta=1)={r.recommended_waist_d * 1e6:.1f} um  "
              f"W={r.fringe_width_W * 1e6:.3f} um  step={r.detector_step * 1e6:.3f} um")
        print(f"     {probs}")

    table = sweep("d", np.linspace(200e-6, 1.2e-3, 6), laser, make_species("H+", 50.0))
    print("\nwaist sweep, H+ at 50 eV")
    print("  d [um]   beta    P0     P1     P2")
    for d, beta, _, p0, p1, p2, *_ in table.rows:
        print(f"  {d * 1e6:6.0f}  {beta:5.2f}  {p0:.3f}  {p1:.3f}  {p2:.3f}")


if __name__ == "__main__":
    main()
