"""Resonance trapping of a scattered particle by its own scattered wave.

Shows the discrete scattered directions of a surface lattice, then follows
the reduced (E, deltaS) dynamics around one resonance direction: trapped
trajectories lock onto an equilibrium phase, oscillatory ones wind forever.

Run:  python demos/demo_bragg_trapping.py
"""

import numpy as np

from metronlab.bragg import (
    BraggTrapState,
    FourVector,
    LatticeSpec,
    bragg_scatter_set,
    classify_trapping,
    equilibrium_phases,
    first_integral,
    integrate_trap,
    resonance_direction,
)

# --- kinematics: scattered directions of a 2-D grating ----------------------
omega0 = 1.0
g = 0.6
spatial = np.array([0.2, 0.0, 1.1])
k_i = FourVector(*spatial, np.sqrt(omega0**2 + spatial @ spatial))
lattice = LatticeSpec(
    fundamental_wavenumbers=(FourVector(g, 0, 0, 0), FourVector(0, g, 0, 0)),
    dimensionality=2,
    normal_axis=2,
    max_order=1,
)
print("incident wavenumber:", np.round(k_i, 4))
print("on-shell scattered wavenumbers (2-D grating, |order| <= 1):")
for k_s in bragg_scatter_set(k_i, lattice, omega0):
    u = resonance_direction(k_s, omega0)
    print(f"  k_s = {np.round(k_s, 4)}   resonant velocity u = {np.round(u, 4)}")

# --- trapping dynamics around one resonance direction -----------------------
print("\nreduced trapping dynamics dE/ds = -gamma E cos(dS+phi), dS' = -omega0 E")
for ratio in (0.3, 2.6):
    state = BraggTrapState(E=ratio, deltaS=0.0, gamma=1.0, phi=0.25, omega0=1.0)
    res = classify_trapping(state)
    print(f"\n  omega0*E0/gamma = {ratio}:  B = {res['B']:+.4f}  ->  {res['verdict']}")
    s, E, dS = integrate_trap(state, 120.0)
    drift = first_integral(E, dS, state)
    print(f"    E: {E[0]:.3f} -> {E[-1]:.2e}    deltaS: 0 -> {dS[-1]:+.3f}")
    print(f"    first-integral drift: {np.max(np.abs(drift - drift[0])):.2e}")
    if res["verdict"] == "Trapped":
        stable, unstable = equilibrium_phases(res["B"], state.phi)
        print(f"    equilibrium phases: stable {stable:.4f}, unstable {unstable:.4f}")
        wrapped = dS[-1] % (2 * np.pi)
        print(f"    final phase (mod 2pi) = {wrapped:.4f} -> locks onto the stable one")
