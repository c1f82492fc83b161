"""Orbit-resonance machinery: drift trapping at a resonant radius, the
quantum-matching frequency condition, three-mode transitions and
stochastic variance transport.

Run:  python demos/demo_orbit_resonance.py
"""

import numpy as np

from metronlab.orbits import (
    OrbitDriftModel,
    ThreeModeState,
    bohr_check,
    central_frequency,
    drift_equilibria,
    evolve_variances,
    integrate_drift,
    integrate_three_mode,
    manley_rowe,
    pair_growth_rate,
)

# --- drift trapping in a resonant attractor ---------------------------------
model = OrbitDriftModel(d=1.0, C1=-1.0, C2=0.5, C3=0.25)
print("orbit drift near a resonance (attractive case)")
for root, label in drift_equilibria(model):
    print(f"  equilibrium offset {root:+.6f}: {label}")
for x0 in (-1.5, -2.5):
    res = integrate_drift(model, x0, 400.0)
    tail = f"at {res['root']:+.6f}" if "root" in res else res["direction"]
    print(f"  start {x0:+.2f} -> {res['verdict']} {tail}")

# --- the resonance condition reproduces the quantum energy relation ---------
print("\ncircular-orbit resonance condition (toy fine structure 0.1)")
alpha = 0.1
omega0 = 1.0 / alpha**2
u4 = np.full(2049, 1.0 / np.sqrt(1.0 - alpha**2))
om_bar = central_frequency(u4, 2.0 * np.pi, omega0)
E_orbit = -0.5
print(f"  orbit-side frequency  omega_bar = {om_bar:.6f}")
print(f"  wave-side frequency   omega_p   = {omega0 + E_orbit:.6f}")
print(f"  residual (omega0 units): {abs(om_bar - omega0 - E_orbit) / omega0:.3e}")
print(f"  energy-frequency mismatch check: {bohr_check(E_orbit, E_orbit, omega0, omega0):.1e}")

# --- three-mode transition dynamics ------------------------------------------
print("\nresonant three-mode interaction (emission)")
state = ThreeModeState(A1=1.0, A2=1e-6, A12=1e-6, K=0.6, mu2=0.08)
t, A1, A2, A12 = integrate_three_mode(state, mode="Emission", t_max=14.0)
nu = pair_growth_rate(0.6, 1.0, 0.08)
print(f"  seeded pair grows ~ exp({nu:.4f} t); |A2| reaches {np.max(np.abs(A2)):.3f}")
inv1, inv2 = manley_rowe(A1, A2, A12)
print(f"  |A1|^2+|A2|^2 drift with damping on: {np.max(np.abs(inv1 - inv1[0])):.2e}")

und = ThreeModeState(A1=1.0, A2=0.3, A12=0.2, K=0.5)
t, A1, A2, A12 = integrate_three_mode(und, mode="Emission", t_max=60.0, tol=1e-12)
inv1, inv2 = manley_rowe(A1, A2, A12)
print(f"  undamped invariants drift: {np.max(np.abs(inv1 - inv1[0])):.2e}, "
      f"{np.max(np.abs(inv2 - inv2[0])):.2e}")

# --- stochastic radiation: variance transport --------------------------------
print("\nvariance transport under a stochastic coupling field")
times = np.array([0.0, 1.0, 3.0, 10.0, 30.0])
N1, N2 = evolve_variances(1.0, 0.0, 0.5, 0.0, 0.0, times)
for tt, a, b in zip(times, N1, N2):
    print(f"  t={tt:5.1f}:  N1={a:.6f}  N2={b:.6f}  (sum {a + b:.6f})")
print("  -> equipartition with the total variance conserved")
