"""Bragg-scattering kinematics and wave-trajectory resonance trapping.

Wavenumber four-vectors use the metric diag(1, 1, 1, -1).  A particle of
mass omega0 scattered by a static lattice resonates with its own scattered
wave only when it propagates along the scattered wavenumber; small velocity
perturbations about that direction obey the reduced phase-space system

    dE/ds      = -gamma * E * cos(deltaS + phi)
    ddeltaS/ds = -omega0 * E

whose first integral classifies trajectories into trapped (E -> 0) and
indefinitely oscillatory via B = omega0*E0/gamma - sin(phi) <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import (
    DegenerateCoupling,
    NoEquilibrium,
    OffShell,
    ValidationError,
)
from .numerics import integrate_ivp

__all__ = [
    "METRIC",
    "minkowski_dot",
    "FourVector",
    "LatticeSpec",
    "BraggTrapState",
    "resonance_direction",
    "bragg_scatter_set",
    "integrate_trap",
    "classify_trapping",
    "equilibrium_phases",
    "first_integral",
]

METRIC = np.array([1.0, 1.0, 1.0, -1.0])


def minkowski_dot(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.sum(METRIC * a * b))


def FourVector(k1, k2, k3, k4):
    """Convenience constructor: a plain length-4 array with signature
    diag(1,1,1,-1) understood by minkowski_dot."""
    return np.array([k1, k2, k3, k4], dtype=float)


@dataclass(frozen=True)
class LatticeSpec:
    """Static periodic lattice described by its fundamental wavenumbers.

    fundamental_wavenumbers: spatial four-vectors with zero time component.
    dimensionality 2 declares a surface lattice; normal_axis names the free
    direction (0, 1 or 2) whose wavenumber component is a continuum.
    """

    fundamental_wavenumbers: tuple
    dimensionality: int = 3
    max_order: int = 3
    normal_axis: int = 2

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=float) for v in self.fundamental_wavenumbers)
        object.__setattr__(self, "fundamental_wavenumbers", vecs)
        if self.dimensionality not in (2, 3):
            raise ValidationError("dimensionality must be 2 or 3")
        for v in vecs:
            if v.shape != (4,):
                raise ValidationError("lattice wavenumbers must be four-vectors")
            if v[3] != 0.0:
                raise ValidationError("lattice wavenumbers must be static")
        if self.dimensionality == 2:
            if self.normal_axis not in (0, 1, 2):
                raise ValidationError("normal_axis must be 0, 1 or 2")
            for v in vecs:
                if v[self.normal_axis] != 0.0:
                    raise ValidationError(
                        "2-D lattice wavenumbers must lie in the lattice plane"
                    )

    def harmonics(self):
        """All integer combinations of the fundamentals up to max_order."""
        m = self.max_order
        base = np.array(self.fundamental_wavenumbers)
        for orders in product(range(-m, m + 1), repeat=len(base)):
            yield np.asarray(orders, dtype=float) @ base


@dataclass(frozen=True)
class BraggTrapState:
    """Reduced resonance-trapping state and parameters."""

    E: float
    deltaS: float
    gamma: float
    phi: float
    omega0: float

    def __post_init__(self):
        if self.E < 0:
            raise ValidationError("perturbation energy E must be nonnegative")
        if self.gamma < 0:
            raise ValidationError("gamma must be nonnegative (phase absorbed in phi)")


def resonance_direction(k_s, omega0):
    """Unit 4-velocity resonant with the scattered wave: u = k_s / omega0.

    Requires k_s on the free-wave mass shell within 1e-10 relative and
    returns u with u.u = -1; the resonance condition v.u = -1 for unit
    timelike v holds only at v = u.
    """
    k_s = np.asarray(k_s, dtype=float)
    norm = minkowski_dot(k_s, k_s)
    if abs(norm + omega0 * omega0) > 1e-10 * omega0 * omega0:
        raise OffShell(
            f"k.k = {norm:.12g}, expected {-omega0*omega0:.12g}"
        )
    u = k_s / omega0
    return u


def bragg_scatter_set(k_i, lattice: LatticeSpec, omega0, tol=1e-9):
    """Scattered wavenumbers k_s = k_i + k_l that stay on the mass shell.

    3-D lattices: keep harmonics satisfying the shell condition within tol
    (generically only the specular k_l = 0 term survives).  2-D lattices:
    the normal component is solved from the shell condition; both real
    roots (outgoing and ingoing) are kept.
    """
    k_i = np.asarray(k_i, dtype=float)
    if abs(minkowski_dot(k_i, k_i) + omega0 * omega0) > 1e-9 * omega0 * omega0:
        raise OffShell("incident wavenumber is off the mass shell")
    out = []
    if lattice.dimensionality == 3:
        for k_l in lattice.harmonics():
            k_s = k_i + k_l
            if abs(minkowski_dot(k_s, k_s) + omega0 * omega0) <= tol * omega0**2:
                out.append(k_s)
    else:
        ax = lattice.normal_axis
        spatial_sq = float(np.sum(k_i[:3] ** 2))
        for k_l in lattice.harmonics():
            k_s = k_i + k_l
            in_plane = k_s[:3].copy()
            in_plane[ax] = 0.0
            rem = spatial_sq - float(np.sum(in_plane**2))
            if rem < 0.0:
                continue
            root = np.sqrt(rem)
            for sgn in (1.0, -1.0) if root > 0 else (1.0,):
                k_out = k_s.copy()
                k_out[ax] = sgn * root
                out.append(k_out)
    # drop duplicates (several harmonic labels can give one wavenumber)
    unique = []
    for k in out:
        if not any(np.allclose(k, q, atol=1e-12) for q in unique):
            unique.append(k)
    return unique


def _trap_rhs(state: BraggTrapState):
    g, p, w0 = state.gamma, state.phi, state.omega0

    def rhs(s, y):
        E, dS = y[0], y[1]
        return np.array([-g * E * np.cos(dS + p), -w0 * E])

    return rhs


def integrate_trap(state: BraggTrapState, s_max, tol=1e-11):
    """Trajectory of (E, deltaS) from (E0, 0); returns (s, E, deltaS)."""
    res = integrate_ivp(_trap_rhs(state), [state.E, state.deltaS], (0.0, s_max), tol=tol)
    return res.t, res.y[:, 0], res.y[:, 1]


def first_integral(E, deltaS, state: BraggTrapState):
    """E - (gamma/omega0) * [sin(deltaS + phi) - sin(phi)]; equals E0 on
    any exact trajectory."""
    g, p, w0 = state.gamma, state.phi, state.omega0
    return E - (g / w0) * (np.sin(deltaS + p) - np.sin(p))


def trapping_parameter(state: BraggTrapState):
    if state.gamma == 0:
        raise DegenerateCoupling("gamma = 0: oscillatory-degenerate, B undefined")
    return state.omega0 * state.E / state.gamma - np.sin(state.phi)


def classify_trapping(state: BraggTrapState):
    """Verdict from the non-strict criterion B <= 1.

    Returns {"verdict": "Trapped" | "Oscillatory", "B": value}.  gamma = 0
    is refused as DegenerateCoupling (pure phase drift, B undefined).
    """
    B = trapping_parameter(state)
    return {"verdict": "Trapped" if B <= 1.0 else "Oscillatory", "B": float(B)}


def equilibrium_phases(B, phi):
    """The two solutions of sin(deltaS + phi) = -B in [0, 2pi), labeled by
    linearized stability: the equilibrium with cos(deltaS + phi) > 0 damps
    perturbations, the other amplifies them.

    Returns (deltaS_stable, deltaS_unstable); NoEquilibrium for |B| > 1.
    """
    if abs(B) > 1.0:
        raise NoEquilibrium(f"|B| = {abs(B):.6g} > 1: no stationary phase")
    base = np.arcsin(-B)  # in [-pi/2, pi/2]
    roots = [(base - phi) % (2.0 * np.pi), (np.pi - base - phi) % (2.0 * np.pi)]
    stable = [rt for rt in roots if np.cos(rt + phi) >= 0.0]
    unstable = [rt for rt in roots if np.cos(rt + phi) < 0.0]
    if not stable or not unstable:
        # tangency B = +-1: double root, report it twice
        return roots[0], roots[1]
    return stable[0], unstable[0]


def trap_verdict_by_integration(state: BraggTrapState, tol=1e-11):
    """Brute-force long-time classification used as the oracle.

    Oscillatory trajectories have monotonically decreasing phase; the
    trajectory is integrated until the phase has wound through several
    cycles or the energy has collapsed onto an equilibrium.
    """
    if state.gamma == 0:
        raise DegenerateCoupling("gamma = 0 cannot be classified by this oracle")
    B = trapping_parameter(state)
    rate = state.gamma * max(abs(B - 1.0), 2e-3)
    s_max = min(max(200.0 / state.gamma, 6.0 * np.pi / rate), 1e6)
    s, E, dS = integrate_trap(state, s_max, tol=tol)
    drift = first_integral(E, dS, state) - first_integral(
        E[0], dS[0], state
    )
    wound = dS[-1] < dS[0] - 4.0 * np.pi
    return {
        "verdict": "Oscillatory" if wound else "Trapped",
        "s_max": s_max,
        "E_final": float(E[-1]),
        "first_integral_drift": float(np.max(np.abs(drift))),
        "trajectory": (s, E, dS),
    }


def sweep_rows(ratio_values, phi_values, omega0=1.0, gamma=1.0):
    """Classification sweep over (omega0*E0/gamma, phi); one dict per cell."""
    rows = []
    for ratio in ratio_values:
        for phi in phi_values:
            E0 = ratio * gamma / omega0
            state = BraggTrapState(E=E0, deltaS=0.0, gamma=gamma, phi=phi, omega0=omega0)
            res = classify_trapping(state)
            if abs(res["B"]) <= 1.0:
                st, un = equilibrium_phases(res["B"], phi)
            else:
                st = un = float("nan")
            rows.append(
                {
                    "B": res["B"],
                    "phi": phi,
                    "verdict": res["verdict"],
                    "deltaS_stable": st,
                    "deltaS_unstable": un,
                }
            )
    return rows
