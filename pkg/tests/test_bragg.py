import numpy as np
import pytest

from metronlab.bragg import (
    BraggTrapState,
    FourVector,
    LatticeSpec,
    bragg_scatter_set,
    classify_trapping,
    equilibrium_phases,
    first_integral,
    integrate_trap,
    minkowski_dot,
    resonance_direction,
    trap_verdict_by_integration,
)
from metronlab.errors import DegenerateCoupling, NoEquilibrium, OffShell


def boost_vector(omega0, chi, axis=0):
    k = np.zeros(4)
    k[axis] = omega0 * np.sinh(chi)
    k[3] = omega0 * np.cosh(chi)
    return k


class TestResonanceDirection:
    def test_rest_frame(self):
        u = resonance_direction(FourVector(0, 0, 0, 2.0), 2.0)
        assert np.allclose(u, [0, 0, 0, 1])
        assert minkowski_dot(u, u) == pytest.approx(-1.0)

    def test_boosted(self):
        k = boost_vector(1.0, 1.0)
        u = resonance_direction(k, 1.0)
        assert np.allclose(u, [np.sinh(1.0), 0, 0, np.cosh(1.0)])
        assert minkowski_dot(u, u) == pytest.approx(-1.0, abs=1e-12)

    def test_off_shell_rejected(self):
        with pytest.raises(OffShell):
            resonance_direction(FourVector(0.5, 0, 0, 1.0), 1.0)

    def test_resonance_condition_unique(self):
        # v.u = -1 for unit timelike v happens only at v = u
        rng = np.random.default_rng(42)
        u = resonance_direction(boost_vector(1.0, 0.7), 1.0)
        for _ in range(1000):
            chi = rng.uniform(0.0, 2.0)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            v = np.concatenate([np.sinh(chi) * n, [np.cosh(chi)]])
            dot = minkowski_dot(v, u)
            assert dot <= -1.0 + 1e-12
            if dot > -1.0 - 1e-9:
                assert np.linalg.norm(v - u) < 2e-4  # cusp of the condition
            if np.linalg.norm(v - u) > 1e-3:
                assert dot < -1.0 - 1e-8


def on_shell(spatial, omega0):
    spatial = np.asarray(spatial, dtype=float)
    return np.concatenate([spatial, [np.sqrt(omega0**2 + spatial @ spatial)]])


class TestBraggScatterSet:
    def test_specular_term_always_present(self):
        omega0 = 1.0
        k_i = on_shell([0.3, 0.1, -0.2], omega0)
        lattice = LatticeSpec(
            fundamental_wavenumbers=(FourVector(0.9, 0, 0, 0),), max_order=2
        )
        ks = bragg_scatter_set(k_i, lattice, omega0)
        assert any(np.allclose(k, k_i, atol=1e-12) for k in ks)

    def test_2d_grating_roots_match_quadratic_oracle(self):
        omega0 = 1.0
        g = 0.6
        k_i = on_shell([0.2, 0.0, 1.1], omega0)
        lattice = LatticeSpec(
            fundamental_wavenumbers=(FourVector(g, 0, 0, 0), FourVector(0, g, 0, 0)),
            dimensionality=2,
            normal_axis=2,
            max_order=2,
        )
        ks = bragg_scatter_set(k_i, lattice, omega0)
        # oracle: per order (n, m), the normal component solves
        # kz^2 = |k_spatial|^2 - (kx + n g)^2 - (ky + m g)^2
        spatial_sq = k_i[:3] @ k_i[:3]
        expected = []
        for n in range(-2, 3):
            for m in range(-2, 3):
                kx = k_i[0] + n * g
                ky = k_i[1] + m * g
                rem = spatial_sq - kx * kx - ky * ky
                if rem >= 0:
                    for sgn in (1.0, -1.0) if rem > 0 else (1.0,):
                        expected.append([kx, ky, sgn * np.sqrt(rem), k_i[3]])
        assert len(ks) == len(expected)
        for e in expected:
            assert any(np.allclose(k, e, atol=1e-10) for k in ks)
        for k in ks:
            assert abs(minkowski_dot(k, k) + omega0**2) < 1e-9 * omega0**2

    def test_3d_generic_empty_tuned_found(self):
        omega0 = 1.0
        g = 0.8
        basis = (
            FourVector(g, 0, 0, 0),
            FourVector(0, g, 0, 0),
            FourVector(0, 0, g, 0),
        )
        lattice = LatticeSpec(fundamental_wavenumbers=basis, max_order=3)
        generic = on_shell([0.213, 0.117, 0.391], omega0)
        ks = bragg_scatter_set(generic, lattice, omega0)
        assert len(ks) == 1  # only the specular term
        # glancing construction: kx = -g/2 reflects to +g/2 on shell
        tuned = on_shell([-g / 2, 0.37, 0.11], omega0)
        ks = bragg_scatter_set(tuned, lattice, omega0)
        assert len(ks) == 2
        mirrored = on_shell([g / 2, 0.37, 0.11], omega0)
        assert any(np.allclose(k, mirrored, atol=1e-9) for k in ks)

    def test_incident_off_shell_rejected(self):
        lattice = LatticeSpec(fundamental_wavenumbers=(FourVector(1, 0, 0, 0),))
        with pytest.raises(OffShell):
            bragg_scatter_set(FourVector(0.1, 0, 0, 0.5), lattice, 1.0)


class TestTrapDynamics:
    def test_decoupled_gamma_zero(self):
        state = BraggTrapState(E=0.7, deltaS=0.0, gamma=0.0, phi=0.0, omega0=1.3)
        s, E, dS = integrate_trap(state, 10.0)
        assert np.max(np.abs(E - 0.7)) < 1e-9
        assert np.max(np.abs(dS - (-1.3 * 0.7 * s))) < 1e-7

    def test_zero_energy_fixed_point(self):
        state = BraggTrapState(E=0.0, deltaS=0.0, gamma=1.0, phi=0.4, omega0=1.0)
        s, E, dS = integrate_trap(state, 50.0)
        assert np.max(np.abs(E)) == 0.0
        assert np.max(np.abs(dS)) == 0.0

    def test_trapped_limit_matches_equilibrium_phase(self):
        # B = 0.3 < 1 with phi = 0
        state = BraggTrapState(E=0.3, deltaS=0.0, gamma=1.0, phi=0.0, omega0=1.0)
        res = classify_trapping(state)
        assert res["verdict"] == "Trapped"
        s, E, dS = integrate_trap(state, 400.0)
        assert E[-1] < 1e-8
        stable, unstable = equilibrium_phases(res["B"], 0.0)
        # compare against the branch of the stable phase nearest the path
        target = stable - 2.0 * np.pi if stable > np.pi else stable
        assert abs(dS[-1] - target) < 1e-5

    def test_first_integral_conservation(self):
        state = BraggTrapState(E=0.9, deltaS=0.0, gamma=0.8, phi=1.1, omega0=1.2)
        s, E, dS = integrate_trap(state, 200.0, tol=1e-12)
        c = first_integral(E, dS, state)
        drift = np.max(np.abs(c - c[0]))
        assert drift < 1e-8 * max(state.E, state.gamma / state.omega0)

    def test_first_integral_initial_point(self):
        state = BraggTrapState(E=0.5, deltaS=0.0, gamma=1.0, phi=0.7, omega0=1.0)
        assert first_integral(0.5, 0.0, state) == pytest.approx(0.5)

    def test_monotone_phase_when_oscillatory(self):
        state = BraggTrapState(E=3.0, deltaS=0.0, gamma=1.0, phi=0.0, omega0=1.0)
        assert classify_trapping(state)["verdict"] == "Oscillatory"
        s, E, dS = integrate_trap(state, 60.0)
        rate = -state.omega0 * E[:-1]  # dS' = -omega0 E along the path
        assert np.all(np.diff(dS) < 0.0)
        assert np.all(rate < 0.0)


class TestClassification:
    def test_zero_energy_always_trapped(self):
        for phi in np.linspace(0, 2 * np.pi, 17):
            state = BraggTrapState(E=0.0, deltaS=0.0, gamma=2.0, phi=phi, omega0=1.0)
            res = classify_trapping(state)
            assert res["verdict"] == "Trapped"
            assert res["B"] == pytest.approx(-np.sin(phi))

    def test_direct_formula(self):
        phi = np.arcsin(0.5)
        state = BraggTrapState(E=3.0, deltaS=0.0, gamma=1.0, phi=phi, omega0=1.0)
        res = classify_trapping(state)
        assert res["B"] == pytest.approx(2.5)
        assert res["verdict"] == "Oscillatory"

    def test_degenerate_coupling(self):
        state = BraggTrapState(E=1.0, deltaS=0.0, gamma=0.0, phi=0.0, omega0=1.0)
        with pytest.raises(DegenerateCoupling):
            classify_trapping(state)

    def test_small_grid_oracle_agreement(self):
        for ratio in (0.0, 0.8, 1.6, 2.8):
            for phi in (0.0, 1.3, 3.7, 5.2):
                state = BraggTrapState(E=ratio, deltaS=0.0, gamma=1.0, phi=phi, omega0=1.0)
                rule = classify_trapping(state)["verdict"]
                oracle = trap_verdict_by_integration(state)
                assert oracle["verdict"] == rule
                assert oracle["first_integral_drift"] < 1e-8 * max(ratio, 1.0)


class TestEquilibriumPhases:
    def test_b_zero_phi_zero(self):
        stable, unstable = equilibrium_phases(0.0, 0.0)
        assert stable == pytest.approx(0.0)
        assert unstable == pytest.approx(np.pi)

    def test_tangency(self):
        a, b = equilibrium_phases(1.0, 0.0)
        # double root sin(x) = -1 at 3pi/2
        assert a == pytest.approx(3 * np.pi / 2, abs=1e-7)
        assert b == pytest.approx(3 * np.pi / 2, abs=1e-7)

    def test_no_equilibrium(self):
        with pytest.raises(NoEquilibrium):
            equilibrium_phases(1.5, 0.0)

    def test_stability_by_linearized_eigenvalue(self):
        # oracle: eigenvalues of the 2x2 Jacobian at (E=0, deltaS*)
        B, phi = 0.5, 0.3
        stable, unstable = equilibrium_phases(B, phi)
        for root, expect_stable in ((stable, True), (unstable, False)):
            jac = np.array([[-1.0 * np.cos(root + phi), 0.0], [-1.0, 0.0]])
            eigs = np.linalg.eigvals(jac)
            restoring = eigs[np.argmax(np.abs(eigs))]  # the non-neutral one
            assert (restoring.real < 0.0) == expect_stable

    def test_basin_oracle(self):
        B, phi = 0.5, 0.3
        stable, _ = equilibrium_phases(B, phi)
        state = BraggTrapState(E=(B + np.sin(phi)) * 1.0, deltaS=0.0, gamma=1.0,
                               phi=phi, omega0=1.0)
        s, E, dS = integrate_trap(state, 500.0)
        wrapped = dS[-1] % (2 * np.pi)
        assert min(abs(wrapped - stable), 2 * np.pi - abs(wrapped - stable)) < 1e-5
