"""Reference systems: Hamiltonians, couplings, states, closed forms."""

import math

import numpy as np
import pytest

from qthermo import (
    DensityMatrix,
    Operator,
    SubsystemLayout,
    effective_beta,
    partial_trace,
    propagator,
    simulate,
    thermal_snapshot,
    thermal_state,
    vn_entropy,
)
from qthermo.machines import ENGINE_DEFAULTS, FRIDGE_DEFAULTS, QUDIT_DEFAULTS
from qthermo.models import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    PassiveQuditSpec,
    TwoQubitParams,
    analytic_two_qubit,
    couple_lowest_levels,
    fridge_system,
    make_coupling,
    make_subsystem,
    passive_qudit,
    qudit_ladder_energies,
    qutrit_swap_system,
    rotated_thermal,
    two_qubit_layout,
)

RNG = np.random.default_rng(23)


class TestSubsystems:
    def test_qubit_levels(self):
        h = make_subsystem("qubit", 1.0)
        assert np.allclose(h.entries, np.diag([0.5, -0.5]))

    def test_ladder_qudit_spectrum(self):
        h = make_subsystem("qudit", qudit_ladder_energies(1.63, 1.7, 5))
        assert np.allclose(np.diag(h.entries).real,
                           [0.0, 1.63] + [1.7] * 5)

    def test_qutrit_levels(self):
        h = make_subsystem("qudit", [0.0, 1.0, 2.0])
        assert np.allclose(np.diag(h.entries).real, [0.0, 1.0, 2.0])

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_subsystem("oscillator", 1.0)


class TestRotatedThermal:
    def test_no_rotation_recovers_gibbs(self):
        h = make_subsystem("qubit", 1.0)
        assert np.allclose(rotated_thermal(h, 1.8, 0.0).entries,
                           thermal_state(h, 1.8).entries)

    def test_half_pi_inverts_population(self):
        h = make_subsystem("qubit", 1.0)
        w = thermal_state(h, 1.8)
        flipped = rotated_thermal(h, 1.8, math.pi / 2)
        z0 = float(np.trace(SIGMA_Z @ w.entries).real)
        z1 = float(np.trace(SIGMA_Z @ flipped.entries).real)
        assert abs(z1 + z0) < 1e-12

    def test_effective_temperature_invariant(self):
        h = make_subsystem("qubit", 1.0)
        for phi in (0.1, 0.5, 1.2):
            snap = thermal_snapshot(h, rotated_thermal(h, 1.8, phi), "B")
            assert abs(snap.beta - 1.8) < 1e-8

    def test_qudit_input_rejected(self):
        h = make_subsystem("qudit", [0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            rotated_thermal(h, 1.0, 0.3)


class TestCouplings:
    def test_zero_strength_exchange(self):
        v = make_coupling("exchange", two_qubit_layout(), g=0.0)
        assert np.max(np.abs(v.entries)) == 0.0

    def test_couplings_hermitian(self):
        layout = two_qubit_layout()
        for _ in range(20):
            g, gx, gy = RNG.uniform(-2, 2, size=3)
            for op in (make_coupling("exchange", layout, g=float(g)),
                       make_coupling("xy", layout, gx=float(gx),
                                     gy=float(gy))):
                assert np.max(np.abs(op.entries
                                     - op.entries.conj().T)) <= 1e-14
        swap_layout = SubsystemLayout(dims=(3, 3), labels=("A", "B"))
        v = make_coupling("qutrit_swap", swap_layout, g=1.3)
        assert np.max(np.abs(v.entries - v.entries.conj().T)) <= 1e-14

    def test_exchange_oscillates_at_dressed_frequency(self):
        # z_A returns to its initial value exactly after one period of
        # Omega = sqrt(g^2 + detuning^2)
        params = TwoQubitParams(omega_b=1.25, beta_a0=2.0, beta_b0=1.8,
                                g=0.5, phi=0.0)
        omega = params.rabi_frequency
        traj = simulate(fridge_system(params),
                        [0.0, math.pi / omega, 2 * math.pi / omega],
                        with_snapshots=False)
        z = [float(np.trace(SIGMA_Z @ partial_trace(
            rho, traj.system.layout, ["A"]).entries).real)
            for rho in traj.states]
        assert abs(z[2] - z[0]) < 1e-12
        assert abs(z[1] - z[0]) > 1e-3  # genuinely moved in between

    def test_swap_coupling_swaps_diagonal_product_states(self):
        system = qutrit_swap_system([0.0, 1.0, 2.0], 0.3, 1.2, g=1.0)
        layout = system.layout
        rho_a0 = partial_trace(system.initial_state, layout, ["A"])
        rho_b0 = partial_trace(system.initial_state, layout, ["B"])
        traj = simulate(system, [0.0, math.pi / 2], with_snapshots=False)
        rho_a1 = partial_trace(traj.states[1], layout, ["A"])
        rho_b1 = partial_trace(traj.states[1], layout, ["B"])
        assert np.max(np.abs(rho_a1.entries - rho_b0.entries)) < 1e-12
        assert np.max(np.abs(rho_b1.entries - rho_a0.entries)) < 1e-12

    def test_lowest_level_embedding_matches_block_construction(self):
        d = 3
        layout = SubsystemLayout(dims=(2, d + 2), labels=("A", "B"))
        v2 = make_coupling("xy", two_qubit_layout(), gx=1.1, gy=0.4)
        emb = couple_lowest_levels(v2, layout)
        # direct block construction: joint basis |a, k>, coupling non-zero
        # only on k, k' in {0, 1}; the pair (ground, excited) maps to the
        # qubit convention (excited, ground)
        ref = np.zeros((2 * (d + 2), 2 * (d + 2)), dtype=complex)
        for a in (0, 1):
            for ap in (0, 1):
                for k in (0, 1):
                    for kp in (0, 1):
                        ref[a * (d + 2) + k, ap * (d + 2) + kp] = \
                            v2.entries[a * 2 + (1 - k), ap * 2 + (1 - kp)]
        assert np.allclose(emb.entries, ref)
        # spectator rows and columns vanish
        spectators = [a * (d + 2) + k for a in (0, 1) for k in range(2, d + 2)]
        assert np.max(np.abs(emb.entries[spectators, :])) == 0.0
        assert np.max(np.abs(emb.entries[:, spectators])) == 0.0


class TestPassiveQudit:
    def test_reference_parameters_give_published_temperature(self):
        qudit = passive_qudit(QUDIT_DEFAULTS)
        assert abs(qudit.beta_2 - 75.97) / 75.97 <= 0.01

    def test_state_is_passive_nonthermal_with_matched_temperature(self):
        qudit = passive_qudit(QUDIT_DEFAULTS)
        pops = np.diag(qudit.state.entries).real
        assert np.all(np.diff(pops) <= 1e-15)
        snap = thermal_snapshot(qudit.hamiltonian, qudit.state, "B")
        assert abs(snap.ergotropy) < 1e-12
        assert snap.gen_ergotropy > 1e-3
        assert abs(snap.beta - QUDIT_DEFAULTS.beta_target) < 1e-6

    def test_population_ratio_of_coupled_pair(self):
        qudit = passive_qudit(QUDIT_DEFAULTS)
        pops = np.diag(qudit.state.entries).real
        want = math.exp(-QUDIT_DEFAULTS.beta_b0 * QUDIT_DEFAULTS.omega_b)
        assert abs(pops[1] / pops[0] - want) < 1e-12

    def test_too_small_qudit_reported(self):
        spec = PassiveQuditSpec(d=1, omega_b=1.63, omega_2=1.7,
                                beta_b0=0.1, beta_target=2.0)
        with pytest.raises(ValueError, match="dimension too small"):
            passive_qudit(spec)

    def test_existence_threshold_matches_entropy_comparison(self):
        # the error fires exactly when the coupled-pair entropy already
        # exceeds the target Gibbs entropy
        spec = PassiveQuditSpec(d=1, omega_b=1.63, omega_2=1.7,
                                beta_b0=0.1, beta_target=2.0)
        h = make_subsystem(
            "qudit", qudit_ladder_energies(spec.omega_b, spec.omega_2, spec.d))
        target = vn_entropy(thermal_state(h, spec.beta_target))
        pair = np.array([1.0, math.exp(-spec.beta_b0 * spec.omega_b)])
        pair /= pair.sum()
        floor = float(-(pair * np.log(pair)).sum())
        assert floor > target


class TestAnalyticTwoQubit:
    def test_initial_values(self):
        params = FRIDGE_DEFAULTS
        vals = analytic_two_qubit(params, 0.0)
        assert abs(float(vals["z_a"])
                   + math.tanh(params.beta_a0 * params.omega_a / 2)) < 1e-12
        assert abs(float(vals["x_a"])) < 1e-12
        assert abs(float(vals["y_a"])) < 1e-12
        assert abs(float(vals["de_int"])) < 1e-12

    def test_period_revival(self):
        params = FRIDGE_DEFAULTS
        omega = params.rabi_frequency
        t = 2 * math.pi / omega
        now = analytic_two_qubit(params, t)
        start = analytic_two_qubit(params, 0.0)
        # the coupled-oscillation components revive exactly; B's transverse
        # components keep precessing freely, so only their norm returns
        for key in ("x_a", "y_a", "z_a", "z_b", "de_int"):
            assert abs(float(now[key]) - float(start[key])) < 1e-9
        r_now = math.hypot(float(now["x_b"]), float(now["y_b"]))
        r_start = math.hypot(float(start["x_b"]), float(start["y_b"]))
        assert abs(r_now - r_start) < 1e-9

    def test_matches_simulation_on_random_parameters(self):
        worst = 0.0
        for _ in range(10):
            params = TwoQubitParams(
                omega_a=1.0,
                omega_b=float(RNG.uniform(0.5, 2.0)),
                beta_a0=float(RNG.uniform(0.1, 3.0)),
                beta_b0=float(RNG.uniform(0.1, 3.0)),
                g=float(RNG.uniform(0.5, 2.0)),
                phi=float(RNG.uniform(0.0, math.pi / 2)))
            omega = params.rabi_frequency
            grid = np.linspace(0.0, 4 * math.pi / omega, 40)
            traj = simulate(fridge_system(params), grid,
                            with_snapshots=False)
            ana = analytic_two_qubit(params, grid)
            layout = traj.system.layout
            for k, rho in enumerate(traj.states):
                ra = partial_trace(rho, layout, ["A"]).entries
                rb = partial_trace(rho, layout, ["B"]).entries
                got = {
                    "x_a": np.trace(SIGMA_X @ ra).real,
                    "y_a": np.trace(SIGMA_Y @ ra).real,
                    "z_a": np.trace(SIGMA_Z @ ra).real,
                    "x_b": np.trace(SIGMA_X @ rb).real,
                    "y_b": np.trace(SIGMA_Y @ rb).real,
                    "z_b": np.trace(SIGMA_Z @ rb).real,
                    "de_int": traj.e_int[k] - traj.e_int[0],
                }
                for key, val in got.items():
                    worst = max(worst, abs(float(val)
                                           - float(ana[key][k])))
        assert worst < 1e-9

    def test_requires_exchange_parameters(self):
        with pytest.raises(ValueError):
            analytic_two_qubit(ENGINE_DEFAULTS, 0.0)


class TestQutritSystem:
    def test_equal_local_temperatures_rejected(self):
        with pytest.raises(ValueError, match="bias"):
            qutrit_swap_system([0.0, 1.0, 2.0], 0.7, 0.7, g=1.0)

    def test_population_inversion_rejected(self):
        # beta_2 small enough that the top level outweighs the middle one
        with pytest.raises(ValueError, match="passive"):
            qutrit_swap_system([0.0, 1.0, 2.0], 2.0, 0.3, g=1.0)

    def test_source_starts_passive_nonthermal(self):
        system = qutrit_swap_system([0.0, 1.0, 2.0], 0.3, 1.2, g=1.0)
        h = system.local_hamiltonians["B"]
        rho_b = partial_trace(system.initial_state, system.layout, ["B"])
        snap = thermal_snapshot(h, rho_b, "B")
        assert abs(snap.ergotropy) < 1e-12
        assert snap.gen_ergotropy > 1e-4
        # A starts thermal at B's effective temperature
        rho_a = partial_trace(system.initial_state, system.layout, ["A"])
        ref = thermal_state(h, snap.beta)
        assert np.max(np.abs(rho_a.entries - ref.entries)) < 1e-10
