"""Propagation, gated switching, trajectory ledger, source diagnostics."""

import math

import numpy as np
import pytest

from qthermo import (
    CompositeSystem,
    DensityMatrix,
    GateSchedule,
    Operator,
    SubsystemLayout,
    Trajectory,
    entropy_heat_identity_residuals,
    flat_top_schedule,
    ideal_source_probe,
    ledger,
    second_law_residuals,
    simulate,
    simulate_gated,
    snapshot_series,
    tensor_embed,
    thermal_state,
    vn_entropy,
)
from qthermo.machines import ENGINE_DEFAULTS, FRIDGE_DEFAULTS
from qthermo.models import (
    engine_system,
    fridge_system,
    make_coupling,
    make_subsystem,
    rotated_thermal,
    two_qubit_layout,
)

RNG = np.random.default_rng(11)


def zero_coupling_system(beta_b=1.8, phi=0.3):
    layout = two_qubit_layout()
    h_a = make_subsystem("qubit", 1.0)
    h_b = make_subsystem("qubit", 1.25)
    states = {"A": thermal_state(h_a, 2.0),
              "B": rotated_thermal(h_b, beta_b, phi)}
    return CompositeSystem.from_parts(layout, {"A": h_a, "B": h_b},
                                      None, states)


@pytest.fixture(scope="module")
def fridge_traj():
    params = FRIDGE_DEFAULTS
    grid = np.linspace(0.0, 4 * math.pi / params.rabi_frequency, 301)
    return simulate(fridge_system(params), grid)


class TestCompositeSystem:
    def test_correlated_initial_state_rejected(self):
        psi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
        bell = DensityMatrix(np.outer(psi, psi))
        layout = two_qubit_layout()
        h = make_subsystem("qubit", 1.0)
        with pytest.raises(ValueError, match="tensor product"):
            CompositeSystem(layout=layout,
                            local_hamiltonians={"A": h, "B": h},
                            coupling=None, initial_state=bell)
        system = CompositeSystem(layout=layout,
                                 local_hamiltonians={"A": h, "B": h},
                                 coupling=None, initial_state=bell,
                                 allow_correlated=True)
        assert system.initial_state.dim == 4

    def test_total_hamiltonian_assembly(self):
        system = fridge_system(FRIDGE_DEFAULTS)
        layout = system.layout
        expected = (
            tensor_embed(system.local_hamiltonians["A"], layout, ["A"]).entries
            + tensor_embed(system.local_hamiltonians["B"], layout, ["B"]).entries
            + system.coupling.entries)
        assert np.allclose(system.total_hamiltonian.entries, expected)

    def test_missing_hamiltonian_rejected(self):
        layout = two_qubit_layout()
        h = make_subsystem("qubit", 1.0)
        with pytest.raises(ValueError, match="every subsystem"):
            CompositeSystem.from_parts(layout, {"A": h}, None,
                                       {"A": thermal_state(h, 1.0),
                                        "B": thermal_state(h, 1.0)})


class TestSimulate:
    def test_grid_must_start_at_zero(self):
        system = zero_coupling_system()
        with pytest.raises(ValueError, match="start at 0"):
            simulate(system, [1.0, 2.0])

    def test_zero_coupling_keeps_marginals_quiet(self):
        system = zero_coupling_system()
        traj = simulate(system, np.linspace(0.0, 10.0, 51))
        rows = ledger(traj)
        for row in rows:
            for lab in ("A", "B"):
                assert abs(row.heat[lab]) < 1e-12
                assert abs(row.work[lab]) < 1e-12
        # marginal energies and entropies constant throughout
        assert np.ptp(traj.energy_series("B")) < 1e-12
        assert np.ptp(traj.entropy_series("B")) < 1e-12

    def test_grid_independence(self):
        system = fridge_system(FRIDGE_DEFAULTS)
        coarse = simulate(system, [0.0, 1.0, 2.0, 4.0], with_snapshots=False)
        dense = simulate(system, np.linspace(0.0, 4.0, 17),
                         with_snapshots=False)
        for k, t in enumerate(coarse.times):
            j = int(np.argmin(np.abs(dense.times - t)))
            assert np.max(np.abs(coarse.states[k].entries
                                 - dense.states[j].entries)) < 1e-12

    def test_total_entropy_conserved(self, fridge_traj):
        s_tot = [vn_entropy(rho) for rho in fridge_traj.states]
        assert np.ptp(s_tot) < 1e-8

    def test_total_energy_conserved(self, fridge_traj):
        h_tot = fridge_traj.system.total_hamiltonian.entries
        e_tot = [float(np.trace(h_tot @ rho.entries).real)
                 for rho in fridge_traj.states]
        assert np.ptp(e_tot) < 1e-9

    def test_energy_balance_rows(self, fridge_traj):
        rows = ledger(fridge_traj)
        for row in rows:
            de_sum = sum(row.energy[lab] - rows[0].energy[lab]
                         for lab in ("A", "B"))
            assert abs(de_sum + row.e_int - rows[0].e_int) < 1e-9

    def test_heat_work_sum_to_energy_loss(self, fridge_traj):
        rows = ledger(fridge_traj)
        for row in rows[::17]:
            for lab in ("A", "B"):
                de = row.energy[lab] - rows[0].energy[lab]
                assert abs(row.heat[lab] + row.work[lab] + de) < 1e-9

    def test_cooling_pauses_at_revival(self):
        params = FRIDGE_DEFAULTS
        omega = params.rabi_frequency
        grid = np.linspace(0.0, 2 * math.pi / omega, 250)
        traj = simulate(fridge_system(params), grid)
        rows = ledger(traj)
        assert abs(rows[-1].heat["A"]) < 1e-6
        assert min(r.heat["A"] for r in rows) > -1e-9

    def test_identity_residuals(self, fridge_traj):
        assert np.max(np.abs(second_law_residuals(
            fridge_traj, "A", "B"))) < 1e-9
        for lab in ("A", "B"):
            assert np.max(np.abs(entropy_heat_identity_residuals(
                fridge_traj, lab))) < 1e-9

    def test_first_ledger_row_is_all_zero(self, fridge_traj):
        row = ledger(fridge_traj)[0]
        assert all(abs(v) < 1e-12 for v in row.heat.values())
        assert all(abs(v) < 1e-12 for v in row.work.values())
        assert all(abs(v) < 1e-12 for v in row.sigma.values())
        assert abs(row.clausius_sum) < 1e-12


class TestGated:
    def test_gate_must_vanish_at_q0(self):
        with pytest.raises(ValueError, match="vanish"):
            GateSchedule(gate=lambda q: 1.0, q0=0.0, v=1.0)

    def test_zero_gate_is_free_evolution(self):
        system = engine_system(ENGINE_DEFAULTS)
        schedule = GateSchedule(gate=lambda q: 0.0, q0=-1.0, v=1.0)
        traj = simulate_gated(system, schedule, np.linspace(0.0, 3.0, 301))
        assert np.max(np.abs(traj.w_c)) < 1e-12
        assert np.ptp(traj.energy_series("A")) < 1e-12
        assert np.ptp(traj.entropy_series("B")) < 1e-10

    def test_coarse_grid_rejected(self):
        system = engine_system(ENGINE_DEFAULTS)
        schedule = flat_top_schedule(rise=0.1, plateau=1.0, lead=0.1)
        with pytest.raises(ValueError, match="refine the time grid"):
            simulate_gated(system, schedule, np.linspace(0.0, 2.0, 21))

    def test_flat_top_window_matches_static_run(self):
        system = engine_system(ENGINE_DEFAULTS)
        schedule = flat_top_schedule(rise=1.0, plateau=3.0, lead=0.5)
        grid = np.linspace(0.0, 6.0, 4001)
        traj = simulate_gated(system, schedule, grid, with_snapshots=False)
        t_on, t_off = schedule.plateau
        inside = np.where((grid >= t_on) & (grid <= t_off))[0]
        k0 = int(inside[0])
        static = CompositeSystem(
            layout=system.layout,
            local_hamiltonians=system.local_hamiltonians,
            coupling=system.coupling,
            initial_state=traj.states[k0],
            allow_correlated=True)
        ref = simulate(static, grid[inside] - grid[k0], with_snapshots=False)
        worst = max(
            float(np.max(np.abs(ref.states[j].entries
                                - traj.states[int(k)].entries)))
            for j, k in enumerate(inside))
        assert worst < 1e-9

    def test_work_identity_converges_second_order(self):
        system = engine_system(ENGINE_DEFAULTS)
        schedule = flat_top_schedule(rise=1.0, plateau=2.0, lead=0.5)

        def max_residual(n):
            grid = np.linspace(0.0, 5.0, n + 1)
            traj = simulate_gated(system, schedule, grid,
                                  with_snapshots=False)
            de = np.zeros(len(grid))
            for lab in system.layout.labels:
                h_emb = tensor_embed(system.local_hamiltonians[lab],
                                     system.layout, [lab]).entries
                series = np.array([float(np.trace(h_emb @ s.entries).real)
                                   for s in traj.states])
                de += series - series[0]
            return float(np.max(np.abs(
                traj.w_c - (de + traj.e_int - traj.e_int[0]))))

        r1 = max_residual(1000)
        r2 = max_residual(2000)
        assert r1 / r2 >= 3.0

    def test_total_entropy_conserved_under_gating(self):
        system = engine_system(ENGINE_DEFAULTS)
        schedule = flat_top_schedule(rise=1.0, plateau=2.0, lead=0.5)
        traj = simulate_gated(system, schedule, np.linspace(0.0, 5.0, 2001),
                              with_snapshots=False)
        s_tot = [vn_entropy(rho) for rho in traj.states[::100]]
        assert np.ptp(s_tot) < 1e-8


class TestSourceProbe:
    def test_zero_coupling_is_ideal_work_source(self):
        system = zero_coupling_system()
        traj = simulate(system, np.linspace(0.0, 8.0, 81))
        probe = ideal_source_probe(traj, "B")
        assert probe.classification == "ideal_work_source"
        assert probe.max_heat <= 1e-9
        assert probe.heat_consistent

    def test_fridge_is_hybrid_source(self, fridge_traj):
        probe = ideal_source_probe(fridge_traj, "B")
        assert probe.classification == "hybrid"
        assert probe.max_mutual_info > 1e-3
        assert probe.max_work > 1e-6

    def test_synthetic_thermal_marginal_is_heat_source(self):
        # hand-built trajectory: B thermal at every instant, A frozen
        layout = two_qubit_layout()
        h_a = make_subsystem("qubit", 1.0)
        h_b = make_subsystem("qubit", 1.25)
        rho_a = thermal_state(h_a, 2.0)
        times = np.linspace(0.0, 1.0, 21)
        betas = 1.8 - 0.6 * times
        states = [DensityMatrix(np.kron(rho_a.entries,
                                        thermal_state(h_b, float(b)).entries))
                  for b in betas]
        system = CompositeSystem(layout=layout,
                                 local_hamiltonians={"A": h_a, "B": h_b},
                                 coupling=None, initial_state=states[0])
        snapshots = {
            "A": snapshot_series(h_a, [rho_a] * len(times), "A"),
            "B": snapshot_series(
                h_b, [thermal_state(h_b, float(b)) for b in betas], "B"),
        }
        traj = Trajectory(system=system, times=times, states=states,
                          snapshots=snapshots, e_int=np.zeros(len(times)),
                          i_tot=np.zeros(len(times)))
        probe = ideal_source_probe(traj, "B")
        assert probe.classification == "ideal_heat_source"
        assert probe.max_work <= 1e-9
        assert probe.work_consistent
