"""Core linear algebra: embeddings, partial traces, propagators, entropies."""

import math

import numpy as np
import pytest

from qthermo import (
    DensityMatrix,
    Operator,
    SubsystemLayout,
    UnitaryPropagator,
    correlation_info,
    evolve,
    partial_trace,
    propagator,
    relative_entropy,
    tensor_embed,
    trace_distance,
    vn_entropy,
)
from qthermo.models import SIGMA_X, SIGMA_Y, SIGMA_Z, make_subsystem

RNG = np.random.default_rng(42)


def random_hermitian(dim, rng=RNG):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return Operator((m + m.conj().T) / 2, hermitian=True)


def random_state(dim, rng=RNG):
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


class TestValidation:
    def test_operator_hermitian_flag_rejected_when_false(self):
        with pytest.raises(ValueError, match="hermitian"):
            Operator(np.array([[0.0, 1.0], [0.0, 0.0]]), hermitian=True)

    def test_density_matrix_requires_unit_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.eye(2))

    def test_density_matrix_rejects_negative_spectrum(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_density_matrix_accepts_roundoff_negativity(self):
        rho = DensityMatrix(np.diag([1.0 + 5e-13, -5e-13]))
        assert rho.eigvals()[0] == 0.0

    def test_unitary_validation(self):
        with pytest.raises(ValueError, match="unitary"):
            UnitaryPropagator(np.diag([1.0, 2.0]))

    def test_layout_needs_two_subsystems(self):
        with pytest.raises(ValueError):
            SubsystemLayout(dims=(4,), labels=("A",))

    def test_layout_unknown_label(self):
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        with pytest.raises(KeyError):
            layout.index("C")


class TestTensorEmbed:
    def test_identity_padding_on_first_slot(self):
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        emb = tensor_embed(Operator(SIGMA_Z, hermitian=True), layout, ["A"])
        assert np.allclose(emb.entries, np.kron(SIGMA_Z, np.eye(2)))

    def test_identity_operator_embeds_to_identity(self):
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        emb = tensor_embed(Operator(np.eye(2), hermitian=True), layout, ["B"])
        assert np.allclose(emb.entries, np.eye(4))

    def test_permuted_slots_match_reordered_kron(self):
        layout = SubsystemLayout(dims=(2, 3, 2), labels=("A", "B", "C"))
        op = Operator(RNG.normal(size=(4, 4)))
        emb = tensor_embed(op, layout, ["C", "A"])
        # reference: op acts on (C, A); build on (A, B, C) by index shuffle
        t = op.entries.reshape(2, 2, 2, 2)  # (c, a, c', a')
        ref = np.einsum("caxy,bd->abcydx", t, np.eye(3)).reshape(12, 12)
        assert np.allclose(emb.entries, ref)

    def test_dimension_mismatch_rejected(self):
        layout = SubsystemLayout(dims=(2, 3), labels=("A", "B"))
        with pytest.raises(ValueError, match="dim"):
            tensor_embed(Operator(np.eye(2)), layout, ["B"])

    def test_unknown_slot_rejected(self):
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        with pytest.raises(KeyError):
            tensor_embed(Operator(np.eye(2)), layout, ["Q"])


class TestPartialTrace:
    def test_product_state_marginal(self):
        layout = SubsystemLayout(dims=(2, 3), labels=("A", "B"))
        rho_a = random_state(2)
        rho_b = random_state(3)
        joint = DensityMatrix(np.kron(rho_a.entries, rho_b.entries))
        back = partial_trace(joint, layout, ["A"])
        assert np.allclose(back.entries, rho_a.entries, atol=1e-12)

    def test_bell_state_marginal_is_maximally_mixed(self):
        psi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
        rho = DensityMatrix(np.outer(psi, psi))
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        red = partial_trace(rho, layout, ["A"])
        assert np.allclose(red.entries, np.eye(2) / 2, atol=1e-12)

    def test_empty_keep_rejected(self):
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        with pytest.raises(ValueError):
            partial_trace(random_state(4), layout, [])

    def test_trace_of_reduction_is_one(self):
        layout = SubsystemLayout(dims=(2, 2, 3), labels=("A", "B", "C"))
        rho = random_state(12)
        for keep in (["A"], ["B", "C"], ["A", "C"]):
            red = partial_trace(rho, layout, keep)
            assert abs(np.trace(red.entries).real - 1.0) < 1e-11

    def test_sequential_consistency_on_three_subsystems(self):
        layout = SubsystemLayout(dims=(2, 3, 2), labels=("A", "B", "C"))
        rho = random_state(12)
        two = partial_trace(rho, layout, ["A", "B"])
        sub_layout = SubsystemLayout(dims=(2, 3), labels=("A", "B"))
        direct = partial_trace(rho, layout, ["A"])
        nested = partial_trace(two, sub_layout, ["A"])
        assert np.allclose(direct.entries, nested.entries, atol=1e-12)


class TestPropagator:
    def test_zero_time_is_identity(self):
        u = propagator(random_hermitian(5), 0.0)
        assert np.allclose(u.entries, np.eye(5))

    def test_diagonal_generator(self):
        omega = 1.3
        h = make_subsystem("qubit", omega)
        u = propagator(h, 2.1)
        expected = np.diag([np.exp(-1j * omega / 2 * 2.1),
                            np.exp(+1j * omega / 2 * 2.1)])
        assert np.allclose(u.entries, expected, atol=1e-14)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            propagator(Operator(np.array([[0.0, 1.0], [0.0, 0.0]])), 1.0)

    def test_unitarity_on_random_generators(self):
        for dim in (2, 3, 6):
            u = propagator(random_hermitian(dim), 0.7)
            defect = np.max(np.abs(u.entries @ u.entries.conj().T - np.eye(dim)))
            assert defect <= 1e-10

    def test_entropy_conserved_under_evolution(self):
        rho = random_state(4)
        u = propagator(random_hermitian(4), 1.9)
        assert abs(vn_entropy(evolve(rho, u)) - vn_entropy(rho)) < 1e-9

    def test_swap_coupling_propagator_exchanges_diagonal_states(self):
        # at g t = pi/2 the pairwise-exchange coupling swaps
        # energy-diagonal product states of two equal qudits
        from qthermo.models import make_coupling
        layout = SubsystemLayout(dims=(3, 3), labels=("A", "B"))
        v = make_coupling("qutrit_swap", layout, g=1.0)
        p = np.array([0.5, 0.3, 0.2])
        q = np.array([0.7, 0.2, 0.1])
        rho = DensityMatrix(np.kron(np.diag(p), np.diag(q)))
        u = propagator(v, math.pi / 2)
        swapped = evolve(rho, u)
        want = np.kron(np.diag(q), np.diag(p))
        assert np.max(np.abs(swapped.entries - want)) < 1e-12


class TestEntropies:
    def test_pure_state_has_zero_entropy(self):
        psi = np.array([1.0, 1.0j]) / math.sqrt(2)
        assert vn_entropy(DensityMatrix(np.outer(psi, psi.conj()))) < 1e-12

    def test_maximally_mixed_entropy(self):
        for d in (2, 3, 5):
            assert abs(vn_entropy(DensityMatrix(np.eye(d) / d))
                       - math.log(d)) < 1e-12

    def test_qubit_thermal_entropy_closed_form(self):
        # binary entropy of p = 1/(1 + e^2), the excited population at
        # beta * omega = 2
        from qthermo import thermal_state
        rho = thermal_state(make_subsystem("qubit", 1.0), 2.0)
        assert abs(vn_entropy(rho) - 0.36533385508720767) < 1e-12

    def test_relative_entropy_of_state_with_itself(self):
        rho = random_state(3)
        assert abs(relative_entropy(rho, rho)) < 1e-10

    def test_relative_entropy_pure_vs_maximally_mixed(self):
        rho = DensityMatrix(np.diag([1.0, 0.0]))
        val = relative_entropy(rho, DensityMatrix(np.eye(2) / 2))
        assert abs(val - math.log(2)) < 1e-12

    def test_relative_entropy_support_sentinel(self):
        rho = DensityMatrix(np.eye(2) / 2)
        sigma = DensityMatrix(np.diag([1.0, 0.0]))
        assert relative_entropy(rho, sigma) == math.inf

    def test_relative_entropy_dimension_mismatch(self):
        with pytest.raises(ValueError):
            relative_entropy(random_state(2), random_state(3))

    def test_relative_entropy_nonnegative(self):
        for _ in range(50):
            val = relative_entropy(random_state(4), random_state(4))
            assert val >= -1e-10

    def test_correlation_info_product_state(self):
        layout = SubsystemLayout(dims=(2, 3), labels=("A", "B"))
        joint = DensityMatrix(np.kron(random_state(2).entries,
                                      random_state(3).entries))
        assert abs(correlation_info(joint, layout)) < 1e-10

    def test_correlation_info_bell_state(self):
        psi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2)
        rho = DensityMatrix(np.outer(psi, psi))
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        assert abs(correlation_info(rho, layout) - 2 * math.log(2)) < 1e-12

    def test_correlation_info_nonnegative(self):
        layout = SubsystemLayout(dims=(2, 2), labels=("A", "B"))
        for _ in range(50):
            assert correlation_info(random_state(4), layout) >= -1e-10

    def test_trace_distance(self):
        rho = DensityMatrix(np.diag([1.0, 0.0]))
        sigma = DensityMatrix(np.diag([0.0, 1.0]))
        assert abs(trace_distance(rho, sigma) - 1.0) < 1e-12
        assert trace_distance(rho, rho) < 1e-12
