"""
Tests for gate conjugation rules, tableaux and the Clifford enumeration.

Every conjugation rule is checked against dense U P U^dagger with the phase
included.
"""

from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from clifford_rep import (
    Circuit,
    CliffordTableau,
    Gate,
    GateKind,
    conjugate_gate,
    conjugate_label_by_gate,
    coset_representatives,
    enumerate_clifford,
    gate_matrix,
    gates_to_dense,
    generator_gates,
    tableau_from_gates,
)
from errors import CapacityError, DimensionError, DomainError
from pauli_algebra import PauliLabel, PhasedPauli, all_labels, symplectic_product, to_dense


def all_gates(n):
    gates = []
    for qubit in range(1, n + 1):
        gates += [Gate.h(qubit), Gate.s(qubit), Gate(GateKind.R, (qubit,)), Gate(GateKind.R2, (qubit,))]
    gates += [Gate.cnot(c, t) for c in range(1, n + 1) for t in range(1, n + 1) if c != t]
    return gates


def dense_conjugate(unitary, p):
    return unitary @ to_dense(p) @ unitary.conj().T


class TestGate:
    def test_text_round_trip(self):
        for gate in all_gates(3):
            assert Gate.from_text(gate.to_text()) == gate

    def test_r_power(self):
        assert Gate.r_power(2, 0) is None
        assert Gate.r_power(2, 1) == Gate(GateKind.R, (2,))
        assert Gate.r_power(2, 2).to_text() == "R2 2"

    def test_cnot_needs_distinct_qubits(self):
        with pytest.raises(DomainError):
            Gate.cnot(1, 1)

    def test_bad_text(self):
        with pytest.raises(DomainError):
            Gate.from_text("T 1")

    def test_out_of_range(self):
        with pytest.raises(DimensionError):
            Gate.h(3).validate(2)


class TestConjugateGate:
    @pytest.mark.parametrize("n", [1, 2])
    def test_every_gate_and_label_matches_dense(self, n):
        for gate in all_gates(n):
            unitary = gate_matrix(gate, n)
            for label in all_labels(n):
                for phase in range(4):
                    p = PhasedPauli(label, phase)
                    np.testing.assert_allclose(
                        to_dense(conjugate_gate(gate, p)), dense_conjugate(unitary, p), atol=1e-12
                    )

    def test_r_cycles_x_z_y(self):
        r = Gate(GateKind.R, (1,))
        label = PauliLabel.from_string("X")
        seen = []
        for _ in range(3):
            label = conjugate_gate(r, PhasedPauli(label)).label
            seen.append(str(label))
        assert seen == ["Z", "Y", "X"]

    def test_identity_is_fixed(self):
        for gate in all_gates(2):
            assert conjugate_gate(gate, PhasedPauli(PauliLabel.identity(2))).label.is_identity

    def test_cnot_examples(self):
        gate = Gate.cnot(2, 1)
        assert conjugate_gate(gate, PhasedPauli(PauliLabel.from_string("IX"))) == PhasedPauli(PauliLabel.from_string("XX"))
        assert conjugate_gate(gate, PhasedPauli(PauliLabel.from_string("ZI"))) == PhasedPauli(PauliLabel.from_string("ZZ"))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            conjugate_gate(Gate.h(2), PhasedPauli(PauliLabel.from_string("X")))


class TestTableau:
    def test_empty_sequence_is_identity(self):
        assert tableau_from_gates(2, []) == CliffordTableau.identity(2)

    def test_double_hadamard_is_identity(self):
        assert tableau_from_gates(1, [Gate.h(1), Gate.h(1)]) == CliffordTableau.identity(1)

    def test_matches_gate_folding(self):
        gates = [Gate.h(1), Gate.s(1)]
        tableau = tableau_from_gates(1, gates)
        for label in all_labels(1):
            p = PhasedPauli(label)
            folded = p
            for gate in gates:
                folded = conjugate_gate(gate, folded)
            assert tableau.conjugate(p) == folded

    def test_conjugate_matches_dense(self, rng):
        gates = [all_gates(2)[i] for i in rng.integers(0, len(all_gates(2)), size=12)]
        tableau = tableau_from_gates(2, gates)
        unitary = gates_to_dense(2, gates)
        for label in all_labels(2):
            p = PhasedPauli(label, 1)
            np.testing.assert_allclose(to_dense(tableau.conjugate(p)), dense_conjugate(unitary, p), atol=1e-12)

    def test_compose(self):
        first = tableau_from_gates(2, [Gate.h(1), Gate.cnot(1, 2)])
        second = tableau_from_gates(2, [Gate.s(2), Gate.h(2)])
        combined = tableau_from_gates(2, [Gate.h(1), Gate.cnot(1, 2), Gate.s(2), Gate.h(2)])
        assert first.compose(second) == combined

    def test_preserves_symplectic_form(self):
        for tableau in enumerate_clifford(1):
            assert tableau.preserves_symplectic_form()
        tableau = tableau_from_gates(2, [Gate.cnot(1, 2), Gate.h(2), Gate.s(1)])
        for a in all_labels(2):
            for b in all_labels(2):
                assert symplectic_product(tableau.conjugate_label(a), tableau.conjugate_label(b)) == symplectic_product(a, b)


class TestEnumeration:
    def test_single_qubit_group_has_24_elements(self):
        group = enumerate_clifford(1)
        assert len(group) == 24
        assert len(set(group)) == 24

    @pytest.mark.slow
    def test_two_qubit_group_has_11520_elements(self):
        assert len(enumerate_clifford(2)) == 11520

    def test_identity_label_fixed(self):
        for tableau in enumerate_clifford(1):
            assert tableau.conjugate_label(PauliLabel.identity(1)).is_identity

    def test_words_realize_tableaux(self):
        for tableau in enumerate_clifford(1):
            unitary = tableau.to_dense()
            for label in all_labels(1):
                p = PhasedPauli(label)
                np.testing.assert_allclose(to_dense(tableau.conjugate(p)), dense_conjugate(unitary, p), atol=1e-12)

    def test_coset_representatives(self):
        assert len(coset_representatives(1)) == 6

    @pytest.mark.slow
    def test_two_qubit_coset_representatives(self):
        assert len(coset_representatives(2)) == 720

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            enumerate_clifford(3)

    def test_generators(self):
        assert len(generator_gates(2)) == 6


class TestCircuit:
    def test_text_round_trip(self):
        circuit = Circuit(2, (Gate.h(1), Gate.cnot(2, 1), Gate(GateKind.R2, (2,))), PauliLabel.from_string("YI"))
        assert Circuit.from_text(circuit.to_text()) == circuit

    def test_gate_count_includes_pauli_layer(self):
        circuit = Circuit(3, (Gate.h(1), Gate.s(2)), PauliLabel.from_string("XIZ"))
        assert circuit.gate_count() == 4

    def test_conjugate_matches_dense(self):
        circuit = Circuit(2, (Gate.h(1), Gate.cnot(1, 2), Gate.s(2)), PauliLabel.from_string("YX"))
        unitary = circuit.to_dense()
        for label in all_labels(2):
            p = PhasedPauli(label)
            np.testing.assert_allclose(to_dense(circuit.conjugate(p)), dense_conjugate(unitary, p), atol=1e-12)

    def test_missing_header(self):
        with pytest.raises(DomainError):
            Circuit.from_text("H 1\n")


TWO_QUBIT_GATES = all_gates(2)
gate_words = st.lists(st.sampled_from(TWO_QUBIT_GATES), max_size=8)


class TestTableauProperties:
    @given(gate_words, gate_words, gate_words)
    def test_compose_is_associative(self, a, b, c):
        ta, tb, tc = (tableau_from_gates(2, word) for word in (a, b, c))
        assert ta.compose(tb).compose(tc) == ta.compose(tb.compose(tc))

    @given(gate_words)
    def test_identity_is_neutral(self, word):
        tableau = tableau_from_gates(2, word)
        identity = CliffordTableau.identity(2)
        assert identity.compose(tableau) == tableau
        assert tableau.compose(identity) == tableau

    @given(st.sampled_from(TWO_QUBIT_GATES), st.integers(0, 15))
    def test_label_rule_drops_only_the_phase(self, gate, index):
        label = PauliLabel.from_index(2, index)
        assert conjugate_label_by_gate(gate, label) == conjugate_gate(gate, PhasedPauli(label)).label

    @given(gate_words)
    def test_circuit_labels_follow_gate_rules(self, word):
        circuit = Circuit(2, tuple(word))
        for label in all_labels(2):
            assert circuit.conjugate_label(label) == circuit.conjugate(PhasedPauli(label)).label


def image_counts(group, n):
    """How often each non-identity label is the image of each non-identity label"""
    nonidentity = [label for label in all_labels(n) if not label.is_identity]
    return {label: Counter(tableau.conjugate_label(label) for tableau in group) for label in nonidentity}


class TestEqualFrequency:
    def test_single_qubit(self):
        for counts in image_counts(enumerate_clifford(1), 1).values():
            assert len(counts) == 3
            assert set(counts.values()) == {24 // 3}

    @pytest.mark.slow
    def test_two_qubits(self):
        for counts in image_counts(enumerate_clifford(2), 2).values():
            assert len(counts) == 15
            assert set(counts.values()) == {11520 // 15}
