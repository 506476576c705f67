import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from channels import (
    KrausChannel,
    amplitude_damping_channel,
    dephasing_channel,
    identity_channel,
    pauli_channel,
    random_channel,
)
from dense_oracle import (
    brute_pauli_twirl,
    entanglement_fidelity,
    exact_average_fidelity,
    haar_channel_twirl,
    random_operator,
)
from errors import CapacityError, DimensionError, ValidationError
from pauli_algebra import PauliLabel, PhasedPauli, dense_pauli_basis, to_dense
from twirl_engine import (
    PauliDistribution,
    clifford_twirl_channel,
    clifford_uniformize,
    coset_twirl_distribution,
    depolarizing_parameter,
    pauli_channel_fidelities,
    pauli_twirl_channel,
)

weights_1q = st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda w: sum(w) > 1e-3)


def normalized(weights):
    weights = np.asarray(weights, dtype=float)
    return weights / weights.sum()


class TestPauliDistribution:
    def test_point_mass(self):
        d = PauliDistribution.point_mass(PauliLabel.from_string("XZ"))
        assert d.weight(PauliLabel.from_string("XZ")) == 1
        assert d.total == 1

    def test_sparse_round_trip(self):
        d = PauliDistribution.from_sparse({"II": 0.5, "ZX": 0.5})
        assert d.to_sparse() == {"II": 0.5, "ZX": 0.5}

    def test_sparse_labels_must_agree(self):
        with pytest.raises(DimensionError):
            PauliDistribution.from_sparse({"I": 0.5, "XX": 0.5})

    def test_validate(self):
        with pytest.raises(ValidationError):
            PauliDistribution(1, [0.5, 0.6, 0, 0]).validate()
        with pytest.raises(ValidationError):
            PauliDistribution(1, [1.2, -0.2, 0, 0]).validate()

    def test_shape(self):
        with pytest.raises(DimensionError):
            PauliDistribution(2, [1, 0, 0, 0])


class TestPauliTwirlChannel:
    def test_identity_channel(self):
        d = pauli_twirl_channel(identity_channel(2))
        assert d.identity_weight == pytest.approx(1)
        np.testing.assert_allclose(d.weights[1:], 0, atol=1e-15)

    @pytest.mark.parametrize("q", [0.0, 0.2, 0.5, 1.0])
    def test_dephasing(self, q):
        d = pauli_twirl_channel(dephasing_channel(q))
        assert d.weight(PauliLabel.from_string("I")) == pytest.approx(1 - q, abs=1e-12)
        assert d.weight(PauliLabel.from_string("Z")) == pytest.approx(q, abs=1e-12)

    @pytest.mark.parametrize("gamma", [0.1, 0.5, 0.9])
    def test_amplitude_damping(self, gamma):
        d = pauli_twirl_channel(amplitude_damping_channel(gamma))
        root = np.sqrt(1 - gamma)
        expected = {"I": (1 + root) ** 2 / 4, "Z": (1 - root) ** 2 / 4, "X": gamma / 4, "Y": gamma / 4}
        for text, value in expected.items():
            assert d.weight(PauliLabel.from_string(text)) == pytest.approx(value, abs=1e-12)

    def test_matches_brute_force_action(self, rng):
        channel = random_channel(2, 3, rng)
        d = pauli_twirl_channel(channel)
        x = random_operator(4, rng)
        paulis = dense_pauli_basis(2)
        from_weights = np.tensordot(d.weights, paulis @ x @ paulis, axes=1)
        brute = sum(brute_pauli_twirl(op, op.conj().T, x) for op in channel.operators)
        np.testing.assert_allclose(from_weights, brute, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_result_is_a_distribution(self, n, rng):
        d = pauli_twirl_channel(random_channel(n, 2, rng))
        assert np.all(d.weights >= -1e-15)
        assert d.total == pytest.approx(1, abs=1e-10)

    def test_requires_trace_preserving(self):
        with pytest.raises(ValidationError):
            pauli_twirl_channel(KrausChannel((0.5 * np.eye(2),), trace_preserving=False))

    def test_capacity(self, rng):
        with pytest.raises(CapacityError):
            pauli_twirl_channel(identity_channel(4))


class TestUniformize:
    def test_identity_fixed(self):
        d = PauliDistribution.point_mass(PauliLabel.identity(2))
        np.testing.assert_array_equal(clifford_uniformize(d).weights, d.weights)

    def test_single_qubit_x(self):
        d = clifford_uniformize(PauliDistribution.point_mass(PauliLabel.from_string("X")))
        np.testing.assert_allclose(d.weights, [0, 1 / 3, 1 / 3, 1 / 3])

    @given(weights_1q)
    def test_idempotent(self, weights):
        once = clifford_uniformize(PauliDistribution(1, normalized(weights)))
        np.testing.assert_allclose(clifford_uniformize(once).weights, once.weights, atol=1e-15)

    @given(weights_1q)
    def test_matches_coset_average(self, weights):
        d = PauliDistribution(1, normalized(weights))
        np.testing.assert_allclose(coset_twirl_distribution(d).weights, clifford_uniformize(d).weights, atol=1e-12)

    @pytest.mark.slow
    def test_matches_coset_average_two_qubits(self, rng):
        d = PauliDistribution(2, normalized(rng.random(16)))
        np.testing.assert_allclose(coset_twirl_distribution(d).weights, clifford_uniformize(d).weights, atol=1e-12)


class TestDepolarizingParameter:
    def test_point_mass_on_identity(self):
        assert depolarizing_parameter(PauliDistribution.point_mass(PauliLabel.identity(2))) == pytest.approx(1)

    def test_uniform(self):
        assert depolarizing_parameter(PauliDistribution.uniform(2)) == pytest.approx(0, abs=1e-15)

    def test_dephasing_half(self):
        assert depolarizing_parameter(PauliDistribution.from_sparse({"I": 0.5, "Z": 0.5})) == pytest.approx(1 / 3)

    @pytest.mark.parametrize("n", [1, 2])
    def test_matches_trace_formula(self, n, rng):
        for _ in range(10):
            channel = random_channel(n, 2, rng)
            dim = channel.dimension
            expected_p = (channel.trace_overlaps().sum() - 1) / (dim ** 2 - 1)
            uniformized = clifford_uniformize(pauli_twirl_channel(channel))
            assert depolarizing_parameter(uniformized) == pytest.approx(expected_p, abs=1e-9)
            assert haar_channel_twirl(channel).p == pytest.approx(expected_p, abs=1e-12)
            target = PauliDistribution.uniform_nonidentity(n, expected_p + (1 - expected_p) / dim ** 2)
            np.testing.assert_allclose(uniformized.weights, target.weights, atol=1e-9)


class TestPauliChannelFidelities:
    @given(weights_1q)
    def test_matches_kraus_form(self, weights):
        weights = normalized(weights)
        average, f_e = pauli_channel_fidelities(PauliDistribution(1, weights))
        channel = pauli_channel(1, weights)
        assert average == pytest.approx(exact_average_fidelity(channel), abs=1e-10)
        assert f_e == pytest.approx(entanglement_fidelity(channel), abs=1e-10)

    def test_sparse_four_qubit_channel(self):
        distribution = PauliDistribution.from_sparse({"IIII": 0.9, "XZYI": 0.1})
        average, f_e = pauli_channel_fidelities(distribution)
        assert f_e == pytest.approx(0.9)
        assert average == pytest.approx((16 * 0.9 + 1) / 17)


class TestEnumeratedTwirl:
    def test_single_qubit_channel(self, rng):
        channel = random_channel(1, 2, rng)
        enumerated = clifford_twirl_channel(channel)
        np.testing.assert_allclose(enumerated.weights, clifford_uniformize(pauli_twirl_channel(channel)).weights,
                                   atol=1e-9)

    @pytest.mark.slow
    def test_two_qubit_channel(self, rng):
        channel = random_channel(2, 2, rng)
        enumerated = clifford_twirl_channel(channel)
        np.testing.assert_allclose(enumerated.weights, clifford_uniformize(pauli_twirl_channel(channel)).weights,
                                   atol=1e-9)

    def test_pauli_channel_survives_pauli_twirl(self):
        weights = np.array([0.7, 0.1, 0.05, 0.15])
        d = pauli_twirl_channel(pauli_channel(1, weights))
        np.testing.assert_allclose(d.weights, weights, atol=1e-12)

    def test_capacity(self):
        with pytest.raises(CapacityError):
            clifford_twirl_channel(identity_channel(3))


def test_hermitian_pauli_weights_use_label_order():
    # Y has index (x=1, z=1) -> 3 at n = 1
    y = to_dense(PhasedPauli(PauliLabel.from_string("Y")))
    d = pauli_twirl_channel(KrausChannel((y,)))
    assert d.weights[3] == pytest.approx(1)
