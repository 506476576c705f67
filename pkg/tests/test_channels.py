import numpy as np
import pytest

from channels import (
    KrausChannel,
    amplitude_damping_channel,
    dephasing_channel,
    depolarizing_channel,
    identity_channel,
    pauli_channel,
    random_channel,
    uniform_pauli_channel,
    unitary_channel,
)
from errors import DimensionError, DomainError, ValidationError


class TestKrausChannel:
    def test_rejects_non_trace_preserving(self):
        with pytest.raises(ValidationError):
            KrausChannel((0.5 * np.eye(2),))

    def test_accepts_trace_decreasing_when_declared(self):
        channel = KrausChannel((0.5 * np.eye(2),), trace_preserving=False)
        assert channel.dimension == 2

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(DimensionError):
            KrausChannel((np.eye(2), np.eye(4)))

    def test_rejects_non_power_of_two(self):
        with pytest.raises(DimensionError):
            KrausChannel((np.eye(3),))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            KrausChannel((np.array([[np.nan, 0], [0, 1]]),))

    def test_operators_are_read_only(self):
        channel = identity_channel(1)
        with pytest.raises(ValueError):
            channel.operators[0][0, 0] = 2

    def test_apply_preserves_trace(self, rng):
        channel = random_channel(2, 3, rng)
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
        assert np.trace(channel.apply(rho)) == pytest.approx(1, abs=1e-12)

    def test_padded(self):
        padded = dephasing_channel(0.3).padded(2)
        assert padded.n == 2
        np.testing.assert_allclose(padded.operators[1], np.kron(np.diag([1, -1]), np.eye(2)) * np.sqrt(0.3))

    def test_conjugated_by_identity(self):
        channel = amplitude_damping_channel(0.4)
        conjugated = channel.conjugated(np.eye(2))
        for a, b in zip(channel.operators, conjugated.operators):
            np.testing.assert_allclose(a, b)


class TestConstructors:
    @pytest.mark.parametrize("rank", [1, 2, 4])
    def test_random_channel_is_cptp(self, rank, rng):
        channel = random_channel(2, rank, rng)
        assert len(channel.operators) == rank
        assert channel.completeness_deviation() < 1e-12

    def test_depolarizing_domain(self):
        with pytest.raises(DomainError):
            depolarizing_channel(1, -0.5)
        depolarizing_channel(1, -1 / 3)

    def test_depolarizing_action(self, rng):
        rho = np.array([[0.7, 0.2], [0.2, 0.3]])
        out = depolarizing_channel(1, 0.4).apply(rho)
        np.testing.assert_allclose(out, 0.4 * rho + 0.6 * np.eye(2) / 2, atol=1e-12)

    def test_uniform_pauli_is_completely_depolarizing(self):
        rho = np.diag([1.0, 0, 0, 0])
        np.testing.assert_allclose(uniform_pauli_channel(2).apply(rho), np.eye(4) / 4, atol=1e-12)

    def test_pauli_channel_weight_count(self):
        with pytest.raises(DimensionError):
            pauli_channel(1, [1.0, 0.0])

    def test_unitary_channel(self):
        hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
        assert unitary_channel(hadamard).trace_overlaps()[0] == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("bad", [-0.1, 1.1])
    def test_parameter_ranges(self, bad):
        with pytest.raises(DomainError):
            dephasing_channel(bad)
        with pytest.raises(DomainError):
            amplitude_damping_channel(bad)
