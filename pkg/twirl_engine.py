"""
Channel-level twirling in the Pauli-label representation
"""

import logging
from dataclasses import dataclass
from typing import Dict, Mapping, Tuple

import numpy as np

from channels import KrausChannel
from clifford_rep import coset_representatives
from config import BRUTE_FORCE_MAX_QUBITS, ENUMERATION_MAX_QUBITS, EXACT_TOLERANCE, NORMALIZATION_TOLERANCE
from dense_oracle import clifford_unitaries
from errors import CapacityError, DimensionError, ValidationError
from pauli_algebra import PauliLabel, label_bit_arrays, pauli_traces

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PauliDistribution:
    n: int
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        if weights.shape != (4 ** self.n,):
            raise DimensionError(f"Expected {4 ** self.n} weights for {self.n} qubits, got {weights.shape}")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, label: PauliLabel) -> "PauliDistribution":
        weights = np.zeros(4 ** label.n)
        weights[label.index] = 1.0
        return cls(label.n, weights)

    @classmethod
    def uniform(cls, n: int) -> "PauliDistribution":
        return cls(n, np.full(4 ** n, 1.0 / 4 ** n))

    @classmethod
    def uniform_nonidentity(cls, n: int, identity_weight: float = 0.0) -> "PauliDistribution":
        weights = np.full(4 ** n, (1.0 - identity_weight) / (4 ** n - 1))
        weights[0] = identity_weight
        return cls(n, weights)

    @classmethod
    def from_sparse(cls, entries: Mapping[str, float]) -> "PauliDistribution":
        """Build from {label-string: weight}; unlisted labels are zero"""
        if not entries:
            raise ValidationError("Empty Pauli distribution")
        labels = {PauliLabel.from_string(text): float(weight) for text, weight in entries.items()}
        sizes = {label.n for label in labels}
        if len(sizes) != 1:
            raise DimensionError(f"Labels disagree in qubit count: {sorted(sizes)}")
        n = sizes.pop()
        weights = np.zeros(4 ** n)
        for label, weight in labels.items():
            weights[label.index] += weight
        return cls(n, weights)

    def to_sparse(self, threshold: float = 0.0) -> Dict[str, float]:
        """{label-string: weight} for weights whose magnitude exceeds threshold"""
        return {
            str(PauliLabel.from_index(self.n, int(index))): float(self.weights[index])
            for index in np.flatnonzero(np.abs(self.weights) > threshold)
        }

    def weight(self, label: PauliLabel) -> float:
        return float(self.weights[label.index])

    @property
    def identity_weight(self) -> float:
        return float(self.weights[0])

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def validate(self, tolerance: float = NORMALIZATION_TOLERANCE):
        """Raise ValidationError unless weights are non-negative and sum to 1"""
        if np.any(self.weights < -tolerance):
            raise ValidationError(f"Negative Pauli weight {self.weights.min():.3e}")
        if abs(self.total - 1.0) > tolerance:
            raise ValidationError(f"Pauli weights sum to {self.total:.12g}, expected 1")


def _pauli_weights(operators: np.ndarray) -> np.ndarray:
    """sum_k |alpha_{k,b}|^2 over a stack of Kraus operators"""
    dim = operators.shape[-1]
    alphas = pauli_traces(operators) / dim
    return np.sum(np.abs(alphas) ** 2, axis=tuple(range(alphas.ndim - 1)))


def pauli_twirl_channel(channel: KrausChannel) -> PauliDistribution:
    """Pauli channel produced by Pauli-twirling a CPTP channel"""
    if not channel.trace_preserving:
        raise ValidationError(f"Channel {channel.name} must be trace-preserving")
    if channel.n > BRUTE_FORCE_MAX_QUBITS:
        raise CapacityError(f"Dense Pauli twirling is limited to {BRUTE_FORCE_MAX_QUBITS} qubits, got {channel.n}")
    distribution = PauliDistribution(channel.n, _pauli_weights(np.stack(channel.operators)))
    distribution.validate(EXACT_TOLERANCE)
    logger.debug(f"Pauli twirl of {channel.name}: identity weight {distribution.identity_weight:.6f}")
    return distribution


def clifford_uniformize(distribution: PauliDistribution) -> PauliDistribution:
    """Exact Clifford twirl of a Pauli channel: identity weight kept, the rest spread evenly"""
    n = distribution.n
    identity = distribution.identity_weight
    weights = np.full(4 ** n, (distribution.total - identity) / (4 ** n - 1))
    weights[0] = identity
    return PauliDistribution(n, weights)


def depolarizing_parameter(distribution: PauliDistribution) -> float:
    """p of the depolarizing channel obtained by Clifford- or Haar-twirling"""
    dim_sq = 4 ** distribution.n
    return (dim_sq * distribution.identity_weight - 1) / (dim_sq - 1)


def pauli_channel_fidelities(distribution: PauliDistribution) -> Tuple[float, float]:
    """(average fidelity, entanglement fidelity) of the Pauli channel; F_e is the identity weight"""
    dim = 2 ** distribution.n
    f_e = distribution.identity_weight
    return (dim * f_e + 1) / (dim + 1), f_e


def coset_twirl_distribution(distribution: PauliDistribution) -> PauliDistribution:
    """Average of a Pauli distribution over conjugation by C_n / P_n representatives"""
    n = distribution.n
    representatives = coset_representatives(n)
    xs, zs = label_bit_arrays(n)
    result = np.zeros(4 ** n)
    for tableau in representatives:
        images = np.array([
            tableau.conjugate_label(PauliLabel(n, int(x), int(z))).index for x, z in zip(xs, zs)
        ])
        np.add.at(result, images, distribution.weights)
    return PauliDistribution(n, result / len(representatives))


def clifford_twirl_channel(channel: KrausChannel) -> PauliDistribution:
    """Pauli distribution of the channel twirled by the whole enumerated Clifford group"""
    if channel.n > ENUMERATION_MAX_QUBITS:
        raise CapacityError(f"Enumerated twirls are limited to {ENUMERATION_MAX_QUBITS} qubits, got {channel.n}")
    unitaries = clifford_unitaries(channel.n)
    adjoints = np.conj(np.swapaxes(unitaries, -1, -2))
    operators = np.stack(channel.operators)
    # twirled Kraus set: U^dag A_k U for every group element, each with weight 1/|C|
    twirled = adjoints[:, None] @ operators[None] @ unitaries[:, None]
    weights = _pauli_weights(twirled) / len(unitaries)
    return PauliDistribution(channel.n, weights)
