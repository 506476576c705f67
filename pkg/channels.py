"""
Kraus channels for the dense oracle and the fidelity experiments

Provides identity, dephasing, amplitude damping, depolarizing and Pauli
channels, unitary channels and random CPTP channels drawn through a
Stinespring isometry.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from config import CPTP_TOLERANCE, DENSE_MAX_QUBITS
from errors import CapacityError, DimensionError, DomainError, ValidationError
from pauli_algebra import PauliLabel, PhasedPauli, qubits_for_dimension, to_dense

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    operators: tuple
    trace_preserving: bool = True
    name: str = "channel"

    def __post_init__(self):
        if not self.operators:
            raise DimensionError("A channel needs at least one Kraus operator")
        operators = tuple(np.array(op, dtype=complex) for op in self.operators)
        shape = operators[0].shape
        for op in operators:
            if op.shape != shape:
                raise DimensionError(f"Kraus operators disagree in shape: {op.shape} vs {shape}")
        n = qubits_for_dimension(shape)
        if n > DENSE_MAX_QUBITS:
            raise CapacityError(f"Dense channels are limited to {DENSE_MAX_QUBITS} qubits, got {n}")
        for op in operators:
            if not np.all(np.isfinite(op)):
                raise ValidationError(f"Kraus operator of {self.name} has non-finite entries")
            op.setflags(write=False)
        object.__setattr__(self, "operators", operators)
        if self.trace_preserving:
            deviation = self.completeness_deviation()
            if deviation > CPTP_TOLERANCE:
                raise ValidationError(
                    f"Channel {self.name} is declared trace-preserving but sum A^dag A deviates from I by {deviation:.3e}"
                )

    @property
    def dimension(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n(self) -> int:
        return self.dimension.bit_length() - 1

    def completeness_deviation(self) -> float:
        """Max entrywise |sum_k A_k^dag A_k - I|"""
        total = sum(op.conj().T @ op for op in self.operators)
        return float(np.max(np.abs(total - np.eye(self.dimension))))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(op @ rho @ op.conj().T for op in self.operators)

    def trace_overlaps(self) -> np.ndarray:
        """|Tr A_k|^2 for every Kraus operator"""
        return np.array([abs(np.trace(op)) ** 2 for op in self.operators])

    def conjugated(self, unitary: np.ndarray, name: Optional[str] = None) -> "KrausChannel":
        """Channel rho -> U^dag Lambda(U rho U^dag) U"""
        unitary = np.asarray(unitary, dtype=complex)
        operators = tuple(unitary.conj().T @ op @ unitary for op in self.operators)
        return KrausChannel(operators, self.trace_preserving, name or self.name)

    def padded(self, n_total: int) -> "KrausChannel":
        """Same action on the leading qubits, identity on the extra ones"""
        if n_total < self.n:
            raise DimensionError(f"Cannot pad a {self.n}-qubit channel down to {n_total} qubits")
        extra = np.eye(1 << (n_total - self.n))
        operators = tuple(np.kron(op, extra) for op in self.operators)
        return KrausChannel(operators, self.trace_preserving, f"{self.name}_padded{n_total}")


def identity_channel(n: int) -> KrausChannel:
    return KrausChannel((np.eye(1 << n),), name="identity")


def unitary_channel(unitary: np.ndarray, name: str = "unitary") -> KrausChannel:
    return KrausChannel((np.asarray(unitary, dtype=complex),), name=name)


def dephasing_channel(q: float) -> KrausChannel:
    """Single-qubit Kraus {sqrt(1-q) I, sqrt(q) Z}"""
    if not 0 <= q <= 1:
        raise DomainError("q must be in [0, 1]")
    identity = np.sqrt(1 - q) * np.eye(2)
    flip = np.sqrt(q) * np.diag([1.0, -1.0])
    return KrausChannel((identity, flip), name=f"dephasing_{q:g}")


def amplitude_damping_channel(gamma: float) -> KrausChannel:
    """Single-qubit decay |1> -> |0> with probability gamma"""
    if not 0 <= gamma <= 1:
        raise DomainError("gamma must be in [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]])
    return KrausChannel((k0, k1), name=f"amplitude_damping_{gamma:g}")


def pauli_channel(n: int, weights: Sequence[float], name: str = "pauli") -> KrausChannel:
    """rho -> sum_a w_a P_a rho P_a with weights indexed by label index"""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (4 ** n,):
        raise DimensionError(f"Expected {4 ** n} Pauli weights, got {weights.shape}")
    if np.any(weights < -CPTP_TOLERANCE):
        raise ValidationError("Pauli channel weights must be non-negative")
    operators = [
        np.sqrt(max(weight, 0.0)) * to_dense(PhasedPauli(PauliLabel.from_index(n, index)))
        for index, weight in enumerate(weights)
        if weight > 0
    ]
    return KrausChannel(tuple(operators), name=name)


def uniform_pauli_channel(n: int) -> KrausChannel:
    """Completely depolarizing channel written as Kraus operators P_k / D"""
    return pauli_channel(n, np.full(4 ** n, 1.0 / 4 ** n), name="uniform_pauli")


def depolarizing_channel(n: int, p: float) -> KrausChannel:
    """rho -> p rho + (1 - p) Tr(rho) I / D"""
    dim_sq = 4 ** n
    if not -1.0 / (dim_sq - 1) <= p <= 1:
        raise DomainError(f"Depolarizing parameter {p} gives a non-CP map")
    weights = np.full(dim_sq, (1 - p) / dim_sq)
    weights[0] += p
    return pauli_channel(n, weights, name=f"depolarizing_{p:g}")


def random_channel(n: int, rank: int, rng: np.random.Generator) -> KrausChannel:
    """Random CPTP channel with `rank` Kraus operators from a Haar-like isometry"""
    if rank < 1:
        raise DomainError("Kraus rank must be positive")
    dim = 1 << n
    gaussian = rng.normal(size=(rank * dim, dim)) + 1j * rng.normal(size=(rank * dim, dim))
    isometry, _ = np.linalg.qr(gaussian)
    operators: List[np.ndarray] = [isometry[k * dim:(k + 1) * dim, :] for k in range(rank)]
    return KrausChannel(tuple(operators), name=f"random_rank{rank}")
