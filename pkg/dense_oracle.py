"""
Small-n exact linear algebra: closed-form Haar twirl, brute-force Pauli
twirls, ensemble moment tests and exact fidelities

Everything else in the toolkit is tested against this module.
"""

import logging
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

from channels import KrausChannel, depolarizing_channel
from clifford_rep import enumerate_clifford
from config import BRUTE_FORCE_MAX_QUBITS, UNITARITY_TOLERANCE
from errors import CapacityError, DimensionError, DomainError, ValidationError
from pauli_algebra import dense_pauli_basis, expand, qubits_for_dimension

logger = logging.getLogger(__name__)


class DepolarizingTwirl(NamedTuple):
    p: float
    channel: KrausChannel


def _as_operator(matrix) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=complex)
    qubits_for_dimension(matrix.shape)
    return matrix


def _common_dimension(*matrices: np.ndarray) -> int:
    dims = {m.shape for m in matrices}
    if len(dims) != 1:
        raise DimensionError(f"Operators disagree in shape: {sorted(dims)}")
    return matrices[0].shape[0]


def haar_twirl_map(A, B, X) -> np.ndarray:
    """Exact Haar average of U^dag A U X U^dag B U"""
    A, B, X = _as_operator(A), _as_operator(B), _as_operator(X)
    dim = _common_dimension(A, B, X)
    if dim == 1:
        raise DomainError("The Haar twirl formula needs D > 1")
    identity = np.eye(dim)
    tr_x = np.trace(X)
    tr_ab = np.trace(A @ B)
    mixed = tr_ab * tr_x / dim * identity / dim
    coefficient = (dim * np.trace(A) * np.trace(B) - tr_ab) / (dim * (dim ** 2 - 1))
    return mixed + coefficient * (X - tr_x * identity / dim)


def validate_unitaries(unitaries: np.ndarray, tolerance: float = UNITARITY_TOLERANCE):
    """Raise ValidationError if any member deviates from unitarity by more than tolerance"""
    dim = unitaries.shape[-1]
    products = np.conj(np.swapaxes(unitaries, -1, -2)) @ unitaries
    deviations = np.max(np.abs(products - np.eye(dim)), axis=(-2, -1))
    worst = int(np.argmax(deviations))
    if deviations[worst] > tolerance:
        raise ValidationError(f"Ensemble member {worst} is not unitary (deviation {deviations[worst]:.3e})")


def _normalized_weights(count: int, weights: Optional[Sequence[float]]) -> np.ndarray:
    if weights is None:
        return np.full(count, 1.0 / count)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (count,):
        raise DimensionError(f"Expected {count} weights, got {weights.shape}")
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-9:
        raise ValidationError("Ensemble weights must be non-negative and sum to 1")
    return weights


def ensemble_twirl_map(unitaries, A, B, X, weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """sum_k w_k U_k^dag A U_k X U_k^dag B U_k over an ensemble stacked as (K, D, D)"""
    unitaries = np.asarray(unitaries, dtype=complex)
    if unitaries.ndim == 2:
        unitaries = unitaries[None]
    A, B, X = _as_operator(A), _as_operator(B), _as_operator(X)
    _common_dimension(unitaries[0], A, B, X)
    validate_unitaries(unitaries)
    weights = _normalized_weights(len(unitaries), weights)

    adjoints = np.conj(np.swapaxes(unitaries, -1, -2))
    left = adjoints @ A @ unitaries
    right = adjoints @ B @ unitaries
    terms = left @ X @ right
    return np.tensordot(weights, terms, axes=1)


def haar_first_moment(X) -> np.ndarray:
    """Haar average of U X U^dag"""
    X = _as_operator(X)
    dim = X.shape[0]
    return np.trace(X) * np.eye(dim) / dim


def ensemble_first_moment(unitaries, X, weights: Optional[Sequence[float]] = None) -> np.ndarray:
    """sum_k w_k U_k X U_k^dag"""
    unitaries = np.asarray(unitaries, dtype=complex)
    if unitaries.ndim == 2:
        unitaries = unitaries[None]
    X = _as_operator(X)
    _common_dimension(unitaries[0], X)
    validate_unitaries(unitaries)
    weights = _normalized_weights(len(unitaries), weights)
    terms = unitaries @ X @ np.conj(np.swapaxes(unitaries, -1, -2))
    return np.tensordot(weights, terms, axes=1)


def _check_brute_force(n: int):
    if n > BRUTE_FORCE_MAX_QUBITS:
        raise CapacityError(f"Brute-force Pauli sums are limited to {BRUTE_FORCE_MAX_QUBITS} qubits, got {n}")


def brute_pauli_twirl(A, B, X) -> np.ndarray:
    """(1/D^2) sum_k P_k A P_k X P_k B P_k by explicit summation"""
    A, B, X = _as_operator(A), _as_operator(B), _as_operator(X)
    _common_dimension(A, B, X)
    n = qubits_for_dimension(A.shape)
    _check_brute_force(n)
    paulis = dense_pauli_basis(n)
    terms = paulis @ A @ paulis @ X @ paulis @ B @ paulis
    return terms.mean(axis=0)


def coefficient_pauli_twirl(A, B, X) -> np.ndarray:
    """sum_a alpha_a beta_a P_a X P_a from the Pauli expansions of A and B"""
    A, B, X = _as_operator(A), _as_operator(B), _as_operator(X)
    _common_dimension(A, B, X)
    n = qubits_for_dimension(A.shape)
    _check_brute_force(n)
    rates = expand(A).alpha * expand(B).alpha
    paulis = dense_pauli_basis(n)
    return np.tensordot(rates, paulis @ X @ paulis, axes=1)


def _check_cptp(channel: KrausChannel):
    if not channel.trace_preserving:
        raise ValidationError(f"Channel {channel.name} must be trace-preserving")


def exact_average_fidelity(channel: KrausChannel) -> float:
    """Haar-averaged survival probability (sum_k |Tr A_k|^2 + D) / (D^2 + D)"""
    _check_cptp(channel)
    dim = channel.dimension
    return float((channel.trace_overlaps().sum() + dim) / (dim ** 2 + dim))


def entanglement_fidelity(channel: KrausChannel) -> float:
    """sum_k |Tr A_k|^2 / D^2"""
    _check_cptp(channel)
    return float(channel.trace_overlaps().sum() / channel.dimension ** 2)


def haar_channel_twirl(channel: KrausChannel) -> DepolarizingTwirl:
    """Depolarizing parameter of the Haar-twirled channel, with that channel in Kraus form"""
    _check_cptp(channel)
    dim = channel.dimension
    if dim == 1:
        raise DomainError("The depolarizing parameter needs D > 1")
    p = float((channel.trace_overlaps().sum() - 1) / (dim ** 2 - 1))
    return DepolarizingTwirl(p, depolarizing_channel(channel.n, p))


def random_operator(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Complex Gaussian matrix scaled to unit Frobenius norm"""
    matrix = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return matrix / np.linalg.norm(matrix)


@lru_cache(maxsize=None)
def clifford_unitaries(n: int) -> np.ndarray:
    """Dense unitaries of the enumerated Clifford group, stacked (K, D, D)"""
    unitaries = np.stack([tableau.to_dense() for tableau in enumerate_clifford(n)])
    unitaries.setflags(write=False)
    logger.info(f"Built {len(unitaries)} dense Clifford unitaries on {n} qubit(s)")
    return unitaries


def max_deviation(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
