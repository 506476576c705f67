"""
Pauli operators on n qubits in the symplectic bit-vector representation

A label (x, z) stands for the Hermitian tensor product whose k-th factor is
I, X, Z or Y for (x_k, z_k) = (0,0), (1,0), (0,1), (1,1). Qubit k (1-based)
lives in bit k-1 of the packed integers x and z. In text form qubit 1 is the
leftmost character, and in dense matrices qubit 1 is the most significant
tensor factor.

Label index convention: index = (x << n) | z, so the identity is index 0.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Tuple

import numpy as np
from scipy.linalg import hadamard

from config import DENSE_MAX_QUBITS
from errors import CapacityError, DimensionError, DomainError

logger = logging.getLogger(__name__)

_CHAR_TO_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_TO_CHAR = {bits: char for char, bits in _CHAR_TO_BITS.items()}
PHASE_FACTORS = np.array([1, 1j, -1, -1j])


@dataclass(frozen=True)
class PauliLabel:
    n: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise DimensionError(f"Qubit count must be positive, got {self.n}")
        limit = 1 << self.n
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise DimensionError(f"Bit strings do not fit in {self.n} qubits")

    @classmethod
    def identity(cls, n: int) -> "PauliLabel":
        return cls(n, 0, 0)

    @classmethod
    def from_index(cls, n: int, index: int) -> "PauliLabel":
        """Inverse of the index property"""
        if not 0 <= index < 4 ** n:
            raise DimensionError(f"Index {index} out of range for {n} qubits")
        return cls(n, index >> n, index & ((1 << n) - 1))

    @classmethod
    def from_string(cls, text: str) -> "PauliLabel":
        """Parse a string over {I, X, Y, Z}, qubit 1 leftmost"""
        text = text.strip().upper()
        if not text:
            raise DimensionError("Empty Pauli label")
        x = z = 0
        for k, char in enumerate(text):
            if char not in _CHAR_TO_BITS:
                raise DomainError(f"Invalid Pauli character {char!r} in {text!r}")
            xk, zk = _CHAR_TO_BITS[char]
            x |= xk << k
            z |= zk << k
        return cls(len(text), x, z)

    @classmethod
    def single(cls, n: int, qubit: int, char: str) -> "PauliLabel":
        """Label acting as char on one qubit (1-based) and identity elsewhere"""
        if not 1 <= qubit <= n:
            raise DimensionError(f"Qubit {qubit} out of range 1..{n}")
        xk, zk = _CHAR_TO_BITS[char.upper()]
        return cls(n, xk << (qubit - 1), zk << (qubit - 1))

    @property
    def index(self) -> int:
        return (self.x << self.n) | self.z

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def weight(self) -> int:
        """Number of non-identity components"""
        return (self.x | self.z).bit_count()

    def component(self, qubit: int) -> str:
        """Single-qubit factor on a 1-based qubit"""
        shift = qubit - 1
        return _BITS_TO_CHAR[((self.x >> shift) & 1, (self.z >> shift) & 1)]

    def to_string(self) -> str:
        return "".join(self.component(k) for k in range(1, self.n + 1))

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class PhasedPauli:
    label: PauliLabel
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def n(self) -> int:
        return self.label.n

    def __str__(self) -> str:
        prefix = ("+", "+i", "-", "-i")[self.phase]
        return f"{prefix}{self.label}"


@dataclass(frozen=True)
class PauliCoefficients:
    n: int
    alpha: np.ndarray

    def coefficient(self, label: PauliLabel) -> complex:
        return complex(self.alpha[label.index])

    def reconstruct(self) -> np.ndarray:
        """Sum of alpha_a * P_a as a dense matrix"""
        dim = 1 << self.n
        result = np.zeros((dim, dim), dtype=complex)
        for index in np.flatnonzero(self.alpha):
            label = PauliLabel.from_index(self.n, int(index))
            result += self.alpha[index] * to_dense(PhasedPauli(label))
        return result


def _check_same_size(a: PauliLabel, b: PauliLabel):
    if a.n != b.n:
        raise DimensionError(f"Qubit counts differ: {a.n} vs {b.n}")


def symplectic_product(a: PauliLabel, b: PauliLabel) -> int:
    """0 if the operators commute, 1 if they anticommute"""
    _check_same_size(a, b)
    return ((a.x & b.z) ^ (a.z & b.x)).bit_count() & 1


def mul(p: PhasedPauli, q: PhasedPauli) -> PhasedPauli:
    """Group product p*q including the i^k phase"""
    _check_same_size(p.label, q.label)
    x1, z1 = p.label.x, p.label.z
    x2, z2 = q.label.x, q.label.z
    y1, xo1, zo1 = x1 & z1, x1 & ~z1, z1 & ~x1
    y2, xo2, zo2 = x2 & z2, x2 & ~z2, z2 & ~x2
    # XY = iZ, YZ = iX, ZX = iY and the reversed orders pick up -i
    plus = (y1 & zo2).bit_count() + (xo1 & y2).bit_count() + (zo1 & xo2).bit_count()
    minus = (y1 & xo2).bit_count() + (xo1 & zo2).bit_count() + (zo1 & y2).bit_count()
    label = PauliLabel(p.n, x1 ^ x2, z1 ^ z2)
    return PhasedPauli(label, p.phase + q.phase + plus - minus)


def reverse_bits(value: int, n: int) -> int:
    """Map label bit order (qubit 1 = bit 0) to basis-state bit order (qubit 1 = MSB)"""
    return int(format(value, f"0{n}b")[::-1], 2)


@lru_cache(maxsize=None)
def _basis_tables(n: int) -> Tuple[np.ndarray, np.ndarray]:
    dim = 1 << n
    reversed_bits = np.array([reverse_bits(v, n) for v in range(dim)], dtype=np.int64)
    popcount = np.array([v.bit_count() for v in range(dim)], dtype=np.int64)
    return reversed_bits, popcount


def to_dense(p: PhasedPauli) -> np.ndarray:
    """Dense 2^n x 2^n matrix of i^phase * P_label"""
    n = p.n
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"Dense Pauli matrices are limited to {DENSE_MAX_QUBITS} qubits, got {n}")
    dim = 1 << n
    rows = np.arange(dim)
    xb = reverse_bits(p.label.x, n)
    zb = reverse_bits(p.label.z, n)
    _, popcount = _basis_tables(n)
    signs = 1 - 2 * (popcount[rows & zb] & 1)
    scalar = PHASE_FACTORS[((p.label.x & p.label.z).bit_count() + p.phase) % 4]
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[rows ^ xb, rows] = scalar * signs
    return matrix


def qubits_for_dimension(shape) -> int:
    """Qubit count of a square 2^n x 2^n shape"""
    if len(shape) < 2 or shape[-1] != shape[-2]:
        raise DimensionError(f"Expected square matrices, got shape {tuple(shape)}")
    dim = shape[-1]
    if dim < 1 or dim & (dim - 1):
        raise DimensionError(f"Dimension {dim} is not a power of two")
    return dim.bit_length() - 1


def pauli_traces(matrices: np.ndarray) -> np.ndarray:
    """Tr(P_a A) for every label a, batched over leading axes, indexed by label index"""
    matrices = np.asarray(matrices, dtype=complex)
    n = qubits_for_dimension(matrices.shape)
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"Pauli expansion is limited to {DENSE_MAX_QUBITS} qubits, got {n}")
    dim = 1 << n
    rows = np.arange(dim)
    # shifted[..., xb, r] = A[r, r ^ xb]; a Walsh-Hadamard transform over r supplies the Z signs
    shifted = matrices[..., rows[None, :], rows[None, :] ^ rows[:, None]]
    transformed = shifted @ hadamard(dim)

    reversed_bits, popcount = _basis_tables(n)
    indices = np.arange(dim * dim)
    xs, zs = indices >> n, indices & (dim - 1)
    y_phase = PHASE_FACTORS[popcount[xs & zs] % 4]
    return y_phase * transformed[..., reversed_bits[xs], reversed_bits[zs]]


def expand(matrix: np.ndarray) -> PauliCoefficients:
    """Pauli-basis coefficients alpha_a = Tr(P_a A) / D"""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2:
        raise DimensionError(f"Expected a single matrix, got shape {matrix.shape}")
    n = qubits_for_dimension(matrix.shape)
    return PauliCoefficients(n, pauli_traces(matrix) / (1 << n))


def all_labels(n: int) -> Iterator[PauliLabel]:
    """All 4^n labels in index order"""
    for index in range(4 ** n):
        yield PauliLabel.from_index(n, index)


def label_bit_arrays(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Packed x and z bit arrays for every label index"""
    indices = np.arange(4 ** n, dtype=np.int64)
    return indices >> n, indices & ((1 << n) - 1)


def dense_pauli_basis(n: int) -> np.ndarray:
    """Stack of all 4^n Hermitian Pauli matrices in index order"""
    return np.stack([to_dense(PhasedPauli(label)) for label in all_labels(n)])
