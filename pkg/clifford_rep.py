"""
Clifford elements as conjugation tableaux, per-gate conjugation rules and
breadth-first enumeration of the Clifford group modulo global phase
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, List, Optional, Tuple

import numpy as np

from config import DENSE_MAX_QUBITS, ENUMERATION_MAX_QUBITS
from errors import CapacityError, DimensionError, DomainError
from pauli_algebra import PauliLabel, PhasedPauli, mul, symplectic_product, to_dense

logger = logging.getLogger(__name__)


class GateKind(Enum):
    H = "H"
    S = "S"
    R = "R"
    R2 = "R2"
    CNOT = "CNOT"


_SINGLE_QUBIT_KINDS = (GateKind.H, GateKind.S, GateKind.R, GateKind.R2)

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_PHASE = np.diag([1, 1j]).astype(complex)
_R = _PHASE @ _HADAMARD
_SINGLE_QUBIT_MATRICES = {
    GateKind.H: _HADAMARD,
    GateKind.S: _PHASE,
    GateKind.R: _R,
    GateKind.R2: _R @ _R,
}


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    qubits: Tuple[int, ...]

    def __post_init__(self):
        expected = 2 if self.kind is GateKind.CNOT else 1
        if len(self.qubits) != expected:
            raise DomainError(f"{self.kind.value} takes {expected} qubit index(es), got {self.qubits}")
        if self.kind is GateKind.CNOT and self.qubits[0] == self.qubits[1]:
            raise DomainError(f"CNOT control and target coincide on qubit {self.qubits[0]}")

    @classmethod
    def h(cls, qubit: int) -> "Gate":
        return cls(GateKind.H, (qubit,))

    @classmethod
    def s(cls, qubit: int) -> "Gate":
        return cls(GateKind.S, (qubit,))

    @classmethod
    def r_power(cls, qubit: int, exponent: int) -> Optional["Gate"]:
        """R^exponent on a qubit, None for the identity power"""
        exponent %= 3
        if exponent == 0:
            return None
        return cls(GateKind.R if exponent == 1 else GateKind.R2, (qubit,))

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, (control, target))

    def validate(self, n: int):
        for qubit in self.qubits:
            if not 1 <= qubit <= n:
                raise DimensionError(f"Gate {self.to_text()} acts outside qubits 1..{n}")

    def to_text(self) -> str:
        return " ".join([self.kind.value, *map(str, self.qubits)])

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        parts = line.split()
        try:
            kind = GateKind(parts[0].upper())
            qubits = tuple(int(part) for part in parts[1:])
        except (IndexError, ValueError):
            raise DomainError(f"Cannot parse gate line {line!r}")
        return cls(kind, qubits)


def apply_gate_bits(gate: Gate, x, z):
    """Phase-free conjugation on packed bits; x and z may be ints or integer arrays

    Returns (x, z, sign) where sign is 1 where the Hermitian image picks up a minus.
    """
    if gate.kind is GateKind.CNOT:
        control, target = gate.qubits
        c, t = control - 1, target - 1
        xc, zc = (x >> c) & 1, (z >> c) & 1
        xt, zt = (x >> t) & 1, (z >> t) & 1
        sign = xc & zt & (xt ^ zc ^ 1)
        return x ^ (xc << t), z ^ (zt << c), sign

    k = gate.qubits[0] - 1
    xk, zk = (x >> k) & 1, (z >> k) & 1
    if gate.kind is GateKind.H:
        swap = (xk ^ zk) << k
        return x ^ swap, z ^ swap, xk & zk
    if gate.kind is GateKind.S:
        return x, z ^ (xk << k), xk & zk
    if gate.kind is GateKind.R:
        # (x, z) -> (z, x ^ z); the H and S sign flips cancel
        return x ^ ((xk ^ zk) << k), z ^ (xk << k), xk & 0
    # R2: (x, z) -> (x ^ z, x)
    return x ^ (zk << k), z ^ ((xk ^ zk) << k), xk & 0


def conjugate_gate(gate: Gate, p: PhasedPauli) -> PhasedPauli:
    """g p g^dagger, phase included"""
    gate.validate(p.n)
    x, z, sign = apply_gate_bits(gate, p.label.x, p.label.z)
    return PhasedPauli(PauliLabel(p.n, x, z), p.phase + 2 * sign)


def conjugate_label_by_gate(gate: Gate, label: PauliLabel) -> PauliLabel:
    """Phase-free g p g^dagger"""
    gate.validate(label.n)
    x, z, _ = apply_gate_bits(gate, label.x, label.z)
    return PauliLabel(label.n, x, z)


@dataclass(frozen=True)
class CliffordTableau:
    """Images of X_1..X_n, Z_1..Z_n under conjugation

    Equality and hashing use the images only, so two gate words that realize the
    same element up to global phase compare equal.
    """
    n: int
    images: Tuple[PhasedPauli, ...]
    word: Tuple[Gate, ...] = field(default=(), compare=False)

    @classmethod
    def identity(cls, n: int) -> "CliffordTableau":
        xs = tuple(PhasedPauli(PauliLabel(n, 1 << k, 0)) for k in range(n))
        zs = tuple(PhasedPauli(PauliLabel(n, 0, 1 << k)) for k in range(n))
        return cls(n, xs + zs)

    @property
    def symplectic(self) -> np.ndarray:
        """2n x 2n binary matrix; column j is the (x | z) bit vector of generator j's image"""
        matrix = np.zeros((2 * self.n, 2 * self.n), dtype=np.uint8)
        for j, image in enumerate(self.images):
            for k in range(self.n):
                matrix[k, j] = (image.label.x >> k) & 1
                matrix[self.n + k, j] = (image.label.z >> k) & 1
        return matrix

    @property
    def signs(self) -> np.ndarray:
        return np.array([image.phase // 2 for image in self.images], dtype=np.uint8)

    def conjugate(self, p: PhasedPauli) -> PhasedPauli:
        if p.n != self.n:
            raise DimensionError(f"Tableau on {self.n} qubits cannot act on {p.n} qubits")
        x, z = p.label.x, p.label.z
        # P = i^{|x & z|} prod_k X_k^{x_k} Z_k^{z_k}
        result = PhasedPauli(PauliLabel.identity(self.n), p.phase + (x & z).bit_count())
        for k in range(self.n):
            if (x >> k) & 1:
                result = mul(result, self.images[k])
            if (z >> k) & 1:
                result = mul(result, self.images[self.n + k])
        return result

    def conjugate_label(self, label: PauliLabel) -> PauliLabel:
        return self.conjugate(PhasedPauli(label)).label

    def then_gate(self, gate: Gate) -> "CliffordTableau":
        """Tableau of this element followed by gate"""
        images = tuple(conjugate_gate(gate, image) for image in self.images)
        return CliffordTableau(self.n, images, self.word + (gate,))

    def compose(self, other: "CliffordTableau") -> "CliffordTableau":
        """Tableau of this element followed by other"""
        if other.n != self.n:
            raise DimensionError(f"Cannot compose tableaux on {self.n} and {other.n} qubits")
        images = tuple(other.conjugate(image) for image in self.images)
        return CliffordTableau(self.n, images, self.word + other.word)

    def preserves_symplectic_form(self) -> bool:
        n = self.n
        zero = np.zeros((n, n), dtype=np.int64)
        eye = np.eye(n, dtype=np.int64)
        omega = np.block([[zero, eye], [eye, zero]])
        matrix = self.symplectic.astype(np.int64)
        return bool(np.array_equal((matrix.T @ omega @ matrix) % 2, omega))

    def to_dense(self) -> np.ndarray:
        """Unitary realizing this element, defined up to global phase by its gate word"""
        return gates_to_dense(self.n, self.word)


def tableau_from_gates(n: int, gates: Iterable[Gate]) -> CliffordTableau:
    tableau = CliffordTableau.identity(n)
    for gate in gates:
        gate.validate(n)
        tableau = tableau.then_gate(gate)
    return tableau


def generator_gates(n: int) -> List[Gate]:
    """H_k, S_k and CNOT in both orientations on every qubit pair"""
    gates = [Gate.h(k) for k in range(1, n + 1)]
    gates += [Gate.s(k) for k in range(1, n + 1)]
    gates += [Gate.cnot(c, t) for c in range(1, n + 1) for t in range(1, n + 1) if c != t]
    return gates


@lru_cache(maxsize=None)
def enumerate_clifford(n: int) -> Tuple[CliffordTableau, ...]:
    """Every Clifford element modulo global phase, in breadth-first discovery order"""
    if n < 1 or n > ENUMERATION_MAX_QUBITS:
        raise CapacityError(f"Clifford enumeration supports 1..{ENUMERATION_MAX_QUBITS} qubits, got {n}")

    generators = generator_gates(n)
    start = CliffordTableau.identity(n)
    seen = {start.images: start}
    frontier = deque([start])

    while frontier:
        current = frontier.popleft()
        for gate in generators:
            candidate = current.then_gate(gate)
            if candidate.images not in seen:
                seen[candidate.images] = candidate
                frontier.append(candidate)

    logger.info(f"Enumerated {len(seen)} Clifford elements on {n} qubit(s)")
    return tuple(seen.values())


@lru_cache(maxsize=None)
def coset_representatives(n: int) -> Tuple[CliffordTableau, ...]:
    """One element per symplectic matrix: representatives of C_n / P_n"""
    representatives = {}
    for tableau in enumerate_clifford(n):
        key = tuple(image.label for image in tableau.images)
        representatives.setdefault(key, tableau)
    logger.info(f"Found {len(representatives)} coset representatives on {n} qubit(s)")
    return tuple(representatives.values())


def single_qubit_matrix(kind: GateKind) -> np.ndarray:
    if kind not in _SINGLE_QUBIT_MATRICES:
        raise DomainError(f"{kind.value} is not a single-qubit gate")
    return _SINGLE_QUBIT_MATRICES[kind]


@lru_cache(maxsize=None)
def cnot_permutation(n: int, control: int, target: int) -> np.ndarray:
    """Basis index each computational basis index is sent to by CNOT (an involution)"""
    rows = np.arange(1 << n)
    permutation = rows ^ (((rows >> (n - control)) & 1) << (n - target))
    permutation.setflags(write=False)
    return permutation


@lru_cache(maxsize=None)
def gate_matrix(gate: Gate, n: int) -> np.ndarray:
    """Dense unitary of a gate on n qubits (qubit 1 is the most significant factor)"""
    gate.validate(n)
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"Dense gates are limited to {DENSE_MAX_QUBITS} qubits, got {n}")
    dim = 1 << n
    if gate.kind is GateKind.CNOT:
        matrix = np.zeros((dim, dim), dtype=complex)
        matrix[cnot_permutation(n, *gate.qubits), np.arange(dim)] = 1
        return matrix
    k = gate.qubits[0]
    left = np.eye(1 << (k - 1))
    right = np.eye(1 << (n - k))
    return np.kron(np.kron(left, _SINGLE_QUBIT_MATRICES[gate.kind]), right)


def gates_to_dense(n: int, gates: Iterable[Gate]) -> np.ndarray:
    """U = g_m ... g_1 for gates applied in order g_1 first"""
    unitary = np.eye(1 << n, dtype=complex)
    for gate in gates:
        unitary = gate_matrix(gate, n) @ unitary
    return unitary


@dataclass(frozen=True)
class Circuit:
    """Optional Pauli layer applied first, then gates in order"""
    n: int
    gates: Tuple[Gate, ...] = ()
    pauli_prefix: Optional[PauliLabel] = None

    def __post_init__(self):
        if self.pauli_prefix is not None and self.pauli_prefix.n != self.n:
            raise DimensionError(f"Pauli layer has {self.pauli_prefix.n} qubits, circuit has {self.n}")
        for gate in self.gates:
            gate.validate(self.n)

    @property
    def pauli_gate_count(self) -> int:
        """Single-qubit Pauli gates in the prefix layer"""
        return 0 if self.pauli_prefix is None else self.pauli_prefix.weight

    def gate_count(self) -> int:
        return self.pauli_gate_count + len(self.gates)

    def conjugate(self, p: PhasedPauli) -> PhasedPauli:
        """U p U^dagger"""
        if self.pauli_prefix is not None:
            p = PhasedPauli(p.label, p.phase + 2 * symplectic_product(self.pauli_prefix, p.label))
        for gate in self.gates:
            p = conjugate_gate(gate, p)
        return p

    def conjugate_label(self, label: PauliLabel) -> PauliLabel:
        for gate in self.gates:
            label = conjugate_label_by_gate(gate, label)
        return label

    def to_tableau(self) -> CliffordTableau:
        return tableau_from_gates(self.n, self.gates)

    def to_dense(self) -> np.ndarray:
        unitary = gates_to_dense(self.n, self.gates)
        if self.pauli_prefix is not None:
            unitary = unitary @ to_dense(PhasedPauli(self.pauli_prefix))
        return unitary

    def to_text(self) -> str:
        lines = [f"QUBITS {self.n}"]
        if self.pauli_prefix is not None:
            lines.append(f"PAULI {self.pauli_prefix}")
        lines.extend(gate.to_text() for gate in self.gates)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        n = None
        prefix = None
        gates = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            head = line.split()[0].upper()
            if head == "QUBITS":
                n = int(line.split()[1])
            elif head == "PAULI":
                prefix = PauliLabel.from_string(line.split()[1])
            else:
                gates.append(Gate.from_text(line))
        if n is None:
            raise DomainError("Circuit text lacks a QUBITS header")
        return cls(n, tuple(gates), prefix)

