"""
Approximate unitary 2-design built from repetitions of a seven-step random
Clifford circuit

One repetition acts on qubit 1 and the register as:

    1. R^e on every qubit, e uniform on {0, 1, 2}
    2. CNOT(k -> 1) for each k >= 2 with probability 3/4
    3. H on qubit 1, R^e on qubits 2..n
    4. as step 2
    5. as step 3
    6. S on qubit 1 with probability 1/2
    7. as step 2

The same instance can be evaluated four ways: on a single packed label, on
boolean bit matrices for large trajectory batches, on dense state or unitary
stacks, and averaged exactly as a Markov chain over label distributions.
Every batch sampler draws in the same order as the scalar one, so a seed
produces the same instance on either path.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import linregress

from batch_runner import BatchRunner
from clifford_rep import (
    Circuit,
    Gate,
    GateKind,
    apply_gate_bits,
    cnot_permutation,
    single_qubit_matrix,
)
from config import CHAIN_MAX_QUBITS, DENSE_MAX_QUBITS, EXACT_TOLERANCE
from errors import CapacityError, DimensionError, DomainError
from pauli_algebra import PHASE_FACTORS, PauliLabel, label_bit_arrays
from twirl_engine import PauliDistribution
from utils import chunk_sizes, stream_rng

logger = logging.getLogger(__name__)

XOR_PROBABILITY = 0.75
PHASE_PROBABILITY = 0.5

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _check_procedure_size(n: int):
    if n < 2:
        raise DomainError(
            f"The basic procedure needs n >= 2 qubits, got {n}; "
            "use the enumerated Clifford group (clifford_rep.enumerate_clifford) for n = 1"
        )


@dataclass(frozen=True)
class BasicProcedureInstance:
    """One fully resolved repetition; exponent and mask tuples are indexed by qubit"""
    n: int
    step1_r: Tuple[int, ...]
    step2_mask: Tuple[bool, ...]
    step3_r: Tuple[int, ...]
    step4_mask: Tuple[bool, ...]
    step5_r: Tuple[int, ...]
    step6_s: bool
    step7_mask: Tuple[bool, ...]

    def __post_init__(self):
        _check_procedure_size(self.n)
        expected = {
            "step1_r": self.n,
            "step2_mask": self.n - 1,
            "step3_r": self.n - 1,
            "step4_mask": self.n - 1,
            "step5_r": self.n - 1,
            "step7_mask": self.n - 1,
        }
        for name, length in expected.items():
            if len(getattr(self, name)) != length:
                raise DimensionError(f"{name} needs {length} entries for {self.n} qubits")
        for exponents in (self.step1_r, self.step3_r, self.step5_r):
            if any(e not in (0, 1, 2) for e in exponents):
                raise DomainError(f"R exponents must lie in {{0, 1, 2}}, got {exponents}")

    @classmethod
    def trivial(cls, n: int) -> "BasicProcedureInstance":
        """All exponents 0, no CNOTs, no S: only the two H gates on qubit 1"""
        zeros, clear = (0,) * (n - 1), (False,) * (n - 1)
        return cls(n, (0,) * n, clear, zeros, clear, zeros, False, clear)

    @classmethod
    def maximal(cls, n: int) -> "BasicProcedureInstance":
        """Every optional gate present"""
        ones, full = (1,) * (n - 1), (True,) * (n - 1)
        return cls(n, (1,) * n, full, ones, full, ones, True, full)

    def steps(self) -> Tuple[Tuple[Gate, ...], ...]:
        """Realized gates of each of the seven steps"""
        def rotations(exponents: Sequence[int], first_qubit: int) -> Tuple[Gate, ...]:
            gates = (Gate.r_power(q, e) for q, e in enumerate(exponents, first_qubit))
            return tuple(gate for gate in gates if gate is not None)

        def xors(mask: Sequence[bool]) -> Tuple[Gate, ...]:
            return tuple(Gate.cnot(k, 1) for k, bit in enumerate(mask, 2) if bit)

        return (
            rotations(self.step1_r, 1),
            xors(self.step2_mask),
            (Gate.h(1),) + rotations(self.step3_r, 2),
            xors(self.step4_mask),
            (Gate.h(1),) + rotations(self.step5_r, 2),
            (Gate.s(1),) if self.step6_s else (),
            xors(self.step7_mask),
        )

    def gates(self) -> Tuple[Gate, ...]:
        return tuple(gate for step in self.steps() for gate in step)

    def to_circuit(self) -> Circuit:
        return Circuit(self.n, self.gates())


@dataclass(frozen=True, eq=False)
class ProcedureBatch:
    """count independent instances stored column-wise; row i is instance i"""
    n: int
    step1_r: np.ndarray
    step2_mask: np.ndarray
    step3_r: np.ndarray
    step4_mask: np.ndarray
    step5_r: np.ndarray
    step6_s: np.ndarray
    step7_mask: np.ndarray

    @property
    def count(self) -> int:
        return self.step1_r.shape[0]

    def instance(self, i: int) -> BasicProcedureInstance:
        def ints(row) -> Tuple[int, ...]:
            return tuple(int(v) for v in row)

        def bits(row) -> Tuple[bool, ...]:
            return tuple(bool(v) for v in row)

        return BasicProcedureInstance(
            self.n,
            ints(self.step1_r[i]),
            bits(self.step2_mask[i]),
            ints(self.step3_r[i]),
            bits(self.step4_mask[i]),
            ints(self.step5_r[i]),
            bool(self.step6_s[i]),
            bits(self.step7_mask[i]),
        )

    def gate_counts(self) -> np.ndarray:
        """Realized gate count of every instance"""
        rotations = sum(np.count_nonzero(r, axis=1) for r in (self.step1_r, self.step3_r, self.step5_r))
        xors = sum(np.count_nonzero(m, axis=1) for m in (self.step2_mask, self.step4_mask, self.step7_mask))
        return rotations + xors + 2 + self.step6_s.astype(np.int64)


def sample_procedure_batch(n: int, count: int, rng: np.random.Generator) -> ProcedureBatch:
    """Draw count instances; draws happen step by step in a fixed order"""
    _check_procedure_size(n)
    if count < 1:
        raise DomainError(f"Batch size must be positive, got {count}")
    return ProcedureBatch(
        n=n,
        step1_r=rng.integers(0, 3, size=(count, n), dtype=np.int8),
        step2_mask=rng.random((count, n - 1)) < XOR_PROBABILITY,
        step3_r=rng.integers(0, 3, size=(count, n - 1), dtype=np.int8),
        step4_mask=rng.random((count, n - 1)) < XOR_PROBABILITY,
        step5_r=rng.integers(0, 3, size=(count, n - 1), dtype=np.int8),
        step6_s=rng.random(count) < PHASE_PROBABILITY,
        step7_mask=rng.random((count, n - 1)) < XOR_PROBABILITY,
    )


def sample_basic_procedure(n: int, rng: np.random.Generator) -> BasicProcedureInstance:
    return sample_procedure_batch(n, 1, rng).instance(0)


def gate_count(instance: BasicProcedureInstance) -> int:
    return len(instance.gates())


def _check_label(instance: BasicProcedureInstance, label: PauliLabel):
    if label.n != instance.n:
        raise DimensionError(f"Instance on {instance.n} qubits cannot act on a {label.n}-qubit label")


def conjugate_label(instance: BasicProcedureInstance, label: PauliLabel) -> PauliLabel:
    """Label of U P U^dagger for the Clifford U realized by the instance"""
    _check_label(instance, label)
    x, z = label.x, label.z
    for gate in instance.gates():
        x, z, _ = apply_gate_bits(gate, x, z)
    return PauliLabel(label.n, x, z)


def trace_procedure(instance: BasicProcedureInstance, label: PauliLabel) -> List[PauliLabel]:
    """Label after each of the seven steps"""
    _check_label(instance, label)
    x, z = label.x, label.z
    trace = []
    for step in instance.steps():
        for gate in step:
            x, z, _ = apply_gate_bits(gate, x, z)
        trace.append(PauliLabel(label.n, x, z))
    return trace


class ExecutionClass(NamedTuple):
    good: bool
    very_good: bool


def classify_execution(instance: BasicProcedureInstance, label: PauliLabel) -> ExecutionClass:
    """good: qubit 1 carries X or Y after step 2; very good: also some other
    qubit is non-identity after step 6"""
    trace = trace_procedure(instance, label)
    good = bool(trace[1].x & 1)
    others = (trace[5].x | trace[5].z) >> 1
    return ExecutionClass(good, good and others != 0)


def estimate_very_good_rate(n: int, start: PauliLabel, samples: int, rng: np.random.Generator) -> float:
    """Fraction of sampled executions on start that are very good"""
    if start.n != n:
        raise DimensionError(f"Start label has {start.n} qubits, expected {n}")
    batch = sample_procedure_batch(n, samples, rng)
    hits = sum(classify_execution(batch.instance(i), start).very_good for i in range(samples))
    return hits / samples


def very_good_probability(n: int) -> float:
    """Per-repetition lower bound on the very-good probability"""
    if n < 1:
        raise DomainError(f"Qubit count must be positive, got {n}")
    return 0.5 * (1.0 - 0.25 ** (n - 1))


def instance_permutation(instance: BasicProcedureInstance) -> np.ndarray:
    """Image index of every label index (n small enough to list all labels)"""
    if instance.n > CHAIN_MAX_QUBITS:
        raise CapacityError(f"Label tables are limited to {CHAIN_MAX_QUBITS} qubits, got {instance.n}")
    xs, zs = label_bit_arrays(instance.n)
    for gate in instance.gates():
        xs, zs, _ = apply_gate_bits(gate, xs, zs)
    return (xs << instance.n) | zs


# --- label batches as boolean bit matrices, column k-1 is qubit k ---

def label_to_bits(label: PauliLabel, count: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """(count, n) bit matrices holding count copies of label"""
    x = np.array([(label.x >> k) & 1 for k in range(label.n)], dtype=bool)
    z = np.array([(label.z >> k) & 1 for k in range(label.n)], dtype=bool)
    return np.tile(x, (count, 1)), np.tile(z, (count, 1))


def bits_to_label(x_row: np.ndarray, z_row: np.ndarray) -> PauliLabel:
    x = sum(1 << k for k in np.flatnonzero(x_row))
    z = sum(1 << k for k in np.flatnonzero(z_row))
    return PauliLabel(len(x_row), int(x), int(z))


def bits_to_indices(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    if n > CHAIN_MAX_QUBITS:
        raise CapacityError(f"Label indices are limited to {CHAIN_MAX_QUBITS} qubits, got {n}")
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    return ((x.astype(np.int64) @ weights) << n) | (z.astype(np.int64) @ weights)


def _rotate_bits(x, z, exponents):
    """R: (x, z) -> (z, x ^ z); R^2: (x, z) -> (x ^ z, x)"""
    once, twice = exponents == 1, exponents == 2
    new_x = np.where(once, z, np.where(twice, x ^ z, x))
    new_z = np.where(once, x ^ z, np.where(twice, x, z))
    return new_x, new_z


def _xor_bits(x, z, mask):
    """CNOT(k -> 1) for every set mask column; these share a target so they commute"""
    x, z = x.copy(), z.copy()
    x[:, 0] ^= np.count_nonzero(mask & x[:, 1:], axis=1) % 2 == 1
    z[:, 1:] ^= mask & z[:, :1]
    return x, z


def _hadamard_first(x, z):
    x, z = x.copy(), z.copy()
    x[:, 0], z[:, 0] = z[:, 0].copy(), x[:, 0].copy()
    return x, z


def conjugate_batch(batch: ProcedureBatch, x: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Row i of (x, z) conjugated by instance i"""
    if x.shape != (batch.count, batch.n) or z.shape != x.shape:
        raise DimensionError(f"Expected ({batch.count}, {batch.n}) bit matrices, got {x.shape} and {z.shape}")
    x, z = _rotate_bits(x, z, batch.step1_r)
    x, z = _xor_bits(x, z, batch.step2_mask)
    for rotations, mask in ((batch.step3_r, batch.step4_mask), (batch.step5_r, None)):
        x, z = _hadamard_first(x, z)
        x[:, 1:], z[:, 1:] = _rotate_bits(x[:, 1:], z[:, 1:], rotations)
        if mask is not None:
            x, z = _xor_bits(x, z, mask)
    z = z.copy()
    z[:, 0] ^= batch.step6_s & x[:, 0]
    return _xor_bits(x, z, batch.step7_mask)


def sample_trajectories(
    n: int, repetitions: int, start: PauliLabel, count: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """count independent trajectories from start, fresh instances each repetition"""
    if start.n != n:
        raise DimensionError(f"Start label has {start.n} qubits, expected {n}")
    x, z = label_to_bits(start, count)
    for _ in range(repetitions):
        x, z = conjugate_batch(sample_procedure_batch(n, count, rng), x, z)
    return x, z


def sample_trajectory(n: int, repetitions: int, start: PauliLabel, rng: np.random.Generator) -> PauliLabel:
    """Single trajectory; draws match sample_trajectories with count=1"""
    if start.n != n:
        raise DimensionError(f"Start label has {start.n} qubits, expected {n}")
    label = start
    for _ in range(repetitions):
        label = conjugate_label(sample_basic_procedure(n, rng), label)
    return label


def component_counts(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """(n, 4) counts of I, X, Y, Z per qubit over a batch"""
    return np.stack([
        np.count_nonzero(~x & ~z, axis=0),
        np.count_nonzero(x & ~z, axis=0),
        np.count_nonzero(x & z, axis=0),
        np.count_nonzero(~x & z, axis=0),
    ], axis=1)


def uniform_nonidentity_marginal(n: int) -> np.ndarray:
    """Per-qubit I, X, Y, Z probabilities under the uniform non-identity distribution"""
    total = 4 ** n - 1
    other = 4 ** (n - 1) / total
    return np.array([(4 ** (n - 1) - 1) / total, other, other, other])


# --- dense evaluation on (count, D, ...) stacks ---

def _apply_single_dense(matrix: np.ndarray, qubit: int, n: int, stack: np.ndarray) -> np.ndarray:
    shaped = stack.reshape(stack.shape[0], 1 << (qubit - 1), 2, 1 << (n - qubit), -1)
    return np.einsum("ab,ipbqc->ipaqc", matrix, shaped).reshape(stack.shape)


def apply_gate_dense(gate: Gate, n: int, stack: np.ndarray) -> np.ndarray:
    """Left-multiply every (D, ...) slab of a (count, D, ...) stack by the gate"""
    if gate.kind is GateKind.CNOT:
        return stack[:, cnot_permutation(n, *gate.qubits)]
    return _apply_single_dense(single_qubit_matrix(gate.kind), gate.qubits[0], n, stack)


def _apply_where(stack: np.ndarray, mask: np.ndarray, action: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    if not mask.any():
        return stack
    if mask.all():
        return action(stack)
    result = stack.copy()
    result[mask] = action(stack[mask])
    return result


def _check_dense_stack(n: int, count: int, stack: np.ndarray):
    if n > DENSE_MAX_QUBITS:
        raise CapacityError(f"Dense evaluation is limited to {DENSE_MAX_QUBITS} qubits, got {n}")
    if stack.shape[:2] != (count, 1 << n):
        raise DimensionError(f"Expected a ({count}, {1 << n}, ...) stack, got {stack.shape}")


def apply_procedure_dense(batch: ProcedureBatch, stack: np.ndarray) -> np.ndarray:
    """Row i of the stack left-multiplied by the unitary of instance i"""
    n = batch.n
    _check_dense_stack(n, batch.count, stack)

    def rotate(stack, exponents, first_qubit):
        for column in range(exponents.shape[1]):
            for exponent in (1, 2):
                gate = Gate.r_power(first_qubit + column, exponent)
                stack = _apply_where(stack, exponents[:, column] == exponent,
                                     lambda part, g=gate: apply_gate_dense(g, n, part))
        return stack

    def xor(stack, mask):
        for column in range(mask.shape[1]):
            gate = Gate.cnot(column + 2, 1)
            stack = _apply_where(stack, mask[:, column], lambda part, g=gate: apply_gate_dense(g, n, part))
        return stack

    hadamard = Gate.h(1)
    stack = rotate(stack, batch.step1_r, 1)
    stack = xor(stack, batch.step2_mask)
    stack = rotate(apply_gate_dense(hadamard, n, stack), batch.step3_r, 2)
    stack = xor(stack, batch.step4_mask)
    stack = rotate(apply_gate_dense(hadamard, n, stack), batch.step5_r, 2)
    stack = _apply_where(stack, batch.step6_s, lambda part: apply_gate_dense(Gate.s(1), n, part))
    return xor(stack, batch.step7_mask)


def procedure_unitaries(batch: ProcedureBatch) -> np.ndarray:
    """Dense unitary of every instance, stacked (count, D, D)"""
    identity = np.broadcast_to(np.eye(1 << batch.n, dtype=complex), (batch.count, 1 << batch.n, 1 << batch.n))
    return apply_procedure_dense(batch, identity.copy())


def sample_pauli_layer(n: int, count: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform random Pauli labels as (count, n) bit matrices"""
    bits = rng.integers(0, 2, size=(count, 2, n)).astype(bool)
    return bits[:, 0], bits[:, 1]


def apply_pauli_layer_dense(x: np.ndarray, z: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """Left-multiply row i by the Hermitian Pauli of label row i"""
    count, n = x.shape
    _check_dense_stack(n, count, stack)
    for column in range(n):
        qubit = column + 1
        stack = _apply_where(stack, z[:, column], lambda part: _apply_single_dense(_PAULI_Z, qubit, n, part))
        stack = _apply_where(stack, x[:, column], lambda part: _apply_single_dense(_PAULI_X, qubit, n, part))
    # X^x Z^z differs from the Hermitian label by i^{|x & z|}
    phases = PHASE_FACTORS[np.count_nonzero(x & z, axis=1) % 4]
    return stack * phases.reshape((count,) + (1,) * (stack.ndim - 1))


def sample_design_unitary(n: int, repetitions: int, rng: np.random.Generator) -> Circuit:
    """Random Pauli layer followed by `repetitions` sampled procedure instances"""
    _check_procedure_size(n)
    if repetitions < 0:
        raise DomainError(f"Repetitions must be non-negative, got {repetitions}")
    x, z = sample_pauli_layer(n, 1, rng)
    gates: List[Gate] = []
    for _ in range(repetitions):
        gates.extend(sample_basic_procedure(n, rng).gates())
    return Circuit(n, tuple(gates), bits_to_label(x[0], z[0]))


def _apply_design(n: int, repetitions: int, rng: np.random.Generator, stack: np.ndarray) -> np.ndarray:
    _check_procedure_size(n)
    if repetitions < 0:
        raise DomainError(f"Repetitions must be non-negative, got {repetitions}")
    count = stack.shape[0]
    x, z = sample_pauli_layer(n, count, rng)
    stack = apply_pauli_layer_dense(x, z, stack)
    for _ in range(repetitions):
        stack = apply_procedure_dense(sample_procedure_batch(n, count, rng), stack)
    return stack


def design_unitaries(n: int, repetitions: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """count design unitaries (count, D, D); draws match sample_design_unitary with count=1"""
    dim = 1 << n
    identity = np.broadcast_to(np.eye(dim, dtype=complex), (count, dim, dim)).copy()
    return _apply_design(n, repetitions, rng, identity)


def design_states(n: int, repetitions: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """U|0> for count design unitaries, stacked (count, D)"""
    states = np.zeros((count, 1 << n, 1), dtype=complex)
    states[:, 0, 0] = 1.0
    return _apply_design(n, repetitions, rng, states)[..., 0]


# --- exact Markov chain on label distributions ---

@dataclass(frozen=True, eq=False)
class ChainState:
    n: int
    dist: PauliDistribution

    def __post_init__(self):
        if self.dist.n != self.n:
            raise DimensionError(f"Distribution has {self.dist.n} qubits, chain has {self.n}")
        if self.n > CHAIN_MAX_QUBITS:
            raise CapacityError(f"The exact chain is limited to {CHAIN_MAX_QUBITS} qubits, got {self.n}")
        self.dist.validate()


class _ChainMaps(NamedTuple):
    rotations: Tuple[Tuple[np.ndarray, np.ndarray], ...]
    xors: Tuple[np.ndarray, ...]
    hadamard: np.ndarray
    phase: np.ndarray


@lru_cache(maxsize=None)
def _chain_maps(n: int) -> _ChainMaps:
    xs, zs = label_bit_arrays(n)

    def permutation(gate: Gate) -> np.ndarray:
        x, z, _ = apply_gate_bits(gate, xs, zs)
        return (x << n) | z

    rotations = tuple(
        (permutation(Gate.r_power(q, 1)), permutation(Gate.r_power(q, 2))) for q in range(1, n + 1)
    )
    xors = tuple(permutation(Gate.cnot(k, 1)) for k in range(2, n + 1))
    return _ChainMaps(rotations, xors, permutation(Gate.h(1)), permutation(Gate.s(1)))


def _push(weights: np.ndarray, permutation: np.ndarray) -> np.ndarray:
    moved = np.empty_like(weights)
    moved[permutation] = weights
    return moved


def _average_rotations(weights, rotations):
    for once, twice in rotations:
        weights = (weights + _push(weights, once) + _push(weights, twice)) / 3
    return weights


def _average_xors(weights, xors):
    for permutation in xors:
        weights = (1 - XOR_PROBABILITY) * weights + XOR_PROBABILITY * _push(weights, permutation)
    return weights


def _one_repetition(weights: np.ndarray, maps: _ChainMaps) -> np.ndarray:
    weights = _average_rotations(weights, maps.rotations)
    weights = _average_xors(weights, maps.xors)
    weights = _average_rotations(_push(weights, maps.hadamard), maps.rotations[1:])
    weights = _average_xors(weights, maps.xors)
    weights = _average_rotations(_push(weights, maps.hadamard), maps.rotations[1:])
    weights = (1 - PHASE_PROBABILITY) * weights + PHASE_PROBABILITY * _push(weights, maps.phase)
    return _average_xors(weights, maps.xors)


def evolve_exact(state: ChainState, repetitions: int) -> ChainState:
    """Distribution of the label after `repetitions` more repetitions, averaged over all randomness"""
    if repetitions < 0:
        raise DomainError(f"Repetitions must be non-negative, got {repetitions}")
    _check_procedure_size(state.n)
    maps = _chain_maps(state.n)
    weights = np.array(state.dist.weights)
    for _ in range(repetitions):
        weights = _one_repetition(weights, maps)
    return ChainState(state.n, PauliDistribution(state.n, weights))


def tvd_to_uniform_nonidentity(distribution: PauliDistribution) -> float:
    """Total variation distance of the non-identity conditional from uniform"""
    rest = 1.0 - distribution.identity_weight
    if rest <= EXACT_TOLERANCE:
        return 0.0
    conditional = distribution.weights[1:] / rest
    distance = 0.5 * np.abs(conditional - 1.0 / (4 ** distribution.n - 1)).sum()
    return float(min(max(distance, 0.0), 1.0))


# --- convergence reports ---

@dataclass(frozen=True)
class ConvergenceReport:
    """Per-repetition statistics; entry r-1 describes the state after r repetitions

    tvd_per_rep holds None where the label space is too large to histogram.
    gate_counts[r-1] is the total number of gates realized in repetition r
    over `samples` sampled instances.
    """
    n: int
    repetitions: int
    mode: str
    tvd_per_rep: Tuple[Optional[float], ...]
    identity_weight: Tuple[float, ...]
    very_good_prob: float
    gate_counts: Tuple[int, ...]
    samples: int
    envelope_constant: Optional[float] = None
    decay_rate: Optional[float] = None
    marginal_deviation: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        for value in self.tvd_per_rep:
            if value is not None and not 0.0 <= value <= 1.0:
                raise DomainError(f"Total variation distance {value} outside [0, 1]")

    def gate_count_means(self) -> Tuple[float, ...]:
        return tuple(total / self.samples for total in self.gate_counts)

    def rows(self) -> List[dict]:
        """One CSV row per repetition; the fitted constants repeat on every row"""
        rows = []
        means = self.gate_count_means()
        for r in range(self.repetitions):
            row = {
                "n": self.n,
                "repetition": r + 1,
                "tvd": self.tvd_per_rep[r],
                "identity_weight": self.identity_weight[r],
                "gate_count_mean": means[r],
                "envelope_constant": self.envelope_constant,
                "decay_rate": self.decay_rate,
            }
            if self.marginal_deviation is not None:
                row["marginal_deviation"] = self.marginal_deviation[r]
            rows.append(row)
        return rows


def fit_envelope_constant(tvds: Sequence[float], n: int) -> float:
    """Smallest c >= 0 with tvd(r) <= (1 - very_good_probability(n))^r + c / 4^n"""
    decay = 1.0 - very_good_probability(n)
    excess = max((tvd - decay ** r for r, tvd in enumerate(tvds, 1)), default=0.0)
    return max(0.0, excess) * 4 ** n


def fit_decay_rate(tvds: Sequence[Optional[float]], floor: float = 1e-12) -> Optional[float]:
    """Exponential decay rate of tvd per repetition, from a fit of log(tvd) against r"""
    points = [(r, np.log(t)) for r, t in enumerate(tvds, 1) if t is not None and t > floor]
    if len(points) < 2:
        return None
    repetitions, logs = zip(*points)
    return float(-linregress(repetitions, logs).slope)


def _check_start(n: int, start: PauliLabel):
    if start.n != n:
        raise DimensionError(f"Start label has {start.n} qubits, expected {n}")


def convergence_report_exact(
    n: int, repetitions: int, start: PauliLabel, rng: np.random.Generator, gate_samples: int = 1000
) -> ConvergenceReport:
    """Exact-chain tvd per repetition; gate counts come from gate_samples sampled instances"""
    _check_start(n, start)
    state = ChainState(n, PauliDistribution.point_mass(start))
    tvds, identity = [], []
    for r in range(repetitions):
        state = evolve_exact(state, 1)
        tvds.append(tvd_to_uniform_nonidentity(state.dist))
        identity.append(state.dist.identity_weight)
    gate_counts = tuple(
        int(sample_procedure_batch(n, gate_samples, rng).gate_counts().sum()) for _ in range(repetitions)
    )
    logger.info(f"Exact chain on {n} qubits from {start}: tvd after {repetitions} repetitions "
                f"{tvds[-1] if tvds else 0.0:.3e}")
    return ConvergenceReport(
        n=n,
        repetitions=repetitions,
        mode="exact",
        tvd_per_rep=tuple(tvds),
        identity_weight=tuple(identity),
        very_good_prob=very_good_probability(n),
        gate_counts=gate_counts,
        samples=gate_samples,
        envelope_constant=fit_envelope_constant(tvds, n),
        decay_rate=fit_decay_rate(tvds),
    )


class TrajectoryCounts(NamedTuple):
    """Per-repetition tallies of one chunk of trajectories"""
    components: np.ndarray
    histograms: Optional[np.ndarray]
    identity: np.ndarray
    gates: np.ndarray


def trajectory_counts(
    n: int, repetitions: int, start: PauliLabel, count: int, seed: int, chunk: int
) -> TrajectoryCounts:
    """Run one seeded chunk of trajectories, tallying after every repetition"""
    rng = stream_rng(seed, "trajectories", chunk)
    with_histograms = n <= CHAIN_MAX_QUBITS
    x, z = label_to_bits(start, count)
    components = np.zeros((repetitions, n, 4), dtype=np.int64)
    histograms = np.zeros((repetitions, 4 ** n), dtype=np.int64) if with_histograms else None
    identity = np.zeros(repetitions, dtype=np.int64)
    gates = np.zeros(repetitions, dtype=np.int64)
    for r in range(repetitions):
        batch = sample_procedure_batch(n, count, rng)
        x, z = conjugate_batch(batch, x, z)
        gates[r] = batch.gate_counts().sum()
        components[r] = component_counts(x, z)
        identity[r] = np.count_nonzero(~(x.any(axis=1) | z.any(axis=1)))
        if with_histograms:
            histograms[r] = np.bincount(bits_to_indices(x, z), minlength=4 ** n)
    return TrajectoryCounts(components, histograms, identity, gates)


def convergence_report_trajectories(
    n: int,
    repetitions: int,
    start: PauliLabel,
    trajectories: int,
    seed: int,
    runner: Optional[BatchRunner] = None,
    chunk: int = 10000,
) -> ConvergenceReport:
    """Sampled convergence statistics at any n; reproducible for a fixed seed and chunk size"""
    _check_procedure_size(n)
    _check_start(n, start)
    runner = runner or BatchRunner()
    tasks = [(n, repetitions, start, size, seed, i) for i, size in enumerate(chunk_sizes(trajectories, chunk))]
    results = runner.run(trajectory_counts, tasks)

    components = sum(result.components for result in results)
    identity = sum(result.identity for result in results)
    gates = sum(result.gates for result in results)
    expected = uniform_nonidentity_marginal(n)
    deviation = np.max(np.abs(components / trajectories - expected), axis=(1, 2))

    if n <= CHAIN_MAX_QUBITS:
        histograms = sum(result.histograms for result in results)
        tvds = tuple(
            tvd_to_uniform_nonidentity(PauliDistribution(n, histogram / trajectories)) for histogram in histograms
        )
    else:
        tvds = (None,) * repetitions

    logger.info(f"Sampled {trajectories} trajectories on {n} qubits over {repetitions} repetitions")
    measured = [t for t in tvds if t is not None]
    return ConvergenceReport(
        n=n,
        repetitions=repetitions,
        mode="trajectories",
        tvd_per_rep=tvds,
        identity_weight=tuple(float(v) / trajectories for v in identity),
        very_good_prob=very_good_probability(n),
        gate_counts=tuple(int(v) for v in gates),
        samples=trajectories,
        envelope_constant=fit_envelope_constant(measured, n) if measured else None,
        decay_rate=fit_decay_rate(tvds),
        marginal_deviation=tuple(float(v) for v in deviation),
    )
