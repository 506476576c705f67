"""
Randomized average-fidelity estimation

Each experiment draws a design unitary U, prepares U|0>, sends it through the
noise channel, undoes U and checks whether the register is back in |0>. The
success frequency estimates the Haar-averaged fidelity, and the number of
experiments needed for a given precision does not depend on the qubit count.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from approx_design import design_states, design_unitaries
from batch_runner import BatchRunner
from channels import KrausChannel
from config import ENUMERATION_MAX_QUBITS, EXACT_TOLERANCE, PROTOCOL_MAX_QUBITS, UNITARITY_TOLERANCE
from dense_oracle import clifford_unitaries, exact_average_fidelity, validate_unitaries
from errors import CapacityError, DimensionError, DomainError, ValidationError
from utils import chunk_sizes, stream_rng

logger = logging.getLogger(__name__)

DEFAULT_CONFIDENCE_LEVEL = 0.99


def _check_level(level: float):
    if not 0 < level < 1:
        raise DomainError(f"Confidence level must lie in (0, 1), got {level}")


def hoeffding_radius(shots: int, level: float) -> float:
    """Two-sided Hoeffding half-width for the mean of `shots` bits"""
    _check_level(level)
    if shots < 1:
        raise DomainError(f"Shot count must be positive, got {shots}")
    return math.sqrt(math.log(2 / (1 - level)) / (2 * shots))


def required_shots(precision: float, level: float) -> int:
    """Smallest N with 2 exp(-2 N precision^2) <= 1 - level"""
    _check_level(level)
    if not 0 < precision < 1:
        raise DomainError(f"Precision must lie in (0, 1), got {precision}")
    return math.ceil(math.log(2 / (1 - level)) / (2 * precision ** 2))


def convert_fidelities(f_avg: float, dim: int) -> Tuple[float, float]:
    """(F_e, F_g) from the average fidelity; both equal (f_avg (D+1) - 1) / D"""
    if dim < 2:
        raise DomainError(f"Dimension must be at least 2, got {dim}")
    lower = 1 / (dim + 1)
    if not lower - EXACT_TOLERANCE <= f_avg <= 1 + EXACT_TOLERANCE:
        raise DomainError(f"Average fidelity {f_avg} outside [{lower:.6g}, 1] for D = {dim}")
    fidelity = (f_avg * (dim + 1) - 1) / dim
    return fidelity, fidelity


def unpad_average_fidelity(f_avg: float, padded_dim: int, dim: int) -> Tuple[float, float]:
    """
    Average fidelity of a channel from that of its identity-padded extension.

    Padding leaves F_e unchanged, so the value goes through F_e at the padded
    dimension and back at the original one. Returns the converted value and
    the factor that maps a confidence radius across.
    """
    if dim < 1 or padded_dim < dim:
        raise DomainError(f"Cannot unpad from D = {padded_dim} to D = {dim}")
    f_e = max((f_avg * (padded_dim + 1) - 1) / padded_dim, 0.0)
    scale = (padded_dim + 1) / padded_dim * dim / (dim + 1)
    return (dim * f_e + 1) / (dim + 1), scale


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    shots: int
    confidence_radius: float
    confidence_level: float

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise ValidationError(f"Estimated fidelity {self.mean} outside [0, 1]")
        expected = hoeffding_radius(self.shots, self.confidence_level)
        if abs(self.confidence_radius - expected) > EXACT_TOLERANCE:
            raise ValidationError(f"Radius {self.confidence_radius} does not match the Hoeffding bound {expected}")

    @classmethod
    def from_successes(cls, successes: int, shots: int, level: float) -> "FidelityEstimate":
        return cls(successes / shots, shots, hoeffding_radius(shots, level), level)

    def interval(self) -> Tuple[float, float]:
        return max(0.0, self.mean - self.confidence_radius), min(1.0, self.mean + self.confidence_radius)

    def contains(self, value: float) -> bool:
        low, high = self.interval()
        return low <= value <= high


@dataclass(frozen=True, eq=False)
class NoiseScenario:
    """Channel under test; with a target gate U_g the channel is E and the
    scenario applies rho -> U_g^dag E(U_g rho U_g^dag) U_g"""
    channel: KrausChannel
    target_gate: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.target_gate is None:
            return
        gate = np.array(self.target_gate, dtype=complex)
        if gate.shape != (self.channel.dimension, self.channel.dimension):
            raise DimensionError(f"Target gate shape {gate.shape} does not match channel dimension {self.channel.dimension}")
        validate_unitaries(gate[None], UNITARITY_TOLERANCE)
        gate.setflags(write=False)
        object.__setattr__(self, "target_gate", gate)

    @property
    def n(self) -> int:
        return self.channel.n

    @property
    def dimension(self) -> int:
        return self.channel.dimension

    def composed(self) -> KrausChannel:
        if self.target_gate is None:
            return self.channel
        return self.channel.conjugated(self.target_gate, name=f"{self.channel.name}_on_gate")

    def exact_average_fidelity(self) -> float:
        return exact_average_fidelity(self.composed())


def survival_probabilities(states: np.ndarray, channel: KrausChannel) -> np.ndarray:
    """<psi| Lambda(|psi><psi|) |psi> = sum_k |<psi|A_k|psi>|^2 for every row psi"""
    operators = np.stack(channel.operators)
    applied = states @ np.swapaxes(operators, -1, -2)
    overlaps = np.sum(np.conj(states)[None] * applied, axis=-1)
    probabilities = np.sum(np.abs(overlaps) ** 2, axis=0)
    # round-off can push a certain survival a hair below 1
    probabilities[probabilities > 1 - EXACT_TOLERANCE] = 1.0
    return np.clip(probabilities, 0.0, 1.0)


class ExactCliffordSampler:
    """Uniform draws from the enumerated Clifford group"""
    name = "exact"
    repetitions = 0

    def __init__(self, n: int):
        if not 1 <= n <= ENUMERATION_MAX_QUBITS:
            raise CapacityError(f"The exact design supports 1..{ENUMERATION_MAX_QUBITS} qubits, got {n}")
        self.n = n
        self.unitaries = clifford_unitaries(n)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.unitaries[rng.integers(len(self.unitaries))]

    def sample_states(self, rng: np.random.Generator, count: int) -> np.ndarray:
        indices = rng.integers(len(self.unitaries), size=count)
        return self.unitaries[indices, :, 0]

    def expected_survival(self, channel: KrausChannel) -> float:
        """Exact mean survival over the whole ensemble, no sampling"""
        return float(survival_probabilities(self.unitaries[:, :, 0], channel).mean())


class ApproximateDesignSampler:
    """Pauli layer followed by `repetitions` sampled procedure repetitions"""
    name = "approx"

    def __init__(self, n: int, repetitions: int):
        if not 2 <= n <= PROTOCOL_MAX_QUBITS:
            raise CapacityError(f"The approximate design protocol supports 2..{PROTOCOL_MAX_QUBITS} qubits, got {n}")
        self.n = n
        self.repetitions = repetitions

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return design_unitaries(self.n, self.repetitions, 1, rng)[0]

    def sample_states(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return design_states(self.n, self.repetitions, count, rng)


def _check_scenario(scenario: NoiseScenario, sampler):
    if not scenario.channel.trace_preserving:
        raise ValidationError(f"Channel {scenario.channel.name} is not trace-preserving")
    if scenario.n > PROTOCOL_MAX_QUBITS:
        raise CapacityError(f"Protocol simulation is limited to {PROTOCOL_MAX_QUBITS} qubits, got {scenario.n}")
    if scenario.n != sampler.n:
        raise DimensionError(f"Scenario acts on {scenario.n} qubits but the design has {sampler.n}")


def run_experiment(scenario: NoiseScenario, design_sampler, rng: np.random.Generator) -> int:
    """One prepare / apply / invert / measure round; 1 on return to |0>"""
    _check_scenario(scenario, design_sampler)
    unitary = design_sampler.sample(rng)
    state = unitary[:, 0]
    rho = np.outer(state, np.conj(state))
    output = scenario.composed().apply(rho)
    # measuring |0> after U^dag is measuring U|0> before it
    probability = float(np.real(np.conj(state) @ output @ state))
    return int(rng.random() < min(max(probability, 0.0), 1.0))


def count_successes(scenario: NoiseScenario, design_sampler, shots: int, seed: int, chunk: int) -> int:
    """Successes in one seeded chunk of experiments"""
    rng = stream_rng(seed, "fidelity", chunk)
    states = design_sampler.sample_states(rng, shots)
    probabilities = survival_probabilities(states, scenario.composed())
    return int(np.count_nonzero(rng.random(shots) < probabilities))


def estimate_average_fidelity(
    scenario: NoiseScenario,
    shots: int,
    design_sampler,
    seed: int,
    confidence_level: float = DEFAULT_CONFIDENCE_LEVEL,
    runner: Optional[BatchRunner] = None,
    chunk: int = 10000,
) -> FidelityEstimate:
    """Success frequency over `shots` experiments with a Hoeffding confidence radius"""
    if shots < 1:
        raise DomainError(f"Shot count must be positive, got {shots}")
    _check_scenario(scenario, design_sampler)
    runner = runner or BatchRunner()
    tasks = [(scenario, design_sampler, size, seed, i) for i, size in enumerate(chunk_sizes(shots, chunk))]
    successes = sum(runner.run(count_successes, tasks))
    estimate = FidelityEstimate.from_successes(successes, shots, confidence_level)
    logger.info(f"{successes}/{shots} experiments on {scenario.channel.name} survived "
                f"({design_sampler.name} design), mean {estimate.mean:.6f} +/- {estimate.confidence_radius:.6f}")
    return estimate
