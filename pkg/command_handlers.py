"""
Command handlers for the design toolkit command line
"""

import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional

from approx_design import (
    convergence_report_exact,
    convergence_report_trajectories,
    design_unitaries,
    sample_design_unitary,
)
from batch_runner import BatchRunner
from channels import KrausChannel, pauli_channel
from config import BRUTE_FORCE_MAX_QUBITS, ENUMERATION_MAX_QUBITS, Config
from data_manager import PAULI_CHANNEL_SUFFIXES, DataManager, render_csv, render_json
from dense_oracle import (
    clifford_unitaries,
    ensemble_first_moment,
    ensemble_twirl_map,
    entanglement_fidelity,
    exact_average_fidelity,
    haar_channel_twirl,
    haar_first_moment,
    haar_twirl_map,
    max_deviation,
    random_operator,
)
from errors import CapacityError, DomainError
from fidelity_protocol import (
    ApproximateDesignSampler,
    ExactCliffordSampler,
    NoiseScenario,
    convert_fidelities,
    estimate_average_fidelity,
    required_shots,
    unpad_average_fidelity,
)
from pauli_algebra import PauliLabel, all_labels
from twirl_engine import (
    clifford_uniformize,
    coset_twirl_distribution,
    depolarizing_parameter,
    pauli_twirl_channel,
    pauli_channel_fidelities,
)
from utils import format_distribution, log_performance, stream_rng

logger = logging.getLogger(__name__)

SPARSE_THRESHOLD = 1e-15
APPROX_CHECK_MAX_QUBITS = 3


@dataclass
class RunConfig:
    subcommand: str
    n: Optional[int] = None
    seed: int = 0
    design: str = "exact"
    shots: int = 10000
    repetitions: int = 10
    trials: int = 20
    samples: int = 20000
    trajectories: int = 10000
    channel: Optional[str] = None
    start: Optional[str] = None
    out: Optional[str] = None
    output_format: Optional[str] = None
    tolerance: Optional[float] = None
    confidence_level: float = 0.99


@dataclass
class CommandReport:
    """Record for JSON output, optional rows for CSV, optional raw text payload"""
    record: Dict[str, Any]
    rows: Optional[List[Dict[str, Any]]] = None
    text: Optional[str] = None
    default_format: str = "json"
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def render(self, output_format: Optional[str] = None) -> str:
        output_format = output_format or self.default_format
        if output_format == "csv" and self.rows is not None:
            return render_csv(self.rows)
        if output_format == "text" and self.text is not None:
            return self.text
        record = dict(self.record)
        record["status"] = "pass" if self.passed else "fail"
        if self.failures:
            record["failures"] = list(self.failures)
        return render_json(record)


class CommandHandlers:
    def __init__(self, config: Config, data_manager: Optional[DataManager] = None,
                 runner: Optional[BatchRunner] = None):
        self.config = config
        self.data_manager = data_manager or DataManager(config.output_dir)
        self.runner = runner or BatchRunner(config.workers)

    def handle(self, run: RunConfig) -> CommandReport:
        """Dispatch a parsed run to its command"""
        commands: Dict[str, Callable[[RunConfig], CommandReport]] = {
            "design-check": self.cmd_design_check,
            "twirl": self.cmd_twirl,
            "converge": self.cmd_converge,
            "fidelity": self.cmd_fidelity,
            "sample-circuit": self.cmd_sample_circuit,
        }
        if run.subcommand not in commands:
            raise DomainError(f"Unknown command {run.subcommand}")
        handler = commands[run.subcommand]
        start_time = datetime.now()
        report = handler(run)
        log_performance(handler.__name__, start_time, datetime.now())
        return report

    def _require_n(self, run: RunConfig) -> int:
        if run.n is None or run.n < 1:
            raise DomainError(f"{run.subcommand} needs a positive --n")
        return run.n

    def _load_channel(self, run: RunConfig) -> KrausChannel:
        if not run.channel:
            raise DomainError(f"{run.subcommand} needs --channel")
        return self.data_manager.load_channel(run.channel)

    def cmd_design_check(self, run: RunConfig) -> CommandReport:
        """Handle design-check command"""
        n = self._require_n(run)
        if run.design == "exact":
            if n > ENUMERATION_MAX_QUBITS:
                raise CapacityError(f"Exact design checks enumerate the Clifford group and support n <= {ENUMERATION_MAX_QUBITS}")
            unitaries = clifford_unitaries(n)
            tolerance = self.config.design_check_tolerance if run.tolerance is None else run.tolerance
        elif run.design == "approx":
            if n > APPROX_CHECK_MAX_QUBITS:
                raise CapacityError(f"Approximate design checks support n <= {APPROX_CHECK_MAX_QUBITS}")
            unitaries = design_unitaries(n, run.repetitions, run.samples, stream_rng(run.seed, "design"))
            # operators have unit Frobenius norm, so this is a per-entry 5 sigma bound
            tolerance = 5 / math.sqrt(run.samples) if run.tolerance is None else run.tolerance
        else:
            raise DomainError(f"design-check supports --exact or --approx, not {run.design}")

        rows = []
        for trial in range(run.trials):
            rng = stream_rng(run.seed, "operators", trial)
            dim = 1 << n
            a, b, x = (random_operator(dim, rng) for _ in range(3))
            deviation = max_deviation(ensemble_twirl_map(unitaries, a, b, x), haar_twirl_map(a, b, x))
            first = max_deviation(ensemble_first_moment(unitaries, x), haar_first_moment(x))
            rows.append({"trial": trial, "deviation": deviation, "first_moment_deviation": first})

        worst = max((row["deviation"] for row in rows), default=0.0)
        worst_first = max((row["first_moment_deviation"] for row in rows), default=0.0)
        failures = []
        if worst > tolerance:
            failures.append(f"second-moment deviation {worst:.3e} exceeds tolerance {tolerance:.3e}")
        if worst_first > tolerance:
            failures.append(f"first-moment deviation {worst_first:.3e} exceeds tolerance {tolerance:.3e}")

        logger.info(f"Design check ({run.design}, n={n}) over {run.trials} trials: max deviation {worst:.3e}")
        record = {
            "command": "design-check",
            "design": run.design,
            "n": n,
            "seed": run.seed,
            "trials": run.trials,
            "ensemble_size": len(unitaries),
            "repetitions": run.repetitions if run.design == "approx" else None,
            "max_deviation": worst,
            "first_moment_deviation": worst_first,
            "tolerance": tolerance,
        }
        return CommandReport(record, rows, failures=failures)

    def cmd_twirl(self, run: RunConfig) -> CommandReport:
        """Handle twirl command"""
        tolerance = self.config.exact_tolerance if run.tolerance is None else run.tolerance
        name = _channel_id(run.channel)
        if run.channel and run.channel.endswith(PAULI_CHANNEL_SUFFIXES):
            # a Pauli channel is its own Pauli twirl
            twirled = self.data_manager.load_pauli_channel(run.channel)
            if twirled.n > self.config.chain_max_qubits:
                raise CapacityError(
                    f"Pauli channel twirls support n <= {self.config.chain_max_qubits}, got {twirled.n}"
                )
            average_fidelity, f_e = pauli_channel_fidelities(twirled)
            channel = None
            if twirled.n <= BRUTE_FORCE_MAX_QUBITS:
                channel = pauli_channel(twirled.n, twirled.weights, name=name)
        else:
            channel = self._load_channel(run)
            if channel.n > BRUTE_FORCE_MAX_QUBITS:
                raise CapacityError(f"Channel twirls support n <= {BRUTE_FORCE_MAX_QUBITS}, got {channel.n}")
            name = channel.name
            twirled = pauli_twirl_channel(channel)
            average_fidelity, f_e = exact_average_fidelity(channel), entanglement_fidelity(channel)
        n = twirled.n

        uniformized = clifford_uniformize(twirled)
        p = depolarizing_parameter(twirled)
        # the dense Haar twirl is only cross-checked where the Kraus form is small
        haar_p = haar_channel_twirl(channel).p if channel is not None else None

        failures = []
        if haar_p is not None and abs(p - haar_p) > tolerance:
            failures.append(f"Clifford and Haar depolarizing parameters differ by {abs(p - haar_p):.3e}")
        coset_deviation = None
        if n <= ENUMERATION_MAX_QUBITS:
            coset = coset_twirl_distribution(twirled)
            coset_deviation = max_deviation(coset.weights, uniformized.weights)
            if coset_deviation > tolerance:
                failures.append(f"coset twirl deviates from uniformization by {coset_deviation:.3e}")

        rows = [
            {"label": str(label), "pauli_twirl": twirled.weights[label.index],
             "uniformized": uniformized.weights[label.index]}
            for label in all_labels(n)
        ]
        logger.info(f"Twirled {name}: p = {p:.12g}")
        record = {
            "command": "twirl",
            "channel_id": _channel_id(run.channel),
            "n": n,
            "pauli_twirl": twirled.to_sparse(SPARSE_THRESHOLD),
            "uniformized": uniformized.to_sparse(SPARSE_THRESHOLD),
            "p": p,
            "haar_p": haar_p,
            "coset_deviation": coset_deviation,
            "average_fidelity": average_fidelity,
            "entanglement_fidelity": f_e,
        }
        text = (format_distribution(record["pauli_twirl"], f"Pauli twirl of {name}")
                + format_distribution(record["uniformized"], f"Clifford twirl of {name} (p = {p:.12g})"))
        return CommandReport(record, rows, text=text, failures=failures)

    def cmd_converge(self, run: RunConfig) -> CommandReport:
        """Handle converge command"""
        n = self._require_n(run)
        start = PauliLabel.from_string(run.start) if run.start else PauliLabel.single(n, 1, "X")
        if run.design == "exact":
            report = convergence_report_exact(n, run.repetitions, start, stream_rng(run.seed, "gate-counts"))
        elif run.design == "traj":
            report = convergence_report_trajectories(
                n, run.repetitions, start, run.trajectories, run.seed, self.runner
            )
        else:
            raise DomainError(f"converge supports --exact or --traj, not {run.design}")

        final_tvd = report.tvd_per_rep[-1] if report.tvd_per_rep else None
        failures = []
        if run.tolerance is not None:
            if final_tvd is not None and final_tvd > run.tolerance:
                failures.append(f"final tvd {final_tvd:.3e} exceeds tolerance {run.tolerance:.3e}")
            if final_tvd is None and report.marginal_deviation and report.marginal_deviation[-1] > run.tolerance:
                failures.append(
                    f"final marginal deviation {report.marginal_deviation[-1]:.3e} exceeds tolerance {run.tolerance:.3e}"
                )

        record = {
            "command": "converge",
            "mode": report.mode,
            "n": n,
            "start": str(start),
            "repetitions": run.repetitions,
            "seed": run.seed,
            "samples": report.samples,
            "very_good_probability": report.very_good_prob,
            "envelope_constant": report.envelope_constant,
            "decay_rate": report.decay_rate,
            "final_tvd": final_tvd,
            "tvd_per_rep": list(report.tvd_per_rep),
            "gate_count_mean": list(report.gate_count_means()),
            "marginal_deviation": list(report.marginal_deviation) if report.marginal_deviation else None,
        }
        return CommandReport(record, report.rows(), default_format="csv", failures=failures)

    def cmd_fidelity(self, run: RunConfig) -> CommandReport:
        """Handle fidelity command"""
        channel = self._load_channel(run)
        dim = channel.dimension
        if run.design == "exact":
            sampler = ExactCliffordSampler(channel.n)
        elif run.design == "approx":
            sampler = ApproximateDesignSampler(max(channel.n, 2), run.repetitions)
        else:
            raise DomainError(f"fidelity supports --exact or --approx, not {run.design}")

        # the random procedure needs two qubits; a one-qubit channel runs with an idle partner
        scenario = NoiseScenario(channel.padded(sampler.n) if sampler.n > channel.n else channel)
        estimate = estimate_average_fidelity(
            scenario, run.shots, sampler, run.seed, run.confidence_level, self.runner
        )
        mean, radius = estimate.mean, estimate.confidence_radius
        if sampler.n > channel.n:
            mean, scale = unpad_average_fidelity(mean, 2 ** sampler.n, dim)
            radius *= scale
            logger.info(f"Mapped padded mean {estimate.mean:.6f} back to {mean:.6f} on {channel.n} qubit(s)")
        exact_value = exact_average_fidelity(channel)
        # sampling noise can land the mean just below the physical floor 1/(D+1)
        f_e, f_g = convert_fidelities(max(mean, 1 / (dim + 1)), dim)
        exact_f_e, exact_f_g = convert_fidelities(exact_value, dim)

        failures = []
        if run.tolerance is not None and abs(mean - exact_value) > run.tolerance:
            failures.append(f"mean {mean:.6f} differs from exact {exact_value:.6f} by more than {run.tolerance}")

        record = {
            "command": "fidelity",
            "n": channel.n,
            "channel_id": _channel_id(run.channel),
            "design": sampler.name,
            "simulated_n": sampler.n,
            "repetitions": sampler.repetitions,
            "shots": estimate.shots,
            "seed": run.seed,
            "mean": mean,
            "confidence_radius": radius,
            "confidence_level": estimate.confidence_level,
            "exact_value": exact_value,
            "entanglement_fidelity": f_e,
            "gate_fidelity": f_g,
            "exact_entanglement_fidelity": exact_f_e,
            "exact_gate_fidelity": exact_f_g,
            "shots_for_one_percent": required_shots(0.01, estimate.confidence_level),
        }
        return CommandReport(record, [record], failures=failures)

    def cmd_sample_circuit(self, run: RunConfig) -> CommandReport:
        """Handle sample-circuit command"""
        n = self._require_n(run)
        circuit = sample_design_unitary(n, run.repetitions, stream_rng(run.seed, "circuit"))
        logger.info(f"Sampled a {circuit.gate_count()}-gate design circuit on {n} qubits")
        record = {
            "command": "sample-circuit",
            "n": n,
            "repetitions": run.repetitions,
            "seed": run.seed,
            "gate_count": circuit.gate_count(),
            "pauli_gate_count": circuit.pauli_gate_count,
            "circuit": circuit.to_text().splitlines(),
        }
        return CommandReport(record, text=circuit.to_text(), default_format="text")


def _channel_id(path: Optional[str]) -> Optional[str]:
    if path is None:
        return None
    return os.path.splitext(os.path.basename(path))[0]
